//! Fenwick (binary indexed) tree over non-negative f64 weights, supporting
//! point updates and rank-by-weight selection in O(log n) — the backbone of
//! the sequential biased-urn sampler.

/// Prefix-sum tree plus a side array of exact current weights; the side
/// array lets updates replace a weight outright, so zeroed entries are
/// exactly zero instead of a residue of accumulated float deltas.
#[derive(Debug, Clone)]
pub(crate) struct FenwickTree {
    tree: Vec<f64>,
    weights: Vec<f64>,
    mask: usize,
}

impl FenwickTree {
    pub(crate) fn from_weights(weights: Vec<f64>) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            debug_assert!(w >= 0.0);
            tree[i + 1] += w;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                let (lo, hi) = (i + 1, parent);
                let carried = tree[lo];
                tree[hi] += carried;
            }
        }
        let mask = n.next_power_of_two();
        Self {
            tree,
            weights,
            mask,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.weights.len()
    }

    #[cfg(test)]
    pub(crate) fn weight(&self, index: usize) -> f64 {
        self.weights[index]
    }

    /// Replaces the weight at `index`.
    pub(crate) fn set(&mut self, index: usize, weight: f64) {
        debug_assert!(weight >= 0.0);
        let delta = weight - self.weights[index];
        self.weights[index] = weight;
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of weights at indices < `end`.
    pub(crate) fn prefix_sum(&self, end: usize) -> f64 {
        let mut acc = 0.0;
        let mut i = end;
        while i > 0 {
            acc += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        acc
    }

    pub(crate) fn total(&self) -> f64 {
        self.prefix_sum(self.len())
    }

    /// Index of the entry whose cumulative weight range contains `target`,
    /// i.e. the smallest i with prefix_sum(i+1) > target.
    ///
    /// Float drift in the internal nodes can steer the descent onto an
    /// entry whose exact weight is zero; the caller-visible contract is
    /// "positive-weight entry", restored by a local scan.
    pub(crate) fn select(&self, target: f64) -> usize {
        let mut idx = 0_usize;
        let mut remaining = target;
        let mut step = self.mask;
        while step > 0 {
            let next = idx + step;
            if next < self.tree.len() && self.tree[next] <= remaining {
                remaining -= self.tree[next];
                idx = next;
            }
            step >>= 1;
        }
        let found = idx.min(self.len() - 1);
        if self.weights[found] > 0.0 {
            return found;
        }
        // drift landed on an exhausted entry: take the nearest live one
        let after = self.weights[found + 1..].iter().position(|&w| w > 0.0);
        if let Some(offset) = after {
            return found + 1 + offset;
        }
        self.weights[..found]
            .iter()
            .rposition(|&w| w > 0.0)
            .expect("select requires at least one positive weight")
    }
}
