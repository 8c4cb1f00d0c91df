//! The soft configuration model: uniform sampling of m multi-edges without
//! replacement from the stub-combination urn, which fixes a degree sequence
//! in expectation.
//!
//! The induced law over adjacency matrices is the multivariate
//! hypergeometric distribution with one color per dyad. Everything here is
//! exact: the PMF and marginals are ratios of binomial coefficients
//! (evaluated in log space), and the sampler realizes the distribution by
//! conditional univariate hypergeometric draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{CombinatorialMatrix, MultiGraph};
use crate::numeric::{log_binomial, KahanSum, QuadratureError};
use crate::rng::stream_seed;

/// Errors shared by the ensemble models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("graph has {got} vertices, the model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("graph directedness does not match the model")]
    DirectednessMismatch,
    #[error("vertex index {index} out of range for {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("cannot draw {m} edges from {capacity} available stub combinations")]
    InfeasibleDraws { m: u64, capacity: u64 },
    #[error("propensity entry at ({i}, {j}) is {value}; entries must be finite and non-negative")]
    InvalidPropensity { i: usize, j: usize, value: f64 },
    #[error("propensity matrix must be symmetric for an undirected model; entries at ({i}, {j}) differ")]
    AsymmetricPropensity { i: usize, j: usize },
    #[error("propensity matrix has {got} entries, the model expects {expected}")]
    PropensityDimensionMismatch { expected: usize, got: usize },
    #[error("dyad ({i}, {j}) is saturated: multiplicity {a} equals its ball count, so its fitted propensity would be infinite")]
    SaturatedDyad { i: usize, j: usize, a: u64 },
    #[error("graph fills every ball with positive propensity yet leaves {m} draws unaccounted; the remaining dyads carry zero propensity and can never be drawn")]
    DegenerateSaturation { m: u64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// The soft configuration model: a combinatorial matrix plus a number of
/// multi-edges to draw uniformly.
#[derive(Debug, Clone)]
pub struct SoftConfigModel {
    xi: CombinatorialMatrix,
    m: u64,
}

impl SoftConfigModel {
    pub fn new(xi: CombinatorialMatrix, m: u64) -> Result<Self, ModelError> {
        if m > xi.total() {
            return Err(ModelError::InfeasibleDraws {
                m,
                capacity: xi.total(),
            });
        }
        Ok(Self { xi, m })
    }

    /// Model induced by a graph: degrees, combinatorial matrix, and m all
    /// computed from `g`.
    pub fn from_graph(g: &MultiGraph) -> Result<Self, ModelError> {
        let xi = crate::graph::combinatorial_matrix(&crate::graph::degree_sequences(g))
            .map_err(|_| ModelError::InfeasibleDraws { m: 0, capacity: 0 })?;
        Self::new(xi, g.edge_count())
    }

    pub fn xi(&self) -> &CombinatorialMatrix {
        &self.xi
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.xi.n()
    }

    pub fn is_directed(&self) -> bool {
        self.xi.is_directed()
    }

    fn check_graph(&self, g: &MultiGraph) -> Result<(), ModelError> {
        if g.n() != self.n() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n(),
                got: g.n(),
            });
        }
        if g.is_directed() != self.is_directed() {
            return Err(ModelError::DirectednessMismatch);
        }
        Ok(())
    }

    fn check_indices(&self, i: usize, j: usize) -> Result<(), ModelError> {
        let n = self.n();
        for index in [i, j] {
            if index >= n {
                return Err(ModelError::IndexOutOfRange { index, n });
            }
        }
        Ok(())
    }

    /// Natural log of Pr(X = g) under the multivariate hypergeometric law:
    /// ln [ ∏_dyads C(balls_d, a_d) / C(M, m) ], where the product runs over
    /// ordered pairs (directed) or the upper triangle with Lemma-2 ball
    /// counts and half-diagonal draws (undirected). −∞ off the support.
    pub fn log_pmf(&self, g: &MultiGraph) -> Result<f64, ModelError> {
        self.check_graph(g)?;
        let mut log_prod = KahanSum::default();
        let mut drawn: u64 = 0;
        for (i, j, balls) in self.xi.dyads() {
            let a = g.dyad_draws(i, j);
            if a > balls {
                return Ok(f64::NEG_INFINITY);
            }
            drawn += a;
            log_prod.add(log_binomial(balls, a as i64));
        }
        if drawn != self.m {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(log_prod.value() - log_binomial(self.xi.total(), self.m as i64))
    }

    /// Pr(X_ij = a): the univariate hypergeometric marginal of one dyad.
    ///
    /// Undirected diagonals require even `a` (odd values have probability
    /// zero, not an error) and count in self-loop units a/2.
    pub fn marginal_pmf(&self, i: usize, j: usize, a: u64) -> Result<f64, ModelError> {
        self.check_indices(i, j)?;
        let diagonal_loop = !self.is_directed() && i == j;
        if diagonal_loop && a % 2 != 0 {
            return Ok(0.0);
        }
        let draws = if diagonal_loop { a / 2 } else { a };
        let balls = self.xi.ball_count(i, j);
        let rest = self.xi.total() - balls;
        let log_p = log_binomial(balls, draws as i64)
            + log_binomial(rest, self.m as i64 - draws as i64)
            - log_binomial(self.xi.total(), self.m as i64);
        Ok(log_p.exp())
    }

    /// E[X]: m Ξ_ij / M per dyad draw, reported in adjacency units — the
    /// undirected matrix doubles both off-diagonal (two stub orders) and
    /// diagonal (loop counts twice) entries, so row sums reproduce degrees.
    pub fn expected_adjacency(&self) -> Vec<f64> {
        let n = self.n();
        let total = self.xi.total();
        let mut e = vec![0.0; n * n];
        if total == 0 {
            return e;
        }
        let scale = self.m as f64 / total as f64;
        for i in 0..n {
            for j in 0..n {
                let units = if self.is_directed() { 1.0 } else { 2.0 };
                e[i * n + j] = units * scale * self.xi.xi(i, j) as f64;
            }
        }
        e
    }

    /// Draws one graph exactly from the model.
    ///
    /// Conditional-marginal method: sweep the canonical dyads, drawing each
    /// count from the univariate hypergeometric distribution of "balls of
    /// this dyad among the remaining draws", then discount both. The joint
    /// law factors into exactly these conditionals.
    pub fn sample(&self, seed: u64) -> MultiGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    fn sample_with<R: Rng>(&self, rng: &mut R) -> MultiGraph {
        let n = self.n();
        let mut adj = vec![0_u64; n * n];
        let mut remaining_balls = self.xi.total();
        let mut remaining_draws = self.m;
        for (i, j, balls) in self.xi.dyads() {
            if balls == 0 {
                continue;
            }
            if remaining_draws == 0 {
                break;
            }
            let x = sample_hypergeometric(rng, remaining_balls, balls, remaining_draws);
            remaining_balls -= balls;
            remaining_draws -= x;
            if self.is_directed() {
                adj[i * n + j] = x;
            } else if i == j {
                adj[i * n + j] = 2 * x;
            } else {
                adj[i * n + j] = x;
                adj[j * n + i] = x;
            }
        }
        debug_assert_eq!(remaining_draws, 0, "hypergeometric support exhausts draws");
        MultiGraph::from_adjacency(n, self.is_directed(), adj)
            .expect("sampled adjacency satisfies the construction invariants")
    }

    /// Draws `count` independent graphs; sample `k` uses a seed derived
    /// from `(seed, k)`, so results are identical to `sample_many_seq` and
    /// independent of thread scheduling.
    #[cfg(feature = "parallel")]
    pub fn sample_many(&self, count: usize, seed: u64) -> Vec<MultiGraph> {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|k| self.sample(stream_seed(seed, k as u64)))
            .collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn sample_many(&self, count: usize, seed: u64) -> Vec<MultiGraph> {
        self.sample_many_seq(count, seed)
    }

    /// Sequential twin of [`SoftConfigModel::sample_many`].
    pub fn sample_many_seq(&self, count: usize, seed: u64) -> Vec<MultiGraph> {
        (0..count)
            .map(|k| self.sample(stream_seed(seed, k as u64)))
            .collect()
    }
}

/// Exact univariate hypergeometric draw: the number of marked balls among
/// `draws` taken from a population of `population` balls of which
/// `successes` are marked.
///
/// Inverse-CDF walk outward from the mode; each step updates the PMF by the
/// two-term ratio recurrence, so no factorials are evaluated past the
/// initial mode probability.
pub(crate) fn sample_hypergeometric<R: Rng>(
    rng: &mut R,
    population: u64,
    successes: u64,
    draws: u64,
) -> u64 {
    debug_assert!(successes <= population && draws <= population);
    let lo = draws.saturating_sub(population - successes);
    let hi = draws.min(successes);
    if lo == hi {
        return lo;
    }
    let mode = (((draws + 1) as u128 * (successes + 1) as u128
        / (population + 2) as u128) as u64)
        .clamp(lo, hi);
    let log_p_mode = log_binomial(successes, mode as i64)
        + log_binomial(population - successes, (draws - mode) as i64)
        - log_binomial(population, draws as i64);
    let p_mode = log_p_mode.exp();

    // p(k+1)/p(k) and p(k-1)/p(k) for the hypergeometric PMF
    let failures = population - successes;
    let ratio_up = |k: u64| {
        ((successes - k) * (draws - k)) as f64
            / (((k + 1) * (failures + k + 1 - draws)) as f64)
    };
    let ratio_down = |k: u64| {
        ((k * (failures + k - draws)) as f64)
            / (((successes - k + 1) * (draws - k + 1)) as f64)
    };

    let mut u = rng.gen::<f64>() - p_mode;
    if u < 0.0 {
        return mode;
    }
    let mut up_k = mode;
    let mut up_p = p_mode;
    let mut down_k = mode;
    let mut down_p = p_mode;
    loop {
        let can_up = up_k < hi;
        let can_down = down_k > lo;
        if can_up {
            up_p *= ratio_up(up_k);
            up_k += 1;
            u -= up_p;
            if u < 0.0 {
                return up_k;
            }
        }
        if can_down {
            down_p *= ratio_down(down_k);
            down_k -= 1;
            u -= down_p;
            if u < 0.0 {
                return down_k;
            }
        }
        if !can_up && !can_down {
            // floating residue of at most a few ulps: attribute it to the
            // nearer tail
            return if up_p >= down_p { up_k } else { down_k };
        }
    }
}
