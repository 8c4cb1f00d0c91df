//! Independent ground-truth generators: exhaustive support enumeration,
//! exact rational PMFs and expectations, directed-preimage construction,
//! an exact dynamic program over the biased drawing process, and a naive
//! ball-by-ball urn simulation.
//!
//! Everything here is deliberately brute-force and structurally unrelated
//! to the closed forms and samplers under test: rational arithmetic where
//! feasible, a different random generator family for the Monte-Carlo
//! paths, and no shared quadrature or tree code. The test and acceptance
//! suites lean on these as oracles.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, BigUint, One, Zero};
use thiserror::Error;

use crate::graph::{CombinatorialMatrix, MultiGraph};
use crate::numeric::chi_square_sf;
use crate::rng::{stream_seed, SplitMix64};
use crate::wallenius::PropensityMatrix;

/// Default ceiling on enumerated support sizes.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("support enumeration exceeded the cap of {cap} matrices")]
    SupportCapExceeded { cap: usize },
}

/// An exhaustively enumerated distribution: every support matrix paired
/// with its exact probability.
#[derive(Debug, Clone)]
pub struct SupportEnumeration {
    pub entries: Vec<(MultiGraph, BigRational)>,
}

impl SupportEnumeration {
    /// Sum of all probabilities; exactly 1 for a complete enumeration of a
    /// normalized distribution.
    pub fn total(&self) -> BigRational {
        self.entries
            .iter()
            .fold(BigRational::zero(), |acc, (_, p)| acc + p)
    }
}

/// Exact binomial coefficient in arbitrary precision.
fn big_binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn big_ratio(numer: BigUint, denom: BigUint) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// All adjacency matrices with m total draws and per-dyad counts within
/// the ball-count bounds, in lexicographic order of the canonical dyad
/// draw vector, capped at `cap`.
pub fn enumerate_support(
    xi: &CombinatorialMatrix,
    m: u64,
    cap: usize,
) -> Result<Vec<MultiGraph>, OracleError> {
    let dyads: Vec<(usize, usize, u64)> = xi.dyads().collect();
    // suffix capacities let the search prune branches that cannot absorb
    // the remaining draws
    let mut suffix = vec![0_u64; dyads.len() + 1];
    for (d, &(_, _, balls)) in dyads.iter().enumerate().rev() {
        suffix[d] = suffix[d + 1].saturating_add(balls);
    }
    let mut out = Vec::new();
    let mut counts = vec![0_u64; dyads.len()];
    fn descend(
        dyads: &[(usize, usize, u64)],
        suffix: &[u64],
        xi: &CombinatorialMatrix,
        remaining: u64,
        d: usize,
        counts: &mut [u64],
        out: &mut Vec<MultiGraph>,
        cap: usize,
    ) -> Result<(), OracleError> {
        if d == dyads.len() {
            if remaining == 0 {
                if out.len() == cap {
                    return Err(OracleError::SupportCapExceeded { cap });
                }
                out.push(graph_from_counts(xi, dyads, counts));
            }
            return Ok(());
        }
        if remaining > suffix[d] {
            return Ok(());
        }
        let balls = dyads[d].2;
        for a in 0..=balls.min(remaining) {
            counts[d] = a;
            descend(dyads, suffix, xi, remaining - a, d + 1, counts, out, cap)?;
        }
        counts[d] = 0;
        Ok(())
    }
    descend(&dyads, &suffix, xi, m, 0, &mut counts, &mut out, cap)?;
    Ok(out)
}

fn graph_from_counts(
    xi: &CombinatorialMatrix,
    dyads: &[(usize, usize, u64)],
    counts: &[u64],
) -> MultiGraph {
    let n = xi.n();
    let mut adj = vec![0_u64; n * n];
    for (&(i, j, _), &a) in dyads.iter().zip(counts) {
        if xi.is_directed() {
            adj[i * n + j] = a;
        } else if i == j {
            adj[i * n + j] = 2 * a;
        } else {
            adj[i * n + j] = a;
            adj[j * n + i] = a;
        }
    }
    MultiGraph::from_adjacency(n, xi.is_directed(), adj)
        .expect("enumerated counts satisfy the construction invariants")
}

/// All directed graphs projecting to `g`: every split of each off-diagonal
/// multiplicity plus the forced half-diagonal. Their number is
/// ∏_{i<j} (A_ij + 1).
pub fn directed_preimages(g: &MultiGraph) -> Vec<MultiGraph> {
    assert!(!g.is_directed(), "preimages are defined for undirected graphs");
    let n = g.n();
    let pairs: Vec<(usize, usize, u64)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, g.adjacency(i, j)))
        .collect();
    let mut base = vec![0_u64; n * n];
    for i in 0..n {
        base[i * n + i] = g.adjacency(i, i) / 2;
    }
    let mut out = Vec::new();
    let mut splits = vec![0_u64; pairs.len()];
    loop {
        let mut adj = base.clone();
        for (&(i, j, total), &s) in pairs.iter().zip(&splits) {
            adj[i * n + j] = s;
            adj[j * n + i] = total - s;
        }
        out.push(
            MultiGraph::from_adjacency(n, true, adj)
                .expect("split adjacency is a valid directed graph"),
        );
        // odometer increment over the split vector
        let mut d = 0;
        loop {
            if d == pairs.len() {
                return out;
            }
            if splits[d] < pairs[d].2 {
                splits[d] += 1;
                break;
            }
            splits[d] = 0;
            d += 1;
        }
    }
}

/// Exact probability of `g` under the central (uniform-propensity) model:
/// ∏ C(balls_d, a_d) / C(M, m) in arbitrary-precision rationals.
pub fn exact_central_pmf(xi: &CombinatorialMatrix, m: u64, g: &MultiGraph) -> BigRational {
    assert_eq!(g.n(), xi.n(), "dimension mismatch");
    assert_eq!(g.is_directed(), xi.is_directed(), "directedness mismatch");
    let mut numer = BigUint::one();
    let mut drawn: u64 = 0;
    for (i, j, balls) in xi.dyads() {
        let a = g.dyad_draws(i, j);
        if a > balls {
            return BigRational::zero();
        }
        drawn += a;
        numer *= big_binomial(balls, a);
    }
    if drawn != m {
        return BigRational::zero();
    }
    big_ratio(numer, big_binomial(xi.total(), m))
}

/// The full central distribution over the enumerated support, with exact
/// rational probabilities.
pub fn enumerate_central_distribution(
    xi: &CombinatorialMatrix,
    m: u64,
    cap: usize,
) -> Result<SupportEnumeration, OracleError> {
    let entries = enumerate_support(xi, m, cap)?
        .into_iter()
        .map(|g| {
            let p = exact_central_pmf(xi, m, &g);
            (g, p)
        })
        .collect();
    Ok(SupportEnumeration { entries })
}

/// Exact central expectations E[X_ij] = m · balls_ij / M in adjacency
/// units (undirected entries mirrored, diagonals doubled), as rationals.
pub fn exact_expected_adjacency(xi: &CombinatorialMatrix, m: u64) -> Vec<BigRational> {
    let n = xi.n();
    let mut e = vec![BigRational::zero(); n * n];
    if xi.total() == 0 {
        return e;
    }
    for (i, j, balls) in xi.dyads() {
        let draws = big_ratio(BigUint::from(m) * BigUint::from(balls), BigUint::from(xi.total()));
        if xi.is_directed() {
            e[i * n + j] = draws;
        } else if i == j {
            e[i * n + j] = draws * BigRational::from(BigInt::from(2));
        } else {
            e[i * n + j] = draws.clone();
            e[j * n + i] = draws;
        }
    }
    e
}

/// Exact distribution of the biased sequential process by dynamic
/// programming over partial draw states: at each step a dyad is drawn
/// with probability Ω_d (balls_d − drawn_d) / Σ_k Ω_k (balls_k − drawn_k).
///
/// This is ground truth for the closed-form Wallenius PMF, computed
/// without any integral.
pub fn process_distribution(
    xi: &CombinatorialMatrix,
    omega: &PropensityMatrix,
    m: u64,
    cap: usize,
) -> Result<Vec<(MultiGraph, f64)>, OracleError> {
    assert_eq!(omega.n(), xi.n(), "dimension mismatch");
    let live: Vec<(usize, usize, u64, f64)> = xi
        .dyads()
        .map(|(i, j, balls)| (i, j, balls, omega.omega(i, j)))
        .filter(|&(_, _, balls, w)| balls > 0 && w > 0.0)
        .collect();
    let dyads: Vec<(usize, usize, u64)> =
        live.iter().map(|&(i, j, balls, _)| (i, j, balls)).collect();
    let mut states: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    states.insert(vec![0; live.len()], 1.0);
    for _ in 0..m {
        let mut next: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        for (counts, p) in &states {
            let total: f64 = live
                .iter()
                .zip(counts)
                .map(|(&(_, _, balls, w), &a)| w * (balls - a) as f64)
                .sum();
            for (d, &(_, _, balls, w)) in live.iter().enumerate() {
                if counts[d] < balls {
                    let q = p * w * (balls - counts[d]) as f64 / total;
                    let mut advanced = counts.clone();
                    advanced[d] += 1;
                    *next.entry(advanced).or_insert(0.0) += q;
                }
            }
            if next.len() > cap {
                return Err(OracleError::SupportCapExceeded { cap });
            }
        }
        states = next;
    }
    Ok(states
        .into_iter()
        .map(|(counts, p)| (graph_from_counts(xi, &dyads, &counts), p))
        .collect())
}

/// Naive ball-by-ball urn simulation: per draw, a linear scan picks a dyad
/// with probability proportional to Ω × remaining balls. Returns outcome
/// counts keyed by row-major adjacency.
pub fn simulate_urn(
    xi: &CombinatorialMatrix,
    omega: &PropensityMatrix,
    m: u64,
    trials: u64,
    seed: u64,
) -> BTreeMap<Vec<u64>, u64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        return (0..trials)
            .into_par_iter()
            .fold(BTreeMap::new, |mut acc: BTreeMap<Vec<u64>, u64>, t| {
                *acc.entry(urn_trial(xi, omega, m, stream_seed(seed, t)))
                    .or_insert(0) += 1;
                acc
            })
            .reduce(BTreeMap::new, merge_counts);
    }
    #[cfg(not(feature = "parallel"))]
    simulate_urn_seq(xi, omega, m, trials, seed)
}

/// Sequential twin of [`simulate_urn`].
pub fn simulate_urn_seq(
    xi: &CombinatorialMatrix,
    omega: &PropensityMatrix,
    m: u64,
    trials: u64,
    seed: u64,
) -> BTreeMap<Vec<u64>, u64> {
    let mut acc: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for t in 0..trials {
        *acc.entry(urn_trial(xi, omega, m, stream_seed(seed, t)))
            .or_insert(0) += 1;
    }
    acc
}

fn merge_counts(
    mut a: BTreeMap<Vec<u64>, u64>,
    b: BTreeMap<Vec<u64>, u64>,
) -> BTreeMap<Vec<u64>, u64> {
    for (key, count) in b {
        *a.entry(key).or_insert(0) += count;
    }
    a
}

fn urn_trial(
    xi: &CombinatorialMatrix,
    omega: &PropensityMatrix,
    m: u64,
    seed: u64,
) -> Vec<u64> {
    let n = xi.n();
    let mut rng = SplitMix64::new(seed);
    let live: Vec<(usize, usize, u64, f64)> = xi
        .dyads()
        .map(|(i, j, balls)| (i, j, balls, omega.omega(i, j)))
        .filter(|&(_, _, balls, w)| balls > 0 && w > 0.0)
        .collect();
    let mut remaining: Vec<u64> = live.iter().map(|&(_, _, balls, _)| balls).collect();
    let mut adj = vec![0_u64; n * n];
    for _ in 0..m {
        let total: f64 = live
            .iter()
            .zip(&remaining)
            .map(|(&(_, _, _, w), &r)| w * r as f64)
            .sum();
        let mut target = rng.next_f64() * total;
        let mut chosen = usize::MAX;
        for (d, (&(_, _, _, w), &r)) in live.iter().zip(&remaining).enumerate() {
            let weight = w * r as f64;
            if target < weight {
                chosen = d;
                break;
            }
            target -= weight;
        }
        if chosen == usize::MAX {
            // float residue walked past the end: take the last live dyad
            chosen = remaining
                .iter()
                .rposition(|&r| r > 0)
                .expect("draws remain feasible");
        }
        remaining[chosen] -= 1;
        let (i, j, _, _) = live[chosen];
        if xi.is_directed() {
            adj[i * n + j] += 1;
        } else if i == j {
            adj[i * n + j] += 2;
        } else {
            adj[i * n + j] += 1;
            adj[j * n + i] += 1;
        }
    }
    adj
}

/// Chi-square goodness-of-fit of observed outcome counts against expected
/// probabilities. Returns (statistic, degrees of freedom, p-value).
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> (f64, u64, f64) {
    assert_eq!(observed.len(), probs.len());
    let trials: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0_u64;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            assert_eq!(o, 0, "observed an outcome of probability zero");
            continue;
        }
        let expected = trials as f64 * p;
        let diff = o as f64 - expected;
        stat += diff * diff / expected;
        cells += 1;
    }
    let dof = cells.saturating_sub(1).max(1);
    (stat, dof, chi_square_sf(stat, dof))
}

/// Two-sample chi-square homogeneity test over aligned outcome counts.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> (f64, u64, f64) {
    assert_eq!(a.len(), b.len());
    let total_a: u64 = a.iter().sum();
    let total_b: u64 = b.iter().sum();
    let grand = (total_a + total_b) as f64;
    let mut stat = 0.0;
    let mut cells = 0_u64;
    for (&oa, &ob) in a.iter().zip(b) {
        let col = (oa + ob) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        for (o, row_total) in [(oa, total_a), (ob, total_b)] {
            let expected = row_total as f64 * col / grand;
            let diff = o as f64 - expected;
            stat += diff * diff / expected;
        }
    }
    let dof = cells.saturating_sub(1).max(1);
    (stat, dof, chi_square_sf(stat, dof))
}
