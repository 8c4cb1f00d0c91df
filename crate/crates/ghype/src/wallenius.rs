//! The generalised hypergeometric ensemble: propensity-biased drawing of
//! multi-edges without replacement.
//!
//! Each ball of dyad (i, j) carries a relative weight Ω_ij; a draw picks a
//! ball with probability proportional to weight × remaining count. The
//! resulting law over adjacency matrices is the multivariate Wallenius
//! non-central hypergeometric distribution,
//!
//! ```text
//! Pr(X = A) = [ ∏_d C(balls_d, a_d) ] · ∫₀¹ ∏_d (1 − z^{Ω_d/S_Ω})^{a_d} dz,
//! S_Ω = Σ_d Ω_d (balls_d − a_d),
//! ```
//!
//! with d ranging over ordered pairs (directed) or the upper triangle with
//! doubled off-diagonal ball counts and half-diagonal draw counts
//! (undirected). Uniform Ω recovers the soft configuration model.
//!
//! The marginal and mean operations below collapse the other dyads to a
//! single ball-count-averaged propensity; they are the standard closed
//! forms and are exact only when the collapsed weights are homogeneous
//! (e.g. for two-dyad models), a limitation the test suite pins down
//! against exact oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fenwick::FenwickTree;
use crate::graph::{CombinatorialMatrix, MultiGraph};
use crate::numeric::{
    integrate_unit_interval_ln, log_binomial, KahanSum, QuadratureConfig, QuadratureError,
};
use crate::rng::stream_seed;
use crate::softconfig::ModelError;

/// Dyadic relative-odds weights Ω, defined up to a positive scalar: models
/// built from Ω and cΩ (c > 0) describe identical distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityMatrix {
    n: usize,
    directed: bool,
    omega: Vec<f64>,
}

impl PropensityMatrix {
    /// The uniform propensity (all ones), i.e. the unbiased urn.
    pub fn uniform(n: usize, directed: bool) -> Self {
        Self {
            n,
            directed,
            omega: vec![1.0; n * n],
        }
    }

    /// Wraps a row-major weight matrix, validating non-negativity and,
    /// for undirected models, symmetry.
    pub fn from_row_major(n: usize, directed: bool, omega: Vec<f64>) -> Result<Self, ModelError> {
        if omega.len() != n * n {
            return Err(ModelError::PropensityDimensionMismatch {
                expected: n * n,
                got: omega.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let w = omega[i * n + j];
                if !w.is_finite() || w < 0.0 {
                    return Err(ModelError::InvalidPropensity { i, j, value: w });
                }
            }
        }
        if !directed {
            for i in 0..n {
                for j in (i + 1)..n {
                    if omega[i * n + j] != omega[j * n + i] {
                        return Err(ModelError::AsymmetricPropensity { i, j });
                    }
                }
            }
        }
        Ok(Self { n, directed, omega })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.omega[i * self.n + j]
    }

    /// Row-major view of the weights.
    pub fn as_slice(&self) -> &[f64] {
        &self.omega
    }
}

/// A generalised hypergeometric ensemble: ball counts Ξ, propensities Ω,
/// and a number of draws m.
#[derive(Debug, Clone)]
pub struct GHypEModel {
    xi: CombinatorialMatrix,
    omega: PropensityMatrix,
    m: u64,
    quad: QuadratureConfig,
}

impl GHypEModel {
    pub fn new(
        xi: CombinatorialMatrix,
        omega: PropensityMatrix,
        m: u64,
    ) -> Result<Self, ModelError> {
        if omega.n() != xi.n() {
            return Err(ModelError::PropensityDimensionMismatch {
                expected: xi.n() * xi.n(),
                got: omega.n() * omega.n(),
            });
        }
        if omega.is_directed() != xi.is_directed() {
            return Err(ModelError::DirectednessMismatch);
        }
        // the biased process only ever draws balls with positive weight
        let capacity: u64 = xi
            .dyads()
            .filter(|&(i, j, _)| omega.omega(i, j) > 0.0)
            .map(|(_, _, balls)| balls)
            .sum();
        if m > capacity {
            return Err(ModelError::InfeasibleDraws { m, capacity });
        }
        Ok(Self {
            xi,
            omega,
            m,
            quad: QuadratureConfig::default(),
        })
    }

    /// Replaces the quadrature tolerances used by the PMF integrals.
    pub fn with_quadrature(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn xi(&self) -> &CombinatorialMatrix {
        &self.xi
    }

    pub fn omega(&self) -> &PropensityMatrix {
        &self.omega
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

    /// Natural log of Pr(X = g) under the biased urn law. −∞ off the
    /// support (wrong total, a dyad over its ball count, or draws on a
    /// zero-propensity dyad).
    pub fn log_pmf_wallenius(&self, g: &MultiGraph) -> Result<f64, ModelError> {
        self.check_graph(g)?;
        let mut log_prod = KahanSum::default();
        let mut s_omega = KahanSum::default();
        let mut drawn: u64 = 0;
        let mut raw_terms: Vec<(f64, f64)> = Vec::new();
        for (i, j, balls) in self.xi.dyads() {
            let a = g.dyad_draws(i, j);
            if a > balls {
                return Ok(f64::NEG_INFINITY);
            }
            let w = self.omega.omega(i, j);
            if w == 0.0 && a > 0 {
                return Ok(f64::NEG_INFINITY);
            }
            drawn += a;
            s_omega.add(w * (balls - a) as f64);
            if a > 0 {
                log_prod.add(log_binomial(balls, a as i64));
                raw_terms.push((a as f64, w));
            }
        }
        if drawn != self.m {
            return Ok(f64::NEG_INFINITY);
        }
        let s = s_omega.value();
        if s == 0.0 {
            // every ball with positive propensity was drawn
            return if self.m == self.xi.total() {
                // ... and there were no others: the saturated outcome is
                // certain, and the binomial product is exactly 1
                Ok(0.0)
            } else {
                Err(ModelError::DegenerateSaturation { m: self.m })
            };
        }
        for term in &mut raw_terms {
            term.1 /= s;
        }
        let integral = wallenius_log_integral(&raw_terms, self.m, &self.quad)?;
        Ok(log_prod.value() + integral)
    }

    /// Pr(X_ij = a) in the two-color collapse: this dyad against all
    /// others averaged into Ω̄_ij = Σ_{(l,k)≠(i,j)} balls_lk Ω_lk / (M − B).
    ///
    /// Exact when the collapsed weights are homogeneous; otherwise an
    /// approximation (see the module docs).
    pub fn marginal_pmf_wallenius(&self, i: usize, j: usize, a: u64) -> Result<f64, ModelError> {
        self.check_indices(i, j)?;
        let diagonal_loop = !self.is_directed() && i == j;
        if diagonal_loop && a % 2 != 0 {
            return Ok(0.0);
        }
        let draws = if diagonal_loop { a / 2 } else { a };
        let balls = self.xi.ball_count(i, j);
        let total = self.xi.total();
        let rest_balls = total - balls;
        if draws > balls || draws > self.m || self.m - draws > rest_balls {
            return Ok(0.0);
        }
        let rest_draws = self.m - draws;
        let w = self.omega.omega(i, j);
        if w == 0.0 && draws > 0 {
            return Ok(0.0);
        }
        let w_rest = if rest_balls == 0 {
            0.0
        } else {
            let mut acc = KahanSum::default();
            for (l, k, b) in self.xi.dyads() {
                if (l, k) != (i, j) {
                    acc.add(self.omega.omega(l, k) * b as f64);
                }
            }
            acc.value() / rest_balls as f64
        };
        if w_rest == 0.0 && rest_draws > 0 {
            return Ok(0.0);
        }
        let s = w * (balls - draws) as f64 + w_rest * (rest_balls - rest_draws) as f64;
        if s == 0.0 {
            return if self.m == total {
                Ok(1.0)
            } else {
                Err(ModelError::DegenerateSaturation { m: self.m })
            };
        }
        let mut terms: Vec<(f64, f64)> = Vec::with_capacity(2);
        if draws > 0 {
            terms.push((draws as f64, w / s));
        }
        if rest_draws > 0 {
            terms.push((rest_draws as f64, w_rest / s));
        }
        let integral = wallenius_log_integral(&terms, self.m, &self.quad)?;
        let log_p = log_binomial(balls, draws as i64)
            + log_binomial(rest_balls, rest_draws as i64)
            + integral;
        Ok(log_p.exp())
    }

    /// E[X] per the one-parameter mean system: E[X_d] = balls_d (1 − C^{Ω_d})
    /// with the common root C ∈ [0, 1] fixed by Σ_d E[X_d] = m.
    ///
    /// Returned in adjacency units (undirected entries mirrored, diagonals
    /// doubled). Like the marginal, this collapses the draw history into a
    /// shared depletion level and is exact only for homogeneous weights.
    pub fn mean_wallenius(&self) -> Vec<f64> {
        let n = self.n();
        let mut e = vec![0.0; n * n];
        if self.m == 0 {
            return e;
        }
        let dyads: Vec<(usize, usize, u64, f64)> = self
            .xi
            .dyads()
            .map(|(i, j, balls)| (i, j, balls, self.omega.omega(i, j)))
            .filter(|&(_, _, balls, w)| balls > 0 && w > 0.0)
            .collect();
        let capacity: u64 = dyads.iter().map(|&(_, _, b, _)| b).sum();
        let m = self.m as f64;

        // Σ E(C) − m is strictly decreasing on [0, 1]: bisect. E(0) sums to
        // the full capacity (feasibility gives capacity ≥ m), E(1) to 0.
        let excess = |c: f64| -> f64 {
            let mut acc = KahanSum::default();
            if c == 0.0 {
                return capacity as f64 - m;
            }
            let ln_c = c.ln();
            for &(_, _, balls, w) in &dyads {
                acc.add(balls as f64 * -((w * ln_c).exp_m1()));
            }
            acc.value() - m
        };

        let c = if capacity == self.m {
            // every weighted ball is drawn: the root sits exactly at C = 0
            0.0
        } else {
            let mut lo = 0.0_f64;
            let mut hi = 1.0_f64;
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                if excess(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let ln_c = c.ln();
        for &(i, j, balls, w) in &dyads {
            let expectation = if c == 0.0 {
                balls as f64
            } else {
                balls as f64 * -((w * ln_c).exp_m1())
            };
            if self.is_directed() {
                e[i * n + j] = expectation;
            } else if i == j {
                e[i * n + j] = 2.0 * expectation;
            } else {
                e[i * n + j] = expectation;
                e[j * n + i] = expectation;
            }
        }
        e
    }

    /// Draws one graph by running the biased urn process exactly: m
    /// sequential draws, each dyad selected with probability proportional
    /// to Ω_d × remaining balls, maintained in a prefix-sum tree.
    pub fn sample_ghype(&self, seed: u64) -> MultiGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n();
        let mut cells: Vec<(usize, usize)> = Vec::new();
        let mut remaining: Vec<u64> = Vec::new();
        let mut propensity: Vec<f64> = Vec::new();
        for (i, j, balls) in self.xi.dyads() {
            let w = self.omega.omega(i, j);
            if balls > 0 && w > 0.0 {
                cells.push((i, j));
                remaining.push(balls);
                propensity.push(w);
            }
        }
        let weights: Vec<f64> = remaining
            .iter()
            .zip(&propensity)
            .map(|(&b, &w)| w * b as f64)
            .collect();
        let mut tree = FenwickTree::from_weights(weights);
        let mut adj = vec![0_u64; n * n];
        for _ in 0..self.m {
            let target = rng.gen::<f64>() * tree.total();
            let d = tree.select(target);
            remaining[d] -= 1;
            tree.set(d, propensity[d] * remaining[d] as f64);
            let (i, j) = cells[d];
            if self.is_directed() {
                adj[i * n + j] += 1;
            } else if i == j {
                adj[i * n + j] += 2;
            } else {
                adj[i * n + j] += 1;
                adj[j * n + i] += 1;
            }
        }
        MultiGraph::from_adjacency(n, self.is_directed(), adj)
            .expect("process draws satisfy the construction invariants")
    }

    /// Draws `count` independent graphs; sample `k` uses a seed derived
    /// from `(seed, k)`, so results are identical to
    /// [`GHypEModel::sample_ghype_many_seq`] regardless of scheduling.
    #[cfg(feature = "parallel")]
    pub fn sample_ghype_many(&self, count: usize, seed: u64) -> Vec<MultiGraph> {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|k| self.sample_ghype(stream_seed(seed, k as u64)))
            .collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn sample_ghype_many(&self, count: usize, seed: u64) -> Vec<MultiGraph> {
        self.sample_ghype_many_seq(count, seed)
    }

    /// Sequential twin of [`GHypEModel::sample_ghype_many`].
    pub fn sample_ghype_many_seq(&self, count: usize, seed: u64) -> Vec<MultiGraph> {
        (0..count)
            .map(|k| self.sample_ghype(stream_seed(seed, k as u64)))
            .collect()
    }
}

/// Maximum-likelihood propensities for an observed graph under its own
/// ball counts: Ω_ij = −ln(1 − a_ij / balls_ij), the weights whose mean
/// system reproduces the observation (at C = e⁻¹). Zero dyads map to zero;
/// a saturated dyad has no finite weight and is an error.
pub fn fit_propensity(
    g: &MultiGraph,
    xi: &CombinatorialMatrix,
) -> Result<PropensityMatrix, ModelError> {
    if g.n() != xi.n() {
        return Err(ModelError::DimensionMismatch {
            expected: xi.n(),
            got: g.n(),
        });
    }
    if g.is_directed() != xi.is_directed() {
        return Err(ModelError::DirectednessMismatch);
    }
    let n = xi.n();
    let mut omega = vec![0.0_f64; n * n];
    for (i, j, balls) in xi.dyads() {
        let a = g.dyad_draws(i, j);
        if a == 0 {
            continue;
        }
        if a >= balls {
            return Err(ModelError::SaturatedDyad {
                i,
                j,
                a: g.adjacency(i, j),
            });
        }
        let w = -(-(a as f64) / balls as f64).ln_1p();
        omega[i * n + j] = w;
        if !xi.is_directed() {
            omega[j * n + i] = w;
        }
    }
    PropensityMatrix::from_row_major(n, xi.is_directed(), omega)
}

/// One factor (1 − z^w)^a of the Wallenius integrand, with the weight's
/// logarithm precomputed. Invariant: a > 0 and w > 0.
struct Term {
    a: f64,
    w: f64,
    ln_w: f64,
}

/// ln ∫₀¹ ∏ (1 − z^{w_d})^{a_d} dz for S-normalized weight terms
/// `(a_d, w_d)`; an empty product integrates to 1.
fn wallenius_log_integral(
    terms: &[(f64, f64)],
    m: u64,
    quad: &QuadratureConfig,
) -> Result<f64, QuadratureError> {
    if terms.is_empty() {
        return Ok(0.0);
    }
    // seed the integrator where the draw-weighted average exponent puts
    // the mass: t* solves m w̄ e^{-s}/(1-e^{-s}) = 1 with s = w̄ t
    let m_f = m as f64;
    let w_bar = terms.iter().map(|&(a, w)| a * w).sum::<f64>() / m_f;
    let hint_ln = -(m_f * w_bar).ln_1p() / w_bar;
    let terms: Vec<Term> = terms
        .iter()
        .map(|&(a, w)| Term { a, w, ln_w: w.ln() })
        .collect();
    integrate_unit_interval_ln(|ln_z| integrand_log_sum(&terms, ln_z), hint_ln, quad)
}

/// Σ_d a_d ln(1 − z^{w_d}) at a given ln z.
fn integrand_log_sum(terms: &[Term], ln_z: f64) -> f64 {
    if ln_z == 0.0 {
        // z = 1: every factor vanishes
        return f64::NEG_INFINITY;
    }
    let ln_neg_ln_z = (-ln_z).ln();
    #[cfg(feature = "parallel")]
    {
        const PAR_CHUNK: usize = 4096;
        if terms.len() >= 2 * PAR_CHUNK {
            use rayon::prelude::*;
            // fixed chunking with an ordered collect keeps the reduction
            // deterministic under any thread schedule
            let partials: Vec<f64> = terms
                .par_chunks(PAR_CHUNK)
                .map(|chunk| integrand_chunk_sum(chunk, ln_z, ln_neg_ln_z))
                .collect();
            let mut acc = KahanSum::default();
            for p in partials {
                acc.add(p);
            }
            return acc.value();
        }
    }
    integrand_chunk_sum(terms, ln_z, ln_neg_ln_z)
}

fn integrand_chunk_sum(terms: &[Term], ln_z: f64, ln_neg_ln_z: f64) -> f64 {
    let mut acc = KahanSum::default();
    for t in terms {
        let s = t.w * ln_z;
        if s > -1e-3 {
            // 1 − z^w = (−w ln z)·(e^s − 1)/s, and for |s| ≤ 1e-3 the
            // Bernoulli series of ln((e^s − 1)/s) is exact to f64; this
            // avoids two transcendental calls per term in the regime where
            // the exponents are tiny (huge urns)
            let s2 = s * s;
            let q = 0.5 * s + s2 * (1.0 / 24.0 - s2 * (1.0 / 2880.0));
            acc.add(t.a * (t.ln_w + ln_neg_ln_z + q));
        } else {
            // 1 - z^w = -expm1(w ln z), accurate at both ends of (0,1)
            let one_minus = -s.exp_m1();
            acc.add(t.a * one_minus.ln());
        }
    }
    acc.value()
}
