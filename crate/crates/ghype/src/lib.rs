//! Hypergeometric ensembles of random multigraphs.
//!
//! This crate implements the soft configuration model — the multivariate
//! hypergeometric distribution over multigraphs that fixes a degree
//! sequence in expectation — and its propensity-biased generalisation,
//! whose law is the multivariate Wallenius non-central hypergeometric
//! distribution. Both come with closed-form log-PMFs, per-dyad marginals,
//! expectations, maximum-likelihood propensity fitting, and exact urn
//! samplers, plus brute-force oracles (exhaustive enumeration, rational
//! arithmetic, naive ball-by-ball simulation) that the test suite uses as
//! independent ground truth.
//!
//! The mental model is an urn: dyad (i, j) holds one ball per way of wiring
//! an out-stub of i to an in-stub of j (`Ξ_ij = k_out_i · k_in_j` of them),
//! and a graph is m draws without replacement. Uniform draws give the soft
//! configuration model; weighting each dyad's balls by a relative
//! propensity Ω_ij gives the generalised ensemble.
//!
//! With the default `parallel` feature, batch sampling, Monte-Carlo
//! trials, and the Wallenius integrand sum fan out via rayon; sequential
//! twins (`*_seq`) stay available for comparison.

mod fenwick;
pub mod graph;
pub mod numeric;
pub mod oracle;
mod rng;
pub mod softconfig;
pub mod wallenius;

pub use graph::{
    build_graph, combinatorial_matrix, degree_sequences, undirected_projection,
    CombinatorialMatrix, DegreeSequence, GraphError, MultiGraph,
};
pub use numeric::{
    chi_square_sf, integrate_unit_interval, log_add_exp, log_binomial, QuadratureConfig,
    QuadratureError,
};
pub use oracle::{
    chi_square_gof, chi_square_two_sample, directed_preimages, enumerate_central_distribution,
    enumerate_support, exact_central_pmf, exact_expected_adjacency, process_distribution,
    simulate_urn, simulate_urn_seq, OracleError, SupportEnumeration, DEFAULT_SUPPORT_CAP,
};
pub use softconfig::{ModelError, SoftConfigModel};
pub use wallenius::{fit_propensity, GHypEModel, PropensityMatrix};
