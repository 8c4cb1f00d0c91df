//! Command-line frontend for hypergeometric multigraph ensembles:
//! edge-list ingestion, propensity fitting, PMF and expectation queries,
//! ensemble sampling, per-dyad significance reports, and randomized
//! self-verification against the brute-force oracles.
//!
//! Exit codes: 0 success, 1 failed verification, 2 input error,
//! 3 model-infeasibility error.

mod io;
mod verify;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghype::{
    build_graph, combinatorial_matrix, degree_sequences, fit_propensity, CombinatorialMatrix,
    DegreeSequence, GHypEModel, ModelError, MultiGraph, PropensityMatrix, QuadratureConfig,
    SoftConfigModel,
};
use serde_json::json;
use thiserror::Error;

use crate::io::{read_edge_list, read_matrix, EdgeList, MatrixFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Model(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Model(_) => 3,
        }
    }
}

pub fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn model_err(msg: impl Into<String>) -> CliError {
    CliError::Model(msg.into())
}

/// Model errors caused by malformed inputs exit with 2; genuine model
/// infeasibility (saturation, infeasible draw counts, degenerate or
/// non-converging configurations) exits with 3.
fn classify(e: ModelError) -> CliError {
    match e {
        ModelError::DimensionMismatch { .. }
        | ModelError::DirectednessMismatch
        | ModelError::IndexOutOfRange { .. }
        | ModelError::InvalidPropensity { .. }
        | ModelError::AsymmetricPropensity { .. }
        | ModelError::PropensityDimensionMismatch { .. } => input_err(e.to_string()),
        other => model_err(other.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "ghype",
    version,
    about = "Hypergeometric ensembles of random multigraphs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report degree sequences, vertex count, and edge count as JSON
    Degrees {
        /// TSV edge list: src<TAB>dst[<TAB>multiplicity]
        input: PathBuf,
        #[arg(long, conflicts_with = "undirected")]
        directed: bool,
        /// Treat the edge list as undirected (the default)
        #[arg(long)]
        undirected: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit dyadic propensities to a graph under its own degree null
    Fit {
        input: PathBuf,
        #[arg(long, conflicts_with = "undirected")]
        directed: bool,
        #[arg(long)]
        undirected: bool,
        /// Write <OUTPUT>.omega.json and <OUTPUT>.xi.json instead of
        /// printing a combined JSON object
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw graphs from the ensemble as edge-list blocks
    Sample {
        /// Combinatorial matrix (ball counts) as a matrix JSON file
        xi: PathBuf,
        /// Propensity matrix file, or the literal `uniform`
        #[arg(long, default_value = "uniform")]
        omega: String,
        /// Number of edges per sampled graph
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Log-probability of a graph under the ensemble
    Pmf {
        xi: PathBuf,
        /// Edge list of the graph to evaluate (labels must match the
        /// matrix file's labels)
        graph: PathBuf,
        #[arg(long, default_value = "uniform")]
        omega: String,
        #[arg(long)]
        m: u64,
        /// Relative tolerance for the propensity-weighted quadrature
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Expected adjacency matrix of the ensemble
    Expect {
        xi: PathBuf,
        #[arg(long, default_value = "uniform")]
        omega: String,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-dyad significance of multiplicities under a null model
    Test {
        input: PathBuf,
        #[arg(long, conflicts_with = "undirected")]
        directed: bool,
        #[arg(long)]
        undirected: bool,
        /// Null model to test against (only `softconfig` is available)
        #[arg(long, default_value = "softconfig")]
        null: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the closed forms and samplers against brute-force oracles
    Verify {
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long, default_value_t = 4)]
        max_m: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::Degrees {
            input,
            directed,
            output,
            ..
        } => cmd_degrees(&input, directed, output.as_deref()),
        Cmd::Fit {
            input,
            directed,
            output,
            ..
        } => cmd_fit(&input, directed, output.as_deref()),
        Cmd::Sample {
            xi,
            omega,
            m,
            count,
            seed,
            output,
        } => cmd_sample(&xi, &omega, m, count, seed, output.as_deref()),
        Cmd::Pmf {
            xi,
            graph,
            omega,
            m,
            tol,
            output,
        } => cmd_pmf(&xi, &graph, &omega, m, tol, output.as_deref()),
        Cmd::Expect {
            xi,
            omega,
            m,
            output,
        } => cmd_expect(&xi, &omega, m, output.as_deref()),
        Cmd::Test {
            input,
            directed,
            null,
            output,
            ..
        } => cmd_test(&input, directed, &null, output.as_deref()),
        Cmd::Verify { max_n, max_m, seed } => cmd_verify(max_n, max_m, seed),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| input_err(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn graph_from_edges(el: &EdgeList, directed: bool) -> Result<MultiGraph, CliError> {
    build_graph(&el.edges, el.labels.len(), directed).map_err(|e| input_err(e.to_string()))
}

fn cmd_degrees(input: &Path, directed: bool, output: Option<&Path>) -> Result<u8, CliError> {
    let el = read_edge_list(input)?;
    let g = graph_from_edges(&el, directed)?;
    let deg = degree_sequences(&g);
    let report = match &deg {
        DegreeSequence::Directed { k_out, k_in } => json!({
            "n": g.n(),
            "m": g.edge_count(),
            "directed": true,
            "labels": el.labels,
            "k_out": k_out,
            "k_in": k_in,
        }),
        DegreeSequence::Undirected { k } => json!({
            "n": g.n(),
            "m": g.edge_count(),
            "directed": false,
            "labels": el.labels,
            "k": k,
        }),
    };
    emit(output, &serde_json::to_string_pretty(&report).unwrap())?;
    Ok(0)
}

fn cmd_fit(input: &Path, directed: bool, output: Option<&Path>) -> Result<u8, CliError> {
    let el = read_edge_list(input)?;
    let g = graph_from_edges(&el, directed)?;
    let xi = combinatorial_matrix(&degree_sequences(&g)).map_err(|e| model_err(e.to_string()))?;
    let omega = fit_propensity(&g, &xi).map_err(|e| match e {
        ModelError::SaturatedDyad { i, j, a } => model_err(format!(
            "dyad ({}, {}) is saturated: multiplicity {a} uses every available stub pairing, \
             so its propensity is unbounded",
            el.labels[i], el.labels[j]
        )),
        other => classify(other),
    })?;
    let n = g.n();
    let xi_data: Vec<u64> = (0..n * n).map(|idx| xi.xi(idx / n, idx % n)).collect();
    let omega_file = MatrixFile::new(n, directed, el.labels.clone(), omega.as_slice().to_vec());
    let xi_file = MatrixFile::from_counts(n, directed, el.labels.clone(), &xi_data);
    match output {
        Some(stem) => {
            let omega_path = stem.with_extension("omega.json");
            let xi_path = stem.with_extension("xi.json");
            emit(
                Some(&omega_path),
                &serde_json::to_string_pretty(&omega_file).unwrap(),
            )?;
            emit(
                Some(&xi_path),
                &serde_json::to_string_pretty(&xi_file).unwrap(),
            )?;
            println!("{}", omega_path.display());
            println!("{}", xi_path.display());
        }
        None => {
            let combined = json!({ "omega": omega_file, "xi": xi_file });
            println!("{}", serde_json::to_string_pretty(&combined).unwrap());
        }
    }
    Ok(0)
}

fn load_xi(path: &Path) -> Result<(CombinatorialMatrix, Vec<String>), CliError> {
    let file = read_matrix(path)?;
    let counts = file.integer_data(&path.display().to_string())?;
    let xi = CombinatorialMatrix::from_raw(file.n, file.directed, counts)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    Ok((xi, file.labels))
}

fn load_omega(arg: &str, xi: &CombinatorialMatrix) -> Result<PropensityMatrix, CliError> {
    if arg == "uniform" {
        return Ok(PropensityMatrix::uniform(xi.n(), xi.is_directed()));
    }
    let path = Path::new(arg);
    let file = read_matrix(path)?;
    if file.n != xi.n() || file.directed != xi.is_directed() {
        return Err(input_err(format!(
            "{}: propensity matrix shape ({}, directed={}) does not match the combinatorial \
             matrix ({}, directed={})",
            path.display(),
            file.n,
            file.directed,
            xi.n(),
            xi.is_directed()
        )));
    }
    PropensityMatrix::from_row_major(file.n, file.directed, file.data)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))
}

/// Writes one sampled graph as TSV lines, undirected edges listed once and
/// self-loops in user units (multiplicity, not the doubled diagonal).
fn edge_block(g: &MultiGraph, labels: &[String], out: &mut String) {
    let n = g.n();
    for i in 0..n {
        let range = if g.is_directed() { 0..n } else { i..n };
        for j in range {
            let mult = if !g.is_directed() && i == j {
                g.adjacency(i, i) / 2
            } else {
                g.adjacency(i, j)
            };
            if mult > 0 {
                out.push_str(&format!("{}\t{}\t{}\n", labels[i], labels[j], mult));
            }
        }
    }
}

fn cmd_sample(
    xi_path: &Path,
    omega_arg: &str,
    m: u64,
    count: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    let (xi, labels) = load_xi(xi_path)?;
    let samples = if omega_arg == "uniform" {
        let model = SoftConfigModel::new(xi, m).map_err(classify)?;
        model.sample_many(count, seed)
    } else {
        let omega = load_omega(omega_arg, &xi)?;
        let model = GHypEModel::new(xi, omega, m).map_err(classify)?;
        model.sample_ghype_many(count, seed)
    };
    let mut out = String::new();
    for (idx, g) in samples.iter().enumerate() {
        if idx > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# sample {idx}\n"));
        edge_block(g, &labels, &mut out);
    }
    emit(output, out.trim_end_matches('\n'))?;
    Ok(0)
}

/// Adjacency matrix of an edge-list graph whose labels must all appear in
/// the model's label set.
fn graph_against_labels(
    el: &EdgeList,
    labels: &[String],
    directed: bool,
) -> Result<MultiGraph, CliError> {
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut edges = Vec::with_capacity(el.edges.len());
    for &(src, dst, w) in &el.edges {
        let lookup = |v: usize| {
            index.get(el.labels[v].as_str()).copied().ok_or_else(|| {
                input_err(format!(
                    "vertex `{}` does not appear in the matrix file's labels",
                    el.labels[v]
                ))
            })
        };
        edges.push((lookup(src)?, lookup(dst)?, w));
    }
    build_graph(&edges, labels.len(), directed).map_err(|e| input_err(e.to_string()))
}

fn cmd_pmf(
    xi_path: &Path,
    graph_path: &Path,
    omega_arg: &str,
    m: u64,
    tol: Option<f64>,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    let (xi, labels) = load_xi(xi_path)?;
    let el = read_edge_list(graph_path)?;
    let g = graph_against_labels(&el, &labels, xi.is_directed())?;
    let log_pmf = if omega_arg == "uniform" {
        let model = SoftConfigModel::new(xi, m).map_err(classify)?;
        model.log_pmf(&g).map_err(classify)?
    } else {
        let omega = load_omega(omega_arg, &xi)?;
        let mut model = GHypEModel::new(xi, omega, m).map_err(classify)?;
        if let Some(tol) = tol {
            let quad = QuadratureConfig::new(tol, 2048)
                .map_err(|e| input_err(format!("--tol {tol}: {e}")))?;
            model = model.with_quadrature(quad);
        }
        model.log_pmf_wallenius(&g).map_err(classify)?
    };
    let report = if log_pmf == f64::NEG_INFINITY {
        json!({
            "log_pmf": null,
            "log10_pmf": null,
            "note": "the graph lies outside the model support (log-probability -inf)",
        })
    } else {
        json!({
            "log_pmf": log_pmf,
            "log10_pmf": log_pmf / std::f64::consts::LN_10,
        })
    };
    emit(output, &serde_json::to_string_pretty(&report).unwrap())?;
    Ok(0)
}

fn cmd_expect(
    xi_path: &Path,
    omega_arg: &str,
    m: u64,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    let (xi, labels) = load_xi(xi_path)?;
    let n = xi.n();
    let directed = xi.is_directed();
    let expected = if omega_arg == "uniform" {
        let model = SoftConfigModel::new(xi, m).map_err(classify)?;
        model.expected_adjacency()
    } else {
        let omega = load_omega(omega_arg, &xi)?;
        let model = GHypEModel::new(xi, omega, m).map_err(classify)?;
        model.mean_wallenius()
    };
    let file = MatrixFile::new(n, directed, labels, expected);
    emit(output, &serde_json::to_string_pretty(&file).unwrap())?;
    Ok(0)
}

/// Two-sided exact p-value of a dyad's multiplicity under the model's
/// marginal, by probability-mass ordering: the total mass of outcomes no
/// more likely than the observed one. The second component flags an
/// observation outside the dyad's ball-count capacity.
pub fn dyad_p_value(model: &SoftConfigModel, i: usize, j: usize, observed: u64) -> (f64, bool) {
    let balls = model.xi().ball_count(i, j);
    let diagonal_loop = !model.is_directed() && i == j;
    let p_obs = model.marginal_pmf(i, j, observed).expect("dyad in range");
    let observed_draws = if diagonal_loop { observed / 2 } else { observed };
    let impossible = observed_draws > balls || (diagonal_loop && observed % 2 != 0);
    let mut p = 0.0;
    for draws in 0..=balls {
        let a = if diagonal_loop { 2 * draws } else { draws };
        let pa = model.marginal_pmf(i, j, a).expect("dyad in range");
        // include ties up to float noise so equal-mass outcomes count
        if pa <= p_obs * (1.0 + 1e-12) {
            p += pa;
        }
    }
    (p.min(1.0), impossible)
}

fn cmd_test(
    input: &Path,
    directed: bool,
    null: &str,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    if null != "softconfig" {
        return Err(input_err(format!(
            "unknown null model `{null}` (available: softconfig)"
        )));
    }
    let el = read_edge_list(input)?;
    let g = graph_from_edges(&el, directed)?;
    let xi = combinatorial_matrix(&degree_sequences(&g)).map_err(|e| model_err(e.to_string()))?;
    let model = SoftConfigModel::new(xi, g.edge_count()).map_err(classify)?;
    let n = g.n();
    let mut p_values = vec![0.0_f64; n * n];
    let mut impossible: Vec<[String; 2]> = Vec::new();
    for (i, j, _) in model.xi().dyads() {
        let (p, flagged) = dyad_p_value(&model, i, j, g.adjacency(i, j));
        p_values[i * n + j] = p;
        if !directed {
            p_values[j * n + i] = p;
        }
        if flagged {
            impossible.push([el.labels[i].clone(), el.labels[j].clone()]);
        }
    }
    let log_likelihood = model.log_pmf(&g).map_err(classify)?;
    let report = json!({
        "n": n,
        "directed": directed,
        "labels": el.labels,
        "data": p_values,
        "log_likelihood": log_likelihood,
        "impossible": impossible,
    });
    emit(output, &serde_json::to_string_pretty(&report).unwrap())?;
    Ok(0)
}

fn cmd_verify(max_n: usize, max_m: u64, seed: u64) -> Result<u8, CliError> {
    let report = verify::run_verify(max_n, max_m, seed)?;
    for line in &report.lines {
        println!("{line}");
    }
    if report.failures > 0 {
        println!(
            "verification FAILED: {} of {} checks",
            report.failures,
            report.lines.len()
        );
        Ok(1)
    } else {
        println!("verification passed: {} checks", report.lines.len());
        Ok(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_value_is_zero_and_flagged_beyond_capacity() {
        let xi = CombinatorialMatrix::from_raw(2, true, vec![2, 0, 0, 0]).unwrap();
        let model = SoftConfigModel::new(xi, 1).unwrap();
        let (p, impossible) = dyad_p_value(&model, 0, 0, 5);
        assert_eq!(p, 0.0);
        assert!(impossible);
    }

    #[test]
    fn p_value_is_one_when_all_outcomes_tie() {
        // Ξ all ones, m = 2: each single-ball dyad is drawn with marginal
        // probability 1/2, so both outcomes tie and the ordering sums to 1
        let xi = CombinatorialMatrix::from_raw(2, true, vec![1, 1, 1, 1]).unwrap();
        let model = SoftConfigModel::new(xi, 2).unwrap();
        for observed in [0, 1] {
            let (p, impossible) = dyad_p_value(&model, 0, 0, observed);
            assert!((p - 1.0).abs() < 1e-12, "observed {observed}: p {p}");
            assert!(!impossible);
        }
    }

    #[test]
    fn p_value_orders_by_probability_mass() {
        // Ξ = (3, 1), m = 1: marginals 3/4 and 1/4; observing the rare
        // outcome gives p = 1/4, the likely one p = 1
        let xi = CombinatorialMatrix::from_raw(2, true, vec![3, 1, 0, 0]).unwrap();
        let model = SoftConfigModel::new(xi, 1).unwrap();
        let (p_rare, _) = dyad_p_value(&model, 0, 0, 0);
        assert!((p_rare - 0.25).abs() < 1e-12, "p {p_rare}");
        let (p_mode, _) = dyad_p_value(&model, 0, 0, 1);
        assert!((p_mode - 1.0).abs() < 1e-12, "p {p_mode}");
    }
}
