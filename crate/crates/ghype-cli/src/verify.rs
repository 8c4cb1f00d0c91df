//! Randomized self-verification: checks the closed forms and samplers
//! against the enumeration, rational-arithmetic, and naive-urn oracles on
//! seed-pinned small instances.

use ghype::{
    build_graph, chi_square_gof, chi_square_two_sample, combinatorial_matrix, degree_sequences,
    directed_preimages, enumerate_support, exact_central_pmf, fit_propensity,
    simulate_urn, CombinatorialMatrix, DegreeSequence, GHypEModel, MultiGraph, PropensityMatrix,
    SoftConfigModel, DEFAULT_SUPPORT_CAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{input_err, CliError};

pub struct VerifyReport {
    pub lines: Vec<String>,
    pub failures: usize,
}

/// Enumeration ceiling, overridable via `GHYPE_MAX_SUPPORT`.
fn support_cap() -> Result<usize, CliError> {
    match std::env::var("GHYPE_MAX_SUPPORT") {
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_SUPPORT_CAP),
        Err(e) => Err(input_err(format!("GHYPE_MAX_SUPPORT: {e}"))),
        Ok(text) => text
            .parse::<usize>()
            .ok()
            .filter(|&cap| cap > 0)
            .ok_or_else(|| {
                input_err(format!(
                    "GHYPE_MAX_SUPPORT `{text}` is not a positive integer"
                ))
            }),
    }
}

fn composition(total: u64, n: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut k = vec![0_u64; n];
    for _ in 0..total {
        k[rng.gen_range(0..n)] += 1;
    }
    k
}

fn random_omega(n: usize, directed: bool, rng: &mut ChaCha8Rng) -> PropensityMatrix {
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if directed || j >= i {
                let v = rng.gen_range(-1.2..1.2_f64).exp();
                w[i * n + j] = v;
                if !directed {
                    w[j * n + i] = v;
                }
            }
        }
    }
    PropensityMatrix::from_row_major(n, directed, w).expect("generated propensities are valid")
}

struct Instance {
    xi: CombinatorialMatrix,
    m: u64,
    omega: PropensityMatrix,
    support: Vec<MultiGraph>,
}

fn random_instances(
    count: usize,
    max_n: usize,
    max_m: u64,
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Instance>, String> {
    let mut out = Vec::new();
    for _ in 0..200 {
        if out.len() == count {
            return Ok(out);
        }
        let n = rng.gen_range(2..=max_n.max(2));
        let m = rng.gen_range(1..=max_m.max(1));
        let directed = rng.gen_bool(0.5);
        let deg = if directed {
            DegreeSequence::Directed {
                k_out: composition(m, n, rng),
                k_in: composition(m, n, rng),
            }
        } else {
            DegreeSequence::Undirected {
                k: composition(2 * m, n, rng),
            }
        };
        let xi = combinatorial_matrix(&deg).expect("generated degrees fit in u64");
        let Ok(support) = enumerate_support(&xi, m, cap) else {
            continue;
        };
        let omega = random_omega(n, directed, rng);
        out.push(Instance {
            xi,
            m,
            omega,
            support,
        });
    }
    Err(format!(
        "could not generate {count} instances within the support cap {cap}; \
         raise GHYPE_MAX_SUPPORT or lower --max-n/--max-m"
    ))
}

fn random_graph(max_n: usize, max_m: u64, directed: bool, rng: &mut ChaCha8Rng) -> MultiGraph {
    let n = rng.gen_range(2..=max_n.max(2));
    let m = rng.gen_range(1..=max_m.max(1));
    let mut edges = Vec::new();
    for _ in 0..m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if directed {
            edges.push((a, b, 1_u64));
        } else {
            edges.push((a.min(b), a.max(b), 1_u64));
        }
    }
    build_graph(&edges, n, directed).expect("generated edges are in range")
}

pub fn run_verify(max_n: usize, max_m: u64, seed: u64) -> Result<VerifyReport, CliError> {
    let cap = support_cap()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport {
        lines: Vec::new(),
        failures: 0,
    };
    let record = |name: &str, outcome: Result<String, String>, report: &mut VerifyReport| {
        match outcome {
            Ok(detail) => report.lines.push(format!("{name}: PASS ({detail})")),
            Err(detail) => {
                report.failures += 1;
                report.lines.push(format!("{name}: FAIL ({detail})"));
            }
        }
    };

    let instances = match random_instances(10, max_n, max_m, cap, &mut rng) {
        Ok(instances) => instances,
        Err(msg) => {
            report.failures += 1;
            report.lines.push(format!("instance generation: FAIL ({msg})"));
            return Ok(report);
        }
    };

    record("normalization", check_normalization(&instances), &mut report);
    record(
        "constant-propensity reduction",
        check_reduction(&instances),
        &mut report,
    );
    record(
        "preimage equivalence",
        check_equivalence(max_n, max_m, &mut rng),
        &mut report,
    );
    record("fit round-trip", check_fit_round_trip(&mut rng), &mut report);
    record("sampler chi-square", check_samplers(), &mut report);
    Ok(report)
}

fn check_normalization(instances: &[Instance]) -> Result<String, String> {
    let mut worst_central = 0.0_f64;
    let mut worst_wallenius = 0.0_f64;
    for inst in instances {
        let central = SoftConfigModel::new(inst.xi.clone(), inst.m)
            .map_err(|e| format!("model construction: {e}"))?;
        let biased = GHypEModel::new(inst.xi.clone(), inst.omega.clone(), inst.m)
            .map_err(|e| format!("model construction: {e}"))?;
        let mut sum_c = 0.0;
        let mut sum_w = 0.0;
        for g in &inst.support {
            sum_c += central.log_pmf(g).map_err(|e| e.to_string())?.exp();
            sum_w += biased
                .log_pmf_wallenius(g)
                .map_err(|e| e.to_string())?
                .exp();
        }
        worst_central = worst_central.max((sum_c - 1.0).abs());
        worst_wallenius = worst_wallenius.max((sum_w - 1.0).abs());
    }
    let detail = format!(
        "{} instances: central |Σp−1| {worst_central:.2e} ≤ 1e-9, wallenius {worst_wallenius:.2e} ≤ 1e-6",
        instances.len()
    );
    if worst_central <= 1e-9 && worst_wallenius <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_reduction(instances: &[Instance]) -> Result<String, String> {
    let mut worst = 0.0_f64;
    for inst in instances {
        let central = SoftConfigModel::new(inst.xi.clone(), inst.m)
            .map_err(|e| format!("model construction: {e}"))?;
        let uniform = GHypEModel::new(
            inst.xi.clone(),
            PropensityMatrix::uniform(inst.xi.n(), inst.xi.is_directed()),
            inst.m,
        )
        .map_err(|e| format!("model construction: {e}"))?;
        for g in &inst.support {
            let lc = central.log_pmf(g).map_err(|e| e.to_string())?;
            let lw = uniform.log_pmf_wallenius(g).map_err(|e| e.to_string())?;
            worst = worst.max(((lw - lc).exp() - 1.0).abs());
        }
    }
    let detail = format!("max relative deviation {worst:.2e} ≤ 1e-8");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_equivalence(max_n: usize, max_m: u64, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0_f64;
    for _ in 0..8 {
        let g = random_graph(max_n.min(3), max_m.min(4), false, rng);
        let n = g.n();
        let m = g.edge_count();
        let deg = degree_sequences(&g);
        let DegreeSequence::Undirected { k } = &deg else {
            unreachable!()
        };
        let xi_u = combinatorial_matrix(&deg).map_err(|e| e.to_string())?;
        let mut raw = vec![0_u64; n * n];
        for i in 0..n {
            for j in 0..n {
                raw[i * n + j] = k[i] * k[j];
            }
        }
        let xi_d = CombinatorialMatrix::from_raw(n, true, raw).map_err(|e| e.to_string())?;
        let preimages = directed_preimages(&g);

        let exact_u = exact_central_pmf(&xi_u, m, &g);
        let exact_d = preimages
            .iter()
            .map(|d| exact_central_pmf(&xi_d, m, d))
            .reduce(|acc, p| acc + p)
            .expect("at least one preimage exists");
        if exact_u != exact_d {
            return Err(format!(
                "rational preimage sum mismatch: {exact_u} vs {exact_d}"
            ));
        }

        let model_u = SoftConfigModel::new(xi_u, m).map_err(|e| e.to_string())?;
        let model_d = SoftConfigModel::new(xi_d, m).map_err(|e| e.to_string())?;
        let p_u = model_u.log_pmf(&g).map_err(|e| e.to_string())?.exp();
        let p_d: f64 = preimages
            .iter()
            .map(|d| model_d.log_pmf(d).map(f64::exp))
            .sum::<Result<f64, _>>()
            .map_err(|e| e.to_string())?;
        worst = worst.max((p_d - p_u).abs() / p_u);
    }
    let detail = format!("8 graphs: rational sums equal, float deviation {worst:.2e} ≤ 1e-10");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_fit_round_trip(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0_f64;
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < 8 {
        attempts += 1;
        if attempts > 500 {
            return Err("could not generate unsaturated graphs".into());
        }
        let directed = accepted % 2 == 0;
        let g = random_graph(4, 12, directed, rng);
        let xi = combinatorial_matrix(&degree_sequences(&g)).map_err(|e| e.to_string())?;
        let saturated = xi
            .dyads()
            .any(|(i, j, balls)| g.dyad_draws(i, j) > 0 && g.dyad_draws(i, j) >= balls);
        if saturated {
            continue;
        }
        accepted += 1;
        let omega = fit_propensity(&g, &xi).map_err(|e| e.to_string())?;
        let model = GHypEModel::new(xi, omega, g.edge_count()).map_err(|e| e.to_string())?;
        for (e, &a) in model.mean_wallenius().iter().zip(g.adjacency_matrix()) {
            worst = worst.max((e - a as f64).abs());
        }
    }
    let detail = format!("8 graphs: max |mean − A| {worst:.2e} ≤ 1e-6");
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check_samplers() -> Result<String, String> {
    const SAMPLES: usize = 20_000;
    const THRESHOLD: f64 = 0.001;
    let mut min_p = f64::INFINITY;

    // six-outcome uniform instance
    let deg = DegreeSequence::Directed {
        k_out: vec![1, 1],
        k_in: vec![1, 1],
    };
    let xi = combinatorial_matrix(&deg).map_err(|e| e.to_string())?;
    let omega = PropensityMatrix::uniform(2, true);
    let support = enumerate_support(&xi, 2, 100).map_err(|e| e.to_string())?;
    let keys: Vec<Vec<u64>> = support
        .iter()
        .map(|g| g.adjacency_matrix().to_vec())
        .collect();
    let probs = vec![1.0 / 6.0; 6];
    let model = GHypEModel::new(xi.clone(), omega.clone(), 2).map_err(|e| e.to_string())?;
    let mut tree = vec![0_u64; keys.len()];
    for g in model.sample_ghype_many(SAMPLES, 0x7EE5) {
        let idx = keys
            .iter()
            .position(|k| k == g.adjacency_matrix())
            .ok_or("tree sampler produced an off-support outcome")?;
        tree[idx] += 1;
    }
    let urn_counts = simulate_urn(&xi, &omega, 2, SAMPLES as u64, 0x1234);
    let mut urn = vec![0_u64; keys.len()];
    for (key, count) in &urn_counts {
        let idx = keys
            .iter()
            .position(|k| k == key)
            .ok_or("urn oracle produced an off-support outcome")?;
        urn[idx] = *count;
    }
    min_p = min_p.min(chi_square_gof(&tree, &probs).2);
    min_p = min_p.min(chi_square_gof(&urn, &probs).2);
    min_p = min_p.min(chi_square_two_sample(&tree, &urn).2);

    // biased two-dyad instance with exact probabilities 2/3 and 1/3
    let xi2 = CombinatorialMatrix::from_raw(2, true, vec![1, 1, 0, 0]).map_err(|e| e.to_string())?;
    let omega2 = PropensityMatrix::from_row_major(2, true, vec![2.0, 1.0, 1.0, 1.0])
        .map_err(|e| e.to_string())?;
    let model2 = GHypEModel::new(xi2.clone(), omega2.clone(), 1).map_err(|e| e.to_string())?;
    let keys2: Vec<Vec<u64>> = vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0]];
    let probs2 = vec![2.0 / 3.0, 1.0 / 3.0];
    let mut tree2 = vec![0_u64; 2];
    for g in model2.sample_ghype_many(SAMPLES, 0x5151) {
        let idx = keys2
            .iter()
            .position(|k| k == g.adjacency_matrix())
            .ok_or("tree sampler produced an off-support outcome")?;
        tree2[idx] += 1;
    }
    let urn2_counts = simulate_urn(&xi2, &omega2, 1, SAMPLES as u64, 0x6789);
    let mut urn2 = vec![0_u64; 2];
    for (key, count) in &urn2_counts {
        let idx = keys2
            .iter()
            .position(|k| k == key)
            .ok_or("urn oracle produced an off-support outcome")?;
        urn2[idx] = *count;
    }
    min_p = min_p.min(chi_square_gof(&tree2, &probs2).2);
    min_p = min_p.min(chi_square_gof(&urn2, &probs2).2);
    min_p = min_p.min(chi_square_two_sample(&tree2, &urn2).2);

    let detail = format!("2 instances × (tree gof, urn gof, pairwise): min p {min_p:.3} > {THRESHOLD}");
    if min_p > THRESHOLD {
        Ok(detail)
    } else {
        Err(detail)
    }
}
