//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with
//! the measured deviation and its pinned tolerance, then asserts it.
//!
//! The closed forms are checked against the brute-force oracles: exhaustive
//! support enumeration, exact rational arithmetic, the naive ball-by-ball
//! urn, and chi-square goodness-of-fit on large sample batches.

use std::collections::BTreeMap;
use std::time::Instant;

use ghype::{
    build_graph, chi_square_gof, chi_square_two_sample, combinatorial_matrix,
    degree_sequences, directed_preimages, enumerate_central_distribution, enumerate_support,
    exact_central_pmf, exact_expected_adjacency, fit_propensity, simulate_urn,
    CombinatorialMatrix, DegreeSequence, GHypEModel, MultiGraph, PropensityMatrix,
    QuadratureConfig, SoftConfigModel,
};
use num::{BigInt, BigRational, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Random composition of `total` into `n` non-negative parts.
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
    PropensityMatrix::from_row_major(n, directed, w).unwrap()
}

struct Instance {
    xi: CombinatorialMatrix,
    m: u64,
    omega: PropensityMatrix,
    support: Vec<MultiGraph>,
}

/// Fifty randomized small instances (n ∈ {2,3}, m ≤ 5, support ≤ 500) with
/// heterogeneous positive propensities, mixing directed and undirected.
fn standard_instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0001);
    let mut out = Vec::new();
    while out.len() < 50 {
        let n = rng.gen_range(2..=3_usize);
        let m = rng.gen_range(1..=5_u64);
        let directed = rng.gen_bool(0.5);
        let deg = if directed {
            DegreeSequence::Directed {
                k_out: composition(m, n, &mut rng),
                k_in: composition(m, n, &mut rng),
            }
        } else {
            DegreeSequence::Undirected {
                k: composition(2 * m, n, &mut rng),
            }
        };
        let xi = combinatorial_matrix(&deg).unwrap();
        let Ok(support) = enumerate_support(&xi, m, 500) else {
            continue;
        };
        let omega = random_omega(n, directed, &mut rng);
        out.push(Instance {
            xi,
            m,
            omega,
            support,
        });
    }
    out
}

#[test]
fn criterion_1_normalization() {
    let t0 = Instant::now();
    let instances = standard_instances();
    let mut worst_central = 0.0_f64;
    let mut worst_wallenius = 0.0_f64;
    for inst in &instances {
        let central = SoftConfigModel::new(inst.xi.clone(), inst.m).unwrap();
        let biased = GHypEModel::new(inst.xi.clone(), inst.omega.clone(), inst.m).unwrap();
        let mut sum_c = 0.0;
        let mut sum_w = 0.0;
        for g in &inst.support {
            sum_c += central.log_pmf(g).unwrap().exp();
            sum_w += biased.log_pmf_wallenius(g).unwrap().exp();
        }
        worst_central = worst_central.max((sum_c - 1.0).abs());
        worst_wallenius = worst_wallenius.max((sum_w - 1.0).abs());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst_central <= 1e-9 && worst_wallenius <= 1e-6 && elapsed < 60.0;
    println!(
        "criterion 1 normalization ({} instances): central |Σp−1| = {worst_central:.3e} (tol 1e-9), \
         wallenius |Σp−1| = {worst_wallenius:.3e} (tol 1e-6), {elapsed:.2}s (limit 60s): {}",
        instances.len(),
        verdict(pass)
    );
    assert!(pass);
}

#[test]
fn criterion_2_constant_propensity_reduction() {
    let instances = standard_instances();
    let mut worst = 0.0_f64;
    for inst in &instances {
        let central = SoftConfigModel::new(inst.xi.clone(), inst.m).unwrap();
        let uniform = GHypEModel::new(
            inst.xi.clone(),
            PropensityMatrix::uniform(inst.xi.n(), inst.xi.is_directed()),
            inst.m,
        )
        .unwrap();
        for g in &inst.support {
            let lc = central.log_pmf(g).unwrap();
            let lw = uniform.log_pmf_wallenius(g).unwrap();
            worst = worst.max(((lw - lc).exp() - 1.0).abs());
        }
    }
    let pass = worst <= 1e-8;
    println!(
        "criterion 2 constant-propensity reduction (every support point): \
         max relative deviation = {worst:.3e} (tol 1e-8): {}",
        verdict(pass)
    );
    assert!(pass);
}

fn random_undirected_graph(rng: &mut ChaCha8Rng) -> MultiGraph {
    let n = rng.gen_range(2..=3_usize);
    let m = rng.gen_range(1..=4_u64);
    let mut edges = Vec::new();
    for _ in 0..m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        edges.push((a.min(b), a.max(b), 1_u64));
    }
    build_graph(&edges, n, false).unwrap()
}

#[test]
fn criterion_3_directed_undirected_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0003);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let g = random_undirected_graph(&mut rng);
        let n = g.n();
        let m = g.edge_count();
        let deg = degree_sequences(&g);
        let DegreeSequence::Undirected { k } = &deg else {
            unreachable!()
        };
        let xi_u = combinatorial_matrix(&deg).unwrap();
        // the corresponding directed model pairs every stub of i with every
        // stub of j: Ξ_ij = k_i k_j from the undirected degrees
        let mut raw = vec![0_u64; n * n];
        for i in 0..n {
            for j in 0..n {
                raw[i * n + j] = k[i] * k[j];
            }
        }
        let xi_d = CombinatorialMatrix::from_raw(n, true, raw).unwrap();

        let model_u = SoftConfigModel::new(xi_u.clone(), m).unwrap();
        let model_d = SoftConfigModel::new(xi_d.clone(), m).unwrap();
        let preimages = directed_preimages(&g);
        let p_u = model_u.log_pmf(&g).unwrap().exp();
        let p_d: f64 = preimages
            .iter()
            .map(|d| model_d.log_pmf(d).unwrap().exp())
            .sum();
        worst = worst.max((p_d - p_u).abs() / p_u);

        let exact_u = exact_central_pmf(&xi_u, m, &g);
        let exact_d = preimages
            .iter()
            .map(|d| exact_central_pmf(&xi_d, m, d))
            .fold(BigRational::zero(), |acc, p| acc + p);
        assert!(exact_u > BigRational::zero());
        assert_eq!(exact_u, exact_d, "exact rational preimage sum mismatch");
    }
    let pass = worst <= 1e-10;
    println!(
        "criterion 3 directed↔undirected equivalence (20 graphs): rational path exactly equal, \
         float max relative deviation = {worst:.3e} (tol 1e-10): {}",
        verdict(pass)
    );
    assert!(pass);
}

#[test]
fn criterion_4_expected_degrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0004);
    let mut worst = 0.0_f64;
    for t in 0..20 {
        let directed = t % 2 == 0;
        let n = rng.gen_range(2..=5_usize);
        let m = rng.gen_range(1..=30_u64);
        let deg = if directed {
            DegreeSequence::Directed {
                k_out: composition(m, n, &mut rng),
                k_in: composition(m, n, &mut rng),
            }
        } else {
            DegreeSequence::Undirected {
                k: composition(2 * m, n, &mut rng),
            }
        };
        let xi = combinatorial_matrix(&deg).unwrap();

        // exact rational path reproduces the inducing degrees identically
        let exact = exact_expected_adjacency(&xi, m);
        let (rows, cols): (Vec<u64>, Vec<u64>) = match &deg {
            DegreeSequence::Directed { k_out, k_in } => (k_out.clone(), k_in.clone()),
            DegreeSequence::Undirected { k } => (k.clone(), k.clone()),
        };
        for i in 0..n {
            let row: BigRational = (0..n).map(|j| exact[i * n + j].clone()).sum();
            let col: BigRational = (0..n).map(|j| exact[j * n + i].clone()).sum();
            assert_eq!(row, BigRational::from_integer(BigInt::from(rows[i])));
            assert_eq!(col, BigRational::from_integer(BigInt::from(cols[i])));
        }

        // floating path
        let model = SoftConfigModel::new(xi, m).unwrap();
        let e = model.expected_adjacency();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| e[i * n + j]).sum();
            let col: f64 = (0..n).map(|j| e[j * n + i]).sum();
            worst = worst.max((row - rows[i] as f64).abs() / (rows[i] as f64).max(1.0));
            worst = worst.max((col - cols[i] as f64).abs() / (cols[i] as f64).max(1.0));
        }
    }
    let pass = worst <= 1e-12;
    println!(
        "criterion 4 expected degrees (20 degree sequences): rational path exact, \
         float max relative deviation = {worst:.3e} (tol 1e-12): {}",
        verdict(pass)
    );
    assert!(pass);
}

fn random_multigraph(rng: &mut ChaCha8Rng, directed: bool) -> MultiGraph {
    let n = rng.gen_range(3..=4_usize);
    let m = rng.gen_range(2 * n as u64..=3 * n as u64);
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
    build_graph(&edges, n, directed).unwrap()
}

#[test]
fn criterion_5_fit_round_trip() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0005);
    let mut accepted = 0;
    let mut worst = 0.0_f64;
    while accepted < 20 {
        let directed = accepted % 2 == 0;
        let g = random_multigraph(&mut rng, directed);
        let xi = combinatorial_matrix(&degree_sequences(&g)).unwrap();
        let saturated = xi
            .dyads()
            .any(|(i, j, balls)| g.dyad_draws(i, j) > 0 && g.dyad_draws(i, j) >= balls);
        if saturated {
            continue;
        }
        accepted += 1;
        let omega = fit_propensity(&g, &xi).unwrap();
        let model = GHypEModel::new(xi, omega, g.edge_count()).unwrap();
        for (e, &a) in model.mean_wallenius().iter().zip(g.adjacency_matrix()) {
            worst = worst.max((e - a as f64).abs());
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && elapsed < 10.0;
    println!(
        "criterion 5 fit round-trip (20 graphs): max |mean − A| = {worst:.3e} (tol 1e-6), \
         {elapsed:.2}s (limit 10s): {}",
        verdict(pass)
    );
    assert!(pass);
}

fn outcome_counts(samples: &[MultiGraph]) -> BTreeMap<Vec<u64>, u64> {
    let mut counts = BTreeMap::new();
    for g in samples {
        *counts.entry(g.adjacency_matrix().to_vec()).or_insert(0) += 1;
    }
    counts
}

/// Aligns outcome counts to support keys, asserting nothing fell outside.
fn aligned_counts(counts: &BTreeMap<Vec<u64>, u64>, keys: &[Vec<u64>]) -> Vec<u64> {
    let total: u64 = counts.values().sum();
    let aligned: Vec<u64> = keys
        .iter()
        .map(|k| counts.get(k).copied().unwrap_or(0))
        .collect();
    assert_eq!(
        aligned.iter().sum::<u64>(),
        total,
        "sampler produced an off-support outcome"
    );
    aligned
}

#[test]
fn criterion_6_sampler_exactness() {
    const SAMPLES: usize = 100_000;
    const THRESHOLD: f64 = 0.001;
    let mut p_values: Vec<(String, f64)> = Vec::new();

    // six-outcome uniform instance: Ξ all ones, m = 2
    let deg = DegreeSequence::Directed {
        k_out: vec![1, 1],
        k_in: vec![1, 1],
    };
    let xi = combinatorial_matrix(&deg).unwrap();
    let dist = enumerate_central_distribution(&xi, 2, 10_000).unwrap();
    let keys: Vec<Vec<u64>> = dist
        .entries
        .iter()
        .map(|(g, _)| g.adjacency_matrix().to_vec())
        .collect();
    let probs: Vec<f64> = dist
        .entries
        .iter()
        .map(|(_, p)| p.to_f64().unwrap())
        .collect();
    let omega = PropensityMatrix::uniform(2, true);
    let model = GHypEModel::new(xi.clone(), omega.clone(), 2).unwrap();
    let tree = aligned_counts(
        &outcome_counts(&model.sample_ghype_many(SAMPLES, 0xA11CE)),
        &keys,
    );
    let urn = aligned_counts(&simulate_urn(&xi, &omega, 2, SAMPLES as u64, 0xB0B), &keys);
    let soft = aligned_counts(
        &outcome_counts(
            &SoftConfigModel::new(xi.clone(), 2)
                .unwrap()
                .sample_many(SAMPLES, 0xCAFE),
        ),
        &keys,
    );
    p_values.push(("uniform/tree-gof".into(), chi_square_gof(&tree, &probs).2));
    p_values.push(("uniform/urn-gof".into(), chi_square_gof(&urn, &probs).2));
    p_values.push((
        "uniform/conditional-gof".into(),
        chi_square_gof(&soft, &probs).2,
    ));
    p_values.push((
        "uniform/pairwise".into(),
        chi_square_two_sample(&tree, &urn).2,
    ));

    // biased two-dyad instance: Ω = (2, 1), one ball each, m = 1, with
    // exact outcome probabilities 2/3 and 1/3
    let xi2 = CombinatorialMatrix::from_raw(2, true, vec![1, 1, 0, 0]).unwrap();
    let omega2 = PropensityMatrix::from_row_major(2, true, vec![2.0, 1.0, 1.0, 1.0]).unwrap();
    let model2 = GHypEModel::new(xi2.clone(), omega2.clone(), 1).unwrap();
    let keys2 = vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0]];
    let probs2 = vec![2.0 / 3.0, 1.0 / 3.0];
    let tree2 = aligned_counts(
        &outcome_counts(&model2.sample_ghype_many(SAMPLES, 0xD00D)),
        &keys2,
    );
    let urn2 = aligned_counts(
        &simulate_urn(&xi2, &omega2, 1, SAMPLES as u64, 0xFEED),
        &keys2,
    );
    p_values.push(("biased/tree-gof".into(), chi_square_gof(&tree2, &probs2).2));
    p_values.push(("biased/urn-gof".into(), chi_square_gof(&urn2, &probs2).2));
    p_values.push((
        "biased/pairwise".into(),
        chi_square_two_sample(&tree2, &urn2).2,
    ));

    let min_p = p_values.iter().map(|(_, p)| *p).fold(f64::INFINITY, f64::min);
    let pass = min_p > THRESHOLD;
    let detail: Vec<String> = p_values
        .iter()
        .map(|(name, p)| format!("{name} p={p:.3}"))
        .collect();
    println!(
        "criterion 6 sampler exactness (10^5 samples): {} (all must exceed p=0.001): {}",
        detail.join(", "),
        verdict(pass)
    );
    assert!(pass);
}

/// Enumeration mass of each instance bucketed per dyad value, as
/// (dyad, adjacency value) → probability sums.
fn marginal_buckets(
    xi: &CombinatorialMatrix,
    support: &[MultiGraph],
    probs: &[f64],
) -> Vec<((usize, usize), BTreeMap<u64, f64>)> {
    xi.dyads()
        .map(|(i, j, _)| {
            let mut mass: BTreeMap<u64, f64> = BTreeMap::new();
            for (g, p) in support.iter().zip(probs) {
                *mass.entry(g.adjacency(i, j)).or_insert(0.0) += p;
            }
            ((i, j), mass)
        })
        .collect()
}

fn max_adjacency(xi: &CombinatorialMatrix, i: usize, j: usize, balls: u64) -> u64 {
    if !xi.is_directed() && i == j {
        2 * balls
    } else {
        balls
    }
}

#[test]
fn criterion_7a_marginal_consistency_central() {
    let instances = standard_instances();
    let mut worst = 0.0_f64;
    for inst in &instances {
        let model = SoftConfigModel::new(inst.xi.clone(), inst.m).unwrap();
        let probs: Vec<f64> = inst
            .support
            .iter()
            .map(|g| model.log_pmf(g).unwrap().exp())
            .collect();
        for ((i, j), mass) in marginal_buckets(&inst.xi, &inst.support, &probs) {
            let balls = inst.xi.ball_count(i, j);
            for a in 0..=max_adjacency(&inst.xi, i, j, balls) {
                let closed = model.marginal_pmf(i, j, a).unwrap();
                let summed = mass.get(&a).copied().unwrap_or(0.0);
                worst = worst.max((closed - summed).abs());
            }
        }
    }
    let pass = worst <= 1e-9;
    println!(
        "criterion 7a marginal consistency (central): max |marginal − enumeration| = \
         {worst:.3e} (tol 1e-9): {}",
        verdict(pass)
    );
    assert!(pass);
}

#[test]
fn criterion_7b_marginal_consistency_wallenius() {
    let instances = standard_instances();
    let mut worst = 0.0_f64;
    for inst in &instances {
        let model = GHypEModel::new(inst.xi.clone(), inst.omega.clone(), inst.m).unwrap();
        let probs: Vec<f64> = inst
            .support
            .iter()
            .map(|g| model.log_pmf_wallenius(g).unwrap().exp())
            .collect();
        for ((i, j), mass) in marginal_buckets(&inst.xi, &inst.support, &probs) {
            let balls = inst.xi.ball_count(i, j);
            for a in 0..=max_adjacency(&inst.xi, i, j, balls) {
                let closed = model.marginal_pmf_wallenius(i, j, a).unwrap();
                let summed = mass.get(&a).copied().unwrap_or(0.0);
                worst = worst.max((closed - summed).abs());
            }
        }
    }
    let pass = worst <= 1e-6;
    println!(
        "criterion 7b marginal consistency (wallenius): max |marginal − enumeration| = \
         {worst:.3e} (tol 1e-6): {}",
        verdict(pass)
    );
    if !pass {
        println!(
            "  note: the dyadic marginal collapses all other dyads into a single color \
             carrying their draw-weighted average weight; that collapse is exact only when \
             the residual weights are homogeneous, so on heterogeneous instances the \
             closed form deviates from exact enumeration at the 1e-2 scale, far above \
             this tolerance"
        );
    }
    assert!(
        pass,
        "wallenius marginal deviates from enumeration by {worst:.3e} (> 1e-6); \
         the two-color collapse it uses is an approximation under heterogeneous weights"
    );
}

#[test]
fn criterion_8_performance() {
    let n = 2000_usize;
    let deg = DegreeSequence::Directed {
        k_out: vec![50; n],
        k_in: vec![50; n],
    };
    let xi = combinatorial_matrix(&deg).unwrap();
    let m = 100_000_u64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0008);
    let omega_raw: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let omega = PropensityMatrix::from_row_major(n, true, omega_raw).unwrap();
    let model = GHypEModel::new(xi, omega, m)
        .unwrap()
        .with_quadrature(QuadratureConfig::new(1e-10, 2048).unwrap());

    let t0 = Instant::now();
    let g = model.sample_ghype(0x8888);
    let sample_s = t0.elapsed().as_secs_f64();
    assert_eq!(g.edge_count(), m);

    let t1 = Instant::now();
    let lp = model.log_pmf_wallenius(&g).unwrap();
    let pmf_s = t1.elapsed().as_secs_f64();
    assert!(lp.is_finite() && lp < 0.0, "log pmf {lp}");

    let pass = sample_s < 5.0 && pmf_s < 1.0;
    println!(
        "criterion 8 performance (n=2000, m=10^5, dense Ξ, heterogeneous Ω): \
         sample {sample_s:.2}s (limit 5s), log_pmf_wallenius {pmf_s:.3}s (limit 1s) \
         at rel_tol 1e-10: {}",
        verdict(pass)
    );
    assert!(pass);
}
