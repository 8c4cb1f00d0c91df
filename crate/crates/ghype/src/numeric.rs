//! Shared numerical kernels: log-gamma and log-binomial arithmetic, adaptive
//! quadrature for sharply peaked integrands on the unit interval, and the
//! regularized incomplete gamma function used for chi-square p-values.
//!
//! All probability math elsewhere in the crate is carried in natural-log
//! space; these kernels are the only place raw combinatorial magnitudes are
//! touched.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use thiserror::Error;

/// Errors raised by the adaptive quadrature routine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("tolerance not met after {panels} panels (estimated relative error {achieved:.3e}, requested {requested:.3e})")]
    ToleranceNotMet {
        panels: usize,
        achieved: f64,
        requested: f64,
    },
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),
}

/// Tolerances for [`integrate_unit_interval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Target relative error of the integral value.
    pub rel_tol: f64,
    /// Hard cap on the number of adaptive panels.
    pub max_subdivisions: usize,
}

impl QuadratureConfig {
    pub fn new(rel_tol: f64, max_subdivisions: usize) -> Result<Self, QuadratureError> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
            return Err(QuadratureError::InvalidConfig(format!(
                "rel_tol must lie in (0, 1e-2], got {rel_tol}"
            )));
        }
        if max_subdivisions < 16 {
            return Err(QuadratureError::InvalidConfig(format!(
                "max_subdivisions must be at least 16, got {max_subdivisions}"
            )));
        }
        Ok(Self {
            rel_tol,
            max_subdivisions,
        })
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_subdivisions: 2048,
        }
    }
}

/// Kahan compensated accumulator for long f64 sums.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, term: f64) {
        let y = term - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Natural log of the gamma function for positive arguments.
///
/// Lanczos approximation with g = 7 and 9 coefficients; relative error is
/// a few ulps across the range used here (integer arguments >= 1).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    let z = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

const LN_FACT_TABLE_LEN: usize = 1024;

fn ln_factorial_table() -> &'static [f64; LN_FACT_TABLE_LEN] {
    static TABLE: OnceLock<[f64; LN_FACT_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0.0_f64; LN_FACT_TABLE_LEN];
        // Kahan accumulation keeps the table accurate to ~1 ulp throughout.
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        for (n, entry) in table.iter_mut().enumerate().skip(1) {
            let term = (n as f64).ln() - comp;
            let t = sum + term;
            comp = (t - sum) - term;
            sum = t;
            *entry = sum;
        }
        table
    })
}

/// Natural log of n!.
///
/// Table lookup below 1024, Stirling series with three correction terms
/// beyond (absolute truncation error < 1e-19 there).
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACT_TABLE_LEN {
        ln_factorial_table()[n as usize]
    } else {
        let x = n as f64;
        let x2 = x * x;
        (x + 0.5) * x.ln() - x
            + 0.5 * (2.0 * std::f64::consts::PI).ln()
            + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x2)
            + 1.0 / (1260.0 * x2 * x2 * x)
    }
}

/// Exact binomial coefficient in 128-bit arithmetic; valid for n <= 60
/// (C(60, 30) fits comfortably in u128).
fn binomial_exact_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// ln C(n, k) as a total function: -inf when k < 0 or k > n.
///
/// Exact integer arithmetic for n <= 60, ln-factorial differences beyond.
pub fn log_binomial(n: u64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    if n <= 60 {
        (binomial_exact_u128(n, k) as f64).ln()
    } else {
        // grouping the subtrahends keeps the result exactly symmetric in
        // k <-> n - k (f64 addition commutes; subtraction does not associate)
        ln_factorial(n) - (ln_factorial(k) + ln_factorial(n - k))
    }
}

/// ln(exp(a) + exp(b)) without overflow; respects -inf identities.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

// 15-point Kronrod nodes (positive half) and weights, with the embedded
// 7-point Gauss weights, as tabulated in QUADPACK's qk15.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.000_000_000_000_000_0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// One Gauss-Kronrod 15(7) evaluation of `f` over `[lo, hi]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    let mut res_abs = 0.0;
    for (j, &x) in XGK.iter().enumerate() {
        let (fa, fb) = if j == 7 {
            let fc = f(center);
            (fc, 0.0)
        } else {
            (f(center - half * x), f(center + half * x))
        };
        let fsum = fa + fb;
        kronrod += WGK[j] * fsum;
        res_abs += WGK[j] * (fa.abs() + fb.abs());
        if j % 2 == 1 {
            // odd indices carry the embedded Gauss rule; the center node
            // (j = 7) pairs with WG[3] and enters with fb = 0
            gauss += WG[j / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let diff = (kronrod - gauss) * half;
    let round_floor = 50.0 * f64::EPSILON * res_abs * half.abs();
    let error = diff.abs().max(round_floor);
    Panel {
        lo,
        hi,
        value,
        error,
    }
}

/// Result of scanning for the maximum of a transformed log-integrand.
struct PeakEstimate {
    u: f64,
    log_value: f64,
}

/// Coarse scan plus golden-section refinement of `g`'s maximum on (0,1).
fn locate_max<G: Fn(f64) -> f64>(g: &G) -> PeakEstimate {
    const SCAN: usize = 33;
    let mut best_u = 0.5;
    let mut best_v = f64::NEG_INFINITY;
    for i in 1..=SCAN {
        let u = i as f64 / (SCAN as f64 + 1.0);
        let v = g(u);
        if v > best_v {
            best_v = v;
            best_u = u;
        }
    }
    if best_v == f64::NEG_INFINITY {
        return PeakEstimate {
            u: 0.5,
            log_value: f64::NEG_INFINITY,
        };
    }
    let step = 1.0 / (SCAN as f64 + 1.0);
    let mut lo = (best_u - step).max(1e-12);
    let mut hi = (best_u + step).min(1.0 - 1e-12);
    // golden-section shrink of the bracket around the scan winner
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..40 {
        if hi - lo < 1e-6 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        }
    }
    let u = 0.5 * (lo + hi);
    let v = g(u);
    if v >= best_v {
        PeakEstimate { u, log_value: v }
    } else {
        PeakEstimate {
            u: best_u,
            log_value: best_v,
        }
    }
}

/// ln of the integral over (0,1) of exp(log_integrand), with the integrand
/// given as a function of z.
///
/// Thin wrapper over [`integrate_unit_interval_ln`] for integrands whose
/// mass sits at representable z; peaked ensemble integrands whose mass
/// lives below the f64 underflow threshold must use the ln-z form
/// directly.
pub fn integrate_unit_interval<F>(
    log_integrand: F,
    peak_hint: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let hint_ln = if peak_hint.is_finite() && peak_hint > 0.0 {
        peak_hint.min(1.0 - 1e-16).ln()
    } else {
        0.5_f64.ln()
    };
    integrate_unit_interval_ln(|ln_z| log_integrand(ln_z.exp()), hint_ln, cfg)
}

/// ln of the integral over (0,1) of exp(log_integrand(ln z)) dz.
///
/// The integrand is supplied as a function of **ln z** because the mass of
/// a Wallenius-type integrand with M ≫ m concentrates at ln z values far
/// below the f64 underflow threshold for z itself; callers form the
/// per-dyad exponents w·ln z, which stay moderate.
///
/// The routine reparametrizes z = u^p, choosing p iteratively so the
/// transformed integrand G(u) = ln p + (p−1) ln u + f(p ln u) peaks near
/// the middle of the interval, then refines adaptive Gauss-Kronrod panels
/// on exp(G(u) − G_max) until the summed error estimate drops below
/// `rel_tol` times the summed value.
///
/// `peak_hint_ln` (the ln of the advisory peak location, any non-positive
/// value) seeds the reparametrization and is discarded if the bracketing
/// scan disagrees. Returns −∞ for an identically vanishing integrand.
pub fn integrate_unit_interval_ln<F>(
    log_integrand: F,
    peak_hint_ln: f64,
    cfg: &QuadratureConfig,
) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    let hint_ln = if peak_hint_ln.is_finite() && peak_hint_ln < 0.0 {
        peak_hint_ln
    } else {
        0.5_f64.ln()
    };
    let mut p = (hint_ln / 0.5_f64.ln()).clamp(1e-9, 1e15);

    // transformed log-integrand: G(u) = ln p + (p-1) ln u + f(p ln u)
    let transformed = |p: f64| {
        let f = &log_integrand;
        move |u: f64| p.ln() + (p - 1.0) * u.ln() + f(p * u.ln())
    };

    let mut peak = locate_max(&transformed(p));
    for _ in 0..6 {
        if peak.log_value == f64::NEG_INFINITY || (0.3..=0.7).contains(&peak.u) {
            break;
        }
        // when the transformed integrand is already nearly flat, chasing
        // its argmax to an endpoint only manufactures a u^(p-1) singularity
        let central = transformed(p)(0.5);
        if peak.log_value - central < 2.0 {
            break;
        }
        let ln_z_peak = p * peak.u.clamp(1e-6, 1.0 - 1e-6).ln();
        let candidate = (ln_z_peak / 0.5_f64.ln()).clamp(1e-9, 1e15);
        // geometric damping avoids endpoint ping-pong on hard shapes
        let next = (p * candidate).sqrt();
        if (next / p - 1.0).abs() < 1e-3 {
            break;
        }
        p = next;
        peak = locate_max(&transformed(p));
    }

    if peak.log_value == f64::NEG_INFINITY {
        // nothing finite found anywhere: identically-zero integrand
        return Ok(f64::NEG_INFINITY);
    }

    let g = transformed(p);
    let g_max = peak.log_value;
    let shifted = |u: f64| {
        let v = g(u) - g_max;
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            v.exp()
        }
    };

    // initial panels: uniform split keeps the peak interior to some panel
    const INITIAL: usize = 8;
    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    for i in 0..INITIAL {
        let lo = i as f64 / INITIAL as f64;
        let hi = (i + 1) as f64 / INITIAL as f64;
        heap.push(gk15(&shifted, lo, hi));
    }

    let totals = |heap: &BinaryHeap<Panel>| {
        let mut value = 0.0_f64;
        let mut vc = 0.0_f64;
        let mut error = 0.0_f64;
        for panel in heap.iter() {
            let t = panel.value - vc;
            let s = value + t;
            vc = (s - value) - t;
            value = s;
            error += panel.error;
        }
        (value, error)
    };

    loop {
        let (value, error) = totals(&heap);
        if value > 0.0 && error <= cfg.rel_tol * value {
            return Ok(g_max + value.ln());
        }
        if heap.len() >= cfg.max_subdivisions {
            let achieved = if value > 0.0 { error / value } else { f64::INFINITY };
            return Err(QuadratureError::ToleranceNotMet {
                panels: heap.len(),
                achieved,
                requested: cfg.rel_tol,
            });
        }
        let worst = heap.pop().expect("heap holds the initial panels");
        let mid = 0.5 * (worst.lo + worst.hi);
        heap.push(gk15(&shifted, worst.lo, mid));
        heap.push(gk15(&shifted, mid, worst.hi));
    }
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a).
///
/// Series expansion for x < a + 1, continued fraction otherwise; the
/// standard pairing that converges quickly on both sides.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q requires a > 0, x >= 0");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_contfrac(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_contfrac(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Survival probability of a chi-square statistic with `dof` degrees of
/// freedom.
pub fn chi_square_sf(stat: f64, dof: u64) -> f64 {
    gamma_q(dof as f64 / 2.0, stat / 2.0)
}
