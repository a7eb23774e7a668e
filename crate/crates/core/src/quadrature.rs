//! Adaptive integration over the real line for integrands carrying a
//! Gaussian factor `e^{-y^2}` times a polynomial.
//!
//! The line is truncated to `[-Y, Y]` (see [`tail_cutoff`]) and integrated
//! by global adaptive bisection with a 7/15-point Gauss-Kronrod pair per
//! panel. Panel sums are combined in position order with pairwise summation
//! so the result does not depend on refinement history.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("integrand is not finite at y = {y}")]
    NonFinite { y: f64 },
    #[error(
        "non-removable singularity at y = {y}: guarded ratio {ratio:e} vs local median {median:e}"
    )]
    NonRemovableSingularity { y: f64, ratio: f64, median: f64 },
    #[error("quadrature did not converge: value {value}, error estimate {abs_error_estimate:e} after {evaluations} evaluations")]
    NotConverged {
        value: f64,
        abs_error_estimate: f64,
        evaluations: usize,
    },
    #[error("invalid quadrature input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evaluations: usize,
    /// Overrides the derived truncation point `Y` when set.
    pub tail_cutoff: Option<f64>,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_evaluations: 2_000_000,
            tail_cutoff: None,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), QuadError> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_evaluations > 0
            && self.tail_cutoff.map_or(true, |y| y > 0.0 && y.is_finite());
        if ok {
            Ok(())
        } else {
            Err(QuadError::InvalidInput(format!(
                "tolerances, evaluation budget and cutoff must be positive: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    /// Turns a non-converged result into an error.
    pub fn require_converged(self) -> Result<Self, QuadError> {
        if self.converged {
            Ok(self)
        } else {
            Err(QuadError::NotConverged {
                value: self.value,
                abs_error_estimate: self.abs_error_estimate,
                evaluations: self.evaluations,
            })
        }
    }
}

/// Truncation point for an integrand bounded by `C |y|^d e^{-y^2}`.
///
/// With `Y^2 = d ln(d + e) + 2 ln(1/abs_tol)` and `Y <= d + e` we get
/// `d ln Y <= d ln(d + e)`, hence `Y^d e^{-Y^2} <= abs_tol^2`, and the
/// discarded tail `~ Y^{d-1} e^{-Y^2}` sits far below `abs_tol` for the
/// O(1) constants of normalized Hermite densities.
pub fn tail_cutoff(config: &QuadConfig, degree_hint: usize) -> f64 {
    if let Some(y) = config.tail_cutoff {
        return y;
    }
    let d = degree_hint as f64;
    (d * (d + std::f64::consts::E).ln() + 2.0 * (1.0 / config.abs_tol).ln()).sqrt()
}

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// One Gauss-Kronrod panel; returns the Kronrod value and a QUADPACK-style
/// scaled error estimate.
fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Panel, QuadError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |y: f64| -> Result<f64, QuadError> {
        let v = f(y)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { y })
        }
    };
    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = eval(center - dx)?;
        let hi = eval(center + dx)?;
        f1[j] = lo;
        f2[j] = hi;
        kronrod += WGK[j] * (lo + hi);
        abs_sum += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        a,
        b,
        value: kronrod * half,
        error: err,
    })
}

/// Max-heap entry: largest error first, leftmost panel on ties.
struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .error
            .total_cmp(&other.0.error)
            .then_with(|| other.0.a.total_cmp(&self.0.a))
    }
}

pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

fn totals(panels: &[Panel]) -> (f64, f64) {
    let mut sorted: Vec<Panel> = panels.to_vec();
    sorted.sort_by(|p, q| p.a.total_cmp(&q.a));
    let values: Vec<f64> = sorted.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = sorted.iter().map(|p| p.error).collect();
    (pairwise_sum(&values), pairwise_sum(&errors))
}

/// Adaptive integration of a fallible integrand over `[lo, hi]`, starting
/// from `initial_panels` equal panels.
pub(crate) fn integrate_interval<F>(
    f: F,
    lo: f64,
    hi: f64,
    initial_panels: usize,
    config: &QuadConfig,
) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> Result<f64, QuadError>,
{
    config.validate()?;
    let count = initial_panels.max(1);
    let width = (hi - lo) / count as f64;
    let mut heap = BinaryHeap::with_capacity(count * 4);
    let mut evaluations = 0usize;
    let mut err_sum = 0.0;
    let mut val_sum = 0.0;
    for i in 0..count {
        let a = lo + width * i as f64;
        let b = if i + 1 == count {
            hi
        } else {
            lo + width * (i + 1) as f64
        };
        let p = gk15(&f, a, b)?;
        evaluations += 15;
        err_sum += p.error;
        val_sum += p.value;
        heap.push(ByError(p));
    }
    let tolerance = |v: f64| config.abs_tol.max(config.rel_tol * v.abs());
    let exact_totals = |heap: &BinaryHeap<ByError>| {
        let panels: Vec<Panel> = heap.iter().map(|e| e.0).collect();
        totals(&panels)
    };
    let mut splits = 0usize;
    loop {
        // Running sums drift; resync before every decision and periodically.
        if err_sum <= 1.001 * tolerance(val_sum) || splits % 1024 == 0 {
            let (v, e) = exact_totals(&heap);
            val_sum = v;
            err_sum = e;
            if e <= tolerance(v) {
                return Ok(QuadResult {
                    value: v,
                    abs_error_estimate: e,
                    evaluations,
                    converged: true,
                });
            }
        }
        let worst = heap.peek().map(|e| e.0).expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = !(worst.a < mid && mid < worst.b)
            || (worst.b - worst.a) < 64.0 * f64::EPSILON * (1.0 + worst.a.abs().max(worst.b.abs()));
        if evaluations + 30 > config.max_evaluations || too_narrow {
            let (v, e) = exact_totals(&heap);
            return Ok(QuadResult {
                value: v,
                abs_error_estimate: e,
                evaluations,
                converged: e <= tolerance(v),
            });
        }
        heap.pop();
        let left = gk15(&f, worst.a, mid)?;
        let right = gk15(&f, mid, worst.b)?;
        evaluations += 30;
        splits += 1;
        err_sum += left.error + right.error - worst.error;
        val_sum += left.value + right.value - worst.value;
        heap.push(ByError(left));
        heap.push(ByError(right));
    }
}

fn initial_panel_count(degree_hint: usize) -> usize {
    let n = degree_hint.max(16);
    n + n % 2
}

/// Integrates `integrand` over the real line.
///
/// `degree_hint` bounds the polynomial degree multiplying `e^{-y^2}` and sets
/// both the truncation point and the initial panel count. A result that hits
/// `max_evaluations` comes back with `converged = false`.
pub fn integrate_real_line<F>(
    integrand: F,
    config: &QuadConfig,
    degree_hint: usize,
) -> Result<QuadResult, QuadError>
where
    F: Fn(f64) -> f64,
{
    let y = tail_cutoff(config, degree_hint);
    integrate_interval(
        |t| Ok(integrand(t)),
        -y,
        y,
        initial_panel_count(degree_hint),
        config,
    )
}

/// Denominators below this are treated as sitting on a node.
pub const NODE_DEN_FLOOR: f64 = 1e-300;

/// Threshold for declaring a guarded node value non-removable.
pub const NON_REMOVABLE_FACTOR: f64 = 1e12;

/// Evaluates `num(y)/den(y)` with the continuity fill for removable
/// singularities: on a node the value is the mean of the ratio at
/// `y +- h_node`, `h_node = 1e-7 (1 + |y|)`.
pub fn guarded_ratio<N, D>(num: &N, den: &D, y: f64) -> Result<f64, QuadError>
where
    N: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let d = den(y);
    if d >= NODE_DEN_FLOOR {
        return Ok(num(y) / d);
    }
    let raw = |t: f64| {
        let dt = den(t);
        if dt >= NODE_DEN_FLOOR {
            Some(num(t) / dt)
        } else {
            None
        }
    };
    let h = 1e-7 * (1.0 + y.abs());
    let (lo, hi) = match (raw(y - h), raw(y + h)) {
        (Some(lo), Some(hi)) => (lo, hi),
        // Both neighbours underflow as well: deep Gaussian tail.
        _ => return Ok(0.0),
    };
    let fill = 0.5 * (lo + hi);
    let w = 0.25 * (1.0 + y.abs());
    let mut around: Vec<f64> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .filter_map(|k| raw(y + k * w))
        .map(f64::abs)
        .collect();
    around.sort_by(f64::total_cmp);
    let median = match around.len() {
        0 => 0.0,
        n if n % 2 == 1 => around[n / 2],
        n => 0.5 * (around[n / 2 - 1] + around[n / 2]),
    };
    if fill.abs() > NON_REMOVABLE_FACTOR * median.max(f64::MIN_POSITIVE) {
        return Err(QuadError::NonRemovableSingularity {
            y,
            ratio: fill,
            median,
        });
    }
    Ok(fill)
}

/// Integrates `num/den` over the real line where `den >= 0` has only
/// isolated double zeros shared with `num`.
pub fn integrate_ratio<N, D>(
    num: N,
    den: D,
    config: &QuadConfig,
    degree_hint: usize,
) -> Result<QuadResult, QuadError>
where
    N: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let y = tail_cutoff(config, degree_hint);
    integrate_interval(
        |t| guarded_ratio(&num, &den, t),
        -y,
        y,
        initial_panel_count(degree_hint),
        config,
    )
}
