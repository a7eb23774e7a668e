//! Monte Carlo check of the Cramer-Rao bound: inverse-CDF sampling from a
//! model density, maximum-likelihood fits of `(mu, sigma)`, and comparison
//! of the empirical estimator covariance with `I^{-1}`.

use crate::geometry::{crb_bound, metric_preferred, CrbBound, GeometryError};
use crate::models::{kernel, KernelFn, ModelError, ModelPoint, StateSpec};
use crate::quadrature::{
    integrate_interval, integrate_real_line, tail_cutoff, QuadConfig, QuadError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::SQRT_2;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid request: {0}")]
    InvalidInput(String),
    #[error("degenerate sample batch: {0}")]
    Degenerate(String),
    #[error(
        "likelihood search did not converge after {iterations} iterations (mu {mu}, sigma {sigma})"
    )]
    NotConverged {
        iterations: usize,
        mu: f64,
        sigma: f64,
    },
    #[error("likelihood search reached the sigma = 0 boundary")]
    Boundary,
    #[error("log-likelihood is not finite at the starting point")]
    NonFiniteLikelihood,
}

/// Minimum number of CDF table cells.
pub const MIN_CDF_CELLS: usize = 4096;

/// Tabulated CDF of the reduced variable `y`, interpolated by monotone
/// piecewise-cubic Hermite segments.
#[derive(Debug, Clone)]
pub struct CdfTable {
    ys: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CdfTable {
    pub fn new(spec: &StateSpec, config: &QuadConfig) -> Result<Self, EstimationError> {
        Self::from_kernel(&kernel(spec), config)
    }

    pub fn from_kernel(k: &KernelFn, config: &QuadConfig) -> Result<Self, EstimationError> {
        let y_max = tail_cutoff(config, k.degree_hint());
        let cells = MIN_CDF_CELLS.max(8 * k.degree_hint());
        let width = 2.0 * y_max / cells as f64;
        let ys: Vec<f64> = (0..=cells).map(|i| -y_max + width * i as f64).collect();
        let mut masses = Vec::with_capacity(cells);
        for w in ys.windows(2) {
            let r =
                integrate_interval(|y| Ok(k.f(y)), w[0], w[1], 1, config)?.require_converged()?;
            masses.push(r.value);
        }
        let total: f64 = crate::quadrature::pairwise_sum(&masses);
        if !(total > 0.0) {
            return Err(EstimationError::Degenerate(
                "density integrates to zero".into(),
            ));
        }
        let mut values = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for m in &masses {
            acc += m / total;
            values.push(acc.min(1.0));
        }
        *values.last_mut().expect("non-empty") = 1.0;
        let mut slopes: Vec<f64> = ys.iter().map(|&y| k.f(y) / total).collect();
        // Fritsch-Carlson limiter keeps every segment monotone.
        for i in 0..cells {
            let secant = (values[i + 1] - values[i]) / width;
            if secant <= 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secant;
            let b = slopes[i + 1] / secant;
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slopes[i] = t * a * secant;
                slopes[i + 1] = t * b * secant;
            }
        }
        Ok(Self { ys, values, slopes })
    }

    fn segment(&self, i: usize, y: f64) -> f64 {
        let h = self.ys[i + 1] - self.ys[i];
        let t = (y - self.ys[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    /// CDF at reduced coordinate `y`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y <= self.ys[0] {
            return 0.0;
        }
        if y >= *self.ys.last().expect("non-empty") {
            return 1.0;
        }
        let i = self.ys.partition_point(|&t| t <= y) - 1;
        self.segment(i, y).clamp(0.0, 1.0)
    }

    /// Inverse CDF by bisection inside the bracketing segment.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self
            .values
            .partition_point(|&v| v <= u)
            .clamp(1, self.values.len() - 1)
            - 1;
        let (mut lo, mut hi) = (self.ys[i], self.ys[i + 1]);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.segment(i, mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SampleBatch {
    #[serde(skip)]
    pub spec: StateSpec,
    pub true_point: ModelPoint,
    pub draws: Vec<f64>,
    pub rng_seed: u64,
}

/// Draws `count` positions from `spec` at `point`.
pub fn sample(
    spec: &StateSpec,
    point: &ModelPoint,
    count: usize,
    seed: u64,
) -> Result<SampleBatch, EstimationError> {
    let table = CdfTable::new(spec, &QuadConfig::default())?;
    sample_with_table(spec, &table, point, count, seed)
}

pub fn sample_with_table(
    spec: &StateSpec,
    table: &CdfTable,
    point: &ModelPoint,
    count: usize,
    seed: u64,
) -> Result<SampleBatch, EstimationError> {
    if count == 0 {
        return Err(EstimationError::InvalidInput(
            "count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            point.mu + SQRT_2 * point.sigma * table.quantile(u)
        })
        .collect();
    Ok(SampleBatch {
        spec: spec.clone(),
        true_point: *point,
        draws,
        rng_seed: seed,
    })
}

/// Kolmogorov-Smirnov distance between the batch and the tabulated CDF.
pub fn ks_distance(batch: &SampleBatch, table: &CdfTable) -> f64 {
    let mut ys: Vec<f64> = batch
        .draws
        .iter()
        .map(|&x| batch.true_point.reduced(x))
        .collect();
    ys.sort_by(f64::total_cmp);
    let n = ys.len() as f64;
    ys.iter()
        .enumerate()
        .map(|(i, &y)| {
            let c = table.cdf(y);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// SplitMix64 finalizer; derives independent per-trial seeds.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Stop once both steps (mu in units of sigma, and ln sigma) fall below this.
    pub param_tol: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            param_tol: 1e-9,
            max_iterations: 20_000,
            initial_step: 0.1,
        }
    }
}

struct Likelihood<'a> {
    kernel: &'a KernelFn,
    draws: &'a [f64],
}

impl Likelihood<'_> {
    /// `sum ln f(y_i) - N ln sigma`.
    fn eval(&self, mu: f64, log_sigma: f64) -> f64 {
        let sigma = log_sigma.exp();
        let scale = 1.0 / (SQRT_2 * sigma);
        let mut scratch = Vec::new();
        let mut total = 0.0;
        for &x in self.draws {
            let mut f = self.kernel.eval_with((x - mu) * scale, &mut scratch).0;
            if f <= 0.0 {
                // Sample sits on a node of the density.
                let nudged = x + f64::EPSILON * x.abs().max(1.0);
                log::warn!("sample {x} sits on a density zero; perturbed to {nudged}");
                f = self.kernel.eval_with((nudged - mu) * scale, &mut scratch).0;
            }
            total += f.ln();
        }
        total - self.draws.len() as f64 * log_sigma
    }
}

/// Starting point from the first two sample moments and the kernel's
/// moments `m_k = sqrt 2 int y^k f dy`.
pub fn moment_init(
    batch: &SampleBatch,
    k: &KernelFn,
    config: &QuadConfig,
) -> Result<ModelPoint, EstimationError> {
    let n = batch.draws.len();
    if n < 2 {
        return Err(EstimationError::Degenerate(
            "need at least two samples".into(),
        ));
    }
    let mean = batch.draws.iter().sum::<f64>() / n as f64;
    let var = batch.draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let hint = k.degree_hint() + 2;
    let m1 = SQRT_2 * integrate_real_line(|y| y * k.f(y), config, hint)?.value;
    let m2 = SQRT_2 * integrate_real_line(|y| y * y * k.f(y), config, hint)?.value;
    let spread = m2 - m1 * m1;
    if !(var > 0.0) || !(spread > 0.0) {
        return Err(EstimationError::Degenerate(format!(
            "sample variance {var}"
        )));
    }
    let sigma = (var / (2.0 * spread)).sqrt();
    Ok(ModelPoint::new(mean - SQRT_2 * sigma * m1, sigma)?)
}

/// Maximum-likelihood `(mu, sigma)` by compass search on `(mu, ln sigma)`.
pub fn mle_fit(
    batch: &SampleBatch,
    spec: &StateSpec,
    init: &ModelPoint,
) -> Result<ModelPoint, EstimationError> {
    mle_fit_with(batch, &kernel(spec), init, &FitConfig::default())
}

pub fn mle_fit_with(
    batch: &SampleBatch,
    k: &KernelFn,
    init: &ModelPoint,
    config: &FitConfig,
) -> Result<ModelPoint, EstimationError> {
    if batch.draws.is_empty() {
        return Err(EstimationError::InvalidInput("empty batch".into()));
    }
    let ll = Likelihood {
        kernel: k,
        draws: &batch.draws,
    };
    let mut mu = init.mu;
    let mut s = init.sigma.ln();
    let mut best = ll.eval(mu, s);
    if !best.is_finite() {
        return Err(EstimationError::NonFiniteLikelihood);
    }
    // mu steps are measured in units of the current sigma.
    let mut step = config.initial_step;
    for _ in 0..config.max_iterations {
        if step < config.param_tol {
            return Ok(ModelPoint::new(mu, s.exp())?);
        }
        let sigma = s.exp();
        let candidates = [
            (mu + step * sigma, s),
            (mu - step * sigma, s),
            (mu, s + step),
            (mu, s - step),
        ];
        let mut moved = false;
        for (cm, cs) in candidates {
            let v = ll.eval(cm, cs);
            if v > best {
                best = v;
                mu = cm;
                s = cs;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
        if s.exp() < f64::MIN_POSITIVE * 1e10 || !mu.is_finite() {
            return Err(EstimationError::Boundary);
        }
    }
    Err(EstimationError::NotConverged {
        iterations: config.max_iterations,
        mu,
        sigma: s.exp(),
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ComponentCheck {
    pub name: String,
    pub bound: f64,
    /// `samples_per_trial * var(estimate)`.
    pub scaled_variance: f64,
    /// Relative standard error of the variance estimate, `sqrt(2/(T - 1))`.
    pub relative_se: f64,
    /// `scaled_variance / bound`.
    pub efficiency_ratio: f64,
    /// Scaled variance falls below `bound (1 - 3 relative_se)`.
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CrbReport {
    pub true_point: ModelPoint,
    pub bound: [[f64; 2]; 2],
    pub sigma_variance_from_curvature: Option<f64>,
    /// Covariance of `(mu_hat, sigma_hat)` across trials (unscaled).
    pub empirical_cov: [[f64; 2]; 2],
    pub mean_estimate: [f64; 2],
    pub trials: usize,
    pub samples_per_trial: usize,
    pub failed_trials: Vec<usize>,
    pub components: Vec<ComponentCheck>,
    pub seed: u64,
}

/// Violation margin in standard errors.
pub const VIOLATION_SE: f64 = 3.0;

pub fn crb_experiment(
    spec: &StateSpec,
    point: &ModelPoint,
    trials: usize,
    samples_per_trial: usize,
    seed: u64,
) -> Result<CrbReport, EstimationError> {
    crb_experiment_with(
        spec,
        point,
        trials,
        samples_per_trial,
        seed,
        &QuadConfig::default(),
        &FitConfig::default(),
    )
}

pub fn crb_experiment_with(
    spec: &StateSpec,
    point: &ModelPoint,
    trials: usize,
    samples_per_trial: usize,
    seed: u64,
    quad: &QuadConfig,
    fit: &FitConfig,
) -> Result<CrbReport, EstimationError> {
    if trials < 30 {
        return Err(EstimationError::InvalidInput(format!(
            "need at least 30 trials, got {trials}"
        )));
    }
    if samples_per_trial < 2 {
        return Err(EstimationError::InvalidInput(
            "need at least 2 samples per trial".into(),
        ));
    }
    let CrbBound {
        matrix: bound,
        sigma_variance_from_curvature,
    } = crb_bound(&metric_preferred(spec, point, quad)?)?;
    let k = kernel(spec);
    let table = CdfTable::from_kernel(&k, quad)?;
    let outcomes: Vec<Result<ModelPoint, EstimationError>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let batch = sample_with_table(
                spec,
                &table,
                point,
                samples_per_trial,
                split_seed(seed, t as u64),
            )?;
            let init = moment_init(&batch, &k, quad)?;
            mle_fit_with(&batch, &k, &init, fit)
        })
        .collect();
    let mut estimates = Vec::with_capacity(trials);
    let mut failed_trials = Vec::new();
    for (t, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(p) => estimates.push([p.mu, p.sigma]),
            Err(e) => {
                log::warn!("trial {t} failed: {e}");
                failed_trials.push(t);
            }
        }
    }
    let used = estimates.len();
    if used < 30 {
        return Err(EstimationError::Degenerate(format!(
            "only {used} trials succeeded"
        )));
    }
    let mut mean = [0.0; 2];
    for e in &estimates {
        mean[0] += e[0] / used as f64;
        mean[1] += e[1] / used as f64;
    }
    let mut cov = [[0.0; 2]; 2];
    for e in &estimates {
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += (e[i] - mean[i]) * (e[j] - mean[j]) / (used - 1) as f64;
            }
        }
    }
    let relative_se = (2.0 / (used - 1) as f64).sqrt();
    let components = ["mu", "sigma"]
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let scaled = cov[i][i] * samples_per_trial as f64;
            ComponentCheck {
                name: name.to_string(),
                bound: bound[i][i],
                scaled_variance: scaled,
                relative_se,
                efficiency_ratio: scaled / bound[i][i],
                violation: scaled < bound[i][i] * (1.0 - VIOLATION_SE * relative_se),
            }
        })
        .collect();
    Ok(CrbReport {
        true_point: *point,
        bound,
        sigma_variance_from_curvature,
        empirical_cov: cov,
        mean_estimate: mean,
        trials,
        samples_per_trial,
        failed_trials,
        components,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_real_line;

    fn point(mu: f64, sigma: f64) -> ModelPoint {
        ModelPoint::new(mu, sigma).unwrap()
    }

    #[test]
    fn table_is_monotone_and_matches_quadrature() {
        let spec = StateSpec::mixture(vec![(0, 0.3), (3, 0.7)]).unwrap();
        let k = kernel(&spec);
        let table = CdfTable::from_kernel(&k, &QuadConfig::default()).unwrap();
        let mut last = 0.0;
        for i in 0..=2000 {
            let y = -6.0 + 12.0 * i as f64 / 2000.0;
            let c = table.cdf(y);
            assert!(c >= last);
            last = c;
        }
        for &y in &[-1.3, 0.0, 0.77, 2.1] {
            let cfg = QuadConfig {
                tail_cutoff: None,
                ..QuadConfig::default()
            };
            let below = crate::quadrature::integrate_interval(|t| Ok(k.f(t)), -12.0, y, 64, &cfg)
                .unwrap()
                .value
                * SQRT_2;
            assert!((table.cdf(y) - below).abs() < 1e-9, "y={y}");
        }
        for &u in &[1e-6, 0.1, 0.5, 0.93] {
            assert!((table.cdf(table.quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_sample_mean() {
        let spec = StateSpec::eigenstate(0).unwrap();
        let b = sample(&spec, &point(2.0, 0.5), 10_000, 7).unwrap();
        let mean = b.draws.iter().sum::<f64>() / b.draws.len() as f64;
        assert!((mean - 2.0).abs() < 4.0 * 0.5 / 100.0);
    }

    #[test]
    fn first_excited_state_avoids_its_node() {
        let spec = StateSpec::eigenstate(1).unwrap();
        let p = point(0.0, 1.0);
        let count = 20_000;
        let b = sample(&spec, &p, count, 11).unwrap();
        let inside = b.draws.iter().filter(|x| x.abs() < 0.1).count() as f64 / count as f64;
        // Probability mass of |x| < 0.1 sigma.
        let k = kernel(&spec);
        let lim = 0.1 / SQRT_2;
        let mass = SQRT_2
            * crate::quadrature::integrate_interval(
                |y| Ok(k.f(y)),
                -lim,
                lim,
                4,
                &QuadConfig::default(),
            )
            .unwrap()
            .value;
        assert!((mass - 2.651_650_586_556_099e-4).abs() < 1e-12);
        assert!(inside < mass + 4.0 * (mass / count as f64).sqrt() + 1.0 / count as f64);
    }

    #[test]
    fn ks_distance_within_99_percent_band() {
        let cfg = QuadConfig::default();
        let specs = [
            StateSpec::eigenstate(0).unwrap(),
            StateSpec::eigenstate(4).unwrap(),
            StateSpec::mixture(vec![(0, 0.5), (1, 0.5)]).unwrap(),
            StateSpec::real_superposition(&[(0, 0.6), (1, 0.8)]).unwrap(),
        ];
        for (i, spec) in specs.iter().enumerate() {
            let table = CdfTable::new(spec, &cfg).unwrap();
            let count = 5000;
            let b =
                sample_with_table(spec, &table, &point(-1.0, 2.0), count, 100 + i as u64).unwrap();
            let d = ks_distance(&b, &table);
            assert!(d <= 1.63 / (count as f64).sqrt(), "spec {i}: {d}");
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let spec = StateSpec::eigenstate(2).unwrap();
        let a = sample(&spec, &point(0.0, 1.0), 100, 5).unwrap();
        let b = sample(&spec, &point(0.0, 1.0), 100, 5).unwrap();
        let c = sample(&spec, &point(0.0, 1.0), 100, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.draws, c.draws);
        assert!(sample(&spec, &point(0.0, 1.0), 0, 5).is_err());
    }

    #[test]
    fn gaussian_mle_matches_closed_form() {
        let spec = StateSpec::eigenstate(0).unwrap();
        let b = sample(&spec, &point(1.0, 2.0), 20_000, 3).unwrap();
        let n = b.draws.len() as f64;
        let mean = b.draws.iter().sum::<f64>() / n;
        let sd = (b.draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let fit = mle_fit(&b, &spec, &point(0.0, 1.0)).unwrap();
        assert!((fit.mu - mean).abs() < 1e-6 * sd);
        assert!((fit.sigma - sd).abs() < 1e-6 * sd);
    }

    #[test]
    fn excited_state_fit_within_bound_scale() {
        let spec = StateSpec::eigenstate(2).unwrap();
        let truth = point(1.0, 2.0);
        let count = 100_000;
        let b = sample(&spec, &truth, count, 19).unwrap();
        let k = kernel(&spec);
        let init = moment_init(&b, &k, &QuadConfig::default()).unwrap();
        let fit = mle_fit(&b, &spec, &init).unwrap();
        let m = crate::geometry::metric_closed_form(&spec, &truth).unwrap();
        let bound = crb_bound(&m).unwrap().matrix;
        let se_mu = (bound[0][0] / count as f64).sqrt();
        let se_sigma = (bound[1][1] / count as f64).sqrt();
        assert!((fit.mu - 1.0).abs() < 5.0 * se_mu);
        assert!((fit.sigma - 2.0).abs() < 5.0 * se_sigma);
    }

    #[test]
    fn repeated_value_is_not_silently_fit() {
        let spec = StateSpec::eigenstate(0).unwrap();
        let b = SampleBatch {
            spec: spec.clone(),
            true_point: point(0.0, 1.0),
            draws: vec![0.25; 50],
            rng_seed: 0,
        };
        assert!(moment_init(&b, &kernel(&spec), &QuadConfig::default()).is_err());
        let cfg = FitConfig {
            max_iterations: 2000,
            ..FitConfig::default()
        };
        let r = mle_fit_with(&b, &kernel(&spec), &point(0.0, 1.0), &cfg);
        assert!(matches!(
            r,
            Err(EstimationError::NotConverged { .. }) | Err(EstimationError::Boundary)
        ));
    }

    #[test]
    fn node_sample_is_perturbed() {
        // x = mu exactly is a zero of the n = 1 density.
        let spec = StateSpec::eigenstate(1).unwrap();
        let mut b = sample(&spec, &point(0.0, 1.0), 200, 2).unwrap();
        b.draws[0] = 0.0;
        let fit = mle_fit(&b, &spec, &point(0.1, 1.0)).unwrap();
        assert!(fit.sigma.is_finite());
    }

    #[test]
    fn moment_init_for_mixed_parity_state() {
        let spec = StateSpec::real_superposition(&[(0, 0.6), (1, 0.8)]).unwrap();
        let k = kernel(&spec);
        let truth = point(-0.5, 1.5);
        let b = sample(&spec, &truth, 50_000, 4).unwrap();
        let init = moment_init(&b, &k, &QuadConfig::default()).unwrap();
        assert!((init.mu - truth.mu).abs() < 0.05);
        assert!((init.sigma - truth.sigma).abs() < 0.05);
        // Kernel moments: int f = 1/sqrt 2.
        let r = integrate_real_line(|y| k.f(y), &QuadConfig::default(), 4).unwrap();
        assert!((r.value - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn experiment_requires_thirty_trials() {
        let spec = StateSpec::eigenstate(0).unwrap();
        assert!(crb_experiment(&spec, &point(0.0, 1.0), 10, 100, 1).is_err());
    }

    #[test]
    fn gaussian_experiment_efficiency() {
        let spec = StateSpec::eigenstate(0).unwrap();
        let r = crb_experiment(&spec, &point(0.0, 1.0), 100, 1000, 42).unwrap();
        assert!(r.failed_trials.is_empty());
        assert_eq!(r.bound, [[1.0, 0.0], [0.0, 0.5]]);
        for c in &r.components {
            assert!(!c.violation, "{c:?}");
            assert!(
                (c.efficiency_ratio - 1.0).abs() < 4.0 * c.relative_se,
                "{c:?}"
            );
        }
        let again = crb_experiment(&spec, &point(0.0, 1.0), 100, 1000, 42).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn split_seed_spreads() {
        let seeds: std::collections::BTreeSet<u64> = (0..1000).map(|i| split_seed(9, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
