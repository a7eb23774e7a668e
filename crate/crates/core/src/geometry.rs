//! Fisher-Rao metric, Levi-Civita connection, curvature and geodesics on
//! the `(mu, sigma)` manifold.
//!
//! For every oscillator state the metric has the form `I = I~ / sigma^2`
//! with a constant reduced matrix `I~`. Three routes compute it:
//! closed form (eigenstates), quadrature of the reduced integrals, and the
//! finite series for real superpositions. Curvature comes either from the
//! reduced formula `R = 2 I~mm / (I~ms^2 - I~mm I~ss)` or from central
//! differences of the metric fed through the generic Levi-Civita routine.

use crate::hermite::MAX_DEGREE;
use crate::models::{
    kernel, kernel_pure_factored, ModelError, ModelPoint, Parity, StateSpec, StateVariant, SPEC_TOL,
};
use crate::quadrature::{integrate_ratio, integrate_real_line, QuadConfig, QuadError, QuadResult};
use rayon::prelude::*;
use std::f64::consts::SQRT_2;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("no closed form for this state; closed forms exist for eigenstates only")]
    NoClosedForm,
    #[error("metric is not positive definite: reduced ({mumu}, {musigma}, {sigmasigma})")]
    NotPositiveDefinite {
        mumu: f64,
        musigma: f64,
        sigmasigma: f64,
    },
    #[error("finite-difference stencil crosses sigma <= 0 (sigma {sigma}, step {step})")]
    StencilCrossesBoundary { sigma: f64, step: f64 },
    #[error("invalid geodesic request: {0}")]
    InvalidGeodesic(String),
}

/// Dimensionless `sigma^2 I`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReducedMetric {
    pub mumu: f64,
    pub musigma: f64,
    pub sigmasigma: f64,
}

impl ReducedMetric {
    pub fn det(&self) -> f64 {
        self.mumu * self.sigmasigma - self.musigma * self.musigma
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.mumu, self.musigma], [self.musigma, self.sigmasigma]]
    }

    fn check_positive_definite(&self) -> Result<(), GeometryError> {
        if self.mumu > 0.0 && self.det() > 0.0 && self.det().is_finite() {
            Ok(())
        } else {
            Err(GeometryError::NotPositiveDefinite {
                mumu: self.mumu,
                musigma: self.musigma,
                sigmasigma: self.sigmasigma,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricPath {
    ClosedForm,
    Quadrature,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MetricTensor2 {
    pub point: ModelPoint,
    pub i_mumu: f64,
    pub i_musigma: f64,
    pub i_sigmasigma: f64,
    pub reduced: ReducedMetric,
    pub path: MetricPath,
}

impl MetricTensor2 {
    pub fn from_reduced(
        point: ModelPoint,
        reduced: ReducedMetric,
        path: MetricPath,
    ) -> Result<Self, GeometryError> {
        reduced.check_positive_definite()?;
        let s2 = point.sigma * point.sigma;
        Ok(Self {
            point,
            i_mumu: reduced.mumu / s2,
            i_musigma: reduced.musigma / s2,
            i_sigmasigma: reduced.sigmasigma / s2,
            reduced,
            path,
        })
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.i_mumu, self.i_musigma],
            [self.i_musigma, self.i_sigmasigma],
        ]
    }

    /// Same reduced metric at another point.
    pub fn at(&self, point: ModelPoint) -> Self {
        Self::from_reduced(point, self.reduced, self.path).expect("already validated")
    }
}

/// Eigenstate metric `diag(2n + 1, 2(n^2 + n + 1)) / sigma^2`.
pub fn metric_closed_form(
    spec: &StateSpec,
    point: &ModelPoint,
) -> Result<MetricTensor2, GeometryError> {
    let n = match spec.variant() {
        StateVariant::Eigenstate(n) => *n as f64,
        _ => return Err(GeometryError::NoClosedForm),
    };
    let reduced = ReducedMetric {
        mumu: 2.0 * n + 1.0,
        musigma: 0.0,
        sigmasigma: 2.0 * (n * n + n + 1.0),
    };
    MetricTensor2::from_reduced(*point, reduced, MetricPath::ClosedForm)
}

/// How the off-diagonal reduced integral is treated for parity-even states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffDiagonal {
    /// Assign exactly zero when the state's parity flag is even.
    ParityShortCircuit,
    /// Always integrate `y (f')^2 / f`.
    Integrate,
}

/// The three reduced integrals with their quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ReducedIntegrals {
    pub reduced: ReducedMetric,
    pub mumu: QuadResult,
    /// `None` when the parity short-circuit applied.
    pub musigma: Option<QuadResult>,
    pub sigmasigma: QuadResult,
    /// Whether the factored pure-state integrand was used.
    pub factored: bool,
}

/// `I~mm = (1/sqrt 2) int (f')^2/f`, `I~ms = int y (f')^2/f`,
/// `I~ss = sqrt 2 int y^2 (f')^2/f - 1`.
pub fn reduced_integrals(
    spec: &StateSpec,
    config: &QuadConfig,
    off_diagonal: OffDiagonal,
) -> Result<ReducedIntegrals, GeometryError> {
    let k = kernel(spec);
    let short_circuit =
        off_diagonal == OffDiagonal::ParityShortCircuit && k.parity() == Parity::Even;
    // (f')^2/f carries psi_{N+1}^2, i.e. degree 2N + 2, plus the y powers.
    let base = 2 * spec.max_index() + 2;
    let moment = |power: i32| -> Result<QuadResult, GeometryError> {
        let hint = base + power as usize;
        let r = match kernel_pure_factored(spec) {
            Ok(fac) => {
                integrate_real_line(|y| y.powi(power) * fac.fisher_density(y), config, hint)?
            }
            Err(_) => integrate_ratio(
                |y| y.powi(power) * k.fisher_parts(y).0,
                |y| k.fisher_parts(y).1,
                config,
                hint,
            )?,
        };
        Ok(r.require_converged()?)
    };
    let m0 = moment(0)?;
    let m1 = if short_circuit {
        None
    } else {
        Some(moment(1)?)
    };
    let m2 = moment(2)?;
    let reduced = ReducedMetric {
        mumu: m0.value / SQRT_2,
        musigma: m1.map_or(0.0, |r| r.value),
        sigmasigma: SQRT_2 * m2.value - 1.0,
    };
    Ok(ReducedIntegrals {
        reduced,
        mumu: m0,
        musigma: m1,
        sigmasigma: m2,
        factored: spec.real_coefficients().is_some(),
    })
}

/// Metric by quadrature of the reduced integrals, with the parity
/// short-circuit for the off-diagonal element.
pub fn metric_quadrature(
    spec: &StateSpec,
    point: &ModelPoint,
    config: &QuadConfig,
) -> Result<MetricTensor2, GeometryError> {
    metric_quadrature_with(spec, point, config, OffDiagonal::ParityShortCircuit)
}

pub fn metric_quadrature_with(
    spec: &StateSpec,
    point: &ModelPoint,
    config: &QuadConfig,
    off_diagonal: OffDiagonal,
) -> Result<MetricTensor2, GeometryError> {
    let r = reduced_integrals(spec, config, off_diagonal)?;
    MetricTensor2::from_reduced(*point, r.reduced, MetricPath::Quadrature)
}

/// Metric of the real superposition `sum alpha_n |n>` from the finite
/// series
///
/// `I~mm = sum a_n (a_n (2n+1) - a_{n-2} sqrt(n(n-1)) - a_{n+2} sqrt((n+1)(n+2)))`
///
/// `I~ms = sum a_n (a_{n+1} (n+1)^{3/2} + a_{n-1} n^{3/2}
///                 - a_{n+3} sqrt((n+1)(n+2)(n+3)) - a_{n-3} sqrt(n(n-1)(n-2)))`
///
/// `I~ss = sum a_n (a_n (2n^2+2n+3) - a_{n-4} sqrt(n(n-1)(n-2)(n-3))
///                 - a_{n+4} sqrt((n+1)(n+2)(n+3)(n+4))) - 1`
///
/// with `a_k = 0` outside the table. The `+-3` terms of `I~ms` enter with a
/// minus sign; quadrature of `y (f')^2/f` confirms it.
pub fn metric_series_real(
    coeffs: &[(usize, f64)],
    point: &ModelPoint,
) -> Result<MetricTensor2, GeometryError> {
    let top = coeffs.iter().map(|t| t.0).max().unwrap_or(0);
    if top > MAX_DEGREE {
        return Err(ModelError::IndexTooLarge(top).into());
    }
    if coeffs.iter().any(|t| !t.1.is_finite()) {
        return Err(ModelError::InvalidState("non-finite coefficient".into()).into());
    }
    let norm: f64 = coeffs.iter().map(|t| t.1 * t.1).sum();
    if (norm - 1.0).abs() > SPEC_TOL {
        return Err(
            ModelError::InvalidState(format!("coefficients have norm {norm}, expected 1")).into(),
        );
    }
    let mut alpha = vec![0.0; top + 5];
    for &(n, a) in coeffs {
        alpha[n] += a;
    }
    let at = |k: isize| -> f64 {
        if k < 0 {
            0.0
        } else {
            alpha.get(k as usize).copied().unwrap_or(0.0)
        }
    };
    // sqrt((m+1)(m+2)...(m+j))
    let rising =
        |m: usize, j: usize| -> f64 { (1..=j).map(|i| (m + i) as f64).product::<f64>().sqrt() };
    let (mut mm, mut ms, mut ss) = (0.0, 0.0, 0.0);
    for n in 0..=top {
        let a = alpha[n];
        if a == 0.0 {
            continue;
        }
        let i = n as isize;
        let nf = n as f64;
        mm += a
            * (a * (2.0 * nf + 1.0)
                - at(i - 2) * if n >= 2 { rising(n - 2, 2) } else { 0.0 }
                - at(i + 2) * rising(n, 2));
        ms += a
            * (at(i + 1) * (nf + 1.0).powf(1.5) + at(i - 1) * nf.powf(1.5)
                - at(i + 3) * rising(n, 3)
                - at(i - 3) * if n >= 3 { rising(n - 3, 3) } else { 0.0 });
        ss += a
            * (a * (2.0 * nf * nf + 2.0 * nf + 3.0)
                - at(i - 4) * if n >= 4 { rising(n - 4, 4) } else { 0.0 }
                - at(i + 4) * rising(n, 4));
    }
    let reduced = ReducedMetric {
        mumu: mm,
        musigma: ms,
        sigmasigma: ss - 1.0,
    };
    MetricTensor2::from_reduced(*point, reduced, MetricPath::Series)
}

/// Series metric for a superposition whose amplitudes are all real or all
/// imaginary (the latter through `Im(alpha_n)`).
pub fn metric_series(spec: &StateSpec, point: &ModelPoint) -> Result<MetricTensor2, GeometryError> {
    let coeffs = spec
        .real_coefficients()
        .or_else(|| spec.imaginary_coefficients())
        .ok_or(ModelError::ComplexCoefficients)?;
    metric_series_real(&coeffs, point)
}

/// Christoffel symbols `gamma[k][i][j] = Gamma^k_ij` from the metric and its
/// first derivatives `dg[l][i][j] = d_l g_ij` (coordinates `0 = mu`,
/// `1 = sigma`).
pub fn christoffel(g: &[[f64; 2]; 2], dg: &[[[f64; 2]; 2]; 2]) -> [[[f64; 2]; 2]; 2] {
    let inv = inverse2(g);
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                gamma[k][i][j] = (0..2)
                    .map(|l| 0.5 * inv[k][l] * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]))
                    .sum();
            }
        }
    }
    gamma
}

fn inverse2(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

/// Curvature quantities of a 2-D metric from its value and first and second
/// derivatives (`ddg[k][l][i][j] = d_k d_l g_ij`).
///
/// Uses the lowered Riemann tensor
/// `R_iklm = 1/2 (d_k d_l g_im + d_i d_m g_kl - d_k d_m g_il - d_i d_l g_km)
///           + g_np (Gamma^n_kl Gamma^p_im - Gamma^n_km Gamma^p_il)`,
/// the contraction `Ric_km = g^il R_iklm` and `R = g^km Ric_km`; with this
/// sign convention the Gaussian model has `R = -1`.
pub fn levi_civita_curvature(
    g: &[[f64; 2]; 2],
    dg: &[[[f64; 2]; 2]; 2],
    ddg: &[[[[f64; 2]; 2]; 2]; 2],
) -> ([[[f64; 2]; 2]; 2], f64, [[f64; 2]; 2], f64) {
    let gamma = christoffel(g, dg);
    let riemann = |i: usize, k: usize, l: usize, m: usize| -> f64 {
        let second = 0.5 * (ddg[k][l][i][m] + ddg[i][m][k][l] - ddg[k][m][i][l] - ddg[i][l][k][m]);
        let mut quad = 0.0;
        for n in 0..2 {
            for p in 0..2 {
                quad +=
                    g[n][p] * (gamma[n][k][l] * gamma[p][i][m] - gamma[n][k][m] * gamma[p][i][l]);
            }
        }
        second + quad
    };
    let inv = inverse2(g);
    let mut ricci = [[0.0; 2]; 2];
    for k in 0..2 {
        for m in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for l in 0..2 {
                    s += inv[i][l] * riemann(i, k, l, m);
                }
            }
            ricci[k][m] = s;
        }
    }
    let scalar = (0..2)
        .flat_map(|k| (0..2).map(move |m| (k, m)))
        .map(|(k, m)| inv[k][m] * ricci[k][m])
        .sum();
    (gamma, riemann(0, 1, 0, 1), ricci, scalar)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvaturePath {
    ClosedForm,
    ReducedFormula,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CurvatureReport {
    pub scalar_r: f64,
    /// `christoffel[k][i][j] = Gamma^k_ij` at the evaluation point.
    pub christoffel: [[[f64; 2]; 2]; 2],
    pub riemann_1212: f64,
    pub ricci: [[f64; 2]; 2],
    pub path: CurvaturePath,
    pub warnings: Vec<String>,
}

/// Analytic derivatives of `g = I~ / sigma^2`: only `sigma` derivatives
/// survive, `d_s g = -2 I~/sigma^3` and `d_s d_s g = 6 I~/sigma^4`.
fn reduced_derivatives(
    reduced: &ReducedMetric,
    sigma: f64,
) -> ([[f64; 2]; 2], [[[f64; 2]; 2]; 2], [[[[f64; 2]; 2]; 2]; 2]) {
    let m = reduced.matrix();
    let scale = |c: f64| [[c * m[0][0], c * m[0][1]], [c * m[1][0], c * m[1][1]]];
    let g = scale(sigma.powi(-2));
    let dg = [[[0.0; 2]; 2], scale(-2.0 * sigma.powi(-3))];
    let mut ddg = [[[[0.0; 2]; 2]; 2]; 2];
    ddg[1][1] = scale(6.0 * sigma.powi(-4));
    (g, dg, ddg)
}

fn negativity_warnings(r: f64) -> Vec<String> {
    if r < 0.0 {
        Vec::new()
    } else {
        vec![format!("scalar curvature {r} is not negative")]
    }
}

/// `R = 2 I~mm / (I~ms^2 - I~mm I~ss)`, or `-2 / I~ss` when the metric is
/// diagonal. Connection and Ricci components are the analytic ones at the
/// metric's point.
pub fn scalar_curvature_reduced(metric: &MetricTensor2) -> Result<CurvatureReport, GeometryError> {
    let r = &metric.reduced;
    r.check_positive_definite()?;
    let scalar_r = if r.musigma == 0.0 {
        -2.0 / r.sigmasigma
    } else {
        2.0 * r.mumu / (r.musigma * r.musigma - r.mumu * r.sigmasigma)
    };
    let (g, dg, ddg) = reduced_derivatives(r, metric.point.sigma);
    let (christoffel, riemann_1212, ricci, _) = levi_civita_curvature(&g, &dg, &ddg);
    Ok(CurvatureReport {
        scalar_r,
        christoffel,
        riemann_1212,
        ricci,
        path: CurvaturePath::ReducedFormula,
        warnings: negativity_warnings(scalar_r),
    })
}

/// Eigenstate curvature `R = -1/(n^2 + n + 1)`.
pub fn scalar_curvature_closed_form(
    spec: &StateSpec,
    point: &ModelPoint,
) -> Result<CurvatureReport, GeometryError> {
    let metric = metric_closed_form(spec, point)?;
    let n = match spec.variant() {
        StateVariant::Eigenstate(n) => *n as f64,
        _ => unreachable!("closed-form metric exists only for eigenstates"),
    };
    let mut report = scalar_curvature_reduced(&metric)?;
    report.scalar_r = -1.0 / (n * n + n + 1.0);
    report.path = CurvaturePath::ClosedForm;
    Ok(report)
}

/// Default relative stencil step.
pub const DEFAULT_STEP_SCALE: f64 = 1e-3;

/// Curvature from central differences of the quadrature metric on a 3x3
/// stencil with steps `h = step_scale * sigma` in both coordinates.
pub fn curvature_finite_difference(
    spec: &StateSpec,
    point: &ModelPoint,
    step_scale: f64,
    config: &QuadConfig,
) -> Result<CurvatureReport, GeometryError> {
    let h = step_scale * point.sigma;
    if !(step_scale > 0.0) || point.sigma - h <= 0.0 {
        return Err(GeometryError::StencilCrossesBoundary {
            sigma: point.sigma,
            step: h,
        });
    }
    let offsets: Vec<(i32, i32)> = (-1..=1)
        .flat_map(|a| (-1..=1).map(move |b| (a, b)))
        .collect();
    let metrics: Vec<[[f64; 2]; 2]> = offsets
        .par_iter()
        .map(|&(a, b)| {
            let p = ModelPoint::new(point.mu + a as f64 * h, point.sigma + b as f64 * h)?;
            Ok(metric_quadrature(spec, &p, config)?.matrix())
        })
        .collect::<Result<_, GeometryError>>()?;
    let at = |a: i32, b: i32| metrics[((a + 1) * 3 + (b + 1)) as usize];
    let mut g = [[0.0; 2]; 2];
    let mut dg = [[[0.0; 2]; 2]; 2];
    let mut ddg = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let c = at(0, 0)[i][j];
            g[i][j] = c;
            dg[0][i][j] = (at(1, 0)[i][j] - at(-1, 0)[i][j]) / (2.0 * h);
            dg[1][i][j] = (at(0, 1)[i][j] - at(0, -1)[i][j]) / (2.0 * h);
            ddg[0][0][i][j] = (at(1, 0)[i][j] - 2.0 * c + at(-1, 0)[i][j]) / (h * h);
            ddg[1][1][i][j] = (at(0, 1)[i][j] - 2.0 * c + at(0, -1)[i][j]) / (h * h);
            let mixed = (at(1, 1)[i][j] - at(1, -1)[i][j] - at(-1, 1)[i][j] + at(-1, -1)[i][j])
                / (4.0 * h * h);
            ddg[0][1][i][j] = mixed;
            ddg[1][0][i][j] = mixed;
        }
    }
    let (christoffel, riemann_1212, ricci, scalar_r) = levi_civita_curvature(&g, &dg, &ddg);
    Ok(CurvatureReport {
        scalar_r,
        christoffel,
        riemann_1212,
        ricci,
        path: CurvaturePath::FiniteDifference,
        warnings: negativity_warnings(scalar_r),
    })
}

/// Closed form for eigenstates, otherwise quadrature.
pub fn metric_preferred(
    spec: &StateSpec,
    point: &ModelPoint,
    config: &QuadConfig,
) -> Result<MetricTensor2, GeometryError> {
    match metric_closed_form(spec, point) {
        Ok(m) => Ok(m),
        Err(GeometryError::NoClosedForm) => metric_quadrature(spec, point, config),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GeodesicSample {
    pub tau: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dmu: f64,
    pub dsigma: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GeodesicTrace {
    pub samples: Vec<GeodesicSample>,
    /// Set when `sigma` left the half-plane and the trace stopped early.
    pub hit_boundary: bool,
    pub reduced: ReducedMetric,
}

impl GeodesicTrace {
    /// `I_ab v^a v^b` at a sample.
    pub fn speed_squared(&self, s: &GeodesicSample) -> f64 {
        let r = &self.reduced;
        (r.mumu * s.dmu * s.dmu
            + 2.0 * r.musigma * s.dmu * s.dsigma
            + r.sigmasigma * s.dsigma * s.dsigma)
            / (s.sigma * s.sigma)
    }

    /// Largest relative deviation of the squared metric speed from its
    /// starting value.
    pub fn speed_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        let v0 = self.speed_squared(first);
        self.samples
            .iter()
            .map(|s| {
                let v = self.speed_squared(s);
                if v0 == 0.0 {
                    v.abs()
                } else {
                    ((v - v0) / v0).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Integrates the geodesic equations from `start` with initial velocity
/// `(dmu, dsigma)` over `[0, tau_end]` with `steps` classical RK4 steps.
pub fn geodesic_trace(
    spec: &StateSpec,
    start: &ModelPoint,
    velocity: (f64, f64),
    tau_end: f64,
    steps: usize,
    config: &QuadConfig,
) -> Result<GeodesicTrace, GeometryError> {
    let reduced = metric_preferred(spec, start, config)?.reduced;
    geodesic_trace_reduced(&reduced, start, velocity, tau_end, steps)
}

/// Geodesic for a known reduced metric.
pub fn geodesic_trace_reduced(
    reduced: &ReducedMetric,
    start: &ModelPoint,
    velocity: (f64, f64),
    tau_end: f64,
    steps: usize,
) -> Result<GeodesicTrace, GeometryError> {
    reduced.check_positive_definite()?;
    if steps == 0 || !(tau_end >= 0.0 && tau_end.is_finite()) {
        return Err(GeometryError::InvalidGeodesic(format!(
            "need steps >= 1 and finite tau_end >= 0, got {steps} and {tau_end}"
        )));
    }
    if !(velocity.0.is_finite() && velocity.1.is_finite()) {
        return Err(GeometryError::InvalidGeodesic(
            "velocity must be finite".into(),
        ));
    }
    // Gamma scales as 1/sigma with constant reduced metric, so compute the
    // sigma = 1 symbols once.
    let (g1, dg1, _) = reduced_derivatives(reduced, 1.0);
    let unit_gamma = christoffel(&g1, &dg1);
    let rhs = |s: [f64; 4]| -> [f64; 4] {
        let v = [s[2], s[3]];
        let mut acc = [0.0; 2];
        for (k, a) in acc.iter_mut().enumerate() {
            let mut sum = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    sum += unit_gamma[k][i][j] * v[i] * v[j];
                }
            }
            *a = -sum / s[1];
        }
        [s[2], s[3], acc[0], acc[1]]
    };
    let dt = tau_end / steps as f64;
    let mut state = [start.mu, start.sigma, velocity.0, velocity.1];
    let sample = |tau: f64, s: &[f64; 4]| GeodesicSample {
        tau,
        mu: s[0],
        sigma: s[1],
        dmu: s[2],
        dsigma: s[3],
    };
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample(0.0, &state));
    let mut hit_boundary = false;
    let add = |s: &[f64; 4], k: &[f64; 4], c: f64| {
        [
            s[0] + c * k[0],
            s[1] + c * k[1],
            s[2] + c * k[2],
            s[3] + c * k[3],
        ]
    };
    for step in 1..=steps {
        let k1 = rhs(state);
        let k2 = rhs(add(&state, &k1, 0.5 * dt));
        let k3 = rhs(add(&state, &k2, 0.5 * dt));
        let k4 = rhs(add(&state, &k3, dt));
        let mut next = state;
        for i in 0..4 {
            next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !(next[1] > 0.0) || next.iter().any(|v| !v.is_finite()) {
            hit_boundary = true;
            break;
        }
        state = next;
        samples.push(sample(step as f64 * dt, &state));
    }
    Ok(GeodesicTrace {
        samples,
        hit_boundary,
        reduced: *reduced,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CrbBound {
    /// `I^{-1}` in position-squared units.
    pub matrix: [[f64; 2]; 2],
    /// `-sigma^2 R / 2`, the sigma-variance bound written through the
    /// curvature; present for diagonal metrics.
    pub sigma_variance_from_curvature: Option<f64>,
}

/// Cramer-Rao lower bound `I^{-1}`.
pub fn crb_bound(metric: &MetricTensor2) -> Result<CrbBound, GeometryError> {
    metric.reduced.check_positive_definite()?;
    let matrix = inverse2(&metric.matrix());
    let sigma_variance_from_curvature = if metric.reduced.musigma == 0.0 {
        let r = scalar_curvature_reduced(metric)?.scalar_r;
        Some(-metric.point.sigma * metric.point.sigma * r / 2.0)
    } else {
        None
    };
    Ok(CrbBound {
        matrix,
        sigma_variance_from_curvature,
    })
}
