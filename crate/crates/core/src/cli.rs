//! Config parsing, command dispatch and report rendering for the `hgeom`
//! binary.
//!
//! A config is a JSON document:
//!
//! ```json
//! {
//!   "state": {"type": "mixture", "terms": [{"n": 0, "weight": 0.5}, {"n": 1, "weight": 0.5}]},
//!   "point": {"mu": 0.0, "sigma": 1.0},
//!   "command": "curvature"
//! }
//! ```
//!
//! `physical` (`mass`, `omega0`, `x0`, optional `hbar`) may replace
//! `point`. Optional keys: `quad`, `estimation`, `output`, `geodesic`,
//! `renormalize`.

use crate::estimation::{
    crb_experiment_with, ks_distance, sample_with_table, CdfTable, CrbReport, EstimationError,
    FitConfig,
};
use crate::geometry::{
    crb_bound, curvature_finite_difference, geodesic_trace, metric_closed_form, metric_quadrature,
    metric_series, reduced_integrals, scalar_curvature_closed_form, scalar_curvature_reduced,
    CurvatureReport, GeodesicTrace, GeometryError, MetricTensor2, OffDiagonal, ReducedIntegrals,
    DEFAULT_STEP_SCALE,
};
use crate::models::{
    from_physical, kernel, ModelError, ModelPoint, Parity, PhysicalOscillator, StateSpec,
    StateVariant,
};
use crate::quadrature::{integrate_real_line, QuadConfig};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

/// Largest normalization defect that is rescaled without `renormalize`.
pub const NORMALIZATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Metric,
    Curvature,
    Crb,
    Geodesic,
    Sample,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format `{other}`, expected json or csv")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationOptions {
    pub trials: usize,
    pub samples_per_trial: usize,
    pub seed: u64,
    /// Draws emitted by `sample` and used by the sampling check of `verify`.
    pub count: usize,
    pub fit: FitConfig,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            samples_per_trial: 5000,
            seed: 20_240_601,
            count: 2000,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicOptions {
    /// Initial `(dmu/dtau, dsigma/dtau)`.
    pub velocity: [f64; 2],
    pub tau_end: f64,
    pub steps: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            velocity: [1.0, 0.25],
            tau_end: 5.0,
            steps: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub state: StateSpec,
    pub point: ModelPoint,
    /// The oscillator the point was derived from, if any.
    pub physical: Option<PhysicalOscillator>,
    pub command: Command,
    pub quad: QuadConfig,
    pub estimation: EstimationOptions,
    pub geodesic: GeodesicOptions,
    pub output_format: OutputFormat,
    pub renormalize: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}, at `{path}`: {message}")]
    Schema {
        line: usize,
        column: usize,
        path: String,
        message: String,
    },
    #[error("at `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("state normalization is off by {deviation:e}, more than {NORMALIZATION_TOL:e}; set \"renormalize\": true to rescale")]
    Normalization { deviation: f64 },
}

impl ConfigError {
    fn invalid(field: &str, message: impl ToString) -> Self {
        Self::Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }

    pub fn to_error_object(&self) -> ErrorObject {
        let (line, column, field) = match self {
            Self::Schema {
                line, column, path, ..
            } => (Some(*line), Some(*column), Some(path.clone())),
            Self::Invalid { field, .. } => (None, None, Some(field.clone())),
            Self::Normalization { .. } => (None, None, Some("state".into())),
        };
        ErrorObject {
            status: "error",
            kind: "config".into(),
            message: self.to_string(),
            line,
            column,
            field,
        }
    }
}

/// Structured error written to standard output on failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorObject {
    pub status: &'static str,
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    state: RawState,
    #[serde(default)]
    point: Option<RawPoint>,
    #[serde(default)]
    physical: Option<RawPhysical>,
    command: Command,
    #[serde(default)]
    quad: QuadConfig,
    #[serde(default)]
    estimation: EstimationOptions,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    geodesic: GeodesicOptions,
    #[serde(default)]
    renormalize: bool,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawState {
    Eigenstate { n: usize },
    Mixture { terms: Vec<MixtureTerm> },
    Superposition { terms: Vec<AmplitudeTerm> },
    Density { entries: Vec<DensityEntry> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureTerm {
    n: usize,
    weight: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AmplitudeTerm {
    n: usize,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityEntry {
    n: usize,
    m: usize,
    re: f64,
    #[serde(default)]
    im: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    mu: f64,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysical {
    mass: f64,
    omega0: f64,
    x0: f64,
    #[serde(default = "one")]
    hbar: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawOutput {
    format: Option<OutputFormat>,
}

/// Parses and validates a JSON config.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Schema {
            line: inner.line(),
            column: inner.column(),
            path,
            message: strip_position(&inner.to_string()),
        }
    })?;

    let (point, physical) = match (raw.point, raw.physical) {
        (Some(p), None) => (
            ModelPoint::new(p.mu, p.sigma).map_err(|e| ConfigError::invalid("point", e))?,
            None,
        ),
        (None, Some(p)) => {
            let osc = PhysicalOscillator {
                mass: p.mass,
                omega0: p.omega0,
                x0: p.x0,
                hbar: p.hbar,
            };
            let point = from_physical(&osc).map_err(|e| ConfigError::invalid("physical", e))?;
            (point, Some(osc))
        }
        (Some(_), Some(_)) => {
            return Err(ConfigError::invalid(
                "point",
                "give either `point` or `physical`, not both",
            ))
        }
        (None, None) => {
            return Err(ConfigError::invalid(
                "point",
                "one of `point` or `physical` is required",
            ))
        }
    };

    let state = build_state(raw.state, raw.renormalize)?;
    raw.quad
        .validate()
        .map_err(|e| ConfigError::invalid("quad", e))?;
    let output_format = raw.output.format.unwrap_or(match raw.command {
        Command::Geodesic | Command::Sample => OutputFormat::Csv,
        _ => OutputFormat::Json,
    });
    Ok(RunConfig {
        state,
        point,
        physical,
        command: raw.command,
        quad: raw.quad,
        estimation: raw.estimation,
        geodesic: raw.geodesic,
        output_format,
        renormalize: raw.renormalize,
    })
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

fn build_state(raw: RawState, renormalize: bool) -> Result<StateSpec, ConfigError> {
    let (variant, deviation) = match raw {
        RawState::Eigenstate { n } => (StateVariant::Eigenstate(n), 0.0),
        RawState::Mixture { terms } => {
            let total: f64 = terms.iter().map(|t| t.weight).sum();
            (
                StateVariant::Mixture(terms.into_iter().map(|t| (t.n, t.weight)).collect()),
                total - 1.0,
            )
        }
        RawState::Superposition { terms } => {
            let norm: f64 = terms.iter().map(|t| t.re * t.re + t.im * t.im).sum();
            (
                StateVariant::Superposition(
                    terms
                        .into_iter()
                        .map(|t| (t.n, Complex64::new(t.re, t.im)))
                        .collect(),
                ),
                norm - 1.0,
            )
        }
        RawState::Density { entries } => {
            let mut table = BTreeMap::new();
            for e in &entries {
                if table
                    .insert((e.n, e.m), Complex64::new(e.re, e.im))
                    .is_some()
                {
                    return Err(ConfigError::invalid(
                        "state.entries",
                        format!("entry ({}, {}) listed twice", e.n, e.m),
                    ));
                }
            }
            // Entries given on one side of the diagonal are mirrored.
            for e in &entries {
                table
                    .entry((e.m, e.n))
                    .or_insert(Complex64::new(e.re, -e.im));
            }
            let trace: f64 = table
                .iter()
                .filter(|((n, m), _)| n == m)
                .map(|(_, v)| v.re)
                .sum();
            (StateVariant::Density(table), trace - 1.0)
        }
    };
    if !(deviation.abs() <= NORMALIZATION_TOL) && !renormalize {
        return Err(ConfigError::Normalization { deviation });
    }
    StateSpec::renormalized(variant).map_err(|e| ConfigError::invalid("state", e))
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    /// Relative quadrature tolerance.
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if o.mu.is_some() || o.sigma.is_some() {
            self.point = ModelPoint::new(
                o.mu.unwrap_or(self.point.mu),
                o.sigma.unwrap_or(self.point.sigma),
            )
            .map_err(|e| ConfigError::invalid("point", e))?;
            self.physical = None;
        }
        if let Some(tol) = o.tol {
            self.quad.rel_tol = tol;
            self.quad
                .validate()
                .map_err(|e| ConfigError::invalid("--tol", e))?;
        }
        if let Some(seed) = o.seed {
            self.estimation.seed = seed;
        }
        if let Some(format) = o.format {
            self.output_format = format;
        }
        Ok(())
    }
}

/// Exit status and report text of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
}

#[derive(Debug, Error)]
enum RunError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Quadrature(#[from] crate::quadrature::QuadError),
}

impl RunError {
    fn kind(&self) -> &'static str {
        match self {
            Self::Model(_) => "model",
            Self::Geometry(GeometryError::Quadrature(_)) | Self::Quadrature(_) => "quadrature",
            Self::Geometry(_) => "geometry",
            Self::Estimation(_) => "estimation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSummary {
    pub kind: &'static str,
    pub max_index: usize,
    pub parity: Parity,
    pub psd_assumed: bool,
}

impl StateSummary {
    fn of(spec: &StateSpec) -> Self {
        Self {
            kind: match spec.variant() {
                StateVariant::Eigenstate(_) => "eigenstate",
                StateVariant::Mixture(_) => "mixture",
                StateVariant::Superposition(_) => "superposition",
                StateVariant::Density(_) => "density",
            },
            max_index: spec.max_index(),
            parity: spec.parity(),
            psd_assumed: spec.psd_assumed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub command: Command,
    pub state: StateSummary,
    /// One entry per applicable path, each tagged with its `path`.
    pub metrics: Vec<MetricTensor2>,
    pub quadrature: ReducedIntegrals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureOutput {
    pub command: Command,
    pub state: StateSummary,
    pub metric: MetricTensor2,
    pub reduced_formula: CurvatureReport,
    pub finite_difference: CurvatureReport,
    pub closed_form: Option<CurvatureReport>,
    /// `|R_reduced - R_finite_difference|`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrbOutput {
    pub command: Command,
    pub state: StateSummary,
    #[serde(flatten)]
    pub report: CrbReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicOutput {
    pub command: Command,
    pub state: StateSummary,
    pub speed_drift: f64,
    #[serde(flatten)]
    pub trace: GeodesicTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleOutput {
    pub command: Command,
    pub state: StateSummary,
    pub point: ModelPoint,
    pub seed: u64,
    pub draws: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// The measured discrepancy; `null` when the check could not be computed.
    pub value: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: Command,
    pub state: StateSummary,
    pub point: ModelPoint,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

/// Runs the configured command and renders its report.
pub fn run(config: &RunConfig) -> RunOutcome {
    let result = match config.command {
        Command::Metric => run_metric(config).map(|r| render(config, &r, metric_csv)),
        Command::Curvature => run_curvature(config).map(|r| render(config, &r, curvature_csv)),
        Command::Crb => run_crb(config).map(|r| render(config, &r, crb_csv)),
        Command::Geodesic => run_geodesic(config).map(|r| render(config, &r, geodesic_csv)),
        Command::Sample => run_sample(config).map(|r| render(config, &r, sample_csv)),
        Command::Verify => run_verify(config).map(|r| {
            let code = if r.all_passed { 0 } else { 1 };
            (code, render(config, &r, verify_csv).1)
        }),
    };
    match result {
        Ok((exit_code, stdout)) => RunOutcome { exit_code, stdout },
        Err(e) => {
            log::error!("{e}");
            let obj = ErrorObject {
                status: "error",
                kind: e.kind().into(),
                message: e.to_string(),
                line: None,
                column: None,
                field: None,
            };
            RunOutcome {
                exit_code: 1,
                stdout: to_json(&obj),
            }
        }
    }
}

/// Pretty JSON with a trailing newline. Numbers use the shortest decimal
/// that parses back to the same `f64`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s =
        serde_json::to_string_pretty(value).expect("reports contain only serializable values");
    s.push('\n');
    s
}

fn render<T: Serialize>(config: &RunConfig, report: &T, csv: fn(&T) -> String) -> (i32, String) {
    let text = match config.output_format {
        OutputFormat::Json => to_json(report),
        OutputFormat::Csv => csv(report),
    };
    (0, text)
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

fn metric_csv(r: &MetricReport) -> String {
    let mut out = String::new();
    out.push_str("path,mu,sigma,i_mumu,i_musigma,i_sigmasigma,reduced_mumu,reduced_musigma,reduced_sigmasigma\n");
    for m in &r.metrics {
        let mut row = vec![path_name(m)];
        row.extend(
            [
                m.point.mu,
                m.point.sigma,
                m.i_mumu,
                m.i_musigma,
                m.i_sigmasigma,
                m.reduced.mumu,
                m.reduced.musigma,
                m.reduced.sigmasigma,
            ]
            .map(csv_float),
        );
        csv_row(&mut out, &row);
    }
    out
}

fn path_name<T: Serialize>(m: &T) -> String {
    match serde_json::to_value(m)
        .ok()
        .and_then(|v| v.get("path").cloned())
    {
        Some(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn curvature_csv(r: &CurvatureOutput) -> String {
    let mut out = String::new();
    out.push_str("path,scalar_r,riemann_1212,ricci_mumu,ricci_musigma,ricci_sigmasigma\n");
    let reports = [
        Some(&r.reduced_formula),
        Some(&r.finite_difference),
        r.closed_form.as_ref(),
    ];
    for c in reports.into_iter().flatten() {
        let mut row = vec![path_name(c)];
        row.extend(
            [
                c.scalar_r,
                c.riemann_1212,
                c.ricci[0][0],
                c.ricci[0][1],
                c.ricci[1][1],
            ]
            .map(csv_float),
        );
        csv_row(&mut out, &row);
    }
    out
}

fn crb_csv(r: &CrbOutput) -> String {
    let mut out = String::new();
    out.push_str("component,bound,scaled_variance,relative_se,efficiency_ratio,violation\n");
    for c in &r.report.components {
        let mut row = vec![c.name.clone()];
        row.extend(
            [
                c.bound,
                c.scaled_variance,
                c.relative_se,
                c.efficiency_ratio,
            ]
            .map(csv_float),
        );
        row.push(c.violation.to_string());
        csv_row(&mut out, &row);
    }
    out
}

fn geodesic_csv(r: &GeodesicOutput) -> String {
    let mut out = String::new();
    out.push_str("tau,mu,sigma,dmu,dsigma,speed_squared\n");
    for s in &r.trace.samples {
        let row = [
            s.tau,
            s.mu,
            s.sigma,
            s.dmu,
            s.dsigma,
            r.trace.speed_squared(s),
        ]
        .map(csv_float);
        csv_row(&mut out, &row);
    }
    out
}

fn sample_csv(r: &SampleOutput) -> String {
    let mut out = String::from("index,x\n");
    for (i, x) in r.draws.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", csv_float(*x));
    }
    out
}

fn verify_csv(r: &VerifyReport) -> String {
    let mut out = String::from("name,passed,value,tolerance\n");
    for c in &r.checks {
        let value = c.value.map(csv_float).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{value},{}",
            c.name,
            c.passed,
            csv_float(c.tolerance)
        );
    }
    out
}

fn run_metric(config: &RunConfig) -> Result<MetricReport, RunError> {
    let (spec, point) = (&config.state, &config.point);
    let integrals = reduced_integrals(spec, &config.quad, OffDiagonal::ParityShortCircuit)?;
    let mut metrics = Vec::new();
    match metric_closed_form(spec, point) {
        Ok(m) => metrics.push(m),
        Err(GeometryError::NoClosedForm) => {}
        Err(e) => return Err(e.into()),
    }
    metrics.push(metric_quadrature(spec, point, &config.quad)?);
    if spec.real_coefficients().is_some() || spec.imaginary_coefficients().is_some() {
        metrics.push(metric_series(spec, point)?);
    }
    Ok(MetricReport {
        command: Command::Metric,
        state: StateSummary::of(spec),
        metrics,
        quadrature: integrals,
    })
}

fn run_curvature(config: &RunConfig) -> Result<CurvatureOutput, RunError> {
    let (spec, point) = (&config.state, &config.point);
    let metric = metric_quadrature(spec, point, &config.quad)?;
    let reduced_formula = scalar_curvature_reduced(&metric)?;
    let finite_difference =
        curvature_finite_difference(spec, point, DEFAULT_STEP_SCALE, &config.quad)?;
    let closed_form = match scalar_curvature_closed_form(spec, point) {
        Ok(c) => Some(c),
        Err(GeometryError::NoClosedForm) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(CurvatureOutput {
        command: Command::Curvature,
        state: StateSummary::of(spec),
        metric,
        discrepancy: (reduced_formula.scalar_r - finite_difference.scalar_r).abs(),
        reduced_formula,
        finite_difference,
        closed_form,
    })
}

fn run_crb(config: &RunConfig) -> Result<CrbOutput, RunError> {
    let e = &config.estimation;
    let report = crb_experiment_with(
        &config.state,
        &config.point,
        e.trials,
        e.samples_per_trial,
        e.seed,
        &config.quad,
        &e.fit,
    )?;
    Ok(CrbOutput {
        command: Command::Crb,
        state: StateSummary::of(&config.state),
        report,
    })
}

fn run_geodesic(config: &RunConfig) -> Result<GeodesicOutput, RunError> {
    let g = &config.geodesic;
    let trace = geodesic_trace(
        &config.state,
        &config.point,
        (g.velocity[0], g.velocity[1]),
        g.tau_end,
        g.steps,
        &config.quad,
    )?;
    if trace.hit_boundary {
        log::warn!(
            "geodesic left the sigma > 0 half-plane at tau = {}",
            trace.samples.last().map_or(0.0, |s| s.tau)
        );
    }
    Ok(GeodesicOutput {
        command: Command::Geodesic,
        state: StateSummary::of(&config.state),
        speed_drift: trace.speed_drift(),
        trace,
    })
}

fn run_sample(config: &RunConfig) -> Result<SampleOutput, RunError> {
    let e = &config.estimation;
    let table = CdfTable::new(&config.state, &config.quad)?;
    let batch = sample_with_table(&config.state, &table, &config.point, e.count, e.seed)?;
    Ok(SampleOutput {
        command: Command::Sample,
        state: StateSummary::of(&config.state),
        point: config.point,
        seed: e.seed,
        draws: batch.draws,
    })
}

/// Tolerances of the `verify` suite.
pub mod tolerances {
    pub const KERNEL_NORMALIZATION: f64 = 1e-10;
    pub const METRIC_PATHS: f64 = 1e-8;
    pub const OFF_DIAGONAL: f64 = 1e-10;
    pub const CURVATURE_FINITE_DIFFERENCE: f64 = 1e-4;
    pub const CURVATURE_CLOSED_FORM: f64 = 1e-10;
    pub const CURVATURE_CONTRACTION: f64 = 1e-10;
    pub const INVARIANCE: f64 = 1e-10;
    pub const CRB_INVERSE: f64 = 1e-12;
    pub const GEODESIC_DRIFT: f64 = 1e-6;
    /// Critical value of `sqrt(count) D` at significance `1e-4`,
    /// `sqrt(ln(2 / 1e-4) / 2)`.
    pub const KS_COEFFICIENT: f64 = 2.226;
}

/// Largest componentwise relative difference, each component measured
/// against the larger diagonal entry so that vanishing off-diagonals compare
/// on an absolute scale.
pub fn metric_discrepancy(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    let scale = a[0][0]
        .abs()
        .max(a[1][1].abs())
        .max(b[0][0].abs())
        .max(b[1][1].abs());
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let own = a[i][j].abs().max(b[i][j].abs());
            let denom = if i == j { own } else { scale };
            worst = worst.max((a[i][j] - b[i][j]).abs() / denom);
        }
    }
    worst
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, name: &'static str, tolerance: f64, value: Result<f64, RunError>) {
        let check = match value {
            Ok(v) => Check {
                name,
                passed: v <= tolerance,
                value: Some(v),
                tolerance,
                detail: None,
            },
            Err(e) => Check {
                name,
                passed: false,
                value: None,
                tolerance,
                detail: Some(e.to_string()),
            },
        };
        self.checks.push(check);
    }
}

fn run_verify(config: &RunConfig) -> Result<VerifyReport, RunError> {
    use tolerances::*;
    let (spec, point, quad) = (&config.state, &config.point, &config.quad);
    let mut suite = Suite { checks: Vec::new() };

    suite.record(
        "kernel_normalization",
        KERNEL_NORMALIZATION,
        (|| {
            let k = kernel(spec);
            let total =
                integrate_real_line(|y| k.f(y), quad, spec.degree_hint())?.require_converged()?;
            Ok((total.value * std::f64::consts::SQRT_2 - 1.0).abs())
        })(),
    );

    let metric = metric_quadrature(spec, point, quad);

    if matches!(spec.variant(), StateVariant::Eigenstate(_)) {
        suite.record(
            "metric_closed_form_vs_quadrature",
            METRIC_PATHS,
            (|| {
                let cf = metric_closed_form(spec, point)?;
                Ok(metric_discrepancy(
                    &cf.reduced.matrix(),
                    &metric.clone()?.reduced.matrix(),
                ))
            })(),
        );
    }
    if spec.real_coefficients().is_some() || spec.imaginary_coefficients().is_some() {
        suite.record(
            "metric_series_vs_quadrature",
            METRIC_PATHS,
            (|| {
                let series = metric_series(spec, point)?;
                Ok(metric_discrepancy(
                    &series.reduced.matrix(),
                    &metric.clone()?.reduced.matrix(),
                ))
            })(),
        );
    }
    if spec.parity() == Parity::Even {
        suite.record(
            "off_diagonal_vanishes",
            OFF_DIAGONAL,
            (|| {
                let r = reduced_integrals(spec, quad, OffDiagonal::Integrate)?;
                Ok(r.reduced.musigma.abs())
            })(),
        );
    }

    suite.record(
        "curvature_reduced_vs_finite_difference",
        CURVATURE_FINITE_DIFFERENCE,
        (|| {
            let r = scalar_curvature_reduced(&metric.clone()?)?.scalar_r;
            let fd = curvature_finite_difference(spec, point, DEFAULT_STEP_SCALE, quad)?.scalar_r;
            Ok((r - fd).abs() / r.abs().max(1.0))
        })(),
    );
    suite.record(
        "curvature_contraction",
        CURVATURE_CONTRACTION,
        (|| {
            let m = metric.clone()?;
            let c = scalar_curvature_reduced(&m)?;
            let g = m.matrix();
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            let inv = [
                [g[1][1] / det, -g[0][1] / det],
                [-g[1][0] / det, g[0][0] / det],
            ];
            let contracted: f64 = (0..2)
                .flat_map(|k| (0..2).map(move |l| (k, l)))
                .map(|(k, l)| inv[k][l] * c.ricci[k][l])
                .sum();
            Ok((contracted - c.scalar_r).abs() / c.scalar_r.abs())
        })(),
    );
    if matches!(spec.variant(), StateVariant::Eigenstate(_)) {
        suite.record(
            "curvature_closed_form",
            CURVATURE_CLOSED_FORM,
            (|| {
                let r = scalar_curvature_reduced(&metric.clone()?)?.scalar_r;
                let cf = scalar_curvature_closed_form(spec, point)?.scalar_r;
                Ok((r - cf).abs() / cf.abs())
            })(),
        );
    }
    suite.record(
        "curvature_negative",
        0.0,
        (|| {
            // Passes when R itself is at most zero.
            Ok(scalar_curvature_reduced(&metric.clone()?)?.scalar_r)
        })(),
    );

    suite.record(
        "mu_independence",
        INVARIANCE,
        (|| {
            let base = metric.clone()?;
            let shifted =
                metric_quadrature(spec, &ModelPoint::new(point.mu + 7.25, point.sigma)?, quad)?;
            Ok(metric_discrepancy(
                &base.reduced.matrix(),
                &shifted.reduced.matrix(),
            ))
        })(),
    );
    suite.record(
        "sigma_scaling",
        INVARIANCE,
        (|| {
            let base = metric.clone()?;
            let mut worst: f64 = 0.0;
            for factor in [0.5, 3.0] {
                let other = metric_quadrature(
                    spec,
                    &ModelPoint::new(point.mu, point.sigma * factor)?,
                    quad,
                )?;
                let scaled = other.matrix().map(|row| row.map(|v| v * factor * factor));
                worst = worst.max(metric_discrepancy(&scaled, &base.matrix()));
            }
            Ok(worst)
        })(),
    );
    suite.record(
        "crb_inverse",
        CRB_INVERSE,
        (|| {
            let m = metric.clone()?;
            let inv = crb_bound(&m)?.matrix;
            let g = m.matrix();
            let mut worst: f64 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let prod: f64 = (0..2).map(|k| g[i][k] * inv[k][j]).sum();
                    worst = worst.max((prod - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
            Ok(worst)
        })(),
    );

    let g = &config.geodesic;
    suite.record(
        "geodesic_speed_conservation",
        GEODESIC_DRIFT,
        (|| {
            let m = metric.clone()?;
            let trace = crate::geometry::geodesic_trace_reduced(
                &m.reduced,
                point,
                (g.velocity[0], g.velocity[1]),
                g.tau_end,
                g.steps,
            )?;
            Ok(trace.speed_drift())
        })(),
    );

    let count = config.estimation.count;
    let ks_tol = KS_COEFFICIENT / (count.max(1) as f64).sqrt();
    suite.record(
        "sampling_ks",
        ks_tol,
        (|| {
            let table = CdfTable::new(spec, quad)?;
            let batch = sample_with_table(spec, &table, point, count, config.estimation.seed)?;
            Ok(ks_distance(&batch, &table))
        })(),
    );

    let all_passed = suite.checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        command: Command::Verify,
        state: StateSummary::of(spec),
        point: *point,
        seed: config.estimation.seed,
        checks: suite.checks,
        all_passed,
    })
}
