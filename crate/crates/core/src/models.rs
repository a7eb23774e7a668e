//! Statistical models on the `(mu, sigma)` half-plane: the Gaussian, the
//! Hermite-Gaussian family, and position densities of general oscillator
//! states given by a coefficient table `lambda_nm`.
//!
//! Every density has the form `P(x) = f(y)/sigma` with
//! `y = (x - mu)/(sqrt(2) sigma)` and
//! `f(y) = sum_nm lambda_nm a_n a_m e^{-y^2} H_n(y) H_m(y) / sqrt(2 pi)`.

use crate::hermite::{normalized_table, MAX_DEGREE};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

/// Tolerance on normalization and Hermiticity of state specs.
pub const SPEC_TOL: f64 = 1e-12;

/// Largest density table (distinct indices) that gets an eigenvalue check.
pub const PSD_CHECK_MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("mu must be finite, got {0}")]
    InvalidMu(f64),
    #[error("invalid oscillator: {0}")]
    InvalidOscillator(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("state index {0} exceeds the supported maximum of {MAX_DEGREE}")]
    IndexTooLarge(usize),
    #[error("operation requires real coefficients")]
    ComplexCoefficients,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelPoint {
    pub mu: f64,
    pub sigma: f64,
}

impl ModelPoint {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, ModelError> {
        if !mu.is_finite() {
            return Err(ModelError::InvalidMu(mu));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ModelError::InvalidSigma(sigma));
        }
        Ok(Self { mu, sigma })
    }

    /// Dimensionless coordinate `(x - mu)/(sqrt(2) sigma)`.
    pub fn reduced(&self, x: f64) -> f64 {
        (x - self.mu) / (SQRT_2 * self.sigma)
    }
}

/// One-dimensional harmonic oscillator `H = p^2/2m + m omega0^2 (x - x0)^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysicalOscillator {
    pub mass: f64,
    pub omega0: f64,
    pub x0: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    1.0
}

impl PhysicalOscillator {
    pub fn new(mass: f64, omega0: f64, x0: f64, hbar: f64) -> Result<Self, ModelError> {
        let osc = Self {
            mass,
            omega0,
            x0,
            hbar,
        };
        osc.validate()?;
        Ok(osc)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("mass", self.mass),
            ("omega0", self.omega0),
            ("hbar", self.hbar),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::InvalidOscillator(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.x0.is_finite() {
            return Err(ModelError::InvalidOscillator(format!(
                "x0 must be finite, got {}",
                self.x0
            )));
        }
        Ok(())
    }

    /// `E_n = hbar omega0 (n + 1/2)`.
    pub fn energy(&self, n: usize) -> f64 {
        self.hbar * self.omega0 * (n as f64 + 0.5)
    }
}

/// `mu = x0`, `sigma^2 = hbar / (2 m omega0)`.
pub fn from_physical(osc: &PhysicalOscillator) -> Result<ModelPoint, ModelError> {
    osc.validate()?;
    ModelPoint::new(osc.x0, (osc.hbar / (2.0 * osc.mass * osc.omega0)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateVariant {
    Eigenstate(usize),
    /// `(n, lambda_n)` with `lambda_n >= 0`, summing to one.
    Mixture(Vec<(usize, f64)>),
    /// `(n, alpha_n)` with `sum |alpha_n|^2 = 1`.
    Superposition(Vec<(usize, Complex64)>),
    /// Hermitian table `(n, m) -> lambda_nm` with unit trace.
    Density(BTreeMap<(usize, usize), Complex64>),
}

/// A validated quantum state of the oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    variant: StateVariant,
}

fn check_index(n: usize) -> Result<(), ModelError> {
    if n > MAX_DEGREE {
        Err(ModelError::IndexTooLarge(n))
    } else {
        Ok(())
    }
}

fn check_unique(indices: impl Iterator<Item = usize>) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for n in indices {
        check_index(n)?;
        if !seen.insert(n) {
            return Err(ModelError::InvalidState(format!("index {n} listed twice")));
        }
    }
    if seen.is_empty() {
        return Err(ModelError::InvalidState("no terms given".into()));
    }
    Ok(())
}

impl StateSpec {
    pub fn eigenstate(n: usize) -> Result<Self, ModelError> {
        check_index(n)?;
        Ok(Self {
            variant: StateVariant::Eigenstate(n),
        })
    }

    pub fn mixture(weights: Vec<(usize, f64)>) -> Result<Self, ModelError> {
        check_unique(weights.iter().map(|t| t.0))?;
        if let Some((n, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(ModelError::InvalidState(format!(
                "mixture weight for n = {n} must be non-negative, got {w}"
            )));
        }
        let total: f64 = weights.iter().map(|t| t.1).sum();
        if (total - 1.0).abs() > SPEC_TOL {
            return Err(ModelError::InvalidState(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            variant: StateVariant::Mixture(weights),
        })
    }

    pub fn superposition(coeffs: Vec<(usize, Complex64)>) -> Result<Self, ModelError> {
        check_unique(coeffs.iter().map(|t| t.0))?;
        if coeffs
            .iter()
            .any(|(_, a)| !(a.re.is_finite() && a.im.is_finite()))
        {
            return Err(ModelError::InvalidState("non-finite coefficient".into()));
        }
        let norm: f64 = coeffs.iter().map(|t| t.1.norm_sqr()).sum();
        if (norm - 1.0).abs() > SPEC_TOL {
            return Err(ModelError::InvalidState(format!(
                "superposition norm is {norm}, expected 1"
            )));
        }
        Ok(Self {
            variant: StateVariant::Superposition(coeffs),
        })
    }

    /// Real-coefficient superposition.
    pub fn real_superposition(coeffs: &[(usize, f64)]) -> Result<Self, ModelError> {
        Self::superposition(
            coeffs
                .iter()
                .map(|&(n, a)| (n, Complex64::new(a, 0.0)))
                .collect(),
        )
    }

    pub fn density(table: BTreeMap<(usize, usize), Complex64>) -> Result<Self, ModelError> {
        if table.is_empty() {
            return Err(ModelError::InvalidState("empty density table".into()));
        }
        for (&(n, m), v) in &table {
            check_index(n)?;
            check_index(m)?;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(ModelError::InvalidState(format!(
                    "non-finite entry ({n}, {m})"
                )));
            }
            let mirror = table.get(&(m, n)).copied().unwrap_or_default();
            if (v - mirror.conj()).norm() > SPEC_TOL {
                return Err(ModelError::InvalidState(format!(
                    "table is not Hermitian at ({n}, {m})"
                )));
            }
        }
        let trace: Complex64 = table
            .iter()
            .filter(|((n, m), _)| n == m)
            .map(|(_, v)| *v)
            .sum();
        if (trace.re - 1.0).abs() > SPEC_TOL || trace.im.abs() > SPEC_TOL {
            return Err(ModelError::InvalidState(format!(
                "density trace is {trace}, expected 1"
            )));
        }
        let spec = Self {
            variant: StateVariant::Density(table),
        };
        let blocks = spec.parity_blocks();
        if blocks.iter().map(Vec::len).sum::<usize>() <= PSD_CHECK_MAX_DIM {
            for block in &blocks {
                let (values, _) = spec.block_eigen(block);
                if let Some(v) = values.iter().find(|v| **v < -SPEC_TOL) {
                    return Err(ModelError::InvalidState(format!(
                        "density table has negative eigenvalue {v}"
                    )));
                }
            }
        } else {
            log::warn!(
                "density table spans more than {PSD_CHECK_MAX_DIM} indices; positive semidefiniteness assumed"
            );
        }
        Ok(spec)
    }

    /// Rescales weights, amplitudes or the table to unit normalization.
    pub fn renormalized(variant: StateVariant) -> Result<Self, ModelError> {
        match variant {
            StateVariant::Eigenstate(n) => Self::eigenstate(n),
            StateVariant::Mixture(w) => {
                let total: f64 = w.iter().map(|t| t.1).sum();
                if !(total > 0.0 && total.is_finite()) {
                    return Err(ModelError::InvalidState(format!(
                        "cannot renormalize weights summing to {total}"
                    )));
                }
                Self::mixture(w.into_iter().map(|(n, x)| (n, x / total)).collect())
            }
            StateVariant::Superposition(c) => {
                let norm = c.iter().map(|t| t.1.norm_sqr()).sum::<f64>().sqrt();
                if !(norm > 0.0 && norm.is_finite()) {
                    return Err(ModelError::InvalidState(format!(
                        "cannot renormalize amplitudes of norm {norm}"
                    )));
                }
                Self::superposition(c.into_iter().map(|(n, a)| (n, a / norm)).collect())
            }
            StateVariant::Density(t) => {
                let trace: f64 = t
                    .iter()
                    .filter(|((n, m), _)| n == m)
                    .map(|(_, v)| v.re)
                    .sum();
                if !(trace > 0.0 && trace.is_finite()) {
                    return Err(ModelError::InvalidState(format!(
                        "cannot renormalize table of trace {trace}"
                    )));
                }
                Self::density(t.into_iter().map(|(k, v)| (k, v / trace)).collect())
            }
        }
    }

    pub fn variant(&self) -> &StateVariant {
        &self.variant
    }

    /// Nonzero `(n, m) -> lambda_nm` entries.
    pub fn table(&self) -> BTreeMap<(usize, usize), Complex64> {
        let mut out = BTreeMap::new();
        match &self.variant {
            StateVariant::Eigenstate(n) => {
                out.insert((*n, *n), Complex64::new(1.0, 0.0));
            }
            StateVariant::Mixture(w) => {
                for &(n, x) in w {
                    if x != 0.0 {
                        out.insert((n, n), Complex64::new(x, 0.0));
                    }
                }
            }
            StateVariant::Superposition(c) => {
                for &(n, a) in c {
                    for &(m, b) in c {
                        let v = a * b.conj();
                        if v != Complex64::default() {
                            out.insert((n, m), v);
                        }
                    }
                }
            }
            StateVariant::Density(t) => {
                for (&k, &v) in t {
                    if v != Complex64::default() {
                        out.insert(k, v);
                    }
                }
            }
        }
        out
    }

    pub fn max_index(&self) -> usize {
        self.table()
            .keys()
            .map(|&(n, m)| n.max(m))
            .max()
            .unwrap_or(0)
    }

    /// Quadrature degree hint: twice the largest index plus two.
    pub fn degree_hint(&self) -> usize {
        2 * self.max_index() + 2
    }

    pub fn parity(&self) -> Parity {
        if self.table().keys().all(|&(n, m)| n % 2 == m % 2) {
            Parity::Even
        } else {
            Parity::None
        }
    }

    /// Coefficients when the state is a superposition with purely real
    /// amplitudes (eigenstates included).
    pub fn real_coefficients(&self) -> Option<Vec<(usize, f64)>> {
        match &self.variant {
            StateVariant::Eigenstate(n) => Some(vec![(*n, 1.0)]),
            StateVariant::Superposition(c) if c.iter().all(|t| t.1.im == 0.0) => {
                Some(c.iter().map(|&(n, a)| (n, a.re)).collect())
            }
            _ => None,
        }
    }

    /// `Im(alpha_n)` when every amplitude is purely imaginary.
    pub fn imaginary_coefficients(&self) -> Option<Vec<(usize, f64)>> {
        match &self.variant {
            StateVariant::Superposition(c) if c.iter().all(|t| t.1.re == 0.0) => {
                Some(c.iter().map(|&(n, a)| (n, a.im)).collect())
            }
            _ => None,
        }
    }

    /// Whether the positive-semidefiniteness of a large density table was
    /// assumed rather than checked.
    pub fn psd_assumed(&self) -> bool {
        matches!(self.variant, StateVariant::Density(_))
            && self.parity_blocks().iter().map(Vec::len).sum::<usize>() > PSD_CHECK_MAX_DIM
    }

    /// Index sets that never couple: even and odd indices separately when
    /// the table respects parity, otherwise a single block.
    fn parity_blocks(&self) -> Vec<Vec<usize>> {
        let table = self.table();
        let indices: BTreeSet<usize> = table.keys().flat_map(|&(n, m)| [n, m]).collect();
        if table.keys().all(|&(n, m)| n % 2 == m % 2) {
            let (even, odd): (Vec<usize>, Vec<usize>) =
                indices.into_iter().partition(|n| n % 2 == 0);
            [even, odd].into_iter().filter(|b| !b.is_empty()).collect()
        } else {
            vec![indices.into_iter().collect()]
        }
    }

    fn block_eigen(&self, block: &[usize]) -> (Vec<f64>, DMatrix<Complex64>) {
        let table = self.table();
        let dim = block.len();
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            table
                .get(&(block[i], block[j]))
                .copied()
                .unwrap_or_default()
        });
        let eig = m.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }

    /// Splits the state into weighted pure components
    /// `rho = sum_k p_k |v_k><v_k|`, or `None` for tables too large to
    /// diagonalize.
    fn pure_components(&self) -> Option<Vec<PureComponent>> {
        let one = Complex64::new(1.0, 0.0);
        match &self.variant {
            StateVariant::Eigenstate(n) => Some(vec![PureComponent {
                weight: 1.0,
                coeffs: vec![(*n, one)],
            }]),
            StateVariant::Mixture(w) => Some(
                w.iter()
                    .filter(|t| t.1 > 0.0)
                    .map(|&(n, x)| PureComponent {
                        weight: x,
                        coeffs: vec![(n, one)],
                    })
                    .collect(),
            ),
            StateVariant::Superposition(c) => Some(vec![PureComponent {
                weight: 1.0,
                coeffs: c
                    .iter()
                    .filter(|t| t.1 != Complex64::default())
                    .copied()
                    .collect(),
            }]),
            StateVariant::Density(_) => {
                if self.psd_assumed() {
                    return None;
                }
                let mut out = Vec::new();
                for block in self.parity_blocks() {
                    let (values, vectors) = self.block_eigen(&block);
                    for (k, &p) in values.iter().enumerate() {
                        if p <= SPEC_TOL {
                            continue;
                        }
                        let coeffs = block
                            .iter()
                            .enumerate()
                            .map(|(i, &n)| (n, vectors[(i, k)]))
                            .collect();
                        out.push(PureComponent { weight: p, coeffs });
                    }
                }
                Some(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// Every occupied pair `(n, m)` has `n = m (mod 2)`; `f` is even.
    Even,
    None,
}

#[derive(Debug, Clone)]
struct PureComponent {
    weight: f64,
    coeffs: Vec<(usize, Complex64)>,
}

#[derive(Debug, Clone)]
enum KernelRepr {
    Components(Vec<PureComponent>),
    Table(Vec<((usize, usize), Complex64)>),
}

/// The dimensionless kernel `f(y)` and its derivative.
#[derive(Debug, Clone)]
pub struct KernelFn {
    repr: KernelRepr,
    parity: Parity,
    max_index: usize,
    psd_assumed: bool,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `e^{-y^2/2} (h_n' - y h_n)` for `h_n = a_n H_n`, from the normalized
/// table: `sqrt(n/2) psi_{n-1} - sqrt((n+1)/2) psi_{n+1}`.
fn lowered(psi: &[f64], n: usize) -> f64 {
    let down = if n > 0 {
        (n as f64 / 2.0).sqrt() * psi[n - 1]
    } else {
        0.0
    };
    down - ((n as f64 + 1.0) / 2.0).sqrt() * psi[n + 1]
}

impl KernelFn {
    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn degree_hint(&self) -> usize {
        2 * self.max_index + 2
    }

    /// True when the density table was too large for the eigenvalue check.
    pub fn psd_assumed(&self) -> bool {
        self.psd_assumed
    }

    fn psi(&self, y: f64) -> Vec<f64> {
        let mut psi = vec![0.0; self.max_index + 2];
        normalized_table(y, &mut psi);
        psi
    }

    /// Returns `(f(y), f'(y))`.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let mut psi = Vec::new();
        self.eval_with(y, &mut psi)
    }

    /// [`eval`](Self::eval) reusing `scratch` for the Hermite table.
    pub fn eval_with(&self, y: f64, scratch: &mut Vec<f64>) -> (f64, f64) {
        scratch.clear();
        scratch.resize(self.max_index + 2, 0.0);
        normalized_table(y, scratch);
        let psi = &scratch[..];
        match &self.repr {
            KernelRepr::Components(parts) => {
                let mut f = 0.0;
                let mut df = 0.0;
                for part in parts {
                    let (g, d) = amplitudes(part, psi);
                    f += part.weight * g.norm_sqr();
                    df += part.weight * (g.conj() * d).re;
                }
                (INV_SQRT_2PI * f, 2.0 * INV_SQRT_2PI * df)
            }
            KernelRepr::Table(entries) => {
                let mut f = 0.0;
                let mut df = 0.0;
                for &((n, m), l) in entries {
                    f += l.re * psi[n] * psi[m];
                    df += l.re * (lowered(psi, n) * psi[m] + psi[n] * lowered(psi, m));
                }
                (INV_SQRT_2PI * f, INV_SQRT_2PI * df)
            }
        }
    }

    pub fn f(&self, y: f64) -> f64 {
        self.eval(y).0
    }

    pub fn df(&self, y: f64) -> f64 {
        self.eval(y).1
    }

    /// `(num, den)` with `num/den = f'(y)^2 / f(y)`.
    ///
    /// For the component form this is
    /// `4/sqrt(2pi) (sum p Re(conj(G) D))^2 / sum p |G|^2`, which is bounded
    /// by Cauchy-Schwarz and never has a negative denominator.
    pub fn fisher_parts(&self, y: f64) -> (f64, f64) {
        match &self.repr {
            KernelRepr::Components(parts) => {
                let psi = self.psi(y);
                let mut cross = 0.0;
                let mut mass = 0.0;
                for part in parts {
                    let (g, d) = amplitudes(part, &psi);
                    mass += part.weight * g.norm_sqr();
                    cross += part.weight * (g.conj() * d).re;
                }
                (4.0 * INV_SQRT_2PI * cross * cross, mass)
            }
            KernelRepr::Table(_) => {
                let (f, df) = self.eval(y);
                (df * df, f.max(0.0))
            }
        }
    }

    /// `P(x) = f(y(x)) / sigma`.
    pub fn pdf(&self, point: &ModelPoint, x: f64) -> f64 {
        self.f(point.reduced(x)) / point.sigma
    }
}

fn amplitudes(part: &PureComponent, psi: &[f64]) -> (Complex64, Complex64) {
    let mut g = Complex64::default();
    let mut d = Complex64::default();
    for &(n, c) in &part.coeffs {
        g += c * psi[n];
        d += c * lowered(psi, n);
    }
    (g, d)
}

pub fn kernel(spec: &StateSpec) -> KernelFn {
    let repr = match spec.pure_components() {
        Some(parts) => KernelRepr::Components(parts),
        None => KernelRepr::Table(spec.table().into_iter().collect()),
    };
    KernelFn {
        repr,
        parity: spec.parity(),
        max_index: spec.max_index(),
        psd_assumed: spec.psd_assumed(),
    }
}

/// Position density of `spec` at `point`.
pub fn pdf(spec: &StateSpec, point: &ModelPoint, x: f64) -> f64 {
    kernel(spec).pdf(point, x)
}

/// Factored form of a real superposition: `f = e^{-y^2} g^2 / sqrt(2 pi)`
/// with `g = sum alpha_n a_n H_n`.
#[derive(Debug, Clone)]
pub struct PureFactoredKernel {
    coeffs: Vec<(usize, f64)>,
    max_index: usize,
}

pub fn kernel_pure_factored(spec: &StateSpec) -> Result<PureFactoredKernel, ModelError> {
    let coeffs = spec
        .real_coefficients()
        .ok_or(ModelError::ComplexCoefficients)?;
    let max_index = coeffs.iter().map(|t| t.0).max().unwrap_or(0);
    Ok(PureFactoredKernel { coeffs, max_index })
}

impl PureFactoredKernel {
    fn psi(&self, y: f64) -> Vec<f64> {
        let mut psi = vec![0.0; self.max_index + 2];
        normalized_table(y, &mut psi);
        psi
    }

    /// `g(y) = sum alpha_n a_n H_n(y)`. Grows like `y^n`; overflows to
    /// infinity far outside the support.
    pub fn g(&self, y: f64) -> f64 {
        let psi = self.psi(y);
        let s: f64 = self.coeffs.iter().map(|&(n, a)| a * psi[n]).sum();
        s * (0.5 * y * y).exp()
    }

    /// `g'(y) = sum alpha_n a_n 2n H_{n-1}(y)`.
    pub fn dg(&self, y: f64) -> f64 {
        let psi = self.psi(y);
        let s: f64 = self
            .coeffs
            .iter()
            .filter(|t| t.0 > 0)
            .map(|&(n, a)| a * (2.0 * n as f64).sqrt() * psi[n - 1])
            .sum();
        s * (0.5 * y * y).exp()
    }

    /// `f'(y)^2 / f(y) = 4 e^{-y^2} (g' - y g)^2 / sqrt(2 pi)`, evaluated
    /// without forming the ratio.
    pub fn fisher_density(&self, y: f64) -> f64 {
        let psi = self.psi(y);
        let d: f64 = self.coeffs.iter().map(|&(n, a)| a * lowered(&psi, n)).sum();
        4.0 * INV_SQRT_2PI * d * d
    }

    pub fn degree_hint(&self) -> usize {
        2 * self.max_index + 2
    }
}

/// Eigenfunction `phi_n(x)` of the oscillator centred at `mu` with width
/// `sigma`.
pub fn wavefunction(n: usize, point: &ModelPoint, x: f64) -> Result<f64, ModelError> {
    check_index(n)?;
    let mut psi = vec![0.0; n + 1];
    normalized_table(point.reduced(x), &mut psi);
    Ok(psi[n] / ((2.0 * PI).sqrt() * point.sigma).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{hermite, norm_factor};
    use crate::quadrature::{integrate_real_line, QuadConfig};

    fn std_point() -> ModelPoint {
        ModelPoint::new(0.0, 1.0).unwrap()
    }

    fn rho01() -> StateSpec {
        StateSpec::mixture(vec![(0, 0.5), (1, 0.5)]).unwrap()
    }

    fn even_pair() -> StateSpec {
        let h = 0.5f64.sqrt();
        StateSpec::real_superposition(&[(0, h), (2, h)]).unwrap()
    }

    #[test]
    fn pdf_examples() {
        let p = std_point();
        let peak = 1.0 / (2.0 * PI).sqrt();
        let e0 = StateSpec::eigenstate(0).unwrap();
        assert!((pdf(&e0, &p, 0.0) - peak).abs() < 1e-15);
        assert_eq!(pdf(&StateSpec::eigenstate(1).unwrap(), &p, 0.0), 0.0);
        let direct =
            0.5 * pdf(&e0, &p, 0.0) + 0.5 * pdf(&StateSpec::eigenstate(1).unwrap(), &p, 0.0);
        assert!((pdf(&rho01(), &p, 0.0) - direct).abs() < 1e-16);
        assert!((pdf(&rho01(), &p, 0.0) - 0.5 * peak).abs() < 1e-15);
    }

    #[test]
    fn eigenstate_pdf_matches_hermite_gaussian_formula() {
        let point = ModelPoint::new(0.35, 1.3).unwrap();
        for n in 0..=20 {
            let spec = StateSpec::eigenstate(n).unwrap();
            for &x in &[-3.0, -1.1, 0.1, 0.4, 1.7, 4.2] {
                let y = point.reduced(x);
                let h = hermite(n, y).unwrap();
                let a = norm_factor(n);
                let direct =
                    (-(x - point.mu).powi(2) / (2.0 * point.sigma.powi(2))).exp() * a * a * h * h
                        / ((2.0 * PI).sqrt() * point.sigma);
                let got = pdf(&spec, &point, x);
                assert!(
                    (got - direct).abs() <= 1e-12 * direct.abs().max(1e-300),
                    "n={n} x={x} {got} {direct}"
                );
            }
        }
    }

    #[test]
    fn parity_flags() {
        assert_eq!(
            kernel(&StateSpec::eigenstate(3).unwrap()).parity(),
            Parity::Even
        );
        assert_eq!(kernel(&even_pair()).parity(), Parity::Even);
        let h = 0.5f64.sqrt();
        let mixed = StateSpec::real_superposition(&[(0, h), (1, h)]).unwrap();
        assert_eq!(kernel(&mixed).parity(), Parity::None);
        assert_eq!(kernel(&rho01()).parity(), Parity::Even);
    }

    #[test]
    fn kernel_matches_eigenstate_closed_form() {
        let k = kernel(&StateSpec::eigenstate(4).unwrap());
        for &y in &[-2.0, -0.3, 0.0, 1.1] {
            let h = hermite(4, y).unwrap();
            let a = norm_factor(4);
            let expected = (-y * y).exp() * a * a * h * h / (2.0 * PI).sqrt();
            assert!((k.f(y) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn validation() {
        assert!(ModelPoint::new(0.0, 0.0).is_err());
        assert!(ModelPoint::new(f64::NAN, 1.0).is_err());
        assert!(StateSpec::mixture(vec![(0, 0.5), (1, 0.5001)]).is_err());
        assert!(StateSpec::mixture(vec![(0, 1.5), (1, -0.5)]).is_err());
        assert!(StateSpec::mixture(vec![(0, 0.5), (0, 0.5)]).is_err());
        assert!(StateSpec::superposition(vec![(0, Complex64::new(1.0, 0.1))]).is_err());
        assert!(StateSpec::eigenstate(MAX_DEGREE + 1).is_err());
        let mut t = BTreeMap::new();
        t.insert((0, 0), Complex64::new(0.5, 0.0));
        t.insert((1, 1), Complex64::new(0.5, 0.0));
        t.insert((0, 1), Complex64::new(0.0, 0.2));
        // missing conjugate partner
        assert!(StateSpec::density(t.clone()).is_err());
        t.insert((1, 0), Complex64::new(0.0, -0.2));
        assert!(StateSpec::density(t.clone()).is_ok());
        // |lambda_01| > 1/2 makes the 2x2 table indefinite
        t.insert((0, 1), Complex64::new(0.0, 0.7));
        t.insert((1, 0), Complex64::new(0.0, -0.7));
        assert!(StateSpec::density(t).is_err());
    }

    #[test]
    fn renormalize_fixes_rounding() {
        let spec =
            StateSpec::renormalized(StateVariant::Mixture(vec![(0, 0.5), (1, 0.5001)])).unwrap();
        let table = spec.table();
        let total: f64 = table.values().map(|v| v.re).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_matches_superposition() {
        let a = Complex64::new(0.6, 0.0);
        let b = Complex64::new(0.0, 0.8);
        let sup = StateSpec::superposition(vec![(1, a), (2, b)]).unwrap();
        let dens = StateSpec::density(sup.table()).unwrap();
        let (k1, k2) = (kernel(&sup), kernel(&dens));
        for &y in &[-1.7, -0.2, 0.3, 2.5] {
            let (f1, d1) = k1.eval(y);
            let (f2, d2) = k2.eval(y);
            assert!((f1 - f2).abs() < 1e-14 && (d1 - d2).abs() < 1e-14);
        }
    }

    #[test]
    fn large_density_uses_table_path() {
        let mut t = BTreeMap::new();
        for n in 0..70 {
            t.insert((n, n), Complex64::new(1.0 / 70.0, 0.0));
        }
        let spec = StateSpec::density(t).unwrap();
        assert!(spec.psd_assumed());
        let k = kernel(&spec);
        assert!(k.psd_assumed());
        let mix = StateSpec::mixture((0..70).map(|n| (n, 1.0 / 70.0)).collect()).unwrap();
        let km = kernel(&mix);
        for &y in &[-3.0, 0.5, 4.0] {
            assert!((k.f(y) - km.f(y)).abs() < 1e-14);
            assert!((k.df(y) - km.df(y)).abs() < 1e-13);
        }
    }

    #[test]
    fn kernel_normalization() {
        let cfg = QuadConfig::default();
        for spec in [StateSpec::eigenstate(4).unwrap(), rho01(), even_pair()] {
            let k = kernel(&spec);
            let r = integrate_real_line(|y| k.f(y), &cfg, k.degree_hint()).unwrap();
            assert!((r.value - 0.5f64.sqrt()).abs() < 1e-10, "{spec:?}");
        }
    }

    #[test]
    fn pdf_normalizes_at_random_points() {
        let cfg = QuadConfig::default();
        let points = [
            (0.0, 1.0),
            (-2.5, 0.3),
            (4.1, 2.7),
            (0.9, 0.05),
            (-7.0, 11.0),
        ];
        for spec in [StateSpec::eigenstate(7).unwrap(), rho01(), even_pair()] {
            let k = kernel(&spec);
            for &(mu, sigma) in &points {
                let p = ModelPoint::new(mu, sigma).unwrap();
                // dx = sqrt(2) sigma dy
                let r = integrate_real_line(
                    |y| k.pdf(&p, p.mu + SQRT_2 * p.sigma * y) * SQRT_2 * p.sigma,
                    &cfg,
                    k.degree_hint(),
                )
                .unwrap();
                assert!((r.value - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn factored_kernel_examples() {
        let g0 = kernel_pure_factored(&StateSpec::eigenstate(0).unwrap()).unwrap();
        for &y in &[-1.5f64, 0.0, 0.7] {
            let expected = 4.0 * y * y * (-y * y).exp() / (2.0 * PI).sqrt();
            assert!((g0.fisher_density(y) - expected).abs() < 1e-15);
            assert!((g0.g(y) - 1.0).abs() < 1e-15);
            assert_eq!(g0.dg(y), 0.0);
        }
        // Eigenstate as superposition: finite at the nodes of H_3.
        let g3 = kernel_pure_factored(&StateSpec::eigenstate(3).unwrap()).unwrap();
        let node = 1.5f64.sqrt();
        assert!(g3.fisher_density(node).is_finite() && g3.fisher_density(node) > 0.0);
        assert!(g3.fisher_density(0.0) > 0.0);

        // alpha_0 = -alpha_2: g = h (1 - (4y^2 - 2)/sqrt(8)) vanishes at
        // y^2 = (2 + sqrt(8))/4.
        let h = 0.5f64.sqrt();
        let spec = StateSpec::real_superposition(&[(0, h), (2, -h)]).unwrap();
        let fac = kernel_pure_factored(&spec).unwrap();
        let k = kernel(&spec);
        let node = ((2.0 + 8f64.sqrt()) / 4.0).sqrt();
        assert!(fac.g(node).abs() < 1e-12);
        let ratio = |y: f64| {
            let (f, df) = k.eval(y);
            df * df / f
        };
        let limit = 0.5 * (ratio(node + 1e-6) + ratio(node - 1e-6));
        assert!(
            (fac.fisher_density(node) - limit).abs() < 1e-6 * limit,
            "{limit}"
        );

        let complex = StateSpec::superposition(vec![(0, Complex64::new(0.0, 1.0))]).unwrap();
        assert!(matches!(
            kernel_pure_factored(&complex),
            Err(ModelError::ComplexCoefficients)
        ));
    }

    #[test]
    fn factored_derivatives_match_raw_hermite() {
        let c = [(1, 0.6), (4, -0.8)];
        let fac = kernel_pure_factored(&StateSpec::real_superposition(&c).unwrap()).unwrap();
        for &y in &[-1.2, 0.3, 2.0] {
            let g: f64 = c
                .iter()
                .map(|&(n, a)| a * norm_factor(n) * hermite(n, y).unwrap())
                .sum();
            let dg: f64 = c
                .iter()
                .map(|&(n, a)| a * norm_factor(n) * 2.0 * n as f64 * hermite(n - 1, y).unwrap())
                .sum();
            assert!((fac.g(y) - g).abs() < 1e-12);
            assert!((fac.dg(y) - dg).abs() < 1e-12);
        }
    }

    #[test]
    fn physical_mapping() {
        let p = from_physical(&PhysicalOscillator::new(1.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(p.mu, 0.0);
        assert!((p.sigma - 0.5f64.sqrt()).abs() < 1e-16);
        let p = from_physical(&PhysicalOscillator::new(2.0, 1.0, 3.0, 1.0).unwrap()).unwrap();
        assert_eq!((p.mu, p.sigma), (3.0, 0.5));
        let osc = PhysicalOscillator::new(1.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(osc.energy(1), 3.0);
        assert!(PhysicalOscillator::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(PhysicalOscillator::new(1.0, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn wavefunction_examples() {
        let p = std_point();
        let v = wavefunction(0, &p, 0.0).unwrap();
        assert!((v - (2.0 * PI).powf(-0.25)).abs() < 1e-15);
        for &x in &[0.3, 1.4, 2.9] {
            assert_eq!(
                wavefunction(1, &p, -x).unwrap(),
                -wavefunction(1, &p, x).unwrap()
            );
        }
        let r = integrate_real_line(
            |y| wavefunction(3, &p, SQRT_2 * y).unwrap().powi(2) * SQRT_2,
            &QuadConfig::default(),
            8,
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let q = ModelPoint::new(1.2, 0.7).unwrap();
        let spec = StateSpec::eigenstate(5).unwrap();
        for &x in &[-0.4, 0.9, 1.2, 2.6] {
            let w = wavefunction(5, &q, x).unwrap();
            let d = pdf(&spec, &q, x);
            assert!((w * w - d).abs() <= 1e-12 * d.max(1e-300));
        }
    }
}
