//! Physicists' Hermite polynomials and their Gaussian-weighted, normalized
//! form `a_n H_n(y) e^{-y^2/2}` with `a_n = 1/sqrt(2^n n!)`.
//!
//! Raw `H_n` grows like `(2y)^n` and overflows quickly, so every density in
//! this crate goes through [`hermite_normalized`] / [`normalized_table`],
//! whose recurrence multiplies by bounded factors and carries the exponent
//! separately.

use crate::quadrature::{integrate_real_line, QuadConfig, QuadError};
use thiserror::Error;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HermiteError {
    #[error("degree {0} exceeds the supported maximum of {MAX_DEGREE}")]
    DegreeTooLarge(usize),
    #[error("argument {0} is not finite")]
    NonFiniteArgument(f64),
    #[error("H_{n}({y}) overflows the f64 range")]
    Overflow { n: usize, y: f64 },
}

fn check_args(n: usize, y: f64) -> Result<(), HermiteError> {
    if n > MAX_DEGREE {
        return Err(HermiteError::DegreeTooLarge(n));
    }
    if !y.is_finite() {
        return Err(HermiteError::NonFiniteArgument(y));
    }
    Ok(())
}

/// `H_n(y)` by the upward recurrence `H_{k+1} = 2y H_k - 2k H_{k-1}`.
///
/// Negating `y` flips the sign of both recurrence terms exactly, so parity
/// holds bit-for-bit.
pub fn hermite(n: usize, y: f64) -> Result<f64, HermiteError> {
    check_args(n, y)?;
    let (h, _) = raw_pair(n, y);
    if !h.is_finite() {
        return Err(HermiteError::Overflow { n, y });
    }
    Ok(h)
}

/// Returns `(H_n(y), H_{n-1}(y))`, with `H_{-1} = 0`. Unchecked.
fn raw_pair(n: usize, y: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let next = 2.0 * y * cur - 2.0 * (k as f64) * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `(H_n(y), H'_n(y))` using `H'_n = 2n H_{n-1}`.
pub fn hermite_derivative_pair(n: usize, y: f64) -> Result<(f64, f64), HermiteError> {
    check_args(n, y)?;
    let (h, hm1) = raw_pair(n, y);
    let d = 2.0 * n as f64 * hm1;
    if !h.is_finite() || !d.is_finite() {
        return Err(HermiteError::Overflow { n, y });
    }
    Ok((h, d))
}

/// `a_n H_n(y) e^{-y^2/2}`.
pub fn hermite_normalized(n: usize, y: f64) -> Result<f64, HermiteError> {
    check_args(n, y)?;
    let mut out = vec![0.0; n + 1];
    normalized_table(y, &mut out);
    Ok(out[n])
}

/// Fills `out[k] = a_k H_k(y) e^{-y^2/2}` for `k < out.len()`.
///
/// The recurrence `psi_{k+1} = sqrt(2/(k+1)) y psi_k - sqrt(k/(k+1)) psi_{k-1}`
/// is run on values scaled by `e^{+y^2/2}`; whenever the running magnitude
/// leaves `[2^-400, 2^400]` both carried values are rescaled by a power of
/// two and the exponent is tracked. The Gaussian factor and the accumulated
/// exponent are applied per entry at the end, so nothing overflows and the
/// only underflow is in genuinely sub-`f64` results.
pub fn normalized_table(y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let half_y2 = 0.5 * y * y;
    let ln2 = std::f64::consts::LN_2;
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    // log2 of the scale carried by `cur` and `prev`.
    let mut exp2: i32 = 0;
    out[0] = (-half_y2).exp();
    for k in 0..out.len() - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs().max(prev.abs());
        if mag > 2f64.powi(400) {
            prev *= 2f64.powi(-400);
            cur *= 2f64.powi(-400);
            exp2 += 400;
        } else if mag < 2f64.powi(-400) && mag > 0.0 {
            prev *= 2f64.powi(400);
            cur *= 2f64.powi(400);
            exp2 -= 400;
        }
        out[k + 1] = if cur == 0.0 {
            0.0
        } else {
            let log_scale = exp2 as f64 * ln2 - half_y2;
            cur * log_scale.exp()
        };
    }
}

/// Relative orthogonality defect
/// `|int e^{-y^2} H_n H_m dy - sqrt(pi) 2^n n! delta_nm| / (sqrt(pi) sqrt(2^n n! 2^m m!))`,
/// computed by quadrature of the normalized functions.
pub fn orthogonality_residual(n: usize, m: usize) -> Result<f64, QuadError> {
    if n.max(m) > MAX_DEGREE {
        return Err(QuadError::InvalidInput(format!(
            "degree {} exceeds {MAX_DEGREE}",
            n.max(m)
        )));
    }
    let top = n.max(m);
    let integrand = |y: f64| {
        let mut table = vec![0.0; top + 1];
        normalized_table(y, &mut table);
        table[n] * table[m]
    };
    let res = integrate_real_line(integrand, &QuadConfig::default(), n + m + 2)?;
    if !res.converged {
        return Err(QuadError::NotConverged {
            value: res.value,
            abs_error_estimate: res.abs_error_estimate,
            evaluations: res.evaluations,
        });
    }
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let target = if n == m { sqrt_pi } else { 0.0 };
    Ok((res.value - target).abs() / sqrt_pi)
}

/// `a_n = 1 / sqrt(2^n n!)`, computed as a running product.
pub fn norm_factor(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc / (2.0 * k as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(-1)^n e^{y^2} d^n/dy^n e^{-y^2}`: differentiate `p(y) e^{-y^2}`
    /// as `(p' - 2 y p) e^{-y^2}` on coefficient vectors.
    fn rodrigues(n: usize, y: f64) -> f64 {
        let mut p = vec![1.0_f64];
        for _ in 0..n {
            let mut q = vec![0.0; p.len() + 1];
            for (k, c) in p.iter().enumerate() {
                if k > 0 {
                    q[k - 1] += k as f64 * c;
                }
                q[k + 1] -= 2.0 * c;
            }
            p = q;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign * p.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    #[test]
    fn low_degrees() {
        assert_eq!(hermite(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite(2, 1.0).unwrap(), 2.0);
        assert_eq!(hermite(1, -0.25).unwrap(), -0.5);
    }

    #[test]
    fn matches_rodrigues_formula() {
        assert_eq!(rodrigues(6, 0.5), 31.0);
        assert!((hermite(6, 0.5).unwrap() - rodrigues(6, 0.5)).abs() < 1e-12);
        for n in 0..=10 {
            for &y in &[-1.3, 0.0, 0.4, 2.2] {
                let r = rodrigues(n, y);
                let h = hermite(n, y).unwrap();
                assert!((h - r).abs() <= 1e-10 * r.abs().max(1.0), "n={n} y={y}");
            }
        }
    }

    #[test]
    fn derivative_pair() {
        assert_eq!(hermite_derivative_pair(1, 0.3).unwrap(), (0.6, 2.0));
        assert_eq!(hermite_derivative_pair(0, 5.0).unwrap(), (1.0, 0.0));
        let (_, d) = hermite_derivative_pair(4, 1.1).unwrap();
        let h3 = hermite(3, 1.1).unwrap();
        assert!((d - 8.0 * h3).abs() < 1e-12);
        assert!((d - -20.416).abs() < 1e-12);
    }

    #[test]
    fn normalized_small_cases() {
        assert_eq!(hermite_normalized(0, 0.0).unwrap(), 1.0);
        assert_eq!(hermite_normalized(1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn normalized_matches_extended_precision() {
        // 60-digit evaluation of a_50 H_50(2) e^{-2}.
        let expected = -0.148_307_273_474_347_55;
        let got = hermite_normalized(50, 2.0).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected.abs(), "{got}");
        let expected = -0.254_671_093_321_495_27;
        let got = hermite_normalized(200, 10.0).unwrap();
        assert!((got - expected).abs() <= 1e-10 * expected.abs(), "{got}");
    }

    #[test]
    fn normalized_is_finite_on_envelope() {
        // e^{-800} alone underflows; the carried exponent must not.
        let got = hermite_normalized(200, 40.0).unwrap();
        let expected = 5.530_204_852_966_583e-188;
        assert!((got - expected).abs() <= 1e-9 * expected, "{got}");
        let mut table = vec![0.0; MAX_DEGREE + 1];
        for i in 0..=80 {
            let y = -40.0 + i as f64;
            normalized_table(y, &mut table);
            assert!(table.iter().all(|v| v.is_finite()), "y={y}");
        }
    }

    #[test]
    fn raw_overflow_is_signalled() {
        assert!(matches!(
            hermite(200, 40.0),
            Err(HermiteError::Overflow { .. })
        ));
        assert!(matches!(
            hermite(201, 0.0),
            Err(HermiteError::DegreeTooLarge(201))
        ));
        assert!(hermite(3, f64::NAN).is_err());
    }

    #[test]
    fn normalized_agrees_with_raw() {
        for n in 0..=60 {
            for &y in &[-3.1, -0.7, 0.2, 1.9, 4.5] {
                let raw = hermite(n, y).unwrap();
                let back = hermite_normalized(n, y).unwrap() * (0.5 * y * y).exp() / norm_factor(n);
                assert!(
                    (back - raw).abs() <= 1e-10 * raw.abs().max(1e-300),
                    "n={n} y={y}"
                );
            }
        }
    }

    #[test]
    fn orthogonality_examples() {
        assert!(orthogonality_residual(3, 5).unwrap() < 1e-10);
        assert!(orthogonality_residual(0, 0).unwrap() < 1e-12);
        assert!(orthogonality_residual(7, 7).unwrap() < 1e-10);
        assert!(orthogonality_residual(60, 58).unwrap() < 1e-10);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn parity_is_exact(n in 0usize..=60, y in -6.0f64..6.0) {
            let plus = hermite(n, y).unwrap();
            let minus = hermite(n, -y).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(minus, sign * plus);
        }

        #[test]
        fn recurrence_identity(n in 1usize..=40, y in -3.0f64..3.0) {
            let next = hermite(n + 1, y).unwrap();
            let cur = hermite(n, y).unwrap();
            let prev = hermite(n - 1, y).unwrap();
            let scale = next.abs().max((2.0 * y * cur).abs()).max((2.0 * n as f64 * prev).abs()).max(1.0);
            prop_assert!((next - 2.0 * y * cur + 2.0 * n as f64 * prev).abs() <= 1e-12 * scale);
        }
    }
}
