//! Lyapunov-spectrum estimation from Jacobian sequences via QR
//! re-orthonormalization, and Pesin summation of positive exponents. Serves
//! as the independent oracle for the Riccati-based entropy-rate estimators.

use nalgebra::DMatrix;
use thiserror::Error;

/// Exponent value reported for a direction whose growth collapsed to zero
/// (rank-deficient Jacobian product).
pub const COLLAPSED_EXPONENT: f64 = -1e9;

/// Re-orthonormalize early whenever the working product accumulates this
/// much growth, to avoid losing the contracting directions.
const MAX_ACCUMULATED_NATS: f64 = 50.0;

#[derive(Debug, Error)]
pub enum LyapunovError {
    #[error("jacobian sequence is empty")]
    Empty,
    #[error("jacobian at step {step} is not square of dimension {expected}")]
    DimensionMismatch { step: usize, expected: usize },
    #[error("re-orthonormalization interval must be at least 1")]
    InvalidInterval,
}

/// Finite-horizon Lyapunov spectrum in nats per step, sorted descending.
#[derive(Debug, Clone)]
pub struct LyapunovSpectrum {
    pub exponents: Vec<f64>,
    pub horizon: usize,
    pub reorthonormalization_interval: usize,
    /// Directions whose triangular pivot hit exact zero; their exponents are
    /// reported as [`COLLAPSED_EXPONENT`].
    pub collapsed_directions: usize,
}

/// Benettin-style spectrum estimate with the default interval of 10 steps.
pub fn lyapunov_spectrum(jacobians: &[DMatrix<f64>]) -> Result<LyapunovSpectrum, LyapunovError> {
    lyapunov_spectrum_with_interval(jacobians, 10)
}

pub fn lyapunov_spectrum_with_interval(
    jacobians: &[DMatrix<f64>],
    interval: usize,
) -> Result<LyapunovSpectrum, LyapunovError> {
    if interval == 0 {
        return Err(LyapunovError::InvalidInterval);
    }
    let first = jacobians.first().ok_or(LyapunovError::Empty)?;
    let n = first.nrows();
    for (step, j) in jacobians.iter().enumerate() {
        if j.nrows() != n || j.ncols() != n {
            return Err(LyapunovError::DimensionMismatch { step, expected: n });
        }
    }

    let growth_cap = MAX_ACCUMULATED_NATS.exp();
    let mut frame = DMatrix::<f64>::identity(n, n);
    let mut accumulated = vec![0.0_f64; n];
    let mut collapsed = vec![false; n];
    let mut since_renorm = 0usize;

    for (step, j) in jacobians.iter().enumerate() {
        frame = j * frame;
        since_renorm += 1;
        let overgrown = frame.abs().max() > growth_cap;
        if since_renorm == interval || step + 1 == jacobians.len() || overgrown {
            let qr = frame.qr();
            let r = qr.r();
            for i in 0..n {
                let pivot = r[(i, i)].abs();
                if pivot == 0.0 {
                    collapsed[i] = true;
                } else {
                    accumulated[i] += pivot.ln();
                }
            }
            frame = qr.q();
            since_renorm = 0;
        }
    }

    let horizon = jacobians.len();
    let mut exponents: Vec<f64> = accumulated
        .iter()
        .zip(&collapsed)
        .map(|(&acc, &dead)| {
            if dead {
                COLLAPSED_EXPONENT
            } else {
                acc / horizon as f64
            }
        })
        .collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(LyapunovSpectrum {
        exponents,
        horizon,
        reorthonormalization_interval: interval,
        collapsed_directions: collapsed.iter().filter(|&&c| c).count(),
    })
}

/// Kolmogorov-Sinai entropy rate by Pesin's identity: the sum of strictly
/// positive exponents, zero when there are none.
pub fn pesin_sum(spectrum: &LyapunovSpectrum) -> f64 {
    spectrum
        .exponents
        .iter()
        .filter(|&&l| l > 0.0)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(theta: f64) -> DMatrix<f64> {
        let (s, c) = theta.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    #[test]
    fn diagonal_product_gives_log_moduli() {
        let j = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let jacs = vec![j; 400];
        let spec = lyapunov_spectrum(&jacs).unwrap();
        assert!((spec.exponents[0] - 2.0_f64.ln()).abs() < 1e-12);
        assert!((spec.exponents[1] + 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn isometry_has_zero_spectrum() {
        let jacs = vec![rotation(0.3); 500];
        let spec = lyapunov_spectrum(&jacs).unwrap();
        assert!(spec.exponents.iter().all(|l| l.abs() < 1e-10));
    }

    #[test]
    fn interval_choice_does_not_change_exponents() {
        let m = rotation(0.2) * DMatrix::from_row_slice(2, 2, &[1.1, 0.0, 0.0, 0.9]);
        let jacs = vec![m; 2000];
        let reference = lyapunov_spectrum_with_interval(&jacs, 1).unwrap();
        for interval in [5, 10] {
            let spec = lyapunov_spectrum_with_interval(&jacs, interval).unwrap();
            for (a, b) in spec.exponents.iter().zip(reference.exponents.iter()) {
                assert!((a - b).abs() < 1e-6, "interval {interval}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_jacobian_exponents_converge_to_eigenvalue_moduli() {
        let m = DMatrix::from_row_slice(2, 2, &[1.2, 0.3, -0.1, 0.7]);
        let jacs = vec![m.clone(); 2000];
        let spec = lyapunov_spectrum(&jacs).unwrap();
        let mut moduli: Vec<f64> = m.complex_eigenvalues().iter().map(|c| c.norm().ln()).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        for (l, e) in spec.exponents.iter().zip(moduli.iter()) {
            assert!((l - e).abs() < 1e-3, "exponent {l} vs eigenvalue modulus {e}");
        }
    }

    #[test]
    fn unstable_growth_triggers_early_renormalization() {
        // 2^60 over one nominal interval of 10 would stay finite, but a
        // long interval with a strongly expanding map must not overflow or
        // lose the contracting direction.
        let j = DMatrix::from_row_slice(2, 2, &[40.0, 0.0, 0.0, 0.000001]);
        let jacs = vec![j; 300];
        let spec = lyapunov_spectrum_with_interval(&jacs, 100).unwrap();
        assert!((spec.exponents[0] - 40.0_f64.ln()).abs() < 1e-9);
        assert!((spec.exponents[1] - 0.000001_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_product_reports_collapse() {
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let jacs = vec![j; 20];
        let spec = lyapunov_spectrum(&jacs).unwrap();
        assert_eq!(spec.collapsed_directions, 1);
        assert_eq!(spec.exponents[1], COLLAPSED_EXPONENT);
    }

    #[test]
    fn pesin_sum_counts_only_positive_exponents() {
        let make = |exponents: Vec<f64>| LyapunovSpectrum {
            exponents,
            horizon: 1,
            reorthonormalization_interval: 10,
            collapsed_directions: 0,
        };
        let ln2 = 2.0_f64.ln();
        assert!((pesin_sum(&make(vec![ln2, -ln2])) - ln2).abs() < 1e-15);
        assert_eq!(pesin_sum(&make(vec![-0.1, -0.5])), 0.0);
        assert!((pesin_sum(&make(vec![0.7, 0.1, -0.3])) - 0.8).abs() < 1e-15);
    }
}
