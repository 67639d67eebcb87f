//! Log-scaled spectral factorizations for positive-definite matrices whose
//! eigenvalue spread exceeds floating-point range.
//!
//! The backward recursions used by the entropy-rate estimators have the form
//! `M_t = C_t + G_t^T M_{t+1} G_t`. Along unstable trajectories the
//! eigenvalues of `M_t` grow like `exp(2 t lambda_max)` while stable
//! directions stay pinned near the cost floor, so at long horizons a single
//! `f64` matrix can neither represent the spread nor resolve the small
//! eigenvalues against eigensolver noise (which is relative to the largest
//! eigenvalue). This module keeps the factorization
//! `M = sum_i exp(2 phi_i) u_i u_i^T` with the scales `phi_i` stored in log
//! space, and performs the recursion step as a sum of log-scaled rank-one
//! terms resolved band by band, so every eigendirection retains full relative
//! precision regardless of the overall spread.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Nats of sqrt-scale spanned by one resolution band. Within a band the
/// scaled matrix has condition at most `exp(2 * BAND_WIDTH)`, which must stay
/// well above machine epsilon for band members to be resolved accurately.
const BAND_WIDTH: f64 = 12.0;

/// Scaled eigenvalues below this are re-binned at their own scale instead of
/// being resolved inside the current band.
const RESOLVE_EPS: f64 = 1e-10;

/// Scaled eigenvalues below this are indistinguishable from eigensolver
/// noise and are dropped.
const DROP_EPS: f64 = 1e-15;

/// Safety margin (nats) between a resolved scale and the largest pending
/// term, bounding the relative mass discarded when a direction is finalized.
const RESOLVE_MARGIN: f64 = 9.5;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositiveSemidefinite { min_eig: f64 },
    #[error("matrix sum is singular ({null_dim} zero eigendirections remain)")]
    SingularSum { null_dim: usize },
    #[error("non-finite values in spectral accumulation")]
    NonFinite,
    #[error("spectral accumulation did not converge")]
    NoConvergence,
}

/// One rank-one summand `exp(2 * log_scale) * direction * direction^T` with a
/// unit-norm direction.
#[derive(Debug, Clone)]
pub struct RankOneTerm {
    pub log_scale: f64,
    pub direction: DVector<f64>,
}

impl RankOneTerm {
    /// Builds a term from an unnormalized vector `v` scaled by
    /// `exp(2 * log_scale)`, i.e. the summand `exp(2 rho) v v^T`. Returns
    /// `None` for a zero vector.
    pub fn from_vector(log_scale: f64, v: &DVector<f64>) -> Option<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return None;
        }
        Some(Self {
            log_scale: log_scale + norm.ln(),
            direction: v / norm,
        })
    }
}

/// Eigendecomposition `M = sum_i exp(2 phi_i) u_i u_i^T` with orthonormal
/// `u_i` and log-space scales `phi_i`, sorted descending.
#[derive(Debug, Clone)]
pub struct SpectralFactors {
    log_sqrt_eigs: Vec<f64>,
    basis: DMatrix<f64>,
}

impl SpectralFactors {
    /// Factors a symmetric positive-definite matrix given in plain form.
    /// Eigenvalues below `-1e-10 * max(1, lambda_max)` are rejected; small
    /// negatives within that tolerance are clamped.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self, SpectralError> {
        let sym = (m + m.transpose()) * 0.5;
        if sym.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        let eig = SymmetricEigen::new(sym);
        let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let tol = 1e-10 * max_eig.max(1.0);
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(eig.eigenvalues.len());
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -tol {
                return Err(SpectralError::NotPositiveSemidefinite { min_eig: lambda });
            }
            let clamped = lambda.max(1e-300);
            pairs.push((0.5 * clamped.ln(), i));
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let n = m.nrows();
        let mut basis = DMatrix::zeros(n, n);
        let mut log_sqrt_eigs = Vec::with_capacity(n);
        for (col, (phi, idx)) in pairs.into_iter().enumerate() {
            basis.set_column(col, &eig.eigenvectors.column(idx));
            log_sqrt_eigs.push(phi);
        }
        Ok(Self { log_sqrt_eigs, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// `ln det M`, exact in log space.
    pub fn log_det(&self) -> f64 {
        2.0 * self.log_sqrt_eigs.iter().sum::<f64>()
    }

    /// Largest `ln sqrt(eigenvalue)`.
    pub fn max_log_sqrt_eig(&self) -> f64 {
        self.log_sqrt_eigs.first().copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn log_sqrt_eigs(&self) -> &[f64] {
        &self.log_sqrt_eigs
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Reconstructs the plain matrix. `None` when the largest eigenvalue
    /// overflows `f64`; small eigenvalues may underflow to zero.
    pub fn reconstruct(&self) -> Option<DMatrix<f64>> {
        let n = self.dim();
        if self.log_sqrt_eigs.iter().any(|&phi| 2.0 * phi > f64::MAX.ln()) {
            return None;
        }
        let mut m = DMatrix::zeros(n, n);
        for (phi, u) in self.log_sqrt_eigs.iter().zip(self.basis.column_iter()) {
            let lambda = (2.0 * phi).exp();
            m.syger(lambda, &u, &u, 1.0);
        }
        // syger fills the lower triangle; mirror it.
        for i in 0..n {
            for j in (i + 1)..n {
                m[(i, j)] = m[(j, i)];
            }
        }
        Some(m)
    }

    /// The rank-one summands of the factorization.
    pub fn terms(&self) -> impl Iterator<Item = RankOneTerm> + '_ {
        self.log_sqrt_eigs
            .iter()
            .zip(self.basis.column_iter())
            .map(|(&phi, u)| RankOneTerm {
                log_scale: phi,
                direction: u.into_owned(),
            })
    }

    /// One backward recursion step `M' = extra + G^T M G` where `extra` is
    /// given as rank-one terms (typically the factored per-step cost).
    pub fn propagate(&self, g: &DMatrix<f64>, extra: &[RankOneTerm]) -> Result<Self, SpectralError> {
        let mut terms: Vec<RankOneTerm> = Vec::with_capacity(self.log_sqrt_eigs.len() + extra.len());
        for (phi, u) in self.log_sqrt_eigs.iter().zip(self.basis.column_iter()) {
            let w = g.tr_mul(&u);
            if let Some(term) = RankOneTerm::from_vector(*phi, &w) {
                terms.push(term);
            }
        }
        terms.extend_from_slice(extra);
        eigen_sum(self.dim(), terms)
    }
}

fn sorted_insert(pending: &mut Vec<RankOneTerm>, term: RankOneTerm) {
    let pos = pending.partition_point(|t| t.log_scale >= term.log_scale);
    pending.insert(pos, term);
}

/// Orthonormal basis of the complement of the span of `qs` (orthonormal
/// vectors in `R^m`), via modified Gram-Schmidt with re-orthogonalization.
fn complement_basis(qs: &[DVector<f64>], m: usize) -> Result<DMatrix<f64>, SpectralError> {
    let want = m - qs.len();
    if want == 0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(want);
    for i in 0..m {
        if cols.len() == want {
            break;
        }
        let mut v = DVector::zeros(m);
        v[i] = 1.0;
        for _ in 0..2 {
            for q in qs {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
            for c in &cols {
                let proj = c.dot(&v);
                v.axpy(-proj, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    if cols.len() != want {
        return Err(SpectralError::NoConvergence);
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Eigendecomposition of a sum of log-scaled rank-one terms.
///
/// Terms are processed in bands of comparable scale (within `BAND_WIDTH`
/// nats). Each band is eigendecomposed in its own scaled frame, directions
/// whose resolved scale dominates everything still pending are finalized and
/// deflated out, and sub-band residuals are re-binned at their true scale.
/// The neglected cross-band coupling perturbs `ln det` by
/// `O(exp(-2 * RESOLVE_MARGIN))` per resolved direction.
pub fn eigen_sum(dim: usize, mut terms: Vec<RankOneTerm>) -> Result<SpectralFactors, SpectralError> {
    for t in &terms {
        if t.log_scale.is_nan() || t.direction.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
    }
    terms.retain(|t| t.log_scale.is_finite());
    terms.sort_by(|a, b| b.log_scale.total_cmp(&a.log_scale));

    let mut resolved: Vec<(f64, DVector<f64>)> = Vec::with_capacity(dim);
    let mut basis = DMatrix::<f64>::identity(dim, dim);
    let mut guard = 0usize;

    'outer: while !terms.is_empty() && basis.ncols() > 0 {
        let m = basis.ncols();
        let band_top = terms[0].log_scale;
        let mut floor = band_top - BAND_WIDTH;
        let mut take = terms.partition_point(|t| t.log_scale >= floor);

        // Attempt a band; if nothing dominates the pending terms strongly
        // enough to be finalized, widen the band and retry.
        loop {
            guard += 1;
            if guard > 10_000 {
                return Err(SpectralError::NoConvergence);
            }
            let next_pending = terms.get(take).map_or(f64::NEG_INFINITY, |t| t.log_scale);

            // Project band members into the unresolved complement; members
            // that shrink out of the band are re-binned at their reduced
            // scale (their direction then lies inside the current
            // complement, so a later visit cannot shrink them again).
            let mut projected: Vec<(f64, DVector<f64>)> = Vec::with_capacity(take);
            let mut rebinned: Vec<RankOneTerm> = Vec::new();
            for t in &terms[..take] {
                let y = basis.tr_mul(&t.direction);
                let norm = y.norm();
                if norm == 0.0 {
                    continue;
                }
                let rho = t.log_scale + norm.ln();
                let dir = y / norm;
                if rho < floor {
                    rebinned.push(RankOneTerm {
                        log_scale: rho,
                        direction: (&basis * dir).normalize(),
                    });
                } else {
                    projected.push((rho, dir));
                }
            }

            if projected.is_empty() {
                terms.drain(..take);
                for t in rebinned {
                    sorted_insert(&mut terms, t);
                }
                continue 'outer;
            }

            let s = projected
                .iter()
                .map(|(rho, _)| *rho)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut a = DMatrix::<f64>::zeros(m, m);
            for (rho, dir) in &projected {
                a.syger((2.0 * (rho - s)).exp(), dir, dir, 1.0);
            }
            for i in 0..m {
                for j in (i + 1)..m {
                    a[(i, j)] = a[(j, i)];
                }
            }

            let eig = SymmetricEigen::new(a);
            if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
                return Err(SpectralError::NonFinite);
            }
            let resolve_floor = (2.0 * (next_pending + RESOLVE_MARGIN - s))
                .exp()
                .max(RESOLVE_EPS);
            let any_resolvable = eig.eigenvalues.iter().any(|&alpha| alpha >= resolve_floor);
            if !any_resolvable && take < terms.len() {
                floor = terms[take].log_scale - BAND_WIDTH;
                take = terms.partition_point(|t| t.log_scale >= floor);
                continue;
            }

            // Commit: finalize dominant directions, re-bin the rest.
            terms.drain(..take);
            for t in rebinned {
                sorted_insert(&mut terms, t);
            }
            let mut resolved_coords: Vec<DVector<f64>> = Vec::new();
            for (j, &alpha) in eig.eigenvalues.iter().enumerate() {
                if alpha >= resolve_floor {
                    let q = eig.eigenvectors.column(j).into_owned();
                    resolved.push((s + 0.5 * alpha.ln(), &basis * &q));
                    resolved_coords.push(q);
                } else if alpha >= DROP_EPS {
                    let q = eig.eigenvectors.column(j).into_owned();
                    sorted_insert(
                        &mut terms,
                        RankOneTerm {
                            log_scale: s + 0.5 * alpha.ln(),
                            direction: (&basis * q).normalize(),
                        },
                    );
                }
                // alpha below DROP_EPS is eigensolver noise: discard.
            }
            if !resolved_coords.is_empty() {
                let comp = complement_basis(&resolved_coords, m)?;
                basis = &basis * comp;
            }
            break;
        }
    }

    if basis.ncols() > 0 {
        return Err(SpectralError::SingularSum {
            null_dim: basis.ncols(),
        });
    }

    resolved.sort_by(|a, b| b.0.total_cmp(&a.0));
    let log_sqrt_eigs: Vec<f64> = resolved.iter().map(|(phi, _)| *phi).collect();
    let cols: Vec<DVector<f64>> = resolved.into_iter().map(|(_, u)| u).collect();
    Ok(SpectralFactors {
        log_sqrt_eigs,
        basis: DMatrix::from_columns(&cols),
    })
}

/// `ln det` of a symmetric positive-definite matrix in plain form, by
/// symmetrized eigendecomposition. Eigenvalues below `-1e-10 * max(1,
/// lambda_max)` are rejected, small negatives are clamped before the log.
pub fn log_det_symmetric(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    Ok(SpectralFactors::from_matrix(m)?.log_det())
}
