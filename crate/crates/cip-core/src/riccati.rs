//! Backward value-Hessian recursions: finite-horizon DARE with feedback-gain
//! extraction, the intrinsic/extrinsic policy split, auxiliary open/closed
//! loop curvature recursions, and log-determinant entropy-rate estimates.
//!
//! All three backward recursions are propagated as log-scaled spectral
//! factorizations (see [`crate::spectral`]), so horizons long enough for the
//! asymptotic rates remain computable even when the underlying matrices
//! outgrow `f64` range.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::dynamics::{LinearizedStep, Trajectory};
use crate::spectral::{eigen_sum, RankOneTerm, SpectralError, SpectralFactors};

#[derive(Debug, Error)]
pub enum RiccatiError {
    #[error("linearization sequence is empty")]
    EmptyHorizon,
    #[error("{what}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("cost matrix {what} is not symmetric positive definite")]
    NotPositiveDefinite { what: &'static str },
    #[error("numerical failure at backward step {step}: {source}")]
    Numerical { step: usize, source: SpectralError },
    #[error(
        "matrix magnitudes unrepresentable at this horizon (log scale {log_scale:.1}); \
         retry with a smaller horizon"
    )]
    Unrepresentable { log_scale: f64 },
}

/// Symmetric positive-definite cost Hessian with its eigendecomposition
/// cached for the recursion steps.
#[derive(Debug, Clone)]
struct FactoredCost {
    raw: DMatrix<f64>,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
    terms: Vec<RankOneTerm>,
}

impl FactoredCost {
    fn new(raw: DMatrix<f64>, what: &'static str) -> Result<Self, RiccatiError> {
        let n = raw.nrows();
        if raw.ncols() != n {
            return Err(RiccatiError::DimensionMismatch {
                what,
                expected: n,
                actual: raw.ncols(),
            });
        }
        let scale = raw.abs().max().max(1.0);
        if (&raw - raw.transpose()).abs().max() > 1e-10 * scale {
            return Err(RiccatiError::NotPositiveDefinite { what });
        }
        let eig = SymmetricEigen::new(raw.clone());
        if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
            return Err(RiccatiError::NotPositiveDefinite { what });
        }
        let terms = eig
            .eigenvalues
            .iter()
            .zip(eig.eigenvectors.column_iter())
            .map(|(&l, v)| RankOneTerm {
                log_scale: 0.5 * l.ln(),
                direction: v.into_owned(),
            })
            .collect();
        Ok(Self {
            raw,
            eigvals: eig.eigenvalues.iter().cloned().collect(),
            eigvecs: eig.eigenvectors,
            terms,
        })
    }
}

#[derive(Debug, Clone)]
enum Schedule {
    Shared(FactoredCost),
    PerStep(Vec<FactoredCost>),
}

impl Schedule {
    fn at(&self, t: usize) -> &FactoredCost {
        match self {
            Schedule::Shared(c) => c,
            Schedule::PerStep(v) => &v[t],
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Schedule::Shared(_) => None,
            Schedule::PerStep(v) => Some(v.len()),
        }
    }
}

/// Positive-definite cost Hessians: per-step state and control weights plus
/// the terminal state weight.
#[derive(Debug, Clone)]
pub struct CostWeights {
    c_xx: Schedule,
    c_uu: Schedule,
    c_terminal: FactoredCost,
    state_dim: usize,
    control_dim: usize,
}

impl CostWeights {
    /// Identity weights, the default for the intrinsic objective.
    pub fn identity(state_dim: usize, control_dim: usize) -> Self {
        Self::uniform(
            DMatrix::identity(state_dim, state_dim),
            DMatrix::identity(control_dim, control_dim),
            DMatrix::identity(state_dim, state_dim),
        )
        .expect("identity weights are positive definite")
    }

    /// Scaled identity weights.
    pub fn scaled_identity(
        state_dim: usize,
        control_dim: usize,
        state_scale: f64,
        control_scale: f64,
        terminal_scale: f64,
    ) -> Result<Self, RiccatiError> {
        Self::uniform(
            DMatrix::identity(state_dim, state_dim) * state_scale,
            DMatrix::identity(control_dim, control_dim) * control_scale,
            DMatrix::identity(state_dim, state_dim) * terminal_scale,
        )
    }

    /// One shared weight per kind across all steps.
    pub fn uniform(
        c_xx: DMatrix<f64>,
        c_uu: DMatrix<f64>,
        c_terminal: DMatrix<f64>,
    ) -> Result<Self, RiccatiError> {
        let state_dim = c_xx.nrows();
        let control_dim = c_uu.nrows();
        Ok(Self {
            c_xx: Schedule::Shared(FactoredCost::new(c_xx, "c_xx")?),
            c_uu: Schedule::Shared(FactoredCost::new(c_uu, "c_uu")?),
            c_terminal: FactoredCost::new(c_terminal, "c_xx_terminal")?,
            state_dim,
            control_dim,
        })
    }

    /// Per-step weight sequences; lengths must equal the horizon they are
    /// used with.
    pub fn per_step(
        c_xx: Vec<DMatrix<f64>>,
        c_uu: Vec<DMatrix<f64>>,
        c_terminal: DMatrix<f64>,
    ) -> Result<Self, RiccatiError> {
        if c_xx.is_empty() || c_uu.len() != c_xx.len() {
            return Err(RiccatiError::DimensionMismatch {
                what: "per-step cost sequences",
                expected: c_xx.len(),
                actual: c_uu.len(),
            });
        }
        let state_dim = c_xx[0].nrows();
        let control_dim = c_uu[0].nrows();
        let fx = c_xx
            .into_iter()
            .map(|m| FactoredCost::new(m, "c_xx"))
            .collect::<Result<Vec<_>, _>>()?;
        let fu = c_uu
            .into_iter()
            .map(|m| FactoredCost::new(m, "c_uu"))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            c_xx: Schedule::PerStep(fx),
            c_uu: Schedule::PerStep(fu),
            c_terminal: FactoredCost::new(c_terminal, "c_xx_terminal")?,
            state_dim,
            control_dim,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn c_xx(&self, t: usize) -> &DMatrix<f64> {
        &self.c_xx.at(t).raw
    }

    pub fn c_uu(&self, t: usize) -> &DMatrix<f64> {
        &self.c_uu.at(t).raw
    }

    pub fn terminal(&self) -> &DMatrix<f64> {
        &self.c_terminal.raw
    }

    fn check_horizon(&self, horizon: usize) -> Result<(), RiccatiError> {
        for (len, what) in [(self.c_xx.len(), "c_xx schedule"), (self.c_uu.len(), "c_uu schedule")] {
            if let Some(len) = len {
                if len != horizon {
                    return Err(RiccatiError::DimensionMismatch {
                        what,
                        expected: horizon,
                        actual: len,
                    });
                }
            }
        }
        Ok(())
    }

    fn terminal_factors(&self) -> Result<SpectralFactors, RiccatiError> {
        let terms = self.c_terminal.terms.clone();
        eigen_sum(self.state_dim, terms).map_err(|source| RiccatiError::Numerical {
            step: usize::MAX,
            source,
        })
    }
}

/// Backward solution of the finite-horizon DARE: value Hessians in factored
/// form, feedback gains, and optionally the goal-directed drift terms.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    v_xx: Vec<SpectralFactors>,
    pub gains: Vec<DMatrix<f64>>,
    pub drifts: Option<Vec<DVector<f64>>>,
    pub value_gradients: Option<Vec<DVector<f64>>>,
    /// Number of backward steps where the control-space normal matrix needed
    /// conditioning regularization.
    pub regularized_steps: usize,
}

impl RiccatiSolution {
    pub fn horizon(&self) -> usize {
        self.gains.len()
    }

    /// Factored value Hessian at step `t` (`0..=horizon`).
    pub fn value_hessian_factors(&self, t: usize) -> &SpectralFactors {
        &self.v_xx[t]
    }

    /// Plain value Hessian at step `t`; fails when its magnitude exceeds
    /// `f64` range.
    pub fn value_hessian(&self, t: usize) -> Result<DMatrix<f64>, RiccatiError> {
        self.v_xx[t].reconstruct().ok_or(RiccatiError::Unrepresentable {
            log_scale: 2.0 * self.v_xx[t].max_log_sqrt_eig(),
        })
    }

    pub fn log_det_value_hessian(&self, t: usize) -> f64 {
        self.v_xx[t].log_det()
    }

    pub fn attach_drift(&mut self, drift: DriftTerms) {
        self.drifts = Some(drift.drifts);
        self.value_gradients = Some(drift.value_gradients);
    }
}

/// Goal-directed policy components along a nominal trajectory.
#[derive(Debug, Clone)]
pub struct DriftTerms {
    /// Control-space drift at each step (`horizon` entries).
    pub drifts: Vec<DVector<f64>>,
    /// Value gradient at each step (`horizon + 1` entries).
    pub value_gradients: Vec<DVector<f64>>,
}

/// Log-determinant of a backward recursion endpoint, with the matrix kept in
/// rescaled form. The identity `value = ln det(matrix) + dim * log_scale`
/// holds by construction.
#[derive(Debug, Clone)]
pub struct StabilizedLogDet {
    /// `ln det` accumulated in log space; always finite.
    pub value: f64,
    /// The recursion matrix divided by `exp(log_scale)`, so its largest
    /// eigenvalue is 1. Eigenvalues more than ~700 nats below the top
    /// underflow to zero in this plain form; `value` is unaffected.
    pub matrix: DMatrix<f64>,
    /// Natural log of the scalar factored out of the matrix.
    pub log_scale: f64,
    factors: SpectralFactors,
}

impl StabilizedLogDet {
    fn from_factors(factors: SpectralFactors) -> Self {
        let top = factors.max_log_sqrt_eig();
        let log_scale = 2.0 * top;
        let n = factors.dim();
        let mut matrix = DMatrix::zeros(n, n);
        for (phi, u) in factors.log_sqrt_eigs().iter().zip(factors.basis().column_iter()) {
            let lambda = (2.0 * (phi - top)).exp();
            matrix.syger(lambda, &u, &u, 1.0);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                matrix[(i, j)] = matrix[(j, i)];
            }
        }
        Self {
            value: factors.log_det(),
            matrix,
            log_scale,
            factors,
        }
    }

    pub fn factors(&self) -> &SpectralFactors {
        &self.factors
    }

    /// The unscaled recursion matrix; fails when it exceeds `f64` range.
    pub fn reconstruct(&self) -> Result<DMatrix<f64>, RiccatiError> {
        self.factors.reconstruct().ok_or(RiccatiError::Unrepresentable {
            log_scale: self.log_scale,
        })
    }
}

/// Finite-horizon open-loop and closed-loop entropy rates and their gap, in
/// nats per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub h_ol: f64,
    pub h_cl: f64,
    /// `h_ol - h_cl`, exactly.
    pub cip: f64,
    pub horizon: usize,
}

impl EntropyEstimate {
    /// Converts to nats per second given the model timestep.
    pub fn per_second(&self, dt: f64) -> EntropyEstimate {
        EntropyEstimate {
            h_ol: self.h_ol / dt,
            h_cl: self.h_cl / dt,
            cip: self.cip / dt,
            horizon: self.horizon,
        }
    }
}

fn check_lin(lin: &[LinearizedStep]) -> Result<(usize, usize), RiccatiError> {
    let first = lin.first().ok_or(RiccatiError::EmptyHorizon)?;
    let n = first.f_x.nrows();
    let m = first.f_u.ncols();
    for step in lin {
        if step.f_x.nrows() != n || step.f_x.ncols() != n {
            return Err(RiccatiError::DimensionMismatch {
                what: "f_x",
                expected: n,
                actual: step.f_x.nrows(),
            });
        }
        if step.f_u.nrows() != n || step.f_u.ncols() != m {
            return Err(RiccatiError::DimensionMismatch {
                what: "f_u",
                expected: n,
                actual: step.f_u.nrows(),
            });
        }
    }
    Ok((n, m))
}

/// Optimal feedback gain `-(c_uu + f_u^T V f_u)^{-1} f_u^T V f_x` computed in
/// the scale of the factored `V`, so it stays exact when `V` is huge.
/// Returns the gain and whether conditioning regularization was applied.
fn feedback_gain(
    v_next: &SpectralFactors,
    step: &LinearizedStep,
    c_uu: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, bool), RiccatiError> {
    let n = step.f_x.nrows();
    let m = step.f_u.ncols();
    let s = v_next.max_log_sqrt_eig();

    let mut w = c_uu * (-2.0 * s).exp();
    let mut z = DMatrix::<f64>::zeros(m, n);
    for (phi, u) in v_next.log_sqrt_eigs().iter().zip(v_next.basis().column_iter()) {
        let scale = (2.0 * (phi - s)).exp();
        if scale == 0.0 {
            continue;
        }
        let fu_u = step.f_u.tr_mul(&u);
        let fx_u = step.f_x.tr_mul(&u);
        w.syger(scale, &fu_u, &fu_u, 1.0);
        z.ger(scale, &fu_u, &fx_u, 1.0);
    }
    for i in 0..m {
        for j in (i + 1)..m {
            w[(i, j)] = w[(j, i)];
        }
    }

    // Uncontrollable step: the numerator vanishes identically and so must
    // the gain, regardless of the conditioning of the normal matrix.
    if z.iter().all(|&v| v == 0.0) {
        return Ok((DMatrix::zeros(m, n), false));
    }

    let eig = SymmetricEigen::new(w.clone());
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut regularized = false;
    if !(min_eig > 1e-12 * max_eig.max(0.0)) {
        // Near-singular actuation: add a small scale-relative ridge.
        let ridge = 1e-9 * max_eig.max(f64::MIN_POSITIVE);
        for i in 0..m {
            w[(i, i)] += ridge;
        }
        regularized = true;
    }

    let solved = w
        .clone()
        .cholesky()
        .map(|chol| chol.solve(&z))
        .or_else(|| w.lu().solve(&z))
        .ok_or(RiccatiError::Numerical {
            step: 0,
            source: SpectralError::SingularSum { null_dim: m },
        })?;
    Ok((-solved, regularized))
}

/// Backward DARE pass. The value Hessian is propagated in the
/// control-cost-completed form
/// `V_t = c_xx + pi^T c_uu pi + (f_x + f_u pi)^T V_{t+1} (f_x + f_u pi)`,
/// which is algebraically identical to the standard recursion at the optimal
/// gain while keeping every summand positive semidefinite; symmetry is
/// structural in the factored representation.
pub fn dare_backward(lin: &[LinearizedStep], costs: &CostWeights) -> Result<RiccatiSolution, RiccatiError> {
    let (n, m) = check_lin(lin)?;
    if costs.state_dim != n || costs.control_dim != m {
        return Err(RiccatiError::DimensionMismatch {
            what: "cost dimensions",
            expected: n,
            actual: costs.state_dim,
        });
    }
    let horizon = lin.len();
    costs.check_horizon(horizon)?;

    let mut v_xx: Vec<SpectralFactors> = Vec::with_capacity(horizon + 1);
    v_xx.push(costs.terminal_factors()?);
    let mut gains: Vec<DMatrix<f64>> = Vec::with_capacity(horizon);
    let mut regularized_steps = 0usize;

    for t in (0..horizon).rev() {
        let v_next = v_xx.last().unwrap();
        let c_uu = costs.c_uu.at(t);
        let (gain, reg) = feedback_gain(v_next, &lin[t], &c_uu.raw)
            .map_err(|e| numerical_at(e, t))?;
        if reg {
            regularized_steps += 1;
        }

        let f_cl = &lin[t].f_x + &lin[t].f_u * &gain;
        let mut extra = costs.c_xx.at(t).terms.clone();
        for (mu, b) in c_uu.eigvals.iter().zip(c_uu.eigvecs.column_iter()) {
            let v = gain.tr_mul(&b);
            if let Some(term) = RankOneTerm::from_vector(0.5 * mu.ln(), &v) {
                extra.push(term);
            }
        }
        let v_t = v_next
            .propagate(&f_cl, &extra)
            .map_err(|source| RiccatiError::Numerical { step: t, source })?;
        v_xx.push(v_t);
        gains.push(gain);
    }

    v_xx.reverse();
    gains.reverse();
    Ok(RiccatiSolution {
        v_xx,
        gains,
        drifts: None,
        value_gradients: None,
        regularized_steps,
    })
}

fn numerical_at(e: RiccatiError, t: usize) -> RiccatiError {
    match e {
        RiccatiError::Numerical { source, .. } => RiccatiError::Numerical { step: t, source },
        other => other,
    }
}

/// Goal-directed drift `d_t = -(c_uu + f_u^T V_{t+1} f_u)^{-1} (c_uu u_bar_t
/// + f_u^T Vx_{t+1})` and the value-gradient recursion along the nominal
/// trajectory. Requires the gains from [`dare_backward`]. Magnitudes must be
/// representable in plain `f64`, which holds at planning horizons.
pub fn extrinsic_drift(
    lin: &[LinearizedStep],
    costs: &CostWeights,
    goals: &[DVector<f64>],
    nominal: &Trajectory,
    solution: &RiccatiSolution,
) -> Result<DriftTerms, RiccatiError> {
    let (n, _m) = check_lin(lin)?;
    let horizon = lin.len();
    costs.check_horizon(horizon)?;
    if goals.len() != horizon + 1 {
        return Err(RiccatiError::DimensionMismatch {
            what: "goal sequence",
            expected: horizon + 1,
            actual: goals.len(),
        });
    }
    if nominal.states.len() != horizon + 1 || nominal.controls.len() != horizon {
        return Err(RiccatiError::DimensionMismatch {
            what: "nominal trajectory",
            expected: horizon + 1,
            actual: nominal.states.len(),
        });
    }
    if solution.horizon() != horizon {
        return Err(RiccatiError::DimensionMismatch {
            what: "riccati solution horizon",
            expected: horizon,
            actual: solution.horizon(),
        });
    }

    let mut value_gradients = vec![DVector::<f64>::zeros(n); horizon + 1];
    let terminal_err = &nominal.states[horizon] - &goals[horizon];
    value_gradients[horizon] = costs.terminal() * terminal_err;

    let mut drifts = vec![DVector::<f64>::zeros(costs.control_dim); horizon];
    for t in (0..horizon).rev() {
        let v_next = solution.value_hessian(t + 1)?;
        let c_uu = costs.c_uu(t);
        let w = c_uu + lin[t].f_u.tr_mul(&v_next) * &lin[t].f_u;
        let rhs = c_uu * &nominal.controls[t] + lin[t].f_u.tr_mul(&value_gradients[t + 1]);
        let d = w
            .clone()
            .cholesky()
            .map(|chol| chol.solve(&rhs))
            .or_else(|| w.lu().solve(&rhs))
            .ok_or(RiccatiError::Numerical {
                step: t,
                source: SpectralError::SingularSum {
                    null_dim: costs.control_dim,
                },
            })?;
        drifts[t] = -d;

        let gain = &solution.gains[t];
        let f_cl = &lin[t].f_x + &lin[t].f_u * gain;
        let state_err = &nominal.states[t] - &goals[t];
        value_gradients[t] = f_cl.tr_mul(&value_gradients[t + 1])
            + costs.c_xx(t) * state_err
            + gain.tr_mul(&(c_uu * &nominal.controls[t]));
    }

    Ok(DriftTerms {
        drifts,
        value_gradients,
    })
}

/// Backward curvature recursions with shared terminal condition: the
/// closed-loop recursion propagates through `f_x + f_u pi` and the open-loop
/// recursion through `f_x` alone. Returns stabilized endpoints `(X_0, Y_0)`.
pub fn aux_recursions(
    lin: &[LinearizedStep],
    gains: &[DMatrix<f64>],
    costs: &CostWeights,
) -> Result<(StabilizedLogDet, StabilizedLogDet), RiccatiError> {
    let (n, m) = check_lin(lin)?;
    if costs.state_dim != n || costs.control_dim != m {
        return Err(RiccatiError::DimensionMismatch {
            what: "cost dimensions",
            expected: n,
            actual: costs.state_dim,
        });
    }
    let horizon = lin.len();
    costs.check_horizon(horizon)?;
    if gains.len() != horizon {
        return Err(RiccatiError::DimensionMismatch {
            what: "gain sequence",
            expected: horizon,
            actual: gains.len(),
        });
    }

    let mut closed = costs.terminal_factors()?;
    let mut open = costs.terminal_factors()?;
    for t in (0..horizon).rev() {
        let extra = &costs.c_xx.at(t).terms;
        let f_cl = &lin[t].f_x + &lin[t].f_u * &gains[t];
        closed = closed
            .propagate(&f_cl, extra)
            .map_err(|source| RiccatiError::Numerical { step: t, source })?;
        open = open
            .propagate(&lin[t].f_x, extra)
            .map_err(|source| RiccatiError::Numerical { step: t, source })?;
    }

    Ok((
        StabilizedLogDet::from_factors(closed),
        StabilizedLogDet::from_factors(open),
    ))
}

/// Finite-horizon entropy rates from the stabilized recursion endpoints:
/// `h_cl = ln det X_0 / 2T`, `h_ol = ln det Y_0 / 2T`, in nats per step.
pub fn entropy_rates(x0: &StabilizedLogDet, y0: &StabilizedLogDet, horizon: usize) -> EntropyEstimate {
    let scale = 2.0 * horizon as f64;
    let h_cl = x0.value / scale;
    let h_ol = y0.value / scale;
    EntropyEstimate {
        h_ol,
        h_cl,
        cip: h_ol - h_cl,
        horizon,
    }
}

/// Closed-loop entropy rate read directly off the value Hessian:
/// `ln det V_0 / 2T`.
pub fn value_hessian_rate(solution: &RiccatiSolution) -> f64 {
    solution.log_det_value_hessian(0) / (2.0 * solution.horizon() as f64)
}

/// Result of the matrix-ordering check `X_0 <= V_0 <= Y_0`.
#[derive(Debug, Clone, Copy)]
pub struct SandwichReport {
    pub holds: bool,
    pub min_eig_v_minus_x: f64,
    pub min_eig_y_minus_v: f64,
}

/// Verifies the ordering `X_0 <= V_xx_0 <= Y_0` up to `tol` on the minimum
/// eigenvalues of the differences. All three inputs must come from the same
/// linearization, costs, and gains, and must be representable in plain form
/// (moderate horizons); otherwise an error advises reducing the horizon.
pub fn sandwich_check(
    solution: &RiccatiSolution,
    x0: &StabilizedLogDet,
    y0: &StabilizedLogDet,
    tol: f64,
) -> Result<SandwichReport, RiccatiError> {
    let v = solution.value_hessian(0)?;
    let x = x0.reconstruct()?;
    let y = y0.reconstruct()?;

    let min_eig = |m: DMatrix<f64>| -> f64 {
        let sym = (&m + m.transpose()) * 0.5;
        SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    };
    let min_eig_v_minus_x = min_eig(&v - &x);
    let min_eig_y_minus_v = min_eig(&y - &v);
    Ok(SandwichReport {
        holds: min_eig_v_minus_x >= -tol && min_eig_y_minus_v >= -tol,
        min_eig_v_minus_x,
        min_eig_y_minus_v,
    })
}

/// Full entropy-gap evaluation for one linearized trajectory: optimal DARE
/// gains, auxiliary recursions, and the finite-horizon rates.
pub fn cip_rates(
    lin: &[LinearizedStep],
    costs: &CostWeights,
) -> Result<(EntropyEstimate, RiccatiSolution), RiccatiError> {
    let solution = dare_backward(lin, costs)?;
    let (x0, y0) = aux_recursions(lin, &solution.gains, costs)?;
    let estimate = entropy_rates(&x0, &y0, lin.len());
    Ok((estimate, solution))
}
