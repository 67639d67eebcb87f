//! Discrete-time controlled dynamical systems: analytic benchmark models,
//! rollouts, and linearization along nominal trajectories.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

mod cartpole;
mod double_pendulum;
mod lti;
mod pendulum;

pub use cartpole::CartPole;
pub use double_pendulum::DoublePendulum;
pub use lti::Lti;
pub use pendulum::Pendulum;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("{what}: expected dimension {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite entries in {what}")]
    NonFinite { what: &'static str },
    #[error("rollout diverged at step {step}")]
    Diverged { step: usize },
    #[error("operation not implemented for model `{model}`")]
    Unsupported { model: String },
}

/// Per-step Jacobian pair of the discrete map.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedStep {
    /// Sensitivity of the next state to the current state.
    pub f_x: DMatrix<f64>,
    /// Sensitivity of the next state to the applied control.
    pub f_u: DMatrix<f64>,
}

/// Nominal states and controls, optionally with per-step linearization.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub controls: Vec<DVector<f64>>,
    pub linearization: Option<Vec<LinearizedStep>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }
}

/// Right-hand side of a continuous-time system together with its analytic
/// derivatives, integrated by one RK4 step per discrete transition.
pub(crate) trait ContinuousDynamics {
    fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// Jacobians of `derivative` with respect to state and control.
    fn derivative_jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);
}

fn rk4_step<S: ContinuousDynamics>(sys: &S, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> DVector<f64> {
    let k1 = sys.derivative(x, u);
    let k2 = sys.derivative(&(x + &k1 * (dt / 2.0)), u);
    let k3 = sys.derivative(&(x + &k2 * (dt / 2.0)), u);
    let k4 = sys.derivative(&(x + &k3 * dt), u);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Exact Jacobians of the RK4 map obtained by differentiating through the
/// four stages with the chain rule.
fn rk4_jacobians<S: ContinuousDynamics>(
    sys: &S,
    x: &DVector<f64>,
    u: &DVector<f64>,
    dt: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = x.len();
    let eye = DMatrix::<f64>::identity(n, n);

    let k1 = sys.derivative(x, u);
    let x2 = x + &k1 * (dt / 2.0);
    let k2 = sys.derivative(&x2, u);
    let x3 = x + &k2 * (dt / 2.0);
    let k3 = sys.derivative(&x3, u);
    let x4 = x + &k3 * dt;

    let (j1x, j1u) = sys.derivative_jacobians(x, u);
    let (j2x, j2u) = sys.derivative_jacobians(&x2, u);
    let (j3x, j3u) = sys.derivative_jacobians(&x3, u);
    let (j4x, j4u) = sys.derivative_jacobians(&x4, u);

    let a1 = j1x.clone();
    let b1 = j1u.clone();
    let a2 = &j2x * (&eye + &a1 * (dt / 2.0));
    let b2 = &j2x * (&b1 * (dt / 2.0)) + &j2u;
    let a3 = &j3x * (&eye + &a2 * (dt / 2.0));
    let b3 = &j3x * (&b2 * (dt / 2.0)) + &j3u;
    let a4 = &j4x * (&eye + &a3 * dt);
    let b4 = &j4x * (&b3 * dt) + &j4u;

    let f_x = eye + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0);
    let f_u = (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (dt / 6.0);
    (f_x, f_u)
}

/// A discrete-time controlled system with step map, Jacobians, and metadata.
#[derive(Debug, Clone)]
pub enum Model {
    Lti(Lti),
    Pendulum(Pendulum),
    CartPole(CartPole),
    DoublePendulum(DoublePendulum),
}

impl Model {
    pub fn state_dim(&self) -> usize {
        match self {
            Model::Lti(m) => m.state_dim(),
            Model::Pendulum(_) => 2,
            Model::CartPole(_) => 4,
            Model::DoublePendulum(_) => 4,
        }
    }

    pub fn control_dim(&self) -> usize {
        match self {
            Model::Lti(m) => m.control_dim(),
            Model::Pendulum(_) => 1,
            Model::CartPole(_) => 1,
            Model::DoublePendulum(_) => 1,
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            Model::Lti(m) => m.dt,
            Model::Pendulum(m) => m.dt,
            Model::CartPole(m) => m.dt,
            Model::DoublePendulum(m) => m.dt,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Lti(_) => "lti",
            Model::Pendulum(_) => "pendulum",
            Model::CartPole(_) => "cartpole",
            Model::DoublePendulum(_) => "double_pendulum",
        }
    }

    /// Physical constants of the model, for logging and config headers.
    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        match self {
            Model::Lti(m) => m.parameters(),
            Model::Pendulum(m) => m.parameters(),
            Model::CartPole(m) => m.parameters(),
            Model::DoublePendulum(m) => m.parameters(),
        }
    }

    /// Symmetric actuation limits per control dimension, if bounded.
    pub fn control_limit(&self) -> Option<DVector<f64>> {
        match self {
            Model::Lti(m) => m.control_limit.clone(),
            Model::Pendulum(m) => Some(DVector::from_element(1, m.torque_limit)),
            Model::CartPole(m) => Some(DVector::from_element(1, m.force_limit)),
            Model::DoublePendulum(m) => Some(DVector::from_element(1, m.torque_limit)),
        }
    }

    /// Clamps a control vector to the model's actuation limits.
    pub fn clamp_control(&self, u: &DVector<f64>) -> DVector<f64> {
        match self.control_limit() {
            Some(lim) => u.zip_map(&lim, |ui, li| ui.clamp(-li, li)),
            None => u.clone(),
        }
    }

    fn check_inputs(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<(), DynamicsError> {
        if x.len() != self.state_dim() {
            return Err(DynamicsError::DimensionMismatch {
                what: "state",
                expected: self.state_dim(),
                actual: x.len(),
            });
        }
        if u.len() != self.control_dim() {
            return Err(DynamicsError::DimensionMismatch {
                what: "control",
                expected: self.control_dim(),
                actual: u.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::NonFinite { what: "state" });
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::NonFinite { what: "control" });
        }
        Ok(())
    }

    /// Advances the system by one timestep. Controls are clamped to the
    /// actuation limits before integration.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, DynamicsError> {
        self.check_inputs(x, u)?;
        let u = self.clamp_control(u);
        let next = match self {
            Model::Lti(m) => m.step(x, &u),
            Model::Pendulum(m) => rk4_step(m, x, &u, m.dt),
            Model::CartPole(m) => rk4_step(m, x, &u, m.dt),
            Model::DoublePendulum(m) => rk4_step(m, x, &u, m.dt),
        };
        Ok(next)
    }

    /// Rolls the system forward from `x0` under the given control sequence.
    pub fn rollout(&self, x0: &DVector<f64>, controls: &[DVector<f64>]) -> Result<Trajectory, DynamicsError> {
        if x0.len() != self.state_dim() {
            return Err(DynamicsError::DimensionMismatch {
                what: "initial state",
                expected: self.state_dim(),
                actual: x0.len(),
            });
        }
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(x0.clone());
        for (t, u) in controls.iter().enumerate() {
            let next = self.step(&states[t], u)?;
            if !next.iter().all(|v| v.is_finite()) {
                return Err(DynamicsError::Diverged { step: t });
            }
            states.push(next);
        }
        Ok(Trajectory {
            states,
            controls: controls.to_vec(),
            linearization: None,
        })
    }

    /// Jacobians of the discrete step map at `(x, u)`. Analytic for every
    /// built-in model; controls are clamped to the limits first and the
    /// Jacobian is taken of the unsaturated map at the clamped point.
    pub fn linearize(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<LinearizedStep, DynamicsError> {
        self.check_inputs(x, u)?;
        let u = self.clamp_control(u);
        let (f_x, f_u) = match self {
            Model::Lti(m) => (m.a.clone(), m.b.clone()),
            Model::Pendulum(m) => rk4_jacobians(m, x, &u, m.dt),
            Model::CartPole(m) => rk4_jacobians(m, x, &u, m.dt),
            Model::DoublePendulum(m) => rk4_jacobians(m, x, &u, m.dt),
        };
        Ok(LinearizedStep { f_x, f_u })
    }

    /// Central finite differences of the step map, the fallback linearization
    /// for models without analytic Jacobians. Step size is scaled per
    /// component as `1e-6 * max(1, |component|)`.
    pub fn finite_difference_linearize(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<LinearizedStep, DynamicsError> {
        self.check_inputs(x, u)?;
        let n = self.state_dim();
        let m = self.control_dim();
        let mut f_x = DMatrix::zeros(n, n);
        let mut f_u = DMatrix::zeros(n, m);
        for i in 0..n {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let col = (self.step(&xp, u)? - self.step(&xm, u)?) / (2.0 * h);
            f_x.set_column(i, &col);
        }
        for j in 0..m {
            let h = 1e-6 * u[j].abs().max(1.0);
            let mut up = u.clone();
            up[j] += h;
            let mut um = u.clone();
            um[j] -= h;
            let col = (self.step(x, &up)? - self.step(x, &um)?) / (2.0 * h);
            f_u.set_column(j, &col);
        }
        Ok(LinearizedStep { f_x, f_u })
    }

    /// Populates the per-step linearization of a trajectory.
    pub fn linearize_trajectory(&self, traj: &Trajectory) -> Result<Trajectory, DynamicsError> {
        let mut lin = Vec::with_capacity(traj.len());
        for t in 0..traj.len() {
            lin.push(self.linearize(&traj.states[t], &traj.controls[t])?);
        }
        Ok(Trajectory {
            states: traj.states.clone(),
            controls: traj.controls.clone(),
            linearization: Some(lin),
        })
    }

    /// Total mechanical energy (kinetic + potential) in joules.
    pub fn energy(&self, x: &DVector<f64>) -> Result<f64, DynamicsError> {
        if x.len() != self.state_dim() {
            return Err(DynamicsError::DimensionMismatch {
                what: "state",
                expected: self.state_dim(),
                actual: x.len(),
            });
        }
        match self {
            Model::Lti(_) => Err(DynamicsError::Unsupported {
                model: self.name().to_string(),
            }),
            Model::Pendulum(m) => Ok(m.energy(x)),
            Model::CartPole(m) => Ok(m.energy(x)),
            Model::DoublePendulum(m) => Ok(m.energy(x)),
        }
    }
}

/// Wraps an angle to `(-pi, pi]`. Used at reporting boundaries only, never
/// inside the integrator, so Jacobian continuity is preserved.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = (theta + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        w
    }
}
