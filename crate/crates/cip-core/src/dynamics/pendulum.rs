use nalgebra::{DMatrix, DVector};

use super::ContinuousDynamics;

/// Torque-actuated point-mass pendulum. State is `(theta, omega)` with
/// `theta = 0` hanging straight down and `theta = pi` upright.
#[derive(Debug, Clone)]
pub struct Pendulum {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub damping: f64,
    pub torque_limit: f64,
    pub dt: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            damping: 0.0,
            torque_limit: 2.0,
            dt: 0.02,
        }
    }
}

impl Pendulum {
    pub(crate) fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("mass", self.mass),
            ("length", self.length),
            ("gravity", self.gravity),
            ("damping", self.damping),
            ("torque_limit", self.torque_limit),
            ("dt", self.dt),
        ]
    }

    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        let (theta, omega) = (x[0], x[1]);
        let inertia = self.mass * self.length * self.length;
        0.5 * inertia * omega * omega - self.mass * self.gravity * self.length * theta.cos()
    }
}

impl ContinuousDynamics for Pendulum {
    fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (theta, omega) = (x[0], x[1]);
        let inertia = self.mass * self.length * self.length;
        let torque = u[0] - self.damping * omega - self.mass * self.gravity * self.length * theta.sin();
        DVector::from_vec(vec![omega, torque / inertia])
    }

    fn derivative_jacobians(&self, x: &DVector<f64>, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let theta = x[0];
        let inertia = self.mass * self.length * self.length;
        let jx = DMatrix::from_row_slice(
            2,
            2,
            &[
                0.0,
                1.0,
                -self.gravity / self.length * theta.cos(),
                -self.damping / inertia,
            ],
        );
        let ju = DMatrix::from_row_slice(2, 1, &[0.0, 1.0 / inertia]);
        (jx, ju)
    }
}
