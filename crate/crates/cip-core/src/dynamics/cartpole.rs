use nalgebra::{DMatrix, DVector};

use super::ContinuousDynamics;

/// Cart-pole with a point-mass pole. State is `(x, v, theta, omega)` where
/// `theta = 0` is the pole hanging down and `theta = pi` is upright; the
/// control is a horizontal force on the cart.
#[derive(Debug, Clone)]
pub struct CartPole {
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub length: f64,
    pub gravity: f64,
    /// Viscous friction on the cart.
    pub cart_damping: f64,
    /// Viscous friction at the pole pivot.
    pub pivot_damping: f64,
    pub force_limit: f64,
    pub dt: f64,
}

impl Default for CartPole {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 1.0,
            length: 1.0,
            gravity: 9.81,
            cart_damping: 0.0,
            pivot_damping: 0.0,
            force_limit: 10.0,
            dt: 0.02,
        }
    }
}

impl CartPole {
    pub(crate) fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("cart_mass", self.cart_mass),
            ("pole_mass", self.pole_mass),
            ("length", self.length),
            ("gravity", self.gravity),
            ("cart_damping", self.cart_damping),
            ("pivot_damping", self.pivot_damping),
            ("force_limit", self.force_limit),
            ("dt", self.dt),
        ]
    }

    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        let (v, theta, omega) = (x[1], x[2], x[3]);
        let l = self.length;
        let pole_vx = v + l * omega * theta.cos();
        let pole_vy = l * omega * theta.sin();
        let kinetic = 0.5 * self.cart_mass * v * v
            + 0.5 * self.pole_mass * (pole_vx * pole_vx + pole_vy * pole_vy);
        let potential = -self.pole_mass * self.gravity * l * theta.cos();
        kinetic + potential
    }

    /// Accelerations `(x_dd, theta_dd)` from the manipulator equations.
    fn accelerations(&self, v: f64, theta: f64, omega: f64, force: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        let l = self.length;
        let mp = self.pole_mass;
        let q_x = force - self.cart_damping * v;
        let q_theta = -self.pivot_damping * omega;
        let denom = self.cart_mass + mp * s * s;
        let x_dd = (q_x - c / l * q_theta + mp * s * (self.gravity * c + l * omega * omega)) / denom;
        let theta_dd = q_theta / (mp * l * l) - (x_dd * c + self.gravity * s) / l;
        (x_dd, theta_dd)
    }
}

impl ContinuousDynamics for CartPole {
    fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (v, theta, omega) = (x[1], x[2], x[3]);
        let (x_dd, theta_dd) = self.accelerations(v, theta, omega, u[0]);
        DVector::from_vec(vec![v, x_dd, omega, theta_dd])
    }

    fn derivative_jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let (v, theta, omega) = (x[1], x[2], x[3]);
        let (s, c) = theta.sin_cos();
        let l = self.length;
        let mp = self.pole_mass;
        let g = self.gravity;

        let q_theta = -self.pivot_damping * omega;
        let num = u[0] - self.cart_damping * v - c / l * q_theta + mp * s * (g * c + l * omega * omega);
        let denom = self.cart_mass + mp * s * s;
        let x_dd = num / denom;

        // d(num)/d(theta): the q_theta term contributes s/l * q_theta, the
        // gravity/centrifugal term mp*(g*cos(2theta) + l*omega^2*cos(theta)).
        let dnum_dtheta = s / l * q_theta + mp * (g * (2.0 * theta).cos() + l * omega * omega * c);
        let ddenom_dtheta = 2.0 * mp * s * c;
        let dxdd_dv = -self.cart_damping / denom;
        let dxdd_dtheta = (dnum_dtheta * denom - num * ddenom_dtheta) / (denom * denom);
        let dxdd_domega = (self.pivot_damping * c / l + 2.0 * mp * l * omega * s) / denom;
        let dxdd_df = 1.0 / denom;

        let dtdd_dv = -dxdd_dv * c / l;
        let dtdd_dtheta = -(dxdd_dtheta * c - x_dd * s + g * c) / l;
        let dtdd_domega = -self.pivot_damping / (mp * l * l) - dxdd_domega * c / l;
        let dtdd_df = -dxdd_df * c / l;

        let jx = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                0.0, dxdd_dv, dxdd_dtheta, dxdd_domega, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, dtdd_dv, dtdd_dtheta, dtdd_domega,
            ],
        );
        let ju = DMatrix::from_row_slice(4, 1, &[0.0, dxdd_df, 0.0, dtdd_df]);
        (jx, ju)
    }
}
