use nalgebra::{DMatrix, DVector};

use super::ContinuousDynamics;

/// Planar double pendulum with point masses, actuated at the base joint
/// only. State is `(theta1, theta2, omega1, omega2)`: `theta1` is the first
/// link's angle from hanging, `theta2` the second link's angle relative to
/// the first. Both links upright means `theta1 = pi`, `theta1 + theta2 = pi`.
#[derive(Debug, Clone)]
pub struct DoublePendulum {
    pub mass1: f64,
    pub mass2: f64,
    pub length1: f64,
    pub length2: f64,
    pub gravity: f64,
    pub damping1: f64,
    pub damping2: f64,
    pub torque_limit: f64,
    pub dt: f64,
}

impl Default for DoublePendulum {
    fn default() -> Self {
        Self {
            mass1: 1.0,
            mass2: 1.0,
            length1: 1.0,
            length2: 1.0,
            gravity: 9.81,
            damping1: 0.0,
            damping2: 0.0,
            torque_limit: 2.0,
            dt: 0.01,
        }
    }
}

struct Terms {
    m11: f64,
    m12: f64,
    m22: f64,
    c1: f64,
    c2: f64,
    g1: f64,
    g2: f64,
}

impl DoublePendulum {
    pub(crate) fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("mass1", self.mass1),
            ("mass2", self.mass2),
            ("length1", self.length1),
            ("length2", self.length2),
            ("gravity", self.gravity),
            ("damping1", self.damping1),
            ("damping2", self.damping2),
            ("torque_limit", self.torque_limit),
            ("dt", self.dt),
        ]
    }

    fn terms(&self, x: &DVector<f64>) -> Terms {
        let (t1, t2, w1, w2) = (x[0], x[1], x[2], x[3]);
        let (s1, _) = t1.sin_cos();
        let (s2, c2) = t2.sin_cos();
        let s12 = (t1 + t2).sin();
        let (m1, m2, l1, l2, g) = (self.mass1, self.mass2, self.length1, self.length2, self.gravity);
        Terms {
            m11: m1 * l1 * l1 + m2 * (l1 * l1 + 2.0 * l1 * l2 * c2 + l2 * l2),
            m12: m2 * (l1 * l2 * c2 + l2 * l2),
            m22: m2 * l2 * l2,
            c1: -m2 * l1 * l2 * s2 * w2 * (2.0 * w1 + w2),
            c2: m2 * l1 * l2 * s2 * w1 * w1,
            g1: (m1 + m2) * g * l1 * s1 + m2 * g * l2 * s12,
            g2: m2 * g * l2 * s12,
        }
    }

    pub fn energy(&self, x: &DVector<f64>) -> f64 {
        let (t1, t2, w1, w2) = (x[0], x[1], x[2], x[3]);
        let (m1, m2, l1, l2, g) = (self.mass1, self.mass2, self.length1, self.length2, self.gravity);
        let c2 = t2.cos();
        let kinetic = 0.5 * m1 * l1 * l1 * w1 * w1
            + 0.5
                * m2
                * (l1 * l1 * w1 * w1
                    + l2 * l2 * (w1 + w2) * (w1 + w2)
                    + 2.0 * l1 * l2 * w1 * (w1 + w2) * c2);
        let potential = -(m1 + m2) * g * l1 * t1.cos() - m2 * g * l2 * (t1 + t2).cos();
        kinetic + potential
    }
}

impl ContinuousDynamics for DoublePendulum {
    fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (w1, w2) = (x[2], x[3]);
        let t = self.terms(x);
        let rhs1 = u[0] - self.damping1 * w1 - t.c1 - t.g1;
        let rhs2 = -self.damping2 * w2 - t.c2 - t.g2;
        let det = t.m11 * t.m22 - t.m12 * t.m12;
        let a1 = (t.m22 * rhs1 - t.m12 * rhs2) / det;
        let a2 = (-t.m12 * rhs1 + t.m11 * rhs2) / det;
        DVector::from_vec(vec![w1, w2, a1, a2])
    }

    fn derivative_jacobians(&self, x: &DVector<f64>, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let (t1, t2, w1, w2) = (x[0], x[1], x[2], x[3]);
        let (m1, m2, l1, l2, g) = (self.mass1, self.mass2, self.length1, self.length2, self.gravity);
        let (s2, c2) = t2.sin_cos();
        let c1 = t1.cos();
        let c12 = (t1 + t2).cos();
        let t = self.terms(x);

        let det = t.m11 * t.m22 - t.m12 * t.m12;
        let rhs1 = u[0] - self.damping1 * w1 - t.c1 - t.g1;
        let rhs2 = -self.damping2 * w2 - t.c2 - t.g2;
        let acc1 = (t.m22 * rhs1 - t.m12 * rhs2) / det;
        let acc2 = (-t.m12 * rhs1 + t.m11 * rhs2) / det;

        let mll = m2 * l1 * l2;

        // Gravity and Coriolis partials.
        let dg1_dt1 = (m1 + m2) * g * l1 * c1 + m2 * g * l2 * c12;
        let dg1_dt2 = m2 * g * l2 * c12;
        let dg2_dt1 = m2 * g * l2 * c12;
        let dg2_dt2 = m2 * g * l2 * c12;
        let dc1_dt2 = -mll * c2 * w2 * (2.0 * w1 + w2);
        let dc1_dw1 = -2.0 * mll * s2 * w2;
        let dc1_dw2 = -2.0 * mll * s2 * (w1 + w2);
        let dc2_dt2 = mll * c2 * w1 * w1;
        let dc2_dw1 = 2.0 * mll * s2 * w1;

        // Mass matrix depends on theta2 only.
        let dm11_dt2 = -2.0 * mll * s2;
        let dm12_dt2 = -mll * s2;

        // d(acc)/dz = M^{-1} (d(rhs)/dz - dM/dz * acc)
        let solve = |r1: f64, r2: f64| -> (f64, f64) {
            ((t.m22 * r1 - t.m12 * r2) / det, (-t.m12 * r1 + t.m11 * r2) / det)
        };

        let (da1_dt1, da2_dt1) = solve(-dg1_dt1, -dg2_dt1);
        let (da1_dt2, da2_dt2) = solve(
            -dc1_dt2 - dg1_dt2 - (dm11_dt2 * acc1 + dm12_dt2 * acc2),
            -dc2_dt2 - dg2_dt2 - dm12_dt2 * acc1,
        );
        let (da1_dw1, da2_dw1) = solve(-self.damping1 - dc1_dw1, -dc2_dw1);
        let (da1_dw2, da2_dw2) = solve(-dc1_dw2, -self.damping2);
        let (da1_du, da2_du) = solve(1.0, 0.0);

        let jx = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                da1_dt1, da1_dt2, da1_dw1, da1_dw2, //
                da2_dt1, da2_dt2, da2_dw1, da2_dw2,
            ],
        );
        let ju = DMatrix::from_row_slice(4, 1, &[0.0, 0.0, da1_du, da2_du]);
        (jx, ju)
    }
}
