use nalgebra::{DMatrix, DVector};

/// Discrete-time linear system `x' = A x + B u`. The map is applied directly
/// (no integrator); `dt` only sets the reporting timescale.
#[derive(Debug, Clone)]
pub struct Lti {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub dt: f64,
    pub control_limit: Option<DVector<f64>>,
}

impl Lti {
    /// Panics if `a` is not square or `b` has a mismatched row count.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "state matrix must be square");
        assert_eq!(a.nrows(), b.nrows(), "control matrix row count must match state dimension");
        Self {
            a,
            b,
            dt: 1.0,
            control_limit: None,
        }
    }

    /// Convenience constructor for scalar systems.
    pub fn scalar(a: f64, b: f64) -> Self {
        Self::new(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b))
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub(crate) fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    pub(crate) fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("state_dim", self.state_dim() as f64),
            ("control_dim", self.control_dim() as f64),
            ("dt", self.dt),
        ]
    }
}
