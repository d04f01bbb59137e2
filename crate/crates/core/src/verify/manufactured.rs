use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::assembly::{StokesData, VectorField};
use crate::error::{Error, Result};
use crate::geometry::Point;

pub type ScalarField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
/// Velocity gradient, `G[(c, j)] = d u_c / d x_j`.
pub type TensorField = Arc<dyn Fn(&Point) -> Matrix2<f64> + Send + Sync>;

/// Closed-form Stokes solution with `f = -nu Lap u + grad p` and `g = u`.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub nu: f64,
    pub velocity: VectorField,
    pub velocity_grad: TensorField,
    pub pressure: ScalarField,
    pub forcing: VectorField,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .field("nu", &self.nu)
            .finish_non_exhaustive()
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("viscosity must be positive, got {nu}")))
    }
}

impl ManufacturedCase {
    /// Stream-function velocity with `psi = x1^2 - x1 + 1/4 + x2^2 - x2` and
    /// `p = 10 (x1^2 - x2^2)^2`.
    pub fn stream_function(nu: f64) -> Result<Self> {
        check_nu(nu)?;
        let psi = |x: &Point| x.x * x.x - x.x + 0.25 + x.y * x.y - x.y;
        Ok(Self {
            name: "stream-function".into(),
            nu,
            velocity: Arc::new(move |x| {
                Vector2::new(2.0 * psi(x) * (2.0 * x.y - 1.0), -2.0 * psi(x) * (2.0 * x.x - 1.0))
            }),
            velocity_grad: Arc::new(move |x| {
                let (a, b) = (2.0 * x.x - 1.0, 2.0 * x.y - 1.0);
                Matrix2::new(
                    2.0 * a * b,
                    2.0 * b * b + 4.0 * psi(x),
                    -2.0 * a * a - 4.0 * psi(x),
                    -2.0 * a * b,
                )
            }),
            pressure: Arc::new(|x| {
                let s = x.x * x.x - x.y * x.y;
                10.0 * s * s
            }),
            forcing: Arc::new(move |x| {
                let s = x.x * x.x - x.y * x.y;
                Vector2::new(
                    -16.0 * nu * (2.0 * x.y - 1.0) + 40.0 * s * x.x,
                    16.0 * nu * (2.0 * x.x - 1.0) - 40.0 * s * x.y,
                )
            }),
        })
    }

    /// Divergence-free quadratic velocity with affine pressure, reproduced
    /// exactly by the discretization.
    pub fn quadratic_patch(nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(Self {
            name: "patch".into(),
            nu,
            velocity: Arc::new(|x| {
                Vector2::new(
                    x.x * x.x + 2.0 * x.x * x.y - x.y * x.y + 0.3 * x.y,
                    -2.0 * x.x * x.y - x.y * x.y + 0.5 * x.x * x.x - 0.2 * x.x,
                )
            }),
            velocity_grad: Arc::new(|x| {
                Matrix2::new(
                    2.0 * x.x + 2.0 * x.y,
                    2.0 * x.x - 2.0 * x.y + 0.3,
                    -2.0 * x.y + x.x - 0.2,
                    -2.0 * x.x - 2.0 * x.y,
                )
            }),
            pressure: Arc::new(|x| 2.0 * x.x - 3.0 * x.y + 0.7),
            // Lap u = (0, -1)
            forcing: Arc::new(move |_| Vector2::new(2.0, -3.0 + nu)),
        })
    }

    /// `u = 0`, `p = 0`.
    pub fn zero(nu: f64) -> Result<Self> {
        check_nu(nu)?;
        Ok(Self {
            name: "zero".into(),
            nu,
            velocity: Arc::new(|_| Vector2::zeros()),
            velocity_grad: Arc::new(|_| Matrix2::zeros()),
            pressure: Arc::new(|_| 0.0),
            forcing: Arc::new(|_| Vector2::zeros()),
        })
    }

    /// Same case with `p + c`; `f` is unchanged.
    pub fn with_pressure_shift(&self, c: f64) -> Self {
        let p = self.pressure.clone();
        Self {
            name: format!("{}+{c}", self.name),
            pressure: Arc::new(move |x| p(x) + c),
            ..self.clone()
        }
    }

    pub fn data(&self) -> StokesData {
        StokesData {
            forcing: self.forcing.clone(),
            boundary: self.velocity.clone(),
        }
    }

    pub fn divergence(&self, x: &Point) -> f64 {
        (self.velocity_grad)(x).trace()
    }
}
