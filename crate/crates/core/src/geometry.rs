//! Implicit domain description and the boundary transfer map.
//!
//! A domain is `{x : phi(x) < 0}` for a level set `phi`. Points of the
//! computational boundary are mapped onto the physical boundary by solving
//!
//! ```text
//! phi(x*) = 0,    grad phi(x*)^perp . (x - x*) = 0
//! ```
//!
//! with Newton's method, which yields the transfer length `delta = |x* - x|`
//! and the unit transfer direction `d = (x* - x) / delta`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Base radius of the six-petal test domain.
pub const STAR_RADIUS: f64 = 0.3723423423343;
/// Petal amplitude of the six-petal test domain.
pub const STAR_AMPLITUDE: f64 = 0.1;
/// Number of petals.
pub const STAR_PETALS: f64 = 6.0;

/// Residual tolerance of the boundary projection.
pub const TOL_NEWTON: f64 = 1e-12;
const MAX_NEWTON_ITER: usize = 50;
const MAX_HALVINGS: usize = 20;
const MAX_FIXED_POINT_ITER: usize = 200;

/// A scalar level-set function, negative inside the domain.
pub trait LevelSet: Send + Sync + fmt::Debug {
    fn value(&self, x: &Point) -> f64;

    fn gradient(&self, x: &Point) -> Result<Vector2<f64>>;

    /// Analytic Hessian, when the level set provides one. Projection falls
    /// back to a finite-difference Jacobian otherwise.
    fn hessian(&self, _x: &Point) -> Option<Matrix2<f64>> {
        None
    }
}

/// Axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BoundingBox {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        if !(max[0] > min[0] && max[1] > min[1]) {
            return Err(Error::InvalidParameter(format!(
                "empty bounding box {min:?} .. {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn unit() -> Self {
        Self {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// `phi = r - R0 - A sin(6 theta)` about `(0.5, 0.5)`.
#[derive(Clone, Debug)]
pub struct StarLevelSet {
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
    pub petals: f64,
}

impl Default for StarLevelSet {
    fn default() -> Self {
        Self {
            center: Point::new(0.5, 0.5),
            radius: STAR_RADIUS,
            amplitude: STAR_AMPLITUDE,
            petals: STAR_PETALS,
        }
    }
}

impl LevelSet for StarLevelSet {
    fn value(&self, x: &Point) -> f64 {
        let rel = x - self.center;
        let r = rel.norm();
        if r == 0.0 {
            // theta is undefined at the center; the radial part dominates
            return -self.radius;
        }
        let theta = rel.y.atan2(rel.x);
        r - self.radius - self.amplitude * (self.petals * theta).sin()
    }

    fn gradient(&self, x: &Point) -> Result<Vector2<f64>> {
        let rel = x - self.center;
        let r2 = rel.norm_squared();
        if r2 == 0.0 {
            return Err(Error::SingularGradient(*x));
        }
        let r = r2.sqrt();
        let theta = rel.y.atan2(rel.x);
        let grad_r = rel / r;
        let grad_theta = Vector2::new(-rel.y, rel.x) / r2;
        let k = self.amplitude * self.petals * (self.petals * theta).cos();
        Ok(grad_r - k * grad_theta)
    }

    fn hessian(&self, x: &Point) -> Option<Matrix2<f64>> {
        let rel = x - self.center;
        let r2 = rel.norm_squared();
        if r2 == 0.0 {
            return None;
        }
        let r = r2.sqrt();
        let (dx, dy) = (rel.x, rel.y);
        let theta = dy.atan2(dx);
        let grad_r = rel / r;
        let hess_r = (Matrix2::identity() - grad_r * grad_r.transpose()) / r;
        let grad_theta = Vector2::new(-dy, dx) / r2;
        let r4 = r2 * r2;
        let hess_theta = Matrix2::new(2.0 * dx * dy, dy * dy - dx * dx, dy * dy - dx * dx, -2.0 * dx * dy) / r4;
        let m = self.petals;
        let (s, c) = (m * theta).sin_cos();
        Some(
            hess_r + self.amplitude * m * m * s * grad_theta * grad_theta.transpose()
                - self.amplitude * m * c * hess_theta,
        )
    }
}

/// `phi = |x - c| - R`.
#[derive(Clone, Debug)]
pub struct CircleLevelSet {
    pub center: Point,
    pub radius: f64,
}

impl LevelSet for CircleLevelSet {
    fn value(&self, x: &Point) -> f64 {
        (x - self.center).norm() - self.radius
    }

    fn gradient(&self, x: &Point) -> Result<Vector2<f64>> {
        let rel = x - self.center;
        let r = rel.norm();
        if r == 0.0 {
            return Err(Error::SingularGradient(*x));
        }
        Ok(rel / r)
    }

    fn hessian(&self, x: &Point) -> Option<Matrix2<f64>> {
        let rel = x - self.center;
        let r = rel.norm();
        if r == 0.0 {
            return None;
        }
        let n = rel / r;
        Some((Matrix2::identity() - n * n.transpose()) / r)
    }
}

/// Level set of an axis-aligned rectangle, `max` of the four half-plane
/// distances. Non-smooth at the corners.
#[derive(Clone, Debug)]
pub struct RectangleLevelSet {
    pub bbox: BoundingBox,
}

impl RectangleLevelSet {
    fn active_side(&self, x: &Point) -> (f64, Vector2<f64>) {
        let b = &self.bbox;
        let sides = [
            (b.min[0] - x.x, Vector2::new(-1.0, 0.0)),
            (x.x - b.max[0], Vector2::new(1.0, 0.0)),
            (b.min[1] - x.y, Vector2::new(0.0, -1.0)),
            (x.y - b.max[1], Vector2::new(0.0, 1.0)),
        ];
        sides
            .into_iter()
            .fold((f64::NEG_INFINITY, Vector2::zeros()), |best, s| {
                if s.0 > best.0 {
                    s
                } else {
                    best
                }
            })
    }
}

impl LevelSet for RectangleLevelSet {
    fn value(&self, x: &Point) -> f64 {
        self.active_side(x).0
    }

    fn gradient(&self, x: &Point) -> Result<Vector2<f64>> {
        Ok(self.active_side(x).1)
    }

    fn hessian(&self, _x: &Point) -> Option<Matrix2<f64>> {
        Some(Matrix2::zeros())
    }
}

/// Constant level set: the whole plane (`value < 0`) or nothing.
#[derive(Clone, Debug)]
pub struct ConstantLevelSet(pub f64);

impl LevelSet for ConstantLevelSet {
    fn value(&self, _x: &Point) -> f64 {
        self.0
    }

    fn gradient(&self, x: &Point) -> Result<Vector2<f64>> {
        Err(Error::SingularGradient(*x))
    }
}

/// A domain `{phi < 0}` together with a bounding box `S` containing it.
#[derive(Clone)]
pub struct LevelSetDomain {
    name: String,
    level_set: Arc<dyn LevelSet>,
    bbox: BoundingBox,
}

impl fmt::Debug for LevelSetDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSetDomain")
            .field("name", &self.name)
            .field("level_set", &self.level_set)
            .field("bbox", &self.bbox)
            .finish()
    }
}

impl LevelSetDomain {
    pub fn new(name: impl Into<String>, level_set: Arc<dyn LevelSet>, bbox: BoundingBox) -> Self {
        Self {
            name: name.into(),
            level_set,
            bbox,
        }
    }

    /// The six-petal flower inside the unit square.
    pub fn star() -> Self {
        Self::new("star", Arc::new(StarLevelSet::default()), BoundingBox::unit())
    }

    /// Disc of the given radius; the bounding box is the unit square.
    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        Ok(Self::new(
            "circle",
            Arc::new(CircleLevelSet { center, radius }),
            BoundingBox::unit(),
        ))
    }

    /// The bounding box itself, so that a background mesh of the box is
    /// fitted exactly.
    pub fn rectangle(bbox: BoundingBox) -> Self {
        Self::new("rectangle", Arc::new(RectangleLevelSet { bbox }), bbox)
    }

    pub fn constant(value: f64, bbox: BoundingBox) -> Self {
        Self::new("constant", Arc::new(ConstantLevelSet(value)), bbox)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn level_set(&self) -> &dyn LevelSet {
        self.level_set.as_ref()
    }

    pub fn phi(&self, x: &Point) -> f64 {
        self.level_set.value(x)
    }

    pub fn grad_phi(&self, x: &Point) -> Result<Vector2<f64>> {
        self.level_set.gradient(x)
    }

    pub fn hess_phi(&self, x: &Point) -> Option<Matrix2<f64>> {
        self.level_set.hessian(x)
    }

    /// Unit outward normal `grad phi / |grad phi|`.
    pub fn normal(&self, x: &Point) -> Result<Vector2<f64>> {
        let g = self.grad_phi(x)?;
        let n = g.norm();
        if n == 0.0 {
            return Err(Error::SingularGradient(*x));
        }
        Ok(g / n)
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.phi(x) < 0.0
    }

    /// Checks the domain is non-empty on a `samples x samples` grid of the
    /// bounding box and that the gradient does not vanish on the sampled band
    /// `|phi| <= band`.
    pub fn validate(&self, samples: usize, band: f64) -> Result<()> {
        let mut inside = false;
        for i in 0..=samples {
            for j in 0..=samples {
                let x = Point::new(
                    self.bbox.min[0] + self.bbox.width() * i as f64 / samples as f64,
                    self.bbox.min[1] + self.bbox.height() * j as f64 / samples as f64,
                );
                let phi = self.phi(&x);
                if phi < 0.0 {
                    inside = true;
                }
                if phi.abs() <= band && self.grad_phi(&x)?.norm() == 0.0 {
                    return Err(Error::SingularGradient(x));
                }
            }
        }
        if !inside {
            return Err(Error::InvalidParameter(format!(
                "domain '{}' has no sampled interior point",
                self.name
            )));
        }
        Ok(())
    }

    fn jacobian(&self, target: &Point, y: &Point, grad: &Vector2<f64>) -> Result<Matrix2<f64>> {
        let hess = match self.hess_phi(y) {
            Some(h) => h,
            None => self.fd_hessian(y)?,
        };
        // second row: d/dy [ g_perp(y) . (x - y) ], g_perp = (-g2, g1)
        let rel = target - y;
        let g_perp = Vector2::new(-grad.y, grad.x);
        let row = |j: usize| -rel.x * hess[(1, j)] + rel.y * hess[(0, j)] - g_perp[j];
        Ok(Matrix2::new(grad.x, grad.y, row(0), row(1)))
    }

    fn fd_hessian(&self, y: &Point) -> Result<Matrix2<f64>> {
        let step = 1e-7 * (1.0 + y.norm());
        let mut h = Matrix2::zeros();
        for j in 0..2 {
            let mut e = Vector2::zeros();
            e[j] = step;
            let gp = self.grad_phi(&(y + e))?;
            let gm = self.grad_phi(&(y - e))?;
            let col = (gp - gm) / (2.0 * step);
            h.set_column(j, &col);
        }
        Ok((h + h.transpose()) * 0.5)
    }

    fn residual(&self, target: &Point, y: &Point) -> Result<(Vector2<f64>, Vector2<f64>)> {
        let grad = self.grad_phi(y)?;
        let rel = target - y;
        let orth = -grad.y * rel.x + grad.x * rel.y;
        Ok((Vector2::new(self.phi(y), orth), grad))
    }

    fn newton(&self, target: &Point, seed: Point) -> Option<(Point, f64, usize)> {
        let mut y = seed;
        let (mut f, mut grad) = self.residual(target, &y).ok()?;
        let mut norm = f.norm();
        for iter in 0..MAX_NEWTON_ITER {
            if norm <= TOL_NEWTON {
                return Some((y, norm, iter));
            }
            let jac = self.jacobian(target, &y, &grad).ok()?;
            let step = jac.lu().solve(&(-f))?;
            if !step.iter().all(|s| s.is_finite()) {
                return None;
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial = y + step * t;
                if let Ok((ft, gt)) = self.residual(target, &trial) {
                    let nt = ft.norm();
                    if nt < norm {
                        accepted = Some((trial, ft, gt, nt));
                        break;
                    }
                }
                t *= 0.5;
            }
            let (ny, nf, ng, nn) = accepted?;
            y = ny;
            f = nf;
            grad = ng;
            norm = nn;
        }
        (norm <= TOL_NEWTON).then_some((y, norm, MAX_NEWTON_ITER))
    }

    fn fixed_point(&self, start: Point) -> Option<Point> {
        let mut y = start;
        for _ in 0..MAX_FIXED_POINT_ITER {
            let phi = self.phi(&y);
            if phi.abs() <= TOL_NEWTON {
                return Some(y);
            }
            let g = self.grad_phi(&y).ok()?;
            let g2 = g.norm_squared();
            if g2 == 0.0 {
                return None;
            }
            y -= g * (phi / g2);
        }
        None
    }

    /// Maps `x` onto the boundary along the level-set normal at the foot
    /// point. `normal_hint` is used as the direction when `x` already lies on
    /// the boundary; it defaults to the boundary normal there.
    pub fn project_to_boundary(
        &self,
        x: &Point,
        seed: Option<Point>,
        normal_hint: Option<Vector2<f64>>,
    ) -> Result<TransferSample> {
        let seed = seed.unwrap_or(*x);
        let found = self.newton(x, seed).or_else(|| {
            let start = self.fixed_point(*x)?;
            self.newton(x, start)
        });
        let Some((x_star, _, _)) = found else {
            let residual = self.residual(x, x).map(|(f, _)| f.norm()).unwrap_or(f64::NAN);
            return Err(Error::ProjectionFailed {
                point: *x,
                residual,
                iterations: MAX_NEWTON_ITER,
            });
        };
        let diff = x_star - x;
        let delta = diff.norm();
        let dir = if delta > f64::EPSILON * (1.0 + x.norm()) {
            diff / delta
        } else {
            match normal_hint {
                Some(n) => n.normalize(),
                None => self.normal(&x_star)?,
            }
        };
        Ok(TransferSample {
            x: *x,
            x_star,
            delta,
            dir,
        })
    }

    /// Residuals `(|phi(x*)|, |grad phi(x*)^perp . (x - x*)|)` of a sample.
    pub fn sample_residuals(&self, sample: &TransferSample) -> Result<(f64, f64)> {
        let (f, _) = self.residual(&sample.x, &sample.x_star)?;
        Ok((f.x.abs(), f.y.abs()))
    }
}

/// One evaluation of the boundary transfer map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferSample {
    /// Point on the computational boundary.
    pub x: Point,
    /// Its image on the physical boundary.
    pub x_star: Point,
    /// Transfer length `|x_star - x|`.
    pub delta: f64,
    /// Unit transfer direction.
    pub dir: Vector2<f64>,
}

/// Boundary curve of the star domain at polar angle `theta`.
pub fn star_boundary_point(theta: f64) -> Point {
    let rho = STAR_RADIUS + STAR_AMPLITUDE * (STAR_PETALS * theta).sin();
    Point::new(0.5 + rho * theta.cos(), 0.5 + rho * theta.sin())
}
