//! Discretization setup and assembly of the boundary-corrected saddle-point
//! system.

mod boundary;
mod forms;
pub(crate) use forms::apply_gauge_rhs;
pub mod norms;

use std::sync::Arc;

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{edge_rule, triangle_rule, DofLayout, EdgeRule, TriangleRule};
use crate::geometry::{LevelSetDomain, Point};
use crate::mesh::{build_type1_mesh, AssumptionReport, CtMesh, DEFAULT_ASSUMPTION_THRESHOLD};
use crate::solver::CsrMatrix;

pub use boundary::{eval_sh_trace, BoundaryPoint, BoundaryQuadData, ShTrace};
pub use forms::{assemble_a, assemble_b, assemble_be, assemble_constraints, assemble_rhs, assemble_system};

pub type VectorField = Arc<dyn Fn(&Point) -> Vector2<f64> + Send + Sync>;

/// Element loops run on the rayon pool or on the calling thread. Both modes
/// produce identical triplet order and therefore identical matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    #[default]
    Sequential,
    Parallel,
}

impl Parallelism {
    pub(crate) fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Parallelism::Sequential => (0..n).map(f).collect(),
            Parallelism::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }
}

/// How the pressure mean is fixed in the assembled system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PressureGauge {
    /// Scalar unknown `alpha` with the row `int p = 0`; the row and column
    /// are dense over the pressure block.
    MeanMultiplier,
    /// One pressure dof pinned in place of its (redundant) divergence row;
    /// the mean is removed after the solve. Keeps the matrix sparse.
    #[default]
    Pinned,
}

#[derive(Clone, Debug)]
pub struct DiscretizationOptions {
    /// Nitsche penalty.
    pub sigma: f64,
    /// Polynomial degree integrated exactly by the volume rule.
    pub volume_degree: usize,
    /// Gauss points per boundary edge.
    pub edge_points: usize,
    pub assumption_threshold: f64,
    pub parallelism: Parallelism,
    pub gauge: PressureGauge,
}

impl Default for DiscretizationOptions {
    fn default() -> Self {
        Self {
            sigma: 40.0,
            volume_degree: 6,
            edge_points: 6,
            assumption_threshold: DEFAULT_ASSUMPTION_THRESHOLD,
            parallelism: Parallelism::Sequential,
            gauge: PressureGauge::Pinned,
        }
    }
}

/// Right-hand side data: body force `f` and boundary velocity `g`, the
/// latter evaluated on the physical boundary.
#[derive(Clone)]
pub struct StokesData {
    pub forcing: VectorField,
    pub boundary: VectorField,
}

impl StokesData {
    pub fn homogeneous() -> Self {
        let zero: VectorField = Arc::new(|_: &Point| Vector2::zeros());
        Self {
            forcing: zero.clone(),
            boundary: zero,
        }
    }
}

/// Mesh, dof layout, quadrature and boundary transfer data for one
/// resolution.
#[derive(Debug)]
pub struct Discretization {
    resolution: Option<usize>,
    domain: LevelSetDomain,
    mesh: CtMesh,
    layout: DofLayout,
    boundary: BoundaryQuadData,
    volume_rule: TriangleRule,
    edge_rule: EdgeRule,
    assumption: AssumptionReport,
    options: DiscretizationOptions,
}

impl Discretization {
    /// Builds the `n x n` background mesh of the domain's bounding box, clips
    /// it and applies the Clough-Tocher split.
    pub fn new(domain: LevelSetDomain, n: usize, options: DiscretizationOptions) -> Result<Self> {
        let background = build_type1_mesh(n, domain.bbox())?;
        let mesh = CtMesh::new(background.clip_to_interior(&domain)?)?;
        let mut disc = Self::from_mesh(domain, mesh, options)?;
        disc.resolution = Some(n);
        Ok(disc)
    }

    pub fn from_mesh(domain: LevelSetDomain, mesh: CtMesh, options: DiscretizationOptions) -> Result<Self> {
        if !(options.sigma > 0.0) || !options.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "penalty sigma must be positive, got {}",
                options.sigma
            )));
        }
        let volume_rule = triangle_rule(options.volume_degree)?;
        let edge_rule = edge_rule(options.edge_points)?;
        let layout = DofLayout::new(&mesh);
        let boundary = BoundaryQuadData::new(&mesh, &domain, &edge_rule, options.parallelism)?;
        let assumption = boundary.assumption_report(&mesh, &domain, options.assumption_threshold)?;
        Ok(Self {
            resolution: None,
            domain,
            mesh,
            layout,
            boundary,
            volume_rule,
            edge_rule,
            assumption,
            options,
        })
    }

    /// Background resolution `n`, when built from a Cartesian mesh.
    pub fn resolution(&self) -> Option<usize> {
        self.resolution
    }

    /// Background cell width `1/n` on the unit box, the mesh parameter used
    /// for plotting; falls back to the largest micro edge.
    pub fn h(&self) -> f64 {
        match self.resolution {
            Some(n) => self.domain.bbox().width() / n as f64,
            None => self.mesh.mesh_size(),
        }
    }

    pub fn domain(&self) -> &LevelSetDomain {
        &self.domain
    }

    pub fn mesh(&self) -> &CtMesh {
        &self.mesh
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    pub fn boundary(&self) -> &BoundaryQuadData {
        &self.boundary
    }

    pub fn volume_rule(&self) -> &TriangleRule {
        &self.volume_rule
    }

    pub fn edge_rule(&self) -> &EdgeRule {
        &self.edge_rule
    }

    pub fn assumption(&self) -> &AssumptionReport {
        &self.assumption
    }

    pub fn options(&self) -> &DiscretizationOptions {
        &self.options
    }

    pub fn sigma(&self) -> f64 {
        self.options.sigma
    }

    pub fn parallelism(&self) -> Parallelism {
        self.options.parallelism
    }
}

/// Assembled system of the augmented unknown vector `(u, p, lambda, alpha,
/// beta, gamma)`.
#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub layout: DofLayout,
    pub nu: f64,
    pub sigma: f64,
    pub gauge: PressureGauge,
    /// `int psi_k dx` per pressure dof.
    pub pressure_weights: Vec<f64>,
}
