use nalgebra::Vector2;

use super::Parallelism;
use crate::error::{Error, Result};
use crate::fem::{eval_p2, AffineMap, EdgeRule};
use crate::geometry::{LevelSetDomain, Point, TransferSample};
use crate::mesh::{AssumptionReport, BoundaryEdge, CtMesh};

/// Traces of the six local P2 basis functions of a boundary micro triangle
/// at one boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShTrace {
    pub values: [f64; 6],
    pub grads: [Vector2<f64>; 6],
    /// `d . grad psi`
    pub d1: [f64; 6],
    /// `d^T H d`
    pub d2: [f64; 6],
    /// `psi + delta d1 + delta^2 d2 / 2`
    pub sh: [f64; 6],
}

/// Evaluates the Taylor transfer operator on the basis of the micro triangle
/// owning `edge`, at parameter `s` along the edge.
pub fn eval_sh_trace(mesh: &CtMesh, edge: &BoundaryEdge, s: f64, sample: &TransferSample) -> Result<ShTrace> {
    let map = AffineMap::new(&mesh.triangle_points(edge.triangle)).ok_or(Error::DegenerateTriangle(edge.triangle))?;
    let e = map.push(&eval_p2(&Vector2::new(s, 0.0)));
    let d = sample.dir;
    let delta = sample.delta;
    let mut d1 = [0.0; 6];
    let mut d2 = [0.0; 6];
    let mut sh = [0.0; 6];
    for i in 0..6 {
        d1[i] = d.dot(&e.grads[i]);
        d2[i] = d.dot(&(e.hessians[i] * d));
        sh[i] = e.values[i] + delta * d1[i] + 0.5 * delta * delta * d2[i];
    }
    Ok(ShTrace {
        values: e.values,
        grads: e.grads,
        d1,
        d2,
        sh,
    })
}

#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    /// Parameter along the edge, from `vertices[0]` to `vertices[1]`.
    pub s: f64,
    pub x: Point,
    /// Quadrature weight times the edge length.
    pub weight: f64,
    pub sample: TransferSample,
    pub trace: ShTrace,
}

impl BoundaryPoint {
    /// Quadratic Lagrange multiplier basis on the edge in the order
    /// `(a_j, a_{j+1}, midpoint)`.
    pub fn multiplier_basis(&self) -> [f64; 3] {
        let s = self.s;
        [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
    }
}

/// Boundary quadrature points with their transfer samples, grouped by
/// boundary edge.
#[derive(Clone, Debug)]
pub struct BoundaryQuadData {
    edges: Vec<Vec<BoundaryPoint>>,
}

impl BoundaryQuadData {
    pub fn new(mesh: &CtMesh, dom: &LevelSetDomain, rule: &EdgeRule, par: Parallelism) -> Result<Self> {
        let bedges = mesh.boundary_edges();
        let edges = par
            .map(bedges.len(), |i| {
                let e = &bedges[i];
                rule.iter()
                    .map(|(s, w)| {
                        let x = mesh.boundary_point(e, s);
                        let sample = dom.project_to_boundary(&x, None, Some(e.normal))?;
                        let trace = eval_sh_trace(mesh, e, s, &sample)?;
                        Ok(BoundaryPoint {
                            s,
                            x,
                            weight: w * e.length,
                            sample,
                            trace,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { edges })
    }

    pub fn edge(&self, i: usize) -> &[BoundaryPoint] {
        &self.edges[i]
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BoundaryPoint> {
        self.edges.iter().flatten()
    }

    pub fn max_delta(&self) -> f64 {
        self.iter().map(|p| p.sample.delta).fold(0.0, f64::max)
    }

    /// `delta_e / h_e` from the stored quadrature samples and the projected
    /// edge endpoints.
    pub fn assumption_report(&self, mesh: &CtMesh, dom: &LevelSetDomain, threshold: f64) -> Result<AssumptionReport> {
        let mut vertex_delta = std::collections::HashMap::new();
        for e in mesh.boundary_edges() {
            for &v in &e.vertices {
                if let std::collections::hash_map::Entry::Vacant(slot) = vertex_delta.entry(v) {
                    let sample = dom.project_to_boundary(&mesh.vertices()[v], None, Some(e.normal))?;
                    slot.insert(sample.delta);
                }
            }
        }
        let deltas = mesh
            .boundary_edges()
            .iter()
            .zip(&self.edges)
            .map(|(e, pts)| {
                let ends = e.vertices.iter().map(|v| vertex_delta[v]);
                pts.iter().map(|p| p.sample.delta).chain(ends).fold(0.0, f64::max)
            })
            .collect();
        Ok(crate::mesh::assumption_from_deltas(mesh, deltas, threshold))
    }
}
