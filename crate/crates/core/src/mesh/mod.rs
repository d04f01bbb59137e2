//! Background triangulation, clipping to the interior mesh and the
//! Clough-Tocher refinement.

mod clough_tocher;
pub mod vtk;

use std::collections::HashMap;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, LevelSetDomain, Point};

pub(crate) use clough_tocher::assumption_from_deltas;
pub use clough_tocher::{check_assumption_a, AssumptionReport, BoundaryEdge, CtMesh, DEFAULT_ASSUMPTION_THRESHOLD};

/// Tolerance of the interior safety pass of the triangle classification.
pub const TOL_GEO: f64 = 1e-12;

/// Unique edge of a triangulation. `vertices` is sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub triangles: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles.len() == 1
    }
}

/// Conforming triangulation with counterclockwise triangles.
#[derive(Clone, Debug)]
pub struct MacroMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// `triangle_edges[t][k]` is the edge opposite local vertex `k`.
    triangle_edges: Vec<[usize; 3]>,
}

pub(crate) fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b - a).perp(&(c - a)))
}

impl MacroMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidParameter(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if !(signed_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]) > 0.0) {
                return Err(Error::DegenerateTriangle(t));
            }
            let mut local = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = [a.min(b), a.max(b)];
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: key,
                        triangles: Vec::with_capacity(2),
                    });
                    edges.len() - 1
                });
                edges[e].triangles.push(t);
                if edges[e].triangles.len() > 2 {
                    return Err(Error::NonManifoldEdge(key[0], key[1]));
                }
                local[k] = e;
            }
            triangle_edges.push(local);
        }
        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Largest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| (self.vertices[e.vertices[1]] - self.vertices[e.vertices[0]]).norm())
            .fold(0.0, f64::max)
    }

    /// Triangles grouped by edge connectivity, each group sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.triangles.len();
        let mut label = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            label[start] = id;
            while let Some(t) = stack.pop() {
                members.push(t);
                for &e in &self.triangle_edges[t] {
                    for &nb in &self.edges[e].triangles {
                        if label[nb] == usize::MAX {
                            label[nb] = id;
                            stack.push(nb);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// `V - E + F` of the sub-mesh formed by the given triangles.
    pub fn euler_characteristic(&self, triangles: &[usize]) -> i64 {
        let mut verts: Vec<usize> = triangles.iter().flat_map(|&t| self.triangles[t]).collect();
        verts.sort_unstable();
        verts.dedup();
        let mut edges: Vec<usize> = triangles.iter().flat_map(|&t| self.triangle_edges[t]).collect();
        edges.sort_unstable();
        edges.dedup();
        verts.len() as i64 - edges.len() as i64 + triangles.len() as i64
    }

    /// Keeps the triangles `T` with closure inside the closed domain.
    ///
    /// A triangle is kept when `phi <= 0` at its vertices, edge midpoints and
    /// barycenter, and `phi <= TOL_GEO` on the 15-point degree-4 lattice.
    pub fn clip_to_interior(&self, dom: &LevelSetDomain) -> Result<MacroMesh> {
        let keep: Vec<usize> = (0..self.triangles.len())
            .filter(|&t| triangle_inside(&self.triangle_points(t), dom))
            .collect();
        if keep.is_empty() {
            return Err(Error::MeshTooCoarse);
        }
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let mut triangles = Vec::with_capacity(keep.len());
        for &t in &keep {
            let tri = self.triangles[t].map(|v| {
                if remap[v] == usize::MAX {
                    remap[v] = vertices.len();
                    vertices.push(self.vertices[v]);
                }
                remap[v]
            });
            triangles.push(tri);
        }
        MacroMesh::new(vertices, triangles)
    }
}

fn triangle_inside(p: &[Point; 3], dom: &LevelSetDomain) -> bool {
    let at = |l: [f64; 3]| p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
    let third = 1.0 / 3.0;
    let coarse = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
        [0.5, 0.5, 0.0],
        [third, third, third],
    ];
    if coarse.iter().any(|&l| dom.phi(&at(l)) > 0.0) {
        return false;
    }
    for i in 0..=4 {
        for j in 0..=(4 - i) {
            let k = 4 - i - j;
            let l = [i as f64 / 4.0, j as f64 / 4.0, k as f64 / 4.0];
            if dom.phi(&at(l)) > TOL_GEO {
                return false;
            }
        }
    }
    true
}

/// `n x n` Cartesian cells of `bbox`, each cut by its lower-left to
/// upper-right diagonal.
pub fn build_type1_mesh(n: usize, bbox: &BoundingBox) -> Result<MacroMesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("mesh resolution n must be >= 1".into()));
    }
    let (dx, dy) = (bbox.width() / n as f64, bbox.height() / n as f64);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // exact endpoints so that box-aligned level sets classify cleanly
            let x = if i == n {
                bbox.max[0]
            } else {
                bbox.min[0] + i as f64 * dx
            };
            let y = if j == n {
                bbox.max[1]
            } else {
                bbox.min[1] + j as f64 * dy
            };
            vertices.push(Vector2::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    MacroMesh::new(vertices, triangles)
}
