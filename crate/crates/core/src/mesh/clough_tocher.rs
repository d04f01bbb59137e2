use std::collections::HashMap;

use nalgebra::Vector2;
use serde::Serialize;

use super::{signed_area, MacroMesh};
use crate::error::{Error, Result};
use crate::fem::quadrature::EdgeRule;
use crate::geometry::{LevelSetDomain, Point, TransferSample};

pub const DEFAULT_ASSUMPTION_THRESHOLD: f64 = 1.0;

/// Oriented edge of the computational boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEdge {
    /// `(a_j, a_{j+1})`, counterclockwise around the interior.
    pub vertices: [usize; 2],
    /// Index into [`CtMesh::edges`].
    pub edge: usize,
    /// Owning micro triangle; the edge is its local edge 2 (from local
    /// vertex 0 to 1).
    pub triangle: usize,
    pub normal: Vector2<f64>,
    pub tangent: Vector2<f64>,
    pub length: f64,
}

/// Clough-Tocher refinement of a macro mesh.
///
/// Micro vertices are the macro vertices followed by one barycenter per
/// macro triangle. Macro triangle `t = (a, b, c)` with barycenter `z` is
/// split into micro triangles `3t + k`, `k = 0, 1, 2`, with vertices
/// `(v_k, v_{k+1}, z)`. Micro edges are the macro edges (same indices)
/// followed by the spokes `(v_j, z)` numbered `E + 3t + j`.
#[derive(Clone, Debug)]
pub struct CtMesh {
    macro_mesh: MacroMesh,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    parents: Vec<usize>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    loops: Vec<Vec<usize>>,
}

impl CtMesh {
    pub fn new(macro_mesh: MacroMesh) -> Result<Self> {
        let nv = macro_mesh.vertices().len();
        let ne = macro_mesh.edges().len();
        let nt = macro_mesh.triangles().len();
        let mut vertices = macro_mesh.vertices().to_vec();
        vertices.reserve(nt);
        for t in 0..nt {
            let [a, b, c] = macro_mesh.triangle_points(t);
            vertices.push((a + b + c) / 3.0);
        }
        let mut edges: Vec<[usize; 2]> = macro_mesh.edges().iter().map(|e| e.vertices).collect();
        edges.reserve(3 * nt);
        let mut triangles = Vec::with_capacity(3 * nt);
        let mut parents = Vec::with_capacity(3 * nt);
        let mut triangle_edges = Vec::with_capacity(3 * nt);
        for (t, tri) in macro_mesh.triangles().iter().enumerate() {
            let z = nv + t;
            for &v in tri {
                edges.push([v, z]);
            }
            let spoke = |j: usize| ne + 3 * t + j % 3;
            for k in 0..3 {
                triangles.push([tri[k], tri[(k + 1) % 3], z]);
                parents.push(t);
                triangle_edges.push([spoke(k + 1), spoke(k), macro_mesh.triangle_edges()[t][(k + 2) % 3]]);
            }
        }

        let mut boundary_edges = Vec::new();
        for (e, edge) in macro_mesh.edges().iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let t = edge.triangles[0];
            let m = macro_mesh.triangle_edges()[t]
                .iter()
                .position(|&x| x == e)
                .expect("edge belongs to its triangle");
            let k = (m + 1) % 3;
            let micro = 3 * t + k;
            let [a, b, _] = triangles[micro];
            let d = vertices[b] - vertices[a];
            let length = d.norm();
            let tangent = d / length;
            boundary_edges.push(BoundaryEdge {
                vertices: [a, b],
                edge: e,
                triangle: micro,
                normal: Vector2::new(tangent.y, -tangent.x),
                tangent,
                length,
            });
        }
        let loops = boundary_loops(&boundary_edges)?;
        Ok(Self {
            macro_mesh,
            vertices,
            triangles,
            parents,
            edges,
            triangle_edges,
            boundary_edges,
            loops,
        })
    }

    pub fn macro_mesh(&self) -> &MacroMesh {
        &self.macro_mesh
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// `triangle_edges()[k][i]` is the micro edge opposite local vertex `i`.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Closed boundary loops as indices into [`Self::boundary_edges`].
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.loops
    }

    pub fn triangle_points(&self, k: usize) -> [Point; 3] {
        self.triangles[k].map(|v| self.vertices[v])
    }

    pub fn area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        signed_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|k| self.area(k)).sum()
    }

    /// `h = max_K diam(K)` over the micro triangles.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| (self.vertices[e[1]] - self.vertices[e[0]]).norm())
            .fold(0.0, f64::max)
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        (self.vertices[a] + self.vertices[b]) * 0.5
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    /// Point at parameter `s in [0, 1]` along a boundary edge.
    pub fn boundary_point(&self, edge: &BoundaryEdge, s: f64) -> Point {
        self.vertices[edge.vertices[0]] * (1.0 - s) + self.vertices[edge.vertices[1]] * s
    }

    /// Signed area enclosed by a boundary loop.
    pub fn loop_area(&self, lp: &[usize]) -> f64 {
        lp.iter()
            .map(|&i| {
                let [a, b] = self.boundary_edges[i].vertices;
                0.5 * self.vertices[a].perp(&self.vertices[b])
            })
            .sum()
    }

    /// Sum of exterior turning angles along a loop.
    pub fn loop_turning(&self, lp: &[usize]) -> f64 {
        let n = lp.len();
        (0..n)
            .map(|i| turn_angle(&self.boundary_edges[lp[i]], &self.boundary_edges[lp[(i + 1) % n]]))
            .sum()
    }

    /// Checks every outward normal against the growth of `phi`:
    /// `phi(m + eps n) > phi(m)` at the edge midpoint with `eps = h_e / 10`.
    /// Returns the indices of offending edges.
    pub fn normals_against_level_set(&self, dom: &LevelSetDomain) -> Vec<usize> {
        self.boundary_edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let m = self.boundary_point(e, 0.5);
                let eps = e.length / 10.0;
                !(dom.phi(&(m + e.normal * eps)) > dom.phi(&m))
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Chains boundary edges into closed loops. At pinch vertices with several
/// outgoing edges the one turning most to the right is taken, which keeps
/// each loop simple.
fn boundary_loops(edges: &[BoundaryEdge]) -> Result<Vec<Vec<usize>>> {
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        outgoing.entry(e.vertices[0]).or_default().push(i);
    }
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let origin = edges[start].vertices[0];
        let mut lp = vec![start];
        used[start] = true;
        let mut current = start;
        loop {
            let head = edges[current].vertices[1];
            let mut candidates: Vec<usize> = outgoing
                .get(&head)
                .map(|c| c.iter().copied().filter(|&i| !used[i]).collect())
                .unwrap_or_default();
            if head == origin {
                candidates.push(start);
            }
            let next = candidates
                .into_iter()
                .min_by(|&a, &b| {
                    turn_angle(&edges[current], &edges[a]).total_cmp(&turn_angle(&edges[current], &edges[b]))
                })
                .ok_or(Error::OpenBoundary(head))?;
            if next == start {
                break;
            }
            used[next] = true;
            lp.push(next);
            current = next;
        }
        loops.push(lp);
    }
    Ok(loops)
}

fn turn_angle(from: &BoundaryEdge, to: &BoundaryEdge) -> f64 {
    from.tangent.perp(&to.tangent).atan2(from.tangent.dot(&to.tangent))
}

/// Transfer-length diagnostic `max_e delta_e / h_e`.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub max_ratio: f64,
    /// Per boundary edge, `delta_e / h_e`.
    pub ratios: Vec<f64>,
    /// Per boundary edge, the largest sampled transfer length.
    pub deltas: Vec<f64>,
    pub threshold: f64,
    /// Edges whose ratio exceeds the threshold.
    pub flagged: Vec<usize>,
}

/// Computes `delta_e` from the quadrature points and both endpoints of each
/// boundary edge and reports `delta_e / h_e`.
pub fn check_assumption_a(
    mesh: &CtMesh,
    dom: &LevelSetDomain,
    rule: &EdgeRule,
    threshold: f64,
) -> Result<AssumptionReport> {
    let mut deltas = Vec::with_capacity(mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let params = rule.points.iter().copied().chain([0.0, 1.0]);
        let mut delta_e: f64 = 0.0;
        for s in params {
            let x = mesh.boundary_point(e, s);
            let sample: TransferSample = dom.project_to_boundary(&x, None, Some(e.normal))?;
            delta_e = delta_e.max(sample.delta);
        }
        deltas.push(delta_e);
    }
    Ok(assumption_from_deltas(mesh, deltas, threshold))
}

pub(crate) fn assumption_from_deltas(mesh: &CtMesh, deltas: Vec<f64>, threshold: f64) -> AssumptionReport {
    let ratios: Vec<f64> = deltas
        .iter()
        .zip(mesh.boundary_edges())
        .map(|(d, e)| d / e.length)
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let flagged = ratios
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > threshold)
        .map(|(i, _)| i)
        .collect();
    AssumptionReport {
        max_ratio,
        ratios,
        deltas,
        threshold,
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::fem::edge_rule;
    use crate::geometry::BoundingBox;
    use crate::mesh::build_type1_mesh;

    fn clipped(dom: &LevelSetDomain, n: usize) -> CtMesh {
        let bg = build_type1_mesh(n, dom.bbox()).unwrap();
        CtMesh::new(bg.clip_to_interior(dom).unwrap()).unwrap()
    }

    #[test]
    fn single_split_structure() {
        let m = MacroMesh::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let ct = CtMesh::new(m).unwrap();
        assert_eq!(ct.vertices().len(), 4);
        assert_eq!(ct.triangles().len(), 3);
        assert_eq!(ct.edges().len(), 6);
        assert_eq!(ct.boundary_edges().len(), 3);
        assert_eq!(ct.boundary_loops().len(), 1);
        for k in 0..3 {
            assert!((ct.area(k) - 1.0 / 6.0).abs() < 1e-15);
            // local edge j is opposite local vertex j
            for j in 0..3 {
                let [a, b] = ct.edges()[ct.triangle_edges()[k][j]];
                assert!(!ct.triangles()[k][j..=j].contains(&a) && !ct.triangles()[k][j..=j].contains(&b));
            }
        }
    }

    #[test]
    fn full_box_has_one_loop_of_eight_edges() {
        let dom = LevelSetDomain::rectangle(BoundingBox::unit());
        let ct = clipped(&dom, 2);
        assert_eq!(ct.macro_mesh().triangles().len(), 8);
        assert_eq!(ct.boundary_loops().len(), 1);
        let lp = &ct.boundary_loops()[0];
        assert_eq!(lp.len(), 8);
        assert!((ct.loop_area(lp) - 1.0).abs() < 1e-14);
        assert!((ct.loop_turning(lp) - 2.0 * PI).abs() < 1e-12);
        assert!((ct.boundary_length() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn star_mesh_topology() {
        let dom = LevelSetDomain::star();
        for n in [8, 16, 24, 32] {
            let ct = clipped(&dom, n);
            let mm = ct.macro_mesh();
            assert!((ct.total_area() - mm.total_area()).abs() < 1e-13);
            for t in 0..mm.triangles().len() {
                let sum: f64 = (0..3).map(|k| ct.area(3 * t + k)).sum();
                assert!((sum - mm.area(t)).abs() < 1e-15);
            }
            assert_eq!(ct.boundary_loops().len(), 1, "n = {n}");
            let lp = &ct.boundary_loops()[0];
            assert_eq!(lp.len(), ct.boundary_edges().len());
            assert!((ct.loop_area(lp) - ct.total_area()).abs() < 1e-12);
            assert!((ct.loop_turning(lp) - 2.0 * PI).abs() < 1e-9);
            let all: Vec<usize> = (0..mm.triangles().len()).collect();
            assert_eq!(mm.euler_characteristic(&all), 1);
            for e in ct.boundary_edges() {
                // staircase edges may run nearly along grad phi, never against it
                let m = ct.boundary_point(e, 0.5);
                assert!(e.normal.dot(&dom.normal(&m).unwrap()) > -0.1);
                assert!((e.normal.norm() - 1.0).abs() < 1e-14);
                assert!(e.normal.dot(&e.tangent).abs() < 1e-15);
                // outward: the owning triangle's third vertex lies behind the edge
                let z = ct.vertices()[ct.triangles()[e.triangle][2]];
                assert!((z - ct.vertices()[e.vertices[0]]).dot(&e.normal) < 0.0);
            }
        }
    }

    #[test]
    fn normal_check_flags_reversed_edges() {
        let dom = LevelSetDomain::star();
        let ct = clipped(&dom, 24);
        assert!(ct.normals_against_level_set(&dom).is_empty());
        let mut flipped = ct.clone();
        let e = &mut flipped.boundary_edges[3];
        e.normal = -e.normal;
        assert_eq!(flipped.normals_against_level_set(&dom), vec![3]);
    }

    #[test]
    fn clipped_triangles_lie_inside_by_dense_sampling() {
        let dom = LevelSetDomain::star();
        let bg = build_type1_mesh(16, dom.bbox()).unwrap();
        let kept = bg.clip_to_interior(&dom).unwrap();
        // independent oracle: a triangle is inside when phi <= 0 on a fine
        // barycentric lattice
        let m = 24;
        let inside = |p: [Point; 3]| {
            (0..=m).all(|i| {
                (0..=(m - i)).all(|j| {
                    let (a, b) = (i as f64 / m as f64, j as f64 / m as f64);
                    dom.phi(&(p[0] * (1.0 - a - b) + p[1] * a + p[2] * b)) <= 1e-12
                })
            })
        };
        let expected = (0..bg.triangles().len())
            .filter(|&t| inside(bg.triangle_points(t)))
            .count();
        assert_eq!(kept.triangles().len(), expected);
    }

    #[test]
    fn assumption_report_on_circle_and_star() {
        let rule = edge_rule(6).unwrap();
        let circle = LevelSetDomain::circle(Point::new(0.5, 0.5), 0.3).unwrap();
        let ct = clipped(&circle, 16);
        let r = check_assumption_a(&ct, &circle, &rule, DEFAULT_ASSUMPTION_THRESHOLD).unwrap();
        assert_eq!(r.ratios.len(), ct.boundary_edges().len());
        // a circle boundary point at distance rho from the center has delta = 0.3 - rho
        for (i, e) in ct.boundary_edges().iter().enumerate() {
            let far = [0.0, 0.5, 1.0]
                .iter()
                .map(|&s| 0.3 - (ct.boundary_point(e, s) - Point::new(0.5, 0.5)).norm())
                .fold(0.0, f64::max);
            assert!(r.deltas[i] >= far - 1e-12);
        }
        assert!(r.max_ratio > 0.0 && r.max_ratio.is_finite());
        assert_eq!(
            r.flagged,
            r.ratios
                .iter()
                .enumerate()
                .filter(|(_, &x)| x > 1.0)
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        );

        let star = LevelSetDomain::star();
        let ct = clipped(&star, 24);
        let r = check_assumption_a(&ct, &star, &rule, 0.5).unwrap();
        assert!(r.max_ratio > 0.0 && r.max_ratio < 2.0);
        assert!(r.flagged.iter().all(|&i| r.ratios[i] > 0.5));
    }

    #[test]
    fn open_chain_is_rejected() {
        let mk = |a: usize, b: usize| BoundaryEdge {
            vertices: [a, b],
            edge: 0,
            triangle: 0,
            normal: Vector2::new(0.0, -1.0),
            tangent: Vector2::new(1.0, 0.0),
            length: 1.0,
        };
        assert!(matches!(
            boundary_loops(&[mk(0, 1), mk(1, 2)]),
            Err(Error::OpenBoundary(2))
        ));
    }
}
