use crate::geometry::Point;
use crate::mesh::CtMesh;

/// Global numbering of the unknowns
/// `(u, p, lambda, alpha, beta, gamma)`.
///
/// * velocity: continuous P2 on the micro mesh, nodes are the micro vertices
///   followed by the micro edge midpoints, dof `2 * node + component`;
/// * pressure: discontinuous P1, three dofs per micro triangle;
/// * multiplier: continuous P2 on the boundary polyline, boundary vertices
///   (ascending vertex index) then boundary edge midpoints (boundary edge
///   order);
/// * three scalars: pressure mean, multiplier mean and velocity flux.
#[derive(Clone, Debug)]
pub struct DofLayout {
    n_vertices: usize,
    n_edges: usize,
    n_triangles: usize,
    n_boundary_edges: usize,
    /// Multiplier number of each micro vertex on the boundary.
    boundary_vertex: Vec<Option<usize>>,
    n_boundary_vertices: usize,
    triangle_nodes: Vec<[usize; 6]>,
    node_coords: Vec<Point>,
    multiplier_coords: Vec<Point>,
    edge_multipliers: Vec<[usize; 3]>,
}

impl DofLayout {
    pub fn new(mesh: &CtMesh) -> Self {
        let n_vertices = mesh.vertices().len();
        let n_edges = mesh.edges().len();
        let n_triangles = mesh.triangles().len();
        let triangle_nodes = mesh
            .triangles()
            .iter()
            .zip(mesh.triangle_edges())
            .map(|(t, e)| {
                [
                    t[0],
                    t[1],
                    t[2],
                    n_vertices + e[0],
                    n_vertices + e[1],
                    n_vertices + e[2],
                ]
            })
            .collect();
        let mut node_coords = mesh.vertices().to_vec();
        node_coords.extend((0..n_edges).map(|e| mesh.edge_midpoint(e)));

        let mut on_boundary = vec![false; n_vertices];
        for e in mesh.boundary_edges() {
            on_boundary[e.vertices[0]] = true;
            on_boundary[e.vertices[1]] = true;
        }
        let mut boundary_vertex = vec![None; n_vertices];
        let mut multiplier_coords = Vec::new();
        for (v, &b) in on_boundary.iter().enumerate() {
            if b {
                boundary_vertex[v] = Some(multiplier_coords.len());
                multiplier_coords.push(mesh.vertices()[v]);
            }
        }
        let n_boundary_vertices = multiplier_coords.len();
        let n_boundary_edges = mesh.boundary_edges().len();
        let mut edge_multipliers = Vec::with_capacity(n_boundary_edges);
        for (i, e) in mesh.boundary_edges().iter().enumerate() {
            multiplier_coords.push(mesh.edge_midpoint(e.edge));
            edge_multipliers.push([
                boundary_vertex[e.vertices[0]].expect("boundary vertex"),
                boundary_vertex[e.vertices[1]].expect("boundary vertex"),
                n_boundary_vertices + i,
            ]);
        }
        Self {
            n_vertices,
            n_edges,
            n_triangles,
            n_boundary_edges,
            boundary_vertex,
            n_boundary_vertices,
            triangle_nodes,
            node_coords,
            multiplier_coords,
            edge_multipliers,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_vertices + self.n_edges
    }

    pub fn n_triangles(&self) -> usize {
        self.n_triangles
    }

    pub fn velocity_len(&self) -> usize {
        2 * self.n_nodes()
    }

    pub fn pressure_offset(&self) -> usize {
        self.velocity_len()
    }

    pub fn pressure_len(&self) -> usize {
        3 * self.n_triangles
    }

    pub fn multiplier_offset(&self) -> usize {
        self.pressure_offset() + self.pressure_len()
    }

    pub fn multiplier_len(&self) -> usize {
        self.n_boundary_vertices + self.n_boundary_edges
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.n_boundary_vertices
    }

    pub fn alpha(&self) -> usize {
        self.multiplier_offset() + self.multiplier_len()
    }

    pub fn beta(&self) -> usize {
        self.alpha() + 1
    }

    pub fn gamma(&self) -> usize {
        self.alpha() + 2
    }

    pub fn total(&self) -> usize {
        self.alpha() + 3
    }

    /// Velocity nodes of a micro triangle in local P2 order.
    pub fn nodes(&self, triangle: usize) -> &[usize; 6] {
        &self.triangle_nodes[triangle]
    }

    pub fn velocity_dof(node: usize, component: usize) -> usize {
        2 * node + component
    }

    pub fn pressure_dof(&self, triangle: usize, local: usize) -> usize {
        self.pressure_offset() + 3 * triangle + local
    }

    /// Global multiplier dofs `(a_j, a_{j+1}, midpoint)` of a boundary edge.
    pub fn multiplier_dofs(&self, boundary_edge: usize) -> [usize; 3] {
        self.edge_multipliers[boundary_edge].map(|m| self.multiplier_offset() + m)
    }

    /// Multiplier number (0-based within the block) of a micro vertex.
    pub fn boundary_vertex_multiplier(&self, vertex: usize) -> Option<usize> {
        self.boundary_vertex[vertex]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn multiplier_coords(&self) -> &[Point] {
        &self.multiplier_coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundingBox, Point};
    use crate::mesh::{build_type1_mesh, CtMesh, MacroMesh};

    #[test]
    fn single_macro_triangle_counts() {
        let m = MacroMesh::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let ct = CtMesh::new(m).unwrap();
        let d = DofLayout::new(&ct);
        // 4 micro vertices, 6 micro edges, 3 micro triangles
        assert_eq!(d.velocity_len(), 2 * (4 + 6));
        assert_eq!(d.pressure_len(), 9);
        assert_eq!(d.multiplier_len(), 6);
        assert_eq!(d.total(), 20 + 9 + 6 + 3);
    }

    #[test]
    fn unit_box_n1_counts() {
        let ct = CtMesh::new(build_type1_mesh(1, &BoundingBox::unit()).unwrap()).unwrap();
        let d = DofLayout::new(&ct);
        // 6 micro vertices, 5 + 6 micro edges, 6 micro triangles, 4 + 4 on the boundary
        assert_eq!(d.n_nodes(), 17);
        assert_eq!(d.pressure_len(), 18);
        assert_eq!(d.multiplier_len(), 8);
        assert_eq!(d.total(), 34 + 18 + 8 + 3);
        assert_eq!(d.gamma(), d.total() - 1);
    }

    #[test]
    fn multiplier_nodes_are_velocity_nodes() {
        let ct = CtMesh::new(build_type1_mesh(3, &BoundingBox::unit()).unwrap()).unwrap();
        let d = DofLayout::new(&ct);
        for m in d.multiplier_coords() {
            assert!(d.node_coords().iter().any(|n| (n - m).norm() < 1e-15));
        }
        for (i, e) in ct.boundary_edges().iter().enumerate() {
            let dofs = d.multiplier_dofs(i);
            let off = d.multiplier_offset();
            assert_eq!(d.multiplier_coords()[dofs[0] - off], ct.vertices()[e.vertices[0]]);
            assert_eq!(d.multiplier_coords()[dofs[2] - off], ct.edge_midpoint(e.edge));
        }
    }

    #[test]
    fn local_nodes_follow_p2_ordering() {
        let ct = CtMesh::new(build_type1_mesh(2, &BoundingBox::unit()).unwrap()).unwrap();
        let d = DofLayout::new(&ct);
        for k in 0..ct.triangles().len() {
            let p = ct.triangle_points(k);
            let nodes = d.nodes(k);
            for i in 0..3 {
                assert_eq!(d.node_coords()[nodes[i]], p[i]);
                let mid = (p[(i + 1) % 3] + p[(i + 2) % 3]) * 0.5;
                assert!((d.node_coords()[nodes[3 + i]] - mid).norm() < 1e-15);
            }
        }
    }
}
