//! Gram matrices of the mesh-dependent norms
//!
//! * `|v|_h^2 = |grad v|^2 + sum_e h_e^-1 |S_h v|_e^2`
//! * `|v|_{1,h}^2 = |grad v|^2 + sum_e h_e^-1 |v|_e^2`
//! * `|||v|||_h^2 = |v|_h^2 + sum_e h_e |grad v|_e^2`
//! * `|mu|_{-1/2,h}^2 = sum_e h_e |mu|_e^2`
//!
//! Velocity matrices use velocity dof numbering, the pressure and multiplier
//! matrices are indexed from zero within their blocks.

use super::Discretization;
use crate::error::{Error, Result};
use crate::fem::{eval_p1, eval_p2, AffineMap, DofLayout};
use crate::solver::{CsrMatrix, TripletList};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VelocityNorm {
    /// `|.|_h`
    H,
    /// `|.|_{1,h}`
    OneH,
    /// `|||.|||_h`
    Triple,
}

#[derive(Clone, Debug)]
pub struct NormMatrices {
    gradient: TripletList,
    trace: TripletList,
    sh_trace: TripletList,
    edge_gradient: TripletList,
    pub pressure_mass: CsrMatrix,
    pub multiplier_mass: CsrMatrix,
}

fn push_velocity(list: &mut TripletList, nodes: &[usize; 6], local: &[[f64; 6]; 6]) {
    for i in 0..6 {
        for j in 0..6 {
            for c in 0..2 {
                list.push(
                    DofLayout::velocity_dof(nodes[i], c),
                    DofLayout::velocity_dof(nodes[j], c),
                    local[i][j],
                );
            }
        }
    }
}

impl NormMatrices {
    pub fn new(disc: &Discretization) -> Result<Self> {
        let layout = disc.layout();
        let mesh = disc.mesh();
        let nv = layout.velocity_len();
        let np = layout.pressure_len();
        let nm = layout.multiplier_len();
        let mut gradient = TripletList::new(nv, nv);
        let mut pressure = TripletList::new(np, np);
        for k in 0..layout.n_triangles() {
            let map = AffineMap::new(&mesh.triangle_points(k)).ok_or(Error::DegenerateTriangle(k))?;
            let jac = map.det.abs();
            let mut stiff = [[0.0; 6]; 6];
            let mut mass = [[0.0; 3]; 3];
            for (xi, w) in disc.volume_rule().iter() {
                let e = map.push(&eval_p2(xi));
                let psi = eval_p1(xi).values;
                for i in 0..6 {
                    for j in 0..6 {
                        stiff[i][j] += w * jac * e.grads[i].dot(&e.grads[j]);
                    }
                }
                for i in 0..3 {
                    for j in 0..3 {
                        mass[i][j] += w * jac * psi[i] * psi[j];
                    }
                }
            }
            push_velocity(&mut gradient, layout.nodes(k), &stiff);
            for i in 0..3 {
                for j in 0..3 {
                    pressure.push(3 * k + i, 3 * k + j, mass[i][j]);
                }
            }
        }

        let mut trace = TripletList::new(nv, nv);
        let mut sh_trace = TripletList::new(nv, nv);
        let mut edge_gradient = TripletList::new(nv, nv);
        let mut multiplier = TripletList::new(nm, nm);
        let offset = layout.multiplier_offset();
        for (b, edge) in mesh.boundary_edges().iter().enumerate() {
            let h = edge.length;
            let (mut t, mut s, mut g) = ([[0.0; 6]; 6], [[0.0; 6]; 6], [[0.0; 6]; 6]);
            let mut m = [[0.0; 3]; 3];
            for p in disc.boundary().edge(b) {
                let tr = &p.trace;
                for i in 0..6 {
                    for j in 0..6 {
                        t[i][j] += p.weight / h * tr.values[i] * tr.values[j];
                        s[i][j] += p.weight / h * tr.sh[i] * tr.sh[j];
                        g[i][j] += p.weight * h * tr.grads[i].dot(&tr.grads[j]);
                    }
                }
                let ell = p.multiplier_basis();
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += p.weight * h * ell[i] * ell[j];
                    }
                }
            }
            let nodes = layout.nodes(edge.triangle);
            push_velocity(&mut trace, nodes, &t);
            push_velocity(&mut sh_trace, nodes, &s);
            push_velocity(&mut edge_gradient, nodes, &g);
            let md = layout.multiplier_dofs(b).map(|d| d - offset);
            for i in 0..3 {
                for j in 0..3 {
                    multiplier.push(md[i], md[j], m[i][j]);
                }
            }
        }
        Ok(Self {
            gradient,
            trace,
            sh_trace,
            edge_gradient,
            pressure_mass: pressure.to_csr(),
            multiplier_mass: multiplier.to_csr(),
        })
    }

    pub fn velocity_gram(&self, kind: VelocityNorm) -> CsrMatrix {
        let mut all = self.gradient.clone();
        match kind {
            VelocityNorm::H => all.extend(self.sh_trace.clone()),
            VelocityNorm::OneH => all.extend(self.trace.clone()),
            VelocityNorm::Triple => {
                all.extend(self.sh_trace.clone());
                all.extend(self.edge_gradient.clone());
            }
        }
        all.to_csr()
    }

    pub fn velocity_norm(&self, kind: VelocityNorm, v: &[f64]) -> f64 {
        self.velocity_gram(kind).bilinear(v, v).max(0.0).sqrt()
    }

    pub fn pressure_l2(&self, q: &[f64]) -> f64 {
        self.pressure_mass.bilinear(q, q).max(0.0).sqrt()
    }

    pub fn multiplier_norm(&self, mu: &[f64]) -> f64 {
        self.multiplier_mass.bilinear(mu, mu).max(0.0).sqrt()
    }
}
