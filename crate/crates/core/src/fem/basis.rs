//! Lagrange P1/P2 bases on the reference triangle and the affine
//! push-forward to physical triangles.
//!
//! Local P2 ordering: vertices 0, 1, 2, then the midpoints of the edges
//! opposite vertex 0, 1, 2.

use nalgebra::{Matrix2, Vector2};

/// Reference-coordinate values, gradients and Hessians of a Lagrange basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisEval<const N: usize> {
    pub values: [f64; N],
    pub grads: [Vector2<f64>; N],
    pub hessians: [Matrix2<f64>; N],
}

pub type P2Eval = BasisEval<6>;
pub type P1Eval = BasisEval<3>;

fn barycentric(p: &Vector2<f64>) -> [f64; 3] {
    [1.0 - p.x - p.y, p.x, p.y]
}

/// Reference gradients of the barycentric coordinates.
const BARY_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

fn bary_grad(i: usize) -> Vector2<f64> {
    Vector2::new(BARY_GRADS[i][0], BARY_GRADS[i][1])
}

/// Symmetric outer product `a b^T + b a^T`.
fn sym_outer(a: &Vector2<f64>, b: &Vector2<f64>) -> Matrix2<f64> {
    a * b.transpose() + b * a.transpose()
}

pub fn eval_p2(p: &Vector2<f64>) -> P2Eval {
    let l = barycentric(p);
    let mut values = [0.0; 6];
    let mut grads = [Vector2::zeros(); 6];
    let mut hessians = [Matrix2::zeros(); 6];
    for i in 0..3 {
        let g = bary_grad(i);
        values[i] = l[i] * (2.0 * l[i] - 1.0);
        grads[i] = g * (4.0 * l[i] - 1.0);
        hessians[i] = g * g.transpose() * 4.0;
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let (gj, gk) = (bary_grad(j), bary_grad(k));
        values[3 + i] = 4.0 * l[j] * l[k];
        grads[3 + i] = (gj * l[k] + gk * l[j]) * 4.0;
        hessians[3 + i] = sym_outer(&gj, &gk) * 4.0;
    }
    BasisEval {
        values,
        grads,
        hessians,
    }
}

pub fn eval_p1(p: &Vector2<f64>) -> P1Eval {
    let l = barycentric(p);
    BasisEval {
        values: l,
        grads: [bary_grad(0), bary_grad(1), bary_grad(2)],
        hessians: [Matrix2::zeros(); 3],
    }
}

/// Reference coordinates of the six P2 nodes.
pub fn p2_nodes() -> [Vector2<f64>; 6] {
    [
        Vector2::new(0.0, 0.0),
        Vector2::new(1.0, 0.0),
        Vector2::new(0.0, 1.0),
        Vector2::new(0.5, 0.5),
        Vector2::new(0.0, 0.5),
        Vector2::new(0.5, 0.0),
    ]
}

/// Affine map `x = origin + J xi` of the reference triangle onto a physical
/// triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub origin: Vector2<f64>,
    pub jacobian: Matrix2<f64>,
    pub inverse_transpose: Matrix2<f64>,
    pub det: f64,
}

impl AffineMap {
    /// Map onto the triangle with vertices `v`. Returns `None` for a
    /// degenerate triangle.
    pub fn new(v: &[Vector2<f64>; 3]) -> Option<Self> {
        let jacobian = Matrix2::from_columns(&[v[1] - v[0], v[2] - v[0]]);
        let det = jacobian.determinant();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inverse = jacobian.try_inverse()?;
        Some(Self {
            origin: v[0],
            jacobian,
            inverse_transpose: inverse.transpose(),
            det,
        })
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    pub fn to_physical(&self, xi: &Vector2<f64>) -> Vector2<f64> {
        self.origin + self.jacobian * xi
    }

    pub fn to_reference(&self, x: &Vector2<f64>) -> Vector2<f64> {
        self.inverse_transpose.transpose() * (x - self.origin)
    }

    pub fn push_gradient(&self, g: &Vector2<f64>) -> Vector2<f64> {
        self.inverse_transpose * g
    }

    pub fn push_hessian(&self, h: &Matrix2<f64>) -> Matrix2<f64> {
        self.inverse_transpose * h * self.inverse_transpose.transpose()
    }

    /// Physical-coordinate basis data from a reference evaluation.
    pub fn push<const N: usize>(&self, e: &BasisEval<N>) -> BasisEval<N> {
        let mut out = *e;
        for i in 0..N {
            out.grads[i] = self.push_gradient(&e.grads[i]);
            out.hessians[i] = self.push_hessian(&e.hessians[i]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ref_point(rng: &mut impl Rng) -> Vector2<f64> {
        loop {
            let p = Vector2::new(rng.gen::<f64>(), rng.gen::<f64>());
            if p.x + p.y <= 1.0 {
                return p;
            }
        }
    }

    #[test]
    fn p2_lagrange_property() {
        for (i, node) in p2_nodes().iter().enumerate() {
            let e = eval_p2(node);
            for j in 0..6 {
                assert_abs_diff_eq!(e.values[j], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
        assert_eq!(eval_p2(&Vector2::zeros()).values, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn p2_partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let e = eval_p2(&random_ref_point(&mut rng));
            assert_abs_diff_eq!(e.values.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            let g: Vector2<f64> = e.grads.iter().sum();
            assert_abs_diff_eq!(g.norm(), 0.0, epsilon = 1e-14);
            let h: Matrix2<f64> = e.hessians.iter().sum();
            assert_abs_diff_eq!(h.norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn p2_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-6;
        for _ in 0..20 {
            let p = random_ref_point(&mut rng);
            let e = eval_p2(&p);
            for k in 0..2 {
                let mut d = Vector2::zeros();
                d[k] = h;
                let (ep, em) = (eval_p2(&(p + d)), eval_p2(&(p - d)));
                for i in 0..6 {
                    let fd = (ep.values[i] - em.values[i]) / (2.0 * h);
                    assert_abs_diff_eq!(e.grads[i][k], fd, epsilon = 1e-8);
                    let fdg = (ep.grads[i] - em.grads[i]) / (2.0 * h);
                    assert_abs_diff_eq!(e.hessians[i].column(k).into_owned(), fdg, epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn p1_gradients_are_constant() {
        let a = eval_p1(&Vector2::new(0.2, 0.3));
        let b = eval_p1(&Vector2::new(0.7, 0.1));
        assert_eq!(a.grads, b.grads);
        assert_eq!(a.grads[0], Vector2::new(-1.0, -1.0));
        assert_abs_diff_eq!(a.values.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    /// Interpolating a global quadratic and differentiating through the
    /// push-forward reproduces its analytic derivatives.
    #[test]
    fn push_forward_reproduces_quadratics() {
        let q = |x: &Vector2<f64>| 1.0 + 2.0 * x.x - x.y + 0.5 * x.x * x.x + 3.0 * x.x * x.y - 2.0 * x.y * x.y;
        let grad = |x: &Vector2<f64>| Vector2::new(2.0 + x.x + 3.0 * x.y, -1.0 + 3.0 * x.x - 4.0 * x.y);
        let hess = Matrix2::new(1.0, 3.0, 3.0, -4.0);
        let verts = [Vector2::new(0.3, -0.2), Vector2::new(1.4, 0.1), Vector2::new(0.1, 0.9)];
        let map = AffineMap::new(&verts).unwrap();
        let coeffs: Vec<f64> = p2_nodes().iter().map(|n| q(&map.to_physical(n))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let xi = random_ref_point(&mut rng);
            let x = map.to_physical(&xi);
            assert_abs_diff_eq!(map.to_reference(&x), xi, epsilon = 1e-14);
            let e = map.push(&eval_p2(&xi));
            let v: f64 = (0..6).map(|i| coeffs[i] * e.values[i]).sum();
            let g: Vector2<f64> = (0..6).map(|i| e.grads[i] * coeffs[i]).sum();
            let h: Matrix2<f64> = (0..6).map(|i| e.hessians[i] * coeffs[i]).sum();
            assert_abs_diff_eq!(v, q(&x), epsilon = 1e-12);
            assert_abs_diff_eq!(g, grad(&x), epsilon = 1e-12);
            assert_abs_diff_eq!(h, hess, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_triangle_has_no_map() {
        let v = [Vector2::new(0.0, 0.0), Vector2::new(1.0, 1.0), Vector2::new(2.0, 2.0)];
        assert!(AffineMap::new(&v).is_none());
    }
}
