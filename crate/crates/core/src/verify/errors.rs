use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use super::ManufacturedCase;
use crate::assembly::norms::NormMatrices;
use crate::assembly::Discretization;
use crate::error::{Error, Result};
use crate::fem::{eval_p1, eval_p2, triangle_rule, AffineMap, DofLayout};
use crate::geometry::Point;
use crate::solver::SolutionFields;

/// Volume rule used for all error integrals.
pub const ERROR_QUADRATURE_DEGREE: usize = 8;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ErrorReport {
    pub n: Option<usize>,
    pub h: f64,
    /// Largest micro edge.
    pub h_max: f64,
    pub nu: f64,
    pub dofs: usize,
    pub l2_u: f64,
    pub h1_u: f64,
    /// Both pressures shifted to zero mean on the computational domain.
    pub l2_p: f64,
    pub linf_div: f64,
    /// `|lambda_h - mu_0|_{-1/2,h}` with `mu_0` the mean-free boundary
    /// interpolant of the exact pressure.
    pub multiplier_error: f64,
    pub pressure_mean: f64,
    pub multiplier_mean: f64,
    pub max_delta_ratio: f64,
    pub residual: f64,
}

/// Velocity value and gradient of a discrete field on micro triangle `k` at
/// reference point `xi`.
pub fn eval_velocity(
    disc: &Discretization,
    velocity: &[f64],
    k: usize,
    map: &AffineMap,
    xi: &Vector2<f64>,
) -> (Vector2<f64>, Matrix2<f64>) {
    let e = map.push(&eval_p2(xi));
    let nodes = disc.layout().nodes(k);
    let mut u = Vector2::zeros();
    let mut g = Matrix2::zeros();
    for i in 0..6 {
        for c in 0..2 {
            let coef = velocity[DofLayout::velocity_dof(nodes[i], c)];
            u[c] += coef * e.values[i];
            g[(c, 0)] += coef * e.grads[i].x;
            g[(c, 1)] += coef * e.grads[i].y;
        }
    }
    (u, g)
}

pub fn eval_pressure(pressure: &[f64], k: usize, xi: &Vector2<f64>) -> f64 {
    let psi = eval_p1(xi).values;
    (0..3).map(|m| pressure[3 * k + m] * psi[m]).sum()
}

/// Nodal interpolant of a vector field in the velocity space.
pub fn interpolate_velocity(disc: &Discretization, f: impl Fn(&Point) -> Vector2<f64>) -> Vec<f64> {
    let mut v = vec![0.0; disc.layout().velocity_len()];
    for (node, x) in disc.layout().node_coords().iter().enumerate() {
        let u = f(x);
        v[DofLayout::velocity_dof(node, 0)] = u.x;
        v[DofLayout::velocity_dof(node, 1)] = u.y;
    }
    v
}

/// Vertex interpolant of a scalar field in the discontinuous P1 space.
pub fn interpolate_pressure(disc: &Discretization, f: impl Fn(&Point) -> f64) -> Vec<f64> {
    let mesh = disc.mesh();
    (0..mesh.triangles().len())
        .flat_map(|k| mesh.triangle_points(k).map(|x| f(&x)))
        .collect()
}

/// Nodal interpolant of a scalar field in the boundary multiplier space.
pub fn interpolate_multiplier(disc: &Discretization, f: impl Fn(&Point) -> f64) -> Vec<f64> {
    disc.layout().multiplier_coords().iter().map(f).collect()
}

/// `int_{dOmega_h} mu ds`.
pub fn multiplier_integral(disc: &Discretization, mu: &[f64]) -> f64 {
    let layout = disc.layout();
    let off = layout.multiplier_offset();
    let mut total = 0.0;
    for b in 0..disc.boundary().n_edges() {
        let dofs = layout.multiplier_dofs(b);
        for p in disc.boundary().edge(b) {
            let ell = p.multiplier_basis();
            total += p.weight * (0..3).map(|m| mu[dofs[m] - off] * ell[m]).sum::<f64>();
        }
    }
    total
}

/// Error norms of a discrete solution against a manufactured case.
pub fn compute_errors(disc: &Discretization, case: &ManufacturedCase, sol: &SolutionFields) -> Result<ErrorReport> {
    let layout = disc.layout();
    if sol.velocity.len() != layout.velocity_len()
        || sol.pressure.len() != layout.pressure_len()
        || sol.multiplier.len() != layout.multiplier_len()
    {
        return Err(Error::DimensionMismatch(
            "solution does not match the dof layout".into(),
        ));
    }
    let mesh = disc.mesh();
    let rule = triangle_rule(ERROR_QUADRATURE_DEGREE)?;
    let maps: Vec<AffineMap> = (0..mesh.triangles().len())
        .map(|k| AffineMap::new(&mesh.triangle_points(k)).ok_or(Error::DegenerateTriangle(k)))
        .collect::<Result<_>>()?;

    let area = mesh.total_area();
    let (mut mean_p, mut mean_ph) = (0.0, 0.0);
    for (k, map) in maps.iter().enumerate() {
        for (xi, w) in rule.iter() {
            let jw = w * map.det.abs();
            mean_p += jw * (case.pressure)(&map.to_physical(xi));
            mean_ph += jw * eval_pressure(&sol.pressure, k, xi);
        }
    }
    let pressure_mean = mean_ph;
    mean_p /= area;
    mean_ph /= area;

    let (mut l2_u, mut h1_u, mut l2_p, mut linf_div) = (0.0, 0.0, 0.0, 0.0f64);
    let corners = [Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)];
    for (k, map) in maps.iter().enumerate() {
        for (xi, w) in rule.iter() {
            let jw = w * map.det.abs();
            let x = map.to_physical(xi);
            let (uh, gh) = eval_velocity(disc, &sol.velocity, k, map, xi);
            l2_u += jw * ((case.velocity)(&x) - uh).norm_squared();
            h1_u += jw * ((case.velocity_grad)(&x) - gh).norm_squared();
            let dp = ((case.pressure)(&x) - mean_p) - (eval_pressure(&sol.pressure, k, xi) - mean_ph);
            l2_p += jw * dp * dp;
            linf_div = linf_div.max(gh.trace().abs());
        }
        for xi in &corners {
            let (_, gh) = eval_velocity(disc, &sol.velocity, k, map, xi);
            linf_div = linf_div.max(gh.trace().abs());
        }
    }

    let norms = NormMatrices::new(disc)?;
    let mu = interpolate_multiplier(disc, |x| (case.pressure)(x));
    let mu_mean = multiplier_integral(disc, &mu) / mesh.boundary_length();
    let diff: Vec<f64> = sol.multiplier.iter().zip(&mu).map(|(l, m)| l - (m - mu_mean)).collect();

    Ok(ErrorReport {
        n: disc.resolution(),
        h: disc.h(),
        h_max: mesh.mesh_size(),
        nu: case.nu,
        dofs: layout.total(),
        l2_u: l2_u.sqrt(),
        h1_u: h1_u.sqrt(),
        l2_p: l2_p.sqrt(),
        linf_div,
        multiplier_error: norms.multiplier_norm(&diff),
        pressure_mean,
        multiplier_mean: multiplier_integral(disc, &sol.multiplier),
        max_delta_ratio: disc.assumption().max_ratio,
        residual: sol.residual,
    })
}
