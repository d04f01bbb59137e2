use nalgebra::Vector2;

use super::{Discretization, PressureGauge, SaddleSystem, StokesData};
use crate::error::{Error, Result};
use crate::fem::{eval_p1, eval_p2, AffineMap, BasisEval, DofLayout};
use crate::solver::TripletList;

type Entries = Vec<(usize, usize, f64)>;

fn u_dof(node: usize, c: usize) -> usize {
    DofLayout::velocity_dof(node, c)
}

/// Physical P2 data, P1 values and weights at the volume quadrature points
/// of micro triangle `k`.
struct ElementQuad {
    p2: Vec<BasisEval<6>>,
    p1: Vec<[f64; 3]>,
    weights: Vec<f64>,
    map: AffineMap,
}

fn element_quad(disc: &Discretization, k: usize) -> Result<ElementQuad> {
    let map = AffineMap::new(&disc.mesh().triangle_points(k)).ok_or(Error::DegenerateTriangle(k))?;
    let jac = map.det.abs();
    let rule = disc.volume_rule();
    Ok(ElementQuad {
        p2: rule.points.iter().map(|xi| map.push(&eval_p2(xi))).collect(),
        p1: rule.points.iter().map(|xi| eval_p1(xi).values).collect(),
        weights: rule.weights.iter().map(|w| w * jac).collect(),
        map,
    })
}

fn flatten(disc: &Discretization, parts: Vec<Result<Entries>>) -> Result<TripletList> {
    let n = disc.layout().total();
    let mut out = TripletList::with_capacity(n, n, parts.iter().map(|p| p.as_ref().map_or(0, Vec::len)).sum());
    for p in parts {
        out.extend_from(p?);
    }
    Ok(out)
}

/// `a_h` on the velocity block: non-symmetric Nitsche form with the Taylor
/// transfer in the adjoint-consistency and penalty terms.
pub fn assemble_a(disc: &Discretization, nu: f64) -> Result<TripletList> {
    let layout = disc.layout();
    let par = disc.parallelism();
    let mut parts = par.map(layout.n_triangles(), |k| {
        let q = element_quad(disc, k)?;
        let nodes = layout.nodes(k);
        let mut local = [[0.0; 6]; 6];
        for (e, w) in q.p2.iter().zip(&q.weights) {
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += w * e.grads[i].dot(&e.grads[j]);
                }
            }
        }
        let mut out = Vec::with_capacity(72);
        for i in 0..6 {
            for j in 0..6 {
                for c in 0..2 {
                    out.push((u_dof(nodes[i], c), u_dof(nodes[j], c), nu * local[i][j]));
                }
            }
        }
        Ok(out)
    });
    let sigma = disc.sigma();
    let bedges = disc.mesh().boundary_edges();
    parts.extend(par.map(bedges.len(), |b| {
        let edge = &bedges[b];
        let nodes = layout.nodes(edge.triangle);
        let n = edge.normal;
        let pen = sigma / edge.length;
        let mut local = [[0.0; 6]; 6];
        for p in disc.boundary().edge(b) {
            let t = &p.trace;
            for i in 0..6 {
                let dn_i = n.dot(&t.grads[i]);
                for j in 0..6 {
                    let dn_j = n.dot(&t.grads[j]);
                    local[i][j] += p.weight * (-dn_j * t.values[i] + dn_i * t.sh[j] + pen * t.sh[j] * t.sh[i]);
                }
            }
        }
        let mut out = Vec::with_capacity(72);
        for i in 0..6 {
            for j in 0..6 {
                for c in 0..2 {
                    out.push((u_dof(nodes[i], c), u_dof(nodes[j], c), nu * local[i][j]));
                }
            }
        }
        Ok(out)
    }));
    flatten(disc, parts)
}

/// Volume divergence pairing `-int (div v) q`, pushed in both the momentum
/// rows (pressure columns) and the pressure rows (velocity columns).
fn divergence_entries(disc: &Discretization, k: usize, momentum: bool, continuity: bool) -> Result<Entries> {
    let layout = disc.layout();
    let q = element_quad(disc, k)?;
    let nodes = layout.nodes(k);
    let mut local = [[[0.0; 2]; 6]; 3];
    for ((e, psi), w) in q.p2.iter().zip(&q.p1).zip(&q.weights) {
        for (m, psi_m) in psi.iter().enumerate() {
            for i in 0..6 {
                for c in 0..2 {
                    local[m][i][c] -= w * e.grads[i][c] * psi_m;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(72);
    for (m, row) in local.iter().enumerate() {
        let pdof = layout.pressure_dof(k, m);
        for i in 0..6 {
            for c in 0..2 {
                if momentum {
                    out.push((u_dof(nodes[i], c), pdof, row[i][c]));
                }
                if continuity {
                    out.push((pdof, u_dof(nodes[i], c), row[i][c]));
                }
            }
        }
    }
    Ok(out)
}

/// Multiplier pairing on one boundary edge, `int (w . n_h) mu` with `w` the
/// plain trace (`corrected == false`) or `S_h v`.
fn multiplier_entries(disc: &Discretization, b: usize, corrected: bool) -> Entries {
    let layout = disc.layout();
    let edge = &disc.mesh().boundary_edges()[b];
    let nodes = layout.nodes(edge.triangle);
    let mdofs = layout.multiplier_dofs(b);
    let mut local = [[[0.0; 2]; 6]; 3];
    for p in disc.boundary().edge(b) {
        let ell = p.multiplier_basis();
        let tr = if corrected { &p.trace.sh } else { &p.trace.values };
        for m in 0..3 {
            for i in 0..6 {
                for c in 0..2 {
                    local[m][i][c] += p.weight * tr[i] * edge.normal[c] * ell[m];
                }
            }
        }
    }
    let mut out = Vec::with_capacity(36);
    for m in 0..3 {
        for i in 0..6 {
            for c in 0..2 {
                let (r, col) = if corrected {
                    (mdofs[m], u_dof(nodes[i], c))
                } else {
                    (u_dof(nodes[i], c), mdofs[m])
                };
                out.push((r, col, local[m][i][c]));
            }
        }
    }
    out
}

/// `b_h(v, (p, lambda))` in the momentum rows.
pub fn assemble_b(disc: &Discretization) -> Result<TripletList> {
    let par = disc.parallelism();
    let mut parts = par.map(disc.layout().n_triangles(), |k| {
        divergence_entries(disc, k, true, false)
    });
    parts.extend(par.map(disc.boundary().n_edges(), |b| Ok(multiplier_entries(disc, b, false))));
    flatten(disc, parts)
}

/// `b_h^e(u, (q, mu))` in the pressure and multiplier rows.
pub fn assemble_be(disc: &Discretization) -> Result<TripletList> {
    let par = disc.parallelism();
    let mut parts = par.map(disc.layout().n_triangles(), |k| {
        divergence_entries(disc, k, false, true)
    });
    parts.extend(par.map(disc.boundary().n_edges(), |b| Ok(multiplier_entries(disc, b, true))));
    flatten(disc, parts)
}

/// Rows and columns of the scalar unknowns: `alpha` for the pressure mean,
/// `beta` for the multiplier mean and `gamma` for the velocity flux.
pub fn assemble_constraints(disc: &Discretization) -> Result<TripletList> {
    let layout = disc.layout();
    let par = disc.parallelism();
    let (alpha, beta, gamma) = (layout.alpha(), layout.beta(), layout.gamma());
    let mut parts = par.map(layout.n_triangles(), |k| {
        let q = element_quad(disc, k)?;
        let mut out = Vec::with_capacity(6);
        for m in 0..3 {
            let mean: f64 = q.p1.iter().zip(&q.weights).map(|(psi, w)| w * psi[m]).sum();
            let pdof = layout.pressure_dof(k, m);
            out.push((pdof, alpha, mean));
            out.push((alpha, pdof, mean));
        }
        Ok(out)
    });
    parts.extend(par.map(disc.boundary().n_edges(), |b| {
        let edge = &disc.mesh().boundary_edges()[b];
        let nodes = layout.nodes(edge.triangle);
        let mdofs = layout.multiplier_dofs(b);
        let mut mu = [0.0; 3];
        let mut flux = [[0.0; 2]; 6];
        for p in disc.boundary().edge(b) {
            let ell = p.multiplier_basis();
            for m in 0..3 {
                mu[m] += p.weight * ell[m];
            }
            for i in 0..6 {
                for c in 0..2 {
                    flux[i][c] += p.weight * p.trace.values[i] * edge.normal[c];
                }
            }
        }
        let mut out = Vec::with_capacity(30);
        for m in 0..3 {
            out.push((mdofs[m], beta, mu[m]));
            out.push((beta, mdofs[m], mu[m]));
        }
        for i in 0..6 {
            for c in 0..2 {
                let v = u_dof(nodes[i], c);
                out.push((v, gamma, flux[i][c]));
                out.push((gamma, v, flux[i][c]));
            }
        }
        Ok(out)
    }));
    flatten(disc, parts)
}

/// Load vector. Boundary data enter through `g_M = g(x*)` in the Nitsche
/// terms of the momentum rows and in the multiplier rows. The flux row is
/// homogeneous.
pub fn assemble_rhs(disc: &Discretization, nu: f64, data: &StokesData) -> Result<Vec<f64>> {
    let layout = disc.layout();
    let par = disc.parallelism();
    let volume = par.map(layout.n_triangles(), |k| -> Result<Vec<(usize, f64)>> {
        let q = element_quad(disc, k)?;
        let nodes = layout.nodes(k);
        let mut local = [[0.0; 2]; 6];
        for (xi, (e, w)) in disc.volume_rule().points.iter().zip(q.p2.iter().zip(&q.weights)) {
            let f = (data.forcing)(&q.map.to_physical(xi));
            for i in 0..6 {
                for c in 0..2 {
                    local[i][c] += w * f[c] * e.values[i];
                }
            }
        }
        Ok((0..12)
            .map(|r| (u_dof(nodes[r / 2], r % 2), local[r / 2][r % 2]))
            .collect())
    });
    let sigma = disc.sigma();
    let bedges = disc.mesh().boundary_edges();
    let boundary = par.map(bedges.len(), |b| -> Result<Vec<(usize, f64)>> {
        let edge = &bedges[b];
        let nodes = layout.nodes(edge.triangle);
        let mdofs = layout.multiplier_dofs(b);
        let pen = sigma / edge.length;
        let mut local = [[0.0; 2]; 6];
        let mut mu = [0.0; 3];
        for p in disc.boundary().edge(b) {
            let g: Vector2<f64> = (data.boundary)(&p.sample.x_star);
            let t = &p.trace;
            for i in 0..6 {
                let dn_i = edge.normal.dot(&t.grads[i]);
                for c in 0..2 {
                    local[i][c] += nu * p.weight * (dn_i * g[c] + pen * g[c] * t.sh[i]);
                }
            }
            let gn = g.dot(&edge.normal);
            for (m, l) in p.multiplier_basis().iter().enumerate() {
                mu[m] += p.weight * gn * l;
            }
        }
        let mut out: Vec<(usize, f64)> = (0..12)
            .map(|r| (u_dof(nodes[r / 2], r % 2), local[r / 2][r % 2]))
            .collect();
        out.extend(mdofs.into_iter().zip(mu));
        Ok(out)
    });
    let mut rhs = vec![0.0; layout.total()];
    for part in volume.into_iter().chain(boundary) {
        for (i, v) in part? {
            rhs[i] += v;
        }
    }
    Ok(rhs)
}

/// Right-hand side entries of the rows replaced by the pressure gauge.
pub(crate) fn apply_gauge_rhs(layout: &DofLayout, gauge: PressureGauge, rhs: &mut [f64]) {
    if gauge == PressureGauge::Pinned {
        rhs[layout.pressure_offset()] = 0.0;
        rhs[layout.alpha()] = 0.0;
    }
}

/// Full augmented system for viscosity `nu`.
///
/// With [`PressureGauge::Pinned`] the `alpha` couplings are dropped
/// (`alpha = 0` holds identically since `int div u = int u . n = 0`), the
/// divergence row of the first pressure dof is replaced by `p_0 = 0`, and the
/// zero-mean pressure is recovered in [`crate::solver::solve_direct`].
pub fn assemble_system(disc: &Discretization, nu: f64, data: &StokesData) -> Result<SaddleSystem> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("viscosity must be positive, got {nu}")));
    }
    let layout = disc.layout();
    let mut triplets = assemble_a(disc, nu)?;
    triplets.extend(assemble_b(disc)?);
    triplets.extend(assemble_be(disc)?);
    let constraints = assemble_constraints(disc)?;
    let alpha = layout.alpha();
    let p0 = layout.pressure_offset();
    let mut pressure_weights = vec![0.0; layout.pressure_len()];
    for &(r, c, v) in constraints.entries() {
        if r == alpha {
            pressure_weights[c - p0] += v;
        }
    }
    triplets.extend(constraints);
    let gauge = disc.options().gauge;
    let mut rhs = assemble_rhs(disc, nu, data)?;
    apply_gauge_rhs(layout, gauge, &mut rhs);
    let matrix = match gauge {
        PressureGauge::MeanMultiplier => triplets.to_csr(),
        PressureGauge::Pinned => {
            let n = layout.total();
            let mut kept = TripletList::with_capacity(n, n, triplets.len());
            kept.extend_from(
                triplets
                    .entries()
                    .iter()
                    .copied()
                    .filter(|&(r, c, _)| r != alpha && c != alpha && r != p0),
            );
            kept.push(p0, p0, pressure_weights[0]);
            kept.push(alpha, alpha, 1.0);
            kept.to_csr()
        }
    };
    Ok(SaddleSystem {
        matrix,
        rhs,
        layout: layout.clone(),
        nu,
        sigma: disc.sigma(),
        gauge,
        pressure_weights,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::assembly::{DiscretizationOptions, Parallelism};
    use crate::fem::triangle_rule;
    use crate::geometry::{BoundingBox, LevelSetDomain, Point};
    use crate::solver::solve_direct;
    use crate::verify::{eval_pressure, eval_velocity, interpolate_velocity, ManufacturedCase};

    fn star(n: usize) -> Discretization {
        Discretization::new(LevelSetDomain::star(), n, DiscretizationOptions::default()).unwrap()
    }

    fn random_velocity(disc: &Discretization, rng: &mut impl Rng) -> Vec<f64> {
        let mut v = vec![0.0; disc.layout().total()];
        for x in &mut v[..disc.layout().velocity_len()] {
            *x = rng.gen_range(-1.0..1.0);
        }
        v
    }

    #[test]
    fn velocity_form_is_coercive_on_star() {
        let disc = star(12);
        let a = assemble_a(&disc, 1.0).unwrap().to_csr();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let v = random_velocity(&disc, &mut rng);
            assert!(a.bilinear(&v, &v) > 0.0);
        }
    }

    #[test]
    fn corrected_pairing_reduces_to_plain_when_fitted() {
        let dom = LevelSetDomain::rectangle(BoundingBox::unit());
        let disc = Discretization::new(dom, 4, DiscretizationOptions::default()).unwrap();
        assert!(disc.boundary().max_delta() < 1e-14);
        let b = assemble_b(&disc).unwrap().to_csr().transpose().to_dense();
        let be = assemble_be(&disc).unwrap().to_csr().to_dense();
        for (rb, re) in b.iter().zip(&be) {
            for (x, y) in rb.iter().zip(re) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn pressure_rows_match_independent_divergence_quadrature() {
        let disc = star(8);
        let layout = disc.layout();
        let be = assemble_be(&disc).unwrap().to_csr();
        let rule = triangle_rule(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let v = random_velocity(&disc, &mut rng);
            let q: Vec<f64> = (0..layout.pressure_len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let image = be.mul_vec(&v);
            let assembled: f64 = (0..layout.pressure_len())
                .map(|k| q[k] * image[layout.pressure_offset() + k])
                .sum();
            let mut direct = 0.0;
            for k in 0..layout.n_triangles() {
                let map = AffineMap::new(&disc.mesh().triangle_points(k)).unwrap();
                for (xi, w) in rule.iter() {
                    let (_, g) = eval_velocity(&disc, &v[..layout.velocity_len()], k, &map, xi);
                    direct -= w * map.det.abs() * g.trace() * eval_pressure(&q, k, xi);
                }
            }
            assert_abs_diff_eq!(assembled, direct, epsilon = 1e-11 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn parallel_assembly_is_bitwise_sequential() {
        let case = ManufacturedCase::stream_function(0.1).unwrap();
        let seq = assemble_system(&star(16), 0.1, &case.data()).unwrap();
        let opts = DiscretizationOptions {
            parallelism: Parallelism::Parallel,
            ..Default::default()
        };
        let disc = Discretization::new(LevelSetDomain::star(), 16, opts).unwrap();
        let par = assemble_system(&disc, 0.1, &case.data()).unwrap();
        assert_eq!(seq.matrix, par.matrix);
        assert_eq!(
            seq.rhs.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            par.rhs.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn edge_quadrature_refinement_is_stable() {
        let dom = LevelSetDomain::circle(Point::new(0.5, 0.5), 0.3).unwrap();
        let case = ManufacturedCase::stream_function(0.1).unwrap();
        let build = |edge_points| {
            let opts = DiscretizationOptions {
                edge_points,
                ..Default::default()
            };
            let disc = Discretization::new(dom.clone(), 16, opts).unwrap();
            assemble_system(&disc, 0.1, &case.data()).unwrap()
        };
        let (a, b) = (build(6), build(10));
        let scale = a.matrix.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..a.matrix.nrows() {
            for (c, v) in a.matrix.row(r) {
                assert!((v - b.matrix.get(r, c)).abs() <= 1e-8 * scale, "entry ({r}, {c})");
            }
            for (c, v) in b.matrix.row(r) {
                assert!((v - a.matrix.get(r, c)).abs() <= 1e-8 * scale, "entry ({r}, {c})");
            }
        }
    }

    #[test]
    fn pressure_gauges_give_the_same_solution() {
        let case = ManufacturedCase::stream_function(0.1).unwrap();
        let solve = |gauge| {
            let opts = DiscretizationOptions {
                gauge,
                ..Default::default()
            };
            let disc = Discretization::new(LevelSetDomain::star(), 8, opts).unwrap();
            solve_direct(&assemble_system(&disc, 0.1, &case.data()).unwrap()).unwrap()
        };
        let pinned = solve(PressureGauge::Pinned);
        let mean = solve(PressureGauge::MeanMultiplier);
        assert!(mean.alpha.abs() < 1e-12);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
        assert!(close(&pinned.velocity, &mean.velocity));
        assert!(close(&pinned.pressure, &mean.pressure));
        assert!(close(&pinned.multiplier, &mean.multiplier));
        assert_abs_diff_eq!(pinned.beta, mean.beta, epsilon = 1e-9);
        assert_abs_diff_eq!(pinned.gamma, mean.gamma, epsilon = 1e-9);
    }

    #[test]
    fn constraint_rows_measure_domain_and_flux() {
        let disc = star(16);
        let layout = disc.layout();
        let c = assemble_constraints(&disc).unwrap().to_csr();
        let alpha: f64 = c.row(layout.alpha()).map(|(_, v)| v).sum();
        let beta: f64 = c.row(layout.beta()).map(|(_, v)| v).sum();
        assert_abs_diff_eq!(alpha, disc.mesh().total_area(), epsilon = 1e-14);
        assert_abs_diff_eq!(beta, disc.mesh().boundary_length(), epsilon = 1e-13);
        let flux = |f: &dyn Fn(&Point) -> nalgebra::Vector2<f64>| {
            let v = interpolate_velocity(&disc, f);
            c.row(layout.gamma()).map(|(j, w)| w * v[j]).sum::<f64>()
        };
        assert_abs_diff_eq!(flux(&|_| nalgebra::Vector2::new(1.0, -2.0)), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            flux(&|x| nalgebra::Vector2::new(x.x, 0.0)),
            disc.mesh().total_area(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn rejects_bad_parameters() {
        let disc = star(8);
        let data = StokesData::homogeneous();
        assert!(assemble_system(&disc, 0.0, &data).is_err());
        assert!(assemble_system(&disc, f64::INFINITY, &data).is_err());
        let opts = DiscretizationOptions {
            sigma: -1.0,
            ..Default::default()
        };
        assert!(Discretization::new(LevelSetDomain::star(), 8, opts).is_err());
    }

    #[test]
    fn homogeneous_data_gives_zero_solution() {
        let disc = star(8);
        let sys = assemble_system(&disc, 0.1, &StokesData::homogeneous()).unwrap();
        assert!(sys.rhs.iter().all(|&x| x == 0.0));
        let sol = solve_direct(&sys).unwrap();
        assert!(sol.velocity.iter().chain(&sol.pressure).all(|&x| x == 0.0));
    }
}
