use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;
use unfitted_stokes::assembly::assemble_system;
use unfitted_stokes::fem::AffineMap;
use unfitted_stokes::mesh::vtk::VtkTriangles;
use unfitted_stokes::solver::set_parallel;
use unfitted_stokes::verify::{compute_errors, eval_velocity, infsup_estimate, write_json, InfSupMode};
use unfitted_stokes::{
    Discretization, DiscretizationOptions, ErrorReport, ManufacturedCase, Parallelism, RateTable, SolutionFields,
    StokesSolver,
};

use crate::config::{Format, RunConfig};

fn options(cfg: &RunConfig) -> DiscretizationOptions {
    DiscretizationOptions {
        sigma: cfg.sigma,
        volume_degree: cfg.quad_volume,
        edge_points: cfg.quad_edge,
        parallelism: if cfg.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::Parallel
        },
        ..Default::default()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn tag(n: usize, nu: f64) -> String {
    format!("n{n}_nu{nu:e}")
}

struct Study {
    cases: Vec<ManufacturedCase>,
    rows: Vec<Vec<ErrorReport>>,
    diagnostics: Vec<serde_json::Value>,
}

impl Study {
    fn new(cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
        set_parallel(!cfg.sequential);
        let cases = cfg
            .nu
            .iter()
            .map(|&nu| ManufacturedCase::stream_function(nu))
            .collect::<unfitted_stokes::Result<Vec<_>>>()?;
        Ok(Self {
            rows: vec![Vec::new(); cases.len()],
            cases,
            diagnostics: Vec::new(),
        })
    }

    fn level(&mut self, cfg: &RunConfig, n: usize) -> Result<()> {
        let disc = Discretization::new(cfg.level_set_domain()?, n, options(cfg))
            .with_context(|| format!("building level n={n}"))?;
        let assumption = disc.assumption();
        if !assumption.flagged.is_empty() {
            eprintln!(
                "warning: n={n}: {} boundary edges exceed delta/h = {} (max {:.3})",
                assumption.flagged.len(),
                assumption.threshold,
                assumption.max_ratio
            );
        }
        if cfg.check_assumption {
            let path = cfg.out.join(format!("assumption_n{n}.json"));
            let body = json!({ "n": n, "domain": disc.domain().name(), "report": assumption });
            serde_json::to_writer_pretty(create(&path)?, &body)?;
        }
        let mut diag = json!({
            "n": n,
            "max_delta_ratio": assumption.max_ratio,
            "flagged_edges": assumption.flagged.len(),
        });
        if cfg.infsup {
            diag["infsup"] = match infsup_estimate(&disc, InfSupMode::Full) {
                Ok(beta) => {
                    println!("n={n:<4} inf-sup estimate {beta:.4e}");
                    json!(beta)
                }
                Err(e) => {
                    eprintln!("note: n={n}: inf-sup estimate skipped: {e}");
                    json!(null)
                }
            };
        }
        self.diagnostics.push(diag);

        let solver = StokesSolver::new(&disc).with_context(|| format!("factoring level n={n}"))?;
        for (i, case) in self.cases.iter().enumerate() {
            let report = solve_one(cfg, &disc, &solver, case, n)?;
            println!(
                "nu={:<8.1e} n={n:<4} h={:.4e} dofs={:<7} l2_u={:.4e} h1_u={:.4e} l2_p={:.4e} div={:.1e}",
                case.nu, report.h, report.dofs, report.l2_u, report.h1_u, report.l2_p, report.linf_div
            );
            self.rows[i].push(report);
        }
        Ok(())
    }

    fn finish(self, cfg: &RunConfig, stem: &str) -> Result<Vec<RateTable>> {
        let tables: Vec<RateTable> = self
            .cases
            .iter()
            .zip(self.rows)
            .map(|(c, rows)| RateTable::new(c.nu, rows))
            .collect();
        if matches!(cfg.format, Format::Csv | Format::Both) {
            for t in &tables {
                let path = cfg.out.join(format!("{stem}_nu{:e}.csv", t.nu));
                t.write_csv(create(&path)?)?;
            }
        }
        if matches!(cfg.format, Format::Json | Format::Both) {
            let mut w = create(&cfg.out.join(format!("{stem}.json")))?;
            write_json(&tables, &mut w)?;
            w.flush()?;
        }
        if cfg.check_assumption || cfg.infsup {
            let path = cfg.out.join(format!("{stem}_diagnostics.json"));
            serde_json::to_writer_pretty(create(&path)?, &self.diagnostics)?;
        }
        Ok(tables)
    }
}

fn solve_one(
    cfg: &RunConfig,
    disc: &Discretization,
    solver: &StokesSolver,
    case: &ManufacturedCase,
    n: usize,
) -> Result<ErrorReport> {
    let name = tag(n, case.nu);
    if cfg.dump_matrix {
        let system = assemble_system(disc, case.nu, &case.data()).with_context(|| format!("assembling {name}"))?;
        let mut w = create(&cfg.out.join(format!("system_{name}.mtx")))?;
        system.matrix.write_matrix_market(&mut w)?;
        w.flush()?;
        let mut w = create(&cfg.out.join(format!("rhs_{name}.txt")))?;
        for v in &system.rhs {
            writeln!(w, "{v:e}")?;
        }
        w.flush()?;
    }
    let sol = solver
        .solve(case.nu, &case.data())
        .with_context(|| format!("solving {name}"))?;
    let report = compute_errors(disc, case, &sol)?;
    if cfg.vtk {
        write_vtk(&cfg.out.join(format!("solution_{name}.vtk")), disc, &sol, &name)?;
    }
    Ok(report)
}

fn write_vtk(path: &Path, disc: &Discretization, sol: &SolutionFields, title: &str) -> Result<()> {
    let mesh = disc.mesh();
    let velocity: Vec<_> = (0..mesh.vertices().len())
        .map(|v| point(sol.velocity[2 * v], sol.velocity[2 * v + 1]))
        .collect();
    let centroid = point(1.0 / 3.0, 1.0 / 3.0);
    let mut pressure = Vec::with_capacity(mesh.triangles().len());
    let mut divergence = Vec::with_capacity(mesh.triangles().len());
    for k in 0..mesh.triangles().len() {
        pressure.push(sol.pressure[3 * k..3 * k + 3].iter().sum::<f64>() / 3.0);
        let map = AffineMap::new(&mesh.triangle_points(k)).context("degenerate micro triangle")?;
        let (_, g) = eval_velocity(disc, &sol.velocity, k, &map, &centroid);
        divergence.push(g.trace());
    }
    let mut w = create(path)?;
    VtkTriangles {
        title,
        points: mesh.vertices(),
        triangles: mesh.triangles(),
        point_vectors: vec![("velocity", &velocity)],
        cell_scalars: vec![("pressure", &pressure), ("divergence", &divergence)],
    }
    .write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn point(x: f64, y: f64) -> unfitted_stokes::geometry::Point {
    unfitted_stokes::geometry::Point::new(x, y)
}

pub fn converge(cfg: &RunConfig) -> Result<()> {
    let mut study = Study::new(cfg)?;
    for &n in &cfg.levels {
        study.level(cfg, n)?;
    }
    let tables = study.finish(cfg, "convergence")?;
    for t in &tables {
        if let Some(r) = t.final_rate() {
            println!(
                "nu={:<8.1e} final rates: l2_u={:.2} h1_u={:.2} l2_p={:.2}",
                t.nu, r.l2_u, r.h1_u, r.l2_p
            );
        }
    }
    println!("results written to {}", cfg.out.display());
    Ok(())
}

pub fn solve(cfg: &RunConfig, n: usize) -> Result<()> {
    anyhow::ensure!(n > 0, "n must be positive");
    let mut study = Study::new(cfg)?;
    study.level(cfg, n)?;
    study.finish(cfg, &format!("solve_n{n}"))?;
    println!("results written to {}", cfg.out.display());
    Ok(())
}
