//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits nonzero on any failure not listed in `KNOWN_FAILURES`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unfitted_stokes::fem::{edge_rule, triangle_rule};
use unfitted_stokes::geometry::Point;
use unfitted_stokes::verify::compute_errors;
use unfitted_stokes::{
    Discretization, DiscretizationOptions, ErrorReport, LevelSetDomain, ManufacturedCase, Parallelism, RateTable,
    StokesSolver,
};

const LEVELS: [usize; 5] = [8, 16, 32, 64, 128];

// Reference values for nu = 1e-1, rows follow LEVELS.
const REF_L2_U: [f64; 5] = [4.897e-3, 1.698e-4, 2.074e-5, 2.673e-6, 4.215e-7];
const REF_H1_U: [f64; 5] = [9.437e-2, 8.682e-3, 2.019e-3, 5.512e-4, 1.393e-4];
const REF_L2_P: [f64; 5] = [1.751e-1, 5.087e-3, 1.155e-3, 2.902e-4, 7.341e-5];

/// Checks that are known to fail; see the README. Every other check must pass.
const KNOWN_FAILURES: [&str; 3] = [
    "reference nu=1e-1 n=8 l2_u",
    "reference nu=1e-1 n=8 l2_p",
    "nu=1e-5 l2_p exceeds nu=1e-1 at every h",
];

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.lines.push((name.into(), pass, detail.into()));
    }
}

fn solve(disc: &Discretization, solver: &StokesSolver, case: &ManufacturedCase) -> (ErrorReport, Vec<f64>) {
    let sol = solver.solve(case.nu, &case.data()).unwrap();
    let report = compute_errors(disc, case, &sol).unwrap();
    let mut bits = sol.velocity.clone();
    bits.extend(&sol.pressure);
    bits.extend(&sol.multiplier);
    (report, bits)
}

fn within_factor(value: f64, reference: f64, factor: f64) -> bool {
    value >= reference / factor && value <= reference * factor
}

fn main() {
    let mut r = Report { lines: Vec::new() };
    let opts = DiscretizationOptions {
        parallelism: Parallelism::Sequential,
        ..Default::default()
    };
    let star = LevelSetDomain::star();
    let coarse = ManufacturedCase::stream_function(1e-1).unwrap();
    let fine = ManufacturedCase::stream_function(1e-5).unwrap();

    // Finest level first: its factorization dominates peak memory and the
    // smaller levels then reuse the freed allocations.
    let mut rows_coarse = Vec::new();
    let mut rows_fine = Vec::new();
    for &n in LEVELS.iter().rev() {
        let disc = Discretization::new(star.clone(), n, opts.clone()).unwrap();
        let solver = StokesSolver::new(&disc).unwrap();
        rows_coarse.push(solve(&disc, &solver, &coarse).0);
        rows_fine.push(solve(&disc, &solver, &fine).0);
    }
    rows_coarse.reverse();
    rows_fine.reverse();

    for (i, row) in rows_coarse.iter().enumerate() {
        let n = LEVELS[i];
        for (name, value, reference) in [
            ("l2_u", row.l2_u, REF_L2_U[i]),
            ("h1_u", row.h1_u, REF_H1_U[i]),
            ("l2_p", row.l2_p, REF_L2_P[i]),
        ] {
            r.check(
                format!("reference nu=1e-1 n={n} {name}"),
                within_factor(value, reference, 3.0),
                format!("{value:.3e} vs {reference:.3e} (ratio {:.2})", value / reference),
            );
        }
    }

    let table = RateTable::new(1e-1, rows_coarse.clone());
    let rate = table.final_rate().unwrap();
    for (name, value, lo, hi) in [
        ("l2_u", rate.l2_u, 2.5, 3.5),
        ("h1_u", rate.h1_u, 1.6, 2.4),
        ("l2_p", rate.l2_p, 1.6, 2.4),
    ] {
        r.check(
            format!("nu=1e-1 final {name} rate in [{lo}, {hi}]"),
            (lo..=hi).contains(&value),
            format!("{value:.3}"),
        );
    }

    for (name, get) in [
        ("l2_u", (|e: &ErrorReport| e.l2_u) as fn(&ErrorReport) -> f64),
        ("h1_u", |e: &ErrorReport| e.h1_u),
        ("l2_p", |e: &ErrorReport| e.l2_p),
    ] {
        let ratios: Vec<String> = rows_fine
            .iter()
            .zip(&rows_coarse)
            .map(|(f, c)| format!("{:.2}", get(f) / get(c)))
            .collect();
        let pass = rows_fine.iter().zip(&rows_coarse).all(|(f, c)| get(f) > get(c));
        r.check(
            format!("nu=1e-5 {name} exceeds nu=1e-1 at every h"),
            pass,
            format!("ratios {}", ratios.join(" ")),
        );
    }
    let fine_rate = RateTable::new(1e-5, rows_fine.clone()).three_level_rate().unwrap();
    r.check(
        "nu=1e-5 three-level l2_u rate >= 3.2",
        fine_rate.l2_u >= 3.2,
        format!("{:.3}", fine_rate.l2_u),
    );
    r.check(
        "nu=1e-5 three-level h1_u rate >= 2.5",
        fine_rate.h1_u >= 2.5,
        format!("{:.3}", fine_rate.h1_u),
    );

    let all_runs: Vec<&ErrorReport> = rows_coarse.iter().chain(&rows_fine).collect();
    let worst_div = all_runs.iter().map(|e| e.linf_div).fold(0.0, f64::max);
    r.check(
        "linf_div <= 1e-8 on every run",
        worst_div <= 1e-8,
        format!("max {worst_div:.2e}"),
    );

    let patch = ManufacturedCase::quadratic_patch(1e-1).unwrap();
    let disc8 = Discretization::new(star.clone(), 8, opts.clone()).unwrap();
    let (pr, _) = solve(&disc8, &StokesSolver::new(&disc8).unwrap(), &patch);
    r.check("patch n=8 h1_u <= 1e-8", pr.h1_u <= 1e-8, format!("{:.2e}", pr.h1_u));
    r.check(
        "patch n=8 mean-adjusted l2_p <= 1e-8",
        pr.l2_p <= 1e-8,
        format!("{:.2e}", pr.l2_p),
    );
    r.check(
        "patch n=8 linf_div <= 1e-8",
        pr.linf_div <= 1e-8,
        format!("{:.2e}", pr.linf_div),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_proj: f64 = 0.0;
    for _ in 0..2000 {
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let b = unfitted_stokes::geometry::star_boundary_point(theta);
        let out = (b - Point::new(0.5, 0.5)).normalize();
        // Mesh boundary points lie inside or just outside; the band stays
        // within the reach of the curve (about 0.022 outside the valleys).
        let x = b + out * rng.gen_range(-0.04..0.01);
        let s = star.project_to_boundary(&x, None, None).unwrap();
        let (f, t) = star.sample_residuals(&s).unwrap();
        worst_proj = worst_proj.max(f).max(t);
    }
    r.check(
        "projection residuals <= 1e-10",
        worst_proj <= 1e-10,
        format!("max {worst_proj:.2e}"),
    );

    let mut worst_quad: f64 = 0.0;
    for deg in 1..=10 {
        let rule = triangle_rule(deg).unwrap();
        let area: f64 = rule.weights.iter().sum();
        for a in 0..=deg {
            let b = deg - a;
            let approx: f64 = rule
                .iter()
                .map(|(p, w)| w * p.x.powi(a as i32) * p.y.powi(b as i32))
                .sum();
            let exact = 2.0 * area * factorial(a) * factorial(b) / factorial(a + b + 2);
            worst_quad = worst_quad.max((approx - exact).abs());
        }
    }
    for np in 1..=10 {
        let rule = edge_rule(np).unwrap();
        for k in 0..2 * np {
            let approx: f64 = rule.iter().map(|(s, w)| w * s.powi(k as i32)).sum();
            worst_quad = worst_quad.max((approx - 1.0 / (k as f64 + 1.0)).abs());
        }
    }
    r.check(
        "quadrature exact to its degree",
        worst_quad <= 1e-13,
        format!("max error {worst_quad:.2e}"),
    );

    let worst_mean = all_runs
        .iter()
        .map(|e| e.pressure_mean.abs().max(e.multiplier_mean.abs()))
        .fold(0.0, f64::max);
    r.check(
        "constraint means <= 1e-10",
        worst_mean <= 1e-10,
        format!("max {worst_mean:.2e}"),
    );

    let ratios: Vec<String> = rows_coarse
        .iter()
        .map(|e| format!("{:.3}", e.max_delta_ratio))
        .collect();
    r.check(
        "transfer-length diagnostic finite on every run",
        all_runs
            .iter()
            .all(|e| e.max_delta_ratio.is_finite() && e.max_delta_ratio > 0.0),
        format!("max delta/h per level {}", ratios.join(" ")),
    );

    let disc32 = Discretization::new(star.clone(), 32, opts.clone()).unwrap();
    let (a, xa) = solve(&disc32, &StokesSolver::new(&disc32).unwrap(), &coarse);
    let (b, xb) = solve(&disc32, &StokesSolver::new(&disc32).unwrap(), &coarse);
    let same = serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap()
        && xa.iter().zip(&xb).all(|(p, q)| p.to_bits() == q.to_bits());
    r.check("sequential runs are byte-identical", same, "n=32, nu=1e-1");

    let mut unexpected = Vec::new();
    for (name, pass, detail) in &r.lines {
        let tag = if *pass { "PASS" } else { "FAIL" };
        let known = if !pass && KNOWN_FAILURES.contains(&name.as_str()) {
            " (known)"
        } else {
            ""
        };
        println!("{tag} {name}: {detail}{known}");
        if !pass && known.is_empty() {
            unexpected.push(name.clone());
        }
    }
    if let Ok(status) = std::fs::read_to_string("/proc/self/status") {
        status
            .lines()
            .filter(|l| l.starts_with("VmHWM"))
            .for_each(|l| println!("{l}"));
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
