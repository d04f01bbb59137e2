use std::io::Write;

use serde::Serialize;

use super::{compute_errors, ErrorReport, ManufacturedCase};
use crate::assembly::{Discretization, DiscretizationOptions};
use crate::error::{Error, Result};
use crate::geometry::LevelSetDomain;
use crate::solver::{SolutionFields, StokesSolver};

/// Assembles and solves the case on an existing discretization.
pub fn solve_case(disc: &Discretization, case: &ManufacturedCase) -> Result<SolutionFields> {
    StokesSolver::new(disc)?.solve(case.nu, &case.data())
}

/// Full pipeline for one background resolution.
pub fn run_level(
    domain: &LevelSetDomain,
    n: usize,
    case: &ManufacturedCase,
    options: &DiscretizationOptions,
) -> Result<ErrorReport> {
    let inner = || {
        let disc = Discretization::new(domain.clone(), n, options.clone())?;
        let sol = solve_case(&disc, case)?;
        compute_errors(&disc, case, &sol)
    };
    inner().map_err(|e| Error::Level { n, source: Box::new(e) })
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Rates {
    pub l2_u: f64,
    pub h1_u: f64,
    pub l2_p: f64,
}

/// Error reports of successive levels with observed rates.
#[derive(Clone, Debug, Serialize)]
pub struct RateTable {
    pub nu: f64,
    pub rows: Vec<ErrorReport>,
    /// `rates[k]` compares row `k - 1` with row `k`; defined only when the
    /// mesh parameter halves.
    pub rates: Vec<Option<Rates>>,
}

fn halves(coarse: f64, fine: f64) -> bool {
    ((coarse / fine) - 2.0).abs() < 1e-9
}

impl RateTable {
    pub fn new(nu: f64, rows: Vec<ErrorReport>) -> Self {
        let mut rates = vec![None];
        for w in rows.windows(2) {
            let r = |a: f64, b: f64| (a / b).log2();
            rates.push(halves(w[0].h, w[1].h).then(|| Rates {
                l2_u: r(w[0].l2_u, w[1].l2_u),
                h1_u: r(w[0].h1_u, w[1].h1_u),
                l2_p: r(w[0].l2_p, w[1].l2_p),
            }));
        }
        rates.truncate(rows.len());
        Self { nu, rows, rates }
    }

    /// Rate between the last two levels.
    pub fn final_rate(&self) -> Option<Rates> {
        self.rates.last().copied().flatten()
    }

    /// Averaged rate `log2(e_{k} / e_{k+2}) / 2` over the three finest
    /// levels.
    pub fn three_level_rate(&self) -> Option<Rates> {
        let n = self.rows.len();
        if n < 3 {
            return None;
        }
        let (a, b, c) = (&self.rows[n - 3], &self.rows[n - 2], &self.rows[n - 1]);
        if !(halves(a.h, b.h) && halves(b.h, c.h)) {
            return None;
        }
        let r = |x: f64, y: f64| (x / y).log2() / 2.0;
        Some(Rates {
            l2_u: r(a.l2_u, c.l2_u),
            h1_u: r(a.h1_u, c.h1_u),
            l2_p: r(a.l2_p, c.l2_p),
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (row, rate) in self.rows.iter().zip(&self.rates) {
            out.serialize(CsvRow {
                n: row.n,
                h: row.h,
                dofs: row.dofs,
                l2_u: row.l2_u,
                h1_u: row.h1_u,
                l2_p: row.l2_p,
                linf_div: row.linf_div,
                max_delta_ratio: row.max_delta_ratio,
                rate_l2_u: rate.map(|r| r.l2_u),
                rate_h1_u: rate.map(|r| r.h1_u),
                rate_l2_p: rate.map(|r| r.l2_p),
                nu: row.nu,
                h_max: row.h_max,
                multiplier_error: row.multiplier_error,
                residual: row.residual,
            })?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct CsvRow {
    n: Option<usize>,
    h: f64,
    dofs: usize,
    l2_u: f64,
    h1_u: f64,
    l2_p: f64,
    linf_div: f64,
    max_delta_ratio: f64,
    rate_l2_u: Option<f64>,
    rate_h1_u: Option<f64>,
    rate_l2_p: Option<f64>,
    nu: f64,
    h_max: f64,
    multiplier_error: f64,
    residual: f64,
}

/// Runs the manufactured case at every level, in order.
pub fn run_convergence(
    domain: &LevelSetDomain,
    levels: &[usize],
    case: &ManufacturedCase,
    options: &DiscretizationOptions,
) -> Result<RateTable> {
    let rows = levels
        .iter()
        .map(|&n| run_level(domain, n, case, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable::new(case.nu, rows))
}

/// Runs several cases on shared discretizations: one mesh and one
/// factorization per level, one table per case.
pub fn run_study(
    domain: &LevelSetDomain,
    levels: &[usize],
    cases: &[ManufacturedCase],
    options: &DiscretizationOptions,
) -> Result<Vec<RateTable>> {
    let mut rows = vec![Vec::with_capacity(levels.len()); cases.len()];
    for &n in levels {
        let level = || -> Result<Vec<ErrorReport>> {
            let disc = Discretization::new(domain.clone(), n, options.clone())?;
            let solver = StokesSolver::new(&disc)?;
            cases
                .iter()
                .map(|case| compute_errors(&disc, case, &solver.solve(case.nu, &case.data())?))
                .collect()
        };
        let reports = level().map_err(|e| Error::Level { n, source: Box::new(e) })?;
        for (row, r) in rows.iter_mut().zip(reports) {
            row.push(r);
        }
    }
    Ok(cases.iter().zip(rows).map(|(c, r)| RateTable::new(c.nu, r)).collect())
}

pub fn write_json<W: Write>(tables: &[RateTable], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, tables)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(n: usize, e: f64) -> ErrorReport {
        ErrorReport {
            n: Some(n),
            h: 1.0 / n as f64,
            h_max: std::f64::consts::SQRT_2 / n as f64,
            nu: 0.1,
            dofs: 0,
            l2_u: e * e * e,
            h1_u: e * e,
            l2_p: e,
            linf_div: 0.0,
            multiplier_error: 0.0,
            pressure_mean: 0.0,
            multiplier_mean: 0.0,
            max_delta_ratio: 0.0,
            residual: 0.0,
        }
    }

    #[test]
    fn rates_of_pure_powers() {
        let t = RateTable::new(0.1, vec![report(8, 1.0), report(16, 0.5), report(32, 0.25)]);
        assert!(t.rates[0].is_none());
        let r = t.final_rate().unwrap();
        assert!((r.l2_u - 3.0).abs() < 1e-12 && (r.h1_u - 2.0).abs() < 1e-12 && (r.l2_p - 1.0).abs() < 1e-12);
        let r3 = t.three_level_rate().unwrap();
        assert!((r3.l2_u - 3.0).abs() < 1e-12);
    }

    #[test]
    fn no_rate_without_halving() {
        let t = RateTable::new(0.1, vec![report(8, 1.0), report(12, 0.5)]);
        assert!(t.final_rate().is_none());
        assert!(t.three_level_rate().is_none());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let t = RateTable::new(0.1, vec![report(8, 1.0), report(16, 0.5)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("n,h,dofs,l2_u,h1_u,l2_p,linf_div,max_delta_ratio,rate_l2_u"));
        assert!(lines[1].contains(",,"));
    }

    #[test]
    fn study_matches_separate_runs() {
        let dom = LevelSetDomain::star();
        let opts = DiscretizationOptions::default();
        let cases = [
            ManufacturedCase::stream_function(1e-1).unwrap(),
            ManufacturedCase::stream_function(1e-4).unwrap(),
        ];
        let tables = run_study(&dom, &[6, 12], &cases, &opts).unwrap();
        for (t, case) in tables.iter().zip(&cases) {
            let single = run_convergence(&dom, &[6, 12], case, &opts).unwrap();
            for (a, b) in t.rows.iter().zip(&single.rows) {
                assert_eq!(a.nu, case.nu);
                assert!((a.l2_u - b.l2_u).abs() <= 1e-8 * b.l2_u);
                assert!((a.l2_p - b.l2_p).abs() <= 1e-8 * b.l2_p);
            }
        }
        let bad = run_study(&dom, &[6, 0], &cases, &opts).unwrap_err();
        assert!(matches!(bad, Error::Level { n: 0, .. }));
    }
}
