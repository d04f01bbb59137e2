//! `unfitted-stokes`: convergence studies and single solves for the
//! boundary-corrected Scott-Vogelius discretization on unfitted meshes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{parse_center, parse_domain, parse_format, parse_list, RunConfig, OUT_DIR_ENV};

#[derive(Parser, Debug)]
#[command(name = "unfitted-stokes", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    args: CommonArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every level for every viscosity and tabulate errors and rates (default).
    Converge,
    /// Solve on a single background resolution.
    Solve {
        /// Background cells per side.
        #[arg(short, long, default_value_t = 16)]
        n: usize,
    },
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// star, circle or box.
    #[arg(long, global = true)]
    domain: Option<String>,
    /// Circle radius.
    #[arg(long, global = true, allow_hyphen_values = true)]
    radius: Option<f64>,
    /// Circle center as `x,y`.
    #[arg(long, global = true)]
    center: Option<String>,
    /// Comma-separated background resolutions.
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Comma-separated viscosities.
    #[arg(long, global = true)]
    nu: Option<String>,
    /// Nitsche penalty.
    #[arg(long, global = true, allow_hyphen_values = true)]
    sigma: Option<f64>,
    /// Degree integrated exactly by the volume rule.
    #[arg(long, global = true)]
    quad_volume: Option<usize>,
    /// Gauss points per boundary edge.
    #[arg(long, global = true)]
    quad_edge: Option<usize>,
    /// Output directory. Overridden by UNFITTED_STOKES_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, json or both.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write the solution as legacy VTK.
    #[arg(long, global = true)]
    vtk: bool,
    /// Write the transfer-length diagnostic per level.
    #[arg(long, global = true)]
    check_assumption: bool,
    /// Estimate the discrete inf-sup constant (small meshes only).
    #[arg(long, global = true)]
    infsup: bool,
    /// Write the assembled system in MatrixMarket format.
    #[arg(long, global = true)]
    dump_matrix: bool,
    /// Run assembly and factorization on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(d) = &self.domain {
            cfg.domain = parse_domain(d)?;
        }
        if let Some(r) = self.radius {
            cfg.radius = r;
        }
        if let Some(c) = &self.center {
            cfg.center = parse_center(c)?;
        }
        if let Some(l) = &self.levels {
            cfg.levels = parse_list(l)?;
        }
        if let Some(n) = &self.nu {
            cfg.nu = parse_list(n)?;
        }
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        if let Some(q) = self.quad_volume {
            cfg.quad_volume = q;
        }
        if let Some(q) = self.quad_edge {
            cfg.quad_edge = q;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(f) = &self.format {
            cfg.format = parse_format(f)?;
        }
        cfg.vtk |= self.vtk;
        cfg.check_assumption |= self.check_assumption;
        cfg.infsup |= self.infsup;
        cfg.dump_matrix |= self.dump_matrix;
        cfg.sequential |= self.sequential;
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.out = PathBuf::from(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.args.resolve().and_then(|cfg| match cli.command {
        None | Some(Command::Converge) => run::converge(&cfg),
        Some(Command::Solve { n }) => run::solve(&cfg, n),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
