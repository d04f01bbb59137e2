//! Run configuration: defaults, an optional `key = value` file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use unfitted_stokes::geometry::{BoundingBox, Point};
use unfitted_stokes::LevelSetDomain;

/// Output directory override, applied after the config file and flags.
pub const OUT_DIR_ENV: &str = "UNFITTED_STOKES_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainKind {
    Star,
    Circle,
    Box,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub domain: DomainKind,
    pub radius: f64,
    pub center: [f64; 2],
    pub levels: Vec<usize>,
    pub nu: Vec<f64>,
    pub sigma: f64,
    pub quad_volume: usize,
    pub quad_edge: usize,
    pub out: PathBuf,
    pub format: Format,
    pub vtk: bool,
    pub check_assumption: bool,
    pub infsup: bool,
    pub dump_matrix: bool,
    pub sequential: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainKind::Star,
            radius: 0.3,
            center: [0.5, 0.5],
            levels: vec![8, 16, 32, 64, 128],
            nu: vec![1e-1, 1e-3, 1e-5],
            sigma: 40.0,
            quad_volume: 6,
            quad_edge: 6,
            out: PathBuf::from("results"),
            format: Format::Both,
            vtk: false,
            check_assumption: false,
            infsup: false,
            dump_matrix: false,
            sequential: false,
        }
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().with_context(|| format!("bad list entry {t:?}")))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("expected a boolean, got {s:?}"),
    }
}

pub fn parse_domain(s: &str) -> Result<DomainKind> {
    match s {
        "star" => Ok(DomainKind::Star),
        "circle" => Ok(DomainKind::Circle),
        "box" => Ok(DomainKind::Box),
        _ => bail!("unknown domain {s:?} (expected star, circle or box)"),
    }
}

pub fn parse_format(s: &str) -> Result<Format> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        "both" => Ok(Format::Both),
        _ => bail!("unknown format {s:?} (expected csv, json or both)"),
    }
}

pub fn parse_center(s: &str) -> Result<[f64; 2]> {
    match parse_list::<f64>(s)?.as_slice() {
        &[x, y] => Ok([x, y]),
        _ => bail!("center must be two comma-separated numbers, got {s:?}"),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting. Keys match the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "domain" => self.domain = parse_domain(v)?,
            "radius" => self.radius = v.parse()?,
            "center" => self.center = parse_center(v)?,
            "levels" => self.levels = parse_list(v)?,
            "nu" => self.nu = parse_list(v)?,
            "sigma" => self.sigma = v.parse()?,
            "quad-volume" => self.quad_volume = v.parse()?,
            "quad-edge" => self.quad_edge = v.parse()?,
            "out" => self.out = PathBuf::from(v),
            "format" => self.format = parse_format(v)?,
            "vtk" => self.vtk = parse_bool(v)?,
            "check-assumption" => self.check_assumption = parse_bool(v)?,
            "infsup" => self.infsup = parse_bool(v)?,
            "dump-matrix" => self.dump_matrix = parse_bool(v)?,
            "sequential" => self.sequential = parse_bool(v)?,
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected key = value", path.display(), i + 1))?;
            self.set(k, v)
                .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            bail!("sigma must be positive, got {}", self.sigma);
        }
        if self.nu.is_empty() || self.nu.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
            bail!("viscosities must be positive, got {:?}", self.nu);
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            bail!("levels must be positive integers, got {:?}", self.levels);
        }
        if self.domain == DomainKind::Circle && !(self.radius > 0.0) {
            bail!("radius must be positive, got {}", self.radius);
        }
        Ok(())
    }

    pub fn level_set_domain(&self) -> Result<LevelSetDomain> {
        Ok(match self.domain {
            DomainKind::Star => LevelSetDomain::star(),
            DomainKind::Circle => LevelSetDomain::circle(Point::new(self.center[0], self.center[1]), self.radius)?,
            DomainKind::Box => LevelSetDomain::rectangle(BoundingBox::unit()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_settings_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(
            &path,
            "# study\ndomain = circle\nradius=0.4 \nlevels = 4, 8\nnu = 1e-2\nvtk = yes\n",
        )
        .unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.domain, DomainKind::Circle);
        assert_eq!(cfg.radius, 0.4);
        assert_eq!(cfg.levels, vec![4, 8]);
        assert_eq!(cfg.nu, vec![1e-2]);
        assert!(cfg.vtk);
        assert_eq!(cfg.sigma, 40.0);
    }

    #[test]
    fn bad_settings_are_reported() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("levels", "8,x").is_err());
        assert!(cfg.set("colour", "red").is_err());
        assert!(cfg.set("center", "0.5").is_err());
        cfg.sigma = -1.0;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            nu: vec![0.1, 0.0],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
