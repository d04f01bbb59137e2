//! Sparse storage and the direct saddle-point solver.

pub mod direct;
pub mod sparse;

pub use direct::{set_parallel, solve_linear, LuFactorization, RESIDUAL_TOLERANCE};
pub use sparse::{norm2, CsrMatrix, TripletList};

use serde::Serialize;

use crate::assembly::{
    apply_gauge_rhs, assemble_rhs, assemble_system, Discretization, PressureGauge, SaddleSystem, StokesData,
};
use crate::error::{Error, Result};
use crate::fem::DofLayout;

/// Solution of the augmented system split into its fields.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionFields {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub multiplier: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Relative residual `|Ax - b| / |b|`.
    pub residual: f64,
}

pub fn solve_direct(system: &SaddleSystem) -> Result<SolutionFields> {
    let (x, residual) = solve_linear(&system.matrix, &system.rhs)?;
    Ok(split_solution(
        &system.layout,
        system.gauge,
        &system.pressure_weights,
        &x,
        residual,
    ))
}

fn split_solution(
    l: &DofLayout,
    gauge: PressureGauge,
    pressure_weights: &[f64],
    x: &[f64],
    residual: f64,
) -> SolutionFields {
    let mut fields = SolutionFields {
        velocity: x[..l.velocity_len()].to_vec(),
        pressure: x[l.pressure_offset()..l.multiplier_offset()].to_vec(),
        multiplier: x[l.multiplier_offset()..l.alpha()].to_vec(),
        alpha: x[l.alpha()],
        beta: x[l.beta()],
        gamma: x[l.gamma()],
        residual,
    };
    if gauge == PressureGauge::Pinned {
        // (p + c, gamma + c) leaves every row but the pin unchanged.
        let area: f64 = pressure_weights.iter().sum();
        let mean = fields
            .pressure
            .iter()
            .zip(pressure_weights)
            .map(|(p, w)| p * w)
            .sum::<f64>()
            / area;
        fields.pressure.iter_mut().for_each(|p| *p -= mean);
        fields.gamma -= mean;
    }
    fields
}

const MAX_REFINEMENT_STEPS: usize = 5;

/// One factorization per discretization, reused for every viscosity.
///
/// `nu` only scales `a_h`, so the system for `nu` is `R A_1 C` where `A_1` is
/// the unit-viscosity matrix, `C` divides the pressure, multiplier and flux
/// unknowns by `nu` and `R` multiplies by `nu` the momentum rows and the
/// homogeneous rows that only see those unknowns.
pub struct StokesSolver<'a> {
    disc: &'a Discretization,
    system: SaddleSystem,
    lu: LuFactorization,
}

impl<'a> StokesSolver<'a> {
    pub fn new(disc: &'a Discretization) -> Result<Self> {
        let system = assemble_system(disc, 1.0, &StokesData::homogeneous())?;
        let lu = LuFactorization::new(&system.matrix)?;
        Ok(Self { disc, system, lu })
    }

    /// The unit-viscosity system with zero right-hand side.
    pub fn unit_system(&self) -> &SaddleSystem {
        &self.system
    }

    /// Rows besides the momentum rows that only involve unknowns divided by
    /// `nu`: the multiplier mean, and the pressure pin or pressure mean.
    fn scaled_rows(&self) -> Vec<usize> {
        let l = self.disc.layout();
        match self.system.gauge {
            PressureGauge::Pinned => vec![l.pressure_offset(), l.beta()],
            PressureGauge::MeanMultiplier => vec![l.alpha(), l.beta()],
        }
    }

    pub fn solve(&self, nu: f64, data: &StokesData) -> Result<SolutionFields> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("viscosity must be positive, got {nu}")));
        }
        let l = self.disc.layout();
        let gauge = self.system.gauge;
        let mut rhs = assemble_rhs(self.disc, nu, data)?;
        apply_gauge_rhs(l, gauge, &mut rhs);
        let b_norm = norm2(&rhs);
        let scaled = self.scaled_rows();
        let unscale = |v: &mut [f64], f: f64| {
            v[..l.velocity_len()].iter_mut().for_each(|x| *x *= f);
            scaled.iter().for_each(|&i| v[i] *= f);
        };
        unscale(&mut rhs, 1.0 / nu);

        // Refinement is driven by the residual of the viscosity-nu system;
        // the unit-system residual under-weights the divergence rows when
        // the scaled unknowns carry p / nu.
        let residual_of = |x: &[f64]| -> (Vec<f64>, f64) {
            let mut r: Vec<f64> = self
                .system
                .matrix
                .mul_vec(x)
                .iter()
                .zip(&rhs)
                .map(|(a, b)| b - a)
                .collect();
            unscale(&mut r, nu);
            let norm = norm2(&r);
            (r, norm)
        };
        let mut x = self.lu.solve_once(&rhs);
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix(format!("non-finite solution component {i}")));
        }
        let (mut r, mut r_norm) = residual_of(&x);
        for _ in 0..MAX_REFINEMENT_STEPS {
            if r_norm == 0.0 {
                break;
            }
            unscale(&mut r, 1.0 / nu);
            let dx = self.lu.solve_once(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(x, d)| x + d).collect();
            let (cr, cn) = residual_of(&candidate);
            if !(cn < r_norm) {
                break;
            }
            x = candidate;
            r = cr;
            r_norm = cn;
        }
        let residual = if b_norm == 0.0 { 0.0 } else { r_norm / b_norm };
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(Error::ResidualTooLarge {
                residual,
                tolerance: RESIDUAL_TOLERANCE,
            });
        }
        x[l.pressure_offset()..l.alpha()].iter_mut().for_each(|v| *v *= nu);
        x[l.gamma()] *= nu;
        Ok(split_solution(l, gauge, &self.system.pressure_weights, &x, residual))
    }
}
