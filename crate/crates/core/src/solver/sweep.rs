//! Solves along a straight path in the ρ-plane.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::coupling::RhoVector;
use crate::degree::{self, DegreeError};
use crate::exact::{self, Rational};
use crate::torus::ScalarField;

use super::{energy, local_masses, reconstruct_original, solve_from, SolveConfig, SolveError, TorusSystem};

/// `ρ(t) = (1 − t)·from + t·to`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPath {
    pub from: RhoVector,
    pub to: RhoVector,
}

impl SweepPath {
    pub fn at(&self, t: &Rational) -> Result<RhoVector, SolveError> {
        Ok(RhoVector::lerp(&self.from, &self.to, t)?)
    }

    /// `steps` equally spaced parameters `t = 1/steps, …, 1`, or
    /// `0, …, 1` when `include_start` is set.
    pub fn uniform_grid(steps: usize, include_start: bool) -> Vec<Rational> {
        let steps = steps.max(1) as i64;
        if include_start {
            let denom = (steps - 1).max(1);
            (0..steps).map(|i| exact::ratio(i, denom)).collect()
        } else {
            (1..=steps).map(|i| exact::ratio(i, steps)).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Each step starts from the last converged solution.
    WarmStart,
    /// Each step starts from zero; steps run in parallel.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionLabel {
    Region(usize),
    OnCriticalSet(usize),
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegionLabel::Region(k) => write!(f, "{k}"),
            RegionLabel::OnCriticalSet(k) => write!(f, "Gamma_{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub t: Rational,
    pub rho: [f64; 2],
    pub region: RegionLabel,
    pub converged: bool,
    /// `NaN` when no solve was attempted.
    pub residual: f64,
    pub max_u: [f64; 2],
    pub energy: Option<f64>,
    /// `[σ_1l, σ_2l]` per singular point, for converged steps.
    pub sigma: Vec<[f64; 2]>,
    /// `∫h_i* e^{u_i*}` after reconstruction, for converged steps.
    pub reconstructed_mass: Option<[f64; 2]>,
}

/// Runs one solve per parameter in `grid`. Steps on the critical set are
/// recorded without solving; failed solves are recorded, not returned.
pub fn sweep(
    system: &TorusSystem,
    path: &SweepPath,
    grid: &[Rational],
    config: &SolveConfig,
    mode: SweepMode,
) -> Result<Vec<SweepRecord>, SolveError> {
    config.validate()?;
    let rhos = grid
        .iter()
        .map(|t| path.at(t))
        .collect::<Result<Vec<_>, _>>()?;
    match mode {
        SweepMode::WarmStart => {
            let mut warm: Option<[ScalarField; 2]> = None;
            let mut out = Vec::with_capacity(grid.len());
            for (t, rho) in grid.iter().zip(&rhos) {
                let (record, solution) = step(system, t, rho, config, warm.as_ref())?;
                if solution.is_some() {
                    warm = solution;
                }
                out.push(record);
            }
            Ok(out)
        }
        SweepMode::Independent => grid
            .par_iter()
            .zip(rhos.par_iter())
            .map(|(t, rho)| step(system, t, rho, config, None).map(|(r, _)| r))
            .collect(),
    }
}

fn step(
    system: &TorusSystem,
    t: &Rational,
    rho: &RhoVector,
    config: &SolveConfig,
    warm: Option<&[ScalarField; 2]>,
) -> Result<(SweepRecord, Option<[ScalarField; 2]>), SolveError> {
    let mut record = SweepRecord {
        t: t.clone(),
        rho: rho.to_f64(),
        region: RegionLabel::Region(0),
        converged: false,
        residual: f64::NAN,
        max_u: [f64::NAN; 2],
        energy: None,
        sigma: Vec::new(),
        reconstructed_mass: None,
    };
    match degree::classify(&system.matrix, rho, &system.profile) {
        Ok(c) => record.region = RegionLabel::Region(c.k),
        Err(DegreeError::OnCriticalSet { k, .. }) => {
            record.region = RegionLabel::OnCriticalSet(k);
            return Ok((record, None));
        }
        Err(e) => return Err(e.into()),
    }
    match solve_from(system, rho, config, warm) {
        Ok(sol) => {
            record.converged = true;
            record.residual = sol.residual;
            record.max_u = sol.max_abs();
            record.energy = energy(&sol.u, sol.rho, system).ok();
            record.sigma = local_masses(&sol, system, config.ball_radius)?
                .points
                .iter()
                .map(|p| p.sigma)
                .collect();
            let rec = reconstruct_original(&sol, system)?;
            record.reconstructed_mass = Some([0, 1].map(|i| {
                crate::torus::quadrature(&system.hstar[i].zip_with(&rec[i], |h, v| h * v.exp()))
            }));
            Ok((record, Some(sol.u)))
        }
        Err(SolveError::NonConvergence { residual, last, .. }) => {
            record.residual = residual;
            record.max_u = [last[0].max_norm(), last[1].max_norm()];
            Ok((record, None))
        }
        Err(SolveError::VanishingNormalization { .. }) => Ok((record, None)),
        Err(e) => Err(e),
    }
}

fn csv_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

/// Writes the records as CSV with one σ pair per singular point.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], points: usize, mut out: W) -> io::Result<()> {
    let mut header = String::from("t,rho1,rho2,region,converged,residual,max_u1,max_u2,J");
    for l in 1..=points {
        header.push_str(&format!(",sigma_1{l},sigma_2{l}"));
    }
    writeln!(out, "{header}")?;
    for r in records {
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{}",
            exact::to_f64(&r.t),
            csv_float(r.rho[0]),
            csv_float(r.rho[1]),
            r.region,
            r.converged,
            csv_float(r.residual),
            csv_float(r.max_u[0]),
            csv_float(r.max_u[1]),
            r.energy.map(csv_float).unwrap_or_default(),
        );
        for l in 0..points {
            match r.sigma.get(l) {
                Some(s) => line.push_str(&format!(",{},{}", csv_float(s[0]), csv_float(s[1]))),
                None => line.push_str(",,"),
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
