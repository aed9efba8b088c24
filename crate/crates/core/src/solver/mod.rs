//! Numerical solution of the regularized system on the unit flat torus
//!
//! ```text
//! Δu_i + Σ_j a_ij ρ_j (h_j e^{u_j} / ∫h_j e^{u_j} − 1) = 0,   ∫u_i = 0,
//! ```
//!
//! obtained from the singular system by absorbing the Dirac sources into
//! the weights `h_j`. Solutions are fixed points of
//! `T_ρ(u)_i = (−Δ)⁻¹ Σ_j a_ij ρ_j (h_j e^{u_j} / ∫h_j e^{u_j} − 1)`.
//!
//! [`solve`] runs damped Picard iteration on `T_ρ` and hands over to a
//! matrix-free Newton–Krylov method on `F(u) = u − T_ρ(u)` once the
//! residual is small or the iteration stalls.

mod diagnostics;
mod krylov;
mod sweep;

pub use diagnostics::{
    energy, local_masses, reconstruct_original, symmetrized_residual, LocalMass, LocalMassReport,
};
pub use krylov::{gmres, GmresOutcome};
pub use sweep::{sweep, write_sweep_csv, RegionLabel, SweepMode, SweepPath, SweepRecord};

use std::f64::consts::PI;

use crate::coupling::{CouplingError, CouplingMatrix, RhoVector};
use crate::degree::{self, DegreeError, SingularProfile};
use crate::torus::{self, FieldError, ScalarField, TorusGrid, Weights};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("normalization integral of component {component} vanished or overflowed")]
    VanishingNormalization { component: usize },
    #[error("balls of radius {radius} around singular points {first} and {second} overlap")]
    OverlappingBalls {
        first: usize,
        second: usize,
        radius: f64,
    },
    #[error("no convergence: residual {residual:e} after {} iterations", .history.len())]
    NonConvergence {
        residual: f64,
        history: Vec<f64>,
        last: Box<[ScalarField; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Grid points per axis.
    pub grid: usize,
    /// Picard damping ω in `u ← (1 − ω)u + ωT(u)`.
    pub damping: f64,
    pub max_iterations: usize,
    /// Target for `‖u − T(u)‖∞`.
    pub tolerance: f64,
    /// Picard hands over to Newton below this residual.
    pub newton_threshold: f64,
    pub max_newton_steps: usize,
    pub gmres_restart: usize,
    /// Fourier truncation of the Green's function; `None` means `2n`.
    pub truncation: Option<usize>,
    /// Radius of the balls used for local masses.
    pub ball_radius: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            grid: 128,
            damping: 0.5,
            max_iterations: 2000,
            tolerance: 1e-10,
            newton_threshold: 1e-4,
            max_newton_steps: 40,
            gmres_restart: 40,
            truncation: None,
            ball_radius: 0.125,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.to_string()));
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(self.ball_radius > 0.0 && self.ball_radius < 0.25) {
            return bad("ball radius must lie in (0, 1/4)");
        }
        if self.gmres_restart == 0 {
            return bad("GMRES restart length must be positive");
        }
        if self.grid < 16 {
            return bad("grid must have at least 16 points per axis");
        }
        Ok(())
    }

    pub fn truncation(&self) -> usize {
        self.truncation.unwrap_or_else(|| torus::default_truncation(self.grid))
    }
}

/// Smooth positive reference weights `h*`.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceWeight {
    Constant(f64),
    /// `1 + amplitude · cos(2π(k1·x1 + k2·x2))`, with `|amplitude| < 1`.
    Cosine { amplitude: f64, wavevector: [i32; 2] },
}

impl ReferenceWeight {
    pub fn sample(&self, grid: &TorusGrid) -> ScalarField {
        match *self {
            ReferenceWeight::Constant(c) => ScalarField::constant(grid, c),
            ReferenceWeight::Cosine {
                amplitude,
                wavevector: [k1, k2],
            } => ScalarField::from_fn(grid, |x| {
                1.0 + amplitude * (2.0 * PI * (k1 as f64 * x[0] + k2 as f64 * x[1])).cos()
            }),
        }
    }
}

/// Everything about a problem except ρ: the coupling matrix, the singular
/// profile and the weights sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSystem {
    pub matrix: CouplingMatrix,
    pub profile: SingularProfile,
    pub hstar: [ScalarField; 2],
    pub weights: Weights,
}

impl TorusSystem {
    pub fn new(
        matrix: CouplingMatrix,
        profile: SingularProfile,
        hstar: [ReferenceWeight; 2],
        config: &SolveConfig,
    ) -> Result<Self, SolveError> {
        config.validate()?;
        let grid = TorusGrid::new(config.grid)?;
        let fields = [hstar[0].sample(&grid), hstar[1].sample(&grid)];
        Self::from_fields(matrix, profile, fields, config.truncation())
    }

    pub fn from_fields(
        matrix: CouplingMatrix,
        profile: SingularProfile,
        hstar: [ScalarField; 2],
        truncation: usize,
    ) -> Result<Self, SolveError> {
        matrix.ensure_hypothesis()?;
        let grid = hstar[0].grid().clone();
        let weights = torus::build_weights([&hstar[0], &hstar[1]], &profile, &grid, truncation)?;
        Ok(Self {
            matrix,
            profile,
            hstar,
            weights,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        self.hstar[0].grid()
    }

    /// Grid positions the singular points were snapped to.
    pub fn singular_nodes(&self) -> Vec<[f64; 2]> {
        self.weights
            .singular
            .nodes
            .iter()
            .map(|&(i, j)| self.grid().node(i, j))
            .collect()
    }
}

/// Normalized densities `h_j e^{u_j} / ∫h_j e^{u_j}` and the integrals.
pub(crate) struct Densities {
    pub w: [ScalarField; 2],
    pub log_normalization: [f64; 2],
}

pub(crate) fn densities(u: &[ScalarField; 2], h: &[ScalarField; 2]) -> Result<Densities, SolveError> {
    let mut w = Vec::with_capacity(2);
    let mut log_normalization = [0.0; 2];
    for j in 0..2 {
        let top = u[j].max();
        let e = h[j].zip_with(&u[j], |hv, uv| hv * (uv - top).exp());
        let z = torus::quadrature(&e);
        if !(z > 0.0 && z.is_finite()) {
            return Err(SolveError::VanishingNormalization { component: j + 1 });
        }
        log_normalization[j] = z.ln() + top;
        w.push(e.scale(1.0 / z));
    }
    let w: [ScalarField; 2] = w.try_into().expect("two components");
    Ok(Densities {
        w,
        log_normalization,
    })
}

fn source_terms(dens: &Densities, rho: [f64; 2], a: [[f64; 2]; 2]) -> [ScalarField; 2] {
    let grid = dens.w[0].grid();
    let excess: Vec<ScalarField> = (0..2)
        .map(|j| dens.w[j].map(|v| rho[j] * (v - 1.0)))
        .collect();
    [0, 1].map(|i| {
        ScalarField::zeros(grid)
            .axpy(a[i][0], &excess[0])
            .axpy(a[i][1], &excess[1])
    })
}

/// `T_ρ(u)`, componentwise.
pub fn fixed_point_map(
    u: &[ScalarField; 2],
    rho: [f64; 2],
    a: [[f64; 2]; 2],
    h: &[ScalarField; 2],
) -> Result<[ScalarField; 2], SolveError> {
    let dens = densities(u, h)?;
    let src = source_terms(&dens, rho, a);
    Ok([
        torus::inv_laplacian_unchecked(&src[0]),
        torus::inv_laplacian_unchecked(&src[1]),
    ])
}

fn max_diff(u: &[ScalarField; 2], v: &[ScalarField; 2]) -> f64 {
    (0..2)
        .map(|i| u[i].zip_with(&v[i], |a, b| a - b).max_norm())
        .fold(0.0, f64::max)
}

/// `‖u − T_ρ(u)‖∞` over both components.
pub fn residual(
    u: &[ScalarField; 2],
    rho: [f64; 2],
    a: [[f64; 2]; 2],
    h: &[ScalarField; 2],
) -> Result<f64, SolveError> {
    let t = fixed_point_map(u, rho, a, h)?;
    Ok(max_diff(u, &t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub u: [ScalarField; 2],
    /// `∫h_i e^{u_i}`.
    pub normalization: [f64; 2],
    pub residual: f64,
    /// Residual after every Picard or Newton step, starting with the
    /// initial iterate.
    pub history: Vec<f64>,
    pub picard_iterations: usize,
    pub newton_steps: usize,
    pub rho: [f64; 2],
}

impl SolutionPair {
    pub fn max_abs(&self) -> [f64; 2] {
        [self.u[0].max_norm(), self.u[1].max_norm()]
    }
}

fn flatten(u: &[ScalarField; 2]) -> Vec<f64> {
    let mut v = u[0].values().to_vec();
    v.extend_from_slice(u[1].values());
    v
}

fn unflatten(grid: &TorusGrid, v: &[f64]) -> [ScalarField; 2] {
    let (a, b) = v.split_at(grid.len());
    [
        ScalarField::from_values(grid, a.to_vec()).project_mean_zero(),
        ScalarField::from_values(grid, b.to_vec()).project_mean_zero(),
    ]
}

/// Action of `I − T_ρ'(u)` on a pair of mean-zero directions.
fn jacobian_apply(
    dens: &Densities,
    rho: [f64; 2],
    a: [[f64; 2]; 2],
    grid: &TorusGrid,
    v: &[f64],
) -> Vec<f64> {
    let dirs = unflatten(grid, v);
    // d(w_j)[v_j] = w_j (v_j − ∫w_j v_j)
    let dw: Vec<ScalarField> = (0..2)
        .map(|j| {
            let wv = dens.w[j].zip_with(&dirs[j], |w, x| w * x);
            let mean = torus::quadrature(&wv);
            dens.w[j].zip_with(&dirs[j], |w, x| rho[j] * w * (x - mean))
        })
        .collect();
    let mut out = Vec::with_capacity(v.len());
    for i in 0..2 {
        let src = ScalarField::zeros(grid)
            .axpy(a[i][0], &dw[0])
            .axpy(a[i][1], &dw[1]);
        let t = torus::inv_laplacian_unchecked(&src);
        out.extend(dirs[i].values().iter().zip(t.values()).map(|(x, y)| x - y));
    }
    out
}

struct Iterate {
    u: [ScalarField; 2],
    t: [ScalarField; 2],
    residual: f64,
}

fn evaluate(u: [ScalarField; 2], rho: [f64; 2], a: [[f64; 2]; 2], h: &[ScalarField; 2]) -> Result<Iterate, SolveError> {
    let t = fixed_point_map(&u, rho, a, h)?;
    let residual = max_diff(&u, &t);
    Ok(Iterate { u, t, residual })
}

/// Solves from `u = (0, 0)`.
pub fn solve(
    system: &TorusSystem,
    rho: &RhoVector,
    config: &SolveConfig,
) -> Result<SolutionPair, SolveError> {
    solve_from(system, rho, config, None)
}

/// Solves from a given initial iterate (warm start) or from zero.
pub fn solve_from(
    system: &TorusSystem,
    rho: &RhoVector,
    config: &SolveConfig,
    initial: Option<&[ScalarField; 2]>,
) -> Result<SolutionPair, SolveError> {
    config.validate()?;
    degree::classify(&system.matrix, rho, &system.profile)?;
    let grid = system.grid().clone();
    let rho_f = rho.to_f64();
    let a = system.matrix.to_f64();
    let h = &system.weights.h;

    let start = match initial {
        Some(u) => [u[0].project_mean_zero(), u[1].project_mean_zero()],
        None => [ScalarField::zeros(&grid), ScalarField::zeros(&grid)],
    };
    let mut cur = evaluate(start, rho_f, a, h)?;
    let mut history = vec![cur.residual];
    let mut picard_iterations = 0;

    // Picard phase, keeping the best iterate seen
    let mut best = (cur.residual, cur.u.clone());
    let window = 25;
    let mut window_start = cur.residual;
    let omega = config.damping;
    while cur.residual > config.tolerance
        && cur.residual > config.newton_threshold
        && picard_iterations < config.max_iterations
    {
        let next = [
            cur.u[0].scale(1.0 - omega).axpy(omega, &cur.t[0]),
            cur.u[1].scale(1.0 - omega).axpy(omega, &cur.t[1]),
        ];
        cur = match evaluate(next, rho_f, a, h) {
            Ok(it) if it.residual.is_finite() => it,
            _ => break,
        };
        picard_iterations += 1;
        history.push(cur.residual);
        if cur.residual < best.0 {
            best = (cur.residual, cur.u.clone());
        }
        if cur.residual > 1e3 * best.0 {
            break;
        }
        if picard_iterations % window == 0 {
            if best.0 > 0.9 * window_start {
                break;
            }
            window_start = best.0;
        }
    }
    if cur.residual > best.0 {
        cur = evaluate(best.1, rho_f, a, h)?;
    }

    // Newton–Krylov phase
    let mut newton_steps = 0;
    while cur.residual > config.tolerance && newton_steps < config.max_newton_steps {
        let dens = densities(&cur.u, h)?;
        let f: Vec<f64> = flatten(&cur.u)
            .iter()
            .zip(flatten(&cur.t))
            .map(|(u, t)| t - u)
            .collect();
        let forcing = (0.1 * cur.residual).clamp(1e-13, 1e-2);
        let step = krylov::gmres(
            |v| jacobian_apply(&dens, rho_f, a, &grid, v),
            &f,
            forcing,
            config.gmres_restart,
            10 * config.gmres_restart,
        );
        let delta = unflatten(&grid, &step.x);
        newton_steps += 1;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial = [
                cur.u[0].axpy(alpha, &delta[0]),
                cur.u[1].axpy(alpha, &delta[1]),
            ];
            if let Ok(it) = evaluate(trial, rho_f, a, h) {
                if it.residual.is_finite() && it.residual < (1.0 - 1e-4 * alpha) * cur.residual {
                    accepted = Some(it);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(it) => {
                cur = it;
                history.push(cur.residual);
            }
            None => break,
        }
    }

    if cur.residual > config.tolerance {
        return Err(SolveError::NonConvergence {
            residual: cur.residual,
            history,
            last: Box::new(cur.u),
        });
    }
    let dens = densities(&cur.u, h)?;
    Ok(SolutionPair {
        normalization: dens.log_normalization.map(f64::exp),
        residual: cur.residual,
        u: cur.u,
        history,
        picard_iterations,
        newton_steps,
        rho: rho_f,
    })
}
