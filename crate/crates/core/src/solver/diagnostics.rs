//! Post-processing of converged solutions.

use std::f64::consts::PI;

use crate::coupling::RankClass;
use crate::exact;
use crate::torus::{self, periodic_distance, ScalarField};

use super::{densities, fixed_point_map, max_diff, SolutionPair, SolveError, TorusSystem};

/// Local masses at one singular point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMass {
    pub position: [f64; 2],
    /// `1 + γ_l`.
    pub mu: f64,
    /// `[σ_1l, σ_2l]`; the first entry carries the factor `a21/a12`.
    pub sigma: [f64; 2],
    /// `Σ b_ij σ_il σ_jl − 4μ_l Σ σ_il`. Only meaningful near blow-up.
    pub pohozaev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMassReport {
    pub radius: f64,
    pub points: Vec<LocalMass>,
    /// Upper bounds for `Σ_l σ_il`: `(a21/a12)ρ1/2π` and `ρ2/2π`.
    pub totals: [f64; 2],
    /// For a singular `A`, the constant `C` in `u1 = u2 + C`, estimated as
    /// the mean of `u1 − u2`.
    pub degenerate_constant: Option<f64>,
}

/// Ball masses of the normalized densities around every singular point.
///
/// Balls are centred on the grid nodes the points were snapped to and must
/// be pairwise disjoint.
pub fn local_masses(
    solution: &SolutionPair,
    system: &TorusSystem,
    radius: f64,
) -> Result<LocalMassReport, SolveError> {
    let nodes = system.singular_nodes();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if periodic_distance(nodes[i], nodes[j]) < 2.0 * radius {
                return Err(SolveError::OverlappingBalls {
                    first: i + 1,
                    second: j + 1,
                    radius,
                });
            }
        }
    }
    let sym = system.matrix.symmetrize()?;
    let scale = exact::to_f64(&sym.mass_scale);
    let b = [
        [exact::to_f64(&sym.b11), exact::to_f64(&sym.b12)],
        [exact::to_f64(&sym.b12), exact::to_f64(&sym.b22)],
    ];
    let dens = densities(&solution.u, &system.weights.h)?;
    let rho = solution.rho;
    let factors = [scale * rho[0] / (2.0 * PI), rho[1] / (2.0 * PI)];

    let mut points = Vec::with_capacity(nodes.len());
    for (p, &node) in system.profile.points().iter().zip(&nodes) {
        let mut sigma = [0.0; 2];
        for i in 0..2 {
            sigma[i] = factors[i] * torus::ball_integral(&dens.w[i], node, radius)?;
        }
        let mu = exact::to_f64(&p.mass());
        let quad: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| b[i][j] * sigma[i] * sigma[j])
            .sum();
        points.push(LocalMass {
            position: node,
            mu,
            sigma,
            pohozaev: quad - 4.0 * mu * (sigma[0] + sigma[1]),
        });
    }

    let degenerate_constant = match system.matrix.rank_class()? {
        RankClass::FullRank => None,
        RankClass::DegenerateEqual => Some(1.0),
        RankClass::DegenerateProportional { a } => Some(exact::to_f64(&a)),
    }
    .map(|a| torus::quadrature(&solution.u[0].axpy(-a, &solution.u[1])));

    Ok(LocalMassReport {
        radius,
        points,
        totals: factors,
        degenerate_constant,
    })
}

/// `J_ρ(u) = ½ ∫ Σ a^{ij} ∇u_i·∇u_j − Σ ρ_i log ∫ h_i e^{u_i}`.
///
/// Solutions are critical points of `J_ρ` when `A` is symmetric.
pub fn energy(
    u: &[ScalarField; 2],
    rho: [f64; 2],
    system: &TorusSystem,
) -> Result<f64, SolveError> {
    let inv = system.matrix.inverse()?;
    let mut gradient = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            gradient += exact::to_f64(&inv[i][j]) * torus::dirichlet_form(&u[i], &u[j]);
        }
    }
    let dens = densities(u, &system.weights.h)?;
    Ok(0.5 * gradient - rho[0] * dens.log_normalization[0] - rho[1] * dens.log_normalization[1])
}

/// Fields of the original singular problem: `u_i* = u_i − 4πΣγ_l G(·, p_l) + c_i`,
/// with `c_i` chosen so that `∫ h_i* e^{u_i*} = 1` under grid quadrature.
pub fn reconstruct_original(
    solution: &SolutionPair,
    system: &TorusSystem,
) -> Result<[ScalarField; 2], SolveError> {
    let green_sum = &system.weights.singular.green_sum;
    let mut out = Vec::with_capacity(2);
    for i in 0..2 {
        let raw = solution.u[i].axpy(-1.0, green_sum);
        let top = raw.max();
        let mass = torus::quadrature(&system.hstar[i].zip_with(&raw, |h, v| h * (v - top).exp()));
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(SolveError::VanishingNormalization { component: i + 1 });
        }
        let c = -(mass.ln() + top);
        out.push(raw.map(|v| v + c));
    }
    Ok(out.try_into().expect("two components"))
}

/// Residual of a solution viewed as a solution of the symmetrized system.
///
/// Component 1 is shifted by `log(a21/a12)`, its weight divided by
/// `a21/a12` and its mass multiplied by it; the pair is then fed to the
/// fixed-point map of the symmetric matrix `B`. The shift is a constant,
/// so it is removed again before comparing.
pub fn symmetrized_residual(
    solution: &SolutionPair,
    system: &TorusSystem,
) -> Result<f64, SolveError> {
    let sym = system.matrix.symmetrize()?;
    let scale = exact::to_f64(&sym.mass_scale);
    let b = sym.matrix().map(|row| row.map(|v| exact::to_f64(&v)));
    let shifted = [
        solution.u[0].map(|v| v + sym.shift),
        solution.u[1].clone(),
    ];
    let h = [
        system.weights.h[0].scale(1.0 / scale),
        system.weights.h[1].clone(),
    ];
    let rho = [scale * solution.rho[0], solution.rho[1]];
    let t = fixed_point_map(&shifted, rho, b, &h)?;
    let gauged = [shifted[0].project_mean_zero(), shifted[1].clone()];
    Ok(max_diff(&gauged, &t))
}

#[cfg(test)]
mod tests {
    use super::super::{solve, ReferenceWeight, SolveConfig};
    use super::*;
    use crate::coupling::{CouplingMatrix, RhoVector};
    use crate::degree::{SingularPoint, SingularProfile};
    use crate::exact::{int, ratio};

    fn build(a: [[i64; 2]; 2], points: &[([f64; 2], i64)], n: usize, hstar: ReferenceWeight) -> TorusSystem {
        let profile = SingularProfile::new(
            points
                .iter()
                .map(|&(position, g)| SingularPoint {
                    position,
                    gamma: int(g),
                })
                .collect(),
        )
        .unwrap();
        TorusSystem::new(
            CouplingMatrix::from_ints(a),
            profile,
            [hstar.clone(), hstar],
            &SolveConfig {
                grid: n,
                ..SolveConfig::default()
            },
        )
        .unwrap()
    }

    fn cfg(n: usize) -> SolveConfig {
        SolveConfig {
            grid: n,
            ..SolveConfig::default()
        }
    }

    #[test]
    fn energy_vanishes_at_zero_with_unit_mass_weights() {
        let sys = build([[0, 2], [2, 0]], &[], 32, ReferenceWeight::Constant(1.0));
        let g = sys.grid().clone();
        let z = [ScalarField::zeros(&g), ScalarField::zeros(&g)];
        assert!(energy(&z, [5.0, 7.0], &sys).unwrap().abs() < 1e-15);
    }

    #[test]
    fn energy_doubling_rho_only_changes_log_term() {
        let sys = build([[1, 3], [2, 2]], &[], 32, ReferenceWeight::Constant(2.0));
        let g = sys.grid().clone();
        let u = [
            ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin()),
            ScalarField::from_fn(&g, |x| (2.0 * PI * x[1]).cos()),
        ];
        let rho = [1.5, 2.5];
        let j1 = energy(&u, rho, &sys).unwrap();
        let j2 = energy(&u, [2.0 * rho[0], 2.0 * rho[1]], &sys).unwrap();
        let logs: Vec<f64> = (0..2)
            .map(|i| torus::quadrature(&u[i].map(|v| 2.0 * v.exp())).ln())
            .collect();
        let expected = -(rho[0] * logs[0] + rho[1] * logs[1]);
        assert!((j2 - j1 - expected).abs() < 1e-12);
    }

    #[test]
    fn energy_requires_invertible_matrix() {
        let sys = build([[1, 1], [1, 1]], &[], 16, ReferenceWeight::Constant(1.0));
        let g = sys.grid().clone();
        let z = [ScalarField::zeros(&g), ScalarField::zeros(&g)];
        assert!(energy(&z, [1.0, 1.0], &sys).is_err());
    }

    #[test]
    fn solution_is_a_critical_point_of_the_energy() {
        let sys = build([[0, 2], [2, 0]], &[([0.5, 0.5], 1)], 32, ReferenceWeight::Constant(1.0));
        let rho = RhoVector::pi_multiple(int(2), int(2)).unwrap();
        let sol = solve(&sys, &rho, &cfg(32)).unwrap();
        let g = sys.grid().clone();
        let v = ScalarField::from_fn(&g, |x| (2.0 * PI * (x[0] + 2.0 * x[1])).cos());
        let eps = 1e-4;
        let dirs = [[v.clone(), ScalarField::zeros(&g)], [v.scale(0.5), v.scale(-1.0)]];
        for d in dirs {
            let plus = [sol.u[0].axpy(eps, &d[0]), sol.u[1].axpy(eps, &d[1])];
            let minus = [sol.u[0].axpy(-eps, &d[0]), sol.u[1].axpy(-eps, &d[1])];
            let fd = (energy(&plus, sol.rho, &sys).unwrap() - energy(&minus, sol.rho, &sys).unwrap())
                / (2.0 * eps);
            assert!(fd.abs() < 1e-6, "{fd}");
        }
        // and not along a generic perturbation of a non-solution
        let z = [ScalarField::zeros(&g), ScalarField::zeros(&g)];
        let plus = [z[0].axpy(eps, &v), z[1].clone()];
        let fd = (energy(&plus, sol.rho, &sys).unwrap() - energy(&z, sol.rho, &sys).unwrap()) / eps;
        assert!(fd.abs() > 1e-3);
    }

    #[test]
    fn reconstruction_without_sources_is_a_constant_shift() {
        let sys = build([[0, 2], [2, 0]], &[], 32, ReferenceWeight::Cosine {
            amplitude: 0.3,
            wavevector: [1, 0],
        });
        let rho = RhoVector::pi_multiple(int(2), int(2)).unwrap();
        let sol = solve(&sys, &rho, &cfg(32)).unwrap();
        let rec = reconstruct_original(&sol, &sys).unwrap();
        for i in 0..2 {
            let c = -sol.normalization[i].ln();
            let dev = rec[i].zip_with(&sol.u[i], |a, b| a - b - c).max_norm();
            assert!(dev < 1e-12, "{dev}");
        }
    }

    #[test]
    fn reconstruction_normalizes_and_round_trips() {
        let sys = build([[0, 2], [2, 0]], &[([0.5, 0.5], 1)], 32, ReferenceWeight::Constant(1.0));
        let rho = RhoVector::pi_multiple(int(2), int(2)).unwrap();
        let sol = solve(&sys, &rho, &cfg(32)).unwrap();
        let rec = reconstruct_original(&sol, &sys).unwrap();
        let gs = &sys.weights.singular.green_sum;
        for i in 0..2 {
            let mass = torus::quadrature(&sys.hstar[i].zip_with(&rec[i], |h, v| h * v.exp()));
            assert!((mass - 1.0).abs() < 1e-8);
            let back = rec[i].axpy(1.0, gs).axpy(-1.0, &sol.u[i]);
            let spread = back.max() + back.map(|v| -v).max();
            assert!(spread < 1e-10, "{spread}");
        }
    }

    #[test]
    fn local_masses_are_bounded_and_not_concentrated() {
        let sys = build([[0, 2], [2, 0]], &[([0.5, 0.5], 1)], 64, ReferenceWeight::Constant(1.0));
        let rho = RhoVector::pi_multiple(int(2), int(2)).unwrap();
        let sol = solve(&sys, &rho, &cfg(64)).unwrap();
        let report = local_masses(&sol, &sys, 0.125).unwrap();
        let p = &report.points[0];
        assert_eq!(p.mu, 2.0);
        for i in 0..2 {
            assert!(p.sigma[i] >= 0.0);
            assert!(p.sigma[i] < 0.1 * report.totals[i]);
        }
        assert_eq!(report.totals, [1.0, 1.0]);
        assert!(report.degenerate_constant.is_none());
    }

    #[test]
    fn symmetric_two_point_profile_splits_mass_evenly() {
        let sys = build(
            [[0, 2], [2, 0]],
            &[([0.25, 0.25], 1), ([0.75, 0.75], 1)],
            64,
            ReferenceWeight::Constant(1.0),
        );
        let rho = RhoVector::pi_multiple(ratio(3, 2), ratio(3, 2)).unwrap();
        let sol = solve(&sys, &rho, &cfg(64)).unwrap();
        let report = local_masses(&sol, &sys, 0.125).unwrap();
        let (p, q) = (&report.points[0], &report.points[1]);
        for i in 0..2 {
            let (a, b) = (p.sigma[i] / p.mu, q.sigma[i] / q.mu);
            assert!((a - b).abs() <= 0.05 * a.max(b), "{a} {b}");
        }
    }

    #[test]
    fn overlapping_balls_are_rejected() {
        let sys = build(
            [[0, 2], [2, 0]],
            &[([0.25, 0.25], 1), ([0.5, 0.25], 1)],
            32,
            ReferenceWeight::Constant(1.0),
        );
        let rho = RhoVector::pi_multiple(int(1), int(1)).unwrap();
        let sol = solve(&sys, &rho, &cfg(32)).unwrap();
        assert!(local_masses(&sol, &sys, 0.1).is_ok());
        assert!(matches!(
            local_masses(&sol, &sys, 0.15),
            Err(SolveError::OverlappingBalls { first: 1, second: 2, .. })
        ));
    }

    #[test]
    fn degenerate_constant_vanishes_in_mean_zero_gauge() {
        let sys = build([[1, 1], [1, 1]], &[([0.5, 0.5], 1)], 32, ReferenceWeight::Constant(1.0));
        let rho = RhoVector::pi_multiple(int(2), int(2)).unwrap();
        let sol = solve(&sys, &rho, &cfg(32)).unwrap();
        let c = local_masses(&sol, &sys, 0.125).unwrap().degenerate_constant.unwrap();
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn symmetrized_system_is_solved_too() {
        let sys = build([[1, 3], [2, 2]], &[([0.5, 0.5], 1)], 32, ReferenceWeight::Cosine {
            amplitude: 0.2,
            wavevector: [0, 1],
        });
        let rho = RhoVector::pi_multiple(ratio(1, 2), ratio(1, 2)).unwrap();
        let config = cfg(32);
        let sol = solve(&sys, &rho, &config).unwrap();
        let r = symmetrized_residual(&sol, &sys).unwrap();
        assert!(r < 10.0 * config.tolerance, "{r}");
    }
}
