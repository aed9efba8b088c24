//! The 2×2 coupling matrix `A`, the parameter vector ρ and the algebra
//! built on them: the ordering hypothesis, the quadratic and linear forms
//! whose ratio locates ρ relative to the critical curves, the symmetrizing
//! change of variables and the rank classification.
//!
//! All predicates are decided in exact rational arithmetic.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::exact::{self, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CouplingError {
    #[error("coupling matrix violates the ordering hypothesis: {}", list_violations(.0))]
    Hypothesis(Vec<Violation>),
    #[error("coupling matrix has the wrong sign pattern: {}", list_violations(.0))]
    SignPattern(Vec<Violation>),
    #[error("coupling matrix is singular")]
    Singular,
    #[error("intrinsic rho_{row} = {} is negative", exact::Display(.value))]
    NegativeIntrinsicRho { row: usize, value: Rational },
    #[error("rho must have nonnegative components and must not vanish")]
    InvalidRho,
    #[error("rho components mix plain and pi-multiple units")]
    MixedUnits,
}

fn list_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// One of the inequalities required of the coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Violation {
    A11Negative,
    A22Negative,
    A12NotPositive,
    A21NotPositive,
    A21BelowA11,
    A12BelowA22,
}

impl Violation {
    pub fn condition(&self) -> &'static str {
        match self {
            Violation::A11Negative => "a11 >= 0",
            Violation::A22Negative => "a22 >= 0",
            Violation::A12NotPositive => "a12 > 0",
            Violation::A21NotPositive => "a21 > 0",
            Violation::A21BelowA11 => "a21 >= a11",
            Violation::A12BelowA22 => "a12 >= a22",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails", self.condition())
    }
}

/// Outcome of checking the ordering hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HypothesisVerdict {
    pub violations: Vec<Violation>,
}

impl HypothesisVerdict {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Whether a quantity is a plain rational or a rational multiple of π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RhoUnit {
    One,
    Pi,
}

/// An exact real of the form `coeff · π^pi_power`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiMonomial {
    pub coeff: Rational,
    pub pi_power: u32,
}

impl PiMonomial {
    pub fn to_f64(&self) -> f64 {
        exact::to_f64(&self.coeff) * std::f64::consts::PI.powi(self.pi_power as i32)
    }
}

/// The parameter vector ρ = (ρ1, ρ2), stored exactly as `coeffs · unit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhoVector {
    coeffs: [Rational; 2],
    unit: RhoUnit,
}

impl RhoVector {
    pub fn new(rho1: Rational, rho2: Rational) -> Result<Self, CouplingError> {
        Self::with_unit(rho1, rho2, RhoUnit::One)
    }

    /// ρ = π · (c1, c2).
    pub fn pi_multiple(c1: Rational, c2: Rational) -> Result<Self, CouplingError> {
        Self::with_unit(c1, c2, RhoUnit::Pi)
    }

    pub fn with_unit(c1: Rational, c2: Rational, unit: RhoUnit) -> Result<Self, CouplingError> {
        if c1.is_negative() || c2.is_negative() || (c1.is_zero() && c2.is_zero()) {
            return Err(CouplingError::InvalidRho);
        }
        Ok(Self {
            coeffs: [c1, c2],
            unit,
        })
    }

    pub fn coeffs(&self) -> &[Rational; 2] {
        &self.coeffs
    }

    pub fn unit(&self) -> RhoUnit {
        self.unit
    }

    pub fn to_f64(&self) -> [f64; 2] {
        let scale = match self.unit {
            RhoUnit::One => 1.0,
            RhoUnit::Pi => std::f64::consts::PI,
        };
        [
            exact::to_f64(&self.coeffs[0]) * scale,
            exact::to_f64(&self.coeffs[1]) * scale,
        ]
    }

    /// Point `(1 − t)·from + t·to` on the segment between two vectors with
    /// the same unit.
    pub fn lerp(from: &RhoVector, to: &RhoVector, t: &Rational) -> Result<Self, CouplingError> {
        let unit = match (from.unit, to.unit) {
            (a, b) if a == b => a,
            _ => return Err(CouplingError::MixedUnits),
        };
        let one_minus = exact::int(1) - t;
        let c1 = &one_minus * &from.coeffs[0] + t * &to.coeffs[0];
        let c2 = &one_minus * &from.coeffs[1] + t * &to.coeffs[1];
        Self::with_unit(c1, c2, unit)
    }

    fn pi_power(&self) -> u32 {
        match self.unit {
            RhoUnit::One => 0,
            RhoUnit::Pi => 1,
        }
    }
}

/// Result of [`CouplingMatrix::symmetrize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizedSystem {
    pub b11: Rational,
    pub b12: Rational,
    pub b22: Rational,
    /// `a21 / a12`; the first component's mass is multiplied by this.
    pub mass_scale: Rational,
    /// `log(a21 / a12)`, added to the first component.
    pub shift: f64,
}

impl SymmetrizedSystem {
    pub fn matrix(&self) -> [[Rational; 2]; 2] {
        [
            [self.b11.clone(), self.b12.clone()],
            [self.b12.clone(), self.b22.clone()],
        ]
    }

    /// `Σ b_ij σ_i σ_j` for a pair of local masses.
    pub fn quadratic(&self, sigma: &[Rational; 2]) -> Rational {
        &self.b11 * &sigma[0] * &sigma[0]
            + exact::int(2) * &self.b12 * &sigma[0] * &sigma[1]
            + &self.b22 * &sigma[1] * &sigma[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankClass {
    FullRank,
    /// `det A = 0` and `a11 < a21`; then `u1 = a·u2 + C` with `a = a11/a21`.
    DegenerateProportional { a: Rational },
    /// `det A = 0` and `a11 = a21`; then `u1 = u2 + C`.
    DegenerateEqual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingMatrix {
    entries: [[Rational; 2]; 2],
}

impl CouplingMatrix {
    /// Accepts any entries; use [`validate_hypothesis`](Self::validate_hypothesis)
    /// to check admissibility.
    pub fn new(a11: Rational, a12: Rational, a21: Rational, a22: Rational) -> Self {
        Self {
            entries: [[a11, a12], [a21, a22]],
        }
    }

    pub fn from_ints(rows: [[i64; 2]; 2]) -> Self {
        Self::new(
            exact::int(rows[0][0]),
            exact::int(rows[0][1]),
            exact::int(rows[1][0]),
            exact::int(rows[1][1]),
        )
    }

    pub fn entries(&self) -> &[[Rational; 2]; 2] {
        &self.entries
    }

    pub fn a11(&self) -> &Rational {
        &self.entries[0][0]
    }
    pub fn a12(&self) -> &Rational {
        &self.entries[0][1]
    }
    pub fn a21(&self) -> &Rational {
        &self.entries[1][0]
    }
    pub fn a22(&self) -> &Rational {
        &self.entries[1][1]
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        let e = &self.entries;
        [
            [exact::to_f64(&e[0][0]), exact::to_f64(&e[0][1])],
            [exact::to_f64(&e[1][0]), exact::to_f64(&e[1][1])],
        ]
    }

    fn sign_violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.a11().is_negative() {
            v.push(Violation::A11Negative);
        }
        if self.a22().is_negative() {
            v.push(Violation::A22Negative);
        }
        if !self.a12().is_positive() {
            v.push(Violation::A12NotPositive);
        }
        if !self.a21().is_positive() {
            v.push(Violation::A21NotPositive);
        }
        v
    }

    pub fn validate_hypothesis(&self) -> HypothesisVerdict {
        let mut violations = self.sign_violations();
        if self.a21() < self.a11() {
            violations.push(Violation::A21BelowA11);
        }
        if self.a12() < self.a22() {
            violations.push(Violation::A12BelowA22);
        }
        HypothesisVerdict { violations }
    }

    pub fn ensure_hypothesis(&self) -> Result<(), CouplingError> {
        let verdict = self.validate_hypothesis();
        if verdict.is_ok() {
            Ok(())
        } else {
            Err(CouplingError::Hypothesis(verdict.violations))
        }
    }

    pub fn determinant(&self) -> Rational {
        self.a11() * self.a22() - self.a12() * self.a21()
    }

    /// `Q(c) = (a11·a21/a12)c1² + 2·a21·c1c2 + a22·c2²` on raw coefficients.
    pub fn quadratic_coeffs(&self, c: &[Rational; 2]) -> Rational {
        self.a11() * self.a21() / self.a12() * &c[0] * &c[0]
            + exact::int(2) * self.a21() * &c[0] * &c[1]
            + self.a22() * &c[1] * &c[1]
    }

    /// `L(c) = (a21/a12)c1 + c2` on raw coefficients.
    pub fn linear_coeffs(&self, c: &[Rational; 2]) -> Rational {
        self.a21() / self.a12() * &c[0] + &c[1]
    }

    pub fn quadratic_form(&self, rho: &RhoVector) -> Result<PiMonomial, CouplingError> {
        self.ensure_hypothesis()?;
        Ok(PiMonomial {
            coeff: self.quadratic_coeffs(rho.coeffs()),
            pi_power: 2 * rho.pi_power(),
        })
    }

    pub fn linear_form(&self, rho: &RhoVector) -> Result<PiMonomial, CouplingError> {
        self.ensure_hypothesis()?;
        Ok(PiMonomial {
            coeff: self.linear_coeffs(rho.coeffs()),
            pi_power: rho.pi_power(),
        })
    }

    pub fn symmetrize(&self) -> Result<SymmetrizedSystem, CouplingError> {
        self.ensure_hypothesis()?;
        let mass_scale = self.a21() / self.a12();
        Ok(SymmetrizedSystem {
            b11: self.a11() * self.a12() / self.a21(),
            b12: self.a12().clone(),
            b22: self.a22().clone(),
            shift: exact::to_f64(&mass_scale).ln(),
            mass_scale,
        })
    }

    /// Rank classification.
    ///
    /// Only the sign pattern is required here: under the full ordering
    /// hypothesis a singular matrix always has `a11 = a21`, so the
    /// proportional case can only be reached by matrices that relax it.
    pub fn rank_class(&self) -> Result<RankClass, CouplingError> {
        let signs = self.sign_violations();
        if !signs.is_empty() {
            return Err(CouplingError::SignPattern(signs));
        }
        if !self.determinant().is_zero() {
            return Ok(RankClass::FullRank);
        }
        if self.a11() == self.a21() {
            Ok(RankClass::DegenerateEqual)
        } else {
            Ok(RankClass::DegenerateProportional {
                a: self.a11() / self.a21(),
            })
        }
    }

    pub fn inverse(&self) -> Result<[[Rational; 2]; 2], CouplingError> {
        let det = self.determinant();
        if det.is_zero() {
            return Err(CouplingError::Singular);
        }
        Ok([
            [self.a22() / &det, -self.a12() / &det],
            [-self.a21() / &det, self.a11() / &det],
        ])
    }

    /// ρ_i = (row-i sum of A⁻¹)·4π·Σγ, returned as a π-multiple.
    pub fn intrinsic_rho(&self, gamma_sum: &Rational) -> Result<RhoVector, CouplingError> {
        let inv = self.inverse()?;
        let scale = exact::int(4) * gamma_sum;
        let mut coeffs = [Rational::zero(), Rational::zero()];
        for (row, c) in coeffs.iter_mut().enumerate() {
            let value = (&inv[row][0] + &inv[row][1]) * &scale;
            if value.is_negative() {
                return Err(CouplingError::NegativeIntrinsicRho {
                    row: row + 1,
                    value,
                });
            }
            *c = value;
        }
        let [c1, c2] = coeffs;
        RhoVector::pi_multiple(c1, c2)
    }
}
