//! Degree counting.
//!
//! The critical values are `8π·n` where `n = m + Σ_{l∈Λ} μ_l` ranges over
//! nonnegative integers `m` and subsets `Λ` of the singular points. The
//! degree in the region between the `k`-th and `(k+1)`-th critical value is
//! the partial sum `1 + b_1 + … + b_k` of the coefficients of
//!
//! ```text
//! g(x) = (1 + x + x² + …)^(N − χ) · Π_l (1 − x^μ_l)
//! ```
//!
//! read off at the exponents `n_1 < n_2 < …`. Exponents are exact rationals
//! so fractional strengths are handled without rounding.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::coupling::{CouplingError, CouplingMatrix, PiMonomial, RhoUnit, RhoVector};
use crate::exact::{self, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DegreeError {
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("cutoff must be positive, got {}", exact::Display(.0))]
    NonPositiveCutoff(Rational),
    #[error("rho lies on the critical curve Gamma_{k} (n_{k} = {})", exact::Display(.n))]
    OnCriticalSet { k: usize, n: Rational },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("strength gamma_{index} = {} must exceed -1", exact::Display(.gamma))]
    StrengthTooSmall { index: usize, gamma: Rational },
    #[error("singular points {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },
    #[error("singular point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    ClosedSurface { genus: u32 },
    /// Bounded planar domain with the given number of holes.
    PlanarDomain { holes: u32 },
}

impl Topology {
    pub fn torus() -> Self {
        Topology::ClosedSurface { genus: 1 }
    }

    pub fn sphere() -> Self {
        Topology::ClosedSurface { genus: 0 }
    }

    pub fn euler_char(&self) -> i64 {
        match *self {
            Topology::ClosedSurface { genus } => 2 - 2 * genus as i64,
            Topology::PlanarDomain { holes } => 1 - holes as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPoint {
    /// Position on the unit torus, wrapped into `[0, 1)²`.
    pub position: [f64; 2],
    pub gamma: Rational,
}

impl SingularPoint {
    pub fn mass(&self) -> Rational {
        &self.gamma + exact::int(1)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SingularProfile {
    points: Vec<SingularPoint>,
}

fn wrap_unit(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

impl SingularProfile {
    pub fn new(points: Vec<SingularPoint>) -> Result<Self, ProfileError> {
        let mut points = points;
        for (index, p) in points.iter_mut().enumerate() {
            if p.gamma <= exact::int(-1) {
                return Err(ProfileError::StrengthTooSmall {
                    index: index + 1,
                    gamma: p.gamma.clone(),
                });
            }
            if !p.position.iter().all(|c| c.is_finite()) {
                return Err(ProfileError::NonFinitePoint { index: index + 1 });
            }
            p.position = [wrap_unit(p.position[0]), wrap_unit(p.position[1])];
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i].position == points[j].position {
                    return Err(ProfileError::DuplicatePoint {
                        first: i + 1,
                        second: j + 1,
                    });
                }
            }
        }
        Ok(Self { points })
    }

    /// Profile for combinatorial use only: points are spread along the
    /// diagonal of the torus.
    pub fn from_strengths(gammas: Vec<Rational>) -> Result<Self, ProfileError> {
        let n = gammas.len().max(1) as f64;
        let points = gammas
            .into_iter()
            .enumerate()
            .map(|(l, gamma)| {
                let c = (l as f64 + 0.5) / n;
                SingularPoint {
                    position: [c, c],
                    gamma,
                }
            })
            .collect();
        Self::new(points)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[SingularPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn masses(&self) -> Vec<Rational> {
        self.points.iter().map(SingularPoint::mass).collect()
    }

    pub fn gamma_sum(&self) -> Rational {
        self.points.iter().map(|p| p.gamma.clone()).sum()
    }

    pub fn all_positive_integers(&self) -> bool {
        self.points
            .iter()
            .all(|p| exact::is_integer(&p.gamma) && p.gamma.is_positive())
    }
}

/// The sorted critical values `n_1 < n_2 < …` (critical set divided by 8π),
/// complete up to `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSpectrum {
    values: Vec<Rational>,
    cutoff: Rational,
}

impl CriticalSpectrum {
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    /// `n_k` with the convention `n_0 = 0`.
    pub fn n(&self, k: usize) -> Option<Rational> {
        if k == 0 {
            Some(Rational::zero())
        } else {
            self.values.get(k - 1).cloned()
        }
    }
}

pub fn enumerate_spectrum(
    profile: &SingularProfile,
    cutoff: &Rational,
) -> Result<CriticalSpectrum, DegreeError> {
    if !cutoff.is_positive() {
        return Err(DegreeError::NonPositiveCutoff(cutoff.clone()));
    }
    // distinct subset sums of the masses, pruned at the cutoff
    let mut sums: BTreeSet<Rational> = BTreeSet::new();
    sums.insert(Rational::zero());
    for mu in profile.masses() {
        let shifted: Vec<Rational> = sums
            .iter()
            .map(|s| s + &mu)
            .filter(|s| s <= cutoff)
            .collect();
        sums.extend(shifted);
    }
    let mut values = BTreeSet::new();
    for s in &sums {
        let mut v = s.clone();
        while v <= *cutoff {
            if v.is_positive() {
                values.insert(v.clone());
            }
            v += exact::int(1);
        }
    }
    Ok(CriticalSpectrum {
        values: values.into_iter().collect(),
        cutoff: cutoff.clone(),
    })
}

/// Truncated expansion of the generating function with exact exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingSeries {
    terms: BTreeMap<Rational, BigInt>,
    cutoff: Rational,
}

impl GeneratingSeries {
    /// Nonzero terms in increasing exponent order.
    pub fn terms(&self) -> &BTreeMap<Rational, BigInt> {
        &self.terms
    }

    pub fn cutoff(&self) -> &Rational {
        &self.cutoff
    }

    /// Coefficient at `exponent`; zero when absent.
    ///
    /// # Panics
    /// If `exponent` exceeds the cutoff, where the expansion is incomplete.
    pub fn coefficient(&self, exponent: &Rational) -> BigInt {
        assert!(
            exponent <= &self.cutoff,
            "exponent beyond the series cutoff"
        );
        self.terms.get(exponent).cloned().unwrap_or_else(BigInt::zero)
    }
}

fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n {
        return BigInt::zero();
    }
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

pub fn expand_series(
    topology: &Topology,
    profile: &SingularProfile,
    cutoff: &Rational,
) -> Result<GeneratingSeries, DegreeError> {
    if !cutoff.is_positive() {
        return Err(DegreeError::NonPositiveCutoff(cutoff.clone()));
    }
    let top = cutoff.floor().to_integer().to_i64().ok_or_else(|| {
        DegreeError::Precondition("cutoff too large to expand".to_string())
    })?;
    let power = profile.len() as i64 - topology.euler_char();

    let mut terms: BTreeMap<Rational, BigInt> = BTreeMap::new();
    if power >= 0 {
        // (1 − x)^(−p) = Σ_j C(j + p − 1, p − 1) x^j
        for j in 0..=top {
            let c = if power == 0 {
                if j == 0 {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            } else {
                binomial(j + power - 1, power - 1)
            };
            terms.insert(exact::int(j), c);
        }
    } else {
        let d = -power;
        for j in 0..=top.min(d) {
            let c = binomial(d, j);
            terms.insert(exact::int(j), if j.is_odd() { -c } else { c });
        }
    }

    for mu in profile.masses() {
        let mut next = terms.clone();
        for (e, c) in &terms {
            let shifted = e + &mu;
            if shifted <= *cutoff {
                *next.entry(shifted).or_insert_with(BigInt::zero) -= c;
            }
        }
        terms = next;
    }
    terms.retain(|_, c| !c.is_zero());
    Ok(GeneratingSeries {
        terms,
        cutoff: cutoff.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionClassification {
    pub k: usize,
    pub quadratic: PiMonomial,
    pub linear: PiMonomial,
    /// `Q(ρ)/L(ρ)` as a float.
    pub ratio: f64,
    /// `Q(ρ)/(8π L(ρ))` when ρ is a π-multiple (then it is rational).
    pub ratio_over_8pi: Option<Rational>,
    /// `(n_k, n_{k+1})`; the region is `8π n_k < ratio < 8π n_{k+1}`.
    pub bounds: (Rational, Rational),
}

impl RegionClassification {
    pub fn bounds_f64(&self) -> (f64, f64) {
        let s = 8.0 * std::f64::consts::PI;
        (exact::to_f64(&self.bounds.0) * s, exact::to_f64(&self.bounds.1) * s)
    }
}

/// Locates ρ between two consecutive critical curves.
pub fn classify(
    a: &CouplingMatrix,
    rho: &RhoVector,
    profile: &SingularProfile,
) -> Result<RegionClassification, DegreeError> {
    let quadratic = a.quadratic_form(rho)?;
    let linear = a.linear_form(rho)?;
    let r = &quadratic.coeff / &linear.coeff;

    // `position(n)` orders 8π·n against the ratio.
    let (cutoff, ratio_over_8pi, position): (Rational, Option<Rational>, Box<dyn Fn(&Rational) -> std::cmp::Ordering>) =
        match rho.unit() {
            RhoUnit::Pi => {
                let t = &r / exact::int(8);
                let t2 = t.clone();
                (
                    t.floor() + exact::int(1),
                    Some(t),
                    Box::new(move |n: &Rational| n.cmp(&t2)),
                )
            }
            RhoUnit::One => {
                // π > 3 bounds r/(8π) by r/24
                let cutoff = (&r / exact::int(24)).floor() + exact::int(1);
                let r2 = r.clone();
                (
                    cutoff,
                    None,
                    Box::new(move |n: &Rational| {
                        exact::cmp_with_pi_multiple(&r2, &(exact::int(8) * n)).reverse()
                    }),
                )
            }
        };

    let spectrum = enumerate_spectrum(profile, &cutoff)?;
    let mut k = 0;
    for (j, n) in spectrum.values().iter().enumerate() {
        match position(n) {
            std::cmp::Ordering::Less => k = j + 1,
            std::cmp::Ordering::Equal => {
                return Err(DegreeError::OnCriticalSet {
                    k: j + 1,
                    n: n.clone(),
                })
            }
            std::cmp::Ordering::Greater => break,
        }
    }
    let lower = spectrum.n(k).expect("k indexes the spectrum");
    let upper = spectrum
        .n(k + 1)
        .expect("cutoff exceeds the ratio so n_{k+1} is enumerated");
    Ok(RegionClassification {
        k,
        ratio: quadratic.to_f64() / linear.to_f64(),
        quadratic,
        linear,
        ratio_over_8pi,
        bounds: (lower, upper),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeReport {
    pub classification: RegionClassification,
    /// `(n_j, b_j)` for `j = 0..=k`, with `n_0 = 0`, `b_0 = 1`.
    pub coefficients: Vec<(Rational, BigInt)>,
    pub degree: BigInt,
}

pub fn degree_report(
    a: &CouplingMatrix,
    rho: &RhoVector,
    topology: &Topology,
    profile: &SingularProfile,
) -> Result<DegreeReport, DegreeError> {
    let classification = classify(a, rho, profile)?;
    let k = classification.k;
    let mut coefficients = vec![(Rational::zero(), BigInt::one())];
    if k > 0 {
        let top = classification.bounds.0.clone();
        let spectrum = enumerate_spectrum(profile, &top)?;
        let series = expand_series(topology, profile, &top)?;
        coefficients.extend(
            spectrum
                .values()
                .iter()
                .take(k)
                .map(|n| (n.clone(), series.coefficient(n))),
        );
    }
    let degree = coefficients.iter().map(|(_, b)| b).sum();
    Ok(DegreeReport {
        classification,
        coefficients,
        degree,
    })
}

pub fn degree(
    a: &CouplingMatrix,
    rho: &RhoVector,
    topology: &Topology,
    profile: &SingularProfile,
) -> Result<BigInt, DegreeError> {
    degree_report(a, rho, topology, profile).map(|r| r.degree)
}

/// `½ Π (1 + γ_l)` for integer strengths with odd total on the torus.
pub fn torus_odd_degree(profile: &SingularProfile) -> Result<BigInt, DegreeError> {
    if profile.is_empty() || !profile.all_positive_integers() {
        return Err(DegreeError::Precondition(
            "all strengths must be positive integers".to_string(),
        ));
    }
    let sum = profile.gamma_sum().to_integer();
    if sum.is_even() {
        return Err(DegreeError::Precondition(
            "the sum of strengths must be odd".to_string(),
        ));
    }
    let product: BigInt = profile
        .points()
        .iter()
        .map(|p| p.mass().to_integer())
        .product();
    Ok(product / BigInt::from(2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityRow {
    pub n: Rational,
    pub b: BigInt,
    pub partial_sum: BigInt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityScan {
    /// Rows for `k = 0..=k_max`.
    pub rows: Vec<PositivityRow>,
}

impl PositivityScan {
    pub fn all_positive(&self) -> bool {
        self.rows.iter().all(|r| r.partial_sum.is_positive())
    }
}

/// Partial sums `1 + Σ_{j≤k} b_j` for `k ≤ k_max`, for integer strengths on
/// surfaces with nonpositive Euler characteristic.
pub fn positivity_scan(
    topology: &Topology,
    profile: &SingularProfile,
    k_max: usize,
) -> Result<PositivityScan, DegreeError> {
    if topology.euler_char() > 0 {
        return Err(DegreeError::Precondition(format!(
            "Euler characteristic {} is positive",
            topology.euler_char()
        )));
    }
    if !profile.all_positive_integers() {
        return Err(DegreeError::Precondition(
            "all strengths must be positive integers".to_string(),
        ));
    }
    let mut rows = vec![PositivityRow {
        n: Rational::zero(),
        b: BigInt::one(),
        partial_sum: BigInt::one(),
    }];
    if k_max > 0 {
        // integer strengths: the spectrum is exactly the positive integers
        let cutoff = exact::int(k_max as i64);
        let spectrum = enumerate_spectrum(profile, &cutoff)?;
        let series = expand_series(topology, profile, &cutoff)?;
        let mut partial = BigInt::one();
        for n in spectrum.values().iter().take(k_max) {
            let b = series.coefficient(n);
            partial += &b;
            rows.push(PositivityRow {
                n: n.clone(),
                b,
                partial_sum: partial.clone(),
            });
        }
    }
    Ok(PositivityScan { rows })
}
