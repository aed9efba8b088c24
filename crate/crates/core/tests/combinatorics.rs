use std::collections::BTreeMap;

use liouville_core::coupling::{CouplingMatrix, RhoVector};
use liouville_core::degree::{
    self, classify, enumerate_spectrum, expand_series, DegreeError, SingularProfile, Topology,
};
use liouville_core::exact::{int, ratio, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn brute_spectrum(gammas: &[Rational], cutoff: &Rational) -> Vec<Rational> {
    let mut out = Vec::new();
    let top = cutoff.floor().to_integer().try_into().unwrap_or(0i64);
    for mask in 0u32..(1 << gammas.len()) {
        let subset: Rational = gammas
            .iter()
            .enumerate()
            .filter(|(l, _)| mask & (1 << l) != 0)
            .map(|(_, g)| int(1) + g)
            .sum();
        for m in 0..=top {
            let v = int(m) + &subset;
            if v > Rational::zero() && &v <= cutoff && !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out.sort();
    out
}

type Poly = BTreeMap<Rational, BigInt>;

fn multiply(a: &Poly, b: &Poly, cutoff: &Rational) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e = ea + eb;
            if &e <= cutoff {
                *out.entry(e).or_insert_with(BigInt::zero) += ca * cb;
            }
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn naive_series(chi: i64, gammas: &[Rational], cutoff: &Rational) -> Poly {
    let top: i64 = cutoff.floor().to_integer().try_into().unwrap();
    let mut g = Poly::from([(int(0), BigInt::one())]);
    let power = gammas.len() as i64 - chi;
    let factor: Poly = if power >= 0 {
        (0..=top).map(|j| (int(j), BigInt::one())).collect()
    } else {
        Poly::from([(int(0), BigInt::one()), (int(1), -BigInt::one())])
    };
    for _ in 0..power.abs() {
        g = multiply(&g, &factor, cutoff);
    }
    for gamma in gammas {
        let f = Poly::from([(int(0), BigInt::one()), (int(1) + gamma, -BigInt::one())]);
        g = multiply(&g, &f, cutoff);
    }
    g
}

fn strength() -> impl Strategy<Value = Rational> {
    (1i64..=6).prop_flat_map(|q| (-q + 1..=5 * q).prop_map(move |p| ratio(p, q)))
}

fn topology() -> impl Strategy<Value = Topology> {
    prop_oneof![
        (0u32..=3).prop_map(|genus| Topology::ClosedSurface { genus }),
        (0u32..=3).prop_map(|holes| Topology::PlanarDomain { holes }),
    ]
}

proptest! {
    #[test]
    fn spectrum_matches_subset_enumeration(
        gammas in prop::collection::vec(strength(), 0..=3),
        num in 1i64..=60,
        den in 1i64..=6,
    ) {
        let cutoff = ratio(num, den);
        let profile = SingularProfile::from_strengths(gammas.clone()).unwrap();
        let spectrum = enumerate_spectrum(&profile, &cutoff).unwrap();
        prop_assert_eq!(spectrum.values().to_vec(), brute_spectrum(&gammas, &cutoff));
    }

    #[test]
    fn series_matches_polynomial_products(
        gammas in prop::collection::vec(strength(), 0..=3),
        topo in topology(),
        num in 1i64..=60,
        den in 1i64..=6,
    ) {
        let cutoff = ratio(num, den);
        let profile = SingularProfile::from_strengths(gammas.clone()).unwrap();
        let series = expand_series(&topo, &profile, &cutoff).unwrap();
        prop_assert_eq!(series.terms().clone(), naive_series(topo.euler_char(), &gammas, &cutoff));
    }

    #[test]
    fn nonzero_coefficients_sit_on_the_spectrum(
        gammas in prop::collection::vec(strength(), 0..=3),
        topo in topology(),
        num in 1i64..=40,
    ) {
        let cutoff = int(num) / int(4);
        let profile = SingularProfile::from_strengths(gammas).unwrap();
        let series = expand_series(&topo, &profile, &cutoff).unwrap();
        let spectrum = enumerate_spectrum(&profile, &cutoff).unwrap();
        for e in series.terms().keys() {
            prop_assert!(e == &int(0) || spectrum.values().contains(e));
        }
    }

    #[test]
    fn degree_is_constant_inside_a_region(
        gammas in prop::collection::vec(1i64..=4, 1..=3),
        c in 1i64..=60,
    ) {
        // diagonal ρ = (c/4)π(1,1) with A = [[0,2],[2,0]] has Q/L = 2ρ
        let profile = SingularProfile::from_strengths(gammas.into_iter().map(int).collect()).unwrap();
        let a = CouplingMatrix::from_ints([[0, 2], [2, 0]]);
        let rho = |num: i64, den: i64| RhoVector::pi_multiple(ratio(num, den), ratio(num, den)).unwrap();
        let here = degree::degree_report(&a, &rho(c, 4), &Topology::torus(), &profile);
        let nudged = degree::degree_report(&a, &rho(4 * c + 1, 16), &Topology::torus(), &profile);
        match (here, nudged) {
            (Ok(x), Ok(y)) if x.classification.k == y.classification.k => {
                prop_assert_eq!(x.degree, y.degree)
            }
            (Err(DegreeError::OnCriticalSet { .. }), _) | (Ok(_), Ok(_)) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn classification_is_monotone_along_rays(
        gammas in prop::collection::vec(strength(), 0..=3),
        c1 in 1i64..=30,
        c2 in 1i64..=30,
    ) {
        let profile = SingularProfile::from_strengths(gammas).unwrap();
        let a = CouplingMatrix::from_ints([[1, 3], [2, 2]]);
        let mut last = 0;
        for s in 1..=6 {
            let rho = RhoVector::pi_multiple(ratio(c1 * s, 7), ratio(c2 * s, 7)).unwrap();
            if let Ok(c) = classify(&a, &rho, &profile) {
                prop_assert!(c.k >= last);
                last = c.k;
            }
        }
    }
}

#[test]
fn sphere_without_sources_has_a_quadratic_series() {
    let series = expand_series(&Topology::sphere(), &SingularProfile::empty(), &int(5)).unwrap();
    let expected = Poly::from([
        (int(0), BigInt::one()),
        (int(1), BigInt::from(-2)),
        (int(2), BigInt::one()),
    ]);
    assert_eq!(series.terms(), &expected);
}
