use std::f64::consts::{FRAC_PI_2, PI};

use carleman::error::Error;
use carleman::growth::GrowthProfile;
use carleman::proximate::{
    flat_function, flatness_certificate, gevrey_flat, lift_flat, sector_lower_bound,
    validate_weight, FlatnessSamples, PolarPoint, SectorFunction, Subsector, ValidationGrid,
    Weight, WeightExpr,
};
use carleman::sequences::Sequence;
use proptest::prelude::*;

fn profile(spec: &str, n: usize) -> GrowthProfile {
    GrowthProfile::new(&Sequence::parse(spec).unwrap(), n).unwrap()
}

#[test]
fn gevrey_weight_validates() {
    let p = profile("gevrey:1", 200_000);
    let v = validate_weight(&Weight::gevrey(1.0).unwrap(), &p, ValidationGrid::default()).unwrap();
    assert!(v.pass, "{v:?}");
    assert!(v.equivalence_bounded);
}

#[test]
fn weight_specs() {
    let w = Weight::parse("gevrey:2", None).unwrap();
    assert_eq!(w.monomial_order(), Some(2.0));
    assert!((w.half_opening() - PI / 2.0).abs() < 1e-15);
    assert!((w.flat_half_opening() - PI / 4.0).abs() < 1e-15);
    let r = Weight::parse("expr:z^2/(1+z)@1", None).unwrap();
    assert!(r.is_sectorial());
    assert!(Weight::parse("fromM", None).is_err());
    let p = profile("gevrey:1", 1000);
    assert!(!Weight::parse("fromM", Some(&p)).unwrap().is_sectorial());
    let j = Weight::from_json(r#"{"kind": "monomial", "k": 0.5}"#);
    assert!(j.is_ok(), "{j:?}");
}

#[test]
fn out_of_sector_evaluation() {
    let w = Weight::gevrey(2.0).unwrap();
    assert!(matches!(
        w.eval(PolarPoint::new(1.0, 1.7)),
        Err(Error::OutOfSector(_))
    ));
    let g = gevrey_flat(2.0).unwrap();
    let lifted = lift_flat(&g, 2.0).unwrap();
    assert!((lifted.half_opening() - PI / 8.0).abs() < 1e-15);
    assert!(lifted.eval(PolarPoint::new(0.5, 0.5)).is_err());
}

#[test]
fn lifted_flat_is_flat_for_power_sequence() {
    // exp(-1/z^2) is flat for the Gevrey sequence of order 1/2
    let g = gevrey_flat(1.0).unwrap();
    let lifted = lift_flat(&g, 2.0).unwrap();
    let p = profile("gevrey:0.5", 200_000);
    let c = flatness_certificate(
        &lifted,
        &p,
        Subsector {
            alpha: 0.4,
            r0: 1.0,
        },
        FlatnessSamples::default(),
    )
    .unwrap();
    assert!(c.pass);
}

#[test]
fn real_axis_weight_has_no_flat_function() {
    let p = profile("gevrey:1", 1000);
    assert!(flat_function(&Weight::from_profile(&p)).is_err());
}

#[test]
fn narrow_sector_bound_is_positive() {
    let w = Weight::user(WeightExpr::Monomial { k: 3.0, coeff: 1.0 }, 2.0 / 3.0, 3.0).unwrap();
    let b = sector_lower_bound(&w, 0.2, ValidationGrid::default()).unwrap();
    assert!((b.b - (3.0 * PI * 0.2 / 2.0).cos()).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_modulus_closed_form(r in 1e-3f64..10.0, frac in -0.99f64..0.99) {
        let g = gevrey_flat(1.0).unwrap();
        let th = frac * FRAC_PI_2;
        let z = PolarPoint::new(r, th);
        let want = -th.cos() / r;
        prop_assert!((g.log_modulus(z).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
        prop_assert!(g.log_modulus(z).unwrap() < 0.0);
    }

    #[test]
    fn monomial_sector_bound(k in 0.5f64..3.0, frac in 0.05f64..0.9) {
        let w = Weight::gevrey(k).unwrap();
        let alpha = frac / k;
        let b = sector_lower_bound(&w, alpha, ValidationGrid::default()).unwrap();
        prop_assert!((b.b - (k * PI * alpha / 2.0).cos()).abs() < 1e-9);
    }

    #[test]
    fn conjugate_symmetry(k in 0.5f64..3.0, r in 1e-2f64..1e2, frac in -0.9f64..0.9) {
        let w = Weight::gevrey(k).unwrap();
        let z = PolarPoint::new(r, frac * w.half_opening());
        let a = w.eval(z).unwrap();
        let b = w.eval(z.conj()).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-12 * a.norm());
    }
}
