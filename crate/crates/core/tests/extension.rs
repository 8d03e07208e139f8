use carleman::extension::{
    certify_expansion, extend, formal_borel, lambda_norm, right_inverse_check, BorelSum,
    CoefficientSequence, Extension, NoiseFloor, RecoveryGrid, RoundTripConfig,
};
use carleman::moments::{kernel, moment_table, Kernel, MomentTable, Variant};
use carleman::numeric::{linspace, logspace};
use carleman::proximate::{PolarPoint, SectorFunction, Weight};
use carleman::sequences::Sequence;
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

fn setup(k: f64) -> (Kernel, MomentTable) {
    let kern = kernel(&Weight::gevrey(k).unwrap(), Variant::Ev).unwrap();
    let t = moment_table(&kern, 40, 1e-13).unwrap();
    (kern, t)
}

fn borel_at(a: &CoefficientSequence, t: &MomentTable, r0: f64) -> BorelSum {
    let mut b = formal_borel(a, t, 0.1).unwrap();
    b.r0 = r0;
    b
}

fn grid(thetas: &[f64]) -> Vec<PolarPoint> {
    grid_below(thetas, 0.01, 0.3)
}

fn grid_below(thetas: &[f64], lo: f64, hi: f64) -> Vec<PolarPoint> {
    let mut g = vec![];
    for &th in thetas {
        for r in logspace(lo, hi, 50) {
            g.push(PolarPoint::new(r, th));
        }
    }
    g
}

#[test]
fn delta_closed_form_off_axis() {
    let (kern, t) = setup(1.0);
    let b = formal_borel(&CoefficientSequence::from_real(&[1.0]), &t, 0.1).unwrap();
    let z = PolarPoint::new(0.2, 0.7);
    let want = Complex64::new(1.0, 0.0) - (-1.0 / z.to_complex()).exp();
    assert!((extend(&b, &kern, z, 1e-13).unwrap() - want).norm() < 1e-12);
}

#[test]
fn coefficient_file() {
    let c =
        CoefficientSequence::from_json(r#"{"coeffs_re": [1, 2], "coeffs_im": [0, -1], "A": 2.0}"#)
            .unwrap();
    assert_eq!(c.a[1], Complex64::new(2.0, -1.0));
    assert_eq!(c.declared_a, Some(2.0));
    assert!(CoefficientSequence::from_json(r#"{"coeffs_re": [1, 2], "coeffs_im": [0]}"#).is_err());
}

#[test]
fn polynomial_remainder_is_flat() {
    let (kern, t) = setup(1.0);
    let a = CoefficientSequence::from_real(&[1.0, -2.0, 0.5]);
    let ext = Extension::new(formal_borel(&a, &t, 0.1).unwrap(), kern, 1e-12);
    let f = |z: PolarPoint| ext.eval(z);
    let s = Sequence::gevrey(1.0).unwrap();
    let c = certify_expansion(
        &f,
        &a,
        &s,
        &grid(&linspace(-0.6, 0.6, 5)),
        1,
        12,
        NoiseFloor::default(),
    )
    .unwrap();
    assert!(c.pass && c.a.is_finite() && c.c.is_finite());
}

#[test]
fn random_sign_instance_certifies() {
    let (kern, t) = setup(1.0);
    let signs = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0];
    let a: Vec<f64> = (0..10)
        .map(|p| signs[p] * (2.0 * ln_gamma(p as f64 + 1.0)).exp())
        .collect();
    let a = CoefficientSequence::from_real(&a);
    let ext = Extension::new(formal_borel(&a, &t, 0.1).unwrap(), kern, 1e-12);
    let f = |z: PolarPoint| ext.eval(z);
    let s = Sequence::gevrey(1.0).unwrap();
    let c = certify_expansion(
        &f,
        &a,
        &s,
        &grid(&linspace(-0.6, 0.6, 5)),
        1,
        15,
        NoiseFloor::default(),
    )
    .unwrap();
    assert!(c.pass, "{c:?}");
}

#[test]
fn round_trip_second_coefficient() {
    let (kern, t) = setup(1.0);
    let s = Sequence::gevrey(1.0).unwrap();
    let cfg = RoundTripConfig {
        eps: 0.1,
        n_max: 8,
        grid: RecoveryGrid::for_order(1.0),
        tol: 1e-13,
    };
    let a = CoefficientSequence::from_real(&[0.0, 1.0, 0.0, 0.0]);
    let r = right_inverse_check(&a, &kern, &t, &s, cfg).unwrap();
    assert!((r.recovered.a[1] - Complex64::new(1.0, 0.0)).norm() < 1e-4);
    let zero = CoefficientSequence::from_real(&[0.0; 5]);
    let r = right_inverse_check(&zero, &kern, &t, &s, cfg).unwrap();
    assert_eq!(r.max_weighted, 0.0);
}

#[test]
fn zero_sequence_extends_to_zero() {
    let (kern, t) = setup(2.0);
    let b = formal_borel(&CoefficientSequence::from_real(&[0.0, 0.0, 0.0]), &t, 0.1).unwrap();
    for th in [-0.5, 0.0, 0.3] {
        assert_eq!(
            extend(&b, &kern, PolarPoint::new(0.1, th), 1e-12).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }
}

#[test]
fn lambda_norm_of_geometric() {
    let s = Sequence::gevrey(0.5).unwrap();
    let a: Vec<f64> = (0..15)
        .map(|p| (p as f64 * 3f64.ln() + ln_gamma(p as f64 + 1.0) + s.log_big(p).unwrap()).exp())
        .collect();
    let a = CoefficientSequence::from_real(&a);
    assert!((lambda_norm(&a, &s, 3.0).unwrap() - 1.0).abs() < 1e-10);
    assert!(lambda_norm(&a, &s, 0.0).is_err());
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extend_is_linear(a1 in coeffs(), a2 in coeffs(), al in -2.0f64..2.0, be in -2.0f64..2.0,
                        r in 0.05f64..0.8, frac in -0.8f64..0.8) {
        let (kern, t) = setup(1.0);
        let (a1, a2) = (CoefficientSequence::from_real(&a1), CoefficientSequence::from_real(&a2));
        let (al, be) = (Complex64::new(al, 0.0), Complex64::new(be, 0.0));
        let comb = a1.scale_add(al, &a2, be);
        let z = PolarPoint::new(r, frac * std::f64::consts::FRAC_PI_2);
        let e = |a: &CoefficientSequence| extend(&borel_at(a, &t, 1.0), &kern, z, 1e-13).unwrap();
        let lhs = e(&comb);
        let rhs = al * e(&a1) + be * e(&a2);
        let scale = al.norm() * e(&a1).norm() + be.norm() * e(&a2).norm() + 1.0;
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale);
    }

    #[test]
    fn shrinking_grid_never_increases_a(n_keep in 1usize..5, a in coeffs()) {
        let (kern, t) = setup(1.0);
        let a = CoefficientSequence::from_real(&a);
        let b = formal_borel(&a, &t, 0.1).unwrap();
        let hi = b.r0.min(0.3);
        let ext = Extension::new(b, kern, 1e-12);
        let f = |z: PolarPoint| ext.eval(z);
        let s = Sequence::gevrey(1.0).unwrap();
        let thetas = linspace(-0.6, 0.6, 5);
        let g = |th: &[f64]| grid_below(th, hi / 30.0, hi);
        let full = certify_expansion(&f, &a, &s, &g(&thetas), 1, 10, NoiseFloor::default());
        // the rejection rule is per ray, so a passing grid passes on any subset of its rays
        prop_assume!(full.is_ok());
        let full = full.unwrap();
        let sub = certify_expansion(&f, &a, &s, &g(&thetas[..n_keep]), 1, 10, NoiseFloor::default()).unwrap();
        prop_assert!(sub.a <= full.a * (1.0 + 1e-12));
    }
}
