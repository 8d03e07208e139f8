use carleman::growth::GrowthProfile;
use carleman::moments::{
    equivalence_certificate, fv_eval, kernel, kernel_bound_certificate, log_hm_integral, moment,
    moment_table, Kernel, KernelGrid, Variant,
};
use carleman::proximate::{Weight, WeightExpr};
use carleman::sequences::Sequence;
use num_complex::Complex64;
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

// composite Simpson in x = ln t on a fixed window
fn simpson_log<F: Fn(f64) -> f64>(lphi: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = lphi(a).exp() + lphi(b).exp();
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * lphi(a + i as f64 * h).exp();
    }
    s * h / 3.0
}

#[test]
fn ratio_weight_against_simpson() {
    let w = Weight::user(
        WeightExpr::Ratio {
            k: 2.0,
            m: 1.0,
            coeff: 1.0,
        },
        1.0,
        1.0,
    )
    .unwrap();
    let k = kernel(&w, Variant::Ev).unwrap();
    for lambda in [0.0, 1.0, 3.5, 8.0] {
        let got = moment(&k, lambda, 1e-12).unwrap().value();
        let want = simpson_log(
            |x| {
                let t = x.exp();
                (lambda + 1.0) * x - t * t / (1.0 + t)
            },
            -60.0,
            6.0,
            200_000,
        );
        assert!(
            (got - want).abs() <= 1e-9 * want,
            "lambda={lambda}: {got} vs {want}"
        );
    }
}

#[test]
fn ev_kernel_z_squared() {
    // int t^lambda e^{-t^2} dt = Gamma((lambda+1)/2)/2
    let k = Kernel::parse("ev:2", None).unwrap();
    let t = moment_table(&k, 30, 1e-12).unwrap();
    for p in 0..30 {
        let want = ln_gamma((p as f64 + 1.0) / 2.0) - 2f64.ln();
        assert!((t.log_value(p).unwrap() - want).abs() < 1e-10);
    }
    assert!(t.log_convexity_violation().is_none());
}

#[test]
fn classical_needs_monomial() {
    let w = Weight::user(
        WeightExpr::Ratio {
            k: 2.0,
            m: 1.0,
            coeff: 1.0,
        },
        1.0,
        1.0,
    )
    .unwrap();
    assert!(kernel(&w, Variant::Classical).is_err());
    assert!(Kernel::parse("bogus:1", None).is_err());
}

#[test]
fn fv_is_exponential_for_factorials() {
    let k = Kernel::parse("ev:1", None).unwrap();
    let t = moment_table(&k, 120, 1e-13).unwrap();
    for z in [
        Complex64::new(1.0, 0.0),
        Complex64::new(-3.0, 2.0),
        Complex64::new(10.0, 0.0),
    ] {
        let v = fv_eval(&t, z, 1e-14).unwrap();
        assert!(
            (v.value - z.exp()).norm() <= 1e-11 * z.exp().norm().max(1.0),
            "z={z}"
        );
    }
}

#[test]
fn moments_equivalent_to_gevrey() {
    for alpha in [0.5, 1.0] {
        let k = Kernel::parse(&format!("ev:{}", 1.0 / alpha), None).unwrap();
        let t = moment_table(&k, 60, 1e-12).unwrap();
        let e = equivalence_certificate(&t, &Sequence::gevrey(alpha).unwrap(), 1, 59).unwrap();
        assert!(e.plausible && e.l > 0.0 && e.h.is_finite());
    }
}

#[test]
fn kernel_decays_like_hm() {
    let k = Kernel::parse("ev:1", None).unwrap();
    let p = GrowthProfile::new(&Sequence::gevrey(1.0).unwrap(), 100_000).unwrap();
    let grid = KernelGrid {
        alpha: 0.8,
        r_min: 1e-2,
        r_max: 200.0,
        n_r: 120,
        n_theta: 9,
    };
    let b = kernel_bound_certificate(&k, &p, grid).unwrap();
    assert!(b.c.is_finite() && b.k_const > 0.0);
}

#[test]
fn hm_integral_against_simpson() {
    let p = GrowthProfile::new(&Sequence::gevrey(1.0).unwrap(), 5000).unwrap();
    for (kc, q) in [(1.0, 1usize), (2.0, 3), (0.5, 6)] {
        let got = log_hm_integral(&p, kc, q).unwrap();
        let want = simpson_log(
            |x| q as f64 * x + p.log_hm(kc * (-x).exp()).unwrap(),
            -30.0,
            7.0,
            400_000,
        )
        .ln();
        assert!((got - want).abs() < 1e-6, "K={kc} p={q}: {got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classical_moments_are_gamma(k in 0.3f64..4.0, lambda in 0.0f64..30.0) {
        let kern = Kernel::parse(&format!("classical:{k}"), None).unwrap();
        let m = moment(&kern, lambda, 1e-12).unwrap();
        let want = ln_gamma(1.0 + lambda / k);
        prop_assert!((m.log_value - want).abs() <= 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn tables_log_convex(k in 0.5f64..3.0) {
        let kern = Kernel::parse(&format!("ev:{k}"), None).unwrap();
        let t = moment_table(&kern, 40, 1e-12).unwrap();
        prop_assert!(t.log_convexity_violation().is_none());
    }
}
