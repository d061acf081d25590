mod common;

use common::{c, qexp_product, rel};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qconfluence::qfunctions::{gamma, gamma_p, qexp, ThetaEvaluator};
use qconfluence::{LogPoint, QParam};

fn q_choice() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.01, 1.1, 2.0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn theta_functional_equation(q in q_choice(), r in 0.05f64..5.0, a in -3.0f64..3.0) {
        let th = ThetaEvaluator::new(QParam::new(q).unwrap());
        let z = LogPoint::new(r, a).unwrap();
        let lhs = th.theta(&z.scale(q).unwrap()).unwrap();
        prop_assert!(rel(lhs, z.to_complex() * th.theta(&z).unwrap()) < 1e-10);
    }

    #[test]
    fn lambda_functional_equation(q in q_choice(), r in 0.05f64..5.0, a in -3.0f64..3.0,
                                  ar in 0.3f64..3.0, aa in -2.0f64..2.0) {
        let th = ThetaEvaluator::new(QParam::new(q).unwrap());
        let z = LogPoint::new(r, a).unwrap();
        let alpha = C64::from_polar(ar, aa);
        let lhs = th.lambda(&z.scale(q).unwrap(), alpha).unwrap();
        prop_assert!(rel(lhs, alpha * th.lambda(&z, alpha).unwrap()) < 1e-10);
    }

    #[test]
    fn qexp_functional_equation(q in q_choice(), r in 0.0f64..5.0, a in -3.0f64..3.0) {
        let z = C64::from_polar(r, a);
        let d = (qexp(z * q, q).unwrap() - qexp(z, q).unwrap()) / (q - 1.0);
        let rhs = z * qexp(z, q).unwrap();
        // the difference quotient loses the scale of e_q(qz) to cancellation
        let scale = qexp(z * q, q).unwrap().norm().max(rhs.norm()) / (q - 1.0);
        prop_assert!((d - rhs).norm() < 1e-10 * scale.max(1e-300));
    }

    #[test]
    fn gamma_p_recurrence(q in q_choice(), re in 0.1f64..6.0, im in -2.0f64..2.0) {
        let p = 1.0 / q;
        let x = C64::new(re, im);
        let bracket = (1.0 - (x * p.ln()).exp()) / (1.0 - p);
        prop_assert!(rel(gamma_p(x + 1.0, p).unwrap(), bracket * gamma_p(x, p).unwrap()) < 1e-10);
    }

    #[test]
    fn qexp_matches_direct_product(b in 1.05f64..3.0, r in 0.0f64..4.0, a in -3.0f64..3.0) {
        let z = C64::from_polar(r, a);
        prop_assert!(rel(qexp(z, b).unwrap(), qexp_product(z, b)) < 1e-12);
    }
}

#[test]
fn special_values() {
    assert_eq!(qexp(c(0.0), 1.3).unwrap(), c(1.0));
    assert_eq!(qexp(c(0.0), 0.7).unwrap(), c(1.0));
    // ∏_{k≥1}(1+2^{−k}) multiplied out
    let mut e2 = 1.0;
    for k in 1..=50 {
        e2 *= 1.0 + 0.5f64.powi(k);
    }
    assert!((qexp(c(1.0), 2.0).unwrap().re - e2).abs() < 1e-13);
    assert!((e2 - 2.3842311).abs() < 1e-7);
    for b in [1.1f64, 1.5, 2.0] {
        for n in 1..4 {
            let zero = qexp(c(b.powi(n) / (1.0 - b)), b).unwrap();
            assert!(zero.norm() < 1e-12, "b = {b}, n = {n}: {zero}");
        }
    }
}

#[test]
fn theta_at_one_matches_bilateral_sum() {
    // Θ_q(z) = Σ_ℓ q^{−ℓ(ℓ−1)/2} z^ℓ, summed directly
    let q: f64 = 2.0;
    let direct: f64 = (-40..=40).map(|l: i32| q.powf(-(l * (l - 1)) as f64 / 2.0)).sum();
    let th = ThetaEvaluator::new(QParam::new(q).unwrap());
    let v = th.theta(&LogPoint::new(1.0, 0.0).unwrap()).unwrap();
    assert!((v.re - direct).abs() < 1e-12 * direct);
    assert!((direct - 3.28326512).abs() < 1e-7);
    let minus = th.theta(&LogPoint::new(1.0, std::f64::consts::PI).unwrap()).unwrap();
    assert!(minus.norm() < 1e-12);
}

#[test]
fn gamma_p_tends_to_gamma() {
    let exact = gamma(c(2.5)).unwrap().re;
    assert!((exact - 1.329_340_388_179_137).abs() < 1e-13);
    let mut last = f64::INFINITY;
    for p in [0.9, 0.99, 0.999] {
        let e = (gamma_p(c(2.5), p).unwrap().re - exact).abs();
        assert!(e < last);
        last = e;
    }
    assert!(last < 1e-3);
    assert!((gamma_p(c(1.0), 0.3).unwrap() - 1.0).norm() < 1e-14);
    assert!((gamma_p(c(3.0), 0.5).unwrap() - 1.5).norm() < 1e-13);
}

#[test]
fn log_q_shift_and_lambda_one() {
    let th = ThetaEvaluator::new(QParam::new(1.3).unwrap());
    for &(r, a) in &[(0.4, 0.3), (2.0, -1.0)] {
        let z = LogPoint::new(r, a).unwrap();
        let d = th.l_q(&z.scale(1.3).unwrap()).unwrap() - th.l_q(&z).unwrap();
        assert!((d - 1.0).norm() < 1e-12);
        assert!((th.lambda(&z, c(1.0)).unwrap() - 1.0).norm() < 1e-12);
    }
}
