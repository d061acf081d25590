mod common;

use common::{c, exp_e1, rel};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qconfluence::qfunctions::ln_gamma_p_real;
use qconfluence::quadrature::{jackson_improper, jackson_partial, laplace, q_laplace_discrete, ray_integral, IntegrandFn};
use qconfluence::{LogPoint, QParam};

/// `e^x E₁(x)` for complex `x` with positive real part.
fn exp_e1_complex(x: C64) -> C64 {
    let mut t = c(0.0);
    for n in (1..=2000).rev() {
        let n = n as f64;
        t = n / (1.0 + n / (x + t));
    }
    1.0 / (x + t)
}

proptest! {
    #[test]
    fn jackson_monomial_law(s in -0.9f64..4.0, q in 1.05f64..3.0, r in 0.1f64..3.0, a in -2.0f64..2.0) {
        let qp = QParam::new(q).unwrap();
        let z = LogPoint::new(r, a).unwrap();
        let f = IntegrandFn::everywhere(move |t| Ok(t.power(c(s))));
        let v = jackson_improper(&f, &z, qp, 1e-17).unwrap().value;
        let want = z.power(c(s + 1.0)) * (q - 1.0) / (q.powf(s + 1.0) - 1.0);
        prop_assert!(rel(v, want) < 1e-12, "{v} vs {want}");
    }

    #[test]
    fn jackson_integral_inverts_the_q_derivative(q in 1.05f64..3.0, r in 0.05f64..1.5, a in -2.0f64..2.0) {
        let qp = QParam::new(q).unwrap();
        let z = LogPoint::new(r, a).unwrap();
        let f = IntegrandFn::everywhere(|t| Ok(t.to_complex().exp() / (2.0 + t.to_complex())));
        let j = |w: &LogPoint| jackson_improper(&f, w, qp, 1e-17).unwrap().value;
        let d = (j(&z.scale(q).unwrap()) - j(&z)) / ((q - 1.0) * z.to_complex());
        prop_assert!(rel(d, f.eval(&z).unwrap()) < 1e-10);
    }

    #[test]
    fn partial_sums_of_one_are_geometric(q in 1.05f64..3.0, n in 0usize..40, r in 0.1f64..3.0) {
        let qp = QParam::new(q).unwrap();
        let z = LogPoint::new(r, 0.4).unwrap();
        let one = IntegrandFn::everywhere(|_| Ok(c(1.0)));
        let v = jackson_partial(&one, &z, n, qp).unwrap();
        let want = z.to_complex() * (1.0 - q.powi(-(n as i32)));
        prop_assert!((v - want).norm() < 1e-13 * r);
    }

    #[test]
    fn q_laplace_inverts_q_borel_on_polynomials(
        coeffs in prop::collection::vec(-2.0f64..2.0, 1..=11),
        level in 1u32..=2,
        q in 1.05f64..2.0,
        r in 0.05f64..0.6,
        a in -1.0f64..1.0,
    ) {
        let qp = QParam::new(q).unwrap();
        let p = qp.p();
        let borel: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(n, a)| a * (-ln_gamma_p_real(1.0 + n as f64 / level as f64, p).unwrap()).exp())
            .collect();
        let g = IntegrandFn::everywhere(move |w| {
            let w = w.to_complex();
            Ok(borel.iter().rev().fold(c(0.0), |acc, b| acc * w + b))
        });
        let z = LogPoint::new(r, a).unwrap();
        let v = q_laplace_discrete(&g, &z, level, qp, 1e-17).unwrap().value;
        let zc = z.to_complex();
        let want = coeffs.iter().rev().fold(c(0.0), |acc, b| acc * zc + b);
        let scale: f64 = coeffs.iter().enumerate().map(|(n, a)| a.abs() * r.powi(n as i32)).sum();
        prop_assert!((v - want).norm() < 1e-9 * scale.max(1e-12), "{v} vs {want}");
    }
}

#[test]
fn jackson_tends_to_riemann_integral() {
    let z = LogPoint::new(0.8, 0.3).unwrap();
    let s = 1.5;
    let exact = z.power(c(s + 1.0)) / (s + 1.0);
    let mut last = f64::INFINITY;
    for q in [1.5, 1.1, 1.01, 1.001] {
        let f = IntegrandFn::everywhere(move |t| Ok(t.power(c(s))));
        let v = jackson_improper(&f, &z, QParam::new(q).unwrap(), 1e-17).unwrap().value;
        let e = (v - exact).norm();
        assert!(e < last);
        assert!(e < 2.0 * (q - 1.0) * exact.norm());
        last = e;
    }
}

#[test]
fn ray_integral_against_exponential_integral() {
    // ∫_0^z e^{−1/t} dt/t = E₁(1/z)
    for &(r, a) in &[(0.2, 0.0), (0.2, 0.3), (0.5, -0.9), (1.0, 0.0)] {
        let z = LogPoint::new(r, a).unwrap();
        let f = IntegrandFn::everywhere(|t| Ok((-1.0 / t.to_complex()).exp()));
        let v = ray_integral(&f, &z, 1e-16).unwrap().value;
        let x = 1.0 / z.to_complex();
        let want = (-x).exp() * exp_e1_complex(x);
        assert!(rel(v, want) < 1e-9, "z = {}: {v} vs {want}", z.to_complex());
    }
    let id = IntegrandFn::everywhere(|t| Ok(t.to_complex()));
    let z = LogPoint::new(0.7, 1.0).unwrap();
    assert!(rel(ray_integral(&id, &z, 1e-16).unwrap().value, z.to_complex()) < 1e-13);
    let bad = IntegrandFn::everywhere(|t| Ok(t.to_complex().powi(-2)));
    assert!(ray_integral(&bad, &LogPoint::new(1.0, 0.0).unwrap(), 1e-12).is_err());
}

#[test]
fn laplace_of_log1p_is_exponential_integral() {
    let g = IntegrandFn::everywhere(|t| Ok(qconfluence::qfunctions::ln1p_c(t.to_complex())));
    for r in [0.05, 0.1, 0.2] {
        let z = LogPoint::new(r, 0.0).unwrap();
        let v = laplace(&g, &z, 1, 0.0, None, 1e-16).unwrap();
        let want = exp_e1(1.0 / r);
        // ∫_0^∞ z^{−1}e^{−ζ/z} log(1+ζ) dζ = e^{1/z}E₁(1/z)
        assert!((v.re - want).abs() < 1e-12 * want, "r = {r}: {} vs {want}", v.re);
    }
    assert!((exp_e1(10.0) - 0.0915633).abs() < 1e-7);
}
