mod common;

use common::{c, exp_e1, gl5, qexp_product, rel};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qconfluence::deformation::deform_operator;
use qconfluence::harness::registry::lookup;
use qconfluence::operators::{formal_gauge, FactoredDifferentialOperator};
use qconfluence::series::EXACT;
use qconfluence::solutions::*;
use qconfluence::summation::SummedPositivePart;
use qconfluence::{LaurentSeries, LogPoint, QParam};
use std::f64::consts::PI;

fn q_fund(name: &str, q: f64) -> QFundamental {
    let ex = lookup(name).unwrap();
    let op = ex.q_operator(QParam::new(q).unwrap()).unwrap();
    QFundamental::new(QDiagonal::new(op, &ex.diff).unwrap())
}

fn diff_fund(name: &str, d: f64) -> DiffFundamental {
    let ex = lookup(name).unwrap();
    DiffFundamental::new(DiffDiagonal::new(ex.diff.clone(), ex.summed(d).unwrap()).unwrap())
}

#[test]
fn order_two_example_matches_qexp_route() {
    for q in [1.3, 1.1, 1.05] {
        let f = q_fund("sec3-m2", q);
        for &(r, a) in &[(0.3, 0.0), (0.7, 0.9), (1.5, -1.2)] {
            let z = LogPoint::new(r, a).unwrap();
            let zc = z.to_complex();
            let u = f.matrix(&z).unwrap();
            // u_1 is e_q(z^{−1}) up to a σ_q-invariant factor
            let k0 = u[0][0] / qexp_product(1.0 / zc, q);
            let zq = z.scale(q).unwrap();
            let k1 = f.diagonal().u(0, &zq).unwrap() / qexp_product(1.0 / zq.to_complex(), q);
            assert!(rel(k0, k1) < 1e-10);
            assert!((u[1][1] - 1.0).norm() < 1e-15);
            // e_q(z^{−1})·(q−1)Σ_{ℓ≥1} 1/e_q(q^{−1}t_ℓ^{−1}), t_ℓ = q^{−ℓ}z
            let mut sum = c(0.0);
            for l in 1..20_000 {
                let t = zc * q.powi(-l);
                let term = 1.0 / qexp_product(1.0 / (q * t), q);
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            let want = qexp_product(1.0 / zc, q) * (q - 1.0) * sum;
            assert!(rel(u[0][1], want) < 1e-10, "q = {q}, z = {zc}: {} vs {want}", u[0][1]);
        }
    }
}

#[test]
fn diagonal_functional_equation_off_the_sector() {
    let f = q_fund("sec43", 1.1);
    let z = LogPoint::new(0.2, 0.6 * PI).unwrap();
    let g1 = f.diagonal().operator().family(0).g(&z).unwrap();
    let u = f.diagonal().u(0, &z).unwrap();
    let uq = f.diagonal().u(0, &z.scale(1.1).unwrap()).unwrap();
    assert!((uq - g1 * u).norm() / u.norm() < 1e-9);
}

#[test]
fn differential_diagonals_in_closed_form() {
    let f = diff_fund("sec43", 0.0);
    for &(r, a) in &[(0.3, 0.1), (0.8, -0.3)] {
        let z = LogPoint::new(r, a).unwrap();
        let w = 1.0 / z.to_complex();
        let u = f.matrix(&z).unwrap();
        assert!(rel(u[0][0], (w * w).exp()) < 1e-13);
        assert!(rel(u[1][1], w.exp()) < 1e-13);
        assert!((u[2][2] - 1.0).norm() < 1e-15);
        assert_eq!(u[2][0], c(0.0));
    }
}

#[test]
fn differential_off_diagonals_against_quadrature() {
    let f = diff_fund("sec43", 0.0);
    for r in [0.1f64, 0.2, 0.3] {
        let z = LogPoint::new(r, 0.0).unwrap();
        let u = f.matrix(&z).unwrap();
        // ũ_23 = e^{1/z}E₁(1/z)
        let u23 = exp_e1(1.0 / r);
        assert!((u[1][2].re - u23).abs() < 1e-10 * u23, "r = {r}");
        // with s = 1/t: ũ_12 = e^{1/z²}∫_{1/z}^∞ e^{s−s²} ds/s,
        // ũ_13 = e^{1/z²}∫_{1/z}^∞ e^{−s²} e^{s}E₁(s) ds/s
        let a = 1.0 / r;
        let b = a + 12.0;
        let i12 = gl5(|s| c((s - s * s + a * a).exp() / s), a, b, 4000);
        let i13 = gl5(|s| c((a * a - s * s).exp() * exp_e1(s) / s), a, b, 4000);
        assert!(rel(u[0][1], i12) < 1e-9, "r = {r}: {} vs {}", u[0][1], i12);
        assert!(rel(u[0][2], i13) < 1e-9, "r = {r}: {} vs {}", u[0][2], i13);
    }
    let u = f.matrix(&LogPoint::new(0.2, 0.0).unwrap()).unwrap();
    assert!((u[0][1].re - 3.156279818060435).abs() < 1e-10);
}

#[test]
fn differential_residuals_on_five_points() {
    for name in ["sec43", "euler", "sec3-m2"] {
        let f = diff_fund(name, 0.0);
        for &(r, a) in &[(0.2, 0.0), (0.3, 0.1), (0.5, -0.1), (0.7, 0.05), (1.0, 0.0)] {
            let z = LogPoint::new(r, a).unwrap();
            assert!(diff_residual(&f, &z).unwrap() < 1e-6, "{name} at {r}, {a}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn q_residual_at_random_points(q in 1.02f64..1.5, r in 0.1f64..2.0, a in -0.7f64..0.7,
                                   name in prop::sample::select(vec!["sec3-m2", "sec43", "euler"])) {
        let f = q_fund(name, q);
        let z = LogPoint::new(r, a).unwrap();
        prop_assert!(q_residual(&f, &z).unwrap() < 1e-9);
    }

    #[test]
    fn finite_n_identity(q in 1.02f64..1.5, r in 0.1f64..2.0, a in -0.7f64..0.7,
                         name in prop::sample::select(vec!["sec3-m2", "sec43"])) {
        let f = q_fund(name, q);
        let z = LogPoint::new(r, a).unwrap();
        for n in [1, 5, 12] {
            for k in 1..f.order() {
                for j in 0..k {
                    prop_assert!(finite_n_identity_residual(&f, j, k, &z, n).unwrap() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn connection_constants_of_the_order_three_example() {
    let z = LogPoint::new(0.2, 0.6 * PI).unwrap();
    let mut last = f64::INFINITY;
    for q in [1.1, 1.05, 1.01] {
        let f = q_fund("sec43", q);
        let gauge = formal_gauge(f.diagonal().operator(), 20).unwrap();
        let cc = estimate_connection(&f, &gauge, 0, 1, &z, 200_000, 1e-10).unwrap();
        assert!(cc.converged);
        assert!(cc.value.norm() < 0.1);
        assert!(cc.value.norm() <= last);
        last = cc.value.norm();
    }
    let f = q_fund("sec43", 1.1);
    let gauge = formal_gauge(f.diagonal().operator(), 20).unwrap();
    assert!(estimate_connection(&f, &gauge, 1, 1, &z, 10, 1e-10).is_err());
}

#[test]
fn with_constants_solves_the_system() {
    let f = q_fund("euler", 1.2);
    let gauge = formal_gauge(f.diagonal().operator(), 20).unwrap();
    let z = LogPoint::new(0.6, 0.2).unwrap();
    let cm = connection_matrix(&f, &gauge, &z, 20_000, 1e-10).unwrap();
    let g = f.clone().with_constants(cm.clone());
    assert!(q_residual(&g, &z).unwrap() < 1e-9);
    let du = g.matrix(&z).unwrap()[0][1] - f.matrix(&z).unwrap()[0][1];
    assert!((du - cm[0][1] * f.matrix(&z).unwrap()[0][0]).norm() < 1e-12 * du.norm().max(1.0));
}

fn scalar(f: LaurentSeries) -> (FactoredDifferentialOperator, DiffFundamental) {
    let op = FactoredDifferentialOperator::new(vec![f]).unwrap();
    let d = DiffFundamental::new(DiffDiagonal::new(op.clone(), vec![SummedPositivePart::zero()]).unwrap());
    (op, d)
}

#[test]
fn scalar_confluence_is_monotone() {
    let (op, d) = scalar(LaurentSeries::polynomial(&[(-1, c(-1.0))]));
    let grid = GridSpec {
        radial: 5,
        angular: 5,
        r_min: 0.1,
        r_max: 0.3,
        arg_min: 0.55 * PI,
        arg_max: 0.7 * PI,
    }
    .points()
    .unwrap();
    let diff = sample_diff(&d, &grid).unwrap();
    let mut last = f64::INFINITY;
    for q in [1.2, 1.05, 1.01] {
        let qop = deform_operator(&op, &[vec![]], QParam::new(q).unwrap()).unwrap();
        let f = QFundamental::new(QDiagonal::new(qop, &op).unwrap());
        let e = confluence_error(q, &sample_q(&f, &grid).unwrap(), &diff, &grid).unwrap().error;
        assert!(e < last, "q = {q}: {e}");
        last = e;
    }
}

#[test]
fn trivial_operator_has_zero_error() {
    let (op, d) = scalar(LaurentSeries::zero(EXACT));
    let grid = GridSpec {
        radial: 3,
        angular: 3,
        r_min: 0.1,
        r_max: 0.3,
        arg_min: -1.0,
        arg_max: 1.0,
    }
    .points()
    .unwrap();
    let qop = deform_operator(&op, &[vec![]], QParam::new(1.1).unwrap()).unwrap();
    let f = QFundamental::new(QDiagonal::new(qop, &op).unwrap());
    let row = confluence_error(1.1, &sample_q(&f, &grid).unwrap(), &sample_diff(&d, &grid).unwrap(), &grid).unwrap();
    assert_eq!(row.error, 0.0);
}

#[test]
fn sampling_is_deterministic_and_ordered() {
    let f = q_fund("sec43", 1.1);
    let grid = GridSpec {
        radial: 3,
        angular: 4,
        r_min: 0.5,
        r_max: 1.0,
        arg_min: -0.2,
        arg_max: 0.2,
    }
    .points()
    .unwrap();
    let a = sample_q(&f, &grid).unwrap();
    let b: Vec<_> = grid.iter().map(|z| f.matrix(z).unwrap()).collect();
    assert_eq!(a, b);
    let rows = sample_rows(&grid, &a, qconfluence::operators::Flavor::QDifference, Some(1.1));
    let mut x = Vec::new();
    let mut y = Vec::new();
    write_csv(&mut x, &rows).unwrap();
    write_csv(&mut y, &rows).unwrap();
    assert_eq!(x, y);
    assert!(String::from_utf8(x).unwrap().starts_with("re_z,im_z,arg_z,j,k,re_u,im_u,flavor,q\n"));
}

#[test]
fn boundedness_near_zero() {
    for q in [1.2, 1.05] {
        let f = q_fund("sec43", q);
        let b = boundedness_sample(&f, &LogPoint::new(0.5, 0.1).unwrap(), 200).unwrap();
        assert!(b.monotone);
        assert!(b.bound.iter().all(|x| x.is_finite()));
    }
    let _ = C64::new(0.0, 0.0);
}
