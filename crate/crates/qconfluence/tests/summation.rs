mod common;

use common::{c, exp_e1};
use qconfluence::harness::registry::lookup;
use qconfluence::summation::{admissible_direction, admissible_from_leading, sum_in_direction};
use qconfluence::{Error, LaurentSeries, LogPoint};
use std::f64::consts::PI;

#[test]
fn euler_series_sums_to_exponential_integral() {
    let ex = lookup("euler").unwrap();
    let s = sum_in_direction(&ex.diff.positive(0), &ex.components[0], 0.0).unwrap();
    for z in [0.05, 0.1, 0.2] {
        let v = s.eval(&LogPoint::new(z, 0.0).unwrap()).unwrap();
        let want = exp_e1(1.0 / z);
        assert!((v.re - want).abs() < 1e-10 * want, "z = {z}: {} vs {want}", v.re);
        assert!(v.im.abs() < 1e-14);
    }
    // off the axis the sum is still the analytic continuation
    let z = LogPoint::new(0.1, 0.5).unwrap();
    let direct = sum_in_direction(&ex.diff.positive(0), &ex.components[0], 0.5).unwrap();
    let a = s.eval(&z).unwrap();
    let b = direct.eval(&z).unwrap();
    assert!((a - b).norm() < 1e-10 * a.norm());
}

#[test]
fn convergent_part_sums_directly() {
    let geo: Vec<_> = (1..64).map(|n| (n, c(1.0))).collect();
    let s = sum_in_direction(&LaurentSeries::from_terms(&geo, 64), &[], 0.0).unwrap();
    assert!((s.eval(&LogPoint::new(0.3, 0.0).unwrap()).unwrap() - 3.0 / 7.0).norm() < 1e-12);
    let zero = sum_in_direction(&LaurentSeries::zero(64), &[], 0.0).unwrap();
    assert_eq!(zero.eval(&LogPoint::new(0.3, 0.0).unwrap()).unwrap(), c(0.0));
}

fn close(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12
}

#[test]
fn decay_arcs_by_hand() {
    // Re(−z^{−1}) < 0 ⇔ cos θ > 0
    let a = admissible_from_leading(&[(c(-1.0), -1)], &[]).unwrap();
    assert_eq!(a.intervals.len(), 1);
    assert!(close(a.intervals[0], (-PI / 2.0, PI / 2.0)));
    assert!(a.direction.abs() < 1e-12);
    let b = admissible_from_leading(&[(c(1.0), -1)], &[]).unwrap();
    assert!(close(b.intervals[0], (PI / 2.0, 3.0 * PI / 2.0)));
    assert!((b.direction - PI).abs() < 1e-12);
}

#[test]
fn order_three_example_sector() {
    let ex = lookup("sec43").unwrap();
    let a = admissible_direction(&ex.diff, &[]).unwrap();
    assert_eq!(a.intervals.len(), 1);
    assert!(close(a.intervals[0], (-PI / 4.0, PI / 4.0)));
    assert!(a.direction.abs() < 1e-12);
    assert!((a.half_width - PI / 8.0).abs() < 1e-12);
    // two-fold arcs of the z^{−2} ratio
    let arcs = &a.certificate[0].arcs;
    assert_eq!(arcs.len(), 3);
    assert!(close(arcs[1], (3.0 * PI / 4.0, 5.0 * PI / 4.0)));
}

#[test]
fn singular_directions_are_avoided() {
    let ex = lookup("euler").unwrap();
    let a = admissible_direction(&ex.diff, &ex.singular_directions()).unwrap();
    assert!(a.direction.abs() < 1e-12);
    let cut = admissible_from_leading(&[(c(-1.0), -1)], &[0.0]).unwrap();
    assert!(cut.direction.abs() > 0.1);
    assert!(cut.half_width <= (cut.direction.abs()) + 1e-12);
}

#[test]
fn empty_intersection_is_an_error() {
    let err = admissible_from_leading(&[(c(-1.0), -1), (c(1.0), -1)], &[]).unwrap_err();
    assert!(matches!(err, Error::EmptyIntersection(_)));
    assert!(err.to_string().contains("no admissible direction"));
}
