//! Independent reference values shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64 as C64;

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// `e^x E₁(x)` for `x > 0` from the continued fraction
/// `1/(x + 1/(1 + 1/(x + 2/(1 + 2/(x + …)))))`, evaluated backward.
pub fn exp_e1(x: f64) -> f64 {
    let mut t = 0.0;
    for n in (1..=400).rev() {
        let n = n as f64;
        t = n / (1.0 + n / (x + t));
    }
    1.0 / (x + t)
}

/// `∏_{n≥0}(1+(b−1)b^{−n−1}x)` for `b > 1`, multiplied out directly.
pub fn qexp_product(x: C64, b: f64) -> C64 {
    let mut acc = c(1.0);
    let mut w = (b - 1.0) / b;
    for _ in 0..200_000 {
        acc *= 1.0 + w * x;
        w /= b;
        if w * x.norm() < 1e-18 {
            break;
        }
    }
    acc
}

/// Composite Gauss–Legendre (5 points) on `[a, b]` with `n` panels.
pub fn gl5(f: impl Fn(f64) -> C64, a: f64, b: f64, n: usize) -> C64 {
    let x = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    let w = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / n as f64;
    let mut acc = c(0.0);
    for i in 0..n {
        let m = a + (i as f64 + 0.5) * h;
        for k in 0..5 {
            acc += f(m + 0.5 * h * x[k]) * (w[k] * 0.5 * h);
        }
    }
    acc
}
