#![allow(dead_code)]

use std::f64::consts::PI;

pub fn bessel_j0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= -(x * x / 4.0) / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

pub fn bessel_j1(x: f64) -> f64 {
    let mut term = x / 2.0;
    let mut sum = term;
    for k in 1..80 {
        term *= -(x * x / 4.0) / (k as f64 * (k + 1) as f64);
        sum += term;
    }
    sum
}

/// First positive zero of `J0` by bisection.
pub fn j0_zero() -> f64 {
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if bessel_j0(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Dirichlet eigenvalue of the unit disk.
pub fn disk_eigenvalue() -> f64 {
    j0_zero().powi(2)
}

/// Torsion constant of the unit disk, from `u = (1 − |x|²)/4`.
pub fn torsion_constant() -> f64 {
    8.0 / PI
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}
