mod common;

use std::sync::Arc;

use proptest::prelude::*;
use sobolev_lab::geometry::{triangulate, AngularWeight, BoundarySpeed, StarDomain2D};
use sobolev_lab::hadamard::*;
use sobolev_lab::variational::{minimize_rayleigh, ExtremalField};
use sobolev_lab::SobolevExponents;

fn exps(p: f64, r: f64) -> SobolevExponents {
    SobolevExponents::new(2, p, r).unwrap()
}

fn extremal(domain: &StarDomain2D, h: f64, p: f64, r: f64) -> ExtremalField {
    minimize_rayleigh(Arc::new(triangulate(domain, h).unwrap()), exps(p, r)).unwrap()
}

fn disk() -> StarDomain2D {
    StarDomain2D::disk(1.0).unwrap()
}

fn square() -> StarDomain2D {
    StarDomain2D::square(2.0).unwrap()
}

fn speed(field: &ExtremalField, w: &AngularWeight) -> BoundarySpeed {
    BoundarySpeed::from_angular(field.mesh(), [0.0, 0.0], w).unwrap()
}

#[test]
fn disk_uniform_expansion_rate() {
    let j = common::j0_zero();
    let field = extremal(&disk(), 0.02, 2.0, 2.0);
    let ones = vec![1.0; field.mesh().boundary_edges().len()];
    let rate = hadamard_rate(&field, &ones).unwrap();
    assert!(common::rel(rate, -2.0 * j * j) < 0.02, "{rate}");
}

#[test]
fn disk_finite_difference_matches_scaling_law() {
    let j = common::j0_zero();
    let (_, rep) = cross_validate(&disk(), exps(2.0, 2.0), &AngularWeight::constant(0.0), 0.02, 1e-3).unwrap();
    assert!(common::rel(rep.differences[0], -2.0 * j * j) < 0.02, "{rep:?}");
    assert!(rep.mismatch < 0.01, "{rep:?}");
    assert_eq!(rep.steps, vec![1e-3, 5e-4]);
}

#[test]
fn square_rate_is_negative_and_cross_validates() {
    let (field, rep) = cross_validate(&square(), exps(2.0, 2.0), &AngularWeight::cosine(0.2, 2), 0.02, 1e-3).unwrap();
    assert!(rep.formula < 0.0);
    assert!(rep.mismatch < 0.03, "{rep:?}");
    let ones = vec![1.0; field.mesh().boundary_edges().len()];
    assert!(hadamard_rate(&field, &ones).unwrap() < 0.0);
}

#[test]
fn cross_validation_improves_under_refinement() {
    let cases = [
        (disk(), AngularWeight::sine(0.3, 1), 1.5, 1.5),
        (StarDomain2D::perturbed_disk(1.0, 0.2, 3).unwrap(), AngularWeight::cosine(0.3, 3), 2.0, 2.0),
        (square(), AngularWeight::constant(0.0), 3.0, 2.0),
    ];
    for (d, w, p, r) in cases {
        let (_, coarse) = cross_validate(&d, exps(p, r), &w, 0.04, 1e-3).unwrap();
        let (_, fine) = cross_validate(&d, exps(p, r), &w, 0.02, 1e-3).unwrap();
        assert!(fine.mismatch < 0.03 && coarse.mismatch < 0.03, "{coarse:?} {fine:?}");
        assert!(fine.mismatch < coarse.mismatch, "p={p}: {} then {}", coarse.mismatch, fine.mismatch);
    }
}

#[test]
fn power_rate_bound() {
    // p = n = 2: log form, equality on the disk with constant speed
    let field = extremal(&disk(), 0.02, 2.0, 2.0);
    let k = power_rate_constant(field.exponents()).unwrap();
    let rep = theorem1_sides(&field, &speed(&field, &AngularWeight::constant(0.0)), k).unwrap();
    assert!(rep.equality && rep.holds(), "{rep:?}");
    assert!(common::rel(rep.lhs, 2.0) < 0.02);

    let field = extremal(&disk(), 0.02, 1.5, 1.5);
    let k = power_rate_constant(field.exponents()).unwrap();
    let flat = theorem1_sides(&field, &speed(&field, &AngularWeight::constant(0.0)), k).unwrap();
    assert!(flat.equality && flat.holds(), "{flat:?}");
    // raising the weight integral to p − 1 breaks the disk equality case
    assert!(flat.rhs_power_p_minus_1.unwrap() > 10.0 * flat.lhs);
    let wavy = theorem1_sides(&field, &speed(&field, &AngularWeight::sine(0.3, 1)), k).unwrap();
    assert!(wavy.holds() && !wavy.equality, "{wavy:?}");

    let field = extremal(&square(), 0.04, 1.5, 1.5);
    let k = power_rate_constant(field.exponents()).unwrap();
    let rep = theorem1_sides(&field, &speed(&field, &AngularWeight::constant(0.0)), k).unwrap();
    assert!(rep.relative_slack > rep.tolerance, "{rep:?}");
}

#[test]
fn log_rate_bound_2d() {
    let zero = AngularWeight::constant(0.0);
    let field = extremal(&disk(), 0.02, 2.0, 2.0);
    let rep = theorem2_sides(&field, &speed(&field, &zero)).unwrap();
    assert!(common::rel(rep.lhs, 2.0) < 0.02 && common::rel(rep.rhs, 2.0) < 0.01, "{rep:?}");
    assert!(rep.equality);

    let field = extremal(&disk(), 0.02, 1.0, 2.0);
    let rep = theorem2_sides(&field, &speed(&field, &zero)).unwrap();
    assert!(common::rel(rep.lhs, 4.0) < 0.02 && common::rel(rep.rhs, 4.0) < 0.01, "{rep:?}");
    assert!(rep.equality);

    let field = extremal(&square(), 0.02, 2.0, 2.0);
    let rep = theorem2_sides(&field, &speed(&field, &zero)).unwrap();
    assert!(rep.relative_slack > rep.tolerance, "{rep:?}");
}

#[test]
fn bound_equality_only_for_disk_with_constant_speed() {
    let domains =
        [("disk", disk()), ("square", square()), ("three_lobe", StarDomain2D::perturbed_disk(1.0, 0.2, 3).unwrap())];
    let weights = [AngularWeight::constant(0.0), AngularWeight::constant(0.5), AngularWeight::cosine(0.4, 2)];
    for (name, d) in &domains {
        for (p, r) in [(2.0, 2.0), (1.5, 1.5), (3.0, 2.0)] {
            let field = extremal(d, 0.04, p, r);
            for w in &weights {
                let s = speed(&field, w);
                let expect = *name == "disk" && w.is_constant();
                let mut reps = Vec::new();
                if r == 2.0 {
                    reps.push(theorem2_sides(&field, &s).unwrap());
                }
                if p == r {
                    reps.push(theorem1_sides(&field, &s, power_rate_constant(field.exponents()).unwrap()).unwrap());
                }
                for rep in reps {
                    assert!(rep.holds(), "{name} p={p} {w:?}: {rep:?}");
                    assert_eq!(rep.equality, expect, "{name} p={p} {w:?}: {rep:?}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_speed_decreases_eigenvalue(offset in -1.0f64..1.0, amp in 0.0f64..1.0, mode in 0u32..6, phase in 0.0f64..6.3) {
        let field = extremal(&square(), 0.1, 2.0, 2.0);
        let w = AngularWeight { offset, amplitude: amp, mode, phase };
        let s = speed(&field, &w);
        prop_assert!(hadamard_rate(&field, s.speeds()).unwrap() < 0.0);
    }
}
