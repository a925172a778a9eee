mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use sobolev_lab::geometry::{triangulate, StarDomain2D};
use sobolev_lab::inequalities::*;
use sobolev_lab::radial::{solve_ball, DEFAULT_GRID};
use sobolev_lab::variational::{minimize_rayleigh, ExtremalField};
use sobolev_lab::SobolevExponents;

fn extremal(domain: &StarDomain2D, h: f64, p: f64, r: f64) -> ExtremalField {
    let mesh = Arc::new(triangulate(domain, h).unwrap());
    minimize_rayleigh(mesh, SobolevExponents::new(2, p, r).unwrap()).unwrap()
}

fn disk() -> StarDomain2D {
    StarDomain2D::disk(1.0).unwrap()
}

fn square() -> StarDomain2D {
    StarDomain2D::square(2.0).unwrap()
}

fn battery(field: &ExtremalField) -> Vec<InequalityReport> {
    let e = field.exponents();
    let (p, r) = (e.p(), e.r());
    let mut out = Vec::new();
    if p == r {
        out.push(check_pp_pminus1(field).unwrap());
        out.push(check_pp_general(field, 1.0, 2.0).unwrap());
        out.push(check_pp_general(field, 0.5, 3.0).unwrap());
    }
    if r == 2.0 {
        out.push(check_2d_8pi(field).unwrap());
    }
    if r < 2.0 {
        out.push(check_pr_general(field, 2.0).unwrap());
        out.push(check_pr_general(field, 4.0).unwrap());
    }
    out
}

#[test]
fn disk_8pi_equality_matches_bessel_value() {
    let field = extremal(&disk(), 0.02, 2.0, 2.0);
    let rep = check_2d_8pi(&field).unwrap();
    let j = common::j0_zero();
    let exact = 4.0 * PI / (j * j);
    assert!(common::rel(rep.lhs, exact) < 0.01, "{} vs {exact}", rep.lhs);
    assert!(rep.relative_slack.abs() < 0.01);
    assert!(rep.equality);
}

#[test]
fn disk_torsion_8pi_reading() {
    let field = extremal(&disk(), 0.02, 1.0, 2.0);
    let rep = check_2d_8pi(&field).unwrap();
    assert!(common::rel(rep.lhs, PI * PI) < 0.01, "{}", rep.lhs);
    assert!(common::rel(rep.rhs, PI * PI) < 0.01, "{}", rep.rhs);
    assert!(rep.equality);
}

#[test]
fn pminus1_is_the_general_check() {
    let field = extremal(&square(), 0.05, 2.0, 2.0);
    assert_eq!(check_pp_pminus1(&field).unwrap(), check_pp_general(&field, 1.0, 2.0).unwrap());
}

#[test]
fn square_slack_is_strict_at_two_resolutions() {
    for h in [0.04, 0.02] {
        let field = extremal(&square(), h, 2.0, 2.0);
        let rep = check_pp_general(&field, 1.0, 2.0).unwrap();
        assert!(rep.relative_slack > rep.equality_tolerance, "h={h}: {rep:?}");
        assert!(!rep.equality);
        let rep = check_2d_8pi(&field).unwrap();
        assert!(rep.relative_slack > rep.equality_tolerance, "h={h}: {rep:?}");
    }
}

#[test]
fn coincident_exponents_close_the_gap() {
    let field = extremal(&square(), 0.04, 1.5, 1.5);
    let rep = check_pp_general(&field, 2.0 - 1e-6, 2.0).unwrap();
    assert!(rep.relative_slack.abs() < 1e-5, "{rep:?}");
    let rep = check_pr_general(&field, 1.5 + 1e-6).unwrap();
    assert!(rep.relative_slack.abs() < 1e-5, "{rep:?}");
}

#[test]
fn pr_constant_follows_the_matched_ball() {
    for h in [0.04, 0.02] {
        let field = extremal(&square(), h, 1.5, 1.5);
        for q in [2.0, 4.0] {
            let rep = check_pr_general(&field, q).unwrap();
            assert!(rep.slack >= 0.0, "h={h} q={q}: {rep:?}");
            let check = rep.exponent_check.unwrap();
            assert!(check.matches && !check.alternative_matches, "{check:?}");
        }
    }
}

#[test]
fn battery_equality_only_on_disks() {
    let domains = [
        ("disk", disk(), true),
        ("square", square(), false),
        ("three_lobe", StarDomain2D::perturbed_disk(1.0, 0.2, 3).unwrap(), false),
    ];
    for (name, d, round) in domains {
        for (p, r) in [(2.0, 2.0), (1.5, 1.5), (3.0, 2.0), (1.5, 2.0)] {
            let field = extremal(&d, 0.02, p, r);
            for rep in battery(&field) {
                assert!(rep.holds(), "{name}: {rep:?}");
                assert_eq!(rep.equality, round, "{name}: {rep:?}");
            }
        }
    }
}

#[test]
fn near_round_limacon_satisfies_battery() {
    let d = StarDomain2D::perturbed_disk(1.0, 0.3, 1).unwrap();
    for (p, r) in [(2.0, 2.0), (1.5, 1.5), (1.0, 2.0)] {
        let field = extremal(&d, 0.02, p, r);
        for rep in battery(&field) {
            assert!(rep.holds(), "{rep:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn balls_are_equality_cases(n in 2u32..4, frac in 0.1f64..0.9, radius in 0.5f64..2.0, q1 in 0.3f64..2.0, dq in 0.2f64..2.0) {
        let p = 1.0 + frac * (n as f64 - 1.0);
        let exps = SobolevExponents::new(n, p, p).unwrap();
        let ball = solve_ball(exps, radius, DEFAULT_GRID).unwrap();
        let rep = check_pp_general(&ball, q1, q1 + dq).unwrap();
        prop_assert!(rep.equality, "{:?}", rep);
    }

    #[test]
    fn balls_are_equality_cases_for_q_above_p(p in 1.0f64..4.0, radius in 0.5f64..2.0, dq in 0.1f64..3.0) {
        let exps = SobolevExponents::new(3, p, 2.0).unwrap();
        let ball = solve_ball(exps, radius, DEFAULT_GRID).unwrap();
        let rep = check_pr_general(&ball, p + dq).unwrap();
        prop_assert!(rep.equality, "{:?}", rep);
        prop_assert!(rep.exponent_check.unwrap().matches);
    }
}
