//! First variation of the eigenvalue under normal boundary motion, its
//! finite-difference cross-check, and the two lower bounds on the rate of
//! decrease.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exponents::SobolevExponents;
use crate::geometry::{ring_count, triangulate_with_layers, AngularWeight, BoundarySpeed, StarDomain2D};
use crate::radial::reverse_holder_k;
use crate::variational::{
    boundary_flux_gradient, minimize_rayleigh_from, minimize_rayleigh_with, ExtremalField, VariationalOptions,
};

/// Default relative tolerance for the rate bounds.
pub const BOUND_TOLERANCE: f64 = 0.02;

/// `Ċ = (1−r) ∫_{∂Ω} |∇φ|^r ⟨X,η⟩ dσ` with `|∇φ|` recovered from the
/// boundary flux and `⟨X,η⟩` given per boundary edge.
pub fn hadamard_rate(field: &ExtremalField, normal_velocity: &[f64]) -> Result<f64> {
    let edges = field.mesh().boundary_edges();
    if normal_velocity.len() != edges.len() {
        return Err(LabError::InvalidInput(format!(
            "{} normal velocities for {} boundary edges",
            normal_velocity.len(),
            edges.len()
        )));
    }
    let r = field.exponents().r();
    let grad = boundary_flux_gradient(field);
    let integral: f64 = edges.iter().zip(&grad).zip(normal_velocity).map(|((e, g), x)| g.powf(r) * x * e.length).sum();
    Ok((1.0 - r) * integral)
}

/// Boundary samples moved by `e^{w(θ)}` along the outward normal for time
/// `delta`, where `θ` is the polar angle about the domain centre.
pub fn displaced_domain(domain: &StarDomain2D, weight: &AngularWeight, delta: f64) -> Result<StarDomain2D> {
    let speeds: Vec<f64> = (0..domain.sample_count()).map(|i| weight.eval(domain.theta(i)).exp()).collect();
    domain.advance(&speeds, delta)
}

/// `(C(Ω_δ) − C(Ω))/δ`. Both domains are meshed with `layers` rings so the
/// two meshes share connectivity and differ only by node positions.
pub fn finite_difference_rate(
    domain: &StarDomain2D,
    exps: SobolevExponents,
    weight: &AngularWeight,
    layers: usize,
    delta: f64,
) -> Result<f64> {
    let opts = VariationalOptions::default();
    let base = minimize_rayleigh_with(Arc::new(triangulate_with_layers(domain, layers)?), exps, &opts)?;
    let moved = solve_displaced(&base, domain, weight, layers, delta, &opts)?;
    Ok((moved - base.eigenvalue()) / delta)
}

fn solve_displaced(
    base: &ExtremalField,
    domain: &StarDomain2D,
    weight: &AngularWeight,
    layers: usize,
    delta: f64,
    opts: &VariationalOptions,
) -> Result<f64> {
    let mesh = triangulate_with_layers(&displaced_domain(domain, weight, delta)?, layers)?;
    mesh.validate()?;
    let field = minimize_rayleigh_from(Arc::new(mesh), base.exponents(), base.values().to_vec(), opts)?;
    Ok(field.eigenvalue())
}

/// Formula against Richardson-extrapolated finite differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub eigenvalue: f64,
    /// Boundary-integral rate.
    pub formula: f64,
    /// `δ` and `δ/2`.
    pub steps: Vec<f64>,
    /// One-sided difference quotients at `steps`.
    pub differences: Vec<f64>,
    /// `2 D(δ/2) − D(δ)`.
    pub reference: f64,
    /// `|formula − reference| / |reference|`.
    pub mismatch: f64,
}

/// Solves on `domain` at mesh size `h`, evaluates the formula for speed
/// `e^w`, and compares with difference quotients at `δ` and `δ/2`.
pub fn cross_validate(
    domain: &StarDomain2D,
    exps: SobolevExponents,
    weight: &AngularWeight,
    h: f64,
    delta: f64,
) -> Result<(ExtremalField, VariationReport)> {
    let opts = VariationalOptions::default();
    let layers = ring_count(domain, h)?;
    let mesh = Arc::new(triangulate_with_layers(domain, layers)?);
    let base = minimize_rayleigh_with(mesh.clone(), exps, &opts)?;
    let speed = BoundarySpeed::from_angular(&mesh, domain.center(), weight)?;
    let formula = hadamard_rate(&base, speed.speeds())?;
    let steps = vec![delta, 0.5 * delta];
    let differences = steps
        .iter()
        .map(|&d| Ok((solve_displaced(&base, domain, weight, layers, d, &opts)? - base.eigenvalue()) / d))
        .collect::<Result<Vec<_>>>()?;
    let reference = 2.0 * differences[1] - differences[0];
    let mismatch = (formula - reference).abs() / reference.abs();
    let report = VariationReport { eigenvalue: base.eigenvalue(), formula, steps, differences, reference, mismatch };
    Ok((base, report))
}

/// Both sides of a lower bound on the rate of decrease.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub eigenvalue: f64,
    /// `Ċ` from the boundary integral.
    pub rate: f64,
    /// The boundary integral of the speed weight in the denominator.
    pub weight_integral: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub relative_slack: f64,
    /// `|relative_slack| ≤ tolerance`.
    pub equality: bool,
    pub tolerance: f64,
    /// Right side with the weight integral raised to `p − 1` instead of
    /// `1/(p − 1)`; differs only when `p ≠ 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs_power_p_minus_1: Option<f64>,
}

impl BoundReport {
    fn new(name: &str, eigenvalue: f64, rate: f64, weight_integral: f64, lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        let relative_slack = slack / rhs.abs();
        BoundReport {
            name: name.to_string(),
            eigenvalue,
            rate,
            weight_integral,
            lhs,
            rhs,
            slack,
            relative_slack,
            equality: relative_slack.abs() <= BOUND_TOLERANCE,
            tolerance: BOUND_TOLERANCE,
            rhs_power_p_minus_1: None,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.equality = self.relative_slack.abs() <= tolerance;
        self
    }

    pub fn holds(&self) -> bool {
        self.relative_slack >= -self.tolerance
    }
}

/// Reverse-Hölder constant for exponents `p − 1` and `p` used by
/// [`theorem1_sides`].
pub fn power_rate_constant(exps: SobolevExponents) -> Result<f64> {
    reverse_holder_k(exps, exps.p() - 1.0, exps.p())
}

/// For `p = r < n`: `−d/dt C^{(n−p)/(p(p−1))} ≥ ((n−p)/p) K^{1/(p−1)} / (∫e^{(1−p)w} dσ)^{1/(p−1)}`.
/// For `p = r = n`: `−d/dt log C ≥ (n−1) K^{1/(n−1)} / (∫e^{(1−n)w} dσ)^{1/(n−1)}`.
pub fn theorem1_sides(field: &ExtremalField, speed: &BoundarySpeed, k: f64) -> Result<BoundReport> {
    let exps = field.exponents();
    if !exps.is_homogeneous() || exps.p() <= 1.0 {
        return Err(LabError::InvalidExponents(format!("need p = r > 1, got p = {}, r = {}", exps.p(), exps.r())));
    }
    speed.check_against(field.mesh())?;
    let (n, p) = (exps.dim(), exps.p());
    let c = field.eigenvalue();
    let rate = hadamard_rate(field, speed.speeds())?;
    let integral: f64 =
        field.mesh().boundary_edges().iter().zip(speed.weights()).map(|(e, w)| ((1.0 - p) * w).exp() * e.length).sum();
    let (lhs, factor) = if p < n {
        let a = (n - p) / (p * (p - 1.0));
        (-a * c.powf(a - 1.0) * rate, (n - p) / p)
    } else {
        (-rate / c, n - 1.0)
    };
    let numerator = factor * k.powf(1.0 / (p - 1.0));
    let rhs = numerator / integral.powf(1.0 / (p - 1.0));
    let mut report = BoundReport::new("power_rate", c, rate, integral, lhs, rhs);
    report.rhs_power_p_minus_1 = Some(numerator / integral.powf(p - 1.0));
    Ok(report)
}

/// For `n = r = 2`: `−d/dt log C ≥ (8π/p) / ∫e^{−w} dσ`.
pub fn theorem2_sides(field: &ExtremalField, speed: &BoundarySpeed) -> Result<BoundReport> {
    let exps = field.exponents();
    if exps.n() != 2 || exps.r() != 2.0 {
        return Err(LabError::InvalidExponents(format!("need n = r = 2, got n = {}, r = {}", exps.n(), exps.r())));
    }
    speed.check_against(field.mesh())?;
    let c = field.eigenvalue();
    let rate = hadamard_rate(field, speed.speeds())?;
    let integral: f64 =
        field.mesh().boundary_edges().iter().zip(speed.weights()).map(|(e, w)| (-w).exp() * e.length).sum();
    let rhs = 8.0 * PI / (exps.p() * integral);
    Ok(BoundReport::new("log_rate_2d", c, rate, integral, -rate / c, rhs))
}
