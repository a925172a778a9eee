//! Distribution functions and decreasing rearrangements of piecewise-linear
//! fields, the pointwise comparison with the ball equation, and crossing
//! analysis between rearranged profiles.

use std::io::Write;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exponents::SobolevExponents;
use crate::geometry::{unit_ball_volume, Mesh2D};
use crate::quadrature::{pow0, trapezoid};
use crate::radial::{matched_radius, solve_ball, RadialProfile, DEFAULT_GRID};
use crate::variational::ExtremalField;

pub const DEFAULT_LEVELS: usize = 1000;
pub const DEFAULT_VOLUME_CELLS: usize = 200;

/// Crossing dead band relative to `sup φ` for mesh width `h`.
pub fn dead_band_for(h: f64) -> f64 {
    0.1 * h
}

/// `μ(t) = |{φ > t}|` on a uniform level grid and `φ*(v)` on a uniform
/// volume grid over `[0, |{φ > 0}|]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RearrangementProfile {
    pub levels: Vec<f64>,
    pub mu: Vec<f64>,
    pub volumes: Vec<f64>,
    pub phi_star: Vec<f64>,
}

impl RearrangementProfile {
    pub fn sup(&self) -> f64 {
        *self.levels.last().expect("levels")
    }

    /// `|{φ > 0}|`.
    pub fn support(&self) -> f64 {
        self.mu[0]
    }

    pub fn dv(&self) -> f64 {
        self.volumes[1] - self.volumes[0]
    }

    /// `φ*(v)` by linear interpolation; zero beyond the support.
    pub fn eval(&self, v: f64) -> f64 {
        interpolate(&self.volumes, &self.phi_star, v)
    }

    /// `μ(t)` by linear interpolation on the level grid.
    pub fn mu_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.mu[0];
        }
        if t >= self.sup() {
            return 0.0;
        }
        interpolate(&self.levels, &self.mu, t)
    }

    /// `∫₀^{|Ω|} (φ*)^q dv`.
    pub fn moment(&self, q: f64) -> f64 {
        if q == 0.0 {
            return self.support();
        }
        let f: Vec<f64> = self.phi_star.iter().map(|&x| pow0(x, q)).collect();
        trapezoid(&f, self.dv())
    }

    /// Two blocks: `t mu` lines, then `v phi_star` lines.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# t mu")?;
        for (t, m) in self.levels.iter().zip(&self.mu) {
            writeln!(out, "{t} {m}")?;
        }
        writeln!(out)?;
        writeln!(out, "# v phi_star")?;
        for (v, f) in self.volumes.iter().zip(&self.phi_star) {
            writeln!(out, "{v} {f}")?;
        }
        Ok(())
    }
}

/// Linear interpolation on an increasing grid; clamped at the ends, zero to
/// the right of the last node.
fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let last = x.len() - 1;
    if at <= x[0] {
        return y[0];
    }
    if at >= x[last] {
        return if at == x[last] { y[last] } else { 0.0 };
    }
    let i = x.partition_point(|&xi| xi <= at).saturating_sub(1).min(last - 1);
    let s = (at - x[i]) / (x[i + 1] - x[i]);
    (1.0 - s) * y[i] + s * y[i + 1]
}

/// Exact area of `{u > t}` on one linear triangle with sorted vertex values
/// `a ≤ b ≤ c`.
fn superlevel_area(area: f64, a: f64, b: f64, c: f64, t: f64) -> f64 {
    if t < a {
        area
    } else if t >= c {
        0.0
    } else if t >= b {
        area * (c - t) * (c - t) / ((c - a) * (c - b))
    } else {
        area * (1.0 - (t - a) * (t - a) / ((b - a) * (c - a)))
    }
}

/// Distribution function of nodal data `values` on `k + 1` levels and its
/// inverse on `cells + 1` volumes.
pub fn distribution_of(mesh: &Mesh2D, values: &[f64], k: usize, cells: usize) -> Result<RearrangementProfile> {
    if k < 100 {
        return Err(LabError::InvalidInput(format!("need at least 100 levels, got {k}")));
    }
    if cells < 10 {
        return Err(LabError::InvalidInput(format!("need at least 10 volume cells, got {cells}")));
    }
    let sup = values.iter().copied().fold(0.0, f64::max);
    if !(sup > 0.0) {
        return Err(LabError::ZeroFunction);
    }
    let levels: Vec<f64> = (0..=k).map(|j| if j == k { sup } else { sup * j as f64 / k as f64 }).collect();
    let mut mu = vec![0.0; k + 1];
    // whole-triangle contributions to every level below index `lo`
    let mut below = vec![0.0; k + 1];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut u = [values[tri[0]].max(0.0), values[tri[1]].max(0.0), values[tri[2]].max(0.0)];
        u.sort_by(f64::total_cmp);
        let [a, b, c] = u;
        if c <= 0.0 {
            continue;
        }
        let area = mesh.area_of(t);
        // only levels in [a, c) need the formula
        let lo = ((a / sup) * k as f64).floor() as usize;
        let hi = (((c / sup) * k as f64).ceil() as usize).min(k);
        below[lo] += area;
        for j in lo..=hi {
            mu[j] += superlevel_area(area, a, b, c, levels[j]);
        }
    }
    let mut running = 0.0;
    for j in (0..=k).rev() {
        mu[j] += running;
        running += below[j];
    }
    mu[k] = 0.0;
    // rounding can break monotonicity by an ulp
    for j in (0..k).rev() {
        if mu[j] < mu[j + 1] {
            mu[j] = mu[j + 1];
        }
    }
    let support = mu[0];
    let volumes: Vec<f64> = (0..=cells).map(|i| support * i as f64 / cells as f64).collect();
    let mut phi_star = vec![0.0; cells + 1];
    phi_star[0] = sup;
    for i in 1..cells {
        let v = volumes[i];
        // largest j with mu[j] > v; mu is nonincreasing
        let j = mu.partition_point(|&m| m > v).saturating_sub(1).min(k - 1);
        let (m0, m1) = (mu[j], mu[j + 1]);
        let s = if m0 > m1 { (m0 - v) / (m0 - m1) } else { 0.0 };
        phi_star[i] = levels[j] + s * (levels[j + 1] - levels[j]);
    }
    phi_star[cells] = 0.0;
    Ok(RearrangementProfile { levels, mu, volumes, phi_star })
}

pub fn distribution(field: &ExtremalField, k: usize) -> Result<RearrangementProfile> {
    distribution_of(field.mesh(), field.values(), k, DEFAULT_VOLUME_CELLS)
}

/// Result of comparing a rearranged extremal with the ball equation.
#[derive(Debug, Clone, Serialize)]
pub struct TalentiReport {
    /// Interior volume nodes.
    pub v: Vec<f64>,
    /// `n^{−r} ω_n^{−r/n} C v^{r(1−n)/n} ∫₀^v (φ*)^{p−1}` at `v`.
    pub rhs: Vec<f64>,
    /// Smoothed `(−φ*′)^{r−1}` at `v`.
    pub lhs: Vec<f64>,
    pub slack: Vec<f64>,
    pub min_slack: f64,
    pub max_abs_slack: f64,
    /// `10 h · max rhs`.
    pub eps_mesh: f64,
    pub h: f64,
    /// Width of the derivative stencil plus smoother, in volume cells.
    pub smoother_width: usize,
    pub passes: bool,
}

/// Talenti comparison on the interior volume nodes of `profile`.
pub fn talenti_slack(profile: &RearrangementProfile, c: f64, exps: &SobolevExponents, h: f64) -> TalentiReport {
    let (n, p, r) = (exps.dim(), exps.p(), exps.r());
    let a = n.powf(-r) * unit_ball_volume(exps.n()).powf(-r / n);
    let m = profile.volumes.len() - 1;
    let dv = profile.dv();
    let f = &profile.phi_star;
    let mut integral = vec![0.0; m + 1];
    for i in 0..m {
        integral[i + 1] = integral[i] + 0.5 * dv * (pow0(f[i], p - 1.0) + pow0(f[i + 1], p - 1.0));
    }
    // central differences, one-sided at the ends
    let mut deriv = vec![0.0; m + 1];
    deriv[0] = (f[0] - f[1]) / dv;
    deriv[m] = (f[m - 1] - f[m]) / dv;
    for i in 1..m {
        deriv[i] = (f[i - 1] - f[i + 1]) / (2.0 * dv);
    }
    let mut smooth = deriv.clone();
    for i in 1..m {
        smooth[i] = 0.25 * deriv[i - 1] + 0.5 * deriv[i] + 0.25 * deriv[i + 1];
    }
    let mut v = Vec::with_capacity(m - 1);
    let mut rhs = Vec::with_capacity(m - 1);
    let mut lhs = Vec::with_capacity(m - 1);
    for i in 1..m {
        let vi = profile.volumes[i];
        v.push(vi);
        rhs.push(a * c * vi.powf(r * (1.0 - n) / n) * integral[i]);
        lhs.push(smooth[i].max(0.0).powf(r - 1.0));
    }
    let slack: Vec<f64> = rhs.iter().zip(&lhs).map(|(a, b)| a - b).collect();
    let scale = rhs.iter().copied().fold(0.0, f64::max);
    let eps_mesh = 10.0 * h * scale;
    let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs_slack = slack.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    TalentiReport {
        v,
        rhs,
        lhs,
        slack,
        min_slack,
        max_abs_slack,
        eps_mesh,
        h,
        smoother_width: 4,
        passes: min_slack >= -eps_mesh,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingPattern {
    /// Profiles agree within the dead band everywhere.
    Equal,
    /// `φ* ≥ ψ*` throughout.
    PhiDominates,
    /// `ψ* ≥ φ*` to the left of a single crossing and `φ* > ψ*` after it.
    SingleCrossing,
    Other,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    /// Sign changes of `φ* − ψ*` outside the dead band.
    pub count: usize,
    /// First crossing seen from the left.
    pub first_crossing: Option<f64>,
    /// Last crossing, i.e. the first seen from the right.
    pub last_crossing: Option<f64>,
    pub pattern: CrossingPattern,
    pub dead_band: f64,
    pub max_difference: f64,
    pub min_difference: f64,
}

/// Sign structure of `φ* − ψ*` on a shared volume grid; differences within
/// `dead_band` count as zero.
pub fn crossing_analysis(v: &[f64], phi_star: &[f64], psi_star: &[f64], dead_band: f64) -> Result<CrossingReport> {
    if v.len() != phi_star.len() || v.len() != psi_star.len() || v.len() < 3 {
        return Err(LabError::InvalidInput("profiles must share a grid of at least three nodes".into()));
    }
    for (name, f) in [("phi*", phi_star), ("psi*", psi_star)] {
        if let Some(i) = (1..f.len()).find(|&i| f[i] > f[i - 1] + dead_band) {
            return Err(LabError::NotComparable(format!("{name} increases at v = {}", v[i])));
        }
    }
    let d: Vec<f64> = phi_star.iter().zip(psi_star).map(|(a, b)| a - b).collect();
    let sign: Vec<i8> = d
        .iter()
        .map(|&x| {
            if x > dead_band {
                1
            } else if x < -dead_band {
                -1
            } else {
                0
            }
        })
        .collect();
    let nonzero: Vec<usize> = (0..d.len()).filter(|&i| sign[i] != 0).collect();
    let mut changes = Vec::new();
    for w in nonzero.windows(2) {
        let (i, j) = (w[0], w[1]);
        if sign[i] != sign[j] {
            // zero of the linear interpolant between the last node of one sign and the first of the other
            let k = (i..j).find(|&k| d[k].signum() != d[k + 1].signum() && d[k] != 0.0).unwrap_or(i);
            let t = d[k] / (d[k] - d[k + 1]);
            let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
            changes.push((v[k] + t * (v[k + 1] - v[k]), sign[i], sign[j]));
        }
    }
    let pattern = if nonzero.is_empty() {
        CrossingPattern::Equal
    } else if sign.iter().all(|&s| s >= 0) {
        CrossingPattern::PhiDominates
    } else if changes.len() == 1 && changes[0].1 == -1 && changes[0].2 == 1 {
        CrossingPattern::SingleCrossing
    } else {
        CrossingPattern::Other
    };
    Ok(CrossingReport {
        count: changes.len(),
        first_crossing: changes.first().map(|c| c.0),
        last_crossing: changes.last().map(|c| c.0),
        pattern,
        dead_band,
        max_difference: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_difference: d.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// How the field and ball profiles are scaled against each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Matching {
    /// Equal suprema.
    Sup,
    /// Equal `∫ f^q`.
    Moment(f64),
}

/// Ball whose eigenvalue equals the field's, solved on `m` cells.
pub fn matched_ball_profile(field: &ExtremalField, m: usize) -> Result<RadialProfile> {
    let exps = field.exponents();
    let unit = solve_ball(exps, 1.0, DEFAULT_GRID)?;
    let radius = matched_radius(field.eigenvalue(), unit.eigenvalue(), &exps)?;
    solve_ball(exps, radius, m)
}

/// Rearranged field and matched-ball profile on the common grid over
/// `[0, |𝔹*|]`, scaled per `matching`, with the crossing analysis.
#[derive(Debug, Clone, Serialize)]
pub struct BallComparison {
    pub v: Vec<f64>,
    pub phi_star: Vec<f64>,
    pub psi_star: Vec<f64>,
    pub report: CrossingReport,
}

pub fn compare_with_ball(
    profile: &RearrangementProfile,
    ball: &RadialProfile,
    matching: Matching,
    cells: usize,
    dead_band: f64,
) -> Result<BallComparison> {
    let vb = ball.volume();
    let v: Vec<f64> = (0..=cells).map(|i| vb * i as f64 / cells as f64).collect();
    let phi: Vec<f64> = v.iter().map(|&x| profile.eval(x)).collect();
    let scale = match matching {
        Matching::Sup => profile.sup() / ball.sup(),
        Matching::Moment(q) => (profile.moment(q) / ball.moment(q)).powf(1.0 / q),
    };
    let psi: Vec<f64> = v.iter().map(|&x| scale * ball.eval(x)).collect();
    let report = crossing_analysis(&v, &phi, &psi, dead_band * profile.sup())?;
    Ok(BallComparison { v, phi_star: phi, psi_star: psi, report })
}
