//! Extremal profiles on balls of any dimension.
//!
//! The decreasing rearrangement `ψ*(v)` of the ball extremal, as a function
//! of enclosed volume `v`, satisfies
//!
//! `(−ψ*′(v))^{r−1} = n^{−r} ω_n^{−r/n} v^{r(1−n)/n} C ∫₀^v (ψ*)^{p−1}`
//!
//! with `ψ*(V) = 0`. Writing `T` for the map that evaluates the right side
//! with `C = 1` and integrates backward from `v = V`, an extremal satisfies
//! `Tψ* = C^{−1/(r−1)} ψ*`. The solver iterates `ψ ← Tψ / ‖Tψ‖_p`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exponents::SobolevExponents;
use crate::geometry::{ball_volume, unit_ball_volume, BallDomain};
use crate::quadrature::{pow0, trapezoid};

pub const DEFAULT_GRID: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    /// Sup-norm change between iterates that counts as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 10_000 }
    }
}

/// Rearranged extremal `ψ*` on the uniform volume grid `v_i = iV/m`,
/// normalized so that `∫₀^V (ψ*)^p dv = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    exps: SobolevExponents,
    radius: f64,
    volume: f64,
    values: Vec<f64>,
    /// `−ψ*′` at the grid nodes; `slope[0]` is the limit at `v → 0` when
    /// finite and `+∞` otherwise.
    slope: Vec<f64>,
    eigenvalue: f64,
    iterations: usize,
    residual: f64,
}

impl RadialProfile {
    pub fn exponents(&self) -> SobolevExponents {
        self.exps
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Largest relative defect of the discrete fixed-point equation
    /// `ψ = C^{1/(r−1)} Tψ` over the grid.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slope
    }

    /// Number of grid cells `m`.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dv(&self) -> f64 {
        self.volume / self.cells() as f64
    }

    pub fn v(&self, i: usize) -> f64 {
        i as f64 * self.dv()
    }

    pub fn sup(&self) -> f64 {
        self.values[0]
    }

    /// One-sided slope `−ψ*′(V)` at the boundary.
    pub fn boundary_slope(&self) -> f64 {
        self.slope[self.cells()]
    }

    /// `ψ*(v)` by linear interpolation; zero beyond `V`.
    pub fn eval(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return self.values[0];
        }
        if v >= self.volume {
            return 0.0;
        }
        let x = v / self.dv();
        let i = (x.floor() as usize).min(self.cells() - 1);
        let s = x - i as f64;
        (1.0 - s) * self.values[i] + s * self.values[i + 1]
    }

    /// `∫_𝔹 ψ^q dμ = ∫₀^V (ψ*)^q dv`, using `ψ⁰ = 1` where `ψ > 0`.
    pub fn moment(&self, q: f64) -> f64 {
        if q == 0.0 {
            return self.volume;
        }
        let f: Vec<f64> = self.values.iter().map(|&x| pow0(x, q)).collect();
        trapezoid(&f, self.dv())
    }

    /// Writes a `# n p r R C` header and `v psi_star` lines.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# n p r R C")?;
        writeln!(out, "# {} {} {} {} {}", self.exps.n(), self.exps.p(), self.exps.r(), self.radius, self.eigenvalue)?;
        for (i, x) in self.values.iter().enumerate() {
            writeln!(out, "{} {}", self.v(i), x)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`RadialProfile::write_text`]; slopes are
    /// rebuilt from the equation.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut header: Option<(u32, f64, f64, f64, f64)> = None;
        let mut values = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let perr = |m: String| LabError::Parse { line: k + 1, message: m };
            if let Some(rest) = line.strip_prefix('#') {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() == 5 && f[0].parse::<u32>().is_ok() {
                    let num = |s: &str| s.parse::<f64>().map_err(|e| perr(format!("`{s}`: {e}")));
                    header = Some((f[0].parse().unwrap(), num(f[1])?, num(f[2])?, num(f[3])?, num(f[4])?));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(perr("expected `v psi_star`".into()));
            }
            values.push(f[1].parse::<f64>().map_err(|e| perr(format!("`{}`: {e}", f[1])))?);
        }
        let (n, p, r, radius, c) =
            header.ok_or_else(|| LabError::Parse { line: 1, message: "missing `# n p r R C` header".into() })?;
        let exps = SobolevExponents::new(n, p, r)?;
        if values.len() < 3 {
            return Err(LabError::Parse { line: 0, message: "profile needs at least three grid values".into() });
        }
        let volume = ball_volume(n, radius);
        let dv = volume / (values.len() - 1) as f64;
        let g = apply_map(&exps, &values, dv, c);
        let residual = fixed_point_defect(&values, &g.values);
        Ok(Self { exps, radius, volume, values, slope: g.slope, eigenvalue: c, iterations: 0, residual })
    }
}

struct MapOutput {
    values: Vec<f64>,
    slope: Vec<f64>,
}

/// Evaluates the right side of the ball equation with eigenvalue `c` at the
/// nodes and integrates `−ψ′` backward from `ψ(V) = 0`.
///
/// Near `v = 0` the slope behaves like `v^{κ−1}` with
/// `κ − 1 = (n − rn + r)/(n(r − 1))`, so each cell integrates
/// `v^{κ−1} q(v)` exactly for piecewise-linear `q = (A c I(v)/v)^{1/(r−1)}`.
fn apply_map(exps: &SobolevExponents, psi: &[f64], dv: f64, c: f64) -> MapOutput {
    let (n, p, r) = (exps.dim(), exps.p(), exps.r());
    let m = psi.len() - 1;
    let a = n.powf(-r) * unit_ball_volume(exps.n()).powf(-r / n);
    let inv = 1.0 / (r - 1.0);
    let kappa = 1.0 + (n - r * n + r) / (n * (r - 1.0));

    // I(v) = ∫₀^v ψ^{p−1}
    let mut integral = vec![0.0; m + 1];
    for i in 0..m {
        integral[i + 1] = integral[i] + 0.5 * dv * (pow0(psi[i], p - 1.0) + pow0(psi[i + 1], p - 1.0));
    }
    let mut q = vec![0.0; m + 1];
    q[0] = (a * c * pow0(psi[0], p - 1.0)).powf(inv);
    for i in 1..=m {
        let v = i as f64 * dv;
        q[i] = (a * c * integral[i] / v).max(0.0).powf(inv);
    }
    let mut slope = vec![0.0; m + 1];
    slope[0] = if kappa > 1.0 {
        0.0
    } else if kappa == 1.0 {
        q[0]
    } else {
        f64::INFINITY
    };
    for i in 1..=m {
        slope[i] = q[i] * (i as f64 * dv).powf(kappa - 1.0);
    }
    let mut values = vec![0.0; m + 1];
    for i in (0..m).rev() {
        let (v0, v1) = (i as f64 * dv, (i + 1) as f64 * dv);
        let m0 = (v1.powf(kappa) - v0.powf(kappa)) / kappa;
        let m1 = (v1.powf(kappa + 1.0) - v0.powf(kappa + 1.0)) / (kappa + 1.0);
        let cell = q[i] * m0 + (q[i + 1] - q[i]) / dv * (m1 - v0 * m0);
        values[i] = values[i + 1] + cell;
    }
    MapOutput { values, slope }
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn fixed_point_defect(psi: &[f64], image: &[f64]) -> f64 {
    let scale = sup_norm(psi).max(f64::MIN_POSITIVE);
    psi.iter().zip(image).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

fn normalize(values: &mut [f64], p: f64, dv: f64) -> f64 {
    let f: Vec<f64> = values.iter().map(|&x| pow0(x, p)).collect();
    let norm = trapezoid(&f, dv).powf(1.0 / p);
    for x in values.iter_mut() {
        *x /= norm;
    }
    norm
}

/// Solves for the extremal of `C_{p,r}(𝔹_R)` on a grid of `m` volume cells.
pub fn solve_ball(exps: SobolevExponents, radius: f64, m: usize) -> Result<RadialProfile> {
    solve_ball_with(exps, radius, m, &RadialOptions::default())
}

pub fn solve_ball_with(exps: SobolevExponents, radius: f64, m: usize, opts: &RadialOptions) -> Result<RadialProfile> {
    exps.require_subcritical()?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(LabError::InvalidInput(format!("ball radius {radius} must be positive")));
    }
    if m < 100 {
        return Err(LabError::InvalidInput(format!("radial grid needs at least 100 cells, got {m}")));
    }
    let (p, r) = (exps.p(), exps.r());
    let volume = ball_volume(exps.n(), radius);
    let dv = volume / m as f64;
    let mut psi: Vec<f64> = (0..=m).map(|i| 1.0 - i as f64 / m as f64).collect();
    normalize(&mut psi, p, dv);

    let mut damping = 1.0;
    let mut last_change = f64::INFINITY;
    let mut lambda = 0.0;
    for it in 1..=opts.max_iterations {
        let image = apply_map(&exps, &psi, dv, 1.0);
        let mut next = image.values;
        lambda = normalize(&mut next, p, dv);
        if damping < 1.0 {
            for (x, old) in next.iter_mut().zip(&psi) {
                *x = damping * *x + (1.0 - damping) * old;
            }
            normalize(&mut next, p, dv);
        }
        let change = psi.iter().zip(&next).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        psi = next;
        if change < opts.tolerance {
            let eigenvalue = lambda.powf(-(r - 1.0));
            let fin = apply_map(&exps, &psi, dv, eigenvalue);
            let residual = fixed_point_defect(&psi, &fin.values);
            return Ok(RadialProfile {
                exps,
                radius,
                volume,
                values: psi,
                slope: fin.slope,
                eigenvalue,
                iterations: it,
                residual,
            });
        }
        if change > last_change && it > 2 {
            damping = 0.5;
        }
        last_change = change;
    }
    let _ = lambda;
    Err(LabError::NoConvergence { iterations: opts.max_iterations, last_change })
}

/// Dilation law `C(RΩ) = R^{n − r − rn/p} C(Ω)`.
pub fn scale_eigenvalue(c: f64, exps: &SobolevExponents, factor: f64) -> f64 {
    factor.powf(exps.scaling_exponent()) * c
}

/// Radius of the ball whose eigenvalue is `c_target`, given the unit-ball
/// eigenvalue.
pub fn matched_radius(c_target: f64, c_unit: f64, exps: &SobolevExponents) -> Result<f64> {
    let e = exps.scaling_exponent();
    if e.abs() < 1e-12 {
        return Err(LabError::DegenerateScaling);
    }
    if !(c_target > 0.0 && c_unit > 0.0) {
        return Err(LabError::InvalidInput("eigenvalues must be positive".into()));
    }
    Ok((c_target / c_unit).powf(1.0 / e))
}

/// Centred ball in dimension `n` with eigenvalue `c_target`.
pub fn matched_ball(c_target: f64, exps: SobolevExponents) -> Result<BallDomain> {
    if exps.scaling_exponent().abs() < 1e-12 {
        return Err(LabError::DegenerateScaling);
    }
    let unit = solve_ball(exps, 1.0, DEFAULT_GRID)?;
    BallDomain::centered(exps.n(), matched_radius(c_target, unit.eigenvalue(), &exps)?)
}

/// `K = C(𝔹₁)^{(n/p)(q₂−q₁)} (∫ψ^{q₁})^{q₂} / (∫ψ^{q₂})^{q₁}` from the
/// unit-ball extremal, for `p = r`.
pub fn reverse_holder_k(exps: SobolevExponents, q1: f64, q2: f64) -> Result<f64> {
    let unit = solve_ball(exps, 1.0, DEFAULT_GRID)?;
    reverse_holder_k_from(&unit, q1, q2)
}

pub fn reverse_holder_k_from(unit: &RadialProfile, q1: f64, q2: f64) -> Result<f64> {
    let exps = unit.exponents();
    if !exps.is_homogeneous() {
        return Err(LabError::InvalidExponents(format!(
            "this constant needs p = r, got p = {}, r = {}",
            exps.p(),
            exps.r()
        )));
    }
    if !(q1 > 0.0 && q2 > q1) {
        return Err(LabError::InvalidInput(format!("need 0 < q1 < q2, got q1 = {q1}, q2 = {q2}")));
    }
    if (unit.radius() - 1.0).abs() > 1e-12 {
        return Err(LabError::InvalidInput("constant is defined from the unit-ball profile".into()));
    }
    let n = exps.dim();
    let p = exps.p();
    // log form avoids overflow for large exponents
    let log_k = (n / p) * (q2 - q1) * unit.eigenvalue().ln() + q2 * unit.moment(q1).ln() - q1 * unit.moment(q2).ln();
    Ok(log_k.exp())
}
