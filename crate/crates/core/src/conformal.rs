//! Möbius maps of ℝⁿ, their conformal factors, images of centred balls, and
//! the monotonicity of the eigenvalue along `t ↦ F(𝔹_t)`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exponents::SobolevExponents;
use crate::geometry::{sphere_area, BallDomain};
use crate::quadrature::gauss_legendre;
use crate::radial::{scale_eigenvalue, solve_ball, DEFAULT_GRID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Translate {
        by: Vec<f64>,
    },
    /// Orthogonal matrix, row-major.
    Rotate {
        matrix: Vec<f64>,
    },
    Scale {
        factor: f64,
    },
    /// `x ↦ x/|x|²`.
    Invert,
}

impl Primitive {
    /// Rotation by `angle` in the `(i, j)` coordinate plane.
    pub fn givens(n: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut matrix = vec![0.0; n * n];
        for k in 0..n {
            matrix[k * n + k] = 1.0;
        }
        let (s, c) = angle.sin_cos();
        matrix[i * n + i] = c;
        matrix[j * n + j] = c;
        matrix[i * n + j] = -s;
        matrix[j * n + i] = s;
        Primitive::Rotate { matrix }
    }
}

/// Composition of primitives, applied first to last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    n: usize,
    chain: Vec<Primitive>,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn rotate(matrix: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| matrix[i * n + j] * x[j]).sum()).collect()
}

impl MobiusMap {
    pub fn new(n: usize, chain: Vec<Primitive>) -> Result<Self> {
        if n < 3 {
            return Err(LabError::InvalidInput(format!("Möbius chains need n ≥ 3, got {n}")));
        }
        for (k, p) in chain.iter().enumerate() {
            match p {
                Primitive::Translate { by } if by.len() != n => {
                    return Err(LabError::InvalidInput(format!(
                        "primitive {k}: translation has {} coordinates",
                        by.len()
                    )));
                }
                Primitive::Rotate { matrix } => {
                    if matrix.len() != n * n {
                        return Err(LabError::InvalidInput(format!("primitive {k}: rotation needs {} entries", n * n)));
                    }
                    for i in 0..n {
                        for j in 0..n {
                            let dot: f64 = (0..n).map(|l| matrix[i * n + l] * matrix[j * n + l]).sum();
                            let want = if i == j { 1.0 } else { 0.0 };
                            if (dot - want).abs() > 1e-10 {
                                return Err(LabError::InvalidInput(format!("primitive {k}: matrix is not orthogonal")));
                            }
                        }
                    }
                }
                Primitive::Scale { factor } if !(factor.is_finite() && *factor > 0.0) => {
                    return Err(LabError::InvalidInput(format!(
                        "primitive {k}: scale factor {factor} must be positive"
                    )));
                }
                _ => {}
            }
        }
        Ok(Self { n, chain })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn chain(&self) -> &[Primitive] {
        &self.chain
    }

    /// `F(x)` together with `|DF|(x)`.
    pub fn apply_with_factor(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        if x.len() != self.n {
            return Err(LabError::InvalidInput(format!("point has {} coordinates, expected {}", x.len(), self.n)));
        }
        let mut y = x.to_vec();
        let mut factor = 1.0;
        for p in &self.chain {
            match p {
                Primitive::Translate { by } => y.iter_mut().zip(by).for_each(|(a, b)| *a += b),
                Primitive::Rotate { matrix } => y = rotate(matrix, &y),
                Primitive::Scale { factor: s } => {
                    y.iter_mut().for_each(|a| *a *= s);
                    factor *= s;
                }
                Primitive::Invert => {
                    let r2 = norm2(&y);
                    if !(r2 > 0.0) {
                        return Err(LabError::Singularity(format!("{x:?} is sent to an inversion centre")));
                    }
                    y.iter_mut().for_each(|a| *a /= r2);
                    factor /= r2;
                }
            }
        }
        Ok((y, factor))
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_with_factor(x)?.0)
    }

    pub fn conformal_factor(&self, x: &[f64]) -> Result<f64> {
        Ok(self.apply_with_factor(x)?.1)
    }

    /// `F(𝔹_t)`, tracked sphere by sphere through the chain. Inversion of a
    /// ball that contains or touches the origin is a singularity.
    pub fn image_ball(&self, t: f64) -> Result<BallDomain> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LabError::InvalidInput(format!("radius {t} must be positive")));
        }
        let mut c = vec![0.0; self.n];
        let mut r = t;
        for p in &self.chain {
            match p {
                Primitive::Translate { by } => c.iter_mut().zip(by).for_each(|(a, b)| *a += b),
                Primitive::Rotate { matrix } => c = rotate(matrix, &c),
                Primitive::Scale { factor } => {
                    c.iter_mut().for_each(|a| *a *= factor);
                    r *= factor;
                }
                Primitive::Invert => {
                    let d = norm2(&c) - r * r;
                    if d <= 1e-14 * r * r {
                        return Err(LabError::Singularity(format!(
                            "ball of radius {r} about {c:?} contains the inversion centre"
                        )));
                    }
                    c.iter_mut().for_each(|a| *a /= d);
                    r /= d;
                }
            }
        }
        BallDomain::new(self.n as u32, r, c)
    }

    /// Largest `| |F(x) − c| − ρ | / ρ` over `samples` points of `∂𝔹_t`.
    pub fn image_ball_residual(&self, t: f64, samples: usize) -> Result<f64> {
        let ball = self.image_ball(t)?;
        let mut worst: f64 = 0.0;
        for k in 0..samples {
            let y = self.apply(&sphere_point(self.n, t, k, samples))?;
            let d: f64 = y.iter().zip(ball.center()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            worst = worst.max((d - ball.radius()).abs() / ball.radius());
        }
        Ok(worst)
    }

    /// `∫_{∂𝔹_t} |DF|^e dσ` by nested product quadrature.
    pub fn hypothesis_integral(&self, t: f64, e: f64) -> Result<f64> {
        let quad = SphereQuadrature::new(self.n, DEFAULT_POLAR_ORDER, DEFAULT_AZIMUTH_ORDER);
        let mut total = 0.0;
        for (x, w) in quad.points.iter().zip(&quad.weights) {
            let x: Vec<f64> = x.iter().map(|v| t * v).collect();
            total += w * self.conformal_factor(&x)?.powf(e);
        }
        Ok(total * t.powi(self.n as i32 - 1))
    }
}

/// Deterministic points on the sphere of radius `t`: a golden-angle spiral
/// in the first three coordinates, with the third tilted into the others.
fn sphere_point(n: usize, t: f64, k: usize, m: usize) -> Vec<f64> {
    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
    let s = (1.0 - z * z).sqrt();
    let phi = k as f64 * PI * (3.0 - 5f64.sqrt());
    let mut x = vec![0.0; n];
    x[0] = s * phi.cos();
    x[1] = s * phi.sin();
    x[2] = z;
    for i in 3..n {
        let a = 0.7 * (i as f64) + 0.3 * k as f64;
        let x2 = x[2];
        x[2] = x2 * a.cos();
        x[i] = x2 * a.sin();
    }
    x.iter().map(|v| t * v).collect()
}

pub const DEFAULT_POLAR_ORDER: usize = 64;
pub const DEFAULT_AZIMUTH_ORDER: usize = 128;

/// Nodes and weights on the unit sphere `S^{n−1}`: Gauss-Legendre in each
/// polar angle `θ ∈ [0, π]` with the `sin^{k−2} θ` Jacobian, and the
/// periodic trapezoid rule on the final circle.
struct SphereQuadrature {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    fn new(n: usize, polar: usize, azimuth: usize) -> Self {
        if n == 2 {
            let h = 2.0 * PI / azimuth as f64;
            let points = (0..azimuth).map(|k| {
                let a = (k as f64 + 0.5) * h;
                vec![a.cos(), a.sin()]
            });
            return Self { points: points.collect(), weights: vec![h; azimuth] };
        }
        // S^{n−1} ∋ (cos θ, sin θ ω), dσ = sin^{n−2} θ dθ dω
        let inner = Self::new(n - 1, polar, azimuth);
        let (nodes, gl) = gauss_legendre(polar);
        let mut points = Vec::with_capacity(nodes.len() * inner.points.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for (x, wx) in nodes.iter().zip(&gl) {
            let theta = 0.5 * PI * (x + 1.0);
            let (s, c) = theta.sin_cos();
            let jac = 0.5 * PI * s.powi(n as i32 - 2);
            for (w, ww) in inner.points.iter().zip(&inner.weights) {
                let mut p = Vec::with_capacity(n);
                p.push(c);
                p.extend(w.iter().map(|v| s * v));
                points.push(p);
                weights.push(wx * jac * ww);
            }
        }
        Self { points, weights }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneForm {
    /// `C(F(𝔹_t))^a − C(𝔹_t)^a` with `a = (n−p)/(p(p−1))`, for `1 < p < n`.
    Bracket,
    /// `log(C(F(𝔹_t))/C(𝔹_t))`, for `p = n`.
    LogRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalRow {
    pub t: f64,
    pub image_radius: f64,
    pub c_image: f64,
    pub c_ball: f64,
    pub value: f64,
    /// Centred difference; absent at the ends of the grid.
    pub derivative: Option<f64>,
    /// `∫_{∂𝔹_t} |DF|^{n−2} dσ`.
    pub hypothesis_lhs: f64,
    /// `|∂𝔹_t|^{(p−1)²}`.
    pub hypothesis_rhs: f64,
    pub hypothesis_holds: bool,
    /// `∫_{∂𝔹_t} |DF|^{n−p} dσ`, the weight produced by the change of
    /// variables for general `p`.
    pub weighted_area: f64,
    /// `|∂𝔹_t|`.
    pub sphere_area: f64,
    /// Derivative within tolerance of nonpositive; absent where the
    /// derivative is absent or the hypothesis fails.
    pub nonincreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalReport {
    pub form: MonotoneForm,
    pub n: u32,
    pub p: f64,
    pub tolerance: f64,
    pub rows: Vec<ConformalRow>,
}

impl ConformalReport {
    /// No row with the hypothesis in force has an increasing derivative.
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.nonincreasing != Some(false))
    }

    /// Rows that were actually tested.
    pub fn tested(&self) -> usize {
        self.rows.iter().filter(|r| r.nonincreasing.is_some()).count()
    }

    /// Nonincreasing at every interior row where `∫|DF|^{n−p} ≤ |∂𝔹_t|`,
    /// ignoring the printed hypothesis.
    pub fn passes_where_area_shrinks(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.weighted_area <= r.sphere_area * (1.0 + 1e-12))
            .all(|r| r.derivative.is_none_or(|d| d <= self.tolerance))
    }

    pub fn csv_header() -> &'static str {
        "t,C_image,C_ball,bracket,d_bracket_dt,hypothesis_lhs,hypothesis_rhs"
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::csv_header())?;
        for r in &self.rows {
            let d = r.derivative.map(|d| format!("{d:.12e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{:.12e},{:.12e},{:.12e},{d},{:.12e},{:.12e}",
                r.t, r.c_image, r.c_ball, r.value, r.hypothesis_lhs, r.hypothesis_rhs
            )?;
        }
        Ok(())
    }
}

/// Uniform grid `t_k = k/(m+1)`, `k = 1..m`.
pub fn t_grid(m: usize) -> Vec<f64> {
    (1..=m).map(|k| k as f64 / (m + 1) as f64).collect()
}

/// Evaluates the monotone quantity on `ts` (increasing, uniformly spaced)
/// with both eigenvalues from the unit-ball radial solution and the scaling
/// law. Rows where the printed hypothesis fails abstain.
pub fn theorem3_check(map: &MobiusMap, exps: SobolevExponents, ts: &[f64]) -> Result<ConformalReport> {
    let (n, p) = (exps.n(), exps.p());
    if n as usize != map.dim() {
        return Err(LabError::InvalidInput(format!("map acts on ℝ^{}, exponents have n = {n}", map.dim())));
    }
    if !exps.is_homogeneous() || !(p > 1.0) {
        return Err(LabError::InvalidExponents(format!("need p = r > 1, got p = {p}, r = {}", exps.r())));
    }
    if ts.len() < 3 || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(LabError::InvalidInput("need at least three increasing radii".into()));
    }
    let nf = exps.dim();
    let form = if p < nf { MonotoneForm::Bracket } else { MonotoneForm::LogRatio };
    let a = (nf - p) / (p * (p - 1.0));
    let unit = solve_ball(exps, 1.0, DEFAULT_GRID)?.eigenvalue();

    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let image = map.image_ball(t)?;
        let c_image = scale_eigenvalue(unit, &exps, image.radius());
        let c_ball = scale_eigenvalue(unit, &exps, t);
        let value = match form {
            MonotoneForm::Bracket => c_image.powf(a) - c_ball.powf(a),
            MonotoneForm::LogRatio => (c_image / c_ball).ln(),
        };
        let area = sphere_area(n, t);
        let hypothesis_lhs = map.hypothesis_integral(t, nf - 2.0)?;
        let hypothesis_rhs = area.powf((p - 1.0) * (p - 1.0));
        rows.push(ConformalRow {
            t,
            image_radius: image.radius(),
            c_image,
            c_ball,
            value,
            derivative: None,
            hypothesis_lhs,
            hypothesis_rhs,
            hypothesis_holds: hypothesis_lhs >= hypothesis_rhs,
            weighted_area: map.hypothesis_integral(t, nf - p)?,
            sphere_area: area,
            nonincreasing: None,
        });
    }

    // roundoff in the bracket sets the floor on a meaningful derivative
    let scale = rows.iter().map(|r| r.value.abs().max(r.c_ball.powf(a)).max(1.0)).fold(0.0, f64::max);
    let tolerance = 1e-9 * scale / (ts[1] - ts[0]);
    for k in 1..rows.len() - 1 {
        let d = (rows[k + 1].value - rows[k - 1].value) / (rows[k + 1].t - rows[k - 1].t);
        rows[k].derivative = Some(d);
        if rows[k].hypothesis_holds {
            rows[k].nonincreasing = Some(d <= tolerance);
        }
    }
    Ok(ConformalReport { form, n, p, tolerance, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_quadrature_integrates_polynomials() {
        for n in 3..=5 {
            let q = SphereQuadrature::new(n, 24, 32);
            let area: f64 = q.weights.iter().sum();
            assert!((area - sphere_area(n as u32, 1.0)).abs() < 1e-12 * area, "n={n}");
            // ∫ x₁² dσ = |S^{n−1}|/n
            let m: f64 = q.points.iter().zip(&q.weights).map(|(x, w)| w * x[1] * x[1]).sum();
            assert!((m - area / n as f64).abs() < 1e-12 * area);
            assert!(q.points.iter().all(|x| (norm2(x) - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn sample_points_lie_on_sphere() {
        for n in 3..=5 {
            for k in 0..20 {
                assert!((norm2(&sphere_point(n, 0.5, k, 20)) - 0.25).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_chains() {
        assert!(MobiusMap::new(2, Vec::new()).is_err());
        assert!(MobiusMap::new(3, vec![Primitive::Scale { factor: 0.0 }]).is_err());
        assert!(MobiusMap::new(3, vec![Primitive::Translate { by: vec![1.0] }]).is_err());
        assert!(MobiusMap::new(3, vec![Primitive::Rotate { matrix: vec![1.0; 9] }]).is_err());
        assert!(MobiusMap::new(3, vec![Primitive::givens(3, 0, 2, 0.3)]).is_ok());
        let inv = MobiusMap::new(3, vec![Primitive::Invert]).unwrap();
        assert!(matches!(inv.apply(&[0.0; 3]), Err(LabError::Singularity(_))));
        assert!(matches!(inv.image_ball(0.5), Err(LabError::Singularity(_))));
    }
}
