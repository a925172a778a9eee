//! Piecewise-linear minimization of `∫|∇u|^r / (∫|u|^p)^{r/p}` on a
//! triangulated planar domain with zero boundary values.
//!
//! Discretely, with `E(u) = Σ_T |T| |∇u|^r` and `P(u) = ∫u^p` by the
//! edge-midpoint rule, a minimizer with `P(u) = 1` satisfies `A(u) = C B(u)`
//! where `A = ∇E / r` and `B = ∇P / p`. The solver runs nonlinear inverse
//! iteration: solve `A(w) = B(u)`, then `u ← w / P(w)^{1/p}`. For `r = 2`
//! the inner problem is one sparse Cholesky solve; otherwise it is damped
//! Newton on the convex energy `(1/r)E(w) − B(u)·w`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exponents::SobolevExponents;
use crate::geometry::{Mesh2D, Point2};
use crate::linalg::{SpdFactor, SpdPattern};
use crate::quadrature::pow0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalOptions {
    /// Sup-norm change between normalized iterates that counts as converged.
    pub tolerance: f64,
    /// Required relative Euler-Lagrange residual.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    pub max_newton_steps: usize,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self { tolerance: 1e-11, residual_tolerance: 1e-9, max_iterations: 2000, max_newton_steps: 200 }
    }
}

/// Nodal extremal `φ ≥ 0`, zero on the boundary, normalized by `∫φ^p = 1`.
#[derive(Debug, Clone)]
pub struct ExtremalField {
    mesh: Arc<Mesh2D>,
    exps: SobolevExponents,
    values: Vec<f64>,
    gradients: Vec<Point2>,
    eigenvalue: f64,
    iterations: usize,
    residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub n: u32,
    pub p: f64,
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub h: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl ExtremalField {
    pub fn mesh(&self) -> &Mesh2D {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }

    pub fn exponents(&self) -> SobolevExponents {
        self.exps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Per-triangle gradients.
    pub fn gradients(&self) -> &[Point2] {
        &self.gradients
    }

    pub fn eigenvalue(&self) -> f64 {
        self.eigenvalue
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `‖A(φ) − C B(φ)‖_∞ / (C ‖B(φ)‖_∞)` over interior nodes.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `∫_Ω φ^q dμ`; for `q = 0` the measure of `{φ > 0}`.
    pub fn moment(&self, q: f64) -> f64 {
        moment(&self.mesh, &self.values, q)
    }

    pub fn summary(&self) -> FieldSummary {
        FieldSummary {
            n: self.exps.n(),
            p: self.exps.p(),
            r: self.exps.r(),
            c: self.eigenvalue,
            h: self.mesh.h(),
            iterations: self.iterations,
            residual: self.residual,
        }
    }

    /// Writes one nodal value per line.
    pub fn write_values<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// `∫ u^q` by the edge-midpoint rule; `q = 0` gives the area of `{u > 0}`.
pub fn moment(mesh: &Mesh2D, values: &[f64], q: f64) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let u = [values[tri[0]], values[tri[1]], values[tri[2]]];
        if q == 0.0 {
            if u.iter().any(|&x| x > 0.0) {
                total += mesh.area_of(t);
            }
            continue;
        }
        let s: f64 = (0..3).map(|k| pow0(0.5 * (u[k] + u[(k + 1) % 3]), q)).sum();
        total += mesh.area_of(t) / 3.0 * s;
    }
    total
}

fn gradient_energy(mesh: &Mesh2D, values: &[f64], r: f64) -> f64 {
    (0..mesh.triangles().len())
        .map(|t| {
            let g = mesh.gradient(t, values);
            mesh.area_of(t) * g[0].hypot(g[1]).powf(r)
        })
        .sum()
}

/// `∫|∇u|^r / (∫|u|^p)^{r/p}` for nodal values vanishing on the boundary.
pub fn rayleigh_quotient(mesh: &Mesh2D, values: &[f64], exps: &SobolevExponents) -> Result<f64> {
    if values.len() != mesh.node_count() {
        return Err(LabError::InvalidInput(format!("{} values for {} nodes", values.len(), mesh.node_count())));
    }
    if let Some(i) = (0..values.len()).find(|&i| mesh.is_boundary(i) && values[i] != 0.0) {
        return Err(LabError::InvalidInput(format!("value at boundary node {i} is {}", values[i])));
    }
    let abs: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    let mass = moment(mesh, &abs, exps.p());
    if !(mass > 0.0) {
        return Err(LabError::ZeroFunction);
    }
    Ok(gradient_energy(mesh, &abs, exps.r()) / mass.powf(exps.r() / exps.p()))
}

/// `A(u)_a = Σ_T |T| |∇u|^{r−2} ∇u·∇λ_a`.
fn flux_vector(mesh: &Mesh2D, values: &[f64], r: f64) -> Vec<f64> {
    let mut out = vec![0.0; mesh.node_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.gradient(t, values);
        let norm = g[0].hypot(g[1]);
        if norm == 0.0 {
            continue;
        }
        let w = mesh.area_of(t) * norm.powf(r - 2.0);
        for (k, gl) in mesh.basis_gradients(t).iter().enumerate() {
            out[tri[k]] += w * (g[0] * gl[0] + g[1] * gl[1]);
        }
    }
    out
}

/// `B(u)_a = Σ_T (|T|/6) Σ_{e ∋ a} m_e^{p−1}` with `m_e` the edge midpoint
/// value; for `p = 1` every edge contributes 1.
fn load_vector(mesh: &Mesh2D, values: &[f64], p: f64) -> Vec<f64> {
    let mut out = vec![0.0; mesh.node_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.area_of(t) / 6.0;
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let m = 0.5 * (values[a] + values[b]);
            let f = if p == 1.0 { 1.0 } else { pow0(m, p - 1.0) };
            out[a] += w * f;
            out[b] += w * f;
        }
    }
    out
}

/// Relative Euler-Lagrange residual at interior nodes for eigenvalue `c`.
pub fn euler_lagrange_residual(mesh: &Mesh2D, values: &[f64], exps: &SobolevExponents, c: f64) -> f64 {
    let a = flux_vector(mesh, values, exps.r());
    let b = load_vector(mesh, values, exps.p());
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for i in 0..mesh.node_count() {
        if mesh.is_boundary(i) {
            continue;
        }
        num = num.max((a[i] - c * b[i]).abs());
        den = den.max(b[i].abs());
    }
    num / (c * den)
}

/// Interior-node numbering and the stiffness sparsity pattern.
struct System {
    index: Vec<Option<usize>>,
    interior: Vec<usize>,
    pattern: SpdPattern,
}

impl System {
    fn new(mesh: &Mesh2D) -> Result<Self> {
        let mut index = vec![None; mesh.node_count()];
        let mut interior = Vec::new();
        for i in 0..mesh.node_count() {
            if !mesh.is_boundary(i) {
                index[i] = Some(interior.len());
                interior.push(i);
            }
        }
        if interior.is_empty() {
            return Err(LabError::MeshFailure("mesh has no interior nodes".into()));
        }
        let mut entries = Vec::new();
        for tri in mesh.triangles() {
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (index[tri[a]], index[tri[b]]) {
                        if i >= j {
                            entries.push((i, j));
                        }
                    }
                }
            }
        }
        let pattern = SpdPattern::new(interior.len(), entries)?;
        Ok(Self { index, interior, pattern })
    }

    /// Hessian of `(1/r) Σ |T| |∇w|^r`, in pattern order. Near-vanishing
    /// gradients are floored to keep the matrix positive definite.
    fn hessian_values(&self, mesh: &Mesh2D, values: &[f64], r: f64) -> Vec<f64> {
        let grads: Vec<Point2> = (0..mesh.triangles().len()).map(|t| mesh.gradient(t, values)).collect();
        let gmax = grads.iter().map(|g| g[0].hypot(g[1])).fold(0.0, f64::max);
        let floor = if r == 2.0 { 0.0 } else { 1e-8 * gmax.max(f64::MIN_POSITIVE) };
        let mut out = Vec::with_capacity(self.pattern.len());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let g = grads[t];
            let norm = g[0].hypot(g[1]);
            let (scale, aniso) = if r == 2.0 {
                (1.0, [[0.0; 2]; 2])
            } else {
                let s = norm.max(floor).powf(r - 2.0);
                let u = if norm > floor { [g[0] / norm, g[1] / norm] } else { [0.0, 0.0] };
                (
                    s,
                    [
                        [(r - 2.0) * u[0] * u[0], (r - 2.0) * u[0] * u[1]],
                        [(r - 2.0) * u[1] * u[0], (r - 2.0) * u[1] * u[1]],
                    ],
                )
            };
            let gl = mesh.basis_gradients(t);
            let w = mesh.area_of(t) * scale;
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (self.index[tri[a]], self.index[tri[b]]) {
                        if i >= j {
                            let (x, y) = (gl[a], gl[b]);
                            let mx = [
                                x[0] + aniso[0][0] * x[0] + aniso[1][0] * x[1],
                                x[1] + aniso[0][1] * x[0] + aniso[1][1] * x[1],
                            ];
                            out.push(w * (mx[0] * y[0] + mx[1] * y[1]));
                        }
                    }
                }
            }
        }
        out
    }

    fn factor(&self, mesh: &Mesh2D, values: &[f64], r: f64) -> Result<SpdFactor> {
        self.pattern.factor(&self.hessian_values(mesh, values, r))
    }

    fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&i| full[i]).collect()
    }

    fn extend(&self, reduced: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (k, &i) in self.interior.iter().enumerate() {
            out[i] = reduced[k];
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A(w) = b` for `r ≠ 2` by damped Newton on
/// `J(w) = (1/r) E(w) − b·w`, starting from `w`. A step is accepted when it
/// decreases `J` or, once `J` differences drown in rounding, the gradient.
fn solve_flux_equation(
    sys: &System,
    mesh: &Mesh2D,
    r: f64,
    b: &[f64],
    mut w: Vec<f64>,
    max_steps: usize,
) -> Result<Vec<f64>> {
    let n = mesh.node_count();
    let energy = |w: &[f64]| gradient_energy(mesh, w, r) / r - dot(b, w);
    let residual = |w: &[f64]| -> (Vec<f64>, f64) {
        let a = flux_vector(mesh, w, r);
        let g: Vec<f64> = sys.interior.iter().map(|&i| a[i] - b[i]).collect();
        let norm = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (g, norm)
    };
    let bnorm = sys.interior.iter().fold(0.0f64, |m, &i| m.max(b[i].abs()));
    let mut j = energy(&w);
    let (mut grad, mut gnorm) = residual(&w);
    let mut stalled = 0;
    for _ in 0..max_steps {
        if gnorm <= 1e-14 * bnorm {
            break;
        }
        let f = sys.factor(mesh, &w, r)?;
        let step = f.solve(&grad.iter().map(|x| -x).collect::<Vec<_>>());
        let slope = dot(&grad, &step);
        let full_step = sys.extend(&step, n);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = w.iter().zip(&full_step).map(|(x, d)| x + alpha * d).collect();
            let jt = energy(&trial);
            let (gt, nt) = residual(&trial);
            if jt <= j + 1e-4 * alpha * slope || nt < (1.0 - 1e-4 * alpha) * gnorm {
                accepted = Some((trial, jt, gt, nt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, jt, gt, nt)) = accepted else { break };
        stalled = if nt > 0.5 * gnorm { stalled + 1 } else { 0 };
        w = trial;
        j = jt;
        grad = gt;
        gnorm = nt;
        if stalled >= 5 && gnorm <= 1e-10 * bnorm {
            break;
        }
    }
    Ok(w)
}

/// Interior indicator averaged once over each node's neighbourhood.
fn initial_guess(mesh: &Mesh2D) -> Vec<f64> {
    let ind: Vec<f64> = (0..mesh.node_count()).map(|i| if mesh.is_boundary(i) { 0.0 } else { 1.0 }).collect();
    let nbrs = mesh.node_neighbors();
    (0..mesh.node_count())
        .map(|i| {
            if mesh.is_boundary(i) {
                0.0
            } else {
                (ind[i] + nbrs[i].iter().map(|&j| ind[j]).sum::<f64>()) / (1 + nbrs[i].len()) as f64
            }
        })
        .collect()
}

fn normalized(mut u: Vec<f64>, p: f64, mesh: &Mesh2D) -> Result<(Vec<f64>, f64)> {
    for x in u.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let mass = moment(mesh, &u, p);
    if !(mass > 0.0) {
        return Err(LabError::ZeroFunction);
    }
    let s = mass.powf(1.0 / p);
    for x in u.iter_mut() {
        *x /= s;
    }
    Ok((u, s))
}

pub fn minimize_rayleigh(mesh: Arc<Mesh2D>, exps: SobolevExponents) -> Result<ExtremalField> {
    minimize_rayleigh_with(mesh, exps, &VariationalOptions::default())
}

pub fn minimize_rayleigh_with(
    mesh: Arc<Mesh2D>,
    exps: SobolevExponents,
    opts: &VariationalOptions,
) -> Result<ExtremalField> {
    let start = initial_guess(&mesh);
    minimize_rayleigh_from(mesh, exps, start, opts)
}

/// Same iteration started from nodal values `start`, e.g. the extremal of a
/// nearby domain meshed with the same connectivity.
pub fn minimize_rayleigh_from(
    mesh: Arc<Mesh2D>,
    exps: SobolevExponents,
    start: Vec<f64>,
    opts: &VariationalOptions,
) -> Result<ExtremalField> {
    if start.len() != mesh.node_count() {
        return Err(LabError::InvalidInput(format!("{} start values for {} nodes", start.len(), mesh.node_count())));
    }
    let start: Vec<f64> = start.iter().zip(mesh.boundary_flags()).map(|(&x, &b)| if b { 0.0 } else { x }).collect();
    if exps.n() != 2 {
        return Err(LabError::InvalidExponents(format!("planar solver needs n = 2, got n = {}", exps.n())));
    }
    exps.require_subcritical()?;
    let (p, r) = (exps.p(), exps.r());
    let sys = System::new(&mesh)?;
    let n = mesh.node_count();
    let linear = if r == 2.0 { Some(sys.factor(&mesh, &vec![0.0; n], r)?) } else { None };

    let (mut u, _) = normalized(start, p, &mesh)?;
    let mut w_prev: Option<Vec<f64>> = None;
    let mut last_change = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let b = load_vector(&mesh, &u, p);
        let w = match &linear {
            Some(f) => sys.extend(&f.solve(&sys.restrict(&b)), n),
            None => {
                // A is (r−1)-homogeneous: scale the previous solution so that w·A(w) = w·b
                let start = w_prev.take().unwrap_or_else(|| u.clone());
                let a = flux_vector(&mesh, &start, r);
                let lam = (dot(&start, &b) / dot(&start, &a)).powf(1.0 / (r - 1.0));
                let start: Vec<f64> = start.iter().map(|x| x * lam).collect();
                solve_flux_equation(&sys, &mesh, r, &b, start, opts.max_newton_steps)?
            }
        };
        w_prev = Some(w.clone());
        let (next, _) = normalized(w, p, &mesh)?;
        let change = u.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        u = next;
        last_change = change;
        if change < opts.tolerance {
            let c = gradient_energy(&mesh, &u, r);
            let residual = euler_lagrange_residual(&mesh, &u, &exps, c);
            if residual < opts.residual_tolerance {
                let gradients = (0..mesh.triangles().len()).map(|t| mesh.gradient(t, &u)).collect();
                return Ok(ExtremalField { mesh, exps, values: u, gradients, eigenvalue: c, iterations: it, residual });
            }
        }
    }
    Err(LabError::NoConvergence { iterations: opts.max_iterations, last_change })
}

/// `|∇φ|` on each boundary edge, from the adjacent triangle.
pub fn boundary_gradient(field: &ExtremalField) -> Vec<f64> {
    field
        .mesh()
        .boundary_edges()
        .iter()
        .map(|e| {
            let g = field.gradients()[e.triangle];
            g[0].hypot(g[1])
        })
        .collect()
}

/// `|∇φ|` on each boundary edge recovered from the boundary flux: the
/// Euler-Lagrange defect `A(φ) − C B(φ)` at a boundary node equals
/// `−∫ |∇φ|^{r−1} λ_a dσ`, which is divided by the lumped boundary mass and
/// averaged over the edge endpoints.
pub fn boundary_flux_gradient(field: &ExtremalField) -> Vec<f64> {
    let mesh = field.mesh();
    let exps = field.exponents();
    let a = flux_vector(mesh, field.values(), exps.r());
    let b = load_vector(mesh, field.values(), exps.p());
    let mut mass = vec![0.0; mesh.node_count()];
    for e in mesh.boundary_edges() {
        mass[e.nodes[0]] += 0.5 * e.length;
        mass[e.nodes[1]] += 0.5 * e.length;
    }
    let density = |i: usize| (field.eigenvalue() * b[i] - a[i]).max(0.0) / mass[i];
    mesh.boundary_edges()
        .iter()
        .map(|e| (0.5 * (density(e.nodes[0]) + density(e.nodes[1]))).powf(1.0 / (exps.r() - 1.0)))
        .collect()
}
