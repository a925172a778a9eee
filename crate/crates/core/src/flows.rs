//! Expanding planar domains: Green's function with an interior pole, boundary
//! speed laws, explicit time stepping of the radial graph, and the rate
//! bounds along a trajectory.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::exponents::SobolevExponents;
use crate::geometry::{
    ring_count, triangulate_with_layers, AngularWeight, BoundarySpeed, Mesh2D, Point2, StarDomain2D,
};
use crate::hadamard::{hadamard_rate, power_rate_constant, theorem1_sides, theorem2_sides, BoundReport};
use crate::linalg::SpdPattern;
use crate::variational::{minimize_rayleigh_from, minimize_rayleigh_with, ExtremalField, VariationalOptions};

/// `G = −(1/2π) log|x − x₀| + h` with `h` harmonic and `G = 0` on the
/// boundary.
#[derive(Debug, Clone)]
pub struct GreensData {
    pub pole: Point2,
    /// Nodal values of the regular part `h`.
    pub regular: Vec<f64>,
    /// `|∇G| = −∂G/∂η` on each boundary edge.
    pub boundary_gradient: Vec<f64>,
}

fn segment_distance(x: Point2, a: Point2, b: Point2) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let t = (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
    (x[0] - a[0] - t * d[0]).hypot(x[1] - a[1] - t * d[1])
}

fn winding_number(mesh: &Mesh2D, x: Point2) -> f64 {
    let nodes = mesh.nodes();
    let total: f64 = mesh
        .boundary_edges()
        .iter()
        .map(|e| {
            let a = nodes[e.nodes[0]];
            let b = nodes[e.nodes[1]];
            let (ua, ub) = ([a[0] - x[0], a[1] - x[1]], [b[0] - x[0], b[1] - x[1]]);
            (ua[0] * ub[1] - ua[1] * ub[0]).atan2(ua[0] * ub[0] + ua[1] * ub[1])
        })
        .sum();
    total / (2.0 * PI)
}

/// Solves for the regular part with P1 elements and recovers `∂h/∂η` on the
/// boundary from the discrete flux, adding the exact normal derivative of
/// the log singularity at each edge midpoint.
pub fn greens_function(mesh: &Mesh2D, pole: Point2) -> Result<GreensData> {
    let nodes = mesh.nodes();
    let required = 2.0 * mesh.h();
    let distance = mesh
        .boundary_edges()
        .iter()
        .map(|e| segment_distance(pole, nodes[e.nodes[0]], nodes[e.nodes[1]]))
        .fold(f64::INFINITY, f64::min);
    if winding_number(mesh, pole).abs() < 0.5 {
        return Err(LabError::PoleTooClose { distance: -distance, required });
    }
    if distance <= required {
        return Err(LabError::PoleTooClose { distance, required });
    }

    let log_dist = |x: Point2| (x[0] - pole[0]).hypot(x[1] - pole[1]).ln() / (2.0 * PI);
    let n = mesh.node_count();
    let mut index = vec![None; n];
    let mut interior = Vec::new();
    for i in 0..n {
        if !mesh.is_boundary(i) {
            index[i] = Some(interior.len());
            interior.push(i);
        }
    }
    let mut regular = vec![0.0; n];
    for i in 0..n {
        if mesh.is_boundary(i) {
            regular[i] = log_dist(nodes[i]);
        }
    }

    let mut entries = Vec::new();
    let mut values = Vec::new();
    let mut rhs = vec![0.0; interior.len()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let gl = mesh.basis_gradients(t);
        let area = mesh.area_of(t);
        for a in 0..3 {
            let Some(i) = index[tri[a]] else { continue };
            for b in 0..3 {
                let k = area * (gl[a][0] * gl[b][0] + gl[a][1] * gl[b][1]);
                match index[tri[b]] {
                    Some(j) if i >= j => {
                        entries.push((i, j));
                        values.push(k);
                    }
                    Some(_) => {}
                    None => rhs[i] -= k * regular[tri[b]],
                }
            }
        }
    }
    let solution = SpdPattern::new(interior.len(), entries)?.factor(&values)?.solve(&rhs);
    for (k, &i) in interior.iter().enumerate() {
        regular[i] = solution[k];
    }

    // (K h)_a = ∫ ∂_η h λ_a dσ at boundary nodes since h is harmonic
    let mut flux = vec![0.0; n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let gl = mesh.basis_gradients(t);
        let g = mesh.gradient(t, &regular);
        let area = mesh.area_of(t);
        for a in 0..3 {
            flux[tri[a]] += area * (g[0] * gl[a][0] + g[1] * gl[a][1]);
        }
    }
    let mut mass = vec![0.0; n];
    for e in mesh.boundary_edges() {
        mass[e.nodes[0]] += 0.5 * e.length;
        mass[e.nodes[1]] += 0.5 * e.length;
    }
    let boundary_gradient = mesh
        .boundary_edges()
        .iter()
        .map(|e| {
            let dh = 0.5 * (flux[e.nodes[0]] / mass[e.nodes[0]] + flux[e.nodes[1]] / mass[e.nodes[1]]);
            let m = e.midpoint(mesh);
            let d = [m[0] - pole[0], m[1] - pole[1]];
            let ds = -(d[0] * e.normal[0] + d[1] * e.normal[1]) / (2.0 * PI * (d[0] * d[0] + d[1] * d[1]));
            -(ds + dh)
        })
        .collect();
    Ok(GreensData { pole, regular, boundary_gradient })
}

impl GreensData {
    /// `∫_{∂Ω} |∇G| dσ`, which is 1 for an exact Green's function.
    pub fn total_flux(&self, mesh: &Mesh2D) -> f64 {
        mesh.boundary_edges().iter().zip(&self.boundary_gradient).map(|(e, g)| e.length * g).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SpeedLaw {
    Uniform {
        speed: f64,
    },
    /// Speed `e^{w(θ)}`, with `θ` the polar angle about the domain centre.
    Weighted {
        weight: AngularWeight,
    },
    /// Speed `|∇G|` for the Green's function with a fixed pole.
    HeleShaw {
        pole: Point2,
    },
}

impl SpeedLaw {
    /// Speed on each boundary edge of `mesh`.
    pub fn edge_speeds(&self, mesh: &Mesh2D, center: Point2) -> Result<BoundarySpeed> {
        match self {
            SpeedLaw::Uniform { speed } => BoundarySpeed::uniform(mesh, *speed),
            SpeedLaw::Weighted { weight } => BoundarySpeed::from_angular(mesh, center, weight),
            SpeedLaw::HeleShaw { pole } => BoundarySpeed::from_speeds(greens_function(mesh, *pole)?.boundary_gradient),
        }
    }
}

/// Linear interpolation of per-edge values in the polar angle of the edge
/// midpoints, periodic in `θ`.
pub fn interpolate_by_angle(mesh: &Mesh2D, center: Point2, edge_values: &[f64], thetas: &[f64]) -> Vec<f64> {
    let mut table: Vec<(f64, f64)> = mesh
        .boundary_edges()
        .iter()
        .zip(edge_values)
        .map(|(e, &v)| {
            let m = e.midpoint(mesh);
            ((m[1] - center[1]).atan2(m[0] - center[0]).rem_euclid(2.0 * PI), v)
        })
        .collect();
    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    let len = table.len();
    thetas
        .iter()
        .map(|&t| {
            let t = t.rem_euclid(2.0 * PI);
            let k = table.partition_point(|e| e.0 <= t);
            let (lo, hi) = if k == 0 || k == len {
                let (a, b) = (table[len - 1], table[0]);
                ((a.0 - 2.0 * PI, a.1), (b.0, b.1))
            } else {
                (table[k - 1], table[k])
            };
            let (lo, hi) = if k == len { ((lo.0 + 2.0 * PI, lo.1), (hi.0 + 2.0 * PI, hi.1)) } else { (lo, hi) };
            let s = (t - lo.0) / (hi.0 - lo.0);
            lo.1 + s * (hi.1 - lo.1)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FlowStep {
    pub t: f64,
    pub domain: StarDomain2D,
    pub field: ExtremalField,
    /// Law evaluated on the boundary edges of the field's mesh.
    pub speed: BoundarySpeed,
    /// Boundary-integral rate `Ċ`.
    pub rate: f64,
}

/// Boundary-integral rate against the difference quotient of the computed
/// eigenvalues along the trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRate {
    pub k: usize,
    pub formula: f64,
    /// Central where both neighbours exist, one-sided at the ends.
    pub difference: f64,
    pub mismatch: f64,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub law: SpeedLaw,
    pub dt: f64,
    /// Ring count shared by every snapshot mesh.
    pub layers: usize,
    pub steps: Vec<FlowStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowOptions {
    pub dt: f64,
    pub steps: usize,
    /// Mesh size of the initial domain.
    pub h: f64,
}

/// Forward Euler on `ρ(θ)` along the normals. Every snapshot is meshed with
/// the ring count of the initial domain, so connectivity is fixed and each
/// solve starts from the previous extremal.
pub fn evolve(
    domain: &StarDomain2D,
    law: SpeedLaw,
    exps: SobolevExponents,
    opts: FlowOptions,
) -> Result<FlowTrajectory> {
    if opts.steps == 0 {
        return Err(LabError::InvalidInput("need at least one step".into()));
    }
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(LabError::InvalidInput(format!("time step must be positive, got {}", opts.dt)));
    }
    let solver = VariationalOptions::default();
    let layers = ring_count(domain, opts.h)?;
    let thetas: Vec<f64> = (0..domain.sample_count()).map(|i| domain.theta(i)).collect();
    let mut steps: Vec<FlowStep> = Vec::with_capacity(opts.steps + 1);
    let mut current = domain.clone();
    for k in 0..=opts.steps {
        let mesh = triangulate_with_layers(&current, layers)?;
        mesh.validate()?;
        let mesh = Arc::new(mesh);
        let field = match steps.last() {
            Some(prev) => minimize_rayleigh_from(mesh.clone(), exps, prev.field.values().to_vec(), &solver)?,
            None => minimize_rayleigh_with(mesh.clone(), exps, &solver)?,
        };
        let speed = law.edge_speeds(&mesh, current.center())?;
        let rate = hadamard_rate(&field, speed.speeds())?;
        let sample_speed = match law {
            SpeedLaw::Uniform { speed } => vec![speed; thetas.len()],
            SpeedLaw::Weighted { weight } => thetas.iter().map(|&t| weight.eval(t).exp()).collect(),
            SpeedLaw::HeleShaw { .. } => interpolate_by_angle(&mesh, current.center(), speed.speeds(), &thetas),
        };
        let next = if k < opts.steps {
            let max_speed = sample_speed.iter().copied().fold(0.0, f64::max);
            let limit = 0.5 * mesh.h();
            if opts.dt * max_speed >= limit {
                return Err(LabError::CflViolation { step: opts.dt * max_speed, limit });
            }
            Some(current.advance(&sample_speed, opts.dt)?)
        } else {
            None
        };
        let domain = match next {
            Some(next) => std::mem::replace(&mut current, next),
            None => current.clone(),
        };
        steps.push(FlowStep { t: k as f64 * opts.dt, domain, field, speed, rate });
    }
    Ok(FlowTrajectory { law, dt: opts.dt, layers, steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBound {
    /// `p = r`: power of `C` (log for `p = n`).
    Power,
    /// `n = r = 2`: `log C`.
    Log2d,
}

impl FlowTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.t).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.field.eigenvalue()).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.domain.area()).collect()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.eigenvalues().windows(2).all(|w| w[1] < w[0])
    }

    /// `(|Ω_{k+1}| − |Ω_k|)/dt` for each step.
    pub fn area_rates(&self) -> Vec<f64> {
        self.areas().windows(2).map(|w| (w[1] - w[0]) / self.dt).collect()
    }

    pub fn step_rates(&self) -> Vec<StepRate> {
        let c = self.eigenvalues();
        let last = c.len() - 1;
        (0..c.len())
            .map(|k| {
                let difference = match k {
                    0 => (c[1] - c[0]) / self.dt,
                    k if k == last => (c[k] - c[k - 1]) / self.dt,
                    k => (c[k + 1] - c[k - 1]) / (2.0 * self.dt),
                };
                let formula = self.steps[k].rate;
                StepRate { k, formula, difference, mismatch: (formula - difference).abs() / difference.abs() }
            })
            .collect()
    }
}

/// One bound report per snapshot, with the trajectory's own speed in place
/// of `e^w`.
pub fn monitor_bounds(traj: &FlowTrajectory, which: RateBound) -> Result<Vec<BoundReport>> {
    let Some(first) = traj.steps.first() else {
        return Ok(Vec::new());
    };
    let k = match which {
        RateBound::Power => Some(power_rate_constant(first.field.exponents())?),
        RateBound::Log2d => None,
    };
    traj.steps
        .iter()
        .map(|s| match k {
            Some(k) => theorem1_sides(&s.field, &s.speed, k),
            None => theorem2_sides(&s.field, &s.speed),
        })
        .collect()
}

/// `k,t,area,perimeter,C,lhs,rhs,slack`, one line per snapshot.
pub fn write_trajectory_csv<W: Write>(traj: &FlowTrajectory, reports: &[BoundReport], mut out: W) -> Result<()> {
    if reports.len() != traj.steps.len() {
        return Err(LabError::InvalidInput(format!("{} reports for {} snapshots", reports.len(), traj.steps.len())));
    }
    writeln!(out, "k,t,area,perimeter,C,lhs,rhs,slack")?;
    for (k, (s, r)) in traj.steps.iter().zip(reports).enumerate() {
        writeln!(
            out,
            "{k},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            s.t,
            s.domain.area(),
            s.domain.perimeter(),
            s.field.eigenvalue(),
            r.lhs,
            r.rhs,
            r.slack
        )?;
    }
    Ok(())
}
