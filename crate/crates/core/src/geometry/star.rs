use std::f64::consts::{PI, TAU};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{cross, norm, sub, Point2};
use crate::error::{LabError, Result};

/// Default number of boundary samples; a multiple of 8 so that the diagonal
/// directions are sample angles.
pub const DEFAULT_SAMPLES: usize = 4096;

/// Planar domain star-shaped about `center`, bounded by the closed polygon
/// through the points `center + ρ_i (cos θ_i, sin θ_i)`, `θ_i = 2πi/N`.
///
/// Between samples the boundary is the chord joining neighbouring points, so
/// polygons whose corners sit on sample angles are represented exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarDomain2D {
    center: Point2,
    rho: Vec<f64>,
}

impl StarDomain2D {
    pub fn new(center: Point2, rho: Vec<f64>) -> Result<Self> {
        if rho.len() < 8 {
            return Err(LabError::InvalidDomain(format!("need at least 8 boundary samples, got {}", rho.len())));
        }
        if let Some((i, r)) = rho.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r > 0.0)) {
            return Err(LabError::InvalidDomain(format!("rho[{i}] = {r} is not positive")));
        }
        Ok(Self { center, rho })
    }

    pub fn from_fn(center: Point2, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let rho = (0..samples).map(|i| f(TAU * i as f64 / samples as f64)).collect();
        Self::new(center, rho)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::from_fn([0.0, 0.0], DEFAULT_SAMPLES, |_| radius)
    }

    /// Axis-aligned square of the given side centred at the origin.
    pub fn square(side: f64) -> Result<Self> {
        let half = 0.5 * side;
        Self::from_fn([0.0, 0.0], DEFAULT_SAMPLES, |t| half / t.cos().abs().max(t.sin().abs()))
    }

    /// `ρ(θ) = R (1 + a cos(kθ))`.
    pub fn perturbed_disk(radius: f64, amplitude: f64, mode: u32) -> Result<Self> {
        Self::from_fn([0.0, 0.0], DEFAULT_SAMPLES, |t| radius * (1.0 + amplitude * (mode as f64 * t).cos()))
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn samples(&self) -> &[f64] {
        &self.rho
    }

    pub fn sample_count(&self) -> usize {
        self.rho.len()
    }

    pub fn theta(&self, i: usize) -> f64 {
        TAU * i as f64 / self.rho.len() as f64
    }

    pub fn rho_min(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn rho_max(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }

    fn offset(&self, i: usize) -> Point2 {
        let i = i % self.rho.len();
        let t = self.theta(i);
        [self.rho[i] * t.cos(), self.rho[i] * t.sin()]
    }

    pub fn boundary_point(&self, i: usize) -> Point2 {
        let o = self.offset(i);
        [self.center[0] + o[0], self.center[1] + o[1]]
    }

    /// Radial distance to the boundary polygon along direction `theta`.
    pub fn rho_at(&self, theta: f64) -> f64 {
        let n = self.rho.len();
        let t = theta.rem_euclid(TAU);
        let x = t / TAU * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        if x == i as f64 {
            return self.rho[i];
        }
        let a = self.offset(i);
        let b = self.offset(i + 1);
        let d = sub(b, a);
        let u = [t.cos(), t.sin()];
        cross(a, d) / cross(u, d)
    }

    /// Outward unit normal at sample `i`: the normalized sum of the normals of
    /// the two chords meeting there.
    pub fn normal_at_sample(&self, i: usize) -> Point2 {
        let n = self.rho.len();
        let prev = self.offset(i + n - 1);
        let here = self.offset(i);
        let next = self.offset(i + 1);
        let e0 = sub(here, prev);
        let e1 = sub(next, here);
        let l0 = norm(e0);
        let l1 = norm(e1);
        let m = [e0[1] / l0 + e1[1] / l1, -e0[0] / l0 - e1[0] / l1];
        let len = norm(m);
        [m[0] / len, m[1] / len]
    }

    /// Polygon area.
    pub fn area(&self) -> f64 {
        let n = self.rho.len();
        (0..n).map(|i| 0.5 * cross(self.offset(i), self.offset(i + 1))).sum()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.rho.len();
        (0..n).map(|i| norm(sub(self.offset(i + 1), self.offset(i)))).sum()
    }

    /// Moves every boundary sample a distance `dt · speed[i]` along its
    /// outward normal, converted to a radial increment through
    /// `1/⟨η, x/|x|⟩`.
    pub fn advance(&self, speed: &[f64], dt: f64) -> Result<Self> {
        if speed.len() != self.rho.len() {
            return Err(LabError::InvalidInput(format!(
                "{} speeds for {} boundary samples",
                speed.len(),
                self.rho.len()
            )));
        }
        let rho = (0..self.rho.len())
            .map(|i| {
                let eta = self.normal_at_sample(i);
                let t = self.theta(i);
                let radial = eta[0] * t.cos() + eta[1] * t.sin();
                if radial <= 1e-12 {
                    return Err(LabError::MeshFailure(format!(
                        "boundary is not star-shaped at sample {i} (⟨η, x̂⟩ = {radial:.3e})"
                    )));
                }
                Ok(self.rho[i] + dt * speed[i] / radial)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.center, rho)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.center, self.rho.iter().map(|r| r * factor).collect())
    }

    /// Writes `theta rho` lines.
    pub fn write_samples<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# theta rho")?;
        for (i, r) in self.rho.iter().enumerate() {
            writeln!(out, "{} {}", self.theta(i), r)?;
        }
        Ok(())
    }

    /// Reads `theta rho` lines written on a uniform θ-grid starting at zero.
    pub fn read_samples<R: BufRead>(center: Point2, input: R) -> Result<Self> {
        let mut rho = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| LabError::Parse { line: lineno + 1, message: "expected `theta rho`".into() })?
                    .parse::<f64>()
                    .map_err(|e| LabError::Parse { line: lineno + 1, message: e.to_string() })
            };
            let theta = parse(cols.next())?;
            let r = parse(cols.next())?;
            rho.push((theta, r, lineno + 1));
        }
        let n = rho.len();
        for (i, (theta, _, line)) in rho.iter().enumerate() {
            let expected = TAU * i as f64 / n as f64;
            if (theta - expected).abs() > 1e-9 * PI {
                return Err(LabError::Parse {
                    line: *line,
                    message: format!("theta {theta} is off the uniform grid (expected {expected})"),
                });
            }
        }
        Self::new(center, rho.into_iter().map(|(_, r, _)| r).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_exact_corners_and_perimeter() {
        let sq = StarDomain2D::square(1.0).unwrap();
        assert!((sq.perimeter() - 4.0).abs() < 1e-12);
        assert!((sq.area() - 1.0).abs() < 1e-12);
        let corner = sq.rho_at(PI / 4.0);
        assert!((corner - 0.5 * 2f64.sqrt()).abs() < 1e-12);
        // interpolation stays on the side
        let t = 0.3;
        assert!((sq.rho_at(t) * t.cos() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn disk_measures() {
        let d = StarDomain2D::disk(2.0).unwrap();
        assert!((d.area() - 4.0 * PI).abs() < 1e-5);
        assert!((d.perimeter() - 4.0 * PI).abs() < 1e-5);
        let eta = d.normal_at_sample(100);
        let t = d.theta(100);
        assert!((eta[0] - t.cos()).abs() < 1e-12 && (eta[1] - t.sin()).abs() < 1e-12);
    }

    #[test]
    fn advance_offsets_disk_uniformly() {
        let d = StarDomain2D::disk(1.0).unwrap();
        let speed = vec![1.0; d.sample_count()];
        let d2 = d.advance(&speed, 0.1).unwrap();
        for r in d2.samples() {
            assert!((r - 1.1).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(StarDomain2D::new([0.0, 0.0], vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0]).is_err());
        assert!(StarDomain2D::new([0.0, 0.0], vec![1.0; 4]).is_err());
    }

    #[test]
    fn samples_round_trip() {
        let d = StarDomain2D::perturbed_disk(1.0, 0.3, 2).unwrap();
        let mut buf = Vec::new();
        d.write_samples(&mut buf).unwrap();
        let back = StarDomain2D::read_samples([0.0, 0.0], buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }
}
