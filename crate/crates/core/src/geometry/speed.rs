use serde::{Deserialize, Serialize};

use super::{Mesh2D, Point2};
use crate::error::{LabError, Result};

/// Angular weight `w(θ) = offset + amplitude · cos(mode·θ − phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AngularWeight {
    pub offset: f64,
    pub amplitude: f64,
    pub mode: u32,
    pub phase: f64,
}

impl AngularWeight {
    pub fn constant(value: f64) -> Self {
        Self { offset: value, ..Self::default() }
    }

    pub fn cosine(amplitude: f64, mode: u32) -> Self {
        Self { amplitude, mode, ..Self::default() }
    }

    /// `amplitude · sin(mode·θ)`.
    pub fn sine(amplitude: f64, mode: u32) -> Self {
        Self { amplitude, mode, phase: std::f64::consts::FRAC_PI_2, ..Self::default() }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.offset + self.amplitude * (self.mode as f64 * theta - self.phase).cos()
    }

    pub fn is_constant(&self) -> bool {
        self.amplitude == 0.0 || self.mode == 0
    }
}

/// Normal boundary speed `e^w` on each boundary edge of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpeed {
    w: Vec<f64>,
    speed: Vec<f64>,
}

impl BoundarySpeed {
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        let speed = w.iter().map(|x| x.exp()).collect();
        Self::checked(w, speed)
    }

    pub fn from_speeds(speed: Vec<f64>) -> Result<Self> {
        let w = speed.iter().map(|s| s.ln()).collect();
        Self::checked(w, speed)
    }

    fn checked(w: Vec<f64>, speed: Vec<f64>) -> Result<Self> {
        if let Some((i, s)) = speed.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s > 0.0)) {
            return Err(LabError::InvalidInput(format!(
                "boundary speed on edge {i} is {s}, must be finite and positive"
            )));
        }
        Ok(Self { w, speed })
    }

    /// Samples `w` at the polar angle (about `center`) of each edge midpoint.
    pub fn from_angular(mesh: &Mesh2D, center: Point2, weight: &AngularWeight) -> Result<Self> {
        let w = mesh
            .boundary_edges()
            .iter()
            .map(|e| {
                let m = e.midpoint(mesh);
                weight.eval((m[1] - center[1]).atan2(m[0] - center[0]))
            })
            .collect();
        Self::from_weights(w)
    }

    pub fn uniform(mesh: &Mesh2D, speed: f64) -> Result<Self> {
        Self::from_speeds(vec![speed; mesh.boundary_edges().len()])
    }

    /// Checks that the speed array matches the boundary of `mesh`.
    pub fn check_against(&self, mesh: &Mesh2D) -> Result<()> {
        if self.speed.len() != mesh.boundary_edges().len() {
            return Err(LabError::InvalidInput(format!(
                "{} speed values for {} boundary edges",
                self.speed.len(),
                mesh.boundary_edges().len()
            )));
        }
        Ok(())
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speed
    }

    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    /// Whether all speeds agree to relative precision `tol`.
    pub fn is_constant(&self, tol: f64) -> bool {
        let max = self.speed.iter().copied().fold(0.0, f64::max);
        let min = self.speed.iter().copied().fold(f64::INFINITY, f64::min);
        max - min <= tol * max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, StarDomain2D};

    #[test]
    fn rejects_bad_speeds() {
        assert!(BoundarySpeed::from_speeds(vec![1.0, 0.0]).is_err());
        assert!(BoundarySpeed::from_speeds(vec![1.0, f64::NAN]).is_err());
        assert!(BoundarySpeed::from_weights(vec![800.0]).is_err());
    }

    #[test]
    fn angular_sampling() {
        let mesh = triangulate(&StarDomain2D::disk(1.0).unwrap(), 0.1).unwrap();
        let s = BoundarySpeed::from_angular(&mesh, [0.0, 0.0], &AngularWeight::cosine(0.2, 2)).unwrap();
        s.check_against(&mesh).unwrap();
        assert!(!s.is_constant(1e-9));
        for (w, v) in s.weights().iter().zip(s.speeds()) {
            assert!(w.abs() <= 0.2 + 1e-12);
            assert!((v - w.exp()).abs() < 1e-15);
        }
        let sine = AngularWeight::sine(0.3, 1);
        assert!((sine.eval(0.7) - 0.3 * 0.7f64.sin()).abs() < 1e-15);
        assert!(BoundarySpeed::uniform(&mesh, 1.0).unwrap().is_constant(0.0));
    }
}
