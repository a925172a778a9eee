use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    dim: u32,
    radius: f64,
    center: Vec<f64>,
}

impl BallDomain {
    pub fn new(dim: u32, radius: f64, center: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(LabError::InvalidDomain(format!("ball dimension {dim} < 2")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(LabError::InvalidDomain(format!("ball radius {radius} must be positive")));
        }
        if center.len() != dim as usize {
            return Err(LabError::InvalidDomain(format!("center has {} coordinates, expected {dim}", center.len())));
        }
        Ok(Self { dim, radius, center })
    }

    pub fn centered(dim: u32, radius: f64) -> Result<Self> {
        Self::new(dim, radius, vec![0.0; dim as usize])
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim, self.radius)
    }

    pub fn boundary_area(&self) -> f64 {
        sphere_area(self.dim, self.radius)
    }
}

/// Volume `ω_n` of the unit ball in `ℝⁿ`, from `ω_0 = 1`, `ω_1 = 2`,
/// `ω_n = 2π ω_{n−2} / n`.
pub fn unit_ball_volume(n: u32) -> f64 {
    let (mut omega, start) = if n % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        omega *= 2.0 * PI / k as f64;
        k += 2;
    }
    omega
}

/// `ω_n Rⁿ`.
pub fn ball_volume(n: u32, radius: f64) -> f64 {
    unit_ball_volume(n) * radius.powi(n as i32)
}

/// `n ω_n R^{n−1}`, the area of the sphere bounding the ball of radius `R`.
pub fn sphere_area(n: u32, radius: f64) -> f64 {
    n as f64 * unit_ball_volume(n) * radius.powi(n as i32 - 1)
}
