//! Admissible exponent triples `(n, p, r)` for the Sobolev quotient
//! `∫|∇u|^r / (∫|u|^p)^{r/p}`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevExponents {
    n: u32,
    p: f64,
    r: f64,
}

impl SobolevExponents {
    /// Validates `n ≥ 2`, `1 < r ≤ n`, `1 ≤ p < ∞` and, when `r < n`,
    /// `p ≤ r* = nr/(n − r)`.
    pub fn new(n: u32, p: f64, r: f64) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidExponents(format!("n = {n} must be at least 2")));
        }
        if !(r.is_finite() && r > 1.0 && r <= n as f64) {
            return Err(LabError::InvalidExponents(format!("r = {r} must lie in (1, n = {n}]")));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(LabError::InvalidExponents(format!("p = {p} must be finite and at least 1")));
        }
        let nf = n as f64;
        if r < nf {
            let critical = nf * r / (nf - r);
            if p > critical * (1.0 + 1e-14) {
                return Err(LabError::InvalidExponents(format!(
                    "p = {p} exceeds the critical exponent r* = {critical}"
                )));
            }
        }
        Ok(Self { n, p, r })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// `r* = nr/(n − r)`, infinite when `r = n`.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dim();
        if self.r >= n {
            f64::INFINITY
        } else {
            n * self.r / (n - self.r)
        }
    }

    /// Exponent of the dilation law `C(RΩ) = R^e C(Ω)`, `e = n − r − rn/p`.
    pub fn scaling_exponent(&self) -> f64 {
        let n = self.dim();
        n - self.r - self.r * n / self.p
    }

    pub fn is_homogeneous(&self) -> bool {
        (self.p - self.r).abs() < 1e-14
    }

    /// Rejects the scale-invariant case `p = r*`, where no extremal exists on a
    /// bounded domain.
    pub(crate) fn require_subcritical(&self) -> Result<()> {
        if self.scaling_exponent().abs() < 1e-12 {
            return Err(LabError::InvalidExponents(format!(
                "p = {} is the critical exponent; the quotient has no bounded-domain minimizer",
                self.p
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_torsion_and_dirichlet_cases() {
        assert!(SobolevExponents::new(2, 2.0, 2.0).is_ok());
        assert!(SobolevExponents::new(2, 1.0, 2.0).is_ok());
        assert!(SobolevExponents::new(2, 7.5, 2.0).is_ok());
        assert!(SobolevExponents::new(3, 3.0, 3.0).is_ok());
        assert!(SobolevExponents::new(2, 1.5, 1.5).is_ok());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SobolevExponents::new(1, 2.0, 2.0).is_err());
        assert!(SobolevExponents::new(2, 2.0, 1.0).is_err());
        assert!(SobolevExponents::new(2, 2.0, 2.5).is_err());
        assert!(SobolevExponents::new(2, 0.5, 2.0).is_err());
        // r* = 3·2/(3−2) = 6
        assert!(SobolevExponents::new(3, 6.5, 2.0).is_err());
        assert!(SobolevExponents::new(3, 6.0, 2.0).is_ok());
        assert!(SobolevExponents::new(2, f64::INFINITY, 2.0).is_err());
    }

    #[test]
    fn scaling_exponent_values() {
        let e = SobolevExponents::new(2, 2.0, 2.0).unwrap().scaling_exponent();
        assert_eq!(e, -2.0);
        let e = SobolevExponents::new(2, 1.0, 2.0).unwrap().scaling_exponent();
        assert_eq!(e, -4.0);
        let e = SobolevExponents::new(3, 3.0, 3.0).unwrap().scaling_exponent();
        assert_eq!(e, -3.0);
        let crit = SobolevExponents::new(3, 6.0, 2.0).unwrap();
        assert!(crit.require_subcritical().is_err());
    }
}
