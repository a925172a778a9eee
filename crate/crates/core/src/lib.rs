//! Best Sobolev constants `C_{p,r}(Ω) = inf ∫|∇u|^r / (∫|u|^p)^{r/p}` and
//! their extremal functions on balls and planar star-shaped domains, with
//! checks of the rearrangement, reverse-Hölder, shape-derivative, flow and
//! conformal comparison inequalities they satisfy.

pub mod conformal;
pub mod error;
pub mod exponents;
pub mod flows;
pub mod geometry;
pub mod hadamard;
pub mod inequalities;
mod linalg;
pub mod quadrature;
pub mod radial;
pub mod rearrangement;
pub mod variational;

pub use error::{LabError, Result};
pub use exponents::SobolevExponents;
