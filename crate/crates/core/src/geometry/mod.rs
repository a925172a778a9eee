//! Domains (balls, star-shaped planar regions), structured triangulation and
//! boundary data.

mod ball;
mod mesh;
mod speed;
mod star;

pub use ball::{ball_volume, sphere_area, unit_ball_volume, BallDomain};
pub use mesh::{boundary_measure, ring_count, triangulate, triangulate_with_layers, BoundaryEdge, Mesh2D};
pub use speed::{AngularWeight, BoundarySpeed};
pub use star::StarDomain2D;

pub type Point2 = [f64; 2];

#[inline]
pub(crate) fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn norm(a: Point2) -> f64 {
    a[0].hypot(a[1])
}
