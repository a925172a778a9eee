use std::collections::HashMap;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{cross, norm, sub, Point2, StarDomain2D};
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    /// Endpoints, ordered counter-clockwise along the boundary.
    pub nodes: [usize; 2],
    pub normal: Point2,
    pub length: f64,
    /// The unique triangle containing this edge.
    pub triangle: usize,
}

impl BoundaryEdge {
    pub fn midpoint(&self, mesh: &Mesh2D) -> Point2 {
        let a = mesh.nodes[self.nodes[0]];
        let b = mesh.nodes[self.nodes[1]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }
}

/// Conforming triangulation of a planar domain with its boundary loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    nodes: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    on_boundary: Vec<bool>,
    areas: Vec<f64>,
    /// Gradients of the three barycentric hat functions on each triangle.
    basis_gradients: Vec<[Point2; 3]>,
    h: f64,
}

impl Mesh2D {
    /// Builds a mesh from raw connectivity; boundary edges are given as
    /// counter-clockwise node pairs. Normals, lengths and adjacency are
    /// recomputed and every invariant is checked.
    pub fn from_parts(
        nodes: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        boundary_pairs: &[[usize; 2]],
        h: Option<f64>,
    ) -> Result<Self> {
        let mut edge_owner: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nodes.len()) {
                return Err(LabError::MeshFailure(format!("triangle {t} references a missing node")));
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_owner.insert((a.min(b), a.max(b)), t);
            }
        }
        let mut boundary = Vec::with_capacity(boundary_pairs.len());
        for (e, &[a, b]) in boundary_pairs.iter().enumerate() {
            let triangle = *edge_owner
                .get(&(a.min(b), a.max(b)))
                .ok_or_else(|| LabError::MeshFailure(format!("boundary edge {e} ({a}, {b}) is not a triangle edge")))?;
            let d = sub(nodes[b], nodes[a]);
            let length = norm(d);
            boundary.push(BoundaryEdge { nodes: [a, b], normal: [d[1] / length, -d[0] / length], length, triangle });
        }
        let mut on_boundary = vec![false; nodes.len()];
        for e in &boundary {
            on_boundary[e.nodes[0]] = true;
            on_boundary[e.nodes[1]] = true;
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut basis_gradients = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let [p0, p1, p2] = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
            let twice = cross(sub(p1, p0), sub(p2, p0));
            areas.push(0.5 * twice);
            // ∇λ_i = rot(opposite edge) / (2|T|)
            let g = |a: Point2, b: Point2| [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice];
            basis_gradients.push([g(p1, p2), g(p2, p0), g(p0, p1)]);
        }
        let max_edge = triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| norm(sub(nodes[a], nodes[b])))
            .fold(0.0, f64::max);
        let mesh = Self { nodes, triangles, boundary, on_boundary, areas, basis_gradients, h: h.unwrap_or(max_edge) };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.on_boundary[node]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.on_boundary
    }

    pub fn area_of(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn basis_gradients(&self, t: usize) -> &[Point2; 3] {
        &self.basis_gradients[t]
    }

    /// Nominal mesh size used to build the mesh (largest edge for imports).
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn interior_count(&self) -> usize {
        self.on_boundary.iter().filter(|b| !**b).count()
    }

    pub fn area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| norm(sub(self.nodes[a], self.nodes[b])))
            .fold(0.0, f64::max)
    }

    /// Piecewise-constant gradient of the linear interpolant of `values`.
    pub fn gradient(&self, t: usize, values: &[f64]) -> Point2 {
        let tri = self.triangles[t];
        let g = &self.basis_gradients[t];
        let mut out = [0.0, 0.0];
        for k in 0..3 {
            out[0] += values[tri[k]] * g[k][0];
            out[1] += values[tri[k]] * g[k][1];
        }
        out
    }

    /// Sorted, deduplicated neighbour lists.
    pub fn node_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nbrs = vec![Vec::new(); self.nodes.len()];
        for tri in &self.triangles {
            for k in 0..3 {
                nbrs[tri[k]].push(tri[(k + 1) % 3]);
                nbrs[tri[k]].push(tri[(k + 2) % 3]);
            }
        }
        for list in &mut nbrs {
            list.sort_unstable();
            list.dedup();
        }
        nbrs
    }

    /// Checks every mesh invariant: positive triangle areas, a single closed
    /// boundary loop without self-intersections, and outward edge normals.
    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(LabError::MeshFailure("mesh has no triangles".into()));
        }
        if let Some((t, a)) = self.areas.iter().enumerate().find(|(_, a)| !(**a > 0.0)) {
            return Err(LabError::MeshFailure(format!("triangle {t} has signed area {a:.3e}")));
        }
        if self.boundary.len() < 3 {
            return Err(LabError::MeshFailure("boundary has fewer than three edges".into()));
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        for e in &self.boundary {
            if next.insert(e.nodes[0], e.nodes[1]).is_some() {
                return Err(LabError::MeshFailure(format!("boundary node {} starts two edges", e.nodes[0])));
            }
        }
        let start = self.boundary[0].nodes[0];
        let mut cur = start;
        for _ in 0..self.boundary.len() {
            cur =
                *next.get(&cur).ok_or_else(|| LabError::MeshFailure(format!("boundary loop is open at node {cur}")))?;
        }
        if cur != start {
            return Err(LabError::MeshFailure("boundary edges do not form one closed loop".into()));
        }
        for (i, e) in self.boundary.iter().enumerate() {
            let tri = self.triangles[e.triangle];
            let third = tri.iter().copied().find(|v| !e.nodes.contains(v)).expect("edge triangle");
            let mid = e.midpoint(self);
            let inward = sub(self.nodes[third], mid);
            if e.normal[0] * inward[0] + e.normal[1] * inward[1] >= 0.0 {
                return Err(LabError::MeshFailure(format!("normal of boundary edge {i} points inward")));
            }
        }
        self.check_boundary_simple()
    }

    fn check_boundary_simple(&self) -> Result<()> {
        let m = self.boundary.len();
        let seg = |e: &BoundaryEdge| (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
        for i in 0..m {
            let (a, b) = seg(&self.boundary[i]);
            for j in i + 1..m {
                let ej = &self.boundary[j];
                let ei = &self.boundary[i];
                if ej.nodes.iter().any(|v| ei.nodes.contains(v)) {
                    continue;
                }
                let (c, d) = seg(ej);
                if segments_intersect(a, b, c, d) {
                    return Err(LabError::MeshFailure(format!("boundary edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text export: header `N T B`, then `x y` node lines, `i j k`
    /// triangle lines and `i j nx ny len` boundary lines.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.nodes.len(), self.triangles.len(), self.boundary.len())?;
        for p in &self.nodes {
            writeln!(out, "{} {}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        for e in &self.boundary {
            writeln!(out, "{} {} {} {} {}", e.nodes[0], e.nodes[1], e.normal[0], e.normal[1], e.length)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            Ok(s) => Some(Ok((i + 1, s))),
            Err(e) => Some(Err(e)),
        });
        let mut next_fields = |want: usize, what: &str| -> Result<(usize, Vec<String>)> {
            let (line, text) = lines.next().ok_or_else(|| LabError::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })??;
            let fields: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
            if fields.len() != want {
                return Err(LabError::Parse { line, message: format!("expected {want} fields for {what}") });
            }
            Ok((line, fields))
        };
        fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            s.parse::<T>().map_err(|e| LabError::Parse { line, message: format!("`{s}`: {e}") })
        }
        let (line, header) = next_fields(3, "header `N T B`")?;
        let n: usize = num(line, &header[0])?;
        let t: usize = num(line, &header[1])?;
        let b: usize = num(line, &header[2])?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, f) = next_fields(2, "node `x y`")?;
            nodes.push([num(line, &f[0])?, num(line, &f[1])?]);
        }
        let mut triangles = Vec::with_capacity(t);
        for _ in 0..t {
            let (line, f) = next_fields(3, "triangle `i j k`")?;
            triangles.push([num(line, &f[0])?, num(line, &f[1])?, num(line, &f[2])?]);
        }
        let mut pairs = Vec::with_capacity(b);
        for _ in 0..b {
            let (line, f) = next_fields(5, "boundary edge `i j nx ny len`")?;
            pairs.push([num(line, &f[0])?, num(line, &f[1])?]);
        }
        Self::from_parts(nodes, triangles, &pairs, None)
    }
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Structured triangulation of a star-shaped domain with target edge length
/// `h`: concentric rings `k = 1..L` of `8k` nodes mapped through `ρ(θ)`,
/// consecutive rings zipped into triangles.
pub fn triangulate(domain: &StarDomain2D, h: f64) -> Result<Mesh2D> {
    let layers = ring_count(domain, h)?;
    let mut mesh = triangulate_with_layers(domain, layers)?;
    mesh.h = h;
    Ok(mesh)
}

/// Number of rings [`triangulate`] uses for target edge length `h`.
pub fn ring_count(domain: &StarDomain2D, h: f64) -> Result<usize> {
    if !(h.is_finite() && h > 0.0) {
        return Err(LabError::InvalidInput(format!("mesh size h = {h} must be positive")));
    }
    if h >= domain.rho_min() / 4.0 {
        return Err(LabError::InvalidInput(format!(
            "mesh size h = {h} must be below min ρ / 4 = {}",
            domain.rho_min() / 4.0
        )));
    }
    // |dx/dθ| bounds the spacing of ring nodes; the chord polygon gives it.
    let n = domain.sample_count();
    let speed = (0..n)
        .map(|i| norm(sub(domain.boundary_point(i + 1), domain.boundary_point(i))) * n as f64 / TAU)
        .fold(0.0, f64::max);
    let layers = (domain.rho_max().max(speed) / h).ceil() as usize;
    Ok(layers.max(2))
}

/// Structured triangulation with an explicit ring count; meshes of nearby
/// domains built with the same `layers` share connectivity.
pub fn triangulate_with_layers(domain: &StarDomain2D, layers: usize) -> Result<Mesh2D> {
    if layers < 1 {
        return Err(LabError::InvalidInput("need at least one ring".into()));
    }
    let ring_start = |k: usize| if k == 0 { 0 } else { 1 + 4 * k * (k - 1) };
    let node = |k: usize, j: usize| if k == 0 { 0 } else { ring_start(k) + j % (8 * k) };
    let c = domain.center();
    let mut nodes = Vec::with_capacity(ring_start(layers + 1));
    nodes.push(c);
    for k in 1..=layers {
        let s = k as f64 / layers as f64;
        for j in 0..8 * k {
            let theta = TAU * j as f64 / (8 * k) as f64;
            let r = s * domain.rho_at(theta);
            nodes.push([c[0] + r * theta.cos(), c[1] + r * theta.sin()]);
        }
    }
    let mut triangles = Vec::with_capacity(8 * layers * layers);
    for j in 0..8 {
        triangles.push([0, node(1, j), node(1, j + 1)]);
    }
    for k in 2..=layers {
        let (n0, n1) = (8 * (k - 1), 8 * k);
        let (mut i, mut o) = (0, 0);
        while i < n0 || o < n1 {
            let outer_first = o < n1 && (i == n0 || (o + 1) * n0 <= (i + 1) * n1);
            if outer_first {
                triangles.push([node(k - 1, i), node(k, o), node(k, o + 1)]);
                o += 1;
            } else {
                triangles.push([node(k - 1, i), node(k, o), node(k - 1, i + 1)]);
                i += 1;
            }
        }
    }
    let pairs: Vec<[usize; 2]> = (0..8 * layers).map(|j| [node(layers, j), node(layers, j + 1)]).collect();
    let h = domain.rho_max() / layers as f64;
    Mesh2D::from_parts(nodes, triangles, &pairs, Some(h))
}

/// Total length of the boundary polygon.
pub fn boundary_measure(mesh: &Mesh2D) -> f64 {
    mesh.boundary_edges().iter().map(|e| e.length).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn brute_force_simple(mesh: &Mesh2D) -> bool {
        let b = mesh.boundary_edges();
        for i in 0..b.len() {
            for j in 0..b.len() {
                if i == j || b[j].nodes.iter().any(|v| b[i].nodes.contains(v)) {
                    continue;
                }
                let p = |e: &BoundaryEdge| (mesh.nodes()[e.nodes[0]], mesh.nodes()[e.nodes[1]]);
                let (a, bb) = p(&b[i]);
                let (c, d) = p(&b[j]);
                if segments_intersect(a, bb, c, d) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn unit_disk_mesh_is_valid() {
        let mesh = triangulate(&StarDomain2D::disk(1.0).unwrap(), 0.1).unwrap();
        assert!(mesh.validate().is_ok());
        assert!(mesh.triangles().len() > 300);
        assert!(mesh.max_edge_length() <= 0.2);
        assert!((mesh.area() - PI).abs() < 0.05);
    }

    #[test]
    fn square_mesh_normals_outward() {
        let mesh = triangulate(&StarDomain2D::square(2.0).unwrap(), 0.05).unwrap();
        assert!(mesh.max_edge_length() <= 0.1);
        let centroid = {
            let mut c = [0.0, 0.0];
            for (t, tri) in mesh.triangles().iter().enumerate() {
                for &v in tri {
                    c[0] += mesh.area_of(t) * mesh.nodes()[v][0] / 3.0;
                    c[1] += mesh.area_of(t) * mesh.nodes()[v][1] / 3.0;
                }
            }
            [c[0] / mesh.area(), c[1] / mesh.area()]
        };
        for e in mesh.boundary_edges() {
            let m = e.midpoint(&mesh);
            let v = sub(m, centroid);
            assert!(e.normal[0] * v[0] + e.normal[1] * v[1] > 0.0);
        }
        assert!((boundary_measure(&mesh) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn limacon_boundary_is_simple() {
        let d = StarDomain2D::perturbed_disk(1.0, 0.5, 1).unwrap();
        let mesh = triangulate(&d, 0.05).unwrap();
        assert!(brute_force_simple(&mesh));
        assert!(mesh.max_edge_length() <= 0.1);
    }

    #[test]
    fn perimeters() {
        let mesh = triangulate(&StarDomain2D::disk(1.0).unwrap(), 0.02).unwrap();
        assert!((boundary_measure(&mesh) / (2.0 * PI) - 1.0).abs() < 0.005);
        let mesh = triangulate(&StarDomain2D::disk(2.0).unwrap(), 0.02).unwrap();
        assert!((boundary_measure(&mesh) / (4.0 * PI) - 1.0).abs() < 0.005);
        let mesh = triangulate(&StarDomain2D::square(1.0).unwrap(), 0.02).unwrap();
        assert!((boundary_measure(&mesh) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_coarse_h() {
        assert!(triangulate(&StarDomain2D::disk(1.0).unwrap(), 0.3).is_err());
        assert!(triangulate(&StarDomain2D::disk(1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn detects_inverted_triangles() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let err = Mesh2D::from_parts(nodes, vec![[0, 2, 1]], &[[0, 1], [1, 2], [2, 0]], None);
        assert!(err.is_err());
    }

    #[test]
    fn text_round_trip() {
        let mesh = triangulate(&StarDomain2D::perturbed_disk(1.0, 0.3, 1).unwrap(), 0.1).unwrap();
        let mut buf = Vec::new();
        mesh.write_text(&mut buf).unwrap();
        let back = Mesh2D::read_text(buf.as_slice()).unwrap();
        assert_eq!(back.nodes(), mesh.nodes());
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.boundary_edges(), mesh.boundary_edges());
    }

    #[test]
    fn isoperimetric_with_slack() {
        for (d, h) in [
            (StarDomain2D::disk(1.0).unwrap(), 0.05),
            (StarDomain2D::square(1.0).unwrap(), 0.05),
            (StarDomain2D::perturbed_disk(1.0, 0.3, 1).unwrap(), 0.05),
            (StarDomain2D::perturbed_disk(1.0, 0.3, 2).unwrap(), 0.02),
        ] {
            let mesh = triangulate(&d, h).unwrap();
            let l = boundary_measure(&mesh);
            assert!(l * l >= 4.0 * PI * mesh.area() * (1.0 - 5.0 * h));
        }
    }
}
