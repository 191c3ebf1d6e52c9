//! Planar triangle meshes of catalog domains and exact integrals of
//! piecewise-linear functions on them.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use spade::handles::FixedVertexHandle;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use thiserror::Error;

use crate::geometry::{DomainModel, Vector};

/// Smallest accepted triangle area.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;
/// Angle target passed to the Delaunay refinement.
const REFINE_ANGLE_DEG: f64 = 25.0;
/// Minimum angle required of the finished mesh away from acute input corners.
pub const MIN_ANGLE_DEG: f64 = 20.0;
/// Grading rings around singular boundary points.
pub const GRADING_RINGS: u32 = 8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh generation failed: {0}")]
    Failure(String),
    #[error("mesh size h = {h} must be below diameter / 10 = {limit}")]
    TooCoarse { h: f64, limit: f64 },
    #[error("{expected} vertex values expected, got {got}")]
    ValueCount { expected: usize, got: usize },
}

/// Directed boundary edge `a -> b` with the interior on its left; `triangle`
/// is the adjacent element (the outward side is the other one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub triangle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub h: f64,
}

impl Mesh {
    /// Builds a mesh from vertices and triangles, orienting triangles
    /// counter-clockwise and deriving the boundary edges.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, h: f64) -> Result<Self, MeshError> {
        let mut tris = triangles;
        for (k, t) in tris.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::Failure(format!("triangle {k} references a missing vertex")));
            }
            let a = signed_area(&vertices, *t);
            if a < 0.0 {
                t.swap(1, 2);
            }
            if a.abs() <= MIN_TRIANGLE_AREA {
                return Err(MeshError::Failure(format!("triangle {k} has area {a:e}")));
            }
        }
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut boundary_edges = Vec::new();
        for (ti, t) in tris.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if count[&(a.min(b), a.max(b))] == 1 {
                    boundary_edges.push(BoundaryEdge { a, b, triangle: ti });
                }
            }
        }
        boundary_edges.sort_by_key(|e| (e.a, e.b));
        let mesh = Self { vertices, triangles: tris, boundary_edges, h };
        mesh.loops()?;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let (p, q) = (self.vertices[e.a], self.vertices[e.b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| self.edge_length(e)).sum()
    }

    /// Boundary loops as vertex cycles; fails unless every boundary vertex has
    /// exactly one outgoing and one incoming boundary edge.
    pub fn loops(&self) -> Result<Vec<Vec<usize>>, MeshError> {
        let mut next: HashMap<usize, usize> = HashMap::new();
        let mut incoming: HashSet<usize> = HashSet::new();
        for e in &self.boundary_edges {
            if next.insert(e.a, e.b).is_some() || !incoming.insert(e.b) {
                return Err(MeshError::Failure(format!("boundary vertex {} is not a manifold point", e.a)));
            }
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = HashSet::new();
        let mut loops = Vec::new();
        for s in starts {
            if seen.contains(&s) {
                continue;
            }
            let mut cycle = vec![s];
            seen.insert(s);
            let mut v = next[&s];
            while v != s {
                if !seen.insert(v) {
                    return Err(MeshError::Failure("boundary edges do not close".into()));
                }
                cycle.push(v);
                v = *next.get(&v).ok_or_else(|| MeshError::Failure("open boundary chain".into()))?;
            }
            loops.push(cycle);
        }
        Ok(loops)
    }

    /// Gradient of the affine interpolant on triangle `t`.
    pub fn gradient(&self, t: usize, values: &[f64]) -> [f64; 2] {
        let [i, j, k] = self.triangles[t];
        let (p0, p1, p2) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        let (e1, e2) = ([p1[0] - p0[0], p1[1] - p0[1]], [p2[0] - p0[0], p2[1] - p0[1]]);
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        let (d1, d2) = (values[j] - values[i], values[k] - values[i]);
        [(d1 * e2[1] - d2 * e1[1]) / det, (e1[0] * d2 - e2[0] * d1) / det]
    }

    /// Gradient operator coefficients: `grad u_T = sum_m c_m u_{v_m}`.
    pub fn gradient_coefficients(&self, t: usize) -> [[f64; 2]; 3] {
        let [i, j, k] = self.triangles[t];
        let (p0, p1, p2) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        // grad of barycentric lambda_m is the rotated opposite edge over 2A.
        let g = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        [g(p1, p2), g(p2, p0), g(p0, p1)]
    }

    fn check_values(&self, values: &[f64]) -> Result<(), MeshError> {
        if values.len() != self.vertices.len() {
            return Err(MeshError::ValueCount { expected: self.vertices.len(), got: values.len() });
        }
        Ok(())
    }

    /// `sum_T |grad u|_T area(T)`, exact for piecewise-linear `u`.
    pub fn total_variation(&self, values: &[f64]) -> Result<f64, MeshError> {
        self.check_values(values)?;
        Ok((0..self.triangles.len())
            .map(|t| {
                let g = self.gradient(t, values);
                g[0].hypot(g[1]) * self.area(t)
            })
            .sum())
    }

    /// Exact `int |u|` over the mesh.
    pub fn integral_abs(&self, values: &[f64]) -> Result<f64, MeshError> {
        self.check_values(values)?;
        Ok((0..self.triangles.len())
            .map(|t| {
                let [i, j, k] = self.triangles[t];
                triangle_abs_integral(self.area(t), [values[i], values[j], values[k]])
            })
            .sum())
    }

    /// Exact `int |u|` along the boundary edges.
    pub fn boundary_integral_abs(&self, values: &[f64]) -> Result<f64, MeshError> {
        self.check_values(values)?;
        Ok(self.boundary_edges.iter().map(|e| self.edge_length(e) * segment_abs_mean(values[e.a], values[e.b])).sum())
    }

    /// Weights `w` with `int_{boundary} u = w . u`: half the adjacent edge lengths.
    pub fn boundary_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.vertices.len()];
        for e in &self.boundary_edges {
            let l = 0.5 * self.edge_length(e);
            w[e.a] += l;
            w[e.b] += l;
        }
        w
    }

    /// Weights `m` with `int u = m . u`: a third of the adjacent areas.
    pub fn mass_weights(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.area(t) / 3.0;
            for &v in tri {
                m[v] += a;
            }
        }
        m
    }

    pub fn min_angle_deg(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        (0..3).map(|k| self.corner_angle_deg(tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3])).fold(f64::INFINITY, f64::min)
    }

    fn corner_angle_deg(&self, at: usize, p: usize, q: usize) -> f64 {
        let o = self.vertices[at];
        let u = [self.vertices[p][0] - o[0], self.vertices[p][1] - o[1]];
        let v = [self.vertices[q][0] - o[0], self.vertices[q][1] - o[1]];
        let c = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
        c.clamp(-1.0, 1.0).acos().to_degrees()
    }

    /// Splits every triangle into four at the edge midpoints. Returns the
    /// refined mesh and, for each new vertex, its parent edge.
    pub fn refine_uniform(&self) -> (Mesh, Vec<(usize, usize)>) {
        let mut vertices = self.vertices.clone();
        let mut parents = Vec::new();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                parents.push((a.min(b), a.max(b)));
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[i, j, k] in &self.triangles {
            let ij = midpoint(i, j, &mut vertices);
            let jk = midpoint(j, k, &mut vertices);
            let ki = midpoint(k, i, &mut vertices);
            triangles.extend([[i, ij, ki], [ij, j, jk], [ki, jk, k], [ij, jk, ki]]);
        }
        let mesh = Mesh::from_parts(vertices, triangles, 0.5 * self.h).expect("uniform refinement of a valid mesh");
        (mesh, parents)
    }

    /// Interpolates vertex values onto [`Mesh::refine_uniform`]'s output.
    pub fn prolong(values: &[f64], parents: &[(usize, usize)]) -> Vec<f64> {
        let mut out = values.to_vec();
        out.extend(parents.iter().map(|&(a, b)| 0.5 * (values[a] + values[b])));
        out
    }

    /// Vertex values of a function.
    pub fn interpolate(&self, f: impl Fn(&Vector) -> f64) -> Vec<f64> {
        self.vertices.iter().map(|p| f(&Vector::from_row_slice(p))).collect()
    }
}

fn signed_area(v: &[[f64; 2]], [i, j, k]: [usize; 3]) -> f64 {
    let (p0, p1, p2) = (v[i], v[j], v[k]);
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]))
}

/// Mean of `|u|` along a segment with end values `a`, `b`.
fn segment_abs_mean(a: f64, b: f64) -> f64 {
    if a * b >= 0.0 {
        0.5 * (a + b).abs()
    } else {
        0.5 * (a * a + b * b) / (a.abs() + b.abs())
    }
}

/// Exact `int_T |u|` for affine `u` with vertex values `u` on a triangle of
/// area `area`: `s (int u - 2 int_sub u)` where `sub` is the corner where `u`
/// has the minority sign `-s`.
fn triangle_abs_integral(area: f64, u: [f64; 3]) -> f64 {
    let pos = u.iter().filter(|&&x| x > 0.0).count();
    let neg = u.iter().filter(|&&x| x < 0.0).count();
    let total = area * (u[0] + u[1] + u[2]) / 3.0;
    if pos == 0 || neg == 0 {
        return total.abs();
    }
    // Lone vertex: the one whose sign differs from the other two (zeros side
    // with the majority).
    let s = if pos >= 2 { 1.0 } else { -1.0 };
    let lone = (0..3).find(|&m| u[m] * s < 0.0).expect("a vertex of minority sign");
    let c = u[lone];
    let (a, b) = (u[(lone + 1) % 3], u[(lone + 2) % 3]);
    let ta = c / (c - a);
    let tb = c / (c - b);
    let sub = area * ta * tb * c / 3.0;
    s * (total - 2.0 * sub)
}

/// Local mesh size: `h` far from the singular points, `h 2^{-k}` in ring `k`
/// (`h 2^{-k} <= |x - p| < h 2^{1-k}`), at most [`GRADING_RINGS`] rings.
pub fn graded_size(domain: &DomainModel, h: f64, x: &[f64; 2]) -> f64 {
    let mut size = h;
    for p in domain.singular_points() {
        let d = (x[0] - p[0]).hypot(x[1] - p[1]);
        if d < h {
            let k = if d <= 0.0 { GRADING_RINGS } else { ((h / d).log2().floor() as u32 + 1).min(GRADING_RINGS) };
            size = size.min(h * 0.5f64.powi(k as i32));
        }
    }
    size
}

/// Triangulates a planar domain: boundary loops sampled at the graded size,
/// graded rings of interior points around singular points, constrained
/// Delaunay refinement (angle 25 degrees, area `sqrt(3)/4 h^2`), then every
/// vertex created on a boundary segment is projected onto the boundary.
pub fn build_mesh(domain: &DomainModel, h: f64) -> Result<Mesh, MeshError> {
    let limit = domain.diameter() / 10.0;
    if !(h > 0.0 && h < limit) {
        return Err(MeshError::TooCoarse { h, limit });
    }
    if domain.ambient_dim() != 2 || domain.loops().is_empty() {
        return Err(MeshError::Failure(format!("{} is not a planar looped domain", domain.name())));
    }
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let fail = |e: spade::InsertionError| MeshError::Failure(format!("{e:?}"));
    for lp in boundary_polygons(domain, h) {
        let handles: Vec<FixedVertexHandle> =
            lp.iter().map(|p| cdt.insert(Point2::new(p[0], p[1]))).collect::<Result<_, _>>().map_err(fail)?;
        for k in 0..handles.len() {
            let (a, b) = (handles[k], handles[(k + 1) % handles.len()]);
            if a != b && !cdt.can_add_constraint(a, b) {
                return Err(MeshError::Failure("boundary polygon self-intersects".into()));
            }
            cdt.add_constraint(a, b);
        }
    }
    let original: HashSet<FixedVertexHandle> = cdt.fixed_vertices().collect();
    for p in grading_points(domain, h) {
        cdt.insert(Point2::new(p[0], p[1])).map_err(fail)?;
    }
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(REFINE_ANGLE_DEG))
        .with_max_allowed_area(3f64.sqrt() / 4.0 * h * h)
        .with_min_required_area(3f64.sqrt() / 4.0 * (h * 0.5f64.powi(GRADING_RINGS as i32 + 1)).powi(2))
        .with_max_additional_vertices(2_000_000)
        .exclude_outer_faces(true);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(MeshError::Failure("refinement ran out of vertices".into()));
    }
    let excluded: HashSet<_> = result.excluded_faces.into_iter().collect();
    let mut index: HashMap<FixedVertexHandle, usize> = HashMap::new();
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut triangles = Vec::new();
    let mut new_boundary: HashSet<usize> = HashSet::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let tri = face.vertices().map(|v| {
            *index.entry(v.fix()).or_insert_with(|| {
                let p = v.position();
                vertices.push([p.x, p.y]);
                vertices.len() - 1
            })
        });
        for v in face.vertices() {
            if !original.contains(&v.fix()) && v.out_edges().any(|e| e.is_constraint_edge()) {
                new_boundary.insert(index[&v.fix()]);
            }
        }
        triangles.push(tri);
    }
    // Snap refinement vertices that sit on boundary chords.
    let mut snapped = new_boundary.into_iter().collect::<Vec<_>>();
    snapped.sort_unstable();
    for v in snapped {
        let x = Vector::from_row_slice(&vertices[v]);
        let p = domain.fast_nearest(&x).map_err(|e| MeshError::Failure(format!("snapping failed: {e}")))?;
        vertices[v] = [p.point[0], p.point[1]];
    }
    for (k, t) in triangles.iter().enumerate() {
        if signed_area(&vertices, *t) <= MIN_TRIANGLE_AREA {
            return Err(MeshError::Failure(format!("triangle {k} inverted by snapping")));
        }
    }
    let mesh = Mesh::from_parts(vertices, triangles, h)?;
    let acute = acute_corners(domain, &mesh);
    for t in 0..mesh.triangles.len() {
        if mesh.triangles[t].iter().any(|v| acute.contains(v)) {
            continue;
        }
        let a = mesh.min_angle_deg(t);
        if a < MIN_ANGLE_DEG {
            return Err(MeshError::Failure(format!("triangle {t} has minimum angle {a:.2} degrees")));
        }
    }
    Ok(mesh)
}

/// Boundary vertices whose interior angle is below 60 degrees: refinement
/// cannot improve triangles there, so they are exempt from the angle check.
fn acute_corners(domain: &DomainModel, mesh: &Mesh) -> HashSet<usize> {
    let mut out = HashSet::new();
    for e in &mesh.boundary_edges {
        let p = mesh.vertices[e.a];
        if !domain.singular_points().iter().any(|s| (s[0] - p[0]).hypot(s[1] - p[1]) < 1e-12) {
            continue;
        }
        if let Some(prev) = mesh.boundary_edges.iter().find(|f| f.b == e.a) {
            if mesh.corner_angle_deg(e.a, e.b, prev.a) < 60.0 {
                out.insert(e.a);
            }
        }
    }
    out
}

/// Samples each boundary loop at the graded size, always keeping piece
/// endpoints and singular points as vertices.
pub fn boundary_polygons(domain: &DomainModel, h: f64) -> Vec<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for lp in domain.loops() {
        let mut poly: Vec<[f64; 2]> = Vec::new();
        for piece in lp {
            let chart = domain.chart(piece.chart);
            let mut breaks = vec![piece.from];
            for p in domain.singular_points() {
                if let Some(s) = chart.locate(p) {
                    let s = s[0];
                    if (s - piece.from) * (piece.to - s) > 0.0 {
                        breaks.push(s);
                    }
                }
            }
            breaks.push(piece.to);
            let dir = (piece.to - piece.from).signum();
            breaks.sort_by(|a, b| (dir * a).total_cmp(&(dir * b)));
            for w in breaks.windows(2) {
                let (s0, s1) = (w[0], w[1]);
                let mut s = s0;
                loop {
                    let x = chart.eval(&[s]);
                    poly.push([x[0], x[1]]);
                    let speed = chart.tangents(&[s]).column(0).norm();
                    let step = graded_size(domain, h, &[x[0], x[1]]) / speed;
                    let remaining = (s1 - s) * dir;
                    if remaining <= 1.5 * step {
                        if remaining > step {
                            // Split what is left into two equal steps.
                            let mid = s + 0.5 * (s1 - s);
                            let y = chart.eval(&[mid]);
                            poly.push([y[0], y[1]]);
                        }
                        break;
                    }
                    s += dir * step;
                }
            }
        }
        out.push(poly);
    }
    out
}

/// Interior points on circles around singular points, one circle per
/// grading ring, kept when inside and clear of the boundary.
fn grading_points(domain: &DomainModel, h: f64) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    for p in domain.singular_points() {
        for k in 1..=GRADING_RINGS {
            let size = h * 0.5f64.powi(k as i32);
            let radius = 1.5 * size;
            let count = ((2.0 * std::f64::consts::PI * radius / size).ceil() as usize).max(6);
            for j in 0..count {
                let th = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
                let x = Vector::from_vec(vec![p[0] + radius * th.cos(), p[1] + radius * th.sin()]);
                if !domain.inside(&x) {
                    continue;
                }
                let clear = domain.signed_distance(&x).map(|d| d > 0.5 * size).unwrap_or(false);
                if clear {
                    pts.push([x[0], x[1]]);
                }
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_triangle() -> Mesh {
        Mesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 1.0).unwrap()
    }

    #[test]
    fn hat_function_tv() {
        let m = unit_triangle();
        let tv = m.total_variation(&[1.0, 0.0, 0.0]).unwrap();
        assert!((tv - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn abs_integral_with_sign_change() {
        // int |x - 1/2| over the unit right triangle is 1/8.
        let m = unit_triangle();
        let got = m.integral_abs(&[-0.5, 0.5, -0.5]).unwrap();
        assert!((got - 0.125).abs() < 1e-15, "{got}");
        let got = m.integral_abs(&[0.5, -0.5, 0.5]).unwrap();
        assert!((got - 0.125).abs() < 1e-15, "{got}");
    }

    #[test]
    fn boundary_abs_of_sign_change() {
        // Edge from value 1 to -1 over length 1: mean |u| = 1/2.
        assert!((segment_abs_mean(1.0, -1.0) - 0.5).abs() < 1e-15);
        assert!((segment_abs_mean(2.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn refinement_preserves_pl_integrals() {
        let m = build_mesh(&DomainModel::disc(1.0).unwrap(), 0.15).unwrap();
        let u = m.interpolate(|x| x[0] * x[0] - 0.3 * x[1]);
        let (fine, parents) = m.refine_uniform();
        let v = Mesh::prolong(&u, &parents);
        let tv0 = m.total_variation(&u).unwrap();
        let tv1 = fine.total_variation(&v).unwrap();
        assert!((tv0 - tv1).abs() < 1e-12, "{tv0} vs {tv1}");
        let a0 = m.integral_abs(&u).unwrap();
        let a1 = fine.integral_abs(&v).unwrap();
        assert!((a0 - a1).abs() < 1e-12);
    }

    #[test]
    fn disc_mesh_area() {
        let m = build_mesh(&DomainModel::disc(1.0).unwrap(), 0.1).unwrap();
        assert!((m.total_area() - PI).abs() <= 0.01 * PI);
        assert_eq!(m.loops().unwrap().len(), 1);
        for e in &m.boundary_edges {
            for v in [e.a, e.b] {
                let p = m.vertices[v];
                assert!((p[0].hypot(p[1]) - 1.0).abs() < m.h * m.h / 10.0);
            }
        }
    }

    #[test]
    fn annulus_has_two_loops() {
        let m = build_mesh(&DomainModel::annulus(1.0, 2.0).unwrap(), 0.05).unwrap();
        assert_eq!(m.loops().unwrap().len(), 2);
        assert!((m.total_area() - 3.0 * PI).abs() < 0.01 * 3.0 * PI);
    }

    #[test]
    fn cusp_mesh_is_graded() {
        let d = DomainModel::cusp(0.5, 0.5).unwrap();
        let m = build_mesh(&d, 0.02).unwrap();
        let near = |r0: f64, r1: f64| {
            m.boundary_edges
                .iter()
                .filter(|e| {
                    let p = m.vertices[e.a];
                    let r = p[0].hypot(p[1]);
                    r >= r0 && r < r1
                })
                .map(|e| m.edge_length(e))
                .fold(0.0, f64::max)
        };
        let far = near(0.1, 10.0);
        let close = near(0.0, 0.002);
        assert!(close < 0.25 * far, "{close} vs {far}");
    }

    #[test]
    fn bad_h_is_rejected() {
        assert!(matches!(build_mesh(&DomainModel::disc(1.0).unwrap(), 0.5), Err(MeshError::TooCoarse { .. })));
    }
}
