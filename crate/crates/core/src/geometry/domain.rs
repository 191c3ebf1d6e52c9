//! Bounded domains assembled from boundary charts, with the catalog used by
//! the experiments: balls, annuli, squares, cone corners and cusps.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::chart::{Chart, EdgeKind, Interval, Vector};
use super::cusp::{cusp_patch_halfwidth, cusp_profile};
use super::{unit_ball_volume, GeometryError};
use crate::quadrature::Adaptive;

pub type InsideFn = Arc<dyn Fn(&Vector) -> bool + Send + Sync>;
pub type SliceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Exact metadata for catalog domains. All catalog domains in the plane put
/// the singular point (apex) at the origin with the domain above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    ConeCorner { slope: f64, height: f64 },
    Cusp { alpha: f64, height: f64 },
    Square { side: f64 },
}

impl ClosedForm {
    pub fn volume(&self, dim: usize) -> Option<f64> {
        match *self {
            ClosedForm::Ball { radius } => Some(unit_ball_volume(dim) * radius.powi(dim as i32)),
            ClosedForm::Annulus { inner, outer } => {
                Some(unit_ball_volume(dim) * (outer.powi(dim as i32) - inner.powi(dim as i32)))
            }
            ClosedForm::Square { side } if dim == 2 => Some(side * side),
            ClosedForm::ConeCorner { slope, height } if dim == 2 => {
                let r = height / slope;
                Some(height * r + 0.5 * PI * r * r)
            }
            ClosedForm::Cusp { alpha, height } if dim == 2 => {
                let s = cusp_patch_halfwidth(alpha, height);
                let under = s.powf(2.0 + alpha) / ((1.0 + alpha) * (2.0 + alpha));
                Some(2.0 * (height * s - under) + 0.5 * PI * s * s)
            }
            _ => None,
        }
    }

    pub fn surface_area(&self, dim: usize) -> Option<f64> {
        let d = dim as i32;
        match *self {
            ClosedForm::Ball { radius } => Some(dim as f64 * unit_ball_volume(dim) * radius.powi(d - 1)),
            ClosedForm::Annulus { inner, outer } => {
                Some(dim as f64 * unit_ball_volume(dim) * (inner.powi(d - 1) + outer.powi(d - 1)))
            }
            ClosedForm::Square { side } if dim == 2 => Some(4.0 * side),
            ClosedForm::ConeCorner { slope, height } if dim == 2 => {
                let r = height / slope;
                Some(2.0 * (r * r + height * height).sqrt() + PI * r)
            }
            _ => None,
        }
    }

    /// Reach of the boundary: `inf` over boundary points of the local reach.
    pub fn reach(&self) -> f64 {
        match *self {
            ClosedForm::Ball { radius } => radius,
            ClosedForm::Annulus { inner, outer } => inner.min(0.5 * (outer - inner)),
            _ => 0.0,
        }
    }
}

/// Piece of a planar boundary loop: chart parameter range walked in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPiece {
    pub chart: usize,
    pub from: f64,
    pub to: f64,
}

/// How volume integrals over the domain are organised.
#[derive(Clone)]
pub enum VolumeRule {
    /// Centred annulus `inner < |x| < outer` in the plane (`inner = 0` for a disc).
    Polar {
        inner: f64,
        outer: f64,
    },
    /// Centred ball in R^3.
    Spherical {
        radius: f64,
    },
    Rectangle {
        lo: [f64; 2],
        hi: [f64; 2],
    },
    /// `{x0 < x < x1, lower(x) < y < upper(x)}` with kinks only at `breaks`.
    Slices {
        breaks: Vec<f64>,
        lower: SliceFn,
        upper: SliceFn,
    },
    /// Tensor cells over a bounding box; cells straddling the boundary are
    /// subdivided and finally assigned by centre containment.
    Clipped {
        lo: [f64; 2],
        hi: [f64; 2],
        cells: usize,
        depth: u32,
    },
}

impl fmt::Debug for VolumeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeRule::Polar { inner, outer } => write!(f, "Polar({inner}, {outer})"),
            VolumeRule::Spherical { radius } => write!(f, "Spherical({radius})"),
            VolumeRule::Rectangle { lo, hi } => write!(f, "Rectangle({lo:?}, {hi:?})"),
            VolumeRule::Slices { breaks, .. } => write!(f, "Slices({breaks:?})"),
            VolumeRule::Clipped { lo, hi, cells, depth } => {
                write!(f, "Clipped({lo:?}, {hi:?}, {cells}, {depth})")
            }
        }
    }
}

/// A bounded domain: charts covering the boundary, a partition of unity, an
/// inside test and optional closed-form metadata.
#[derive(Clone)]
pub struct DomainModel {
    name: String,
    ambient_dim: usize,
    charts: Vec<Chart>,
    inside: InsideFn,
    closed_form: Option<ClosedForm>,
    loops: Vec<Vec<BoundaryPiece>>,
    volume_rule: VolumeRule,
    singular_points: Vec<Vector>,
    diameter: f64,
}

impl fmt::Debug for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainModel")
            .field("name", &self.name)
            .field("ambient_dim", &self.ambient_dim)
            .field("charts", &self.charts.len())
            .field("closed_form", &self.closed_form)
            .field("volume_rule", &self.volume_rule)
            .finish()
    }
}

impl DomainModel {
    /// Generic constructor for domains outside the catalog.
    pub fn new(
        name: impl Into<String>,
        ambient_dim: usize,
        charts: Vec<Chart>,
        inside: impl Fn(&Vector) -> bool + Send + Sync + 'static,
        volume_rule: VolumeRule,
        diameter: f64,
    ) -> Self {
        Self {
            name: name.into(),
            ambient_dim,
            charts,
            inside: Arc::new(inside),
            closed_form: None,
            loops: Vec::new(),
            volume_rule,
            singular_points: Vec::new(),
            diameter,
        }
    }

    pub fn with_loops(mut self, loops: Vec<Vec<BoundaryPiece>>) -> Self {
        self.loops = loops;
        self
    }

    pub fn with_singular_points(mut self, pts: Vec<Vector>) -> Self {
        self.singular_points = pts;
        self
    }

    pub fn with_closed_form(mut self, cf: ClosedForm) -> Self {
        self.closed_form = Some(cf);
        self
    }

    /// Disc (`dim = 2`) or ball (`dim = 3`) of the given radius centred at 0.
    pub fn ball(radius: f64, dim: usize) -> Result<Self, GeometryError> {
        if !(radius > 0.0) {
            return Err(GeometryError::Precondition(format!("ball radius {radius} must be positive")));
        }
        let cf = ClosedForm::Ball { radius };
        match dim {
            2 => {
                let charts = circle_charts([0.0, 0.0], radius, false, "outer");
                let loops = vec![circle_loop(0)];
                Ok(Self::new(
                    format!("disc({radius})"),
                    2,
                    charts,
                    move |x| x.norm() < radius,
                    VolumeRule::Polar { inner: 0.0, outer: radius },
                    2.0 * radius,
                )
                .with_loops(loops)
                .with_closed_form(cf))
            }
            3 => Ok(Self::new(
                format!("ball3({radius})"),
                3,
                cube_sphere_charts(radius),
                move |x| x.norm() < radius,
                VolumeRule::Spherical { radius },
                2.0 * radius,
            )
            .with_closed_form(cf)),
            _ => Err(GeometryError::Precondition(format!("ball domains are available for N = 2, 3 (got {dim})"))),
        }
    }

    pub fn disc(radius: f64) -> Result<Self, GeometryError> {
        Self::ball(radius, 2)
    }

    /// Planar annulus `a < |x| < b`.
    pub fn annulus(inner: f64, outer: f64) -> Result<Self, GeometryError> {
        if !(inner > 0.0 && inner < outer) {
            return Err(GeometryError::Precondition(format!(
                "annulus radii must satisfy 0 < a < b (got {inner}, {outer})"
            )));
        }
        let mut charts = circle_charts([0.0, 0.0], outer, false, "outer");
        charts.extend(circle_charts([0.0, 0.0], inner, true, "inner"));
        let loops = vec![circle_loop(0), circle_loop(4)];
        Ok(Self::new(
            format!("annulus({inner},{outer})"),
            2,
            charts,
            move |x| {
                let r = x.norm();
                r > inner && r < outer
            },
            VolumeRule::Polar { inner, outer },
            2.0 * outer,
        )
        .with_loops(loops)
        .with_closed_form(ClosedForm::Annulus { inner, outer }))
    }

    /// Square `[0, side]^2`.
    pub fn square(side: f64) -> Result<Self, GeometryError> {
        if !(side > 0.0) {
            return Err(GeometryError::Precondition(format!("square side {side} must be positive")));
        }
        let c = [[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]];
        let charts: Vec<Chart> =
            (0..4).map(|i| segment_chart(c[i], c[(i + 1) % 4]).named(format!("side{i}"))).collect();
        let loops = vec![(0..4).map(|i| BoundaryPiece { chart: i, from: 0.0, to: 1.0 }).collect()];
        Ok(Self::new(
            format!("square({side})"),
            2,
            charts,
            move |x| x[0] > 0.0 && x[0] < side && x[1] > 0.0 && x[1] < side,
            VolumeRule::Rectangle { lo: [0.0, 0.0], hi: [side, side] },
            side * 2f64.sqrt(),
        )
        .with_loops(loops)
        .with_singular_points(c.iter().map(|p| Vector::from_row_slice(p)).collect())
        .with_closed_form(ClosedForm::Square { side }))
    }

    /// Planar cone corner `{L|x_1| < x_2 < eta}` closed above by the half
    /// circle centred at `(0, eta)` through the top corners of the cone.
    pub fn cone_corner(slope: f64, height: f64) -> Result<Self, GeometryError> {
        if !(slope > 0.0 && height > 0.0) {
            return Err(GeometryError::Precondition(format!(
                "cone corner needs L > 0 and eta > 0 (got {slope}, {height})"
            )));
        }
        let r = height / slope;
        let charts = vec![
            segment_chart([0.0, 0.0], [r, height]).named("right-wall"),
            arc_chart([0.0, height], r, Interval::new(0.0, PI), false, (EdgeKind::Hard, EdgeKind::Hard)).named("cap"),
            segment_chart([-r, height], [0.0, 0.0]).named("left-wall"),
        ];
        let loops = vec![vec![
            BoundaryPiece { chart: 0, from: 0.0, to: 1.0 },
            BoundaryPiece { chart: 1, from: 0.0, to: PI },
            BoundaryPiece { chart: 2, from: 0.0, to: 1.0 },
        ]];
        let lower: SliceFn = Arc::new(move |x: f64| slope * x.abs());
        let upper: SliceFn = Arc::new(move |x: f64| height + (r * r - x * x).max(0.0).sqrt());
        Ok(Self::new(
            format!("cone(L={slope},eta={height})"),
            2,
            charts,
            move |x| {
                let (x1, x2) = (x[0], x[1]);
                slope * x1.abs() < x2 && (x2 <= height || x1 * x1 + (x2 - height) * (x2 - height) < r * r)
            },
            VolumeRule::Slices { breaks: vec![-r, 0.0, r], lower, upper },
            2.0 * r.max(0.5 * (height + r)),
        )
        .with_loops(loops)
        .with_singular_points(vec![Vector::from_row_slice(&[0.0, 0.0])])
        .with_closed_form(ClosedForm::ConeCorner { slope, height }))
    }

    /// Planar cusp `{x_2 > |x_1|^{1+alpha}/(1+alpha)}` below `x_2 = eta`,
    /// closed by the half circle centred at `(0, eta)` through the profile's
    /// top points. The junctions are C^0 only.
    pub fn cusp(alpha: f64, height: f64) -> Result<Self, GeometryError> {
        if !(alpha > 0.0 && alpha <= 1.0 && height > 0.0) {
            return Err(GeometryError::Precondition(format!(
                "cusp needs alpha in (0, 1] and eta > 0 (got {alpha}, {height})"
            )));
        }
        let s_top = cusp_patch_halfwidth(alpha, height);
        let profile = Chart::new(2, vec![Interval::new(-s_top, s_top)], move |s| {
            Vector::from_vec(vec![s[0], cusp_profile(alpha, s[0])])
        })
        .with_jacobian(move |s| {
            let slope = s[0].signum() * s[0].abs().powf(alpha);
            DMatrix::from_column_slice(2, 1, &[1.0, slope])
        })
        .with_locate(move |x| {
            let s = x[0];
            let on = (x[1] - cusp_profile(alpha, s)).abs() <= 1e-9 * (1.0 + s_top);
            (on && s.abs() <= s_top * (1.0 + 1e-12)).then(|| vec![s.clamp(-s_top, s_top)])
        })
        .with_length_scale(s_top)
        .named("profile");
        let cap = arc_chart([0.0, height], s_top, Interval::new(0.0, PI), false, (EdgeKind::Hard, EdgeKind::Hard))
            .named("cap");
        let loops = vec![vec![
            BoundaryPiece { chart: 0, from: -s_top, to: s_top },
            BoundaryPiece { chart: 1, from: 0.0, to: PI },
        ]];
        let lower: SliceFn = Arc::new(move |x: f64| cusp_profile(alpha, x));
        let upper: SliceFn = Arc::new(move |x: f64| height + (s_top * s_top - x * x).max(0.0).sqrt());
        Ok(Self::new(
            format!("cusp(alpha={alpha},eta={height})"),
            2,
            vec![profile, cap],
            move |x| {
                let (x1, x2) = (x[0], x[1]);
                cusp_profile(alpha, x1) < x2
                    && (x2 <= height || x1 * x1 + (x2 - height) * (x2 - height) < s_top * s_top)
            },
            VolumeRule::Slices { breaks: vec![-s_top, 0.0, s_top], lower, upper },
            2.0 * s_top.max(0.5 * (height + s_top)),
        )
        .with_loops(loops)
        .with_singular_points(vec![Vector::from_row_slice(&[0.0, 0.0])])
        .with_closed_form(ClosedForm::Cusp { alpha, height }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, i: usize) -> &Chart {
        &self.charts[i]
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    pub fn loops(&self) -> &[Vec<BoundaryPiece>] {
        &self.loops
    }

    pub fn volume_rule(&self) -> &VolumeRule {
        &self.volume_rule
    }

    pub fn singular_points(&self) -> &[Vector] {
        &self.singular_points
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn inside(&self, x: &Vector) -> bool {
        (self.inside)(x)
    }

    /// Partition-of-unity weight of chart `i` at its own parameter `s`.
    pub fn pou_weight(&self, i: usize, s: &[f64]) -> f64 {
        let own = self.charts[i].bump(s);
        if own == 0.0 {
            return 0.0;
        }
        let x = self.charts[i].eval(s);
        let mut total = own;
        for (j, c) in self.charts.iter().enumerate() {
            if j == i {
                continue;
            }
            if let Some(sj) = c.locate(&x) {
                total += c.bump(&sj);
            }
        }
        own / total
    }

    /// All chart weights at a boundary point.
    pub fn pou_weights_at(&self, x: &Vector) -> Vec<(usize, f64)> {
        let bumps: Vec<(usize, f64)> = self
            .charts
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.locate(x).map(|s| (j, c.bump(&s))))
            .filter(|(_, b)| *b > 0.0)
            .collect();
        let total: f64 = bumps.iter().map(|(_, b)| b).sum();
        bumps.into_iter().map(|(j, b)| (j, b / total)).collect()
    }

    /// Inward unit normal of chart `i` at `s`, with the orientation verified
    /// by the inside test a short distance along the normal.
    pub fn chart_normal(&self, i: usize, s: &[f64]) -> Result<Vector, GeometryError> {
        let chart = &self.charts[i];
        let n = chart.unit_normal(s)?;
        // Probe slightly away from box edges so corners do not confuse the test.
        let probe: Vec<f64> = s
            .iter()
            .zip(chart.domain_box())
            .map(|(x, iv)| {
                let margin = 1e-3 * iv.len();
                x.clamp(iv.lo + margin, iv.hi - margin)
            })
            .collect();
        let np = chart.unit_normal(&probe)?;
        let delta = 1e-4 * self.diameter;
        if !self.inside(&(chart.eval(&probe) + np * delta)) {
            return Err(GeometryError::OrientationMismatch { chart: chart.name().to_string() });
        }
        Ok(n)
    }

    /// `H_{N-1}(boundary)`: closed form when known, quadrature otherwise.
    pub fn surface_area(&self) -> f64 {
        if let Some(a) = self.closed_form.and_then(|c| c.surface_area(self.ambient_dim)) {
            return a;
        }
        crate::bv::surface_integral(self, |_| 1.0).map(|e| e.value).unwrap_or(f64::NAN)
    }

    pub fn volume(&self) -> f64 {
        if let Some(v) = self.closed_form.and_then(|c| c.volume(self.ambient_dim)) {
            return v;
        }
        crate::bv::volume_integral(self, |_| 1.0, 1e-10).map(|e| e.value).unwrap_or(f64::NAN)
    }

    /// Reach: closed form for catalog domains with positive reach, sampled
    /// estimate otherwise.
    pub fn reach(&self) -> f64 {
        match self.closed_form {
            Some(cf) => cf.reach(),
            None => self.reach_estimate(2000),
        }
    }

    /// Axis-aligned box around the boundary samples, padded by 1% of the
    /// diameter so arcs between samples stay inside.
    pub fn bounding_box(&self) -> (Vector, Vector) {
        let n = self.ambient_dim;
        let mut lo = Vector::from_element(n, f64::INFINITY);
        let mut hi = Vector::from_element(n, f64::NEG_INFINITY);
        let per_dim = if n == 2 { 400 } else { 40 };
        for c in &self.charts {
            for s in c.grid(per_dim) {
                let x = c.eval(&s);
                for k in 0..n {
                    lo[k] = lo[k].min(x[k]);
                    hi[k] = hi[k].max(x[k]);
                }
            }
        }
        let pad = 0.01 * self.diameter;
        (lo.add_scalar(-pad), hi.add_scalar(pad))
    }

    /// Default tube thickness: half the reach.
    pub fn default_tube_thickness(&self) -> f64 {
        0.5 * self.reach()
    }

    /// Checks the catalog invariants: rank, injectivity, orientation and that
    /// the partition of unity sums to one on chart samples.
    pub fn validate(&self, per_dim: usize) -> Result<(), GeometryError> {
        for (i, c) in self.charts.iter().enumerate() {
            c.check_rank(per_dim)?;
            c.check_injective(per_dim)?;
            let mid: Vec<f64> = c.domain_box().iter().map(|iv| 0.5 * (iv.lo + iv.hi)).collect();
            self.chart_normal(i, &mid)?;
            for s in c.grid(per_dim) {
                let x = c.eval(&s);
                let w: f64 = self.pou_weights_at(&x).iter().map(|(_, w)| w).sum();
                if (w - 1.0).abs() > 1e-12 {
                    return Err(GeometryError::DomainError(format!(
                        "partition of unity sums to {w} at a sample of chart `{}`",
                        c.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Quadrature of `f` along the boundary loops (planar domains only), used
    /// where a plain line integral over the loop pieces is wanted.
    pub fn loop_integral(&self, f: impl Fn(&Vector) -> f64) -> f64 {
        let q = Adaptive::new(1e-12, 1e-12);
        let mut total = 0.0;
        for lp in &self.loops {
            for piece in lp {
                let c = &self.charts[piece.chart];
                total += q
                    .integrate(piece.from, piece.to, |s| {
                        let t = c.tangents(&[s]);
                        f(&c.eval(&[s])) * t.column(0).norm()
                    })
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN);
            }
        }
        total
    }
}

fn circle_loop(first_chart: usize) -> Vec<BoundaryPiece> {
    (0..4)
        .map(|i| BoundaryPiece { chart: first_chart + i, from: i as f64 * PI / 2.0, to: (i + 1) as f64 * PI / 2.0 })
        .collect()
}

/// Four overlapping arcs covering a circle; each arc's core is one quadrant
/// and the collars overlap the neighbours. `clockwise` circles bound holes.
fn circle_charts(center: [f64; 2], radius: f64, clockwise: bool, tag: &str) -> Vec<Chart> {
    let collar = PI / 8.0;
    (0..4)
        .map(|i| {
            let lo = i as f64 * PI / 2.0 - collar;
            let hi = (i + 1) as f64 * PI / 2.0 + collar;
            arc_chart(
                center,
                radius,
                Interval::new(lo, hi),
                clockwise,
                (EdgeKind::Collar(collar), EdgeKind::Collar(collar)),
            )
            .named(format!("{tag}-arc{i}"))
        })
        .collect()
}

/// Arc `c + r (cos s, sin s)`, or `c + r (cos s, -sin s)` when clockwise.
fn arc_chart(center: [f64; 2], radius: f64, range: Interval, clockwise: bool, edges: (EdgeKind, EdgeKind)) -> Chart {
    let sign = if clockwise { -1.0 } else { 1.0 };
    let [cx, cy] = center;
    Chart::new(2, vec![range], move |s| {
        let th = sign * s[0];
        Vector::from_vec(vec![cx + radius * th.cos(), cy + radius * th.sin()])
    })
    .with_jacobian(move |s| {
        let th = sign * s[0];
        DMatrix::from_column_slice(2, 1, &[-sign * radius * th.sin(), sign * radius * th.cos()])
    })
    .with_locate(move |x| {
        let (dx, dy) = (x[0] - cx, x[1] - cy);
        let r = dx.hypot(dy);
        if (r - radius).abs() > 1e-9 * radius {
            return None;
        }
        let s = sign * dy.atan2(dx);
        let tau = 2.0 * PI;
        let shifted = s + tau * ((range.lo - s) / tau).ceil();
        let tol = 1e-12 * tau;
        if shifted <= range.hi + tol {
            Some(vec![shifted.min(range.hi)])
        } else if (shifted - tau - range.lo).abs() <= tol {
            Some(vec![range.lo])
        } else {
            None
        }
    })
    .with_edges(vec![edges])
    .with_length_scale(radius)
}

/// Straight segment from `p0` (s = 0) to `p1` (s = 1).
fn segment_chart(p0: [f64; 2], p1: [f64; 2]) -> Chart {
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    let len = d[0].hypot(d[1]);
    Chart::new(2, vec![Interval::new(0.0, 1.0)], move |s| {
        Vector::from_vec(vec![p0[0] + s[0] * d[0], p0[1] + s[0] * d[1]])
    })
    .with_jacobian(move |_| DMatrix::from_column_slice(2, 1, &d))
    .with_locate(move |x| {
        let rel = [x[0] - p0[0], x[1] - p0[1]];
        let s = (rel[0] * d[0] + rel[1] * d[1]) / (len * len);
        let off = (rel[0] * d[1] - rel[1] * d[0]).abs() / len;
        (off <= 1e-9 * len && (-1e-12..=1.0 + 1e-12).contains(&s)).then(|| vec![s.clamp(0.0, 1.0)])
    })
    .with_length_scale(len)
}

/// Six gnomonic charts `b v / |v|`, `v = s_1 u + s_2 w + e`, one per cube face.
/// Face cores `[-1, 1]^2` tile the sphere; collars overlap neighbouring faces.
fn cube_sphere_charts(radius: f64) -> Vec<Chart> {
    let collar = 0.25;
    let axes: [[f64; 3]; 6] =
        [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
    axes.iter()
        .enumerate()
        .map(|(k, e)| {
            let e = nalgebra::Vector3::from_row_slice(e);
            let a = if e[0].abs() < 0.5 { nalgebra::Vector3::x() } else { nalgebra::Vector3::y() };
            let c = e.cross(&a);
            // (u, w) ordered so that u x w = -e: the wedge points inward.
            let (u, w) = (c, a);
            let map = move |s: &[f64]| {
                let v = u * s[0] + w * s[1] + e;
                let p = v * (radius / v.norm());
                Vector::from_column_slice(p.as_slice())
            };
            let jac = move |s: &[f64]| {
                let v = u * s[0] + w * s[1] + e;
                let nv = v.norm();
                let dcol = |t: nalgebra::Vector3<f64>| (t - v * (v.dot(&t) / (nv * nv))) * (radius / nv);
                let c0 = dcol(u);
                let c1 = dcol(w);
                DMatrix::from_column_slice(3, 2, &[c0[0], c0[1], c0[2], c1[0], c1[1], c1[2]])
            };
            let locate = move |x: &Vector| {
                let x3 = nalgebra::Vector3::new(x[0], x[1], x[2]);
                if ((x3.norm() - radius).abs() > 1e-9 * radius) || x3.dot(&e) <= 0.0 {
                    return None;
                }
                let de = x3.dot(&e);
                let s = [x3.dot(&u) / de, x3.dot(&w) / de];
                let lim = 1.0 + collar;
                (s[0].abs() <= lim && s[1].abs() <= lim).then(|| s.to_vec())
            };
            let iv = Interval::new(-1.0 - collar, 1.0 + collar);
            Chart::new(3, vec![iv, iv], map)
                .with_jacobian(jac)
                .with_locate(locate)
                .with_edges(vec![(EdgeKind::Collar(collar), EdgeKind::Collar(collar)); 2])
                .with_length_scale(radius)
                .named(format!("face{k}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog() -> Vec<DomainModel> {
        vec![
            DomainModel::disc(1.3).unwrap(),
            DomainModel::annulus(1.0, 2.0).unwrap(),
            DomainModel::square(1.0).unwrap(),
            DomainModel::cone_corner(1.0, 0.5).unwrap(),
            DomainModel::cone_corner(2.0, 0.5).unwrap(),
            DomainModel::cusp(0.5, 0.5).unwrap(),
            DomainModel::ball(1.0, 3).unwrap(),
        ]
    }

    #[test]
    fn catalog_domains_validate() {
        for d in catalog() {
            let per_dim = if d.ambient_dim() == 3 { 9 } else { 41 };
            d.validate(per_dim).unwrap_or_else(|e| panic!("{}: {e}", d.name()));
        }
    }

    #[test]
    fn circle_chart_normals_point_to_the_centre() {
        let d = DomainModel::disc(2.0).unwrap();
        for i in 0..4 {
            let iv = d.chart(i).domain_box()[0];
            for k in 0..=10 {
                let s = iv.lo + iv.len() * k as f64 / 10.0;
                let n = d.chart_normal(i, &[s]).unwrap();
                assert!((n[0] + s.cos()).abs() < 1e-14 && (n[1] + s.sin()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn annulus_inner_normals_point_outward_from_origin() {
        let d = DomainModel::annulus(1.0, 2.0).unwrap();
        let c = d.chart(5);
        let s = 1.0;
        let x = c.eval(&[s]);
        let n = d.chart_normal(5, &[s]).unwrap();
        assert!((n.dot(&x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_orientation_is_rejected() {
        let d = DomainModel::disc(1.0).unwrap();
        let flipped = Chart::new(2, vec![Interval::new(0.0, 1.0)], |s| Vector::from_vec(vec![s[0].cos(), -s[0].sin()]));
        let bad = DomainModel::new(
            "bad",
            2,
            vec![flipped],
            move |x| d.inside(x),
            VolumeRule::Polar { inner: 0.0, outer: 1.0 },
            2.0,
        );
        assert!(matches!(bad.chart_normal(0, &[0.5]), Err(GeometryError::OrientationMismatch { .. })));
    }

    #[test]
    fn pou_weights_split_evenly_at_corners() {
        let d = DomainModel::square(1.0).unwrap();
        let w = d.pou_weights_at(&Vector::from_row_slice(&[1.0, 0.0]));
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|(_, x)| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn closed_form_measures() {
        let a = ClosedForm::Annulus { inner: 1.0, outer: 2.0 };
        assert!((a.volume(2).unwrap() - 3.0 * PI).abs() < 1e-14);
        assert!((a.surface_area(2).unwrap() - 6.0 * PI).abs() < 1e-14);
        assert_eq!(a.reach(), 0.5);
        assert_eq!(ClosedForm::Annulus { inner: 1.0, outer: 4.0 }.reach(), 1.0);
        let b = ClosedForm::Ball { radius: 2.0 };
        assert!((b.surface_area(3).unwrap() - 16.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(DomainModel::annulus(2.0, 1.0).is_err());
        assert!(DomainModel::ball(1.0, 4).is_err());
        assert!(DomainModel::cusp(1.5, 0.5).is_err());
        assert!(DomainModel::cone_corner(0.0, 0.5).is_err());
    }
}
