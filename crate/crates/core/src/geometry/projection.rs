//! Closest-point projection onto the boundary, signed distance and sampled
//! reach.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::chart::{Chart, EdgeKind, Vector};
use super::domain::{ClosedForm, DomainModel};
use super::GeometryError;

/// Starts per chart for the multi-start local solver.
const STARTS: usize = 16;
/// Two minimizers closer than this are the same boundary point.
const SAME_POINT: f64 = 1e-6;
/// Distances within this of the minimum count as minimizers.
const TIE: f64 = 1e-10;

/// Nearest boundary point of a query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vector,
    pub distance: f64,
    pub unique: bool,
    pub chart: usize,
    pub param: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Candidate {
    chart: usize,
    param: Vec<f64>,
    point: Vector,
    distance: f64,
}

impl DomainModel {
    /// Closest boundary point by multi-start local minimization of
    /// `|x - g(s)|` over every chart.
    pub fn project(&self, x: &Vector) -> Result<Projection, GeometryError> {
        let mut cands: Vec<Candidate> = Vec::new();
        for (i, chart) in self.charts().iter().enumerate() {
            let found = match chart.param_dim() {
                1 => local_minima_1d(chart, x),
                _ => local_minima_nd(chart, x),
            };
            cands.extend(found.into_iter().map(|(param, point)| Candidate {
                chart: i,
                distance: (&point - x).norm(),
                param,
                point,
            }));
        }
        cands.retain(|c| c.distance.is_finite());
        let best = cands
            .iter()
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
            .cloned()
            .ok_or(GeometryError::NoConvergence)?;
        let unique = !cands
            .iter()
            .filter(|c| c.distance <= best.distance + TIE)
            .any(|c| (&c.point - &best.point).norm() > SAME_POINT);
        Ok(Projection { point: best.point, distance: best.distance, unique, chart: best.chart, param: best.param })
    }

    /// `+d(x)` inside, `-d(x)` outside, with `d` from [`DomainModel::project`].
    pub fn signed_distance(&self, x: &Vector) -> Result<f64, GeometryError> {
        let p = self.project(x)?;
        Ok(if self.inside(x) { p.distance } else { -p.distance })
    }

    /// Nearest point using closed forms for balls and annuli, falling back to
    /// [`DomainModel::project`]. The returned chart/param refer to a chart
    /// containing the point.
    pub fn fast_nearest(&self, x: &Vector) -> Result<Projection, GeometryError> {
        let radial = match self.closed_form() {
            Some(ClosedForm::Ball { radius }) => Some((None, radius)),
            Some(ClosedForm::Annulus { inner, outer }) => Some((Some(inner), outer)),
            _ => None,
        };
        let Some((inner, outer)) = radial else {
            return self.project(x);
        };
        let r = x.norm();
        if r == 0.0 {
            return self.project(x);
        }
        let dir = x / r;
        let (radius, unique) = match inner {
            Some(a) if (r - a).abs() < (outer - r).abs() => (a, true),
            Some(a) => (outer, (r - a).abs() != (outer - r).abs()),
            None => (outer, true),
        };
        let point = &dir * radius;
        let (chart, param) = self
            .charts()
            .iter()
            .enumerate()
            .find_map(|(i, c)| c.locate(&point).map(|s| (i, s)))
            .ok_or(GeometryError::NoConvergence)?;
        Ok(Projection { point, distance: (r - radius).abs(), unique, chart, param })
    }

    /// Signed distance through [`DomainModel::fast_nearest`].
    pub fn fast_signed_distance(&self, x: &Vector) -> Result<f64, GeometryError> {
        let p = self.fast_nearest(x)?;
        Ok(if self.inside(x) { p.distance } else { -p.distance })
    }

    /// `1 / max |n(x) - n(y)| / |x - y|` over nested low-discrepancy boundary
    /// samples. Nested samples make the estimate nonincreasing in `n_samples`.
    pub fn reach_estimate(&self, n_samples: usize) -> f64 {
        let all: Vec<usize> = (0..self.charts().len()).collect();
        self.reach_estimate_on_charts(&all, n_samples)
    }

    /// As [`DomainModel::reach_estimate`] with samples restricted to the
    /// listed charts.
    pub fn reach_estimate_on_charts(&self, charts: &[usize], n_samples: usize) -> f64 {
        let samples = self.boundary_samples(charts, n_samples);
        let ratio = (0..samples.len())
            .into_par_iter()
            .map(|i| {
                let (xi, ni) = &samples[i];
                samples[i + 1..]
                    .iter()
                    .filter_map(|(xj, nj)| {
                        let d = (xi - xj).norm();
                        (d > 1e-9).then(|| (ni - nj).norm() / d)
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        if ratio == 0.0 {
            f64::INFINITY
        } else {
            1.0 / ratio
        }
    }

    /// Boundary points with inward normals. Planar domains walk their loops
    /// (van der Corput in the loop parameter); others sample the chart cores
    /// with a Halton sequence. Both sequences are nested in `n`.
    fn boundary_samples(&self, charts: &[usize], n: usize) -> Vec<(Vector, Vector)> {
        let mut out = Vec::with_capacity(n);
        if !self.loops().is_empty() {
            let pieces: Vec<_> = self.loops().iter().flatten().filter(|p| charts.contains(&p.chart)).copied().collect();
            let total: f64 = pieces.iter().map(|p| (p.to - p.from).abs()).sum();
            for k in 0..n {
                let mut u = radical_inverse(k as u64, 2) * total;
                for p in &pieces {
                    let len = (p.to - p.from).abs();
                    if u < len {
                        let s = p.from + (p.to - p.from) * (u / len);
                        if let Ok(nrm) = self.charts()[p.chart].unit_normal(&[s]) {
                            out.push((self.charts()[p.chart].eval(&[s]), nrm));
                        }
                        break;
                    }
                    u -= len;
                }
            }
        } else {
            let m = charts.len().max(1);
            for k in 0..n {
                let chart = &self.charts()[charts[k % m]];
                let j = (k / m) as u64;
                let s: Vec<f64> = chart
                    .domain_box()
                    .iter()
                    .zip(chart.edges())
                    .enumerate()
                    .map(|(d, (iv, (lo_e, hi_e)))| {
                        let lo = iv.lo + collar_width(lo_e);
                        let hi = iv.hi - collar_width(hi_e);
                        lo + (hi - lo) * radical_inverse(j, [2, 3, 5][d.min(2)])
                    })
                    .collect();
                if let Ok(nrm) = chart.unit_normal(&s) {
                    out.push((chart.eval(&s), nrm));
                }
            }
        }
        out
    }
}

fn collar_width(e: &EdgeKind) -> f64 {
    match e {
        EdgeKind::Collar(w) => *w,
        EdgeKind::Hard => 0.0,
    }
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

fn half_dist2(chart: &Chart, x: &Vector, s: f64) -> f64 {
    0.5 * (chart.eval(&[s]) - x).norm_squared()
}

/// Local minima of `|g(s) - x|^2 / 2` on a 1D chart: damped Newton from 16
/// cell-centre starts, golden section when Newton stalls.
fn local_minima_1d(chart: &Chart, x: &Vector) -> Vec<(Vec<f64>, Vector)> {
    let iv = chart.domain_box()[0];
    let cell = iv.len() / STARTS as f64;
    let mut out: Vec<(Vec<f64>, Vector)> = Vec::new();
    for k in 0..STARTS {
        let s0 = iv.lo + (k as f64 + 0.5) * cell;
        let s = newton_1d(chart, x, s0).unwrap_or_else(|| {
            golden_section(|s| half_dist2(chart, x, s), (s0 - cell).max(iv.lo), (s0 + cell).min(iv.hi))
        });
        let p = chart.eval(&[s]);
        if !out.iter().any(|(q, _)| (q[0] - s).abs() <= 1e-12 * iv.len()) {
            out.push((vec![s], p));
        }
    }
    out
}

fn newton_1d(chart: &Chart, x: &Vector, s0: f64) -> Option<f64> {
    let iv = chart.domain_box()[0];
    let mut s = s0;
    let mut f = half_dist2(chart, x, s);
    for _ in 0..100 {
        let g = chart.eval(&[s]);
        let t = chart.tangents(&[s]);
        let gs = t.column(0).into_owned();
        let r = &g - x;
        let grad = gs.dot(&r);
        let gss = chart.second_derivatives(&[s])[0].column(0).into_owned();
        let hess = gss.dot(&r) + gs.norm_squared();
        let mut step = if hess > 0.0 { -grad / hess } else { -grad / gs.norm_squared().max(f64::MIN_POSITIVE) };
        if step == 0.0 || !step.is_finite() {
            return Some(s);
        }
        let mut accepted = false;
        for _ in 0..60 {
            let cand = iv.clamp(s + step);
            let fc = half_dist2(chart, x, cand);
            if fc <= f {
                let moved = (cand - s).abs();
                s = cand;
                f = fc;
                accepted = true;
                if moved <= 1e-15 * iv.len().max(s.abs()) {
                    return Some(s);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No decrease along the Newton direction: at a minimum to
            // round-off, or at a box edge.
            return Some(s);
        }
    }
    None
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Gauss–Newton with backtracking on a grid of starts (about 16 per chart).
fn local_minima_nd(chart: &Chart, x: &Vector) -> Vec<(Vec<f64>, Vector)> {
    let p = chart.param_dim();
    let per_dim = (STARTS as f64).powf(1.0 / p as f64).round().max(2.0) as usize;
    let boxes = chart.domain_box();
    let mut starts: Vec<Vec<f64>> = vec![Vec::new()];
    for iv in boxes {
        let cell = iv.len() / per_dim as f64;
        starts = starts
            .into_iter()
            .flat_map(|pre| {
                (0..per_dim).map(move |k| {
                    let mut v = pre.clone();
                    v.push(iv.lo + (k as f64 + 0.5) * cell);
                    v
                })
            })
            .collect();
    }
    let mut out: Vec<(Vec<f64>, Vector)> = Vec::new();
    for s0 in starts {
        let mut s = s0;
        let mut f = 0.5 * (chart.eval(&s) - x).norm_squared();
        for _ in 0..200 {
            let r = chart.eval(&s) - x;
            let j = chart.tangents(&s);
            let jtj: DMatrix<f64> = j.transpose() * &j;
            let grad = j.transpose() * &r;
            let Some(step) = jtj.lu().solve(&(-&grad)) else {
                break;
            };
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> =
                    s.iter().zip(step.iter()).zip(boxes).map(|((si, di), iv)| iv.clamp(si + alpha * di)).collect();
                let fc = 0.5 * (chart.eval(&cand) - x).norm_squared();
                if fc <= f {
                    let delta: f64 = cand.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    s = cand;
                    f = fc;
                    moved = delta > 1e-15;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let pt = chart.eval(&s);
        if !out.iter().any(|(q, _)| q.iter().zip(&s).all(|(a, b)| (a - b).abs() <= 1e-12)) {
            out.push((s, pt));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vector {
        Vector::from_vec(vec![x, y])
    }

    #[test]
    fn disc_projection() {
        let d = DomainModel::disc(2.0).unwrap();
        let p = d.project(&v(1.0, 0.0)).unwrap();
        assert!((p.point - v(2.0, 0.0)).norm() < 1e-12);
        assert!((p.distance - 1.0).abs() < 1e-12);
        assert!(p.unique);
        let sd = d.signed_distance(&v(0.0, 2.5)).unwrap();
        assert!((sd + 0.5).abs() < 1e-12);
    }

    #[test]
    fn centre_of_disc_is_not_unique() {
        let d = DomainModel::disc(1.0).unwrap();
        let p = d.project(&v(0.0, 0.0)).unwrap();
        assert!(!p.unique);
        assert!((p.distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn annulus_midline_is_ambiguous() {
        let d = DomainModel::annulus(1.0, 2.0).unwrap();
        let p = d.project(&v(1.5, 0.0)).unwrap();
        assert!(!p.unique);
        assert!((p.distance - 0.5).abs() < 1e-12);
        let q = d.project(&v(0.0, 1.3)).unwrap();
        assert!(q.unique);
        assert!((q.distance - 0.3).abs() < 1e-12);
    }

    #[test]
    fn cusp_axis_point_has_two_feet() {
        let d = DomainModel::cusp(0.5, 0.5).unwrap();
        let p = d.project(&v(0.0, 0.01)).unwrap();
        assert!(!p.unique, "{p:?}");
        assert!(p.distance < 0.01);
    }

    #[test]
    fn sphere_projection() {
        let d = DomainModel::ball(1.0, 3).unwrap();
        let x = Vector::from_vec(vec![0.2, -0.3, 0.1]);
        let p = d.project(&x).unwrap();
        assert!((p.distance - (1.0 - x.norm())).abs() < 1e-10);
        assert!(p.unique);
    }

    #[test]
    fn fast_path_agrees_with_solver() {
        let d = DomainModel::annulus(1.0, 2.0).unwrap();
        for x in [v(1.2, 0.3), v(-0.4, -1.7), v(0.1, 1.45)] {
            let a = d.project(&x).unwrap();
            let b = d.fast_nearest(&x).unwrap();
            assert!((a.distance - b.distance).abs() < 1e-12);
            assert!((a.point - b.point).norm() < 1e-9);
        }
    }

    #[test]
    fn radical_inverse_base_two() {
        let seq: Vec<f64> = (0..5).map(|k| radical_inverse(k, 2)).collect();
        assert_eq!(seq, vec![0.0, 0.5, 0.25, 0.75, 0.125]);
    }
}
