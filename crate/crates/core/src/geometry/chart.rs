//! Parameterized boundary patches.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::GeometryError;

pub type Vector = DVector<f64>;

pub type MapFn = Arc<dyn Fn(&[f64]) -> Vector + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type LocateFn = Arc<dyn Fn(&Vector) -> Option<Vec<f64>> + Send + Sync>;

/// Smallest singular value below which a chart is treated as degenerate.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "empty parameter interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo && s <= self.hi
    }

    pub fn clamp(&self, s: f64) -> f64 {
        s.clamp(self.lo, self.hi)
    }
}

/// How the partition-of-unity bump behaves at one end of a parameter interval.
///
/// `Collar(w)` ramps the weight from 0 to 1 over a width `w` (overlap with a
/// neighbouring chart); `Hard` keeps full weight up to the end, which is used
/// where the boundary itself has a corner or junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeKind {
    Collar(f64),
    Hard,
}

/// A parameterized patch `g: U -> R^N` of the boundary.
#[derive(Clone)]
pub struct Chart {
    name: String,
    ambient_dim: usize,
    domain_box: Vec<Interval>,
    edges: Vec<(EdgeKind, EdgeKind)>,
    map: MapFn,
    jacobian: Option<JacobianFn>,
    locate: Option<LocateFn>,
    length_scale: f64,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("name", &self.name)
            .field("ambient_dim", &self.ambient_dim)
            .field("domain_box", &self.domain_box)
            .field("edges", &self.edges)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl Chart {
    pub fn new(
        ambient_dim: usize,
        domain_box: Vec<Interval>,
        map: impl Fn(&[f64]) -> Vector + Send + Sync + 'static,
    ) -> Self {
        assert!(
            !domain_box.is_empty() && domain_box.len() < ambient_dim,
            "chart parameter dimension must be below the ambient dimension"
        );
        let edges = vec![(EdgeKind::Hard, EdgeKind::Hard); domain_box.len()];
        Self {
            name: String::from("chart"),
            ambient_dim,
            domain_box,
            edges,
            map: Arc::new(map),
            jacobian: None,
            locate: None,
            length_scale: 1.0,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_locate(mut self, locate: impl Fn(&Vector) -> Option<Vec<f64>> + Send + Sync + 'static) -> Self {
        self.locate = Some(Arc::new(locate));
        self
    }

    pub fn with_edges(mut self, edges: Vec<(EdgeKind, EdgeKind)>) -> Self {
        assert_eq!(edges.len(), self.domain_box.len());
        self.edges = edges;
        self
    }

    pub fn with_length_scale(mut self, scale: f64) -> Self {
        self.length_scale = scale;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn param_dim(&self) -> usize {
        self.domain_box.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn domain_box(&self) -> &[Interval] {
        &self.domain_box
    }

    pub fn edges(&self) -> &[(EdgeKind, EdgeKind)] {
        &self.edges
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn in_box(&self, s: &[f64]) -> bool {
        s.iter().zip(&self.domain_box).all(|(x, iv)| iv.contains(*x))
    }

    pub fn eval(&self, s: &[f64]) -> Vector {
        (self.map)(s)
    }

    /// Parameter of a boundary point lying in this chart's image, if any.
    pub fn locate(&self, x: &Vector) -> Option<Vec<f64>> {
        self.locate.as_ref().and_then(|f| f(x))
    }

    pub fn has_locate(&self) -> bool {
        self.locate.is_some()
    }

    /// `Dg(s)` as an `N x (N-1)` matrix; central differences when no analytic
    /// derivative was supplied.
    pub fn tangents(&self, s: &[f64]) -> DMatrix<f64> {
        if let Some(jac) = &self.jacobian {
            return jac(s);
        }
        let step = 1e-6 * self.length_scale;
        let mut out = DMatrix::zeros(self.ambient_dim, self.param_dim());
        let mut sp = s.to_vec();
        for k in 0..self.param_dim() {
            sp[k] = s[k] + step;
            let fp = self.eval(&sp);
            sp[k] = s[k] - step;
            let fm = self.eval(&sp);
            sp[k] = s[k];
            out.set_column(k, &((fp - fm) / (2.0 * step)));
        }
        out
    }

    /// Second derivatives `g_{s_j s_k}` by central differences of the tangents.
    pub fn second_derivatives(&self, s: &[f64]) -> Vec<DMatrix<f64>> {
        let step = 1e-5 * self.length_scale;
        let mut sp = s.to_vec();
        (0..self.param_dim())
            .map(|k| {
                sp[k] = s[k] + step;
                let tp = self.tangents(&sp);
                sp[k] = s[k] - step;
                let tm = self.tangents(&sp);
                sp[k] = s[k];
                (tp - tm) / (2.0 * step)
            })
            .collect()
    }

    pub fn min_singular_value(&self, s: &[f64]) -> f64 {
        let t = self.tangents(s);
        t.singular_values().min()
    }

    /// Exterior product of the tangent columns: the vector `w` with
    /// `w_i = det col(g_{s_1}, .., g_{s_{N-1}}, e_i)`.
    pub fn wedge(&self, s: &[f64]) -> Vector {
        wedge_of(&self.tangents(s))
    }

    /// Unit normal from the exterior product; no orientation check.
    pub fn unit_normal(&self, s: &[f64]) -> Result<Vector, GeometryError> {
        let sigma = self.min_singular_value(s);
        if sigma < RANK_TOLERANCE || !sigma.is_finite() {
            return Err(GeometryError::DegenerateChart { chart: self.name.clone(), sigma });
        }
        let w = self.wedge(s);
        let norm = w.norm();
        Ok(w / norm)
    }

    /// Smooth bump in parameter space used for the partition of unity.
    pub fn bump(&self, s: &[f64]) -> f64 {
        let mut b = 1.0;
        for ((x, iv), (lo_edge, hi_edge)) in s.iter().zip(&self.domain_box).zip(&self.edges) {
            if !iv.contains(*x) {
                return 0.0;
            }
            if let EdgeKind::Collar(w) = lo_edge {
                b *= smooth_step((x - iv.lo) / w);
            }
            if let EdgeKind::Collar(w) = hi_edge {
                b *= smooth_step((iv.hi - x) / w);
            }
        }
        b
    }

    /// Checks the rank condition on a regular grid of `per_dim` points per axis.
    pub fn check_rank(&self, per_dim: usize) -> Result<(), GeometryError> {
        for s in self.grid(per_dim) {
            let sigma = self.min_singular_value(&s);
            if !(sigma > RANK_TOLERANCE) {
                return Err(GeometryError::DegenerateChart { chart: self.name.clone(), sigma });
            }
        }
        Ok(())
    }

    /// Pairwise injectivity check on a sample grid.
    pub fn check_injective(&self, per_dim: usize) -> Result<(), GeometryError> {
        let pts: Vec<(Vec<f64>, Vector)> = self
            .grid(per_dim)
            .into_iter()
            .map(|s| {
                let x = self.eval(&s);
                (s, x)
            })
            .collect();
        let h_grid =
            self.domain_box.iter().map(|iv| iv.len() / (per_dim.max(2) - 1) as f64).fold(f64::INFINITY, f64::min);
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let ds = pts[i].0.iter().zip(&pts[j].0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if ds > 0.5 * h_grid && (&pts[i].1 - &pts[j].1).norm() <= 1e-12 * self.length_scale {
                    return Err(GeometryError::NotInjective { chart: self.name.clone() });
                }
            }
        }
        Ok(())
    }

    /// Regular sample grid (endpoints included) over the parameter box.
    pub fn grid(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let per_dim = per_dim.max(2);
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for iv in &self.domain_box {
            let mut next = Vec::with_capacity(out.len() * per_dim);
            for prefix in &out {
                for k in 0..per_dim {
                    let mut p = prefix.clone();
                    p.push(iv.lo + iv.len() * k as f64 / (per_dim - 1) as f64);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

/// Exterior product of the columns of an `N x (N-1)` matrix.
pub fn wedge_of(t: &DMatrix<f64>) -> Vector {
    let n = t.nrows();
    match n {
        2 => Vector::from_vec(vec![-t[(1, 0)], t[(0, 0)]]),
        3 => {
            let a = t.column(0);
            let b = t.column(1);
            Vector::from_vec(vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])
        }
        _ => {
            let mut w = Vector::zeros(n);
            for i in 0..n {
                let mut m = DMatrix::zeros(n, n);
                for k in 0..n - 1 {
                    m.set_column(k, &t.column(k));
                }
                m[(i, n - 1)] = 1.0;
                w[i] = m.determinant();
            }
            w
        }
    }
}

/// C-infinity step: 0 for `tau <= 0`, 1 for `tau >= 1`, built from `exp(-1/tau)`.
pub fn smooth_step(tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 1.0;
    }
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let a = f(tau);
    a / (a + f(1.0 - tau))
}
