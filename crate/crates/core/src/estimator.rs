//! Discrete estimate of the trace constant on a triangulated planar domain.
//!
//! Over piecewise-linear `u >= 0` normalised by `int_{boundary} u = 1` we
//! minimise
//!
//! ```text
//! Q(u) = sum_T |grad u|_T area(T) + c2 int u
//! ```
//!
//! Restricting to `u >= 0` loses nothing since `|u|` has the same trace and
//! volume and no larger variation. With the sign fixed, trace and volume are
//! linear in the vertex values.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::DomainModel;
use crate::inequality::{implied_c1, FamilySweep, CSV_HEADER};
pub use crate::mesh::{build_mesh, Mesh, MeshError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EstimatorError {
    #[error("descent produced a non-finite objective at iteration {iteration}")]
    NoConvergence { iteration: usize },
    #[error("linear program infeasible: {0}")]
    LpInfeasible(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("empty family")]
    EmptyFamily,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for EstimatorError {
    fn from(e: std::io::Error) -> Self {
        EstimatorError::Io(e.to_string())
    }
}

/// Smoothing continuation `eps_k = eps0 10^{-k/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub eps0: f64,
    pub stages: usize,
    pub iterations: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { eps0: 1e-2, stages: 9, iterations: 500 }
    }
}

impl Schedule {
    pub fn epsilon(&self, stage: usize) -> f64 {
        self.eps0 * 10f64.powf(-(stage as f64) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Solver {
    /// Projected Barzilai-Borwein descent on `sqrt(|grad u|^2 + eps^2)`,
    /// scaled by the Hessian diagonal. Graded meshes and flat regions make
    /// the unscaled problem too stiff for fixed-metric steps.
    SmoothedDescent(Schedule),
    /// `|g|` replaced by `max_k d_k . g` over `k` equally spaced directions.
    PolyhedralLp { k: usize },
}

impl Solver {
    pub fn descent() -> Self {
        Solver::SmoothedDescent(Schedule::default())
    }

    pub fn polyhedral() -> Self {
        Solver::PolyhedralLp { k: DEFAULT_DIRECTIONS }
    }
}

pub const DEFAULT_DIRECTIONS: usize = 32;

/// Nonmonotone window of the line search.
const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
/// Relative change of the best objective over the last stage counted as
/// converged.
const STALL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct QuotientProblem {
    pub mesh: Arc<Mesh>,
    pub c2: f64,
    pub solver: Solver,
}

impl QuotientProblem {
    pub fn new(mesh: Arc<Mesh>, c2: f64, solver: Solver) -> Result<Self, EstimatorError> {
        if !(c2.is_finite() && c2 >= 0.0) {
            return Err(EstimatorError::InvalidProblem(format!("c2 = {c2}")));
        }
        match solver {
            Solver::PolyhedralLp { k } if k < 8 => {
                return Err(EstimatorError::InvalidProblem(format!("K = {k} directions, need at least 8")))
            }
            Solver::SmoothedDescent(s) if !(s.eps0 > 0.0 && s.stages > 0) => {
                return Err(EstimatorError::InvalidProblem(format!("schedule {s:?}")))
            }
            _ => {}
        }
        if mesh.boundary_edges.is_empty() {
            return Err(EstimatorError::InvalidProblem("mesh has no boundary".into()));
        }
        Ok(Self { mesh, c2, solver })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub c1_estimate: f64,
    pub minimizer: Vec<f64>,
    pub iterations: usize,
    pub h: f64,
    pub converged: bool,
    pub solver: Solver,
    /// `c2 < |boundary| / |Omega|` on the mesh, where `u = 1` already gives
    /// a quotient below one.
    pub c2_below_lower: bool,
}

/// Per-triangle data of the quotient.
struct Operator<'a> {
    mesh: &'a Mesh,
    coeffs: Vec<[[f64; 2]; 3]>,
    areas: Vec<f64>,
    mass: Vec<f64>,
    weights: Vec<f64>,
    c2: f64,
}

impl<'a> Operator<'a> {
    fn new(mesh: &'a Mesh, c2: f64) -> Self {
        let n = mesh.triangles.len();
        Self {
            mesh,
            coeffs: (0..n).map(|t| mesh.gradient_coefficients(t)).collect(),
            areas: (0..n).map(|t| mesh.area(t)).collect(),
            mass: mesh.mass_weights(),
            weights: mesh.boundary_weights(),
            c2,
        }
    }

    fn grad(&self, t: usize, u: &[f64]) -> [f64; 2] {
        let tri = self.mesh.triangles[t];
        let c = &self.coeffs[t];
        let mut g = [0.0; 2];
        for m in 0..3 {
            g[0] += c[m][0] * u[tri[m]];
            g[1] += c[m][1] * u[tri[m]];
        }
        g
    }

    /// Objective with `|g|` smoothed to `sqrt(|g|^2 + eps^2)`; `eps = 0` is
    /// the true objective.
    fn value(&self, u: &[f64], eps: f64) -> f64 {
        let tv: f64 = (0..self.areas.len())
            .map(|t| {
                let g = self.grad(t, u);
                self.areas[t] * (g[0] * g[0] + g[1] * g[1] + eps * eps).sqrt()
            })
            .sum();
        tv + self.c2 * dot(&self.mass, u)
    }

    fn value_and_gradient(&self, u: &[f64], eps: f64, out: &mut [f64]) -> f64 {
        for (o, m) in out.iter_mut().zip(&self.mass) {
            *o = self.c2 * m;
        }
        let mut tv = 0.0;
        for t in 0..self.areas.len() {
            let g = self.grad(t, u);
            let s = (g[0] * g[0] + g[1] * g[1] + eps * eps).sqrt();
            tv += self.areas[t] * s;
            if s > 0.0 {
                let f = self.areas[t] / s;
                let tri = self.mesh.triangles[t];
                let c = &self.coeffs[t];
                for m in 0..3 {
                    out[tri[m]] += f * (g[0] * c[m][0] + g[1] * c[m][1]);
                }
            }
        }
        tv + self.c2 * dot(&self.mass, u)
    }

    /// Diagonal of the smoothed objective's Hessian, dropping the rank-one
    /// part: `sum_T area(T) |c_i|^2 / sqrt(|g_T|^2 + eps^2)`.
    fn hessian_diagonal(&self, u: &[f64], eps: f64, out: &mut [f64]) {
        out.fill(0.0);
        for t in 0..self.areas.len() {
            let g = self.grad(t, u);
            let s = (g[0] * g[0] + g[1] * g[1] + eps * eps).sqrt();
            let tri = self.mesh.triangles[t];
            for m in 0..3 {
                let c = self.coeffs[t][m];
                out[tri[m]] += self.areas[t] * (c[0] * c[0] + c[1] * c[1]) / s;
            }
        }
    }

    /// Projection onto `{u >= 0, w . u = 1}` in the diagonal metric
    /// `sum_i m_i (u_i - v_i)^2`: `u_i = max(v_i - lambda w_i / m_i, 0)` with
    /// `lambda` found exactly from the sorted breakpoints `v_i m_i / w_i`.
    fn project(&self, v: &[f64], m: &[f64], out: &mut [f64]) {
        let w = &self.weights;
        let bp = |i: usize| v[i] * m[i] / w[i];
        let mut idx: Vec<usize> = (0..v.len()).filter(|&i| w[i] > 0.0).collect();
        idx.sort_by(|&i, &j| bp(j).total_cmp(&bp(i)));
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut lambda = f64::NAN;
        for (pos, &i) in idx.iter().enumerate() {
            s1 += w[i] * v[i];
            s2 += w[i] * w[i] / m[i];
            let cand = (s1 - 1.0) / s2;
            let next = idx.get(pos + 1).map(|&j| bp(j)).unwrap_or(f64::NEG_INFINITY);
            if cand >= next {
                lambda = cand;
                break;
            }
        }
        for i in 0..v.len() {
            out[i] = (v[i] - lambda * w[i] / m[i]).max(0.0);
        }
    }

    /// The better of the normalised constant and the best normalised
    /// boundary hat. The problem is convex, so this only shortens the path;
    /// minimisers concentrating at a corner are far from the constant.
    fn starting_point(&self) -> Result<Vec<f64>, EstimatorError> {
        let n = self.mesh.num_vertices();
        let mut tv = vec![0.0; n];
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            for m in 0..3 {
                let c = self.coeffs[t][m];
                tv[tri[m]] += self.areas[t] * c[0].hypot(c[1]);
            }
        }
        let hat = (0..n)
            .filter(|&i| self.weights[i] > 0.0)
            .map(|i| (i, (tv[i] + self.c2 * self.mass[i]) / self.weights[i]))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let mut u = vec![1.0; n];
        self.normalize(&mut u)?;
        if let Some((i, q)) = hat {
            if q < self.value(&u, 0.0) {
                u.fill(0.0);
                u[i] = 1.0 / self.weights[i];
            }
        }
        Ok(u)
    }

    fn normalize(&self, u: &mut [f64]) -> Result<(), EstimatorError> {
        let b = dot(&self.weights, u);
        if !(b > 0.0 && b.is_finite()) {
            return Err(EstimatorError::InvalidProblem("function has zero trace".into()));
        }
        for x in u.iter_mut() {
            *x /= b;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quotient of a nonnegative vertex function after normalisation.
pub fn feasible_objective(mesh: &Mesh, c2: f64, values: &[f64]) -> Result<f64, EstimatorError> {
    if values.len() != mesh.num_vertices() || values.iter().any(|&v| !(v >= 0.0)) {
        return Err(EstimatorError::InvalidProblem("need one nonnegative value per vertex".into()));
    }
    let op = Operator::new(mesh, c2);
    let mut u = values.to_vec();
    op.normalize(&mut u)?;
    Ok(op.value(&u, 0.0))
}

pub fn minimize_quotient(problem: &QuotientProblem) -> Result<EstimateResult, EstimatorError> {
    let mesh = &*problem.mesh;
    let op = Operator::new(mesh, problem.c2);
    let lower = mesh.boundary_length() / mesh.total_area();
    let (c1_estimate, minimizer, iterations, converged) = match problem.solver {
        Solver::SmoothedDescent(schedule) => descent(&op, schedule)?,
        Solver::PolyhedralLp { k } => polyhedral(&op, k)?,
    };
    Ok(EstimateResult {
        c1_estimate,
        minimizer,
        iterations,
        h: mesh.h,
        converged,
        solver: problem.solver,
        c2_below_lower: problem.c2 < lower,
    })
}

fn descent(op: &Operator, schedule: Schedule) -> Result<(f64, Vec<f64>, usize, bool), EstimatorError> {
    let n = op.mesh.num_vertices();
    let mut u = op.starting_point()?;
    let mut best = op.value(&u, 0.0);
    let mut best_u = u.clone();
    let mut total = 0;
    let mut last_stage_start = best;

    let mut g = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut u_new = vec![0.0; n];
    let mut metric = vec![0.0; n];

    for stage in 0..schedule.stages {
        let eps = schedule.epsilon(stage);
        last_stage_start = best;
        let mut f = op.value_and_gradient(&u, eps, &mut g);
        let mut history = vec![f];
        op.hessian_diagonal(&u, eps, &mut metric);
        let mut alpha = {
            for i in 0..n {
                trial[i] = u[i] - g[i] / metric[i];
            }
            op.project(&trial, &metric, &mut dir);
            let step = dir.iter().zip(&u).map(|(p, x)| (p - x).abs()).fold(0.0, f64::max);
            if step > 0.0 {
                1.0 / step
            } else {
                1.0
            }
        };
        for _ in 0..schedule.iterations {
            op.hessian_diagonal(&u, eps, &mut metric);
            for i in 0..n {
                trial[i] = u[i] - alpha * g[i] / metric[i];
            }
            op.project(&trial, &metric, &mut dir);
            for i in 0..n {
                dir[i] -= u[i];
            }
            if dir.iter().fold(0.0, |m: f64, d| m.max(d.abs())) < 1e-14 {
                break;
            }
            let gd = dot(&g, &dir);
            let fmax = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut lambda = 1.0;
            let f_new = loop {
                for i in 0..n {
                    u_new[i] = u[i] + lambda * dir[i];
                }
                let f_new = op.value_and_gradient(&u_new, eps, &mut g_new);
                if !f_new.is_finite() {
                    return Err(EstimatorError::NoConvergence { iteration: total });
                }
                if f_new <= fmax + ARMIJO * lambda * gd || lambda < 1e-12 {
                    break f_new;
                }
                lambda *= 0.5;
            };
            total += 1;
            let (mut ss, mut sy) = (0.0, 0.0);
            for i in 0..n {
                let s = u_new[i] - u[i];
                ss += metric[i] * s * s;
                sy += s * (g_new[i] - g[i]);
            }
            alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e12 };
            std::mem::swap(&mut u, &mut u_new);
            std::mem::swap(&mut g, &mut g_new);
            f = f_new;
            history.push(f);
            if history.len() > MEMORY {
                history.remove(0);
            }
            let true_value = op.value(&u, 0.0);
            if true_value < best {
                best = true_value;
                best_u.copy_from_slice(&u);
            }
            if lambda < 1e-12 {
                break;
            }
        }
    }
    let converged = (last_stage_start - best).abs() <= STALL_TOL * best.abs();
    Ok((best, best_u, total, converged))
}

fn polyhedral(op: &Operator, k: usize) -> Result<(f64, Vec<f64>, usize, bool), EstimatorError> {
    let mesh = op.mesh;
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let u: Vec<_> = (0..mesh.num_vertices()).map(|i| lp.add_var(op.c2 * op.mass[i], (0.0, f64::INFINITY))).collect();
    let dirs: Vec<[f64; 2]> = (0..k)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / k as f64;
            [a.cos(), a.sin()]
        })
        .collect();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let s = lp.add_var(op.areas[t], (0.0, f64::INFINITY));
        let c = &op.coeffs[t];
        for d in &dirs {
            let mut row = vec![(s, 1.0)];
            for m in 0..3 {
                row.push((u[tri[m]], -(d[0] * c[m][0] + d[1] * c[m][1])));
            }
            lp.add_constraint(row, ComparisonOp::Ge, 0.0);
        }
    }
    let trace: Vec<_> = u.iter().zip(&op.weights).filter(|(_, &w)| w > 0.0).map(|(&v, &w)| (v, w)).collect();
    lp.add_constraint(trace, ComparisonOp::Eq, 1.0);

    let outcome = lp.solve().map_err(|e| EstimatorError::LpInfeasible(e.to_string()))?;
    let iterations = outcome.stats().lp_iterations as usize;
    let optimal = outcome.is_optimal();
    let sol = outcome.into_solution().map_err(|_| EstimatorError::LpInfeasible("solve interrupted".into()))?;
    let values: Vec<f64> = u.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
    Ok((sol.objective(), values, iterations, optimal))
}

/// `max_r (trace - c2 volume) / tv` over a family of closed-form reports: a
/// lower bound for every admissible `C1` at this `c2`.
pub fn certificate_family_bound(family: &FamilySweep, c2: f64) -> Result<f64, EstimatorError> {
    family.reports.iter().map(|r| implied_c1(r, c2)).reduce(f64::max).ok_or(EstimatorError::EmptyFamily)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineRow {
    pub h: f64,
    pub c1_estimate: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineStudy {
    pub c2: f64,
    pub rows: Vec<RefineRow>,
    /// Whether `|c1_estimate - 1|` never grows as `h` shrinks.
    pub monotone_toward_one: bool,
}

impl RefineStudy {
    /// `# tracelab-csv v1` then `h,c1_estimate,iterations,wall_time`; the
    /// last column is empty when timing was off.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), EstimatorError> {
        writeln!(w, "{CSV_HEADER}")?;
        writeln!(w, "h,c1_estimate,iterations,wall_time")?;
        for r in &self.rows {
            let t = r.wall_time.map(|t| t.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", r.h, r.c1_estimate, r.iterations, t)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Builds a mesh per `h` and minimises on each. Rows run in parallel; with
/// `timing` off the table depends only on the inputs.
pub fn refine_study(
    domain: &DomainModel,
    c2: f64,
    hs: &[f64],
    solver: Solver,
    timing: bool,
) -> Result<RefineStudy, EstimatorError> {
    use rayon::prelude::*;
    if hs.is_empty() || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(EstimatorError::InvalidProblem("h sequence must be decreasing".into()));
    }
    let rows = hs
        .par_iter()
        .map(|&h| {
            let start = Instant::now();
            let mesh = Arc::new(build_mesh(domain, h)?);
            let res = minimize_quotient(&QuotientProblem::new(mesh, c2, solver)?)?;
            Ok(RefineRow {
                h,
                c1_estimate: res.c1_estimate,
                iterations: res.iterations,
                converged: res.converged,
                wall_time: timing.then(|| start.elapsed().as_secs_f64()),
            })
        })
        .collect::<Result<Vec<_>, EstimatorError>>()?;
    let dist: Vec<f64> = rows.iter().map(|r| (r.c1_estimate - 1.0).abs()).collect();
    let monotone_toward_one = dist.windows(2).all(|w| w[1] <= w[0]);
    Ok(RefineStudy { c2, rows, monotone_toward_one })
}
