//! Sharp constants for balls and annuli, the slack of the inequality, and the
//! parameter families on which `C1 = 1` breaks down near corners and cusps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bv::{self, BVRep, BvError, Profile, RegionSpec, TraceReport};
use crate::geometry::{cusp_patch_halfwidth, unit_ball_volume, ClosedForm, DomainModel};

/// Height of the local patch (`eta`) used by the cone and cusp families.
pub const PATCH_HEIGHT: f64 = 0.5;

/// Relative tolerance for quadrature-backed inequality checks.
pub const INEQUALITY_TOL: f64 = 1e-6;

/// Points in the least-squares window of [`fit_exponent`] unless overridden.
pub const FIT_WINDOW: usize = 8;

/// First line of every CSV file written by this crate.
pub const CSV_HEADER: &str = "# tracelab-csv v1";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InequalityError {
    #[error("radii must satisfy 0 <= a < b with N >= 2, got a = {a}, b = {b}, N = {n}")]
    BadRadii { a: f64, b: f64, n: usize },
    #[error("t = {t} lies outside [{a}, {b}]")]
    OutOfInterval { t: f64, a: f64, b: f64 },
    #[error("constants must be finite and nonnegative, got c1 = {c1}, c2 = {c2}")]
    BadConstants { c1: f64, c2: f64 },
    #[error("wrong domain: {0}")]
    WrongDomain(String),
    #[error("parameter r = {r} leaves the local patch (limit {limit})")]
    PatchExceeded { r: f64, limit: f64 },
    #[error("shell width {delta} must be positive and below {limit} (half the reach)")]
    DeltaTooLarge { delta: f64, limit: f64 },
    #[error("layer thickness {eps} must be positive and below {limit} (half the reach)")]
    EpsilonTooLarge { eps: f64, limit: f64 },
    #[error("fit needs positive data: {0}")]
    NonPositiveData(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("parameter sequence must be positive and strictly decreasing")]
    BadSequence,
    #[error(transparent)]
    Bv(BvError),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<BvError> for InequalityError {
    fn from(e: BvError) -> Self {
        match e {
            BvError::PatchExceeded { r, limit } => InequalityError::PatchExceeded { r, limit },
            BvError::EpsilonTooLarge { eps, limit } => InequalityError::EpsilonTooLarge { eps, limit },
            BvError::WrongDomain(s) => InequalityError::WrongDomain(s),
            e => InequalityError::Bv(e),
        }
    }
}

impl From<std::io::Error> for InequalityError {
    fn from(e: std::io::Error) -> Self {
        InequalityError::Io(e.to_string())
    }
}

impl From<csv::Error> for InequalityError {
    fn from(e: csv::Error) -> Self {
        InequalityError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityConstants {
    pub c1: f64,
    pub c2: f64,
}

impl InequalityConstants {
    pub fn new(c1: f64, c2: f64) -> Result<Self, InequalityError> {
        if !(c1.is_finite() && c2.is_finite() && c1 >= 0.0 && c2 >= 0.0) {
            return Err(InequalityError::BadConstants { c1, c2 });
        }
        Ok(Self { c1, c2 })
    }
}

/// `c1 tv + c2 volume - trace`. Nonnegative when the inequality holds for
/// the reported function.
pub fn slack(report: &TraceReport, k: InequalityConstants) -> f64 {
    k.c1 * report.tv + k.c2 * report.volume - report.trace
}

/// The lower bound on `C1` forced by one function at a given `c2`.
pub fn implied_c1(report: &TraceReport, c2: f64) -> f64 {
    (report.trace - c2 * report.volume) / report.tv
}

fn check_radii(a: f64, b: f64, n: usize) -> Result<(), InequalityError> {
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && a < b && n >= 2) {
        return Err(InequalityError::BadRadii { a, b, n });
    }
    Ok(())
}

/// `N (a^{N-1} + b^{N-1}) / (b^N - a^N)`; `a = 0` is the ball.
pub fn radial_sharp_c2(a: f64, b: f64, n: usize) -> Result<f64, InequalityError> {
    check_radii(a, b, n)?;
    let m = n as i32;
    Ok(n as f64 * (a.powi(m - 1) + b.powi(m - 1)) / (b.powi(m) - a.powi(m)))
}

/// `phi(t) = t^{N-1} - (a^{N-1}(b^N - t^N) + b^{N-1}(t^N - a^N)) / (b^N - a^N)`.
///
/// Evaluated in the factored form
/// `(t - a)(b - t) sum_j t^j (ab)^{N-2-j} (b^{j+1} - a^{j+1}) / (b^N - a^N)`,
/// which is exact at the endpoints and free of cancellation inside.
pub fn radial_kernel_gap(a: f64, b: f64, n: usize, t: f64) -> Result<f64, InequalityError> {
    check_radii(a, b, n)?;
    if !(t >= a && t <= b) {
        return Err(InequalityError::OutOfInterval { t, a, b });
    }
    let m = n as i32;
    let ab = a * b;
    let sum: f64 = (0..m - 1).map(|j| t.powi(j) * ab.powi(m - 2 - j) * (b.powi(j + 1) - a.powi(j + 1))).sum();
    Ok((t - a) * (b - t) * sum / (b.powi(m) - a.powi(m)))
}

/// `t_c = (N-1)/N (b^N - a^N) / (b^{N-1} - a^{N-1})`, the interior maximum of
/// the kernel gap.
pub fn radial_critical_point(a: f64, b: f64, n: usize) -> Result<f64, InequalityError> {
    check_radii(a, b, n)?;
    if a <= 0.0 {
        return Err(InequalityError::BadRadii { a, b, n });
    }
    let m = n as i32;
    Ok((n - 1) as f64 / n as f64 * (b.powi(m) - a.powi(m)) / (b.powi(m - 1) - a.powi(m - 1)))
}

/// Central difference `(phi(t + h) - phi(t - h)) / 2h` of the kernel gap.
///
/// The gap is `t^{N-1} - B t^N - const`, and `((t+h)^m - (t-h)^m) / 2h` is
/// expanded binomially into its odd powers of `h` so the quotient carries no
/// cancellation error. `t` may sit anywhere in `[a, b]`.
pub fn radial_kernel_derivative_fd(a: f64, b: f64, n: usize, t: f64, h: f64) -> Result<f64, InequalityError> {
    check_radii(a, b, n)?;
    if !(t >= a && t <= b) {
        return Err(InequalityError::OutOfInterval { t, a, b });
    }
    let m = n as i32;
    let big_b = (b.powi(m - 1) - a.powi(m - 1)) / (b.powi(m) - a.powi(m));
    let odd_quotient = |p: i32| -> f64 {
        let mut binom = 1.0;
        let mut s = 0.0;
        for k in 1..=p {
            binom = binom * (p - k + 1) as f64 / k as f64;
            if k % 2 == 1 {
                s += binom * t.powi(p - k) * h.powi(k - 1);
            }
        }
        s
    };
    Ok(odd_quotient(m - 1) - big_b * odd_quotient(m))
}

/// Outcome of checking the radial inequality for one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialCheck {
    pub report: TraceReport,
    pub c2: f64,
    pub slack: f64,
    pub tol: f64,
    pub holds: bool,
}

/// Slack of `u` at `(1, radial_sharp_c2)` on a ball or annulus. `holds`
/// allows a deficit of `1e-6 trace`.
pub fn radial_inequality_check(u: &BVRep, domain: &DomainModel) -> Result<RadialCheck, InequalityError> {
    let n = domain.ambient_dim();
    let c2 = match domain.closed_form() {
        Some(ClosedForm::Ball { radius }) => radial_sharp_c2(0.0, radius, n)?,
        Some(ClosedForm::Annulus { inner, outer }) => radial_sharp_c2(inner, outer, n)?,
        _ => return Err(InequalityError::WrongDomain(format!("{} is neither a ball nor an annulus", domain.name()))),
    };
    let report = bv::report(u, domain)?;
    let s = slack(&report, InequalityConstants { c1: 1.0, c2 });
    let tol = INEQUALITY_TOL * report.trace;
    Ok(RadialCheck { holds: s >= -tol, report, c2, slack: s, tol })
}

/// Closed-form report of the cone slab `{L|x'| < x_N < L r}` in dimension `N`.
pub fn cone_family_report(slope: f64, n: usize, r: f64) -> Result<TraceReport, InequalityError> {
    if !(slope > 0.0 && slope.is_finite() && n >= 2 && r > 0.0) {
        return Err(InequalityError::BadParameter(format!("cone slab L = {slope}, N = {n}, r = {r}")));
    }
    if slope * r >= PATCH_HEIGHT {
        return Err(InequalityError::PatchExceeded { r, limit: PATCH_HEIGHT / slope });
    }
    let w = unit_ball_volume(n - 1);
    let base = w * r.powi(n as i32 - 1);
    Ok(TraceReport::closed_form((1.0 + slope * slope).sqrt() * base, base, w * slope / n as f64 * r.powi(n as i32)))
}

/// Cusp slab report with the leading term of `trace - tv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspReport {
    pub report: TraceReport,
    /// `trace - tv`, computed directly rather than by subtraction.
    pub excess: f64,
    /// `(N-1) w_{N-1} / (2(N-1+2a)) r^{N-1+2a}`.
    pub leading: f64,
}

fn cusp_leading(alpha: f64, n: usize, r: f64) -> f64 {
    let m = (n - 1) as f64;
    m * unit_ball_volume(n - 1) / (2.0 * (m + 2.0 * alpha)) * r.powf(m + 2.0 * alpha)
}

pub fn cusp_family_report(alpha: f64, n: usize, r: f64) -> Result<CuspReport, InequalityError> {
    if !(alpha > 0.0 && alpha < 1.0 && n >= 2 && r > 0.0) {
        return Err(InequalityError::BadParameter(format!("cusp slab alpha = {alpha}, N = {n}, r = {r}")));
    }
    let limit = cusp_patch_halfwidth(alpha, PATCH_HEIGHT);
    if r >= limit {
        return Err(InequalityError::PatchExceeded { r, limit });
    }
    let w = unit_ball_volume(n - 1);
    let tv = w * r.powi(n as i32 - 1);
    let excess = bv::cusp_trace_excess(alpha, n, r)?;
    let volume = w / (n as f64 + alpha) * r.powf(n as f64 + alpha);
    let mut report = TraceReport::closed_form(tv + excess.value, tv, volume);
    report.methods.trace = bv::Method::Quadrature;
    report.errors.trace = excess.error;
    Ok(CuspReport { report, excess: excess.value, leading: cusp_leading(alpha, n, r) })
}

/// The rescaled characteristic functions `v = A chi_{E_r}` with
/// `A = r^{-(N-1+2a)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JMinus {
    pub r: f64,
    pub amplitude: f64,
    /// `int |Dv| - int_{boundary} |v|`.
    pub j_minus: f64,
    /// `int |Dv| + int_{boundary} |v|`.
    pub j_plus: f64,
    pub l1_norm: f64,
}

pub fn jminus_sequence(alpha: f64, n: usize, r: f64) -> Result<JMinus, InequalityError> {
    let c = cusp_family_report(alpha, n, r)?;
    let amplitude = r.powf(-((n - 1) as f64 + 2.0 * alpha));
    Ok(JMinus {
        r,
        amplitude,
        j_minus: -amplitude * c.excess,
        j_plus: amplitude * (c.report.tv + c.report.trace),
        l1_norm: amplitude * c.report.volume,
    })
}

/// `r0 ratio^k` for `k < count`.
pub fn geometric_sequence(r0: f64, ratio: f64, count: usize) -> Result<Vec<f64>, InequalityError> {
    if !(r0 > 0.0 && r0.is_finite() && ratio > 0.0 && ratio < 1.0 && count > 0) {
        return Err(InequalityError::BadParameter(format!(
            "geometric sequence needs r0 > 0, 0 < ratio < 1, count > 0 (got {r0}, {ratio}, {count})"
        )));
    }
    Ok((0..count).map(|k| r0 * ratio.powi(k as i32)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    ConeSlab,
    CuspSlab,
    Shell,
    Layer,
    JMinus,
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub trace: f64,
    pub tv: f64,
    pub volume: f64,
    pub slack: f64,
    pub implied_c1: f64,
}

/// Reports of a family over a decreasing parameter sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySweep {
    pub family: Family,
    pub constants: InequalityConstants,
    pub params: Vec<f64>,
    pub reports: Vec<TraceReport>,
}

fn check_sequence(params: &[f64]) -> Result<(), InequalityError> {
    let positive = params.iter().all(|&p| p > 0.0 && p.is_finite());
    if params.is_empty() || !positive || params.windows(2).any(|w| w[1] >= w[0]) {
        return Err(InequalityError::BadSequence);
    }
    Ok(())
}

impl FamilySweep {
    /// Evaluates `f` at every parameter in parallel, keeping parameter order.
    pub fn build(
        family: Family,
        constants: InequalityConstants,
        params: &[f64],
        f: impl Fn(f64) -> Result<TraceReport, InequalityError> + Sync,
    ) -> Result<Self, InequalityError> {
        check_sequence(params)?;
        let reports = params.par_iter().map(|&p| f(p)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { family, constants, params: params.to_vec(), reports })
    }

    pub fn cone(slope: f64, n: usize, params: &[f64], k: InequalityConstants) -> Result<Self, InequalityError> {
        Self::build(Family::ConeSlab, k, params, |r| cone_family_report(slope, n, r))
    }

    pub fn cusp(alpha: f64, n: usize, params: &[f64], k: InequalityConstants) -> Result<Self, InequalityError> {
        Self::build(Family::CuspSlab, k, params, |r| Ok(cusp_family_report(alpha, n, r)?.report))
    }

    /// Reports of the rescaled functions `v = A chi_{E_r}`.
    pub fn jminus(alpha: f64, n: usize, params: &[f64], k: InequalityConstants) -> Result<Self, InequalityError> {
        Self::build(Family::JMinus, k, params, |r| {
            let c = cusp_family_report(alpha, n, r)?;
            let a = r.powf(-((n - 1) as f64 + 2.0 * alpha));
            let mut rep = c.report;
            rep.trace *= a;
            rep.tv *= a;
            rep.volume *= a;
            rep.errors.trace *= a;
            Ok(rep)
        })
    }

    pub fn rows(&self) -> Vec<SweepRow> {
        self.params
            .iter()
            .zip(&self.reports)
            .map(|(&r, rep)| SweepRow {
                r,
                trace: rep.trace,
                tv: rep.tv,
                volume: rep.volume,
                slack: slack(rep, self.constants),
                implied_c1: implied_c1(rep, self.constants.c2),
            })
            .collect()
    }

    /// Writes the versioned CSV: header comment, then
    /// `r,trace,tv,volume,slack,implied_c1`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), InequalityError> {
        writeln!(w, "{CSV_HEADER}")?;
        let mut out = csv::Writer::from_writer(w);
        for row in self.rows() {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Parameter of the last row with negative slack, if any.
    pub fn smallest_violation(&self) -> Option<f64> {
        self.rows().iter().rev().find(|r| r.slack < 0.0).map(|r| r.r)
    }

    /// Largest violating parameter: below it every swept member violates.
    pub fn violation_onset(&self) -> Option<f64> {
        self.rows().iter().find(|r| r.slack < 0.0).map(|r| r.r)
    }
}

/// Shell sets `Q_d = {d(x) < d}` on a ball or annulus with implied
/// `(|boundary| - c2 |Q_d|) / P(Q_d)` in the `implied_c1` column.
pub fn shell_bound_sweep(domain: &DomainModel, deltas: &[f64], c2: f64) -> Result<FamilySweep, InequalityError> {
    if !matches!(domain.closed_form(), Some(ClosedForm::Ball { .. } | ClosedForm::Annulus { .. })) {
        return Err(InequalityError::WrongDomain(format!("shell sweep on {}", domain.name())));
    }
    let k = InequalityConstants::new(1.0, c2)?;
    let limit = 0.5 * domain.reach();
    if let Some(&delta) = deltas.iter().find(|&&d| !(d > 0.0 && d < limit)) {
        return Err(InequalityError::DeltaTooLarge { delta, limit });
    }
    FamilySweep::build(Family::Shell, k, deltas, |delta| {
        let u = BVRep::Characteristic { region: RegionSpec::Shell { delta }, amplitude: 1.0 };
        Ok(bv::report(&u, domain)?)
    })
}

/// Reports of the boundary layers `zeta(d / eps)` over a decreasing `eps`
/// sequence.
pub fn layer_bound_sweep(
    domain: &DomainModel,
    eps: &[f64],
    profile: Profile,
    c2: f64,
) -> Result<FamilySweep, InequalityError> {
    let k = InequalityConstants::new(1.0, c2)?;
    FamilySweep::build(Family::Layer, k, eps, |e| {
        let u = bv::layer_function(domain, e, profile)?;
        Ok(bv::report(&u, domain)?)
    })
}

/// Power law `y ~ prefactor r^exponent` fitted in log-log coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root mean square of the log residuals.
    pub residual: f64,
    pub window: Vec<usize>,
}

/// Least squares over the `window` smallest-`r` points (default 8).
pub fn fit_exponent(points: &[(f64, f64)], window: Option<usize>) -> Result<AsymptoticFit, InequalityError> {
    if let Some(&(r, y)) = points.iter().find(|(r, y)| !(*r > 0.0 && *y > 0.0 && r.is_finite() && y.is_finite())) {
        return Err(InequalityError::NonPositiveData(format!("(r, y) = ({r}, {y})")));
    }
    let size = window.unwrap_or(FIT_WINDOW).min(points.len());
    if size < 4 {
        return Err(InequalityError::BadParameter(format!("fit needs at least 4 points, got {size}")));
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| points[i].0.total_cmp(&points[j].0));
    let mut win: Vec<usize> = idx[..size].to_vec();
    win.sort_unstable();

    let xs: Vec<f64> = win.iter().map(|&i| points[i].0.ln()).collect();
    let ys: Vec<f64> = win.iter().map(|&i| points[i].1.ln()).collect();
    let m = size as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(InequalityError::BadParameter("fit window has a single abscissa".into()));
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    Ok(AsymptoticFit { exponent: slope, prefactor: icpt.exp(), residual: (ss / m).sqrt(), window: win })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sharp_c2_examples() {
        assert!((radial_sharp_c2(1.0, 2.0, 2).unwrap() - 2.0).abs() < 1e-15);
        assert!((radial_sharp_c2(0.0, 1.0, 2).unwrap() - 2.0).abs() < 1e-15);
        assert!(radial_sharp_c2(2.0, 1.0, 2).is_err());
        assert!(radial_sharp_c2(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn kernel_gap_values() {
        assert!((radial_kernel_gap(1.0, 2.0, 2, 1.5).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(radial_kernel_gap(1.0, 2.0, 3, 1.0).unwrap(), 0.0);
        assert_eq!(radial_kernel_gap(1.0, 2.0, 3, 2.0).unwrap(), 0.0);
        assert!(matches!(radial_kernel_gap(1.0, 2.0, 3, 2.5), Err(InequalityError::OutOfInterval { .. })));
    }

    #[test]
    fn kernel_gap_matches_definition() {
        for n in 2..7 {
            let (a, b) = (0.7, 1.9);
            let m = n as i32;
            for i in 0..=20 {
                let t = a + (b - a) * i as f64 / 20.0;
                let raw = t.powi(m - 1)
                    - (a.powi(m - 1) * (b.powi(m) - t.powi(m)) + b.powi(m - 1) * (t.powi(m) - a.powi(m)))
                        / (b.powi(m) - a.powi(m));
                assert!((raw - radial_kernel_gap(a, b, n, t).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn critical_point() {
        assert!((radial_critical_point(1.0, 2.0, 2).unwrap() - 1.5).abs() < 1e-15);
        let t = radial_critical_point(0.5, 3.0, 4).unwrap();
        assert!((radial_critical_point(1.5, 9.0, 4).unwrap() - 3.0 * t).abs() < 1e-12);
        assert!(radial_kernel_derivative_fd(0.5, 3.0, 4, t, 1e-7).unwrap().abs() < 1e-9);
        assert!(radial_kernel_derivative_fd(0.5, 3.0, 4, 0.5, 1e-7).unwrap() > 0.0);
        assert!(radial_kernel_derivative_fd(0.5, 3.0, 4, 3.0, 1e-7).unwrap() < 0.0);
        assert!(radial_critical_point(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn cone_reports() {
        let r = cone_family_report(1.0, 2, 0.1).unwrap();
        assert!((r.trace - 0.2 * 2f64.sqrt()).abs() < 1e-15);
        assert!((r.tv - 0.2).abs() < 1e-15);
        assert!((r.volume - 0.01).abs() < 1e-15);
        let s = slack(&r, InequalityConstants::new(1.0, 3.0).unwrap());
        assert!(s < 0.0);
        assert!(matches!(cone_family_report(2.0, 2, 0.3), Err(InequalityError::PatchExceeded { .. })));
    }

    #[test]
    fn cusp_expansion() {
        for r in [1e-3, 1e-4] {
            let c = cusp_family_report(0.5, 2, r).unwrap();
            assert!((c.excess / c.leading - 1.0).abs() < 0.05);
            assert!((c.report.volume - 0.8 * r.powf(2.5)).abs() < 1e-15);
        }
        assert!(matches!(cusp_family_report(0.5, 2, 0.9), Err(InequalityError::PatchExceeded { .. })));
    }

    #[test]
    fn jminus_limit() {
        let j = jminus_sequence(0.5, 2, 1e-4).unwrap();
        assert!((j.j_minus + 0.5).abs() < 0.01);
        assert!((j.l1_norm - 0.8 * 1e-2).abs() < 1e-12);
        assert!(j.j_plus > 0.0);
    }

    #[test]
    fn sweep_csv() {
        let rs = geometric_sequence(0.1, 0.5, 3).unwrap();
        let s = FamilySweep::cone(1.0, 2, &rs, InequalityConstants::new(1.0, 10.0).unwrap()).unwrap();
        let text = s.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("r,trace,tv,volume,slack,implied_c1"));
        assert_eq!(lines.count(), 3);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<FamilySweep>(&json).unwrap(), s);
        assert!(matches!(FamilySweep::cone(1.0, 2, &[0.1, 0.2], s.constants), Err(InequalityError::BadSequence)));
    }

    #[test]
    fn shell_on_annulus() {
        let d = DomainModel::annulus(1.0, 2.0).unwrap();
        let s = shell_bound_sweep(&d, &[0.01], 2.0).unwrap();
        assert!((s.rows()[0].implied_c1 - 0.98).abs() < 1e-12);
        let disc = DomainModel::disc(1.0).unwrap();
        let s = shell_bound_sweep(&disc, &[0.1, 0.01, 0.001], 2.0).unwrap();
        assert!((s.reports[2].tv - 2.0 * PI * 0.999).abs() < 1e-12);
        assert!(matches!(shell_bound_sweep(&d, &[0.3], 2.0), Err(InequalityError::DeltaTooLarge { .. })));
    }

    #[test]
    fn layer_on_annulus() {
        let d = DomainModel::annulus(1.0, 2.0).unwrap();
        let s = layer_bound_sweep(&d, &[0.05, 0.01], Profile::cubic(), 2.0).unwrap();
        for rep in &s.reports {
            assert!((rep.trace - 6.0 * PI).abs() < 1e-10, "{}", rep.trace);
        }
        assert!((s.rows()[1].implied_c1 - 1.0).abs() < 0.02);
        assert!(matches!(
            layer_bound_sweep(&d, &[0.3], Profile::cubic(), 2.0),
            Err(InequalityError::EpsilonTooLarge { .. })
        ));
    }

    #[test]
    fn exact_power_law_fit() {
        let pts: Vec<(f64, f64)> =
            geometric_sequence(0.1, 0.5, 12).unwrap().into_iter().map(|r| (r, 3.0 * r * r)).collect();
        let f = fit_exponent(&pts, None).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
        assert!((f.prefactor - 3.0).abs() < 1e-8);
        assert_eq!(f.window, (4..12).collect::<Vec<_>>());
        assert!(matches!(fit_exponent(&[(1.0, 0.0); 5], None), Err(InequalityError::NonPositiveData(_))));
    }
}
