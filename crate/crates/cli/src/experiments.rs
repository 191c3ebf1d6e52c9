//! One function per experiment. Each writes its artifact and returns the
//! summary line and whether the built-in threshold was met.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tracelab_core::bv::{self, BVRep, Profile, SmoothFn, TraceReport};
use tracelab_core::estimator::{refine_study, Schedule, Solver};
use tracelab_core::geometry::{
    cusp_normal_curvature, cusp_reach_witness, normal_section_curvature_fd, unit_ball_volume, DomainModel, TubularFrame,
};
use tracelab_core::inequality::{
    cusp_family_report, fit_exponent, geometric_sequence, jminus_sequence, layer_bound_sweep, radial_critical_point,
    radial_kernel_derivative_fd, radial_kernel_gap, radial_sharp_c2, shell_bound_sweep, slack, FamilySweep,
    InequalityConstants, JMinus, CSV_HEADER, PATCH_HEIGHT,
};

use crate::config::{DomainKind, Experiment, Format, Params, SolverKind};
use crate::CliError;

pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub artifact: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub experiment: String,
    pub reproduces: String,
    pub threshold: String,
}

pub fn catalog() -> Vec<CatalogEntry> {
    let row = |e: Experiment, reproduces: &str, threshold: &str| CatalogEntry {
        experiment: e.name().into(),
        reproduces: reproduces.into(),
        threshold: threshold.into(),
    };
    vec![
        row(Experiment::RadialSharp, "sharp c2 for balls and annuli, attained by constants", "|slack(u=1)| <= 1e-8"),
        row(
            Experiment::KernelCheck,
            "nonnegativity of the radial kernel gap",
            "min gap >= -1e-12, |phi'(t_c)| <= 1e-9",
        ),
        row(Experiment::Cone, "corner slabs force C1 >= sqrt(1+L^2)", "implied C1 within 1e-3 of sqrt(1+L^2)"),
        row(Experiment::Cusp, "cusp slabs: C1 = 1 fails, trace-tv ~ r^(N-1+2a)", "violation found; fitted exponents"),
        row(
            Experiment::Jminus,
            "lower semicontinuity fails for the relaxed functional",
            "J- near its limit, small L1 norm",
        ),
        row(Experiment::Shell, "shell sets near a smooth boundary push C1 to 1", "implied C1 within 0.02 of 1"),
        row(Experiment::Layer, "boundary layers push C1 to 1", "implied C1 within 0.02 of 1, exact trace"),
        row(Experiment::Estimate, "discrete infimum of the trace quotient", "band [0.90, 1.05] on smooth domains"),
        row(Experiment::Reach, "reach of the model domains from samples", "within 2% of the exact reach"),
        row(Experiment::Curvature, "curvature of circles and the cusp profile", "1e-8 circle, 1e-6 relative cusp"),
    ]
}

/// Output settings shared by every experiment.
pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
}

impl Sink {
    fn path(&self, e: Experiment) -> PathBuf {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        self.dir.join(format!("{}.{ext}", e.name()))
    }

    fn create(&self, e: Experiment) -> Result<(PathBuf, BufWriter<File>), CliError> {
        std::fs::create_dir_all(&self.dir)?;
        let p = self.path(e);
        let f = File::create(&p)?;
        Ok((p, BufWriter::new(f)))
    }

    fn json<T: Serialize>(&self, e: Experiment, value: &T) -> Result<PathBuf, CliError> {
        let (p, mut w) = self.create(e)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(p)
    }

    /// Rows as CSV under the version header, or the whole value as JSON.
    fn rows<R: Serialize, T: Serialize>(&self, e: Experiment, rows: &[R], value: &T) -> Result<PathBuf, CliError> {
        if self.format == Format::Json {
            return self.json(e, value);
        }
        let (p, mut w) = self.create(e)?;
        writeln!(w, "{CSV_HEADER}")?;
        let mut c = csv::Writer::from_writer(&mut w);
        for r in rows {
            c.serialize(r)?;
        }
        c.flush()?;
        drop(c);
        w.flush()?;
        Ok(p)
    }

    fn sweep(&self, e: Experiment, sweep: &FamilySweep) -> Result<PathBuf, CliError> {
        if self.format == Format::Json {
            return self.json(e, sweep);
        }
        let (p, mut w) = self.create(e)?;
        sweep.write_csv(&mut w)?;
        w.flush()?;
        Ok(p)
    }
}

pub fn run(e: Experiment, p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    match e {
        Experiment::RadialSharp => radial_sharp(p, sink),
        Experiment::KernelCheck => kernel_check(p, sink),
        Experiment::Cone => cone(p, sink),
        Experiment::Cusp => cusp(p, sink),
        Experiment::Jminus => jminus(p, sink),
        Experiment::Shell => shell_or_layer(e, p, sink),
        Experiment::Layer => shell_or_layer(e, p, sink),
        Experiment::Estimate => estimate(p, sink),
        Experiment::Reach => reach(p, sink),
        Experiment::Curvature => curvature(p, sink),
    }
}

/// Shortest decimal form with at most six places.
fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn sequence(p: &Params, count: usize) -> Result<Vec<f64>, CliError> {
    Ok(geometric_sequence(p.r0.unwrap_or(0.1), p.ratio.unwrap_or(0.5), p.count.unwrap_or(count))?)
}

fn dim(p: &Params) -> usize {
    p.dim.unwrap_or(2)
}

fn planar(p: &Params, what: &str) -> Result<(), CliError> {
    if dim(p) != 2 {
        return Err(CliError::config("dim", format!("{what} is planar, dim must be 2")));
    }
    Ok(())
}

/// The domain named by `--domain`, with radii `a`, `b`, slope `L`, exponent
/// `alpha` and height `eta`.
fn domain(p: &Params, default: DomainKind) -> Result<(DomainKind, DomainModel), CliError> {
    let kind = p.domain.unwrap_or(default);
    let b = p.b.unwrap_or(match kind {
        DomainKind::Annulus => 2.0,
        _ => 1.0,
    });
    let eta = p.eta.unwrap_or(PATCH_HEIGHT);
    let d = match kind {
        DomainKind::Disc => {
            planar(p, "disc")?;
            DomainModel::disc(b)?
        }
        DomainKind::Ball => DomainModel::ball(b, dim(p))?,
        DomainKind::Annulus => {
            planar(p, "annulus")?;
            let a = p.a.unwrap_or(1.0);
            if a <= 0.0 || a >= b {
                return Err(CliError::config("a", format!("annulus needs 0 < a < b, got a = {a}, b = {b}")));
            }
            DomainModel::annulus(a, b)?
        }
        DomainKind::Square => {
            planar(p, "square")?;
            DomainModel::square(b)?
        }
        DomainKind::Cone => {
            planar(p, "cone")?;
            DomainModel::cone_corner(p.l.unwrap_or(1.0), eta)?
        }
        DomainKind::Cusp => {
            planar(p, "cusp")?;
            DomainModel::cusp(p.alpha.unwrap_or(0.5), eta)?
        }
    };
    Ok((kind, d))
}

/// Radii `(a, b)` of a ball or annulus domain.
fn radii(kind: DomainKind, p: &Params) -> Result<(f64, f64), CliError> {
    match kind {
        DomainKind::Disc | DomainKind::Ball => Ok((0.0, p.b.unwrap_or(1.0))),
        DomainKind::Annulus => Ok((p.a.unwrap_or(1.0), p.b.unwrap_or(2.0))),
        _ => Err(CliError::config("domain", "expected disc, ball or annulus")),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSharp {
    pub a: f64,
    pub b: f64,
    pub dim: usize,
    pub c2: f64,
    pub trace: f64,
    pub tv: f64,
    pub volume: f64,
    pub slack: f64,
}

fn radial_sharp(p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let (a, b, n) = (p.a.unwrap_or(1.0), p.b.unwrap_or(2.0), dim(p));
    let c2 = radial_sharp_c2(a, b, n)?;
    let report = if a == 0.0 {
        bv::report(&BVRep::Smooth(SmoothFn::constant(1.0, n)), &DomainModel::ball(b, n)?)?
    } else if n == 2 {
        bv::report(&BVRep::Smooth(SmoothFn::constant(1.0, n)), &DomainModel::annulus(a, b)?)?
    } else {
        // Spherical shells beyond the plane only have their closed form.
        let w = unit_ball_volume(n);
        let m = n as i32;
        TraceReport::closed_form(n as f64 * w * (a.powi(m - 1) + b.powi(m - 1)), 0.0, w * (b.powi(m) - a.powi(m)))
    };
    let s = slack(&report, InequalityConstants::new(p.c1.unwrap_or(1.0), c2)?);
    let row = RadialSharp { a, b, dim: n, c2, trace: report.trace, tv: report.tv, volume: report.volume, slack: s };
    let artifact = sink.rows(Experiment::RadialSharp, std::slice::from_ref(&row), &row)?;
    Ok(Outcome { pass: s.abs() <= 1e-8, summary: format!("c2 = {}, slack(u=1) = {s:.1e}", num(c2)), artifact })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelCase {
    pub a: f64,
    pub b: f64,
    pub dim: usize,
    pub grid_min: f64,
    pub endpoint_max: f64,
    pub critical_point: f64,
    pub derivative_at_critical: f64,
}

fn kernel_case(a: f64, b: f64, n: usize, points: usize) -> Result<KernelCase, CliError> {
    let points = points.max(2);
    let mut grid_min = f64::INFINITY;
    for i in 0..points {
        let t = if i + 1 == points { b } else { a + (b - a) * i as f64 / (points - 1) as f64 };
        grid_min = grid_min.min(radial_kernel_gap(a, b, n, t)?);
    }
    let endpoint_max = radial_kernel_gap(a, b, n, a)?.abs().max(radial_kernel_gap(a, b, n, b)?.abs());
    let tc = radial_critical_point(a, b, n)?;
    Ok(KernelCase {
        a,
        b,
        dim: n,
        grid_min,
        endpoint_max,
        critical_point: tc,
        derivative_at_critical: radial_kernel_derivative_fd(a, b, n, tc, 1e-7)?,
    })
}

/// One triple from `a`, `b`, `dim`, or `count` random ones from `seed`.
fn kernel_check(p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let points = p.samples.unwrap_or(10_000);
    let cases: Vec<KernelCase> = if p.a.is_some() || p.b.is_some() {
        let (a, b) = (p.a.unwrap_or(1.0), p.b.unwrap_or(2.0));
        if a == 0.0 {
            return Err(CliError::config("a", "the critical point needs a > 0"));
        }
        vec![kernel_case(a, b, dim(p), points)?]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed.unwrap_or(1));
        let mut out = Vec::new();
        while out.len() < p.count.unwrap_or(50) {
            let b: f64 = rng.gen_range(0.1..=10.0);
            let a: f64 = rng.gen_range(0.0..b);
            let n: usize = rng.gen_range(2..=6);
            if a > 0.0 {
                out.push(kernel_case(a, b, n, points)?);
            }
        }
        out
    };
    let min = cases.iter().map(|c| c.grid_min).fold(f64::INFINITY, f64::min);
    let end = cases.iter().map(|c| c.endpoint_max).fold(0.0, f64::max);
    let fd = cases.iter().map(|c| c.derivative_at_critical.abs()).fold(0.0, f64::max);
    let artifact = sink.rows(Experiment::KernelCheck, &cases, &cases)?;
    Ok(Outcome {
        pass: min >= -1e-12 && end <= 1e-12 && fd <= 1e-9,
        summary: format!(
            "{} cases: min gap = {min:.2e}, max endpoint = {end:.1e}, max |phi'(t_c)| = {fd:.1e}",
            cases.len()
        ),
        artifact,
    })
}

fn constants(p: &Params, c2: f64) -> Result<InequalityConstants, CliError> {
    Ok(InequalityConstants::new(p.c1.unwrap_or(1.0), c2)?)
}

fn cone(p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let l = p.l.unwrap_or(1.0);
    let rs = sequence(p, 20)?;
    let sweep = FamilySweep::cone(l, dim(p), &rs, constants(p, p.c2.unwrap_or(10.0))?)?;
    let last = sweep.rows().last().map(|r| r.implied_c1).unwrap_or(f64::NAN);
    let want = (1.0 + l * l).sqrt();
    let artifact = sink.sweep(Experiment::Cone, &sweep)?;
    Ok(Outcome {
        pass: (last - want).abs() <= 1e-3,
        summary: format!("implied C1 → {last:.5} (sqrt(1+L^2) = {want:.5})"),
        artifact,
    })
}

fn cusp(p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let alpha = p.alpha.unwrap_or(0.5);
    let n = dim(p);
    let rs = sequence(p, 20)?;
    let sweep = FamilySweep::cusp(alpha, n, &rs, constants(p, p.c2.unwrap_or(1.0))?)?;
    let artifact = sink.sweep(Experiment::Cusp, &sweep)?;
    let onset = sweep.violation_onset();
    let onset_note = match onset {
        Some(r) => format!("slack < 0 from r = {r:.3e}"),
        None => "no violation in the sweep".to_string(),
    };
    if !p.fit.unwrap_or(false) {
        return Ok(Outcome { pass: onset.is_some(), summary: onset_note, artifact });
    }
    let excess: Vec<(f64, f64)> =
        rs.iter().map(|&r| Ok((r, cusp_family_report(alpha, n, r)?.excess))).collect::<Result<_, CliError>>()?;
    let vol: Vec<(f64, f64)> = sweep.rows().iter().map(|r| (r.r, r.volume)).collect();
    let fe = fit_exponent(&excess, None)?;
    let fv = fit_exponent(&vol, None)?;
    let m = (n - 1) as f64;
    let pass = (fe.exponent - (m + 2.0 * alpha)).abs() <= 0.05 && (fv.exponent - (m + 1.0 + alpha)).abs() <= 0.02;
    Ok(Outcome {
        pass,
        summary: format!(
            "exponent(trace−tv) = {:.2} ± 0.05, exponent(vol) = {:.2} ± 0.02; {onset_note}",
            fe.exponent, fv.exponent
        ),
        artifact,
    })
}

fn jminus(p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let alpha = p.alpha.unwrap_or(0.5);
    let n = dim(p);
    let rs = sequence(p, 14)?;
    let seq: Vec<JMinus> = rs.iter().map(|&r| jminus_sequence(alpha, n, r)).collect::<Result<_, _>>()?;
    let last = *seq.last().expect("nonempty sequence");
    // J- tends to minus the leading coefficient of trace - tv.
    let limit = -cusp_family_report(alpha, n, last.r)?.leading * last.amplitude;
    let min_plus = seq.iter().map(|j| j.j_plus).fold(f64::INFINITY, f64::min);
    let artifact = sink.rows(Experiment::Jminus, &seq, &seq)?;
    Ok(Outcome {
        pass: (last.j_minus - limit).abs() <= 0.01 && last.l1_norm <= 0.01 && min_plus >= 0.0,
        summary: format!(
            "J-(v) = {:.5} (limit {:.5}) at r = {:.2e}, |v|_L1 = {:.2e}, min J+ = {:.3}",
            last.j_minus, limit, last.r, last.l1_norm, min_plus
        ),
        artifact,
    })
}

fn shell_or_layer(e: Experiment, p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let (kind, d) = domain(p, DomainKind::Disc)?;
    let (a, b) = radii(kind, p)?;
    let c2 = match p.c2 {
        Some(c) => c,
        None => radial_sharp_c2(a, b, d.ambient_dim())?,
    };
    let seq = sequence(p, 12)?;
    let (sweep, trace_ok) = if e == Experiment::Shell {
        (shell_bound_sweep(&d, &seq, c2)?, true)
    } else {
        let s = layer_bound_sweep(&d, &seq, Profile::cubic(), c2)?;
        let area = d.surface_area();
        let ok = s.reports.iter().all(|r| (r.trace - area).abs() <= 1e-10);
        (s, ok)
    };
    let last = sweep.rows().last().map(|r| r.implied_c1).unwrap_or(f64::NAN);
    let artifact = sink.sweep(e, &sweep)?;
    Ok(Outcome {
        pass: (last - 1.0).abs() <= 0.02 && trace_ok,
        summary: format!("implied C1 → {last:.5} at parameter {:.3e} (c2 = {})", seq[seq.len() - 1], num(c2)),
        artifact,
    })
}

fn estimate(p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let (kind, d) = domain(p, DomainKind::Disc)?;
    let c2 = p.c2.unwrap_or_else(|| d.surface_area() / d.volume());
    let hs = p.h.clone().unwrap_or_else(|| vec![0.1]);
    let solver = match p.solver.unwrap_or(SolverKind::Descent) {
        SolverKind::Descent => {
            let s = Schedule::default();
            Solver::SmoothedDescent(Schedule {
                eps0: p.eps0.unwrap_or(s.eps0),
                stages: p.stages.unwrap_or(s.stages),
                iterations: p.iterations.unwrap_or(s.iterations),
            })
        }
        SolverKind::Lp => Solver::PolyhedralLp { k: p.k.unwrap_or(tracelab_core::estimator::DEFAULT_DIRECTIONS) },
    };
    let study = refine_study(&d, c2, &hs, solver, false)?;
    let artifact = if sink.format == Format::Json {
        sink.json(Experiment::Estimate, &study)?
    } else {
        let (path, mut w) = sink.create(Experiment::Estimate)?;
        study.write_csv(&mut w)?;
        w.flush()?;
        path
    };
    let finest = study.rows.last().map(|r| r.c1_estimate).unwrap_or(f64::NAN);
    let (pass, bound) = match kind {
        DomainKind::Disc | DomainKind::Ball | DomainKind::Annulus => {
            (study.rows.iter().all(|r| (0.90..=1.05).contains(&r.c1_estimate)), "band [0.90, 1.05]".to_string())
        }
        DomainKind::Square => (finest <= 2f64.sqrt() + 0.05, "at most sqrt(2) + 0.05".to_string()),
        _ => (study.rows.iter().all(|r| r.converged), "converged".to_string()),
    };
    Ok(Outcome {
        pass,
        summary: format!(
            "c1_estimate = {finest:.5} at h = {} (c2 = {}, {bound}, monotone toward 1: {})",
            num(hs[hs.len() - 1]),
            num(c2),
            study.monotone_toward_one
        ),
        artifact,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachResult {
    pub domain: String,
    pub samples: usize,
    pub estimate: f64,
    pub exact: f64,
    /// Set on cusp domains, whose reach is zero.
    pub witness: Option<bool>,
}

fn reach(p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let (kind, d) = domain(p, DomainKind::Ball)?;
    let samples = p.samples.unwrap_or(2000);
    let estimate = d.reach_estimate(samples);
    let exact = d.reach();
    let witness = if kind == DomainKind::Cusp { Some(cusp_reach_witness(p.alpha.unwrap_or(0.5), 0.01)?) } else { None };
    let row = ReachResult { domain: d.name().to_string(), samples, estimate, exact, witness };
    let artifact = sink.rows(Experiment::Reach, std::slice::from_ref(&row), &row)?;
    let (pass, summary) = match witness {
        Some(w) => (w, format!("reach estimate {estimate:.3e}, reach witness at sigma = 0.01: {w}")),
        None => {
            ((estimate / exact - 1.0).abs() <= 0.02, format!("reach estimate = {estimate:.5} (exact {})", num(exact)))
        }
    };
    Ok(Outcome { pass, summary, artifact })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureRow {
    pub s: f64,
    pub computed: f64,
    pub exact: f64,
}

/// Circle curvature through the tubular frame, or the cusp profile's normal
/// curvature against a difference quotient.
fn curvature(p: &Params, sink: &Sink) -> Result<Outcome, CliError> {
    let kind = p.domain.unwrap_or(DomainKind::Disc);
    let samples = p.samples.unwrap_or(91).max(2);
    let (rows, pass, summary) = match kind {
        DomainKind::Disc => {
            let b = p.b.unwrap_or(1.0);
            let d = DomainModel::disc(b)?;
            let frame = TubularFrame::new(d.chart(0).clone(), 0.5 * b)?;
            let iv = d.chart(0).domain_box()[0];
            let mut rows = Vec::new();
            for k in 1..=samples {
                let s = iv.lo + iv.len() * k as f64 / (samples + 1) as f64;
                rows.push(CurvatureRow { s, computed: frame.mean_curvature_proxy(&[s])?, exact: -1.0 / b });
            }
            let err = rows.iter().map(|r| (r.computed - r.exact).abs()).fold(0.0, f64::max);
            (rows, err <= 1e-8, format!("max |H + 1/b| = {err:.1e} on {samples} points"))
        }
        DomainKind::Cusp => {
            let alpha = p.alpha.unwrap_or(0.5);
            let mut rows = Vec::new();
            for k in 0..samples {
                let t = 0.1 + 0.9 * k as f64 / (samples - 1) as f64;
                rows.push(CurvatureRow {
                    s: t,
                    computed: normal_section_curvature_fd(alpha, t, 1e-4),
                    exact: cusp_normal_curvature(alpha, t)?,
                });
            }
            let err = rows.iter().map(|r| (r.computed / r.exact - 1.0).abs()).fold(0.0, f64::max);
            (rows, err <= 1e-6, format!("max relative error of the cusp curvature = {err:.1e} on t in [0.1, 1]"))
        }
        _ => return Err(CliError::config("domain", "curvature runs on disc or cusp")),
    };
    let artifact = sink.rows(Experiment::Curvature, &rows, &rows)?;
    Ok(Outcome { pass, summary, artifact })
}
