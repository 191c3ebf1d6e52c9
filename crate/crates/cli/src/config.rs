//! Experiment parameters from flags and an optional TOML file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    RadialSharp,
    KernelCheck,
    Cone,
    Cusp,
    Jminus,
    Shell,
    Layer,
    Estimate,
    Reach,
    Curvature,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::RadialSharp,
        Experiment::KernelCheck,
        Experiment::Cone,
        Experiment::Cusp,
        Experiment::Jminus,
        Experiment::Shell,
        Experiment::Layer,
        Experiment::Estimate,
        Experiment::Reach,
        Experiment::Curvature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::RadialSharp => "radial-sharp",
            Experiment::KernelCheck => "kernel-check",
            Experiment::Cone => "cone",
            Experiment::Cusp => "cusp",
            Experiment::Jminus => "jminus",
            Experiment::Shell => "shell",
            Experiment::Layer => "layer",
            Experiment::Estimate => "estimate",
            Experiment::Reach => "reach",
            Experiment::Curvature => "curvature",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Disc,
    Ball,
    Annulus,
    Square,
    Cone,
    Cusp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Descent,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Every key accepted on the command line and in the config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[arg(skip)]
    pub experiment: Option<String>,
    /// Inner radius (0 for a ball).
    #[arg(long)]
    pub a: Option<f64>,
    /// Outer radius, or side of the square.
    #[arg(long)]
    pub b: Option<f64>,
    /// Cone slope.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Cusp exponent in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Ambient dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Patch height of cone and cusp domains.
    #[arg(long)]
    pub eta: Option<f64>,
    /// First parameter of a sweep.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Ratio of the geometric sweep.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Terms of the sweep, or random cases for kernel-check.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// Mesh sizes, comma separated and decreasing.
    #[arg(long, value_delimiter = ',')]
    #[serde(default, deserialize_with = "one_or_many")]
    pub h: Option<Vec<f64>>,
    /// Directions of the polyhedral norm.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    /// Initial smoothing of the descent solver.
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_parser = parse_domain)]
    pub domain: Option<DomainKind>,
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    /// Fit power laws to the sweep.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fit: Option<bool>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(Some(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    }))
}

fn kebab<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, String> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s)).map_err(|e| e.to_string())
}

fn parse_domain(s: &str) -> Result<DomainKind, String> {
    kebab(s)
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    kebab(s)
}

fn parse_format(s: &str) -> Result<Format, String> {
    kebab(s)
}

impl Params {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config("config", e.to_string()))
    }

    /// Fields set in `self` win over `file`.
    pub fn over(self, file: Params) -> Params {
        Params {
            experiment: self.experiment.or(file.experiment),
            a: self.a.or(file.a),
            b: self.b.or(file.b),
            l: self.l.or(file.l),
            alpha: self.alpha.or(file.alpha),
            dim: self.dim.or(file.dim),
            eta: self.eta.or(file.eta),
            r0: self.r0.or(file.r0),
            ratio: self.ratio.or(file.ratio),
            count: self.count.or(file.count),
            c1: self.c1.or(file.c1),
            c2: self.c2.or(file.c2),
            h: self.h.or(file.h),
            k: self.k.or(file.k),
            eps0: self.eps0.or(file.eps0),
            stages: self.stages.or(file.stages),
            iterations: self.iterations.or(file.iterations),
            seed: self.seed.or(file.seed),
            samples: self.samples.or(file.samples),
            domain: self.domain.or(file.domain),
            solver: self.solver.or(file.solver),
            fit: self.fit.or(file.fit),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            jobs: self.jobs.or(file.jobs),
        }
    }

    /// Range checks on whatever was given. Defaults are filled in later by
    /// each experiment.
    pub fn validate(&self) -> Result<(), CliError> {
        fn check<T: Copy + std::fmt::Display>(
            key: &str,
            v: Option<T>,
            ok: impl Fn(T) -> bool,
            want: &str,
        ) -> Result<(), CliError> {
            match v {
                Some(x) if !ok(x) => Err(CliError::config(key, format!("{x} is out of range, expected {want}"))),
                _ => Ok(()),
            }
        }
        let finite = |x: f64| x.is_finite();
        check("a", self.a, |x| finite(x) && x >= 0.0, "a >= 0")?;
        check("b", self.b, |x| finite(x) && x > 0.0, "b > 0")?;
        if let (Some(a), Some(b)) = (self.a, self.b) {
            if a >= b {
                return Err(CliError::config("a", format!("{a} must be below b = {b}")));
            }
        }
        check("L", self.l, |x| finite(x) && x > 0.0, "L > 0")?;
        check("alpha", self.alpha, |x| x > 0.0 && x < 1.0, "0 < alpha < 1")?;
        check("dim", self.dim, |n| (2..=6).contains(&n), "2 <= dim <= 6")?;
        check("eta", self.eta, |x| finite(x) && x > 0.0, "eta > 0")?;
        check("r0", self.r0, |x| finite(x) && x > 0.0, "r0 > 0")?;
        check("ratio", self.ratio, |x| x > 0.0 && x < 1.0, "0 < ratio < 1")?;
        check("count", self.count, |n| (1..=200).contains(&n), "1 <= count <= 200")?;
        check("c1", self.c1, |x| finite(x) && x > 0.0, "c1 > 0")?;
        check("c2", self.c2, |x| finite(x) && x >= 0.0, "c2 >= 0")?;
        check("K", self.k, |k| k >= 8, "K >= 8")?;
        check("eps0", self.eps0, |x| finite(x) && x > 0.0, "eps0 > 0")?;
        check("stages", self.stages, |n| n >= 1, "stages >= 1")?;
        check("iterations", self.iterations, |n| n >= 1, "iterations >= 1")?;
        check("samples", self.samples, |n| n >= 1, "samples >= 1")?;
        check("jobs", self.jobs, |n| n >= 1, "jobs >= 1")?;
        if let Some(h) = &self.h {
            if h.is_empty() || h.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(CliError::config("h", "mesh sizes must be positive"));
            }
            if h.windows(2).any(|w| w[1] >= w[0]) {
                return Err(CliError::config("h", "mesh sizes must be strictly decreasing"));
            }
        }
        Ok(())
    }
}
