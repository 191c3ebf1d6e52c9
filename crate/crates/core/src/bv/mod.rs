//! BV functions on catalog domains and the three integrals of the trace
//! inequality: `int_{boundary} |u|`, `int |Du|` and `int |u|`.

mod integrals;
mod region;
mod rep;

pub use integrals::{
    nested, surface_integral, surface_integral_tol, tube_integral, volume_integral, volume_integral_rule, SURFACE_TOL,
};
pub use region::{cusp_trace_excess, RegionSpec, ScalarFn};
pub use rep::{
    layer_function, region_perimeter, report, total_variation, trace_of, tube_trace_bound, volume_of, BVRep, GradFn,
    Profile, SmoothFn, Support, MC_SAMPLES, MC_SEED, VOLUME_TOL,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::mesh::MeshError;
use crate::quadrature::{Estimate, QuadratureError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BvError {
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("parameter r = {r} leaves the local patch (limit {limit})")]
    PatchExceeded { r: f64, limit: f64 },
    #[error("wrong domain: {0}")]
    WrongDomain(String),
    #[error("layer thickness {eps} must be positive and below {limit} (half the reach)")]
    EpsilonTooLarge { eps: f64, limit: f64 },
    #[error("region leaves the domain: {0}")]
    RegionOutsideDomain(String),
    #[error("invalid function: {0}")]
    InvalidRep(String),
}

/// How an integral was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Methods {
    pub trace: Method,
    pub tv: Method,
    pub volume: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Errors {
    pub trace: f64,
    pub tv: f64,
    pub volume: f64,
}

/// The three integrals of one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub trace: f64,
    pub tv: f64,
    pub volume: f64,
    pub methods: Methods,
    pub errors: Errors,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl TraceReport {
    pub fn new(trace: Estimate, tv: Estimate, volume: Estimate, methods: [Method; 3], seed: Option<u64>) -> Self {
        Self {
            trace: trace.value,
            tv: tv.value,
            volume: volume.value,
            methods: Methods { trace: methods[0], tv: methods[1], volume: methods[2] },
            errors: Errors { trace: trace.error, tv: tv.error, volume: volume.error },
            seed,
        }
    }

    /// Report built from exact values.
    pub fn closed_form(trace: f64, tv: f64, volume: f64) -> Self {
        let e = |v| Estimate { value: v, error: 0.0 };
        Self::new(e(trace), e(tv), e(volume), [Method::ClosedForm; 3], None)
    }

    /// All three fields finite and nonnegative. Quadrature noise of size
    /// below the reported error is clamped to zero.
    pub fn check(&self) -> Result<(), BvError> {
        for (name, v, err) in [
            ("trace", self.trace, self.errors.trace),
            ("tv", self.tv, self.errors.tv),
            ("volume", self.volume, self.errors.volume),
        ] {
            if !v.is_finite() || v < -err.max(1e-300) {
                return Err(BvError::InvalidRep(format!("{name} = {v} is not a finite nonnegative value")));
            }
        }
        Ok(())
    }
}
