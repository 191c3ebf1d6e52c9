//! Boundary charts, tubular coordinates, projection and reach for the domain
//! catalog.

mod chart;
mod cusp;
mod domain;
mod projection;
mod tubular;

pub use chart::{smooth_step, wedge_of, Chart, EdgeKind, Interval, Vector, RANK_TOLERANCE};
pub use cusp::{
    cusp_normal_curvature, cusp_patch_halfwidth, cusp_profile, cusp_reach_witness, cusp_reach_witness_in_patch,
    normal_section_curvature_fd,
};
pub use domain::{BoundaryPiece, ClosedForm, DomainModel, SliceFn, VolumeRule};
pub use projection::Projection;
pub use tubular::{eval_poly, TubularFrame};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("chart `{chart}` is degenerate (smallest singular value {sigma:e})")]
    DegenerateChart { chart: String, sigma: f64 },
    #[error("chart `{chart}` is not injective on its parameter box")]
    NotInjective { chart: String },
    #[error("wedge normal of chart `{chart}` points out of the domain")]
    OrientationMismatch { chart: String },
    #[error("normal offset {t} outside the tube of thickness {thickness}")]
    OutOfTube { t: f64, thickness: f64 },
    #[error("tubular Jacobian {value:e} is not positive; shrink the tube thickness")]
    NonPositiveJacobian { value: f64 },
    #[error("closest-point solver failed from every start")]
    NoConvergence,
    #[error("{0}")]
    DomainError(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Unit-ball volume `omega_n` in R^n (omega_1 = 2, omega_2 = pi, omega_3 = 4pi/3).
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }
}
