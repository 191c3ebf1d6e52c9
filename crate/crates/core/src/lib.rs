//! Numerical laboratory for the sharp constants in the BV trace inequality
//!
//! ```text
//! int_{boundary} |u| <= C1 int_Omega |Du| + C2 int_Omega |u|
//! ```
//!
//! on planar and spatial model domains: smooth domains (balls, annuli), where
//! `C1 = 1` is attainable, and corner and cusp domains, where it is not.

pub mod bv;
pub mod estimator;
pub mod geometry;
pub mod inequality;
pub mod mesh;
pub mod quadrature;

pub use quadrature::{Adaptive, Estimate, QuadratureError};
