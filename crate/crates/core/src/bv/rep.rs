//! Representations of BV functions and their three integrals.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{DomainModel, GeometryError, TubularFrame, Vector, VolumeRule};
use crate::mesh::Mesh;
use crate::quadrature::Estimate;

use super::integrals::{surface_integral, tube_integral, volume_integral, volume_integral_rule};
use super::region::{RegionSpec, ScalarFn};
use super::{BvError, Method, TraceReport};

pub type GradFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Relative tolerance for volume and total-variation quadrature.
pub const VOLUME_TOL: f64 = 1e-8;
/// Seed for Monte-Carlo fallbacks, recorded in reports that use it.
pub const MC_SEED: u64 = 0x07ac_e1ab;
/// Samples for Monte-Carlo fallbacks.
pub const MC_SAMPLES: usize = 100_000;
/// Points sampled when checking that a region lies inside its domain.
const CONTAINMENT_SAMPLES: usize = 2000;

/// Where a smooth function may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Domain,
    /// Vanishes outside the box.
    Box {
        lo: [f64; 2],
        hi: [f64; 2],
    },
    /// Vanishes at distance `>= thickness` from the boundary; integrals run
    /// in tubular coordinates.
    BoundaryLayer {
        thickness: f64,
    },
}

/// A smooth function with its gradient.
#[derive(Clone)]
pub struct SmoothFn {
    value: ScalarFn,
    gradient: GradFn,
    support: Support,
    scale: f64,
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFn({:?}, scale {})", self.support, self.scale)
    }
}

impl SmoothFn {
    pub fn new(
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        support: Support,
    ) -> Self {
        Self { value: Arc::new(value), gradient: Arc::new(gradient), support, scale: 1.0 }
    }

    /// Constant function on the domain.
    pub fn constant(c: f64, dim: usize) -> Self {
        Self::new(move |_| c, move |_| Vector::zeros(dim), Support::Domain)
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.scale * (self.value)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x) * self.scale
    }

    pub fn support(&self) -> Support {
        self.support
    }
}

/// Cut-off profile `zeta` for layer functions.
#[derive(Clone, Copy)]
pub struct Profile {
    pub value: fn(f64) -> f64,
    pub derivative: fn(f64) -> f64,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Profile")
    }
}

impl Profile {
    /// `(1 - t)^2 (1 + 2t)` on `[0, 1]`, zero beyond.
    pub fn cubic() -> Self {
        fn value(t: f64) -> f64 {
            if t >= 1.0 {
                0.0
            } else {
                let t = t.max(0.0);
                (1.0 - t) * (1.0 - t) * (1.0 + 2.0 * t)
            }
        }
        fn derivative(t: f64) -> f64 {
            if (0.0..1.0).contains(&t) {
                -6.0 * t * (1.0 - t)
            } else {
                0.0
            }
        }
        Self { value, derivative }
    }

    /// `zeta(0) = 1`, `zeta' < 0` inside and `zeta = 0` from 1 on, sampled.
    pub fn check(&self) -> Result<(), BvError> {
        let ok = ((self.value)(0.0) - 1.0).abs() < 1e-14
            && (1..1000).all(|k| (self.derivative)(k as f64 / 1000.0) < 0.0)
            && [1.0, 1.5, 3.0].iter().all(|&t| (self.value)(t) == 0.0);
        if ok {
            Ok(())
        } else {
            Err(BvError::InvalidRep(
                "profile must satisfy zeta(0) = 1, zeta' < 0 on (0, 1), zeta = 0 on [1, inf)".into(),
            ))
        }
    }
}

/// Concrete BV functions.
#[derive(Debug, Clone)]
pub enum BVRep {
    /// `A chi_E`.
    Characteristic {
        region: RegionSpec,
        amplitude: f64,
    },
    Smooth(SmoothFn),
    PiecewiseLinear {
        mesh: Arc<Mesh>,
        values: Vec<f64>,
    },
}

impl BVRep {
    /// `A chi_E`, checking `A >= 0` and `E` inside the domain on seeded samples.
    pub fn characteristic(region: RegionSpec, amplitude: f64, domain: &DomainModel) -> Result<Self, BvError> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(BvError::InvalidRep(format!("amplitude {amplitude} must be finite and nonnegative")));
        }
        region.validate(domain)?;
        let (lo, hi) = region.bounding_box(domain);
        let mut rng = ChaCha8Rng::seed_from_u64(MC_SEED);
        let mut x = Vector::zeros(lo.len());
        for _ in 0..CONTAINMENT_SAMPLES {
            for k in 0..lo.len() {
                x[k] = rng.gen_range(lo[k]..hi[k]);
            }
            if region.contains(domain, &x) && !domain.inside(&x) {
                return Err(BvError::RegionOutsideDomain(format!("{region:?} at {:?}", x.as_slice())));
            }
        }
        Ok(BVRep::Characteristic { region, amplitude })
    }

    pub fn piecewise_linear(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self, BvError> {
        if values.len() != mesh.num_vertices() {
            return Err(BvError::InvalidRep(format!("{} values for {} vertices", values.len(), mesh.num_vertices())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(BvError::InvalidRep("non-finite vertex value".into()));
        }
        Ok(BVRep::PiecewiseLinear { mesh, values })
    }

    /// `lambda u` for `lambda >= 0`.
    pub fn scaled(&self, lambda: f64) -> Self {
        match self {
            BVRep::Characteristic { region, amplitude } => {
                BVRep::Characteristic { region: region.clone(), amplitude: amplitude * lambda }
            }
            BVRep::Smooth(f) => BVRep::Smooth(SmoothFn { scale: f.scale * lambda, ..f.clone() }),
            BVRep::PiecewiseLinear { mesh, values } => {
                BVRep::PiecewiseLinear { mesh: mesh.clone(), values: values.iter().map(|v| v * lambda).collect() }
            }
        }
    }
}

/// Relative perimeter `P(E, Omega)`: closed form when available, quadrature
/// otherwise.
pub fn region_perimeter(region: &RegionSpec, domain: &DomainModel) -> Result<(Estimate, Method), BvError> {
    region.validate(domain)?;
    match region.closed_perimeter(domain) {
        Some(p) => Ok((Estimate { value: p, error: 0.0 }, Method::ClosedForm)),
        None => Ok((region.quadrature_perimeter(domain, 1e-12)?, Method::Quadrature)),
    }
}

pub fn total_variation(u: &BVRep, domain: &DomainModel) -> Result<(Estimate, Method), BvError> {
    match u {
        BVRep::Characteristic { region, amplitude } => {
            let (p, m) = region_perimeter(region, domain)?;
            Ok((scale_estimate(p, *amplitude), m))
        }
        BVRep::Smooth(f) => {
            let e = smooth_volume_integral(f, domain, |x| f.gradient(x).norm())?;
            Ok((e, Method::Quadrature))
        }
        BVRep::PiecewiseLinear { mesh, values } => {
            Ok((Estimate { value: mesh.total_variation(values)?, error: 0.0 }, Method::ClosedForm))
        }
    }
}

/// `int_{boundary} |u|`.
pub fn trace_of(u: &BVRep, domain: &DomainModel) -> Result<(Estimate, Method), BvError> {
    match u {
        BVRep::Characteristic { region, amplitude } => {
            region.validate(domain)?;
            match region.closed_trace(domain) {
                Some(t) => Ok((Estimate { value: amplitude * t, error: 0.0 }, Method::ClosedForm)),
                None => Ok((scale_estimate(region.quadrature_trace(domain, 1e-10)?, *amplitude), Method::Quadrature)),
            }
        }
        BVRep::Smooth(f) => Ok((surface_integral(domain, |x| f.value(x).abs())?, Method::Quadrature)),
        BVRep::PiecewiseLinear { mesh, values } => {
            Ok((Estimate { value: mesh.boundary_integral_abs(values)?, error: 0.0 }, Method::ClosedForm))
        }
    }
}

/// `int_Omega |u|`, with the Monte-Carlo seed when that route was used.
pub fn volume_of(u: &BVRep, domain: &DomainModel) -> Result<(Estimate, Method, Option<u64>), BvError> {
    match u {
        BVRep::Characteristic { region, amplitude } => {
            region.validate(domain)?;
            if let Some(v) = region.closed_volume(domain) {
                return Ok((Estimate { value: amplitude * v, error: 0.0 }, Method::ClosedForm, None));
            }
            match region.quadrature_volume(domain, VOLUME_TOL) {
                Ok(e) => Ok((scale_estimate(e, *amplitude), Method::Quadrature, None)),
                Err(BvError::Unsupported(_)) | Err(BvError::Quadrature(_)) => {
                    let (v, se) = region.monte_carlo_volume(domain, MC_SAMPLES, MC_SEED);
                    Ok((
                        scale_estimate(Estimate { value: v, error: se }, *amplitude),
                        Method::MonteCarlo,
                        Some(MC_SEED),
                    ))
                }
                Err(e) => Err(e),
            }
        }
        BVRep::Smooth(f) => Ok((smooth_volume_integral(f, domain, |x| f.value(x).abs())?, Method::Quadrature, None)),
        BVRep::PiecewiseLinear { mesh, values } => {
            Ok((Estimate { value: mesh.integral_abs(values)?, error: 0.0 }, Method::ClosedForm, None))
        }
    }
}

fn scale_estimate(e: Estimate, a: f64) -> Estimate {
    Estimate { value: a * e.value, error: a * e.error }
}

/// `int_Omega g` for an integrand built from a smooth function, organised by
/// the function's support.
fn smooth_volume_integral(
    f: &SmoothFn,
    domain: &DomainModel,
    g: impl Fn(&Vector) -> f64 + Sync,
) -> Result<Estimate, BvError> {
    match f.support {
        Support::Domain => volume_integral(domain, g, VOLUME_TOL),
        Support::Box { lo, hi } => {
            let corners = [[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]];
            let inside = corners.iter().all(|c| {
                let x = Vector::from_row_slice(c);
                domain.inside(&x) && domain.fast_signed_distance(&x).map(|d| d > 0.0).unwrap_or(false)
            });
            if inside && domain.ambient_dim() == 2 {
                // Convex box with corners inside a domain whose complement
                // cannot poke in between them is assumed contained.
                volume_integral_rule(&VolumeRule::Rectangle { lo, hi }, domain, g, VOLUME_TOL)
            } else {
                volume_integral(domain, |x| if domain.inside(x) { g(x) } else { 0.0 }, VOLUME_TOL)
            }
        }
        Support::BoundaryLayer { thickness } => tube_integral(domain, thickness, VOLUME_TOL, |fr, s, t| {
            let x = fr.map(&[s], t)?;
            Ok(g(&x) * fr.jacobian(&[s], t)?)
        }),
    }
}

/// `u(x) = zeta(d(x) / eps)` with gradient `zeta'(d / eps) / eps * n(pi(x))`.
pub fn layer_function(domain: &DomainModel, eps: f64, profile: Profile) -> Result<BVRep, BvError> {
    profile.check()?;
    let limit = 0.5 * domain.reach();
    if !(eps > 0.0 && eps < limit) {
        return Err(BvError::EpsilonTooLarge { eps, limit });
    }
    let dv = domain.clone();
    let dg = domain.clone();
    let dim = domain.ambient_dim();
    let value = move |x: &Vector| {
        let d = dv.fast_signed_distance(x).unwrap_or(f64::NAN);
        // Boundary points come back with distances of either sign at
        // rounding level of the coordinates; they belong to the closure.
        if d < -1e-12 * (1.0 + x.norm()) {
            0.0
        } else {
            (profile.value)(d.max(0.0) / eps)
        }
    };
    let gradient = move |x: &Vector| -> Vector {
        let Ok(p) = dg.fast_nearest(x) else {
            return Vector::from_element(dim, f64::NAN);
        };
        let d = p.distance;
        if !dg.inside(x) || d >= eps {
            return Vector::zeros(dim);
        }
        match dg.chart(p.chart).unit_normal(&p.param) {
            Ok(n) => n * ((profile.derivative)(d / eps) / eps),
            Err(_) => Vector::from_element(dim, f64::NAN),
        }
    };
    Ok(BVRep::Smooth(SmoothFn::new(value, gradient, Support::BoundaryLayer { thickness: eps })))
}

/// Bundles the three integrals with method tags and error estimates.
pub fn report(u: &BVRep, domain: &DomainModel) -> Result<TraceReport, BvError> {
    let (trace, tm) = trace_of(u, domain)?;
    let (tv, vm) = total_variation(u, domain)?;
    let (volume, om, seed) = volume_of(u, domain)?;
    let r = TraceReport::new(trace, tv, volume, [tm, vm, om], seed);
    r.check()?;
    Ok(r)
}

/// Both sides of the tube estimate for `u` supported in the tube of chart
/// `chart` of thickness `eps`:
/// `int |u(g(s))| J(s, 0) ds <= int int (|du/dn| J + |u| |d_t J|) dt ds`.
/// Returns `(trace side, tube side)`.
pub fn tube_trace_bound(domain: &DomainModel, chart: usize, eps: f64, u: &SmoothFn) -> Result<(f64, f64), BvError> {
    let c = domain.chart(chart);
    if c.param_dim() != 1 {
        return Err(BvError::Unsupported("tube bound on surface charts".into()));
    }
    let frame = TubularFrame::new(c.clone(), eps * (1.0 + 1e-9))?;
    let iv = c.domain_box()[0];
    let q = crate::quadrature::Adaptive::new(1e-12, 1e-10);
    let lhs = q.integrate(iv.lo, iv.hi, |s| u.value(&c.eval(&[s])).abs() * frame.area_element(&[s]))?;
    let failure: std::cell::RefCell<Option<GeometryError>> = Default::default();
    let rhs = super::integrals::nested(
        &q,
        (iv.lo, iv.hi),
        |_| (0.0, eps),
        |s, t| {
            let eval = || -> Result<f64, GeometryError> {
                let x = frame.map(&[s], t)?;
                let n = frame.normal(&[s])?;
                let coeffs = frame.t_coefficients(&[s])?;
                let j = crate::geometry::eval_poly(&coeffs, t);
                let dj: f64 = coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c * t.powi(k as i32 - 1)).sum();
                Ok(u.gradient(&x).dot(&n).abs() * j + u.value(&x).abs() * dj.abs())
            };
            eval().unwrap_or_else(|e| {
                failure.borrow_mut().get_or_insert(e);
                0.0
            })
        },
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok((lhs.value, rhs.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_on_annulus() {
        let d = DomainModel::annulus(1.0, 2.0).unwrap();
        let r = report(&BVRep::Smooth(SmoothFn::constant(1.0, 2)), &d).unwrap();
        assert!((r.trace - 6.0 * PI).abs() < 1e-9);
        assert!(r.tv.abs() < 1e-12);
        assert!((r.volume - 3.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn cone_slab_report() {
        let d = DomainModel::cone_corner(1.0, 0.5).unwrap();
        let u = BVRep::characteristic(RegionSpec::cone_slab(1.0, 0.1), 1.0, &d).unwrap();
        let r = report(&u, &d).unwrap();
        assert!((r.trace - 0.2 * 2f64.sqrt()).abs() < 1e-15);
        assert!((r.tv - 0.2).abs() < 1e-15);
        assert!((r.volume - 0.01).abs() < 1e-15);
    }

    #[test]
    fn cusp_slab_volume() {
        let d = DomainModel::cusp(0.5, 0.5).unwrap();
        let r = 0.05_f64;
        let u = BVRep::characteristic(RegionSpec::cusp_slab(0.5, r), 3.0, &d).unwrap();
        let rep = report(&u, &d).unwrap();
        assert!((rep.volume - 3.0 * 0.8 * r.powf(2.5)).abs() < 1e-15);
        assert!((rep.tv - 3.0 * 2.0 * r).abs() < 1e-15);
    }

    #[test]
    fn homogeneity() {
        let d = DomainModel::disc(1.0).unwrap();
        let u = BVRep::Smooth(SmoothFn::new(
            |x| x[0] * x[1] + 0.3,
            |x| Vector::from_vec(vec![x[1], x[0]]),
            Support::Domain,
        ));
        let a = report(&u, &d).unwrap();
        let b = report(&u.scaled(2.5), &d).unwrap();
        for (p, q) in [(a.trace, b.trace), (a.tv, b.tv), (a.volume, b.volume)] {
            assert!((2.5 * p - q).abs() <= 1e-10 * q.abs());
        }
    }

    #[test]
    fn compact_support_has_no_trace() {
        let d = DomainModel::disc(1.0).unwrap();
        let bump = |x: &Vector| {
            let r2 = x.norm_squared() / 0.25;
            if r2 < 1.0 {
                (1.0 - r2).powi(3)
            } else {
                0.0
            }
        };
        let grad = |x: &Vector| {
            let r2 = x.norm_squared() / 0.25;
            if r2 < 1.0 {
                x * (-6.0 / 0.25 * (1.0 - r2).powi(2))
            } else {
                Vector::zeros(2)
            }
        };
        let u = BVRep::Smooth(SmoothFn::new(bump, grad, Support::Box { lo: [-0.5, -0.5], hi: [0.5, 0.5] }));
        let r = report(&u, &d).unwrap();
        assert!(r.trace.abs() < 1e-10);
        // int (1 - r^2/R^2)^3 over the disc of radius R is pi R^2 / 4.
        assert!((r.volume - PI * 0.25 / 4.0).abs() < 1e-8);
    }

    #[test]
    fn layer_function_on_disc() {
        let d = DomainModel::disc(1.0).unwrap();
        let eps = 0.05;
        let u = layer_function(&d, eps, Profile::cubic()).unwrap();
        let r = report(&u, &d).unwrap();
        assert!((r.trace - 2.0 * PI).abs() < 1e-10);
        // |zeta'| integrates to 1 and t |zeta'| to 1/2: tv = 2 pi (1 - eps / 2).
        assert!((r.tv - 2.0 * PI * (1.0 - eps / 2.0)).abs() < 1e-7, "{}", r.tv);
        assert!(r.volume <= eps * 2.0 * PI);
        assert!(matches!(layer_function(&d, 0.6, Profile::cubic()), Err(BvError::EpsilonTooLarge { .. })));
    }

    #[test]
    fn tube_bound_holds() {
        let d = DomainModel::disc(1.0).unwrap();
        let eps = 0.3;
        // Smooth bump in (s, t) around the point at angle 1.
        let u = SmoothFn::new(
            move |x| {
                let t = 1.0 - x.norm();
                let a = x[1].atan2(x[0]) - 1.0;
                if t < eps && a.abs() < 0.5 {
                    (1.0 - (t / eps).powi(2)).powi(2) * (1.0 - (a / 0.5).powi(2)).powi(2)
                } else {
                    0.0
                }
            },
            move |x| {
                let r = x.norm();
                let t = 1.0 - r;
                let a = x[1].atan2(x[0]) - 1.0;
                if !(t < eps && a.abs() < 0.5) {
                    return Vector::zeros(2);
                }
                let ft = (1.0 - (t / eps).powi(2)).powi(2);
                let fa = (1.0 - (a / 0.5).powi(2)).powi(2);
                let dft = 2.0 * (1.0 - (t / eps).powi(2)) * (-2.0 * t / (eps * eps));
                let dfa = 2.0 * (1.0 - (a / 0.5).powi(2)) * (-2.0 * a / 0.25);
                let er = x / r;
                let ea = Vector::from_vec(vec![-x[1], x[0]]) / (r * r);
                -er * (dft * fa) + ea * (ft * dfa)
            },
            Support::BoundaryLayer { thickness: eps },
        );
        let (lhs, rhs) = tube_trace_bound(&d, 0, eps, &u).unwrap();
        assert!(lhs > 0.1);
        assert!(rhs - lhs >= -1e-8, "{lhs} > {rhs}");
    }

    #[test]
    fn pl_report_is_exact() {
        let m = Arc::new(Mesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], 1.0).unwrap());
        let d = DomainModel::square(1.0).unwrap();
        let u = BVRep::piecewise_linear(m, vec![1.0, 0.0, 0.0]).unwrap();
        let r = report(&u, &d).unwrap();
        assert!((r.tv - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((r.volume - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.trace - 1.0).abs() < 1e-15);
    }
}
