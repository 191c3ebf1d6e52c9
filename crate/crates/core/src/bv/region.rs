//! Subsets `E` of a domain with their perimeter, boundary contact and volume.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{
    cusp_patch_halfwidth, cusp_profile, unit_ball_volume, ClosedForm, DomainModel, Vector, VolumeRule,
};
use crate::quadrature::{Adaptive, Estimate};

use super::integrals::{surface_integral, surface_integral_tol, tube_integral, volume_integral_rule};
use super::BvError;

pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;

/// Constructive subsets of a domain.
#[derive(Clone)]
pub enum RegionSpec {
    /// `{psi(|x'|) < x_N < psi(r)}` in the cusp domain.
    CuspSlab { alpha: f64, r: f64, dim: usize },
    /// `{L|x'| < x_N < L r, |x'| < r}` in the cone corner.
    ConeSlab { slope: f64, r: f64, dim: usize },
    /// `{x in Omega : d(x) < delta}` for the domain it is evaluated on.
    Shell { delta: f64 },
    /// `{x in Omega : f(x) < level}`.
    Sublevel { f: ScalarFn, level: f64 },
}

impl fmt::Debug for RegionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionSpec::CuspSlab { alpha, r, dim } => write!(f, "CuspSlab(alpha={alpha}, r={r}, N={dim})"),
            RegionSpec::ConeSlab { slope, r, dim } => write!(f, "ConeSlab(L={slope}, r={r}, N={dim})"),
            RegionSpec::Shell { delta } => write!(f, "Shell(delta={delta})"),
            RegionSpec::Sublevel { level, .. } => write!(f, "Sublevel(c={level})"),
        }
    }
}

/// Samples used by [`RegionSpec::monte_carlo_volume`] per parallel batch.
const MC_BATCH: usize = 4096;

impl RegionSpec {
    pub fn cusp_slab(alpha: f64, r: f64) -> Self {
        RegionSpec::CuspSlab { alpha, r, dim: 2 }
    }

    pub fn cone_slab(slope: f64, r: f64) -> Self {
        RegionSpec::ConeSlab { slope, r, dim: 2 }
    }

    pub fn sublevel(f: impl Fn(&Vector) -> f64 + Send + Sync + 'static, level: f64) -> Self {
        RegionSpec::Sublevel { f: Arc::new(f), level }
    }

    pub fn dim(&self, domain: &DomainModel) -> usize {
        match self {
            RegionSpec::CuspSlab { dim, .. } | RegionSpec::ConeSlab { dim, .. } => *dim,
            _ => domain.ambient_dim(),
        }
    }

    /// Checks parameters and, for slabs, that they fit the domain's patch.
    pub fn validate(&self, domain: &DomainModel) -> Result<(), BvError> {
        match *self {
            RegionSpec::CuspSlab { alpha, r, dim } => {
                if !(alpha > 0.0 && alpha <= 1.0 && r > 0.0 && dim >= 2) {
                    return Err(BvError::InvalidRegion(format!("{self:?}")));
                }
                match domain.closed_form() {
                    Some(ClosedForm::Cusp { alpha: a, height }) if a == alpha && dim == domain.ambient_dim() => {
                        let half = cusp_patch_halfwidth(alpha, height);
                        if r >= half {
                            return Err(BvError::PatchExceeded { r, limit: half });
                        }
                        Ok(())
                    }
                    _ => Err(BvError::WrongDomain(format!("{self:?} needs the matching cusp domain"))),
                }
            }
            RegionSpec::ConeSlab { slope, r, dim } => {
                if !(slope > 0.0 && r > 0.0 && dim >= 2) {
                    return Err(BvError::InvalidRegion(format!("{self:?}")));
                }
                match domain.closed_form() {
                    Some(ClosedForm::ConeCorner { slope: l, height }) if l == slope && dim == domain.ambient_dim() => {
                        if slope * r >= height {
                            return Err(BvError::PatchExceeded { r, limit: height / slope });
                        }
                        Ok(())
                    }
                    _ => Err(BvError::WrongDomain(format!("{self:?} needs the matching cone domain"))),
                }
            }
            RegionSpec::Shell { delta } => {
                let reach = domain.reach();
                if !(delta > 0.0 && delta < reach) {
                    return Err(BvError::InvalidRegion(format!(
                        "shell width {delta} must lie in (0, reach = {reach})"
                    )));
                }
                Ok(())
            }
            RegionSpec::Sublevel { level, .. } => {
                if !level.is_finite() {
                    return Err(BvError::InvalidRegion("non-finite sublevel".into()));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, domain: &DomainModel, x: &Vector) -> bool {
        match *self {
            RegionSpec::CuspSlab { alpha, r, .. } => {
                let rho = x.rows(0, x.len() - 1).norm();
                let top = cusp_profile(alpha, r);
                let xn = x[x.len() - 1];
                cusp_profile(alpha, rho) < xn && xn < top
            }
            RegionSpec::ConeSlab { slope, r, .. } => {
                let rho = x.rows(0, x.len() - 1).norm();
                let xn = x[x.len() - 1];
                slope * rho < xn && xn < slope * r && rho < r
            }
            RegionSpec::Shell { delta } => {
                domain.inside(x) && domain.fast_signed_distance(x).map(|d| d < delta).unwrap_or(false)
            }
            RegionSpec::Sublevel { ref f, level } => domain.inside(x) && f(x) < level,
        }
    }

    /// Box containing the region.
    pub fn bounding_box(&self, domain: &DomainModel) -> (Vector, Vector) {
        let n = self.dim(domain);
        let slab = |r: f64, top: f64| {
            let mut lo = Vector::from_element(n, -r);
            let mut hi = Vector::from_element(n, r);
            lo[n - 1] = 0.0;
            hi[n - 1] = top;
            (lo, hi)
        };
        match *self {
            RegionSpec::CuspSlab { alpha, r, .. } => slab(r, cusp_profile(alpha, r)),
            RegionSpec::ConeSlab { slope, r, .. } => slab(r, slope * r),
            _ => domain.bounding_box(),
        }
    }

    pub fn closed_volume(&self, domain: &DomainModel) -> Option<f64> {
        match *self {
            RegionSpec::CuspSlab { alpha, r, dim } => {
                let n = dim as f64;
                Some(unit_ball_volume(dim - 1) / (n + alpha) * r.powf(n + alpha))
            }
            RegionSpec::ConeSlab { slope, r, dim } => {
                Some(unit_ball_volume(dim - 1) * slope / dim as f64 * r.powi(dim as i32))
            }
            RegionSpec::Shell { delta } => {
                let n = domain.ambient_dim() as i32;
                let w = unit_ball_volume(domain.ambient_dim());
                match domain.closed_form()? {
                    ClosedForm::Ball { radius: b } => Some(w * (b.powi(n) - (b - delta).powi(n))),
                    ClosedForm::Annulus { inner: a, outer: b } => {
                        Some(w * ((a + delta).powi(n) - a.powi(n) + b.powi(n) - (b - delta).powi(n)))
                    }
                    _ => None,
                }
            }
            RegionSpec::Sublevel { .. } => None,
        }
    }

    pub fn closed_perimeter(&self, domain: &DomainModel) -> Option<f64> {
        match *self {
            RegionSpec::CuspSlab { r, dim, .. } | RegionSpec::ConeSlab { r, dim, .. } => {
                Some(unit_ball_volume(dim - 1) * r.powi(dim as i32 - 1))
            }
            RegionSpec::Shell { delta } => {
                let n = domain.ambient_dim();
                let s = n as f64 * unit_ball_volume(n);
                let p = n as i32 - 1;
                match domain.closed_form()? {
                    ClosedForm::Ball { radius: b } => Some(s * (b - delta).powi(p)),
                    ClosedForm::Annulus { inner: a, outer: b } => Some(s * ((a + delta).powi(p) + (b - delta).powi(p))),
                    _ => None,
                }
            }
            RegionSpec::Sublevel { .. } => None,
        }
    }

    /// `H_{N-1}(boundary(E) cap boundary(Omega))` in closed form. The cusp slab's
    /// contact area is the radial integral `(N-1) w int rho^{N-2} sqrt(1 + rho^{2a})`,
    /// evaluated as `tv + excess` with the excess from [`cusp_trace_excess`].
    pub fn closed_trace(&self, domain: &DomainModel) -> Option<f64> {
        match *self {
            RegionSpec::CuspSlab { alpha, r, dim } => {
                let base = unit_ball_volume(dim - 1) * r.powi(dim as i32 - 1);
                Some(base + cusp_trace_excess(alpha, dim, r).ok()?.value)
            }
            RegionSpec::ConeSlab { slope, r, dim } => {
                Some((1.0 + slope * slope).sqrt() * unit_ball_volume(dim - 1) * r.powi(dim as i32 - 1))
            }
            RegionSpec::Shell { .. } => domain.closed_form().and_then(|c| c.surface_area(domain.ambient_dim())),
            RegionSpec::Sublevel { .. } => None,
        }
    }

    /// Volume by quadrature over the region's own description.
    pub fn quadrature_volume(&self, domain: &DomainModel, tol: f64) -> Result<Estimate, BvError> {
        self.validate(domain)?;
        match *self {
            RegionSpec::CuspSlab { alpha, r, dim: 2 } => {
                let top = cusp_profile(alpha, r);
                let rule = VolumeRule::Slices {
                    breaks: vec![-r, 0.0, r],
                    lower: Arc::new(move |x| cusp_profile(alpha, x)),
                    upper: Arc::new(move |_| top),
                };
                volume_integral_rule(&rule, domain, |_| 1.0, tol)
            }
            RegionSpec::ConeSlab { slope, r, dim: 2 } => {
                let rule = VolumeRule::Slices {
                    breaks: vec![-r, 0.0, r],
                    lower: Arc::new(move |x: f64| slope * x.abs()),
                    upper: Arc::new(move |_| slope * r),
                };
                volume_integral_rule(&rule, domain, |_| 1.0, tol)
            }
            RegionSpec::Shell { delta } => tube_integral(domain, delta, tol, |fr, s, t| Ok(fr.jacobian(&[s], t)?)),
            RegionSpec::Sublevel { ref f, level } => {
                crate::bv::volume_integral(domain, |x| if f(x) < level { 1.0 } else { 0.0 }, tol)
            }
            _ => Err(BvError::Unsupported(format!("quadrature for {self:?}"))),
        }
    }

    /// `P(E, Omega)` by quadrature over the parameterised pieces of the
    /// boundary of `E` inside `Omega`.
    pub fn quadrature_perimeter(&self, domain: &DomainModel, tol: f64) -> Result<Estimate, BvError> {
        self.validate(domain)?;
        let q = Adaptive::new(tol * 1e-3, tol);
        match *self {
            // The flat top `{|x_1| < r, x_2 = top}`.
            RegionSpec::CuspSlab { r, dim: 2, .. } | RegionSpec::ConeSlab { r, dim: 2, .. } => {
                Ok(q.integrate(-r, r, |_| 1.0)?)
            }
            // The parallel curves `t = delta` in every chart tube.
            RegionSpec::Shell { delta } if domain.ambient_dim() == 2 => {
                let mut total = Estimate::default();
                for (i, chart) in domain.charts().iter().enumerate() {
                    let frame = crate::geometry::TubularFrame::new(chart.clone(), 2.0 * delta)?;
                    let iv = chart.domain_box()[0];
                    let mut failure = None;
                    let e = q.integrate(iv.lo, iv.hi, |s| {
                        let w = domain.pou_weight(i, &[s]);
                        if w == 0.0 {
                            return 0.0;
                        }
                        match frame.jacobian(&[s], delta) {
                            Ok(j) => w * j,
                            Err(err) => {
                                failure.get_or_insert(err);
                                0.0
                            }
                        }
                    })?;
                    if let Some(err) = failure {
                        return Err(err.into());
                    }
                    total = total + e;
                }
                Ok(total)
            }
            _ => Err(BvError::UnsupportedRegion(format!("{self:?} has no parameterised boundary"))),
        }
    }

    /// Contact area `H_{N-1}(boundary(E) cap boundary(Omega))` by quadrature
    /// along the domain's charts.
    pub fn quadrature_trace(&self, domain: &DomainModel, tol: f64) -> Result<Estimate, BvError> {
        self.validate(domain)?;
        match *self {
            RegionSpec::CuspSlab { alpha, r, dim: 2 } => {
                let top = cusp_profile(alpha, r);
                contact_length(domain, &[[-r, top], [0.0, 0.0], [r, top]], tol)
            }
            RegionSpec::ConeSlab { slope, r, dim: 2 } => {
                contact_length(domain, &[[-r, slope * r], [0.0, 0.0], [r, slope * r]], tol)
            }
            RegionSpec::Shell { .. } => surface_integral(domain, |_| 1.0),
            RegionSpec::Sublevel { ref f, level } => {
                surface_integral_tol(domain, |x| if f(x) < level { 1.0 } else { 0.0 }, tol, tol)
            }
            _ => Err(BvError::Unsupported(format!("quadrature for {self:?}"))),
        }
    }

    /// Hit-or-miss volume over the bounding box with a seeded generator.
    /// Returns the estimate and its standard error.
    pub fn monte_carlo_volume(&self, domain: &DomainModel, samples: usize, seed: u64) -> (f64, f64) {
        let (lo, hi) = self.bounding_box(domain);
        let n = lo.len();
        let box_vol: f64 = (0..n).map(|k| hi[k] - lo[k]).product();
        let batches = samples.div_ceil(MC_BATCH);
        let hits: usize = (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let count = MC_BATCH.min(samples - b * MC_BATCH);
                let mut x = Vector::zeros(n);
                (0..count)
                    .filter(|_| {
                        for k in 0..n {
                            x[k] = rng.gen_range(lo[k]..hi[k]);
                        }
                        self.contains(domain, &x)
                    })
                    .count()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        let p = hits as f64 / samples as f64;
        let se = box_vol * (p * (1.0 - p) / samples as f64).sqrt();
        (box_vol * p, se)
    }
}

/// Length of the boundary path through `points` (consecutive points on a
/// common chart), integrating `J(s, 0)` between their chart parameters.
fn contact_length(domain: &DomainModel, points: &[[f64; 2]], tol: f64) -> Result<Estimate, BvError> {
    let q = Adaptive::new(tol * 1e-3, tol);
    let mut total = Estimate::default();
    for w in points.windows(2) {
        let p = Vector::from_row_slice(&w[0]);
        let r = Vector::from_row_slice(&w[1]);
        let found = domain
            .charts()
            .iter()
            .find_map(|c| Some((c, c.locate(&p)?, c.locate(&r)?)))
            .ok_or_else(|| BvError::Unsupported("contact path leaves every chart".into()))?;
        let (chart, sp, sr) = found;
        let (a, b) = (sp[0].min(sr[0]), sp[0].max(sr[0]));
        total = total + q.integrate(a, b, |s| chart.tangents(&[s]).column(0).norm())?;
    }
    Ok(total)
}

/// `int_{|x'| < r} (sqrt(1 + |x'|^{2 alpha}) - 1) dx'`, computed without the
/// cancellation of subtracting two nearly equal integrals:
/// `(N-1) w_{N-1} int_0^r rho^{N-2} rho^{2a} / (1 + sqrt(1 + rho^{2a})) d rho`,
/// with `rho = r u^2` to smooth the endpoint behaviour at 0.
pub fn cusp_trace_excess(alpha: f64, dim: usize, r: f64) -> Result<Estimate, BvError> {
    if !(alpha > 0.0 && alpha <= 1.0 && r > 0.0 && dim >= 2) {
        return Err(BvError::InvalidRegion(format!("cusp excess at alpha={alpha}, r={r}, N={dim}")));
    }
    let k = (dim - 1) as f64 * unit_ball_volume(dim - 1);
    let p = (dim - 2) as i32;
    let q = Adaptive::new(0.0, 1e-14);
    let e = q.integrate(0.0, 1.0, |u| {
        let rho = r * u * u;
        let g = rho.powf(2.0 * alpha);
        rho.powi(p) * g / (1.0 + (1.0 + g).sqrt()) * 2.0 * r * u
    })?;
    Ok(Estimate { value: k * e.value, error: k * e.error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cone_slab_closed_forms() {
        let d = DomainModel::cone_corner(1.0, 0.5).unwrap();
        let e = RegionSpec::cone_slab(1.0, 0.1);
        assert!((e.closed_perimeter(&d).unwrap() - 0.2).abs() < 1e-15);
        assert!((e.closed_trace(&d).unwrap() - 0.2 * 2f64.sqrt()).abs() < 1e-15);
        assert!((e.closed_volume(&d).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn slab_quadrature_matches_closed_forms() {
        let cases = [
            (DomainModel::cone_corner(2.0, 0.5).unwrap(), RegionSpec::cone_slab(2.0, 0.07)),
            (DomainModel::cusp(0.5, 0.5).unwrap(), RegionSpec::cusp_slab(0.5, 0.03)),
            (DomainModel::cusp(0.25, 0.5).unwrap(), RegionSpec::cusp_slab(0.25, 0.2)),
        ];
        for (d, e) in cases {
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            let v = e.quadrature_volume(&d, 1e-12).unwrap().value;
            assert!(rel(v, e.closed_volume(&d).unwrap()) < 1e-8, "{e:?} volume");
            let p = e.quadrature_perimeter(&d, 1e-12).unwrap().value;
            assert!(rel(p, e.closed_perimeter(&d).unwrap()) < 1e-8, "{e:?} perimeter");
            let t = e.quadrature_trace(&d, 1e-12).unwrap().value;
            assert!(rel(t, e.closed_trace(&d).unwrap()) < 1e-8, "{e:?} trace {t}");
        }
    }

    #[test]
    fn shell_of_annulus() {
        let d = DomainModel::annulus(1.0, 2.0).unwrap();
        let e = RegionSpec::Shell { delta: 0.1 };
        let p = e.closed_perimeter(&d).unwrap();
        assert!((p - 2.0 * PI * (1.1 + 1.9)).abs() < 1e-12);
        let pq = e.quadrature_perimeter(&d, 1e-12).unwrap().value;
        assert!((pq - p).abs() < 1e-8 * p, "{pq} vs {p}");
        let vq = e.quadrature_volume(&d, 1e-12).unwrap().value;
        let v = e.closed_volume(&d).unwrap();
        assert!((vq - v).abs() < 1e-8 * v, "{vq} vs {v}");
    }

    #[test]
    fn excess_matches_binomial_series() {
        // 2 sum_k C(1/2, k) r^{1 + 2 a k} / (1 + 2 a k), k >= 1, N = 2.
        let (alpha, r) = (0.5, 0.01_f64);
        let mut series = 0.0;
        let mut c = 1.0;
        for k in 1..40 {
            c *= (0.5 - (k - 1) as f64) / k as f64;
            let e = 1.0 + 2.0 * alpha * k as f64;
            series += 2.0 * c * r.powf(e) / e;
        }
        let got = cusp_trace_excess(alpha, 2, r).unwrap().value;
        assert!((got - series).abs() < 1e-13 * series, "{got} vs {series}");
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let d = DomainModel::cusp(0.5, 0.5).unwrap();
        let e = RegionSpec::cusp_slab(0.5, 0.3);
        let (v, se) = e.monte_carlo_volume(&d, 100_000, 7);
        let exact = e.closed_volume(&d).unwrap();
        assert!((v - exact).abs() < 3.0 * se, "{v} vs {exact} (se {se})");
        assert_eq!(e.monte_carlo_volume(&d, 100_000, 7), (v, se));
    }

    #[test]
    fn patch_is_enforced() {
        let d = DomainModel::cone_corner(1.0, 0.5).unwrap();
        assert!(matches!(RegionSpec::cone_slab(1.0, 0.6).validate(&d), Err(BvError::PatchExceeded { .. })));
        assert!(matches!(RegionSpec::cusp_slab(0.5, 0.1).validate(&d), Err(BvError::WrongDomain(_))));
    }
}
