//! Surface, volume and tube integrals over catalog domains.

use std::f64::consts::PI;

use crate::geometry::{DomainModel, TubularFrame, Vector, VolumeRule};
use crate::quadrature::{Adaptive, Estimate, QuadratureError};

use super::BvError;

/// Absolute tolerance of boundary integrals.
pub const SURFACE_TOL: f64 = 1e-10;

/// `sum_i int_{U_i} phi_i(g_i(s)) f(g_i(s)) J_i(s, 0) ds`, adaptive per chart.
pub fn surface_integral(domain: &DomainModel, f: impl Fn(&Vector) -> f64 + Sync) -> Result<Estimate, BvError> {
    surface_integral_tol(domain, f, SURFACE_TOL, 1e-13)
}

pub fn surface_integral_tol(
    domain: &DomainModel,
    f: impl Fn(&Vector) -> f64 + Sync,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate, BvError> {
    let n = domain.charts().len().max(1) as f64;
    let q = Adaptive::new(abs_tol / n, rel_tol);
    let mut total = Estimate::default();
    for (i, chart) in domain.charts().iter().enumerate() {
        let density = |s: &[f64]| {
            let w = domain.pou_weight(i, s);
            if w == 0.0 {
                return 0.0;
            }
            let area = crate::geometry::wedge_of(&chart.tangents(s)).norm();
            w * f(&chart.eval(s)) * area
        };
        let est = match chart.param_dim() {
            1 => {
                let iv = chart.domain_box()[0];
                q.integrate(iv.lo, iv.hi, |s| density(&[s]))?
            }
            2 => {
                let b = chart.domain_box();
                nested(&q, (b[0].lo, b[0].hi), |_| (b[1].lo, b[1].hi), |u, v| density(&[u, v]))?
            }
            p => return Err(BvError::Unsupported(format!("surface integrals over {p}-parameter charts"))),
        };
        total = total + est;
    }
    Ok(total)
}

/// Iterated adaptive integral `int_a^b int_{lo(u)}^{hi(u)} f(u, v) dv du`.
/// The inner tolerance is tightened so the outer rule sees a smooth integrand.
pub fn nested(
    q: &Adaptive,
    (a, b): (f64, f64),
    inner: impl Fn(f64) -> (f64, f64),
    f: impl Fn(f64, f64) -> f64,
) -> Result<Estimate, QuadratureError> {
    let len = (b - a).abs().max(f64::MIN_POSITIVE);
    let qi = Adaptive::new(0.1 * q.abs_tol / len, 0.1 * q.rel_tol);
    let mut inner_err = 0.0;
    let outer = q.try_integrate(a, b, |u| {
        let (lo, hi) = inner(u);
        let e = qi.integrate(lo, hi, |v| f(u, v))?;
        inner_err = f64::max(inner_err, e.error);
        Ok(e.value)
    })?;
    Ok(Estimate { value: outer.value, error: outer.error + inner_err * len })
}

/// `int_Omega f dx` following the domain's volume rule. `tol` is relative,
/// with an absolute floor of `tol * 1e-3`.
pub fn volume_integral(domain: &DomainModel, f: impl Fn(&Vector) -> f64 + Sync, tol: f64) -> Result<Estimate, BvError> {
    volume_integral_rule(domain.volume_rule(), domain, f, tol)
}

pub fn volume_integral_rule(
    rule: &VolumeRule,
    domain: &DomainModel,
    f: impl Fn(&Vector) -> f64 + Sync,
    tol: f64,
) -> Result<Estimate, BvError> {
    let q = Adaptive::new(tol * 1e-3, tol);
    let v2 = |x: f64, y: f64| Vector::from_vec(vec![x, y]);
    let est = match rule {
        VolumeRule::Polar { inner, outer } => {
            let (a, b) = (*inner, *outer);
            // Quarter turns keep the angular integrand's kinks few per piece.
            let mut total = Estimate::default();
            for k in 0..4 {
                let th0 = k as f64 * PI / 2.0;
                total = total
                    + nested(
                        &Adaptive::new(q.abs_tol / 4.0, q.rel_tol),
                        (th0, th0 + PI / 2.0),
                        |_| (a, b),
                        |th, r| f(&v2(r * th.cos(), r * th.sin())) * r,
                    )?;
            }
            total
        }
        VolumeRule::Spherical { radius } => {
            let b = *radius;
            let qo = Adaptive::new(q.abs_tol, q.rel_tol);
            let qm = Adaptive::new(0.1 * q.abs_tol / (2.0 * PI), 0.1 * q.rel_tol);
            qo.try_integrate(0.0, 2.0 * PI, |ph| {
                nested(
                    &qm,
                    (0.0, PI),
                    |_| (0.0, b),
                    |th, r| {
                        let x = Vector::from_vec(vec![r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]);
                        f(&x) * r * r * th.sin()
                    },
                )
                .map(|e| e.value)
            })?
        }
        VolumeRule::Rectangle { lo, hi } => nested(&q, (lo[0], hi[0]), |_| (lo[1], hi[1]), |x, y| f(&v2(x, y)))?,
        VolumeRule::Slices { breaks, lower, upper } => {
            let mut total = Estimate::default();
            for w in breaks.windows(2) {
                total = total + nested(&q, (w[0], w[1]), |x| (lower(x), upper(x)), |x, y| f(&v2(x, y)))?;
            }
            total
        }
        VolumeRule::Clipped { lo, hi, cells, depth } => clipped_integral(domain, &f, *lo, *hi, *cells, *depth),
    };
    Ok(est)
}

/// Tensor cells over `[lo, hi]`; cells whose corners and 3x3 Gauss nodes
/// disagree on containment are quartered down to `depth`, then assigned by their centre.
fn clipped_integral(
    domain: &DomainModel,
    f: &(impl Fn(&Vector) -> f64 + Sync),
    lo: [f64; 2],
    hi: [f64; 2],
    cells: usize,
    depth: u32,
) -> Estimate {
    use rayon::prelude::*;
    let dx = (hi[0] - lo[0]) / cells as f64;
    let dy = (hi[1] - lo[1]) / cells as f64;
    let parts: Vec<Estimate> = (0..cells * cells)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % cells, k / cells);
            let x0 = lo[0] + i as f64 * dx;
            let y0 = lo[1] + j as f64 * dy;
            clip_cell(domain, f, [x0, y0], [dx, dy], depth)
        })
        .collect();
    parts.into_iter().fold(Estimate::default(), |a, b| a + b)
}

fn clip_cell(
    domain: &DomainModel,
    f: &impl Fn(&Vector) -> f64,
    origin: [f64; 2],
    size: [f64; 2],
    depth: u32,
) -> Estimate {
    const NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
    const WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let area = size[0] * size[1];
    let mut inside = 0;
    let mut sum = 0.0;
    let corners_in = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        .iter()
        .filter(|(a, b)| domain.inside(&Vector::from_vec(vec![origin[0] + a * size[0], origin[1] + b * size[1]])))
        .count();
    for (a, wa) in NODES.iter().zip(WEIGHTS) {
        for (b, wb) in NODES.iter().zip(WEIGHTS) {
            let x = Vector::from_vec(vec![origin[0] + a * size[0], origin[1] + b * size[1]]);
            if domain.inside(&x) {
                inside += 1;
                sum += wa * wb * f(&x);
            }
        }
    }
    match (inside, corners_in) {
        (9, 4) => Estimate { value: sum * area, error: 0.0 },
        (0, 0) => Estimate::default(),
        _ if depth == 0 => {
            let c = Vector::from_vec(vec![origin[0] + 0.5 * size[0], origin[1] + 0.5 * size[1]]);
            let v = if domain.inside(&c) { f(&c) * area } else { 0.0 };
            Estimate { value: v, error: (f(&c) * area).abs() }
        }
        _ => {
            let half = [0.5 * size[0], 0.5 * size[1]];
            let mut total = Estimate::default();
            for (ox, oy) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                let o = [origin[0] + ox * half[0], origin[1] + oy * half[1]];
                total = total + clip_cell(domain, f, o, half, depth - 1);
            }
            total
        }
    }
}

/// Integral over the collar `{h_i(s, t) : 0 < t < thickness}` assembled with
/// the partition of unity: `sum_i int phi_i(s) int_0^eps F(i, s, t) dt ds`.
/// `F` receives the frame so it can use `J`, the normal and the tube map.
/// Planar (1-parameter) charts only.
pub fn tube_integral(
    domain: &DomainModel,
    thickness: f64,
    tol: f64,
    f: impl Fn(&TubularFrame, f64, f64) -> Result<f64, BvError>,
) -> Result<Estimate, BvError> {
    let mut total = Estimate::default();
    let n = domain.charts().len().max(1) as f64;
    let q = Adaptive::new(tol * 1e-3 / n, tol);
    for (i, chart) in domain.charts().iter().enumerate() {
        if chart.param_dim() != 1 {
            return Err(BvError::Unsupported("tube integrals over surface charts".into()));
        }
        let frame = TubularFrame::new(chart.clone(), thickness.max(f64::MIN_POSITIVE) * (1.0 + 1e-9))?;
        let iv = chart.domain_box()[0];
        let len = iv.len();
        let qi = Adaptive::new(0.1 * q.abs_tol / len, 0.1 * q.rel_tol);
        let mut failure: Option<BvError> = None;
        let est = q.try_integrate(iv.lo, iv.hi, |s| {
            let w = domain.pou_weight(i, &[s]);
            if w == 0.0 {
                return Ok(0.0);
            }
            let e = qi.try_integrate(0.0, thickness, |t| match f(&frame, s, t) {
                Ok(v) => Ok(v),
                Err(err) => {
                    failure.get_or_insert(err);
                    Ok(0.0)
                }
            })?;
            Ok(w * e.value)
        })?;
        if let Some(err) = failure {
            return Err(err);
        }
        total = total + est;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circumferences() {
        let d = DomainModel::disc(1.5).unwrap();
        let e = surface_integral(&d, |_| 1.0).unwrap();
        assert!((e.value - 3.0 * PI).abs() < 1e-10);
        let a = DomainModel::annulus(1.0, 2.0).unwrap();
        let e = surface_integral(&a, |_| 1.0).unwrap();
        assert!((e.value - 6.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn abs_x1_on_annulus() {
        // int |cos| over a turn is 4, so each circle gives 4 r^2 / r ... = 4 r
        let a = DomainModel::annulus(1.0, 2.0).unwrap();
        let e = surface_integral(&a, |x| x[0].abs()).unwrap();
        assert!((e.value - 4.0 * (1.0 + 4.0)).abs() < 1e-9, "{}", e.value);
    }

    #[test]
    fn sphere_area() {
        let d = DomainModel::ball(1.0, 3).unwrap();
        let e = surface_integral(&d, |_| 1.0).unwrap();
        assert!((e.value - 4.0 * PI).abs() < 1e-8, "{}", e.value);
    }

    #[test]
    fn volumes_by_rule() {
        let cases = [
            DomainModel::annulus(1.0, 2.0).unwrap(),
            DomainModel::square(2.0).unwrap(),
            DomainModel::cone_corner(1.0, 0.5).unwrap(),
            DomainModel::cusp(0.5, 0.5).unwrap(),
            DomainModel::ball(1.0, 3).unwrap(),
        ];
        for d in cases {
            let v = volume_integral(&d, |_| 1.0, 1e-10).unwrap().value;
            let exact = d.closed_form().unwrap().volume(d.ambient_dim()).unwrap();
            assert!((v - exact).abs() < 1e-8 * exact, "{}: {v} vs {exact}", d.name());
        }
    }

    #[test]
    fn clipped_fallback_is_close() {
        let d = DomainModel::disc(1.0).unwrap();
        let rule = VolumeRule::Clipped { lo: [-1.0, -1.0], hi: [1.0, 1.0], cells: 32, depth: 8 };
        let v = volume_integral_rule(&rule, &d, |_| 1.0, 1e-8).unwrap().value;
        assert!((v - PI).abs() < 1e-4, "{v}");
    }

    #[test]
    fn collar_area_of_disc() {
        let d = DomainModel::disc(1.0).unwrap();
        let eps = 0.1;
        let e = tube_integral(&d, eps, 1e-12, |fr, s, t| Ok(fr.jacobian(&[s], t)?)).unwrap();
        assert!((e.value - PI * (1.0 - 0.81)).abs() < 1e-9, "{}", e.value);
    }
}
