//! Closed forms for the `C^{1,alpha}` cusp profile `psi(t) = |t|^{1+alpha}/(1+alpha)`.

use super::GeometryError;

/// Profile height `|t|^{1+alpha} / (1+alpha)`.
pub fn cusp_profile(alpha: f64, t: f64) -> f64 {
    t.abs().powf(1.0 + alpha) / (1.0 + alpha)
}

/// Half width of the cusp patch below height `eta`: `psi(s) = eta`.
pub fn cusp_patch_halfwidth(alpha: f64, eta: f64) -> f64 {
    ((1.0 + alpha) * eta).powf(1.0 / (1.0 + alpha))
}

/// Curvature of the normal section `x(t) = t (v, 0) + psi(t) e_N`:
/// `alpha |t|^{alpha-1} / (1 + t^{2 alpha})^{3/2}`.
pub fn cusp_normal_curvature(alpha: f64, t: f64) -> Result<f64, GeometryError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GeometryError::Precondition(format!("alpha = {alpha} outside (0, 1]")));
    }
    if t == 0.0 && alpha < 1.0 {
        return Err(GeometryError::DomainError("normal curvature diverges at the cusp apex".into()));
    }
    let at = t.abs();
    Ok(alpha * at.powf(alpha - 1.0) / (1.0 + at.powf(2.0 * alpha)).powf(1.5))
}

/// Curvature of the planar normal section from second differences of the
/// curve `t -> (t, psi(t))`, step `h` (default 1e-4).
pub fn normal_section_curvature_fd(alpha: f64, t: f64, h: f64) -> f64 {
    let x = |s: f64| [s, cusp_profile(alpha, s)];
    let p = x(t + h);
    let m = x(t - h);
    let c = x(t);
    let d1 = [(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)];
    let d2 = [(p[0] - 2.0 * c[0] + m[0]) / (h * h), (p[1] - 2.0 * c[1] + m[1]) / (h * h)];
    let speed2 = d1[0] * d1[0] + d1[1] * d1[1];
    let speed = speed2.sqrt();
    let tan = [d1[0] / speed, d1[1] / speed];
    let along = d2[0] * tan[0] + d2[1] * tan[1];
    let perp = [d2[0] - along * tan[0], d2[1] - along * tan[1]];
    perp[0].hypot(perp[1]) / speed2
}

/// Sign test showing that the sphere of radius `sigma` centred on the axis at
/// height `sigma` leaves the cusp domain: some `t` in `(0, sigma)` has the
/// sphere's lower profile `sigma - sqrt(sigma^2 - t^2)` below `psi(t)`, while
/// at `t = sigma` the sphere is above the profile. Sampled on 10^4 points.
///
/// `sigma` must keep the comparison inside the patch of height `eta = 0.5`.
pub fn cusp_reach_witness(alpha: f64, sigma: f64) -> Result<bool, GeometryError> {
    cusp_reach_witness_in_patch(alpha, sigma, 0.5)
}

pub fn cusp_reach_witness_in_patch(alpha: f64, sigma: f64, eta: f64) -> Result<bool, GeometryError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GeometryError::Precondition(format!("alpha = {alpha} outside (0, 1]")));
    }
    let half = cusp_patch_halfwidth(alpha, eta);
    if !(sigma > 0.0 && sigma <= half && sigma <= eta) {
        return Err(GeometryError::Precondition(format!(
            "sigma = {sigma} leaves the cusp patch (half width {half}, height {eta})"
        )));
    }
    let sphere = |t: f64| sigma - (sigma * sigma - t * t).max(0.0).sqrt();
    let samples = 10_000;
    let dips = (1..samples).map(|k| sigma * k as f64 / samples as f64).any(|t| sphere(t) < cusp_profile(alpha, t));
    Ok(dips && sphere(sigma) > cusp_profile(alpha, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_at_alpha_one() {
        for t in [0.3, -1.0, 2.5] {
            let k = cusp_normal_curvature(1.0, t).unwrap();
            assert!((k - 1.0 / (1.0 + t * t).powf(1.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn curvature_half_alpha_at_one() {
        let k = cusp_normal_curvature(0.5, 1.0).unwrap();
        assert!((k - 0.5 / 2f64.powf(1.5)).abs() < 1e-15);
        assert!((k - 0.176_776_695).abs() < 1e-9);
    }

    #[test]
    fn curvature_blows_up_toward_the_apex() {
        let mut prev = 0.0;
        for e in 1..=6 {
            let k = cusp_normal_curvature(0.5, 10f64.powi(-e)).unwrap();
            assert!(k > prev);
            prev = k;
        }
        assert!(cusp_normal_curvature(0.5, 0.0).is_err());
        assert!(cusp_normal_curvature(1.0, 0.0).is_ok());
    }

    #[test]
    fn witness_examples() {
        assert!(cusp_reach_witness(0.5, 0.01).unwrap());
        assert!(cusp_reach_witness(0.5, 10.0).is_err());
        // alpha = 1: recorded, no claim
        let _ = cusp_reach_witness(1.0, 0.1).unwrap();
    }
}
