use std::sync::Arc;

use proptest::prelude::*;

use tracelab_core::bv::{self, BVRep, Profile, TraceReport};
use tracelab_core::estimator::{build_mesh, feasible_objective, minimize_quotient, QuotientProblem, Solver};
use tracelab_core::geometry::{unit_ball_volume, DomainModel, Vector};
use tracelab_core::inequality::*;

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn slack_is_homogeneous(trace in 0.0..10.0f64, tv in 0.0..10.0f64, vol in 0.0..10.0f64,
                            c1 in 0.1..5.0f64, c2 in 0.0..20.0f64, lambda in 0.0..100.0f64) {
        let k = InequalityConstants::new(c1, c2).unwrap();
        let r = TraceReport::closed_form(trace, tv, vol);
        let s = TraceReport::closed_form(lambda * trace, lambda * tv, lambda * vol);
        prop_assert!(close(slack(&s, k), lambda * slack(&r, k), 1e-12));
    }

    #[test]
    fn slack_is_affine_in_the_constants(trace in 0.0..10.0f64, tv in 0.0..10.0f64, vol in 0.0..10.0f64,
                                        c1 in 0.1..5.0f64, c2 in 0.0..20.0f64, d1 in 0.0..5.0f64, d2 in 0.0..5.0f64) {
        let r = TraceReport::closed_form(trace, tv, vol);
        let base = slack(&r, InequalityConstants::new(c1, c2).unwrap());
        let moved = slack(&r, InequalityConstants::new(c1 + d1, c2 + d2).unwrap());
        prop_assert!(close(moved - base, d1 * tv + d2 * vol, 1e-12));
    }

    #[test]
    fn kernel_gap_matches_direct_formula(b in 0.1..10.0f64, frac in 0.01..0.99f64, n in 2usize..=6, s in 0.0..=1.0f64) {
        let a = frac * b;
        let t = a + s * (b - a);
        let m = n as i32;
        let direct = t.powi(m - 1)
            - (a.powi(m - 1) * (b.powi(m) - t.powi(m)) + b.powi(m - 1) * (t.powi(m) - a.powi(m)))
                / (b.powi(m) - a.powi(m));
        let gap = radial_kernel_gap(a, b, n, t).unwrap();
        prop_assert!(gap >= 0.0);
        prop_assert!((gap - direct).abs() <= 1e-12 * b.powi(m - 1).max(1.0));
    }

    #[test]
    fn critical_point_is_interior_maximum(b in 0.1..10.0f64, frac in 0.01..0.99f64, n in 2usize..=6) {
        let a = frac * b;
        let tc = radial_critical_point(a, b, n).unwrap();
        prop_assert!(a < tc && tc < b);
        let peak = radial_kernel_gap(a, b, n, tc).unwrap();
        for k in 0..=20 {
            let t = if k == 20 { b } else { a + (b - a) * k as f64 / 20.0 };
            prop_assert!(radial_kernel_gap(a, b, n, t).unwrap() <= peak * (1.0 + 1e-12));
        }
    }

    #[test]
    fn constants_make_the_radial_inequality_sharp(b in 0.1..10.0f64, frac in 0.0..0.99f64, n in 2usize..=6) {
        let a = frac * b;
        let m = n as i32;
        let w = unit_ball_volume(n);
        let area = n as f64 * w * (a.powi(m - 1) + b.powi(m - 1));
        let vol = w * (b.powi(m) - a.powi(m));
        let c2 = radial_sharp_c2(a, b, n).unwrap();
        let r = TraceReport::closed_form(area, 0.0, vol);
        prop_assert!(slack(&r, InequalityConstants::new(1.0, c2).unwrap()).abs() <= 1e-12 * area);
        // Any smaller c2 fails on the constant.
        prop_assert!(slack(&r, InequalityConstants::new(1.0, 0.99 * c2).unwrap()) < 0.0);
    }

    #[test]
    fn cone_ratio_is_exact(l in 0.1..5.0f64, n in 2usize..=4, s in 0.01..1.0f64) {
        let r = s * PATCH_HEIGHT / l * 0.99;
        let rep = cone_family_report(l, n, r).unwrap();
        prop_assert!(close(rep.trace / rep.tv, (1.0 + l * l).sqrt(), 1e-12));
    }

    #[test]
    fn cone_reports_scale_with_r(l in 0.1..5.0f64, n in 2usize..=4, s in 0.01..0.5f64, lambda in 0.01..1.0f64) {
        let r = s * PATCH_HEIGHT / l;
        let big = cone_family_report(l, n, r).unwrap();
        let small = cone_family_report(l, n, lambda * r).unwrap();
        let k = (n - 1) as i32;
        prop_assert!(close(small.trace, lambda.powi(k) * big.trace, 1e-12));
        prop_assert!(close(small.tv, lambda.powi(k) * big.tv, 1e-12));
        prop_assert!(close(small.volume, lambda.powi(k + 1) * big.volume, 1e-12));
    }

    #[test]
    fn fit_recovers_power_laws(p in 0.2..4.0f64, c in 0.01..100.0f64, ratio in 0.2..0.8f64) {
        let rs = geometric_sequence(0.1, ratio, 12).unwrap();
        let pts: Vec<(f64, f64)> = rs.iter().map(|&r| (r, c * r.powf(p))).collect();
        let fit = fit_exponent(&pts, None).unwrap();
        prop_assert!((fit.exponent - p).abs() <= 1e-9);
        prop_assert!(close(fit.prefactor, c, 1e-8));
        prop_assert_eq!(fit.window.len(), 8);
    }

    #[test]
    fn implied_c1_is_where_slack_vanishes(trace in 0.1..10.0f64, tv in 0.1..10.0f64, vol in 0.0..1.0f64, c2 in 0.0..5.0f64) {
        let r = TraceReport::closed_form(trace, tv, vol);
        let c1 = implied_c1(&r, c2);
        if c1 > 0.0 {
            prop_assert!(slack(&r, InequalityConstants::new(c1, c2).unwrap()).abs() <= 1e-10 * trace);
        }
    }
}

#[test]
fn smooth_reports_scale_linearly() {
    let d = DomainModel::annulus(1.0, 2.0).unwrap();
    let u = bv::layer_function(&d, 0.05, Profile::cubic()).unwrap();
    let r = bv::report(&u, &d).unwrap();
    for lambda in [0.5, 3.0] {
        let s = bv::report(&u.scaled(lambda), &d).unwrap();
        assert!(close(s.trace, lambda * r.trace, 1e-9));
        assert!(close(s.tv, lambda * r.tv, 1e-9));
        assert!(close(s.volume, lambda * r.volume, 1e-9));
    }
}

/// Both the constant and the interpolated boundary layer are admissible, so
/// the minimised quotient cannot exceed either.
#[test]
fn minimum_is_below_feasible_points() {
    for (d, c2, h) in [(DomainModel::disc(1.0).unwrap(), 2.0, 0.15), (DomainModel::square(1.0).unwrap(), 4.0, 0.12)] {
        let mesh = Arc::new(build_mesh(&d, h).unwrap());
        let ones = vec![1.0; mesh.vertices.len()];
        let constant = feasible_objective(&mesh, c2, &ones).unwrap();
        assert!(close(constant, c2 * mesh_area(&mesh) / boundary_length(&mesh), 1e-12));

        let eps = 0.3;
        let layer: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|v| {
                let dist = d.fast_signed_distance(&Vector::from_row_slice(v)).unwrap().max(0.0);
                (Profile::cubic().value)((dist / eps).min(1.0))
            })
            .collect();
        let layered = feasible_objective(&mesh, c2, &layer).unwrap();

        let best = minimize_quotient(&QuotientProblem::new(mesh.clone(), c2, Solver::descent()).unwrap()).unwrap();
        assert!(best.c1_estimate <= constant + 1e-9, "{} > {constant}", best.c1_estimate);
        assert!(best.c1_estimate <= layered + 1e-9, "{} > {layered}", best.c1_estimate);
        assert!(best.minimizer.iter().all(|&v| v >= -1e-10));

        let pl = BVRep::piecewise_linear(mesh.clone(), best.minimizer.clone()).unwrap();
        let rep = bv::report(&pl, &d).unwrap();
        assert!(close((rep.tv + c2 * rep.volume) / rep.trace, best.c1_estimate, 1e-6));
    }
}

fn mesh_area(m: &tracelab_core::estimator::Mesh) -> f64 {
    m.triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| m.vertices[i]);
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        })
        .sum()
}

fn boundary_length(m: &tracelab_core::estimator::Mesh) -> f64 {
    m.boundary_edges
        .iter()
        .map(|e| {
            let (p, q) = (m.vertices[e.a], m.vertices[e.b]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        })
        .sum()
}
