use bykov::maps::{
    advance, first_hit_eta, flow_trajectory, iterate_orbit, return_map, return_map_jacobian,
    return_time, OutPoint, SegmentKind,
};
use bykov::{ModelParams, SectionPoint};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.1f64..5.0, 1.05f64..6.0, 0.0f64..0.9)
        .prop_map(|(k, d, l)| ModelParams::from_cycle_constants(k, d, l).unwrap())
}

fn point() -> impl Strategy<Value = SectionPoint> {
    (0.0f64..TAU, -12.0f64..-0.01, any::<bool>()).prop_map(|(x, e, up)| {
        let y = 10f64.powf(e);
        SectionPoint::new(x, if up { y } else { -y }).unwrap()
    })
}

/// `det` with one rounding per product.
fn det2(m: [[f64; 2]; 2]) -> f64 {
    let w = m[0][1] * m[1][0];
    let e = m[0][1].mul_add(-m[1][0], w);
    m[0][0].mul_add(m[1][1], -w) + e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn determinant_identity(p in params(), q in point()) {
        let j = return_map_jacobian(&q, &p);
        let log = (p.delta() - 1.0) * q.y().abs().ln();
        let want = p.delta() * log.exp();
        // exp amplifies the rounding of its argument by |log|.
        let tol = 1e-14 * log.abs().max(1.0);
        prop_assert!(((j.det() - want) / want).abs() < tol);
    }

    #[test]
    fn contracting_where_det_below_one(p in params(), q in point()) {
        let j = return_map_jacobian(&q, &p);
        prop_assume!(j.det() < 1.0);
        let m = j.matrix();
        let slack = 4.0 * f64::EPSILON * (m[0][1] * m[1][0]).abs().max(m[1][1].abs());
        prop_assert!(det2(m).abs() < 1.0 + slack);
        let (smax, smin) = j.singular_values();
        prop_assert!(smax * smin < 1.0);
    }

    #[test]
    fn eta_height_ignores_angle(p in params(), q in point(), x2 in 0.0f64..TAU) {
        let other = SectionPoint::new(x2, q.y()).unwrap();
        let (OutPoint::Wall { y: a, .. }, OutPoint::Wall { y: b, .. }) =
            (first_hit_eta(&q, &p), first_hit_eta(&other, &p))
        else {
            return Err(TestCaseError::fail("eta lands on the wall"));
        };
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn one_extra_turn_per_height_decade(p in params(), x in 0.2f64..6.0, n in 0u32..4) {
        let k = p.k();
        let top = (-TAU * n as f64 / k).exp();
        let bottom = (-TAU * (n + 1) as f64 / k).exp();
        prop_assume!(bottom > 1e-300 && top < 1.0);
        let p0 = p.with_lambda(0.0).unwrap();
        let hi = advance(&SectionPoint::new(x, top).unwrap(), &p0).unwrap();
        let lo = advance(&SectionPoint::new(x, bottom).unwrap(), &p0).unwrap();
        prop_assert_eq!(lo.turns - hi.turns, 1);
    }

    #[test]
    fn jacobian_matches_central_differences(
        k in 0.3f64..3.0,
        d in 1.2f64..4.0,
        l in 0.0f64..0.3,
        x in 0.0f64..TAU,
        e in -5.0f64..-0.5,
    ) {
        let p = ModelParams::from_cycle_constants(k, d, l).unwrap();
        let y = 10f64.powf(e);
        let lifted = |x: f64, y: f64| -> Option<(f64, f64)> {
            let s = advance(&SectionPoint::new(x, y).ok()?, &p).ok()?;
            // Undo the reduction of the sample angle itself.
            Some((s.lifted_x + (x - SectionPoint::new(x, y).ok()?.x()), s.landing.y()))
        };
        let (hx, hy) = (1e-6, 1e-6 * y);
        let (Some(xp), Some(xm), Some(yp), Some(ym)) =
            (lifted(x + hx, y), lifted(x - hx, y), lifted(x, y + hy), lifted(x, y - hy))
        else {
            return Ok(());
        };
        let fd = [
            [(xp.0 - xm.0) / (2.0 * hx), (yp.0 - ym.0) / (2.0 * hy)],
            [(xp.1 - xm.1) / (2.0 * hx), (yp.1 - ym.1) / (2.0 * hy)],
        ];
        let m = return_map_jacobian(&SectionPoint::new(x, y).unwrap(), &p).matrix();
        let (mut err, mut norm) = (0.0f64, 0.0f64);
        for i in 0..2 {
            for j in 0..2 {
                err = err.hypot(fd[i][j] - m[i][j]);
                norm = norm.hypot(m[i][j]);
            }
        }
        prop_assert!(err / norm < 1e-5, "err {err} norm {norm}");
    }

    #[test]
    fn orbit_time_is_additive(p in params(), q in point(), n in 1usize..20) {
        let rec = iterate_orbit(&q, &p, n);
        let sum: f64 = rec
            .points
            .iter()
            .take(rec.times.len())
            .map(|r| -p.k() * r.y().abs().ln())
            .sum();
        prop_assert!((rec.total_time - sum).abs() <= 1e-12 * sum.max(1.0));
        let steps: f64 = rec.times.iter().sum();
        prop_assert_eq!(steps.to_bits(), rec.total_time.to_bits());
    }

    #[test]
    fn flow_matches_return_map(
        k in 0.3f64..3.0,
        d in 1.2f64..4.0,
        l in 0.0f64..0.5,
        x in 0.0f64..TAU,
        e in -4.0f64..-0.1,
    ) {
        let p = ModelParams::from_cycle_constants(k, d, l).unwrap();
        let q = SectionPoint::new(x, 10f64.powf(e)).unwrap();
        let Ok(landing) = return_map(&q, &p) else {
            return Ok(());
        };
        let traj = flow_trajectory(&q, &p, 0.05).unwrap();
        prop_assert!((traj.duration - return_time(&q, &p)).abs() < 1e-10 * traj.duration.max(1.0));
        prop_assert!(bykov::maps::angle_diff(traj.end.x(), landing.x()).abs() < 1e-10);
        prop_assert!((traj.end.y() - landing.y()).abs() < 1e-10);
        let kinds: Vec<SegmentKind> = traj.segments.iter().map(|s| s.kind).collect();
        prop_assert_eq!(kinds.iter().filter(|k| **k == SegmentKind::NearSigma1).count(), 1);
        prop_assert_eq!(kinds.iter().filter(|k| **k == SegmentKind::NearSigma2).count(), 1);
    }
}
