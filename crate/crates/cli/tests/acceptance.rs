//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `EXPECTED_RED` are implemented as stated and are known not to
//! hold for the model; the target fails if any other criterion fails or if one of
//! them turns green.

use bykov::chains::{
    accessible_set, build_chain_graph, fatten, verify_chain_properties, ChainConfig, Seed,
};
use bykov::fixedpoints::{
    bifurcation_thresholds, eigen_asymptotics_scan, eigen_data, fixed_point_family,
    lyapunov_cycle, lyapunov_fixed_point, lyapunov_numeric, saddle_node_threshold, Branch,
    Classification, LyapunovOptions, Precision,
};
use bykov::horseshoe::{detect_strips, strip_crossing_check, StripRectangle};
use bykov::maps::{advance, iterate_orbit, return_map, return_map_jacobian};
use bykov::pulses::{
    find_pulses, find_tangency_lambda, CurveKind, PulseOptions, TangencyOptions,
};
use bykov::{ModelParams, SectionPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, TAU};
use std::process::Command;

const EXPECTED_RED: &[u32] = &[5, 9];

const DET_REL_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;
const EIGENVECTOR_TOL: f64 = 1e-2;
const MU_U_BOUND: f64 = -10.0;
const LIMIT_REL_TOL: f64 = 0.05;
const SUM_REL_TOL: f64 = 0.02;
const NUMERIC_ORACLE_TOL: f64 = 1e-8;
const BISECTION_REL_TOL: f64 = 1e-10;
const SWEEP_POINTS_PER_INTERVAL: usize = 200;
const STRIP_RATIO_TOL: f64 = 0.10;
const SV_PRODUCT_TOL: f64 = 0.05;
const COLLAPSE_STEP: f64 = 1e-3;
const COLLAPSE_WINDOW: f64 = 0.1;

const BIN: &str = env!("CARGO_BIN_EXE_bykov");

/// Rates realizing K = 1, delta = 2 for the command line.
const RATES: [&str; 8] = [
    "--C1",
    "3.414213562373095",
    "--E1",
    "2.414213562373095",
    "--C2",
    "3.414213562373095",
    "--E2",
    "2.414213562373095",
];

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn base(lambda: f64) -> ModelParams {
    ModelParams::from_cycle_constants(1.0, 2.0, lambda).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// 2x2 determinant with one rounding per product.
fn det2(m: [[f64; 2]; 2]) -> f64 {
    let w = m[0][1] * m[1][0];
    let e = m[0][1].mul_add(-m[1][0], w);
    m[0][0].mul_add(m[1][1], -w) + e
}

fn c1_determinant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD37);
    let (mut worst, mut worst_matrix) = (0.0f64, 0.0f64);
    let mut points = 0;
    for _ in 0..20 {
        let e1 = rng.gen_range(0.5..3.0);
        let e2 = rng.gen_range(0.5..3.0);
        let c1 = e1 * rng.gen_range(1.05..4.0);
        let c2 = e2 * rng.gen_range(1.05..4.0);
        let p = ModelParams::new(c1, e1, c2, e2, rng.gen_range(0.0..0.5)).unwrap();
        let mut accepted = 0;
        while accepted < 10_000 {
            let y = 10f64.powf(rng.gen_range(-12.0..-0.05)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let q = SectionPoint::new(rng.gen_range(0.0..TAU), y).unwrap();
            if advance(&q, &p).is_err() {
                continue;
            }
            accepted += 1;
            let j = return_map_jacobian(&q, &p);
            let want = p.delta() * ((p.delta() - 1.0) * y.abs().ln()).exp();
            worst = worst.max(rel(j.det(), want));
            // The assembled matrix carries the determinant up to the rounding of its entries.
            let m = j.matrix();
            let slack = 4.0 * f64::EPSILON * (m[0][1] * m[1][0]).abs().max(m[1][1].abs());
            worst_matrix = worst_matrix.max((det2(m) - j.det()).abs() / (slack + f64::MIN_POSITIVE));
        }
        points += accepted;
    }
    Outcome {
        id: 1,
        name: "determinant identity",
        pass: worst < DET_REL_TOL && worst_matrix <= 1.0,
        detail: format!(
            "{points} points over 20 parameter sets, max rel err {worst:.2e}, matrix det within rounding bound: {}",
            worst_matrix <= 1.0
        ),
    }
}

fn c2_residuals() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for ell in 1..=6 {
        let a = saddle_node_threshold(&base(0.0), ell).unwrap();
        for m in [2.0, 5.0, 10.0] {
            let p = base(m * a);
            for fp in fixed_point_family(&p, ell).unwrap() {
                let q = return_map(&fp.point(), &p).unwrap().point().unwrap();
                worst = worst.max(bykov::maps::angle_diff(q.x(), fp.x).hypot(q.y() - fp.y));
                count += 1;
            }
        }
    }
    Outcome {
        id: 2,
        name: "fixed-point residuals",
        pass: count == 36 && worst < RESIDUAL_TOL,
        detail: format!("{count} fixed points, max |P(p) - p| = {worst:.2e}"),
    }
}

fn c3_existence() -> Outcome {
    let mut bad = Vec::new();
    for ell in 1..=6 {
        let a = saddle_node_threshold(&base(0.0), ell).unwrap();
        let below = fixed_point_family(&base(0.999 * a), ell).unwrap().len();
        let above = fixed_point_family(&base(1.001 * a), ell).unwrap().len();
        if below != 0 || above != 2 {
            bad.push((ell, below, above));
        }
    }
    Outcome {
        id: 3,
        name: "existence boundary",
        pass: bad.is_empty(),
        detail: format!("l = 1..6, violations {bad:?}"),
    }
}

fn c4_eigen_asymptotics() -> Outcome {
    let lambda = 0.05;
    let rows = eigen_asymptotics_scan(&base(lambda), 4..=9).unwrap();
    let mu_s_up = rows.windows(2).all(|w| w[0].mu_s < w[1].mu_s) && rows.iter().all(|r| r.mu_s < 0.0);
    let mu_u_down = rows.windows(2).all(|w| w[1].mu_u < w[0].mu_u);
    let last = rows.last().unwrap();
    let n = 1.0f64.hypot(lambda);
    let vs_err = (last.vs_x - 1.0).hypot(last.vs_y);
    let vu_err = (last.vu_x - 1.0 / n).hypot(last.vu_y - lambda / n);
    Outcome {
        id: 4,
        name: "eigen-asymptotics",
        pass: mu_s_up
            && mu_u_down
            && last.mu_u < MU_U_BOUND
            && vs_err < EIGENVECTOR_TOL
            && vu_err < EIGENVECTOR_TOL,
        detail: format!(
            "mu_s increasing to 0-: {mu_s_up}, mu_u decreasing: {mu_u_down}, mu_u(9) = {:.3e}, |v_s-(1,0)| = {vs_err:.2e}, |v_u-(1,l)/n| = {vu_err:.2e}",
            last.mu_u
        ),
    }
}

fn c5_lyapunov_limits() -> Outcome {
    let p = base(0.05);
    let (k, delta) = (p.k(), p.delta());
    let rows = eigen_asymptotics_scan(&p, 4..=9).unwrap();
    let last = rows.last().unwrap();
    let err_u = rel(last.chi_u, 1.0 / k);
    let err_s = rel(last.chi_s, -delta / k);
    let err_sum = rel(last.chi_s + last.chi_u, -(delta - 1.0) / k);
    let (mut orbit_dev, mut orbit_failures, mut cycle_dev) = (0.0f64, 0, 0.0f64);
    let opts = LyapunovOptions::default();
    for ell in 4..=9 {
        let fp = fixed_point_family(&p, ell).unwrap()[0];
        let formula = lyapunov_fixed_point(&fp, &p).unwrap();
        match lyapunov_numeric(&fp.point(), &p, 50, &opts) {
            Ok(d) => {
                orbit_dev = orbit_dev
                    .max((d.chi_s - formula.chi_s).abs())
                    .max((d.chi_u - formula.chi_u).abs())
            }
            Err(_) => orbit_failures += 1,
        }
        let c = lyapunov_cycle(
            &[fp.point()],
            &p,
            50,
            &LyapunovOptions {
                transient: 20,
                ..opts
            },
        )
        .unwrap();
        cycle_dev = cycle_dev
            .max((c.chi_s - formula.chi_s).abs())
            .max((c.chi_u - formula.chi_u).abs());
    }
    let orbit_ok = orbit_failures == 0 && orbit_dev < NUMERIC_ORACLE_TOL;
    Outcome {
        id: 5,
        name: "Lyapunov limits",
        pass: err_u < LIMIT_REL_TOL && err_s < LIMIT_REL_TOL && err_sum < SUM_REL_TOL && orbit_ok,
        detail: format!(
            "l = 9: chi_u = {:.5} ({:.2}% from 1/K), chi_s = {:.5} ({:.2}% from -delta/K), sum {:.2}% from -(delta-1)/K; orbit QR vs eigenvalues: max dev {orbit_dev:.2e}, {orbit_failures} terminated; cycle QR max dev {cycle_dev:.2e}",
            last.chi_u,
            100.0 * err_u,
            last.chi_s,
            100.0 * err_s,
            100.0 * err_sum
        ),
    }
}

/// Classifications of the principal fixed point at interior points of `(a, b)`,
/// `(b, c)`, `(c, d)` and `(d, 1.5 d)`, in sweep order with repeats collapsed.
fn classification_sequence(p0: &ModelParams, ell: i64) -> Vec<Classification> {
    let t = bifurcation_thresholds(p0, ell, Precision::Double).unwrap();
    let knots = [t.a, t.b, t.c, t.d, 1.5 * t.d];
    let mut seq: Vec<Classification> = Vec::new();
    for w in knots.windows(2) {
        for j in 0..SWEEP_POINTS_PER_INTERVAL {
            let f = (j as f64 + 0.5) / SWEEP_POINTS_PER_INTERVAL as f64;
            let p = p0.with_lambda(w[0] + (w[1] - w[0]) * f).unwrap();
            let fp = fixed_point_family(&p, ell)
                .unwrap()
                .into_iter()
                .find(|f| f.branch == Branch::Principal)
                .unwrap();
            let c = eigen_data(&fp, &p).unwrap().classification;
            if seq.last() != Some(&c) {
                seq.push(c);
            }
        }
    }
    seq
}

fn c6_thresholds() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut worst_dev = 0.0f64;
    let p = base(0.0);
    for ell in 1..=4 {
        let t = bifurcation_thresholds(&p, ell, Precision::Double).unwrap();
        ok &= t.is_ordered();
        worst_dev = t.bisection_deviation.iter().fold(worst_dev, |m, &d| m.max(d));
    }
    let fig = ModelParams::from_cycle_constants(0.2, 4.0, 0.0).unwrap();
    for ell in 1..=2 {
        let t = bifurcation_thresholds(&fig, ell, Precision::Extended).unwrap();
        ok &= t.is_ordered();
        worst_dev = t.bisection_deviation.iter().fold(worst_dev, |m, &d| m.max(d));
        notes.push(format!("K=0.2 l={ell} min gap {:.2e}", t.gaps.iter().cloned().fold(f64::INFINITY, f64::min)));
    }
    let expected = [
        Classification::SinkNode,
        Classification::SinkFocus,
        Classification::SinkNode,
        Classification::Saddle,
    ];
    let mut sweeps_ok = true;
    for ell in 1..=4 {
        let seq = classification_sequence(&p, ell);
        if seq != expected {
            sweeps_ok = false;
            notes.push(format!("l={ell} sweep {seq:?}"));
        }
    }
    Outcome {
        id: 6,
        name: "threshold ordering",
        pass: ok && worst_dev < BISECTION_REL_TOL && sweeps_ok,
        detail: format!(
            "ordered: {ok}, max bisection deviation {worst_dev:.2e}, sweeps l=1..4 node/focus/node/saddle: {sweeps_ok}; {}",
            notes.join(", ")
        ),
    }
}

fn c7_saddle_node_scaling() -> Outcome {
    let mut slopes = Vec::new();
    for ell in 1..=4 {
        let a = saddle_node_threshold(&base(0.0), ell).unwrap();
        let (mut sx, mut sy, mut sxx, mut sxy, n) = (0.0, 0.0, 0.0, 0.0, 64.0);
        for i in 0..64 {
            let r = 1.001 * (1.1f64 / 1.001).powf(i as f64 / 63.0);
            let lambda = r * a;
            let fam = fixed_point_family(&base(lambda), ell).unwrap();
            let sep = bykov::maps::angle_diff(fam[1].x, fam[0].x).abs();
            let (u, v) = ((lambda - a).ln(), sep.ln());
            sx += u;
            sy += v;
            sxx += u * u;
            sxy += u * v;
        }
        slopes.push((n * sxy - sx * sy) / (n * sxx - sx * sx));
    }
    Outcome {
        id: 7,
        name: "saddle-node scaling",
        pass: slopes.iter().all(|s| (s - 0.5).abs() <= 0.1),
        detail: format!("fitted exponents for l = 1..4: {slopes:.4?}"),
    }
}

fn c8_horseshoe() -> Outcome {
    let p = base(0.01);
    let rect = StripRectangle::new(0.0, 0.25).unwrap();
    let strips = detect_strips(&p, &rect, 1..=4).unwrap();
    let detected: Vec<u32> = strips.iter().map(|s| s.n).collect();
    let ratio_ok = strips
        .windows(2)
        .all(|w| (w[1].height / w[0].height / (-TAU / p.k()).exp() - 1.0).abs() < STRIP_RATIO_TOL);
    let mut membership_ok = true;
    let mut checked = 0;
    for s in &strips {
        for fp in fixed_point_family(&p, s.n as i64).unwrap() {
            if bykov::maps::angle_diff(fp.x, rect.center_x()).abs() <= rect.tau() {
                membership_ok &= s.contains(&fp.point());
                checked += 1;
            }
        }
    }
    let eps0 = (0.5 / p.k()).min(p.delta() / (2.0 * p.k()));
    let (mut crossing, mut crossing_ok, mut min_abs_chi) = (Vec::new(), true, f64::INFINITY);
    let mut worst_sv = 0.0f64;
    for s in &strips {
        let r = strip_crossing_check(s, &p, &rect).unwrap();
        if !r.crossed {
            continue;
        }
        crossing.push(s.n);
        crossing_ok &= r.expansion_estimate > 1.0;
        let y = (-TAU * s.n as f64 / p.k()).exp();
        let det = p.delta() * y.powf(p.delta() - 1.0);
        worst_sv = worst_sv.max(rel(r.expansion_estimate * r.contraction_estimate, det));
        for fp in fixed_point_family(&p, s.n as i64).unwrap() {
            if s.contains(&fp.point()) {
                let l = lyapunov_fixed_point(&fp, &p).unwrap();
                min_abs_chi = min_abs_chi.min(l.chi_u.abs()).min(l.chi_s.abs());
            }
        }
    }
    Outcome {
        id: 8,
        name: "horseshoe skeleton",
        pass: detected == [1, 2, 3, 4]
            && ratio_ok
            && membership_ok
            && !crossing.is_empty()
            && crossing_ok
            && worst_sv < SV_PRODUCT_TOL
            && min_abs_chi > eps0,
        detail: format!(
            "strips {detected:?}, height ratio ok: {ratio_ok}, {checked} fixed points in their strips: {membership_ok}, crossing strips {crossing:?} expanding: {crossing_ok}, sv product max rel err {worst_sv:.2e}, min |chi| at their fixed points {min_abs_chi:.3} > eps0 = {eps0}"
        ),
    }
}

fn c9_pulses_and_tangencies() -> Outcome {
    let p = base(0.01);
    let opts = PulseOptions::default();
    let counts: Vec<usize> = (2..=6)
        .map(|k| {
            find_pulses(&p, 1, (PI - 2f64.powi(-k), PI), &opts)
                .unwrap()
                .roots
                .len()
        })
        .collect();
    let literal = counts.windows(2).all(|w| w[0] <= w[1]);
    let intent: Vec<usize> = (3..=8)
        .map(|k| {
            find_pulses(&p, 1, (PI - 0.25, PI - 2f64.powi(-k)), &opts)
                .unwrap()
                .roots
                .len()
        })
        .collect();
    let tangencies =
        find_tangency_lambda(&p, 1, (1e-4, 0.2), &TangencyOptions::default()).unwrap();
    let values: Vec<f64> = tangencies.iter().map(|t| t.lambda_star).collect();
    let decreasing = values.windows(2).all(|w| w[0] > w[1]) && values.iter().all(|&v| v > 0.0);
    let mut collapse_ok = !tangencies.is_empty();
    for t in &tangencies {
        let window = (
            (t.x_star - COLLAPSE_WINDOW).max(0.0),
            (t.x_star + COLLAPSE_WINDOW).min(PI),
        );
        let count = |lambda: f64| {
            find_pulses(&p.with_lambda(lambda).unwrap(), 1, window, &opts)
                .unwrap()
                .roots
                .len()
        };
        collapse_ok &= count(t.lambda_star * (1.0 + COLLAPSE_STEP)) == 2
            && count(t.lambda_star * (1.0 - COLLAPSE_STEP)) == 0;
    }
    Outcome {
        id: 9,
        name: "pulses and tangencies",
        pass: literal && collapse_ok && decreasing,
        detail: format!(
            "roots in (pi - 2^-k, pi), k = 2..6: {counts:?} (non-decreasing: {literal}); roots in (pi - 0.25, pi - 2^-k), k = 3..8: {intent:?}; tangencies in (1e-4, 0.2): {values:?}, strictly decreasing: {decreasing}, pair collapse: {collapse_ok}"
        ),
    }
}

fn c10_chain_region() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for lambda in [0.0, 0.01] {
        let p = base(lambda);
        let config = ChainConfig::standard();
        let graph = build_chain_graph(&p, &config).unwrap();
        let unstable = Seed::Curve(CurveKind::UnstableOfSigma2);
        let region = accessible_set(&graph, &unstable).unwrap();
        let report = verify_chain_properties(&region, &p, &config).unwrap();
        let grid = graph.grid();

        let half = accessible_set(
            &build_chain_graph(&p, &config.with_epsilon(config.epsilon / 2.0)).unwrap(),
            &unstable,
        )
        .unwrap();
        let double = accessible_set(
            &build_chain_graph(&p, &config.with_epsilon(2.0 * config.epsilon)).unwrap(),
            &unstable,
        )
        .unwrap();
        let nested = half.members.is_subset(&region.members) && region.members.is_subset(&double.members);

        let stable = accessible_set(&graph, &Seed::Curve(CurveKind::StableOfSigma1)).unwrap();
        let symmetric = region.members.is_subset(&fatten(&stable.members, grid))
            && stable.members.is_subset(&fatten(&region.members, grid));

        ok &= report.forward_invariance.is_empty() && nested && symmetric;
        let mut line = format!(
            "lambda={lambda}: {} members, invariance violations {}, closedness {}, stability {}, nested {nested}, seed symmetric {symmetric}",
            region.members.count(),
            report.forward_invariance.len(),
            report.closedness.len(),
            report.stability.len()
        );
        if lambda == 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC0DE);
            let (mut sampled, mut missing) = (0, 0);
            let seeds: Vec<usize> = region.seed_cells.iter().collect();
            for _ in 0..4000 {
                let cell = seeds[rng.gen_range(0..seeds.len())];
                let (c, r) = grid.col_row(cell);
                let (y0, y1) = grid.row_span(r);
                let x = (c as f64 + rng.gen_range(0.0..1.0)) * grid.dx();
                let y = y0 + (y1 - y0) * rng.gen_range(0.0..1.0);
                let Ok(q) = SectionPoint::new(x, y) else { continue };
                for image in iterate_orbit(&q, &p, 6).points.iter().skip(1) {
                    sampled += 1;
                    if let Some(row) = grid.row_of(image.y()) {
                        if !region.members.contains(grid.index(grid.col_of(image.x()), row)) {
                            missing += 1;
                        }
                    }
                }
            }
            ok &= missing == 0 && sampled > 0;
            line.push_str(&format!(", forward cone: {sampled} images, {missing} outside"));
        }
        notes.push(line);
    }
    Outcome {
        id: 10,
        name: "chain region",
        pass: ok,
        detail: notes.join("; "),
    }
}

fn c11_determinism() -> Outcome {
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("fixed-points", vec!["--lambda", "0.01", "--ell", "1..6", "--format", "json"]),
        ("thresholds", vec!["--ell", "1..4"]),
        ("eigen-scan", vec!["--lambda", "0.05", "--ell", "4..9"]),
        ("lyapunov", vec!["--lambda", "0.05", "--ell", "6", "--steps", "50"]),
        ("orbit", vec!["--lambda", "0.01", "--x", "1", "--y", "0.3", "--steps", "40"]),
        ("flow", vec!["--lambda", "0.01", "--x", "1", "--y", "0.1"]),
        ("strips", vec!["--lambda", "0.01", "--tau", "0.25", "--n", "1..4"]),
        ("pulses", vec!["--lambda", "0.01", "--n", "1"]),
        ("tangencies", vec!["--lambda-lo", "1e-4", "--lambda-hi", "0.2"]),
        ("chain", vec!["--lambda", "0.01", "--verify"]),
        ("scan", vec!["--ell", "1..4", "--lambda-min", "0.9", "--lambda-max", "3", "--relative", "--lambda-steps", "64"]),
    ];
    let mut differing = Vec::new();
    let mut failed = Vec::new();
    for (sub, extra) in &runs {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let out = Command::new(BIN).arg(sub).args(RATES).args(extra).output().unwrap();
                if !out.status.success() {
                    failed.push(*sub);
                }
                out.stdout
            })
            .collect();
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(*sub);
        }
    }
    Outcome {
        id: 11,
        name: "determinism",
        pass: differing.is_empty() && failed.is_empty(),
        detail: format!(
            "{} subcommands run twice, differing {differing:?}, failed {failed:?}",
            runs.len()
        ),
    }
}

#[test]
fn acceptance() {
    let checks: [fn() -> Outcome; 11] = [
        c1_determinant,
        c2_residuals,
        c3_existence,
        c4_eigen_asymptotics,
        c5_lyapunov_limits,
        c6_thresholds,
        c7_saddle_node_scaling,
        c8_horseshoe,
        c9_pulses_and_tangencies,
        c10_chain_region,
        c11_determinism,
    ];
    let mut red = Vec::new();
    for check in checks {
        let start = std::time::Instant::now();
        let o = check();
        println!(
            "{} [{:>2}] {}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.name,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            red.push(o.id);
        }
    }
    assert_eq!(red, EXPECTED_RED, "failing criteria differ from the documented set");
}
