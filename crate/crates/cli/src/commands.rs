use crate::args::{BranchArg, Command, Common, PrecisionArg, SeedArg};
use crate::output::{emit, Artifact, Cell};
use crate::Failure;
use bykov::chains::{
    accessible_set, build_chain_graph, verify_chain_properties, ChainConfig, Seed,
};
use bykov::fixedpoints::{
    bifurcation_thresholds, eigen_asymptotics_scan, eigen_data, fixed_point_family,
    lyapunov_cycle, lyapunov_fixed_point, lyapunov_numeric, saddle_node_threshold, Branch,
    Classification, Eigenvalues, FixedPoint, LyapunovOptions, Precision,
};
use bykov::horseshoe::{detect_strips, strip_crossing_check, StripRectangle};
use bykov::maps::{flow_trajectory, iterate_orbit};
use bykov::pulses::{find_pulses, find_tangency_lambda, CurveKind, PulseOptions, TangencyOptions};
use bykov::{ModelParams, SectionPoint};
use rayon::prelude::*;
use serde::Serialize;

fn params(common: &Common, lambda: f64) -> Result<ModelParams, Failure> {
    Ok(ModelParams::new(common.c1, common.e1, common.c2, common.e2, lambda)?)
}

/// Echoes the entered rates and the derived constants.
fn param_meta(a: &mut Artifact, p: &ModelParams, with_lambda: bool) {
    a.meta("C1", p.c1())
        .meta("E1", p.e1())
        .meta("C2", p.c2())
        .meta("E2", p.e2())
        .meta("delta", p.delta())
        .meta("K", p.k());
    if with_lambda {
        a.meta("lambda", p.lambda());
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Principal => "principal",
        Branch::Conjugate => "conjugate",
    }
}

fn class_name(c: Classification) -> &'static str {
    match c {
        Classification::SaddleNodeBoundary => "saddle_node_boundary",
        Classification::SinkNode => "sink_node",
        Classification::SinkFocus => "sink_focus",
        Classification::Saddle => "saddle",
        Classification::FlipBoundary => "flip_boundary",
        Classification::SourceNode => "source_node",
        Classification::SourceFocus => "source_focus",
    }
}

pub fn run(cmd: &Command) -> Result<(), Failure> {
    let artifact = build(cmd)?;
    let common = cmd.common();
    match emit(&artifact.render(common.format), common.output.as_deref()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(Failure::Computation(format!("write failed: {e}")))
        }
        _ => Ok(()),
    }
}

pub fn build(cmd: &Command) -> Result<Artifact, Failure> {
    match cmd {
        Command::FixedPoints { common, lambda, ell } => {
            let p = params(common, lambda.lambda)?;
            let mut all: Vec<FixedPoint> = Vec::new();
            for l in ell.clone() {
                all.extend(fixed_point_family(&p, l as i64)?);
            }
            let mut a = Artifact::new(
                "fixed-points",
                &["ell", "branch", "x", "y", "lambda", "residual"],
                &all,
            );
            param_meta(&mut a, &p, true);
            for fp in &all {
                a.row(vec![
                    fp.ell.into(),
                    branch_name(fp.branch).into(),
                    fp.x.into(),
                    fp.y.into(),
                    fp.lambda.into(),
                    fp.residual(&p).into(),
                ]);
            }
            Ok(a)
        }
        Command::Thresholds {
            common,
            ell,
            precision,
        } => {
            let p = params(common, 0.0)?;
            let precision = match precision {
                PrecisionArg::Double => Precision::Double,
                PrecisionArg::Extended => Precision::Extended,
                PrecisionArg::Auto => Precision::Auto,
            };
            let rows = ell
                .clone()
                .map(|l| bifurcation_thresholds(&p, l as i64, precision))
                .collect::<Result<Vec<_>, _>>()?;
            let mut a = Artifact::new(
                "thresholds",
                &[
                    "ell", "precision", "a", "b", "c", "d", "gap_ab", "gap_bc", "gap_cd", "ordered",
                ],
                &rows,
            );
            param_meta(&mut a, &p, false);
            for t in &rows {
                let prec = match t.precision {
                    Precision::Extended => "extended",
                    _ => "double",
                };
                a.row(vec![
                    t.ell.into(),
                    prec.into(),
                    t.a.into(),
                    t.b.into(),
                    t.c.into(),
                    t.d.into(),
                    t.gaps[0].into(),
                    t.gaps[1].into(),
                    t.gaps[2].into(),
                    t.is_ordered().into(),
                ]);
            }
            Ok(a)
        }
        Command::EigenScan { common, lambda, ell } => {
            let p = params(common, lambda.lambda)?;
            let rows = eigen_asymptotics_scan(&p, ell.clone())?;
            let mut a = Artifact::new(
                "eigen-scan",
                &[
                    "ell", "lambda", "trace", "det", "mu_s", "mu_u", "vs_x", "vs_y", "vu_x", "vu_y",
                    "chi_s", "chi_u",
                ],
                &rows,
            );
            param_meta(&mut a, &p, true);
            for r in &rows {
                a.row(vec![
                    r.ell.into(),
                    r.lambda.into(),
                    r.trace.into(),
                    r.det.into(),
                    r.mu_s.into(),
                    r.mu_u.into(),
                    r.vs_x.into(),
                    r.vs_y.into(),
                    r.vu_x.into(),
                    r.vu_y.into(),
                    r.chi_s.into(),
                    r.chi_u.into(),
                ]);
            }
            Ok(a)
        }
        Command::Lyapunov {
            common,
            lambda,
            ell,
            branch,
            x,
            y,
            steps,
            transient,
            renorm_period,
        } => {
            let p = params(common, lambda.lambda)?;
            if *renorm_period == 0 || *steps == 0 {
                return Err(Failure::Validation("steps and renorm-period must be positive".into()));
            }
            let opts = LyapunovOptions {
                renorm_period: *renorm_period,
                transient: *transient,
            };
            #[derive(Serialize)]
            struct Row {
                method: &'static str,
                x: f64,
                y: f64,
                steps: usize,
                chi_s: f64,
                chi_u: f64,
            }
            let rows = match (ell, x, y) {
                (Some(l), _, _) => {
                    let want = match branch {
                        BranchArg::Principal => Branch::Principal,
                        BranchArg::Conjugate => Branch::Conjugate,
                    };
                    let fp = fixed_point_family(&p, *l as i64)?
                        .into_iter()
                        .find(|f| f.branch == want)
                        .ok_or_else(|| {
                            Failure::Computation(format!(
                                "no {} fixed point with winding {l} at lambda = {}",
                                branch_name(want),
                                p.lambda()
                            ))
                        })?;
                    let formula = lyapunov_fixed_point(&fp, &p)?;
                    let cycle = lyapunov_cycle(&[fp.point()], &p, *steps, &opts)?;
                    vec![
                        Row {
                            method: "eigenvalues",
                            x: fp.x,
                            y: fp.y,
                            steps: 1,
                            chi_s: formula.chi_s,
                            chi_u: formula.chi_u,
                        },
                        Row {
                            method: "qr_cycle",
                            x: fp.x,
                            y: fp.y,
                            steps: *steps,
                            chi_s: cycle.chi_s,
                            chi_u: cycle.chi_u,
                        },
                    ]
                }
                (None, Some(x), Some(y)) => {
                    let q = SectionPoint::new(*x, *y)?;
                    let d = lyapunov_numeric(&q, &p, *steps, &opts)?;
                    vec![Row {
                        method: "qr_orbit",
                        x: q.x(),
                        y: q.y(),
                        steps: *steps,
                        chi_s: d.chi_s,
                        chi_u: d.chi_u,
                    }]
                }
                _ => {
                    return Err(Failure::Validation(
                        "lyapunov needs either --ell or both --x and --y".into(),
                    ))
                }
            };
            let mut a = Artifact::new("lyapunov", &["method", "x", "y", "steps", "chi_s", "chi_u"], &rows);
            param_meta(&mut a, &p, true);
            a.meta("transient", transient).meta("renorm_period", renorm_period);
            for r in &rows {
                a.row(vec![
                    r.method.into(),
                    r.x.into(),
                    r.y.into(),
                    r.steps.into(),
                    r.chi_s.into(),
                    r.chi_u.into(),
                ]);
            }
            Ok(a)
        }
        Command::Orbit {
            common,
            lambda,
            x,
            y,
            steps,
        } => {
            let p = params(common, lambda.lambda)?;
            let rec = iterate_orbit(&SectionPoint::new(*x, *y)?, &p, *steps);
            let mut a = Artifact::new("orbit", &["step", "x", "y", "time"], &rec);
            param_meta(&mut a, &p, true);
            a.meta("termination", rec.termination)
                .meta("total_time", rec.total_time)
                .meta("stable_landing_x", rec.stable_landing_x);
            for (i, q) in rec.points.iter().enumerate() {
                a.row(vec![
                    i.into(),
                    q.x().into(),
                    q.y().into(),
                    rec.times.get(i).copied().into(),
                ]);
            }
            Ok(a)
        }
        Command::Flow {
            common,
            lambda,
            x,
            y,
            dt,
        } => {
            let p = params(common, lambda.lambda)?;
            if !(*dt > 0.0) {
                return Err(Failure::Validation(format!("dt must be positive, got {dt}")));
            }
            let traj = flow_trajectory(&SectionPoint::new(*x, *y)?, &p, *dt)?;
            let mut a = Artifact::new("flow", &["segment", "kind", "t", "rho", "theta", "z"], &traj);
            param_meta(&mut a, &p, true);
            a.meta("duration", traj.duration)
                .meta("winding", traj.winding)
                .meta("end", traj.end);
            for (i, seg) in traj.segments.iter().enumerate() {
                let kind = serde_json::to_value(seg.kind).expect("segment kind serializes");
                let kind = kind.as_str().unwrap_or_default().to_string();
                for s in &seg.samples {
                    a.row(vec![
                        i.into(),
                        Cell::S(kind.clone()),
                        s.t.into(),
                        s.rho.into(),
                        s.theta.into(),
                        s.z.into(),
                    ]);
                }
            }
            Ok(a)
        }
        Command::Strips {
            common,
            lambda,
            tau,
            center_x,
            n,
        } => {
            let p = params(common, lambda.lambda)?;
            let rect = StripRectangle::new(*center_x, *tau)?;
            let strips = detect_strips(&p, &rect, n.clone())?;
            let reports = strips
                .iter()
                .map(|s| strip_crossing_check(s, &p, &rect))
                .collect::<Result<Vec<_>, _>>()?;
            #[derive(Serialize)]
            struct Entry<'a> {
                strip: &'a bykov::horseshoe::Strip,
                crossing: &'a bykov::horseshoe::CrossingReport,
            }
            let data: Vec<Entry> = strips
                .iter()
                .zip(&reports)
                .map(|(strip, crossing)| Entry { strip, crossing })
                .collect();
            let mut a = Artifact::new(
                "strips",
                &[
                    "n", "height", "top", "crossed", "image_x_min", "image_x_max", "image_y_min",
                    "image_y_max", "expansion", "contraction", "x_samples", "y_samples",
                ],
                &data,
            );
            param_meta(&mut a, &p, true);
            a.meta("tau", tau).meta("center_x", center_x);
            for (s, r) in strips.iter().zip(&reports) {
                a.row(vec![
                    s.n.into(),
                    s.height.into(),
                    s.top.into(),
                    r.crossed.into(),
                    r.image_x_extent[0].into(),
                    r.image_x_extent[1].into(),
                    r.image_y_extent[0].into(),
                    r.image_y_extent[1].into(),
                    r.expansion_estimate.into(),
                    r.contraction_estimate.into(),
                    r.x_samples.into(),
                    r.y_samples.into(),
                ]);
            }
            Ok(a)
        }
        Command::Pulses {
            common,
            lambda,
            n,
            x_lo,
            x_hi,
            initial_points,
            refinement_levels,
        } => {
            let p = params(common, lambda.lambda)?;
            let opts = PulseOptions {
                initial_points: *initial_points,
                refinement_levels: *refinement_levels,
                ..PulseOptions::default()
            };
            if opts.initial_points < 4 {
                return Err(Failure::Validation("initial-points must be at least 4".into()));
            }
            let found = find_pulses(&p, *n, (*x_lo, *x_hi), &opts)?;
            let mut a = Artifact::new(
                "pulses",
                &["n", "lambda", "x_root", "offset", "landing_x", "residual"],
                &found,
            );
            param_meta(&mut a, &p, true);
            a.meta("degenerate", found.degenerate)
                .meta("unresolved", &found.unresolved);
            for r in &found.roots {
                a.row(vec![
                    r.n.into(),
                    r.lambda.into(),
                    r.x_root.into(),
                    r.offset.into(),
                    r.landing_x.into(),
                    r.residual.into(),
                ]);
            }
            Ok(a)
        }
        Command::Tangencies {
            common,
            n,
            lambda_lo,
            lambda_hi,
            grid_points,
        } => {
            let p = params(common, *lambda_hi)?;
            if *grid_points < 16 {
                return Err(Failure::Validation("grid-points must be at least 16".into()));
            }
            let opts = TangencyOptions {
                grid_points: *grid_points,
                ..TangencyOptions::default()
            };
            let found = find_tangency_lambda(&p, *n, (*lambda_lo, *lambda_hi), &opts)?;
            let mut a = Artifact::new(
                "tangencies",
                &["n", "lambda_star", "x_star", "g_residual", "gx_residual", "gxx", "quadratic"],
                &found,
            );
            param_meta(&mut a, &p, false);
            a.meta("lambda_bracket", (lambda_lo, lambda_hi));
            for t in &found {
                a.row(vec![
                    t.n.into(),
                    t.lambda_star.into(),
                    t.x_star.into(),
                    t.g_residual.into(),
                    t.gx_residual.into(),
                    t.gxx.into(),
                    t.quadratic.into(),
                ]);
            }
            Ok(a)
        }
        Command::Chain {
            common,
            lambda,
            nx,
            ny,
            y_max,
            epsilon,
            tau,
            max_iterates,
            seed,
            verify,
        } => {
            let p = params(common, lambda.lambda)?;
            let mut config = ChainConfig {
                epsilon: 1.0,
                tau: *tau,
                grid_nx: *nx,
                grid_ny: *ny,
                max_iterates_per_hop: *max_iterates,
                y_max: *y_max,
            };
            config.epsilon = match epsilon {
                Some(e) => *e,
                None => 4.0 * config.nominal_diagonal(),
            };
            let graph = build_chain_graph(&p, &config)?;
            let seed = match seed {
                SeedArg::Unstable => Seed::Curve(CurveKind::UnstableOfSigma2),
                SeedArg::Stable => Seed::Curve(CurveKind::StableOfSigma1),
            };
            let region = accessible_set(&graph, &seed)?;
            let grid = graph.grid();
            #[derive(Serialize)]
            struct CellRow {
                x_center: f64,
                y_center: f64,
                member: u8,
            }
            let cells: Vec<CellRow> = (0..grid.len())
                .map(|i| {
                    let (x, y) = grid.center(i);
                    CellRow {
                        x_center: x,
                        y_center: y,
                        member: region.members.contains(i) as u8,
                    }
                })
                .collect();
            let mut a = Artifact::new("chain", &["x_center", "y_center", "member"], &cells);
            param_meta(&mut a, &p, true);
            a.meta("epsilon", config.epsilon)
                .meta("tau", config.tau)
                .meta("grid", format!("{nx} x {ny}, |y| <= {y_max}"))
                .meta("max_iterates_per_hop", config.max_iterates_per_hop)
                .meta("seed", seed.describe())
                .meta(
                    "region",
                    "discrete estimate of the set chain-accessible from sigma_2; not the attracting set",
                )
                .meta("members", region.members.count());
            if *verify {
                let rep = verify_chain_properties(&region, &p, &config)?;
                a.meta("forward_invariance_violations", rep.forward_invariance.len())
                    .meta("closedness_violations", rep.closedness.len())
                    .meta("stability_violations", rep.stability.len());
            }
            for c in &cells {
                a.row(vec![c.x_center.into(), c.y_center.into(), (c.member as usize).into()]);
            }
            Ok(a)
        }
        Command::Scan {
            common,
            ell,
            lambda_min,
            lambda_max,
            lambda_steps,
            log,
            relative,
        } => {
            let base = params(common, 0.0)?;
            if *lambda_steps == 0 || !(lambda_min <= lambda_max) || (*log && !(*lambda_min > 0.0)) {
                return Err(Failure::Validation(format!(
                    "lambda grid [{lambda_min}, {lambda_max}] x {lambda_steps} is invalid"
                )));
            }
            let grid: Vec<f64> = (0..*lambda_steps)
                .map(|i| {
                    let t = if *lambda_steps == 1 {
                        0.0
                    } else {
                        i as f64 / (*lambda_steps - 1) as f64
                    };
                    if *log {
                        lambda_min * (lambda_max / lambda_min).powf(t)
                    } else {
                        lambda_min + (lambda_max - lambda_min) * t
                    }
                })
                .collect();
            let mut jobs = Vec::new();
            for l in ell.clone() {
                let scale = if *relative {
                    saddle_node_threshold(&base, l as i64)?
                } else {
                    1.0
                };
                for g in &grid {
                    let lam = g * scale;
                    base.with_lambda(lam)?;
                    jobs.push((l, lam));
                }
            }
            let rows = jobs
                .par_iter()
                .map(|&(l, lam)| scan_row(&base, l, lam))
                .collect::<Result<Vec<_>, Failure>>()?;
            let mut a = Artifact::new(
                "scan",
                &[
                    "ell", "lambda", "exists", "x", "y", "trace", "det", "classification", "mu_s",
                    "mu_u", "mu_re", "mu_im",
                ],
                &rows,
            );
            param_meta(&mut a, &base, false);
            a.meta("lambda_grid", if *log { "geometric" } else { "uniform" })
                .meta("relative_to_a", relative);
            for r in &rows {
                a.row(vec![
                    r.ell.into(),
                    r.lambda.into(),
                    r.exists.into(),
                    r.x.into(),
                    r.y.into(),
                    r.trace.into(),
                    r.det.into(),
                    r.classification.map_or(Cell::Empty, |c| Cell::S(c.into())),
                    r.mu_s.into(),
                    r.mu_u.into(),
                    r.mu_re.into(),
                    r.mu_im.into(),
                ]);
            }
            Ok(a)
        }
    }
}

#[derive(Debug, Serialize)]
struct ScanRow {
    ell: u32,
    lambda: f64,
    exists: bool,
    x: Option<f64>,
    y: Option<f64>,
    trace: Option<f64>,
    det: Option<f64>,
    classification: Option<&'static str>,
    mu_s: Option<f64>,
    mu_u: Option<f64>,
    mu_re: Option<f64>,
    mu_im: Option<f64>,
}

fn scan_row(base: &ModelParams, ell: u32, lambda: f64) -> Result<ScanRow, Failure> {
    let p = base.with_lambda(lambda)?;
    let mut row = ScanRow {
        ell,
        lambda,
        exists: false,
        x: None,
        y: None,
        trace: None,
        det: None,
        classification: None,
        mu_s: None,
        mu_u: None,
        mu_re: None,
        mu_im: None,
    };
    let Some(fp) = fixed_point_family(&p, ell as i64)?
        .into_iter()
        .find(|f| f.branch == Branch::Principal)
    else {
        return Ok(row);
    };
    let e = eigen_data(&fp, &p)?;
    row.exists = true;
    row.x = Some(fp.x);
    row.y = Some(fp.y);
    row.trace = Some(e.trace);
    row.det = Some(e.det);
    row.classification = Some(class_name(e.classification));
    match e.eigenvalues {
        Eigenvalues::Real { mu_s, mu_u } => {
            row.mu_s = Some(mu_s);
            row.mu_u = Some(mu_u);
        }
        Eigenvalues::Complex { re, im } => {
            row.mu_re = Some(re);
            row.mu_im = Some(im);
        }
    }
    Ok(row)
}
