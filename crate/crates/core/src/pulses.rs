//! n-pulse connections and their tangency parameters.
//!
//! The unstable manifold of `sigma_2` meets the section along the curve
//! `y = lambda sin x`. A point of that curve whose `n`-th return lands on the
//! stable line `y = 0` (and no earlier return does) is an n-pulse connection.
//! Roots are searched on the upper arc `x in (0, pi)`, parametrized by the
//! distance `s` to the nearest zero of `sin` so that the winding near the
//! primary links keeps full precision.

use crate::maps::{advance, return_map_jacobian, Landing, SectionPoint};
use crate::numeric::bisect_f64;
use crate::{Error, ModelParams, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    UnstableOfSigma2,
    StableOfSigma1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldCurve {
    pub kind: CurveKind,
    pub lambda: f64,
    /// `(x, y)` samples over `[0, 2 pi)`.
    pub samples: Vec<(f64, f64)>,
}

/// Samples `y = lambda sin x` at `n` equally spaced angles.
pub fn unstable_curve(params: &ModelParams, n: usize) -> ManifoldCurve {
    let lambda = params.lambda();
    ManifoldCurve {
        kind: CurveKind::UnstableOfSigma2,
        lambda,
        samples: (0..n)
            .map(|i| {
                let x = TAU * i as f64 / n as f64;
                (x, if i == n / 2 && n % 2 == 0 { 0.0 } else { lambda * x.sin() })
            })
            .collect(),
    }
}

/// Samples the stable line `y = 0`.
pub fn stable_line(n: usize) -> ManifoldCurve {
    ManifoldCurve {
        kind: CurveKind::StableOfSigma1,
        lambda: 0.0,
        samples: (0..n).map(|i| (TAU * i as f64 / n as f64, 0.0)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseOptions {
    /// Grid points before refinement.
    pub initial_points: usize,
    /// Levels of four-fold refinement of ambiguous cells.
    pub refinement_levels: u32,
    /// Roots closer than this to `0` or `pi` are not searched.
    pub min_offset: f64,
}

impl Default for PulseOptions {
    fn default() -> Self {
        PulseOptions {
            initial_points: 4096,
            refinement_levels: 3,
            min_offset: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseConnection {
    pub n: u32,
    pub lambda: f64,
    pub x_root: f64,
    /// Distance from `x_root` to the nearest of `0` and `pi`.
    pub offset: f64,
    /// Start on the curve followed by the `n - 1` intermediate returns.
    pub orbit: Vec<SectionPoint>,
    /// Angle at which the `n`-th return meets `y = 0`.
    pub landing_x: f64,
    /// Height of the `n`-th return at `x_root`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSearch {
    pub roots: Vec<PulseConnection>,
    /// Set when `lambda = 0`: the curve is the stable line itself.
    pub degenerate: bool,
    /// Intervals next to lower-order pulses where the winding could not be resolved.
    pub unresolved: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    Left,
    Right,
}

/// Point of the upper arc, `x = s` or `x = pi - s`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    side: Side,
    s: f64,
}

impl Node {
    fn x(&self) -> f64 {
        match self.side {
            Side::Left => self.s,
            Side::Right => PI - self.s,
        }
    }

    fn sin_cos(&self) -> (f64, f64) {
        let (sn, cs) = self.s.sin_cos();
        match self.side {
            Side::Left => (sn, cs),
            Side::Right => (sn, -cs),
        }
    }

    fn between(&self, other: &Node, t: f64) -> Node {
        // Geometric interpolation in s; both nodes lie on the same side.
        Node {
            side: self.side,
            s: (self.s.ln() * (1.0 - t) + other.s.ln() * t).exp(),
        }
    }
}

#[derive(Debug, Clone)]
struct Eval {
    g: f64,
    g_x: f64,
    g_lambda: f64,
    /// Logs of the intermediate heights.
    log_heights: Vec<f64>,
    signs: Vec<bool>,
    orbit: Vec<SectionPoint>,
    landing_x: f64,
}

/// Height of the `n`-th return of the curve point and its derivatives in `x` and `lambda`.
fn eval(params: &ModelParams, node: &Node, n: u32) -> Option<Eval> {
    let lambda = params.lambda();
    let (sn, cs) = node.sin_cos();
    let mut p = SectionPoint::new(node.x(), lambda * sn).ok()?;
    let mut v = [1.0, lambda * cs];
    let mut w = [0.0, sn];
    let mut orbit = vec![p];
    let mut log_heights = Vec::new();
    let mut signs = Vec::new();
    for k in 1..=n {
        let m = return_map_jacobian(&p, params).matrix();
        let step = advance(&p, params).ok()?;
        let sx = step.landing.x().sin();
        v = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
        w = [
            m[0][0] * w[0] + m[0][1] * w[1],
            m[1][0] * w[0] + m[1][1] * w[1] + sx,
        ];
        if k == n {
            return Some(Eval {
                g: step.landing.y(),
                g_x: v[1],
                g_lambda: w[1],
                log_heights,
                signs,
                orbit,
                landing_x: step.landing.x(),
            });
        }
        match step.landing {
            Landing::Point(q) => {
                log_heights.push(q.y().abs().ln());
                signs.push(q.y() > 0.0);
                orbit.push(q);
                p = q;
            }
            Landing::StableManifold { .. } => return None,
        }
    }
    None
}

/// Grid on `[lo, hi]`, geometric in the distance to the nearest zero of `sin`.
fn grid(lo: f64, hi: f64, points: usize) -> Vec<Node> {
    let mut pieces: Vec<(Side, f64, f64)> = Vec::new();
    if lo < FRAC_PI_2 {
        pieces.push((Side::Left, lo, hi.min(FRAC_PI_2)));
    }
    if hi > FRAC_PI_2 {
        pieces.push((Side::Right, PI - lo.max(FRAC_PI_2), PI - hi));
    }
    let total: f64 = pieces.iter().map(|(_, a, b)| (a / b).ln().abs()).sum();
    let mut nodes = Vec::with_capacity(points + 2);
    for (side, a, b) in pieces {
        let share = (a / b).ln().abs() / total.max(f64::MIN_POSITIVE);
        let m = ((points as f64 * share).ceil() as usize).max(2);
        let start = nodes.len();
        for i in 0..m {
            let t = i as f64 / (m - 1) as f64;
            let s = (a.ln() * (1.0 - t) + b.ln() * t).exp();
            if start > 0 && i == 0 {
                continue;
            }
            nodes.push(Node { side, s });
        }
    }
    nodes
}

enum CellOutcome {
    Roots(Vec<Node>),
    Unresolved,
}

struct Search<'a> {
    params: &'a ModelParams,
    n: u32,
    levels: u32,
}

impl Search<'_> {
    fn cell(&self, a: Node, ea: &Eval, b: Node, eb: &Eval, level: u32) -> Result<CellOutcome> {
        // A lower-order pulse inside or next to the cell: the phase winds without bound.
        let wild = ea
            .log_heights
            .iter()
            .zip(&eb.log_heights)
            .any(|(la, lb)| (la - lb).abs() * self.params.k() > PI);
        let flips = ea.signs != eb.signs;
        let g_change = (ea.g > 0.0) != (eb.g > 0.0);
        let slope_change = (ea.g_x > 0.0) != (eb.g_x > 0.0);
        if !wild && !flips && !slope_change {
            return Ok(CellOutcome::Roots(if g_change {
                self.root(a, b).into_iter().collect()
            } else {
                Vec::new()
            }));
        }
        if level == self.levels {
            if wild || flips {
                return Ok(CellOutcome::Unresolved);
            }
            return self.finest(a, ea, b, eb);
        }
        let mut nodes = vec![(a, ea.clone())];
        for i in 1..4 {
            let m = a.between(&b, i as f64 / 4.0);
            match eval(self.params, &m, self.n) {
                Some(e) => nodes.push((m, e)),
                None => return Ok(CellOutcome::Unresolved),
            }
        }
        nodes.push((b, eb.clone()));
        let mut roots = Vec::new();
        let mut unresolved = false;
        for w in nodes.windows(2) {
            match self.cell(w[0].0, &w[0].1, w[1].0, &w[1].1, level + 1)? {
                CellOutcome::Roots(r) => roots.extend(r),
                CellOutcome::Unresolved => unresolved = true,
            }
        }
        Ok(if unresolved && roots.is_empty() {
            CellOutcome::Unresolved
        } else {
            CellOutcome::Roots(roots)
        })
    }

    /// Finest cell with one slope change: split at the critical point.
    fn finest(&self, a: Node, ea: &Eval, b: Node, eb: &Eval) -> Result<CellOutcome> {
        let mid = a.between(&b, 0.5);
        let em = eval(self.params, &mid, self.n).ok_or(Error::GridTooCoarse { x: mid.x() })?;
        let sg = |e: &Eval| e.g > 0.0;
        let sd = |e: &Eval| e.g_x > 0.0;
        if (sg(ea) != sg(&em) && sg(&em) != sg(eb)) || (sd(ea) != sd(&em) && sd(&em) != sd(eb)) {
            return Err(Error::GridTooCoarse { x: mid.x() });
        }
        let slope = |s: f64| {
            eval(self.params, &Node { side: a.side, s }, self.n).map_or(f64::NAN, |e| e.g_x)
        };
        let (lo, hi) = if a.s < b.s { (a.s, b.s) } else { (b.s, a.s) };
        let Some(sc) = bisect_f64(slope, lo, hi) else {
            return Err(Error::GridTooCoarse { x: mid.x() });
        };
        let c = Node { side: a.side, s: sc };
        let ec = eval(self.params, &c, self.n).ok_or(Error::GridTooCoarse { x: c.x() })?;
        let mut roots = Vec::new();
        for (p, ep) in [(a, ea), (b, eb)] {
            if (ep.g > 0.0) != (ec.g > 0.0) {
                roots.extend(self.root(p, c));
            }
        }
        Ok(CellOutcome::Roots(roots))
    }

    fn root(&self, a: Node, b: Node) -> Option<Node> {
        let side = a.side;
        let f = |s: f64| eval(self.params, &Node { side, s }, self.n).map_or(f64::NAN, |e| e.g);
        let (lo, hi) = if a.s < b.s { (a.s, b.s) } else { (b.s, a.s) };
        bisect_f64(f, lo, hi).map(|s| Node { side, s })
    }
}

/// All n-pulse roots on the curve with `x` in `x_domain`, a subinterval of `[0, pi]`.
pub fn find_pulses(
    params: &ModelParams,
    n: u32,
    x_domain: (f64, f64),
    opts: &PulseOptions,
) -> Result<PulseSearch> {
    if n == 0 {
        return Err(Error::InvalidIndex(0));
    }
    let (lo, hi) = x_domain;
    if !(lo < hi && lo >= 0.0 && hi <= PI) {
        return Err(Error::InvalidArgument(format!(
            "pulse domain ({lo}, {hi}) must be an interval inside [0, pi]"
        )));
    }
    if params.lambda() == 0.0 {
        return Ok(PulseSearch {
            roots: Vec::new(),
            degenerate: true,
            unresolved: Vec::new(),
        });
    }
    let lo = lo.max(opts.min_offset);
    let hi = hi.min(PI - opts.min_offset);
    if lo >= hi {
        return Ok(PulseSearch {
            roots: Vec::new(),
            degenerate: false,
            unresolved: Vec::new(),
        });
    }
    let nodes = grid(lo, hi, opts.initial_points);
    let evals: Vec<Option<Eval>> = nodes.par_iter().map(|nd| eval(params, nd, n)).collect();
    let search = Search {
        params,
        n,
        levels: opts.refinement_levels,
    };
    let cells: Vec<Result<(CellOutcome, (f64, f64))>> = (0..nodes.len() - 1)
        .into_par_iter()
        .map(|i| {
            let span = (nodes[i].x(), nodes[i + 1].x());
            match (&evals[i], &evals[i + 1]) {
                (Some(ea), Some(eb)) => search
                    .cell(nodes[i], ea, nodes[i + 1], eb, 0)
                    .map(|o| (o, span)),
                _ => Ok((CellOutcome::Unresolved, span)),
            }
        })
        .collect();
    let mut found = Vec::new();
    let mut unresolved: Vec<(f64, f64)> = Vec::new();
    for c in cells {
        match c? {
            (CellOutcome::Roots(r), _) => found.extend(r),
            (CellOutcome::Unresolved, (a, b)) => match unresolved.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => unresolved.push((a, b)),
            },
        }
    }
    let mut roots: Vec<PulseConnection> = found
        .into_iter()
        .filter_map(|nd| {
            let e = eval(params, &nd, n)?;
            // Roots sitting on the boundary between cells are bracketed twice.
            Some(PulseConnection {
                n,
                lambda: params.lambda(),
                x_root: nd.x(),
                offset: nd.s,
                orbit: e.orbit,
                landing_x: e.landing_x,
                residual: e.g,
            })
        })
        .collect();
    roots.sort_by(|a, b| a.x_root.total_cmp(&b.x_root));
    roots.dedup_by(|a, b| a.x_root == b.x_root);
    Ok(PulseSearch {
        roots,
        degenerate: false,
        unresolved,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyParameter {
    pub n: u32,
    pub lambda_star: f64,
    pub x_star: f64,
    /// `g_n` at the solution.
    pub g_residual: f64,
    /// `dg_n/dx` at the solution.
    pub gx_residual: f64,
    /// Second derivative, by central differences of the first.
    pub gxx: f64,
    /// `gxx` is clearly nonzero.
    pub quadratic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyOptions {
    /// Angular window searched for coalescing pairs.
    pub x_window: (f64, f64),
    pub grid_points: usize,
    /// Sweep steps per unit of `ln lambda`.
    pub steps_per_log_unit: usize,
}

impl Default for TangencyOptions {
    fn default() -> Self {
        TangencyOptions {
            x_window: (0.05, PI - 0.05),
            grid_points: 2048,
            steps_per_log_unit: 24,
        }
    }
}

fn at_lambda(params: &ModelParams, lambda: f64) -> Option<ModelParams> {
    params.with_lambda(lambda).ok()
}

/// Critical points of `g_n` in the window with their values.
fn extrema(params: &ModelParams, n: u32, nodes: &[Node]) -> Vec<(Node, f64)> {
    let evals: Vec<Option<Eval>> = nodes.iter().map(|nd| eval(params, nd, n)).collect();
    let mut out = Vec::new();
    for i in 0..nodes.len() - 1 {
        let (Some(a), Some(b)) = (&evals[i], &evals[i + 1]) else {
            continue;
        };
        if (a.g_x > 0.0) == (b.g_x > 0.0) || nodes[i].side != nodes[i + 1].side {
            continue;
        }
        let side = nodes[i].side;
        let f = |s: f64| eval(params, &Node { side, s }, n).map_or(f64::NAN, |e| e.g_x);
        let (lo, hi) = (nodes[i].s.min(nodes[i + 1].s), nodes[i].s.max(nodes[i + 1].s));
        if let Some(s) = bisect_f64(f, lo, hi) {
            let nd = Node { side, s };
            if let Some(e) = eval(params, &nd, n) {
                out.push((nd, e.g));
            }
        }
    }
    out
}

/// Parameters in `lambda_bracket` at which two adjacent n-pulse roots merge and vanish
/// as `lambda` decreases; sorted descending.
pub fn find_tangency_lambda(
    params: &ModelParams,
    n: u32,
    lambda_bracket: (f64, f64),
    opts: &TangencyOptions,
) -> Result<Vec<TangencyParameter>> {
    let (lo, hi) = lambda_bracket;
    if n == 0 {
        return Err(Error::InvalidIndex(0));
    }
    if !(lo > 0.0 && lo < hi && hi < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda bracket ({lo}, {hi}) must lie inside (0, 1)"
        )));
    }
    let (wa, wb) = opts.x_window;
    let nodes = grid(wa.max(1e-12), wb.min(PI - 1e-12), opts.grid_points);
    let steps = (((hi / lo).ln() * opts.steps_per_log_unit as f64).ceil() as usize).max(2);
    let lambdas: Vec<f64> = (0..=steps)
        .map(|i| (hi.ln() + (lo.ln() - hi.ln()) * i as f64 / steps as f64).exp())
        .collect();
    let table: Vec<Vec<(Node, f64)>> = lambdas
        .par_iter()
        .map(|&l| at_lambda(params, l).map_or(Vec::new(), |p| extrema(&p, n, &nodes)))
        .collect();
    let cell = (wb - wa) / opts.grid_points as f64;
    // Opposite sign to both neighbouring extrema means two roots flank the extremum.
    let flanked = |ex: &[(Node, f64)], i: usize| {
        let v = ex[i].1;
        i > 0 && i + 1 < ex.len() && (ex[i - 1].1 > 0.0) != (v > 0.0) && (ex[i + 1].1 > 0.0) != (v > 0.0)
    };
    let mut found: Vec<TangencyParameter> = Vec::new();
    for j in 0..steps {
        let (now, next) = (&table[j], &table[j + 1]);
        for i in 0..now.len() {
            if !flanked(now, i) {
                continue;
            }
            let (nd, v) = now[i];
            let Some((i2, &(nd2, v2))) = next
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 .0.x() - nd.x()).abs().total_cmp(&(b.1 .0.x() - nd.x()).abs()))
            else {
                continue;
            };
            if (nd2.x() - nd.x()).abs() > 8.0 * cell || (v > 0.0) == (v2 > 0.0) || flanked(next, i2) {
                continue;
            }
            let half = 8.0 * cell;
            if let Some(t) = refine_tangency(params, n, nd, (lambdas[j + 1], lambdas[j]), half) {
                if !found.iter().any(|f| (f.lambda_star / t.lambda_star - 1.0).abs() < 1e-9) {
                    found.push(t);
                }
            }
        }
    }
    if found.is_empty() {
        return Err(Error::NoCoalescenceInBracket);
    }
    found.sort_by(|a, b| b.lambda_star.total_cmp(&a.lambda_star));
    Ok(found)
}

/// Critical point of `g_n` near `guess` at a given `lambda`.
fn critical_near(params: &ModelParams, n: u32, guess: Node, half: f64) -> Option<(Node, Eval)> {
    let side = guess.side;
    let f = |s: f64| eval(params, &Node { side, s }, n).map_or(f64::NAN, |e| e.g_x);
    let lo = (guess.s - half).max(guess.s * 0.5);
    let hi = (guess.s + half).min(FRAC_PI_2);
    let s = bisect_f64(f, lo, hi)?;
    let nd = Node { side, s };
    eval(params, &nd, n).map(|e| (nd, e))
}

fn refine_tangency(
    params: &ModelParams,
    n: u32,
    guess: Node,
    bracket: (f64, f64),
    half: f64,
) -> Option<TangencyParameter> {
    // Bisection on the extremum value as a function of lambda.
    let h = |l: f64| {
        let p = at_lambda(params, l)?;
        critical_near(&p, n, guess, half).map(|(_, e)| e.g)
    };
    let (mut a, mut b) = bracket;
    let (mut ha, hb) = (h(a)?, h(b)?);
    if (ha > 0.0) == (hb > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = (a * b).sqrt();
        if m <= a || m >= b {
            break;
        }
        let hm = h(m)?;
        if (hm > 0.0) == (ha > 0.0) {
            a = m;
            ha = hm;
        } else {
            b = m;
        }
    }
    let mut lambda = if ha.abs() < hb.abs() { a } else { b };
    let p = at_lambda(params, lambda)?;
    let (mut nd, _) = critical_near(&p, n, guess, half)?;
    // Newton on (g, g_x) = 0 in (s, lambda).
    for _ in 0..8 {
        let p = at_lambda(params, lambda)?;
        let e = eval(&p, &nd, n)?;
        let ds = 1e-6 * nd.s.min(1.0);
        let dl = 1e-7 * lambda;
        let sgn = if nd.side == Side::Left { 1.0 } else { -1.0 };
        let ep = eval(&p, &Node { s: nd.s + ds, ..nd }, n)?;
        let em = eval(&p, &Node { s: nd.s - ds, ..nd }, n)?;
        let gxx = sgn * (ep.g_x - em.g_x) / (2.0 * ds);
        let el = eval(&at_lambda(params, lambda + dl)?, &nd, n)?;
        let gxl = (el.g_x - e.g_x) / dl;
        // Columns: d/dx, d/dlambda.
        let j = [[e.g_x, e.g_lambda], [gxx, gxl]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = (j[1][1] * e.g - j[0][1] * e.g_x) / det;
        let dlam = (j[0][0] * e.g_x - j[1][0] * e.g) / det;
        nd.s -= sgn * dx;
        lambda -= dlam;
        if dx.abs() < 1e-15 * nd.s && dlam.abs() < 1e-15 * lambda {
            break;
        }
    }
    let p = at_lambda(params, lambda)?;
    let e = eval(&p, &nd, n)?;
    let ds = 1e-5 * nd.s.min(1.0);
    let ep = eval(&p, &Node { s: nd.s + ds, ..nd }, n)?;
    let em = eval(&p, &Node { s: nd.s - ds, ..nd }, n)?;
    let sgn = if nd.side == Side::Left { 1.0 } else { -1.0 };
    let gxx = sgn * (ep.g_x - em.g_x) / (2.0 * ds);
    Some(TangencyParameter {
        n,
        lambda_star: lambda,
        x_star: nd.x(),
        g_residual: e.g,
        gx_residual: e.g_x,
        gxx,
        quadratic: gxx.abs() > 1e-6 * lambda,
    })
}
