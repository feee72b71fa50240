//! Discrete (epsilon, tau)-chain accessibility on the section.
//!
//! Every cell center is followed for up to `max_iterates_per_hop` returns. A hop
//! of `k` returns is admissible once the accumulated flight time `sum -K log|y|`
//! exceeds `tau`, and it connects the cell to every cell whose center lies within
//! `epsilon` of the landing point. The region reachable from a seed approximates
//! the set of points chain-accessible from `sigma_2`; it is not the attracting set.

mod grid;

pub use grid::{CellGrid, LOG_THRESHOLD};

use crate::maps::{advance, Landing, SectionPoint};
use crate::pulses::CurveKind;
use crate::{Error, ModelParams, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub epsilon: f64,
    pub tau: f64,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub max_iterates_per_hop: usize,
    pub y_max: f64,
}

impl ChainConfig {
    /// 512 x 512 grid up to `|y| = 0.5`, epsilon four nominal cell diagonals, tau = pi.
    pub fn standard() -> Self {
        let mut c = ChainConfig {
            epsilon: 0.0,
            tau: std::f64::consts::PI,
            grid_nx: 512,
            grid_ny: 512,
            max_iterates_per_hop: 3,
            y_max: 0.5,
        };
        c.epsilon = 4.0 * c.nominal_diagonal();
        c
    }

    /// Diameter of the largest cell of the configured grid.
    pub fn nominal_diagonal(&self) -> f64 {
        CellGrid::new(self.grid_nx, self.grid_ny, self.y_max).map_or(f64::NAN, |g| g.max_cell_diameter())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ChainConfig { epsilon, ..*self }
    }

    fn validate(&self) -> Result<CellGrid> {
        if !(self.epsilon > 0.0) || !(self.tau > 0.0) || self.max_iterates_per_hop == 0 {
            return Err(Error::InvalidArgument(format!(
                "chain config needs epsilon > 0, tau > 0 and at least one iterate: {self:?}"
            )));
        }
        let grid = CellGrid::new(self.grid_nx, self.grid_ny, self.y_max)?;
        let diameter = grid.max_cell_diameter();
        if diameter > self.epsilon / 2.0 {
            return Err(Error::ResolutionTooCoarse {
                diameter,
                half_epsilon: self.epsilon / 2.0,
            });
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    /// Number of returns.
    pub k: u32,
    pub x: f64,
    pub y: f64,
    /// Accumulated flight time of the `k` returns.
    pub time: f64,
    /// The orbit ended on the stable line `y = 0`.
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainEdge {
    pub target: usize,
    pub k: u32,
    pub time: f64,
    pub terminal: bool,
}

/// Cells and their admissible hops; edges are every cell within epsilon of a hop landing.
#[derive(Debug, Clone)]
pub struct ChainGraph {
    grid: CellGrid,
    config: ChainConfig,
    lambda: f64,
    hops: Vec<Vec<Hop>>,
}

fn cell_hops(center: (f64, f64), params: &ModelParams, config: &ChainConfig) -> Vec<Hop> {
    let mut hops = Vec::new();
    let Ok(mut p) = SectionPoint::new(center.0, center.1) else {
        return hops;
    };
    let mut time = 0.0;
    for k in 1..=config.max_iterates_per_hop as u32 {
        let Ok(step) = advance(&p, params) else {
            break;
        };
        time += step.time;
        let terminal = matches!(step.landing, Landing::StableManifold { .. });
        if time > config.tau {
            hops.push(Hop {
                k,
                x: step.landing.x(),
                y: step.landing.y(),
                time,
                terminal,
            });
        }
        match step.landing {
            Landing::Point(q) => p = q,
            Landing::StableManifold { .. } => break,
        }
    }
    hops
}

pub fn build_chain_graph(params: &ModelParams, config: &ChainConfig) -> Result<ChainGraph> {
    let grid = config.validate()?;
    let hops = (0..grid.len())
        .into_par_iter()
        .map(|i| cell_hops(grid.center(i), params, config))
        .collect();
    Ok(ChainGraph {
        grid,
        config: *config,
        lambda: params.lambda(),
        hops,
    })
}

impl ChainGraph {
    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn hops(&self, cell: usize) -> &[Hop] {
        &self.hops[cell]
    }

    /// Explicit out-edges of a cell.
    pub fn edges_from(&self, cell: usize) -> Vec<ChainEdge> {
        let mut out = Vec::new();
        for h in &self.hops[cell] {
            self.grid
                .for_each_ball_run(h.x, h.y, self.config.epsilon, |c, a, b| {
                    out.extend((a..b).map(|r| ChainEdge {
                        target: self.grid.index(c, r),
                        k: h.k,
                        time: h.time,
                        terminal: h.terminal,
                    }))
                });
        }
        out
    }
}

/// Fixed-size set of cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    words: Vec<u64>,
    len: usize,
}

impl CellSet {
    pub fn new(len: usize) -> Self {
        CellSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn capacity(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

struct AtomicCellSet {
    words: Vec<AtomicU64>,
}

impl AtomicCellSet {
    fn new(len: usize) -> Self {
        AtomicCellSet {
            words: (0..len.div_ceil(64)).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    /// Sets bits `[start, end)`.
    fn set_range(&self, start: usize, end: usize) {
        let mut i = start;
        while i < end {
            let w = i / 64;
            let lo = i % 64;
            let hi = (end - w * 64).min(64);
            let mask = if hi - lo == 64 {
                u64::MAX
            } else {
                ((1u64 << (hi - lo)) - 1) << lo
            };
            self.words[w].fetch_or(mask, Ordering::Relaxed);
            i = w * 64 + hi;
        }
    }

    fn into_set(self, len: usize) -> CellSet {
        CellSet {
            words: self.words.into_iter().map(|a| a.into_inner()).collect(),
            len,
        }
    }
}

/// `Curve(UnstableOfSigma2)` seeds the cells meeting `y = lambda sin x`, the section
/// trace of the unstable manifold of `sigma_2`; `Curve(StableOfSigma1)` seeds the cells
/// meeting the stable line `y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Seed {
    Curve(CurveKind),
    Cells(Vec<usize>),
}

impl Seed {
    pub fn describe(&self) -> String {
        match self {
            Seed::Curve(CurveKind::UnstableOfSigma2) => {
                "unstable curve y = lambda sin x (section trace of W^u(sigma_2))".into()
            }
            Seed::Curve(CurveKind::StableOfSigma1) => "stable line y = 0 (section trace of W^s(sigma_1))".into(),
            Seed::Cells(c) => format!("{} explicit cells", c.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRegion {
    pub members: CellSet,
    pub seed: Seed,
    pub seed_cells: CellSet,
    pub epsilon: f64,
}

/// Cells met by `y = lambda sin x`: per column, the rows spanned by the curve over the column.
pub fn curve_cells(grid: &CellGrid, lambda: f64) -> CellSet {
    let mut set = CellSet::new(grid.len());
    let dx = grid.dx();
    for c in 0..grid.nx() {
        let (a, b) = (c as f64 * dx, (c + 1) as f64 * dx);
        let mut lo = (lambda * a.sin()).min(lambda * b.sin());
        let mut hi = (lambda * a.sin()).max(lambda * b.sin());
        for crit in [std::f64::consts::FRAC_PI_2, 1.5 * std::f64::consts::PI] {
            if a < crit && crit < b {
                lo = lo.min(lambda * crit.sin());
                hi = hi.max(lambda * crit.sin());
            }
        }
        for r in 0..grid.ny() {
            let (y0, y1) = grid.row_span(r);
            if y0 <= hi && lo <= y1 {
                set.insert(grid.index(c, r));
            }
        }
    }
    set
}

fn seed_set(graph: &ChainGraph, seed: &Seed) -> CellSet {
    let grid = &graph.grid;
    match seed {
        Seed::Curve(CurveKind::UnstableOfSigma2) => curve_cells(grid, graph.lambda),
        Seed::Curve(CurveKind::StableOfSigma1) => curve_cells(grid, 0.0),
        Seed::Cells(cells) => {
            let mut set = CellSet::new(grid.len());
            for &c in cells.iter().filter(|&&c| c < grid.len()) {
                set.insert(c);
            }
            set
        }
    }
}

/// Reachability closure of the seed under the chain graph.
pub fn accessible_set(graph: &ChainGraph, seed: &Seed) -> Result<ChainRegion> {
    let seed_cells = seed_set(graph, seed);
    if seed_cells.count() == 0 {
        return Err(Error::EmptySeed);
    }
    let n = graph.grid.len();
    let ny = graph.grid.ny();
    let eps = graph.config.epsilon;
    let mut visited = seed_cells.clone();
    let mut frontier: Vec<usize> = seed_cells.iter().collect();
    while !frontier.is_empty() {
        let marked = AtomicCellSet::new(n);
        frontier.par_iter().for_each(|&cell| {
            for h in &graph.hops[cell] {
                graph.grid.for_each_ball_run(h.x, h.y, eps, |c, a, b| {
                    marked.set_range(c * ny + a, c * ny + b)
                });
            }
        });
        let marked = marked.into_set(n);
        let mut next = Vec::new();
        for (wi, (v, m)) in visited.words.iter_mut().zip(&marked.words).enumerate() {
            let mut fresh = m & !*v;
            *v |= fresh;
            while fresh != 0 {
                next.push(wi * 64 + fresh.trailing_zeros() as usize);
                fresh &= fresh - 1;
            }
        }
        frontier = next;
    }
    Ok(ChainRegion {
        members: visited,
        seed: seed.clone(),
        seed_cells,
        epsilon: eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// Members whose first return lands farther than epsilon from every member center.
    pub forward_invariance: Vec<usize>,
    /// Non-members with at least three of their four side neighbours in the region.
    pub closedness: Vec<usize>,
    /// Members of the epsilon/2 region outside the one-cell fattening of this region.
    pub stability: Vec<usize>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.forward_invariance.is_empty() && self.closedness.is_empty() && self.stability.is_empty()
    }
}

/// One-cell (eight-neighbour) dilation; columns wrap, rows do not.
pub fn fatten(set: &CellSet, grid: &CellGrid) -> CellSet {
    let mut out = set.clone();
    let (nx, ny) = (grid.nx() as i64, grid.ny() as i64);
    for i in set.iter() {
        let (c, r) = grid.col_row(i);
        for dc in -1..=1 {
            for dr in -1..=1 {
                let rr = r as i64 + dr;
                if !(0..ny).contains(&rr) {
                    continue;
                }
                let cc = (c as i64 + dc).rem_euclid(nx);
                out.insert(grid.index(cc as usize, rr as usize));
            }
        }
    }
    out
}

fn within_eps_of_member(region: &CellSet, grid: &CellGrid, x: f64, y: f64, eps: f64) -> bool {
    let mut hit = false;
    grid.for_each_ball_run(x, y, eps, |c, a, b| {
        if !hit {
            hit = (a..b).any(|r| region.contains(grid.index(c, r)));
        }
    });
    hit
}

/// Forward invariance, closedness and chain-stability proxies for a region built with `config`.
pub fn verify_chain_properties(
    region: &ChainRegion,
    params: &ModelParams,
    config: &ChainConfig,
) -> Result<ChainReport> {
    let grid = &config.validate()?;
    let members = &region.members;
    let eps = region.epsilon;
    let member_list: Vec<usize> = members.iter().collect();
    let forward_invariance: Vec<usize> = member_list
        .par_iter()
        .filter(|&&i| {
            let (x, y) = grid.center(i);
            let Ok(p) = SectionPoint::new(x, y) else {
                return false;
            };
            match advance(&p, params) {
                Ok(st) => !within_eps_of_member(members, grid, st.landing.x(), st.landing.y(), eps),
                Err(_) => true,
            }
        })
        .copied()
        .collect();
    let (nx, ny) = (grid.nx(), grid.ny());
    let closedness: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            if members.contains(i) {
                return false;
            }
            let (c, r) = grid.col_row(i);
            let mut count = 0;
            count += members.contains(grid.index((c + 1) % nx, r)) as usize;
            count += members.contains(grid.index((c + nx - 1) % nx, r)) as usize;
            if r + 1 < ny {
                count += members.contains(grid.index(c, r + 1)) as usize;
            }
            if r > 0 {
                count += members.contains(grid.index(c, r - 1)) as usize;
            }
            count >= 3
        })
        .collect();
    let half = build_chain_graph(params, &config.with_epsilon(eps / 2.0))?;
    let half_region = accessible_set(&half, &region.seed)?;
    let fat = fatten(members, grid);
    let stability: Vec<usize> = half_region.members.iter().filter(|&i| !fat.contains(i)).collect();
    Ok(ChainReport {
        forward_invariance,
        closedness,
        stability,
    })
}

/// Cell membership as CSV with columns `x_center,y_center,member`.
pub fn write_membership_csv<W: Write>(out: &mut W, grid: &CellGrid, region: &ChainRegion) -> std::io::Result<()> {
    writeln!(out, "x_center,y_center,member")?;
    for i in 0..grid.len() {
        let (x, y) = grid.center(i);
        writeln!(out, "{x:?},{y:?},{}", region.members.contains(i) as u8)?;
    }
    Ok(())
}
