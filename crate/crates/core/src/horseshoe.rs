//! Horizontal strips `H_n` of the countable horseshoe near the primary connection.
//!
//! A point `(x, y)` of the rectangle belongs to `H_n` when its image angle
//! `x - K log y` lands in the rectangle's angular window after exactly `n` full
//! turns. Solving for `y` gives the closed-form boundaries
//!
//! ```text
//! lower(x) = exp((x - c - tau - 2 pi n) / K),   upper(x) = exp((x - c + tau - 2 pi n) / K)
//! ```
//!
//! for a rectangle of half-width `tau` around the angle `c`.

use crate::maps::{advance, angle_diff, return_map_jacobian, Landing, SectionPoint};
use crate::{Error, ModelParams, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::ops::RangeInclusive;

/// Minimum number of angular samples per strip.
pub const MIN_X_SAMPLES: usize = 64;
/// Minimum number of height samples per angular sample.
pub const MIN_Y_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripRectangle {
    center_x: f64,
    tau: f64,
}

impl StripRectangle {
    /// `center_x` is normally `0` or `pi`, the zeros of the unstable curve.
    pub fn new(center_x: f64, tau: f64) -> Result<Self> {
        if !center_x.is_finite() || !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rectangle needs finite center and 0 < tau < 1, got ({center_x}, {tau})"
            )));
        }
        Ok(StripRectangle { center_x, tau })
    }

    pub fn center_x(&self) -> f64 {
        self.center_x
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Signed angular offset from the center, or `None` outside the window.
    fn offset(&self, x: f64) -> Option<f64> {
        let u = angle_diff(x, self.center_x);
        (u.abs() <= self.tau).then_some(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub n: u32,
    /// Sample angles, as offsets added to the rectangle center.
    pub xs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Largest vertical extent over the samples.
    pub height: f64,
    /// Top of the strip, `upper(center + tau)`.
    pub top: f64,
    rect: StripRectangle,
    k: f64,
}

impl Strip {
    fn new(n: u32, rect: StripRectangle, k: f64, samples: usize) -> Self {
        let (c, tau) = (rect.center_x, rect.tau);
        let xs: Vec<f64> = (0..samples)
            .map(|i| c - tau + 2.0 * tau * i as f64 / (samples - 1) as f64)
            .collect();
        let lower: Vec<f64> = xs.iter().map(|&x| bound(x, c + tau, n, k)).collect();
        let upper: Vec<f64> = xs.iter().map(|&x| bound(x, c - tau, n, k)).collect();
        let height = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max);
        Strip {
            n,
            xs,
            lower,
            upper,
            height,
            top: bound(c + tau, c - tau, n, k),
            rect,
            k,
        }
    }

    pub fn rectangle(&self) -> StripRectangle {
        self.rect
    }

    /// Lower and upper bound at angle `center + u`.
    pub fn bounds_at(&self, u: f64) -> (f64, f64) {
        let c = self.rect.center_x;
        let x = c + u;
        (
            bound(x, c + self.rect.tau, self.n, self.k),
            bound(x, c - self.rect.tau, self.n, self.k),
        )
    }

    /// Exact membership: angle in the window and image angle in the window after `n` turns.
    pub fn contains(&self, p: &SectionPoint) -> bool {
        if p.y() <= 0.0 {
            return false;
        }
        let Some(u) = self.rect.offset(p.x()) else {
            return false;
        };
        let lifted = u - self.k * p.y().ln();
        (lifted - TAU * self.n as f64).abs() <= self.rect.tau
    }
}

/// Height at which the image angle of `x` equals `target + 2 pi n`.
fn bound(x: f64, target: f64, n: u32, k: f64) -> f64 {
    ((x - target - TAU * n as f64) / k).exp()
}

/// Strips `H_n` for `n` in range that fit inside the rectangle, ordered by decreasing height.
pub fn detect_strips(
    params: &ModelParams,
    rect: &StripRectangle,
    n_range: RangeInclusive<u32>,
) -> Result<Vec<Strip>> {
    // Without the perturbation there is no horseshoe to code against.
    if params.lambda() <= 0.0 {
        return Err(Error::EmptyRange);
    }
    let strips: Vec<Strip> = n_range
        .filter(|&n| n >= 1)
        .map(|n| Strip::new(n, *rect, params.k(), MIN_X_SAMPLES))
        .filter(|s| s.top <= rect.tau && s.lower.iter().all(|&l| l > f64::MIN_POSITIVE))
        .collect();
    if strips.is_empty() {
        return Err(Error::EmptyRange);
    }
    Ok(strips)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub n: u32,
    pub crossed: bool,
    /// Image angles, as `[min, max]` offsets from the rectangle center.
    pub image_x_extent: [f64; 2],
    pub image_y_extent: [f64; 2],
    /// Geometric mean of the largest singular value over the samples.
    pub expansion_estimate: f64,
    /// Geometric mean of the smallest singular value over the samples.
    pub contraction_estimate: f64,
    pub x_samples: usize,
    pub y_samples: usize,
}

/// Maps a sample of the strip forward and tests whether the image crosses it vertically.
///
/// The image must reach above `top` and below `-top`, where `top` is the strip's
/// highest point, and its angles must stay inside the rectangle. Sampling starts at
/// 64 x 16 and doubles until the verdict and the estimates stabilize.
pub fn strip_crossing_check(
    strip: &Strip,
    params: &ModelParams,
    rect: &StripRectangle,
) -> Result<CrossingReport> {
    let (mut nx, mut ny) = (MIN_X_SAMPLES, MIN_Y_SAMPLES);
    let mut report = crossing_at(strip, params, rect, nx, ny)?;
    for _ in 0..4 {
        nx *= 2;
        ny *= 2;
        let next = crossing_at(strip, params, rect, nx, ny)?;
        let stable = next.crossed == report.crossed
            && (next.expansion_estimate / report.expansion_estimate - 1.0).abs() < 1e-3;
        report = next;
        if stable {
            break;
        }
    }
    Ok(report)
}

fn crossing_at(
    strip: &Strip,
    params: &ModelParams,
    rect: &StripRectangle,
    nx: usize,
    ny: usize,
) -> Result<CrossingReport> {
    let tau = rect.tau;
    let width = 2.0 * tau;
    let rows: Vec<Result<Vec<(f64, f64, f64, f64)>>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let u = -tau + width * i as f64 / (nx - 1) as f64;
            let (lo, hi) = strip.bounds_at(u);
            let (llo, lhi) = (lo.ln(), hi.ln());
            (0..ny)
                .map(|j| {
                    let y = (llo + (lhi - llo) * j as f64 / (ny - 1) as f64).exp();
                    let p = SectionPoint::new(rect.center_x + u, y)?;
                    let jac = return_map_jacobian(&p, params);
                    let (smax, smin) = jac.singular_values();
                    let step = advance(&p, params)?;
                    let (ix, iy) = match step.landing {
                        Landing::Point(q) => (q.x(), q.y()),
                        Landing::StableManifold { x } => (x, 0.0),
                    };
                    Ok((angle_diff(ix, rect.center_x), iy, smax.ln(), smin.ln()))
                })
                .collect()
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut xe = [f64::INFINITY, f64::NEG_INFINITY];
    let mut ye = [f64::INFINITY, f64::NEG_INFINITY];
    let (mut log_e, mut log_c) = (0.0, 0.0);
    for (i, row) in rows.iter().enumerate() {
        for (j, &(ix, iy, le, lc)) in row.iter().enumerate() {
            xe = [xe[0].min(ix), xe[1].max(ix)];
            ye = [ye[0].min(iy), ye[1].max(iy)];
            log_e += le;
            log_c += lc;
            if i > 0 {
                let (px, py, _, _) = rows[i - 1][j];
                let jump = (ix - px).abs().max((iy - py).abs());
                if jump > width {
                    return Err(Error::SamplingTooCoarse { jump, width });
                }
            }
        }
    }
    let count = (nx * ny) as f64;
    let top = strip.top;
    let crossed = ye[0] < -top && ye[1] > top && xe[0] >= -tau && xe[1] <= tau;
    Ok(CrossingReport {
        n: strip.n,
        crossed,
        image_x_extent: xe,
        image_y_extent: ye,
        expansion_estimate: (log_e / count).exp(),
        contraction_estimate: (log_c / count).exp(),
        x_samples: nx,
        y_samples: ny,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Itinerary {
    /// Strip index of each visited point, starting with the initial point.
    pub symbols: Vec<u32>,
    /// One-based position of the first visited point outside every strip, if any.
    pub escape_step: Option<usize>,
}

/// Symbolic itinerary of `p` over `n_steps` points of its forward orbit.
pub fn encode_itinerary(
    p: &SectionPoint,
    params: &ModelParams,
    strips: &[Strip],
    n_steps: usize,
) -> Itinerary {
    let mut symbols = Vec::with_capacity(n_steps);
    let mut cur = Some(*p);
    for step in 1..=n_steps {
        let Some(q) = cur else {
            return Itinerary {
                symbols,
                escape_step: Some(step),
            };
        };
        let Some(s) = strips.iter().find(|s| s.contains(&q)) else {
            return Itinerary {
                symbols,
                escape_step: Some(step),
            };
        };
        symbols.push(s.n);
        cur = match advance(&q, params) {
            Ok(st) => st.landing.point(),
            Err(_) => None,
        };
    }
    Itinerary {
        symbols,
        escape_step: None,
    }
}
