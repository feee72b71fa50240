use crate::{Error, Result};
use std::f64::consts::TAU;

/// Height below which rows are spaced geometrically.
pub const LOG_THRESHOLD: f64 = 0.1;

/// Cells over `[0, 2 pi) x [-y_max, y_max]`: uniform in `x`, and in `|y|` uniform above
/// [`LOG_THRESHOLD`] and geometric below it, the innermost row reaching down to `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    nx: usize,
    ny: usize,
    /// Row boundaries of the upper half, from `0` to `y_max`.
    bounds: Vec<f64>,
    /// Row centers over the full height, increasing.
    centers: Vec<f64>,
}

impl CellGrid {
    pub fn new(nx: usize, ny: usize, y_max: f64) -> Result<Self> {
        if nx < 4 || ny < 16 || ny % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs nx >= 4 and even ny >= 16, got {nx} x {ny}"
            )));
        }
        if !(y_max > LOG_THRESHOLD && y_max < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "y_max must lie in (0.1, 1), got {y_max}"
            )));
        }
        let half = ny / 2;
        let n_uniform = (half / 4).max(1);
        let n_log = half - n_uniform;
        let dy = (y_max - LOG_THRESHOLD) / n_uniform as f64;
        // Geometric ratio chosen so the cell height is continuous at the threshold.
        let ratio = 1.0 + dy / LOG_THRESHOLD;
        let mut bounds = Vec::with_capacity(half + 1);
        bounds.push(0.0);
        for j in 1..=n_log {
            bounds.push(LOG_THRESHOLD * ratio.powi(j as i32 - n_log as i32));
        }
        for j in 1..=n_uniform {
            bounds.push(LOG_THRESHOLD + dy * j as f64);
        }
        let upper: Vec<f64> = bounds.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut centers: Vec<f64> = upper.iter().rev().map(|c| -c).collect();
        centers.extend(&upper);
        Ok(CellGrid {
            nx,
            ny,
            bounds,
            centers,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn y_max(&self) -> f64 {
        *self.bounds.last().expect("bounds are nonempty")
    }

    pub fn dx(&self) -> f64 {
        TAU / self.nx as f64
    }

    /// Diameter of the largest cell.
    pub fn max_cell_diameter(&self) -> f64 {
        let tallest = self
            .bounds
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max);
        self.dx().hypot(tallest)
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        col * self.ny + row
    }

    pub fn col_row(&self, cell: usize) -> (usize, usize) {
        (cell / self.ny, cell % self.ny)
    }

    pub fn center(&self, cell: usize) -> (f64, f64) {
        let (c, r) = self.col_row(cell);
        ((c as f64 + 0.5) * self.dx(), self.centers[r])
    }

    pub fn row_center(&self, row: usize) -> f64 {
        self.centers[row]
    }

    /// `(y_low, y_high)` of a row.
    pub fn row_span(&self, row: usize) -> (f64, f64) {
        let half = self.ny / 2;
        if row >= half {
            let j = row - half;
            (self.bounds[j], self.bounds[j + 1])
        } else {
            let j = half - 1 - row;
            (-self.bounds[j + 1], -self.bounds[j])
        }
    }

    /// Row containing height `y`, if inside the grid.
    pub fn row_of(&self, y: f64) -> Option<usize> {
        if !(y.abs() <= self.y_max()) {
            return None;
        }
        let half = self.ny / 2;
        let j = self.bounds.partition_point(|&b| b <= y.abs()).clamp(1, half) - 1;
        Some(if y >= 0.0 { half + j } else { half - 1 - j })
    }

    pub fn col_of(&self, x: f64) -> usize {
        ((x.rem_euclid(TAU) / self.dx()) as usize).min(self.nx - 1)
    }

    /// Visits the cells whose centers lie strictly within `eps` of `(x, y)`, as
    /// `(column, first_row, end_row)` runs.
    pub fn for_each_ball_run(&self, x: f64, y: f64, eps: f64, mut f: impl FnMut(usize, usize, usize)) {
        let dx = self.dx();
        let reach = (eps / dx).ceil() as i64 + 1;
        let c0 = self.col_of(x) as i64;
        let span = (2 * reach + 1).min(self.nx as i64);
        for off in 0..span {
            let c = (c0 - reach + off).rem_euclid(self.nx as i64) as usize;
            let xc = (c as f64 + 0.5) * dx;
            let d = crate::maps::angle_diff(xc, x).abs();
            if d >= eps {
                continue;
            }
            let h = (eps * eps - d * d).sqrt();
            let lo = self.centers.partition_point(|&cy| cy <= y - h);
            let hi = self.centers.partition_point(|&cy| cy < y + h);
            if lo < hi {
                f(c, lo, hi);
            }
        }
    }
}
