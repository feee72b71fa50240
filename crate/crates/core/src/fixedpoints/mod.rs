//! The family of fixed points `p_l` of the return map, one per winding index `l >= 1`.
//!
//! A fixed point winds exactly `l` times, so its height is pinned to
//! `y_l = exp(-2 pi l / K)` and its angle solves `lambda sin x = y_l - y_l^delta`.

mod eigen;
mod lyapunov;
mod thresholds;

pub use eigen::{eigen_data, eigen_data_with, Classification, EigenData, Eigenvalues};
pub use lyapunov::{
    eigen_asymptotics_scan, lyapunov_cycle, lyapunov_fixed_point, lyapunov_numeric, EigenScanRow,
    LyapunovData, LyapunovOptions,
};
pub use thresholds::{
    bifurcation_thresholds, bifurcation_thresholds_with, principal_trace, BifurcationThresholds,
    Precision,
};

use crate::maps::{return_map, SectionPoint};
use crate::{Error, ModelParams, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Numerical tolerances used across the module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Residual above which a point is rejected as a fixed point.
    pub not_fixed: f64,
    /// Distance to `mu = +-1` at which the boundary classifications apply.
    pub boundary: f64,
    /// Relative agreement required between closed-form thresholds and bisection.
    pub threshold_agreement: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            not_fixed: 1e-8,
            boundary: 1e-9,
            threshold_agreement: 1e-10,
        }
    }
}

/// The two solutions of `sin x = s` in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `cos x >= 0`.
    Principal,
    /// `cos x <= 0`.
    Conjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub ell: u32,
    pub branch: Branch,
    pub x: f64,
    pub y: f64,
    pub lambda: f64,
}

impl FixedPoint {
    pub fn point(&self) -> SectionPoint {
        SectionPoint::new(self.x, self.y).expect("fixed point heights lie in (0, 1)")
    }

    /// Flight time of one return, `-K log y_l = 2 pi l`.
    pub fn period(&self) -> f64 {
        TAU * self.ell as f64
    }

    /// Distance between `p` and `P(p)`.
    pub fn residual(&self, params: &ModelParams) -> f64 {
        residual(&self.point(), params)
    }
}

pub(crate) fn residual(p: &SectionPoint, params: &ModelParams) -> f64 {
    match return_map(p, params) {
        Ok(l) => {
            let dx = crate::maps::angle_diff(l.x(), p.x()).abs();
            dx.hypot(l.y() - p.y())
        }
        Err(_) => f64::INFINITY,
    }
}

fn check_ell(ell: i64) -> Result<u32> {
    if ell < 1 || ell > u32::MAX as i64 {
        return Err(Error::InvalidIndex(ell));
    }
    Ok(ell as u32)
}

/// Height `y_l = exp(-2 pi l / K)` of the `l`-th fixed point.
pub fn fixed_point_height(params: &ModelParams, ell: i64) -> Result<f64> {
    let ell = check_ell(ell)?;
    Ok((-TAU * ell as f64 / params.k()).exp())
}

/// `a_l = y_l - y_l^delta`, the smallest `lambda` at which `p_l` exists.
pub fn saddle_node_threshold(params: &ModelParams, ell: i64) -> Result<f64> {
    let ell = check_ell(ell)?;
    let log_y = -TAU * ell as f64 / params.k();
    // y (1 - y^(delta-1)) keeps full relative accuracy when y^(delta-1) is near 1.
    Ok(log_y.exp() * -((params.delta() - 1.0) * log_y).exp_m1())
}

/// Fixed points with winding `l` at `params.lambda()`; empty below `a_l`.
pub fn fixed_point_family(params: &ModelParams, ell: i64) -> Result<Vec<FixedPoint>> {
    let a = saddle_node_threshold(params, ell)?;
    let ell = ell as u32;
    let y = fixed_point_height(params, ell as i64)?;
    let lambda = params.lambda();
    if y <= 0.0 || lambda < a || lambda == 0.0 {
        return Ok(Vec::new());
    }
    let mk = |branch, x| FixedPoint {
        ell,
        branch,
        x,
        y,
        lambda,
    };
    let s = a / lambda;
    if s >= 1.0 {
        return Ok(vec![mk(Branch::Principal, FRAC_PI_2)]);
    }
    let x = s.asin();
    Ok(vec![mk(Branch::Principal, x), mk(Branch::Conjugate, PI - x)])
}
