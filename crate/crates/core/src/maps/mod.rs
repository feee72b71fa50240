//! Local saddle-focus maps, transitions and the first-return map on `In(sigma_1)`.
//!
//! Section coordinates are `(x, y)`: `x` an angle in `[0, 2pi)` and `y` the signed
//! height on the cylinder wall. The lower half `y < 0` uses the mirrored formulas:
//! `|y|` inside logarithms and powers, sign carried through.

mod flow;
mod local;
mod ret;

pub use flow::{flow_trajectory, FlowSample, FlowSegment, FlowTrajectory, SegmentKind};
pub use local::{first_hit_eta, local_exit, transition, Edge, Entry, Node, OutPoint};
pub use ret::{
    advance, iterate_orbit, local_rates, return_map, return_map_jacobian, return_time, Landing,
    OrbitRecord, ReturnJacobian, Step, Termination,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Reduces an angle to `[0, 2pi)`.
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Number of full turns removed by [`reduce_angle`].
pub fn turns(x: f64) -> i64 {
    (x / TAU).floor() as i64
}

/// Signed angular difference `a - b` folded into `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// A point of the cross-section `In(sigma_1)` off the local stable manifold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    x: f64,
    y: f64,
}

impl SectionPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite point ({x}, {y})")));
        }
        if y == 0.0 {
            return Err(Error::DegenerateInput("y = 0 lies on the local stable manifold"));
        }
        if y.abs() >= 1.0 {
            return Err(Error::Escaped { x, y });
        }
        Ok(Self {
            x: reduce_angle(x),
            y,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Distance in section coordinates, periodic in `x`.
    pub fn distance(&self, other: &SectionPoint) -> f64 {
        angle_diff(self.x, other.x).hypot(self.y - other.y)
    }
}
