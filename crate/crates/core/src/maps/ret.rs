use serde::{Deserialize, Serialize};

use super::{reduce_angle, turns, SectionPoint};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Where one application of the return map lands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Landing {
    Point(SectionPoint),
    /// The image height is exactly zero: the orbit lies on `W^s(sigma_1)`.
    StableManifold { x: f64 },
}

impl Landing {
    pub fn point(&self) -> Option<SectionPoint> {
        match self {
            Landing::Point(p) => Some(*p),
            Landing::StableManifold { .. } => None,
        }
    }

    pub fn x(&self) -> f64 {
        match self {
            Landing::Point(p) => p.x(),
            Landing::StableManifold { x } => *x,
        }
    }

    pub fn y(&self) -> f64 {
        match self {
            Landing::Point(p) => p.y(),
            Landing::StableManifold { .. } => 0.0,
        }
    }
}

/// One return together with its winding number and flight time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub landing: Landing,
    /// Full turns of the angular coordinate removed by the reduction mod `2pi`.
    pub turns: i64,
    /// Unreduced image angle `x - K log|y|`.
    pub lifted_x: f64,
    pub time: f64,
}

/// Applies the return map and keeps the winding bookkeeping.
pub fn advance(p: &SectionPoint, params: &ModelParams) -> Result<Step> {
    let ay = p.y().abs();
    let log_y = ay.ln();
    let lifted_x = p.x() - params.k() * log_y;
    let x = reduce_angle(lifted_x);
    let h = ay.powf(params.delta()).copysign(p.y()) + params.lambda() * x.sin();
    if !(h.abs() < 1.0) {
        return Err(Error::Escaped { x, y: h });
    }
    let landing = if h == 0.0 {
        Landing::StableManifold { x }
    } else {
        Landing::Point(SectionPoint::new(x, h)?)
    };
    Ok(Step {
        landing,
        turns: turns(lifted_x),
        lifted_x,
        time: -params.k() * log_y,
    })
}

/// First-return map `P_lambda` on `In(sigma_1)`.
pub fn return_map(p: &SectionPoint, params: &ModelParams) -> Result<Landing> {
    advance(p, params).map(|s| s.landing)
}

/// Flight time `-K log|y|` until the first return.
pub fn return_time(p: &SectionPoint, params: &ModelParams) -> f64 {
    -params.k() * p.y().abs().ln()
}

/// Derivative of the return map, kept in factored form `D Psi(eta(p)) * D eta(p)`.
///
/// `D eta = [[1, -K/y], [0, delta |y|^(delta-1)]]` and `D Psi = [[1, 0], [lambda cos x', 1]]`
/// with `x'` the image angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnJacobian {
    pub shear: f64,
    pub twist: f64,
    pub contraction: f64,
}

impl ReturnJacobian {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [1.0, self.twist],
            [
                self.shear,
                self.contraction + self.shear * self.twist,
            ],
        ]
    }

    /// Product of the factor determinants, `delta |y|^(delta - 1)`.
    pub fn det(&self) -> f64 {
        self.contraction
    }

    pub fn trace(&self) -> f64 {
        1.0 + self.contraction + self.shear * self.twist
    }

    /// Singular values `(sigma_max, sigma_min)`.
    pub fn singular_values(&self) -> (f64, f64) {
        let [[a, b], [c, d]] = self.matrix();
        let s1 = (a + d).hypot(c - b);
        let s2 = (a - d).hypot(c + b);
        let smax = 0.5 * (s1 + s2);
        (smax, self.det().abs() / smax)
    }
}

pub fn return_map_jacobian(p: &SectionPoint, params: &ModelParams) -> ReturnJacobian {
    let ay = p.y().abs();
    let xi = reduce_angle(p.x() - params.k() * ay.ln());
    ReturnJacobian {
        shear: params.lambda() * xi.cos(),
        twist: -params.k() / p.y(),
        contraction: params.delta() * ay.powf(params.delta() - 1.0),
    }
}

/// One-step stretching rates `log sigma_i(DP(p)) / t1(p)`.
///
/// For `y -> 0` these tend to `1/K` and `-delta/K`.
pub fn local_rates(p: &SectionPoint, params: &ModelParams) -> (f64, f64) {
    let j = return_map_jacobian(p, params);
    let (smax, _) = j.singular_values();
    let t = return_time(p, params);
    (smax.ln() / t, (j.det().ln() - smax.ln()) / t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    HitStableManifold,
    Escaped,
}

/// A forward orbit of the return map with per-step flight times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub points: Vec<SectionPoint>,
    pub times: Vec<f64>,
    pub total_time: f64,
    pub termination: Termination,
    /// Angle at which the orbit reached `y = 0`, if it did.
    pub stable_landing_x: Option<f64>,
}

pub fn iterate_orbit(p: &SectionPoint, params: &ModelParams, n_steps: usize) -> OrbitRecord {
    let mut points = vec![*p];
    let mut times = Vec::with_capacity(n_steps);
    let mut termination = Termination::Completed;
    let mut stable_landing_x = None;
    let mut current = *p;
    for _ in 0..n_steps {
        match advance(&current, params) {
            Ok(step) => {
                times.push(step.time);
                match step.landing {
                    Landing::Point(q) => {
                        points.push(q);
                        current = q;
                    }
                    Landing::StableManifold { x } => {
                        stable_landing_x = Some(x);
                        termination = Termination::HitStableManifold;
                        break;
                    }
                }
            }
            Err(_) => {
                termination = Termination::Escaped;
                break;
            }
        }
    }
    OrbitRecord {
        total_time: times.iter().sum(),
        points,
        times,
        termination,
        stable_landing_x,
    }
}
