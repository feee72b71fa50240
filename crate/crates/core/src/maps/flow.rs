use serde::{Deserialize, Serialize};

use super::{reduce_angle, return_map, Landing, SectionPoint};
use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    NearSigma1,
    OneToTwo,
    NearSigma2,
    TwoToOne,
}

/// A sample of the suspended flow in local cylinder coordinates `(rho, theta, z)`.
///
/// `theta` is not reduced so that its total change is the winding of the return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub t: f64,
    pub rho: f64,
    pub theta: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSegment {
    pub kind: SegmentKind,
    pub samples: Vec<FlowSample>,
}

impl FlowSegment {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub segments: Vec<FlowSegment>,
    pub end: Landing,
    pub duration: f64,
    /// Total change of the angular coordinate.
    pub winding: f64,
}

fn sample_times(duration: f64, dt: f64) -> Vec<f64> {
    let n = (duration / dt).ceil().max(1.0) as usize;
    (0..=n).map(|i| (i as f64 * dt).min(duration)).collect()
}

/// Reconstructs one full return of the linearized flow starting at `p`.
///
/// Inside `V1` the solution is `rho = e^(-C1 t)`, `theta = x + t`, `z = y e^(E1 t)`
/// until `|z| = 1`; inside `V2` it is `rho = r e^(E2 t)`, `theta = phi + t`,
/// `z = +-e^(-C2 t)` until `rho = 1`. Transitions take no time.
pub fn flow_trajectory(p: &SectionPoint, params: &ModelParams, dt: f64) -> Result<FlowTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("sampling step {dt} must be positive")));
    }
    let (x, y) = (p.x(), p.y());
    let ay = y.abs();
    let sign = y.signum();
    let (c1, e1, c2, e2) = (params.c1(), params.e1(), params.c2(), params.e2());

    let t1 = -ay.ln() / e1;
    let near1: Vec<FlowSample> = sample_times(t1, dt)
        .into_iter()
        .map(|t| FlowSample {
            t,
            rho: (-c1 * t).exp(),
            theta: x + t,
            z: (y * (e1 * t).exp()).clamp(-1.0, 1.0),
        })
        .collect();
    // Exact exit values; the sampled ones carry exp/log rounding.
    let r = ay.powf(params.delta1());
    let phi = x + t1;

    let link12 = vec![
        FlowSample {
            t: t1,
            rho: r,
            theta: phi,
            z: sign,
        },
        FlowSample {
            t: t1,
            rho: r,
            theta: phi,
            z: sign,
        },
    ];

    let t2 = -r.ln() / e2;
    let near2: Vec<FlowSample> = sample_times(t2, dt)
        .into_iter()
        .map(|s| FlowSample {
            t: t1 + s,
            rho: (r * (e2 * s).exp()).min(1.0),
            theta: phi + s,
            z: sign * (-c2 * s).exp(),
        })
        .collect();
    let theta_out = phi + t2;
    let z_out = sign * r.powf(params.delta2());
    let total = t1 + t2;
    let z_in = z_out + params.lambda() * reduce_angle(theta_out).sin();
    let link21 = vec![
        FlowSample {
            t: total,
            rho: 1.0,
            theta: theta_out,
            z: z_out,
        },
        FlowSample {
            t: total,
            rho: 1.0,
            theta: theta_out,
            z: z_in,
        },
    ];

    let end = return_map(p, params)?;
    Ok(FlowTrajectory {
        segments: vec![
            FlowSegment {
                kind: SegmentKind::NearSigma1,
                samples: near1,
            },
            FlowSegment {
                kind: SegmentKind::OneToTwo,
                samples: link12,
            },
            FlowSegment {
                kind: SegmentKind::NearSigma2,
                samples: near2,
            },
            FlowSegment {
                kind: SegmentKind::TwoToOne,
                samples: link21,
            },
        ],
        end,
        duration: total,
        winding: theta_out - x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{angle_diff, return_time};
    use std::f64::consts::E;

    #[test]
    fn near_sigma1_duration() {
        let p = ModelParams::new(2.0, 1.5, 3.0, 1.0, 0.0).unwrap();
        let f = flow_trajectory(&SectionPoint::new(0.2, 1.0 / E).unwrap(), &p, 0.01).unwrap();
        assert!((f.segments[0].duration() - 1.0 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn endpoint_and_duration_match_the_map() {
        let p = ModelParams::from_cycle_constants(1.0, 2.0, 0.01).unwrap();
        let q = SectionPoint::new(1.0, 0.01).unwrap();
        let f = flow_trajectory(&q, &p, 0.05).unwrap();
        let m = return_map(&q, &p).unwrap();
        let last = f.segments[3].samples[1];
        assert!(angle_diff(reduce_angle(last.theta), m.x()).abs() < 1e-10);
        assert!((last.z - m.y()).abs() < 1e-10);
        assert!((f.duration - return_time(&q, &p)).abs() < 1e-10);
        assert!((f.winding - return_time(&q, &p)).abs() < 1e-10);
    }

    #[test]
    fn samples_stay_inside_the_cylinders() {
        let p = ModelParams::new(2.0, 1.0, 3.0, 1.5, 0.05).unwrap();
        let f = flow_trajectory(&SectionPoint::new(4.0, -0.2).unwrap(), &p, 0.1).unwrap();
        for s in f.segments.iter().flat_map(|s| &s.samples) {
            assert!(s.rho > 0.0 && s.rho <= 1.0);
            assert!(s.z.abs() <= 1.0);
        }
        assert!(f.segments[2].samples.iter().all(|s| s.z < 0.0));
    }

    #[test]
    fn rejects_bad_step() {
        let p = ModelParams::new(2.0, 1.0, 3.0, 1.5, 0.05).unwrap();
        let q = SectionPoint::new(4.0, -0.2).unwrap();
        assert!(flow_trajectory(&q, &p, 0.0).is_err());
    }
}
