//! Bifurcation thresholds `a_l < b_l < c_l < d_l` of the principal fixed point.
//!
//! Along the principal branch the trace `T(lambda) = 1 + D - (K/y) sqrt(lambda^2 - a^2)`
//! decreases from `1 + D` at `lambda = a`. The thresholds are the zeros of
//! `T - 2 sqrt D` (b), `T + 2 sqrt D` (c) and `T + 1 + D` (d), where `D = delta y^(delta-1)`.

use super::{saddle_node_threshold, Tolerances};
use crate::numeric::{bisect, Ext, Real};
use crate::{Error, ModelParams, Result};
use serde::{Deserialize, Serialize};

/// Arithmetic used for the threshold computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    Double,
    /// 256-bit binary floating point.
    Extended,
    /// Double unless the gaps between thresholds fall below double resolution.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationThresholds {
    pub ell: u32,
    /// Arithmetic actually used; never `Auto`.
    pub precision: Precision,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `b - a`, `c - b`, `d - c` evaluated in the working precision before rounding.
    pub gaps: [f64; 3],
    /// Relative deviation of `b`, `c`, `d` from their bisection counterparts.
    pub bisection_deviation: [f64; 3],
}

impl BifurcationThresholds {
    pub fn is_ordered(&self) -> bool {
        self.a > 0.0 && self.gaps.iter().all(|&g| g > 0.0)
    }
}

struct Closed<T> {
    a: T,
    y: T,
    det: T,
    b: T,
    c: T,
    d: T,
}

fn closed_forms<T: Real>(k: f64, delta: f64, ell: u32) -> Closed<T> {
    let kk = T::from_f64(k);
    let one = T::from_f64(1.0);
    let two = T::from_f64(2.0);
    // Same operation order as `saddle_node_threshold` so the double path agrees bitwise.
    let log_y = -(T::pi() * two.clone() * T::from_f64(ell as f64)) / kk.clone();
    let y = log_y.exp();
    let a = y.clone() * -(T::from_f64(delta - 1.0) * log_y.clone()).exp_m1();
    let det = T::from_f64(delta) * (T::from_f64(delta - 1.0) * log_y).exp();
    let root_d = det.sqrt();
    let hyp = |h: T| (a.clone() * a.clone() + h.clone() * h).sqrt();
    let lo = one.clone() - root_d.clone();
    let hi = one.clone() + root_d;
    let b = hyp(y.clone() * lo.clone() * lo / kk.clone());
    let c = hyp(y.clone() * hi.clone() * hi / kk.clone());
    let d = hyp(two * y.clone() * (one + det.clone()) / kk);
    Closed { a, y, det, b, c, d }
}

fn trace<T: Real>(k: f64, cf: &Closed<T>, lambda: &T) -> T {
    let one = T::from_f64(1.0);
    let s = lambda.clone() * lambda.clone() - cf.a.clone() * cf.a.clone();
    let s = if s < T::from_f64(0.0) { T::from_f64(0.0) } else { s };
    one + cf.det.clone() - T::from_f64(k) / cf.y.clone() * s.sqrt()
}

/// Trace of the return-map derivative at the principal fixed point `p_l` for a given `lambda >= a_l`.
pub fn principal_trace(params: &ModelParams, ell: i64, lambda: f64) -> Result<f64> {
    saddle_node_threshold(params, ell)?;
    let cf = closed_forms::<f64>(params.k(), params.delta(), ell as u32);
    Ok(trace(params.k(), &cf, &lambda))
}

struct Evaluated {
    values: [f64; 4],
    gaps: [f64; 3],
    deviation: [f64; 3],
}

fn evaluate<T: Real>(k: f64, delta: f64, ell: u32, rel_tol: f64) -> Result<Evaluated> {
    let cf = closed_forms::<T>(k, delta, ell);
    let det = cf.det.to_f64();
    if !(det < 1.0) {
        return Err(Error::WindowEmpty { det });
    }
    let two = T::from_f64(2.0);
    let root_d = cf.det.sqrt();
    let one = T::from_f64(1.0);
    let upper = cf.d.clone() * two.clone();
    let targets: [(T, &T, &'static str); 3] = [
        (root_d.clone() * two.clone(), &cf.b, "b"),
        (-(root_d * two), &cf.c, "c"),
        (-(one + cf.det.clone()), &cf.d, "d"),
    ];
    let mut deviation = [0.0; 3];
    for (i, (target, closed, name)) in targets.iter().enumerate() {
        let f = |lam: &T| trace(k, &cf, lam) - target.clone();
        let root = bisect(f, cf.a.clone(), upper.clone(), rel_tol).ok_or(
            Error::ThresholdVerification {
                name,
                closed: closed.to_f64(),
                bisected: f64::NAN,
            },
        )?;
        let diff = root.clone() - (*closed).clone();
        deviation[i] = (diff / (*closed).clone()).to_f64().abs();
    }
    Ok(Evaluated {
        values: [cf.a.to_f64(), cf.b.to_f64(), cf.c.to_f64(), cf.d.to_f64()],
        gaps: [
            (cf.b.clone() - cf.a.clone()).to_f64(),
            (cf.c.clone() - cf.b.clone()).to_f64(),
            (cf.d.clone() - cf.c.clone()).to_f64(),
        ],
        deviation,
    })
}

/// Thresholds with default tolerances.
pub fn bifurcation_thresholds(
    params: &ModelParams,
    ell: i64,
    precision: Precision,
) -> Result<BifurcationThresholds> {
    bifurcation_thresholds_with(params, ell, precision, &Tolerances::default())
}

pub fn bifurcation_thresholds_with(
    params: &ModelParams,
    ell: i64,
    precision: Precision,
    tol: &Tolerances,
) -> Result<BifurcationThresholds> {
    saddle_node_threshold(params, ell)?;
    let ell = ell as u32;
    let (k, delta) = (params.k(), params.delta());
    let (used, ev) = match precision {
        Precision::Double => (Precision::Double, evaluate::<f64>(k, delta, ell, 1e-15)?),
        Precision::Extended => (Precision::Extended, evaluate::<Ext>(k, delta, ell, 1e-70)?),
        Precision::Auto => {
            let ev = evaluate::<f64>(k, delta, ell, 1e-15)?;
            let resolved = ev
                .gaps
                .iter()
                .zip(&ev.values[1..])
                .all(|(g, v)| *g > 1e-12 * v);
            if resolved {
                (Precision::Double, ev)
            } else {
                (Precision::Extended, evaluate::<Ext>(k, delta, ell, 1e-70)?)
            }
        }
    };
    let names = ["b", "c", "d"];
    for (i, dev) in ev.deviation.iter().enumerate() {
        if !(*dev <= tol.threshold_agreement) {
            let closed = ev.values[i + 1];
            return Err(Error::ThresholdVerification {
                name: names[i],
                closed,
                bisected: closed * (1.0 + dev),
            });
        }
    }
    let [a, b, c, d] = ev.values;
    Ok(BifurcationThresholds {
        ell,
        precision: used,
        a,
        b,
        c,
        d,
        gaps: ev.gaps,
        bisection_deviation: ev.deviation,
    })
}
