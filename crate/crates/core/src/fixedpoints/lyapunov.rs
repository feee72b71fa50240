use super::{eigen_data, fixed_point_family, Branch, FixedPoint};
use crate::maps::{advance, return_map_jacobian, return_time, Landing, ReturnJacobian, SectionPoint};
use crate::{Error, ModelParams, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::ops::RangeInclusive;

/// Exponents per unit of flow time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovData {
    pub chi_s: f64,
    pub chi_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    /// Number of Jacobians multiplied between re-orthonormalizations; at least 1.
    pub renorm_period: usize,
    /// Leading steps whose stretching and flight time are discarded.
    pub transient: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions {
            renorm_period: 1,
            transient: 0,
        }
    }
}

/// Exponents at a fixed point from its eigenvalues: `log|mu| / (2 pi l)`.
pub fn lyapunov_fixed_point(fp: &FixedPoint, params: &ModelParams) -> Result<LyapunovData> {
    let e = eigen_data(fp, params)?;
    let t = fp.period();
    match e.real_pair() {
        Some((_, mu_u)) => {
            let log_u = mu_u.abs().ln();
            Ok(LyapunovData {
                chi_s: (e.det.ln() - log_u) / t,
                chi_u: log_u / t,
            })
        }
        None => Err(Error::ComplexEigenvalues {
            exponent: 0.5 * e.det.ln() / t,
        }),
    }
}

type Mat = [[f64; 2]; 2];

fn mul(a: &Mat, b: &Mat) -> Mat {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

const IDENTITY: Mat = [[1.0, 0.0], [0.0, 1.0]];

/// QR-based accumulation of stretching along a sequence of Jacobians.
struct Benettin {
    period: usize,
    q: Mat,
    block: Mat,
    block_log_scale: f64,
    block_log_det: f64,
    block_len: usize,
    sum_r11: f64,
    sum_r22: f64,
    recording: bool,
}

impl Benettin {
    fn new(period: usize) -> Self {
        Benettin {
            period: period.max(1),
            q: IDENTITY,
            block: IDENTITY,
            block_log_scale: 0.0,
            block_log_det: 0.0,
            block_len: 0,
            sum_r11: 0.0,
            sum_r22: 0.0,
            recording: false,
        }
    }

    fn push(&mut self, jac: &ReturnJacobian) {
        let m = mul(&jac.matrix(), &self.block);
        let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
        self.block = m.map(|r| r.map(|v| v / scale));
        self.block_log_scale += scale.ln();
        // Factored determinant; the entries of the product lose it to cancellation.
        self.block_log_det += jac.det().abs().ln();
        self.block_len += 1;
        if self.block_len == self.period {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.block_len == 0 {
            return;
        }
        let a = mul(&self.block, &self.q);
        let r11 = a[0][0].hypot(a[1][0]);
        let q1 = [a[0][0] / r11, a[1][0] / r11];
        self.q = [[q1[0], -q1[1]], [q1[1], q1[0]]];
        let log_r11 = r11.ln() + self.block_log_scale;
        if self.recording {
            self.sum_r11 += log_r11;
            self.sum_r22 += self.block_log_det - log_r11;
        }
        self.block = IDENTITY;
        self.block_log_scale = 0.0;
        self.block_log_det = 0.0;
        self.block_len = 0;
    }

    fn start_recording(&mut self) {
        self.flush();
        self.recording = true;
    }

    fn finish(mut self, total_time: f64) -> LyapunovData {
        self.flush();
        LyapunovData {
            chi_s: self.sum_r22 / total_time,
            chi_u: self.sum_r11 / total_time,
        }
    }
}

/// Exponents along the forward orbit of `p` over `n_steps` returns.
pub fn lyapunov_numeric(
    p: &SectionPoint,
    params: &ModelParams,
    n_steps: usize,
    opts: &LyapunovOptions,
) -> Result<LyapunovData> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be positive".into()));
    }
    let mut acc = Benettin::new(opts.renorm_period);
    let mut cur = *p;
    let mut time = 0.0;
    for step in 0..opts.transient + n_steps {
        if step == opts.transient {
            acc.start_recording();
        }
        acc.push(&return_map_jacobian(&cur, params));
        if step >= opts.transient {
            time += return_time(&cur, params);
        }
        if step + 1 == opts.transient + n_steps {
            break;
        }
        cur = match advance(&cur, params).map(|s| s.landing) {
            Ok(Landing::Point(q)) => q,
            _ => return Err(Error::OrbitTerminated { step: step + 1 }),
        };
    }
    Ok(acc.finish(time))
}

/// Exponents of a periodic orbit given by its consecutive points, repeated `n_periods` times.
///
/// The Jacobians are taken at the given points, so rounding drift away from an
/// unstable cycle does not enter.
pub fn lyapunov_cycle(
    cycle: &[SectionPoint],
    params: &ModelParams,
    n_periods: usize,
    opts: &LyapunovOptions,
) -> Result<LyapunovData> {
    if cycle.is_empty() || n_periods == 0 {
        return Err(Error::InvalidArgument("empty cycle or zero periods".into()));
    }
    let jacs: Vec<_> = cycle.iter().map(|q| return_map_jacobian(q, params)).collect();
    let period_time: f64 = cycle.iter().map(|q| return_time(q, params)).sum();
    let mut acc = Benettin::new(opts.renorm_period);
    for step in 0..opts.transient {
        acc.push(&jacs[step % jacs.len()]);
    }
    acc.start_recording();
    let n = n_periods * jacs.len();
    for step in opts.transient..opts.transient + n {
        acc.push(&jacs[step % jacs.len()]);
    }
    Ok(acc.finish(period_time * n_periods as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenScanRow {
    pub ell: u32,
    pub lambda: f64,
    pub trace: f64,
    pub det: f64,
    pub mu_s: f64,
    pub mu_u: f64,
    pub vs_x: f64,
    pub vs_y: f64,
    pub vu_x: f64,
    pub vu_y: f64,
    pub chi_s: f64,
    pub chi_u: f64,
}

/// Eigen-data and exponents of the principal fixed points over a range of winding indices.
pub fn eigen_asymptotics_scan(
    params: &ModelParams,
    ells: RangeInclusive<u32>,
) -> Result<Vec<EigenScanRow>> {
    if ells.is_empty() || *ells.start() == 0 {
        return Err(Error::InvalidIndex(*ells.start() as i64));
    }
    let ells: Vec<u32> = ells.collect();
    ells.par_iter()
        .map(|&ell| scan_row(params, ell))
        .collect()
}

fn scan_row(params: &ModelParams, ell: u32) -> Result<EigenScanRow> {
    let invalid = Error::RangeInvalid { ell };
    let fp = fixed_point_family(params, ell as i64)?
        .into_iter()
        .find(|f| f.branch == Branch::Principal)
        .ok_or(invalid.clone())?;
    let e = eigen_data(&fp, params)?;
    let (mu_s, mu_u) = e.real_pair().ok_or(invalid.clone())?;
    let (vs, vu) = (e.v_s.ok_or(invalid.clone())?, e.v_u.ok_or(invalid)?);
    let t = TAU * ell as f64;
    let log_u = mu_u.abs().ln();
    Ok(EigenScanRow {
        ell,
        lambda: params.lambda(),
        trace: e.trace,
        det: e.det,
        mu_s,
        mu_u,
        vs_x: vs[0],
        vs_y: vs[1],
        vu_x: vu[0],
        vu_y: vu[1],
        chi_s: (e.det.ln() - log_u) / t,
        chi_u: log_u / t,
    })
}
