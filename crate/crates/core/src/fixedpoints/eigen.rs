use super::{FixedPoint, Tolerances};
use crate::maps::return_map_jacobian;
use crate::{Error, ModelParams, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// An eigenvalue equals `+1`.
    SaddleNodeBoundary,
    SinkNode,
    SinkFocus,
    Saddle,
    /// An eigenvalue equals `-1`.
    FlipBoundary,
    /// Only possible when `det > 1`.
    SourceNode,
    /// Only possible when `det >= 1`.
    SourceFocus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Eigenvalues {
    /// `|mu_s| <= |mu_u|`.
    Real { mu_s: f64, mu_u: f64 },
    Complex { re: f64, im: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub trace: f64,
    pub det: f64,
    pub eigenvalues: Eigenvalues,
    /// Unit eigenvectors with nonnegative first component; `None` for complex pairs.
    pub v_s: Option<[f64; 2]>,
    pub v_u: Option<[f64; 2]>,
    pub classification: Classification,
}

impl EigenData {
    pub fn real_pair(&self) -> Option<(f64, f64)> {
        match self.eigenvalues {
            Eigenvalues::Real { mu_s, mu_u } => Some((mu_s, mu_u)),
            Eigenvalues::Complex { .. } => None,
        }
    }
}

/// Eigen-structure of the return-map derivative at a fixed point, default tolerances.
pub fn eigen_data(fp: &FixedPoint, params: &ModelParams) -> Result<EigenData> {
    eigen_data_with(fp, params, &Tolerances::default())
}

pub fn eigen_data_with(fp: &FixedPoint, params: &ModelParams, tol: &Tolerances) -> Result<EigenData> {
    let residual = fp.residual(params);
    if !(residual <= tol.not_fixed) {
        return Err(Error::NotAFixedPoint { residual });
    }
    let jac = return_map_jacobian(&fp.point(), params);
    let (trace, det) = (jac.trace(), jac.det());
    // disc / T^2, arranged so that T^2 cannot overflow deep in the family.
    let rel_disc = if trace == 0.0 {
        -1.0
    } else {
        1.0 - 4.0 * (det / trace) / trace
    };
    if rel_disc < 0.0 {
        let disc = trace * trace - 4.0 * det;
        let re = 0.5 * trace;
        let im = 0.5 * (-disc).sqrt();
        let classification = if det < 1.0 {
            Classification::SinkFocus
        } else {
            Classification::SourceFocus
        };
        return Ok(EigenData {
            trace,
            det,
            eigenvalues: Eigenvalues::Complex { re, im },
            v_s: None,
            v_u: None,
            classification,
        });
    }
    // Larger root first; the smaller one from the product avoids cancellation.
    let big = 0.5 * trace * (1.0 + rel_disc.sqrt());
    let (mu_u, mu_s) = if big == 0.0 { (0.0, 0.0) } else { (big, det / big) };
    // (J - mu I) v = 0 gives v = (1, (1 - mu) y / K).
    let direction = |mu: f64| {
        let v2 = (1.0 - mu) * fp.y / params.k();
        let n = 1f64.hypot(v2);
        [1.0 / n, v2 / n]
    };
    let near = |mu: f64, target: f64| (mu - target).abs() <= tol.boundary;
    let classification = if near(mu_u, 1.0) || near(mu_s, 1.0) {
        Classification::SaddleNodeBoundary
    } else if near(mu_u, -1.0) || near(mu_s, -1.0) {
        Classification::FlipBoundary
    } else if mu_u.abs() < 1.0 {
        Classification::SinkNode
    } else if mu_s.abs() < 1.0 {
        Classification::Saddle
    } else {
        Classification::SourceNode
    };
    Ok(EigenData {
        trace,
        det,
        eigenvalues: Eigenvalues::Real { mu_s, mu_u },
        v_s: Some(direction(mu_s)),
        v_u: Some(direction(mu_u)),
        classification,
    })
}
