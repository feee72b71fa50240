use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linearized eigenvalue data of the two saddle-foci plus the perturbation size.
///
/// `c1, e1` are the contracting/expanding rates at the first node, `c2, e2` at the
/// second. The angular speed at both nodes is fixed at 1. The ratios `delta`
/// (saddle index of the cycle) and `k` (angular gain per unit of `-log y`) are
/// derived and never entered directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    c1: f64,
    e1: f64,
    c2: f64,
    e2: f64,
    lambda: f64,
    delta1: f64,
    delta2: f64,
    delta: f64,
    k: f64,
}

impl ModelParams {
    pub fn new(c1: f64, e1: f64, c2: f64, e2: f64, lambda: f64) -> Result<Self> {
        let all = [c1, e1, c2, e2, lambda];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters("non-finite value".into()));
        }
        if !(e1 > 0.0 && c1 > e1) {
            return Err(Error::InvalidParameters(format!(
                "need C1 > E1 > 0, got C1 = {c1}, E1 = {e1}"
            )));
        }
        if !(e2 > 0.0 && c2 > e2) {
            return Err(Error::InvalidParameters(format!(
                "need C2 > E2 > 0, got C2 = {c2}, E2 = {e2}"
            )));
        }
        check_lambda(lambda)?;
        let delta1 = c1 / e1;
        let delta2 = c2 / e2;
        Ok(Self {
            c1,
            e1,
            c2,
            e2,
            lambda,
            delta1,
            delta2,
            delta: delta1 * delta2,
            k: (c1 + e2) / (e1 * e2),
        })
    }

    /// Builds a canonical eigenvalue realization of the given `(K, delta)`.
    ///
    /// Uses `delta1 = delta2 = sqrt(delta)` and `E1 = E2 = (sqrt(delta) + 1) / K`,
    /// which reproduces `K` and `delta` exactly up to rounding.
    pub fn from_cycle_constants(k: f64, delta: f64, lambda: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameters(format!("need K > 0, got {k}")));
        }
        if !(delta > 1.0 && delta.is_finite()) {
            return Err(Error::InvalidParameters(format!("need delta > 1, got {delta}")));
        }
        let root = delta.sqrt();
        let e = (root + 1.0) / k;
        let mut p = Self::new(root * e, e, root * e, e, lambda)?;
        // Pin the derived constants to the requested values.
        p.k = k;
        p.delta = delta;
        Ok(p)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { lambda, ..*self })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn e1(&self) -> f64 {
        self.e1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn e2(&self) -> f64 {
        self.e2
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn delta1(&self) -> f64 {
        self.delta1
    }
    pub fn delta2(&self) -> f64 {
        self.delta2
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn k(&self) -> f64 {
        self.k
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameters(format!(
            "need 0 <= lambda < 1, got {lambda}"
        )));
    }
    Ok(())
}
