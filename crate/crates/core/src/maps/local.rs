use serde::{Deserialize, Serialize};

use super::{reduce_angle, SectionPoint};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// The two saddle-foci of the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Sigma1,
    Sigma2,
}

/// Connections between the local neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    OneToTwo,
    TwoToOne,
}

/// Entry coordinates of a local neighbourhood.
///
/// `sigma_1` is entered through its cylinder wall, `sigma_2` through the top
/// (`upper = true`) or bottom disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Entry {
    Wall { x: f64, y: f64 },
    Disk { r: f64, phi: f64, upper: bool },
}

/// Exit coordinates of a local neighbourhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OutPoint {
    Disk { r: f64, phi: f64, upper: bool },
    Wall { x: f64, y: f64 },
}

/// Exit point of the linearized flow near `node`.
///
/// `sigma_1`: `(x, y) -> (|y|^delta1, x - log|y| / E1)` on the disk matching `sign(y)`.
/// `sigma_2`: `(r, phi) -> (phi - log r / E2, +-r^delta2)` on the wall.
pub fn local_exit(node: Node, entry: Entry, params: &ModelParams) -> Result<OutPoint> {
    match (node, entry) {
        (Node::Sigma1, Entry::Wall { x, y }) => {
            if y == 0.0 {
                return Err(Error::DegenerateInput("y = 0 on the stable manifold of sigma_1"));
            }
            let ay = y.abs();
            if ay > 1.0 {
                return Err(Error::InvalidArgument(format!("|y| = {ay} outside the wall")));
            }
            Ok(OutPoint::Disk {
                r: ay.powf(params.delta1()),
                phi: reduce_angle(x - ay.ln() / params.e1()),
                upper: y > 0.0,
            })
        }
        (Node::Sigma2, Entry::Disk { r, phi, upper }) => {
            if r == 0.0 {
                return Err(Error::DegenerateInput("r = 0 on the stable manifold of sigma_2"));
            }
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidArgument(format!("radius {r} outside (0, 1]")));
            }
            let h = r.powf(params.delta2());
            Ok(OutPoint::Wall {
                x: reduce_angle(phi - r.ln() / params.e2()),
                y: if upper { h } else { -h },
            })
        }
        _ => Err(Error::InvalidArgument(format!(
            "entry {entry:?} does not match node {node:?}"
        ))),
    }
}

/// Global transition along a connection.
///
/// `sigma_1 -> sigma_2` is the identity between `Out(sigma_1)` and `In(sigma_2)`;
/// `sigma_2 -> sigma_1` shears the wall by `lambda sin x`.
pub fn transition(edge: Edge, p: OutPoint, params: &ModelParams) -> Result<Entry> {
    match (edge, p) {
        (Edge::OneToTwo, OutPoint::Disk { r, phi, upper }) => Ok(Entry::Disk { r, phi, upper }),
        (Edge::TwoToOne, OutPoint::Wall { x, y }) => Ok(Entry::Wall {
            x,
            y: y + params.lambda() * x.sin(),
        }),
        _ => Err(Error::InvalidArgument(format!(
            "point {p:?} is not in the source section of {edge:?}"
        ))),
    }
}

/// First hit map `In(sigma_1) -> Out(sigma_2)`, `(x, y) -> (x - K log|y|, sign(y) |y|^delta)`.
pub fn first_hit_eta(p: &SectionPoint, params: &ModelParams) -> OutPoint {
    let ay = p.y().abs();
    let h = ay.powf(params.delta());
    OutPoint::Wall {
        x: reduce_angle(p.x() - params.k() * ay.ln()),
        y: h.copysign(p.y()),
    }
}
