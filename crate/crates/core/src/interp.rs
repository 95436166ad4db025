//! Orthant-wise piecewise-linear interpolation.
//!
//! For a direction `alpha` in an orthant, the foot point `x + h alpha` is
//! written as a combination of the orthant stencil (axis neighbours, then
//! the diagonal node). With `a_l = |alpha_l|` and
//! `s = (sum a_l - 1) / (d - 1)`, the coefficients are `a_l - s` on the
//! axis nodes and `s` on the diagonal; in one dimension the single
//! neighbour carries weight 1. They always sum to one and reproduce the foot
//! point exactly, but can be negative for `d >= 3`, in which case the
//! direction is reported infeasible.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeId, Orthant, MAX_DIM};

/// Weights at or above `-FEASIBILITY_SLACK` count as nonnegative.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// A unit direction in a closed orthant, parametrised by `d - 1` angles in
/// `[0, pi/2]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Direction {
    angles: Vec<f64>,
    #[serde(serialize_with = "serialize_orthant")]
    orthant: Orthant,
    alpha: Vec<f64>,
}

fn serialize_orthant<S: serde::Serializer>(
    o: &Orthant,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u32(o.code())
}

impl Direction {
    pub fn from_angles(angles: &[f64], orthant: Orthant) -> Result<Self> {
        let dim = orthant.dim();
        if angles.len() + 1 != dim {
            return Err(Error::InvalidArgument(format!(
                "a {dim}-dimensional direction needs {} angles, got {}",
                dim - 1,
                angles.len()
            )));
        }
        if let Some(&bad) = angles.iter().find(|a| !(0.0..=FRAC_PI_2).contains(*a)) {
            return Err(Error::Domain {
                op: "direction_from_angles",
                what: "angle",
                value: bad,
            });
        }
        Ok(Self::from_angles_unchecked(angles, orthant))
    }

    pub(crate) fn from_angles_unchecked(angles: &[f64], orthant: Orthant) -> Self {
        let dim = orthant.dim();
        let mut buf = [0.0; MAX_DIM];
        unit_alpha(angles, &mut buf[..dim]);
        let alpha = (0..dim).map(|l| buf[l] * orthant.sign(l)).collect();
        Direction {
            angles: angles.to_vec(),
            orthant,
            alpha,
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn orthant(&self) -> Orthant {
        self.orthant
    }

    /// The signed unit vector.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

/// Free-function form of [`Direction::from_angles`].
pub fn direction_from_angles(angles: &[f64], orthant: Orthant) -> Result<Direction> {
    Direction::from_angles(angles, orthant)
}

/// Spherical parametrisation of the positive orthant:
/// `a_1 = cos t_1`, `a_2 = sin t_1 cos t_2`, ..., `a_d = sin t_1 ... sin t_{d-1}`.
#[inline]
pub(crate) fn unit_alpha(angles: &[f64], out: &mut [f64]) {
    let dim = out.len();
    let mut prod = 1.0;
    for k in 0..dim - 1 {
        let (s, c) = angles[k].sin_cos();
        out[k] = prod * c;
        prod *= s;
    }
    out[dim - 1] = prod;
}

/// Stencil coefficients for the unsigned direction `abs_alpha`. Writes `d + 1`
/// weights and returns whether all are nonnegative.
#[inline]
pub(crate) fn weights_into(abs_alpha: &[f64], out: &mut [f64]) -> bool {
    let dim = abs_alpha.len();
    if dim == 1 {
        out[0] = 1.0;
        out[1] = 0.0;
        return true;
    }
    let s = (abs_alpha.iter().sum::<f64>() - 1.0) / (dim - 1) as f64;
    let mut feasible = s >= -FEASIBILITY_SLACK;
    for l in 0..dim {
        out[l] = abs_alpha[l] - s;
        feasible &= out[l] >= -FEASIBILITY_SLACK;
    }
    out[dim] = s;
    feasible
}

/// Interpolation weights over the `d + 1` stencil targets of a node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarycentricWeights {
    pub weights: Vec<f64>,
    pub nodes: Vec<Option<NodeId>>,
    pub feasible: bool,
}

impl BarycentricWeights {
    /// `sum_k w_k y_k - x` in length units, with outside targets placed at
    /// their virtual lattice positions.
    pub fn displacement(&self, grid: &Grid, orthant: Orthant) -> Vec<f64> {
        let dim = grid.dim();
        let h = grid.mesh();
        (0..dim)
            .map(|l| {
                let axis = self.weights[l];
                let diag = if dim == 1 { 0.0 } else { self.weights[dim] };
                orthant.sign(l) * h * (axis + diag)
            })
            .collect()
    }
}

/// Coefficients for interpolating at `x + h alpha` from the orthant stencil
/// of `x`.
pub fn barycentric(grid: &Grid, x: NodeId, dir: &Direction) -> BarycentricWeights {
    let dim = grid.dim();
    let abs: Vec<f64> = dir.alpha().iter().map(|a| a.abs()).collect();
    let mut weights = vec![0.0; dim + 1];
    let feasible = weights_into(&abs, &mut weights);
    BarycentricWeights {
        weights,
        nodes: grid.stencil_nodes(x, dir.orthant()),
        feasible,
    }
}

/// `sum_k w_k V(y_k)`, with outside targets contributing `outside_value`.
pub fn interpolate(values: &[f64], w: &BarycentricWeights, outside_value: f64) -> f64 {
    w.weights
        .iter()
        .zip(&w.nodes)
        .map(|(&lam, node)| lam * node.map_or(outside_value, |n| values[n.index()]))
        .sum()
}
