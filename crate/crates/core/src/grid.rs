//! Regular lattice geometry.
//!
//! A [`Grid`] is an axis-aligned lattice with the same mesh step `h` along
//! every axis. Nodes are numbered in row-major order (the last axis varies
//! fastest). The semi-Lagrangian stencil of a node in a given [`Orthant`]
//! consists of the `d` axis neighbours `x + h s_l e_l` followed by the
//! diagonal node `x + h (s_1 e_1 + ... + s_d e_d)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest supported dimension. Orthant enumeration is `2^d` and the
/// neighbourhood scan is `3^d - 1`, both checked against this cap.
pub const MAX_DIM: usize = 4;

/// Flat row-major node index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

/// A closed orthant of `R^d`, encoded as a bit mask: bit `l` set means the
/// orthant lies on the negative side of axis `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Orthant {
    code: u32,
    dim: u8,
}

impl Orthant {
    pub fn from_code(dim: usize, code: u32) -> Result<Self> {
        check_dim(dim)?;
        if code >= (1u32 << dim) {
            return Err(Error::InvalidArgument(format!(
                "orthant code {code} out of range for dimension {dim}"
            )));
        }
        Ok(Orthant {
            code,
            dim: dim as u8,
        })
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        check_dim(signs.len())?;
        let mut code = 0u32;
        for (l, &s) in signs.iter().enumerate() {
            match s {
                1 => {}
                -1 => code |= 1 << l,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "orthant sign must be +1 or -1, got {s}"
                    )))
                }
            }
        }
        Ok(Orthant {
            code,
            dim: signs.len() as u8,
        })
    }

    /// The all-positive orthant.
    pub fn positive(dim: usize) -> Result<Self> {
        Self::from_code(dim, 0)
    }

    #[inline]
    pub fn code(self) -> u32 {
        self.code
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.dim as usize
    }

    /// Sign of axis `axis` as `+1.0` or `-1.0`.
    #[inline]
    pub fn sign(self, axis: usize) -> f64 {
        if self.code & (1 << axis) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn step(self, axis: usize) -> isize {
        if self.code & (1 << axis) == 0 {
            1
        } else {
            -1
        }
    }

    pub fn signs(self) -> Vec<i8> {
        (0..self.dim()).map(|l| self.step(l) as i8).collect()
    }
}

/// All `2^d` orthants in ascending code order.
pub fn enumerate_orthants(dim: usize) -> Result<Vec<Orthant>> {
    check_dim(dim)?;
    Ok((0..1u32 << dim)
        .map(|code| Orthant {
            code,
            dim: dim as u8,
        })
        .collect())
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        Err(Error::UnsupportedDimension { dim, max: MAX_DIM })
    } else {
        Ok(())
    }
}

/// Regular `d`-dimensional lattice with uniform mesh step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    mesh: f64,
    lower: Vec<f64>,
    counts: Vec<usize>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    len: usize,
}

impl Grid {
    pub fn new(mesh: f64, lower: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        check_dim(lower.len())?;
        if lower.len() != counts.len() {
            return Err(Error::InvalidGrid(format!(
                "lower corner has {} entries but counts has {}",
                lower.len(),
                counts.len()
            )));
        }
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "mesh step must be positive, got {mesh}"
            )));
        }
        if let Some(c) = counts.iter().find(|&&c| c < 2) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least 2 nodes, got {c}"
            )));
        }
        if lower.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("lower corner must be finite".into()));
        }
        let dim = lower.len();
        let mut strides = vec![1usize; dim];
        for l in (0..dim.saturating_sub(1)).rev() {
            strides[l] = strides[l + 1] * counts[l + 1];
        }
        let len = counts.iter().product();
        Ok(Grid {
            dim,
            mesh,
            lower,
            counts,
            strides,
            len,
        })
    }

    /// Lattice of step `mesh` anchored at `lower` covering the box up to
    /// `upper` (the last node on each axis is the largest one not exceeding
    /// `upper`, up to a relative slack of `1e-9` steps).
    pub fn covering(lower: &[f64], upper: &[f64], mesh: f64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidGrid("box corners differ in dimension".into()));
        }
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "mesh step must be positive, got {mesh}"
            )));
        }
        let counts = lower
            .iter()
            .zip(upper)
            .map(|(&lo, &hi)| {
                let steps = (hi - lo) / mesh;
                if !(steps >= 0.0) {
                    0
                } else {
                    (steps + 1e-9).floor() as usize + 1
                }
            })
            .collect();
        Grid::new(mesh, lower.to_vec(), counts)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Coordinates of the last node along every axis.
    pub fn upper(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.counts)
            .map(|(&lo, &n)| lo + (n - 1) as f64 * self.mesh)
            .collect()
    }

    /// Total node count `M`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.len).map(NodeId)
    }

    pub fn node(&self, multi: &[usize]) -> Option<NodeId> {
        if multi.len() != self.dim {
            return None;
        }
        let mut flat = 0;
        for (l, &i) in multi.iter().enumerate() {
            if i >= self.counts[l] {
                return None;
            }
            flat += i * self.strides[l];
        }
        Some(NodeId(flat))
    }

    #[inline]
    pub fn axis_index(&self, id: NodeId, axis: usize) -> usize {
        (id.0 / self.strides[axis]) % self.counts[axis]
    }

    pub fn multi_index(&self, id: NodeId) -> Vec<usize> {
        (0..self.dim).map(|l| self.axis_index(id, l)).collect()
    }

    pub fn coord(&self, id: NodeId) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.coord_into(id, &mut out);
        out
    }

    #[inline]
    pub fn coord_into(&self, id: NodeId, out: &mut [f64]) {
        for (l, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.lower[l] + self.axis_index(id, l) as f64 * self.mesh;
        }
    }

    /// The node closest to `point`, if `point` lies within half a step of
    /// the lattice box.
    pub fn nearest_node(&self, point: &[f64]) -> Option<NodeId> {
        if point.len() != self.dim {
            return None;
        }
        let mut multi = Vec::with_capacity(self.dim);
        for (l, &p) in point.iter().enumerate() {
            let r = ((p - self.lower[l]) / self.mesh).round();
            if r < 0.0 || r >= self.counts[l] as f64 {
                return None;
            }
            multi.push(r as usize);
        }
        self.node(&multi)
    }

    /// The node at integer offset `delta` (in mesh steps), if inside.
    pub fn offset(&self, id: NodeId, delta: &[isize]) -> Option<NodeId> {
        let mut flat = id.0 as isize;
        for (l, &dl) in delta.iter().enumerate().take(self.dim) {
            let i = self.axis_index(id, l) as isize + dl;
            if i < 0 || i >= self.counts[l] as isize {
                return None;
            }
            flat += dl * self.strides[l] as isize;
        }
        Some(NodeId(flat as usize))
    }

    /// The `d + 1` stencil targets of `x` in orthant `o`: `d` axis
    /// neighbours, then the diagonal node. `None` marks a target outside
    /// the grid.
    pub fn stencil_nodes(&self, x: NodeId, o: Orthant) -> Vec<Option<NodeId>> {
        let mut out = vec![None; self.dim + 1];
        self.stencil_into(x, o, &mut out);
        out
    }

    pub(crate) fn stencil_into(&self, x: NodeId, o: Orthant, out: &mut [Option<NodeId>]) {
        debug_assert_eq!(o.dim(), self.dim);
        let mut diag = Some(x.0 as isize);
        for l in 0..self.dim {
            let step = o.step(l);
            let i = self.axis_index(x, l) as isize + step;
            if i < 0 || i >= self.counts[l] as isize {
                out[l] = None;
                diag = None;
            } else {
                let shift = step * self.strides[l] as isize;
                out[l] = Some(NodeId((x.0 as isize + shift) as usize));
                diag = diag.map(|d| d + shift);
            }
        }
        out[self.dim] = diag.map(|d| NodeId(d as usize));
    }

    /// All in-grid nodes of the `3^d - 1` box neighbourhood of `x`: the
    /// nodes whose orthant stencils can contain `x`.
    pub fn neighbors(&self, x: NodeId) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(3usize.pow(self.dim as u32) - 1);
        self.neighbors_into(x, &mut out);
        out
    }

    pub(crate) fn neighbors_into(&self, x: NodeId, out: &mut Vec<NodeId>) {
        out.clear();
        let total = 3usize.pow(self.dim as u32);
        let mut delta = [0isize; MAX_DIM];
        for k in 0..total {
            let mut rem = k;
            for d in delta.iter_mut().take(self.dim) {
                *d = (rem % 3) as isize - 1;
                rem /= 3;
            }
            if delta[..self.dim].iter().all(|&d| d == 0) {
                continue;
            }
            if let Some(y) = self.offset(x, &delta[..self.dim]) {
                out.push(y);
            }
        }
    }

    /// Euclidean distance from the coordinates of `x` to the nearest face
    /// of the lattice box.
    pub fn boundary_clearance(&self, x: NodeId) -> f64 {
        (0..self.dim)
            .map(|l| {
                let i = self.axis_index(x, l);
                i.min(self.counts[l] - 1 - i) as f64 * self.mesh
            })
            .fold(f64::INFINITY, f64::min)
    }
}
