//! The semi-Lagrangian node update.
//!
//! In each orthant the discounted interpolated value
//! `(1 - h/f(x, alpha)) I[V](x + h alpha) + h/f(x, alpha)` is minimised over
//! the `d - 1` direction angles; the node value is the minimum over all
//! `2^d` orthants. Directions with infeasible interpolation weights are
//! rejected.
//!
//! Internally the objective is evaluated in deficit form,
//! `1 - (1 - q) * sum_k w_k (1 - V(y_k))` with `q = h/f`, which is the same
//! quantity but returns exactly 1 when every stencil value is 1.

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{enumerate_orthants, Grid, NodeId, Orthant, MAX_DIM};
use crate::interp::{unit_alpha, weights_into, Direction, FEASIBILITY_SLACK};
use crate::problem::{SpeedField, TargetSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimizerMethod {
    /// Nested for isotropic speeds, multistart otherwise.
    Auto,
    /// Golden-section search on `theta_1`, whose objective is the minimum
    /// over `theta_2`, and so on down to `theta_{d-1}`.
    Nested,
    /// Coarse tensor-grid scan followed by coordinate-wise golden-section
    /// refinement from the best samples.
    Multistart,
}

/// Settings of the per-orthant angle minimisation.
///
/// Global optimality per orthant is only guaranteed for the structure of
/// isotropic problems; for anisotropic speeds the multistart search may
/// return a local minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerConfig {
    pub method: MinimizerMethod,
    /// Points of the coarse scan per angle, endpoints included.
    pub samples_per_angle: usize,
    /// Final bracket width of golden-section refinement, in radians.
    pub refine_tolerance: f64,
    pub multistart_count: usize,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig {
            method: MinimizerMethod::Auto,
            samples_per_angle: 16,
            refine_tolerance: 1e-10,
            multistart_count: 4,
        }
    }
}

impl MinimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_angle < 8 {
            return Err(Error::InvalidArgument(format!(
                "samples_per_angle must be at least 8, got {}",
                self.samples_per_angle
            )));
        }
        if !(self.refine_tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "refine_tolerance must be positive, got {}",
                self.refine_tolerance
            )));
        }
        if self.multistart_count == 0 {
            return Err(Error::InvalidArgument(
                "multistart_count must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The concrete method used for `speed`.
    pub fn resolved_method(&self, speed: &SpeedField) -> MinimizerMethod {
        match self.method {
            MinimizerMethod::Auto if speed.is_isotropic() => MinimizerMethod::Nested,
            MinimizerMethod::Auto => MinimizerMethod::Multistart,
            m => m,
        }
    }
}

/// Minimum of one orthant.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthantValue {
    pub value: f64,
    /// `None` when the orthant sees only unreachable values or no feasible
    /// direction; `value` is then 1.
    pub direction: Option<Direction>,
}

/// Result of updating one node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpdateOutcome {
    pub value: f64,
    pub best_direction: Option<Direction>,
    /// Orthant minima, indexed by orthant code.
    pub orthant_values: Vec<f64>,
}

/// Everything a node update reads besides the value field.
#[derive(Clone, Copy, Debug)]
pub struct UpdateContext<'a> {
    grid: &'a Grid,
    speed: &'a SpeedField,
    target: &'a TargetSet,
    outside_value: f64,
    minimizer: &'a MinimizerConfig,
    method: MinimizerMethod,
}

impl<'a> UpdateContext<'a> {
    /// Checks the step-size precondition `h < min(1/f_max, f_min)` with
    /// `h` the grid's mesh step.
    pub fn new(
        grid: &'a Grid,
        speed: &'a SpeedField,
        target: &'a TargetSet,
        minimizer: &'a MinimizerConfig,
    ) -> Result<Self> {
        speed.check_step(grid.mesh())?;
        minimizer.validate()?;
        Ok(UpdateContext {
            grid,
            speed,
            target,
            outside_value: 1.0,
            minimizer,
            method: minimizer.resolved_method(speed),
        })
    }

    /// Value read for stencil targets outside the grid (default 1).
    pub fn with_outside_value(mut self, v: f64) -> Self {
        self.outside_value = v;
        self
    }

    pub fn grid(&self) -> &'a Grid {
        self.grid
    }

    /// Minimise over the directions of orthant `o` at node `x`. If `x` is in
    /// the target the value is still computed; see [`Self::update_node`].
    pub fn orthant_value(&self, values: &[f64], x: NodeId, o: Orthant) -> OrthantValue {
        let evals = Cell::new(0);
        let obj = self.objective(values, x, o, &evals);
        match self.minimize(&obj) {
            Some((value, angles)) => OrthantValue {
                value,
                direction: Some(Direction::from_angles_unchecked(
                    &angles[..self.grid.dim() - 1],
                    o,
                )),
            },
            None => OrthantValue {
                value: 1.0,
                direction: None,
            },
        }
    }

    /// Full update of `x`: 0 on the target, otherwise the minimum of all
    /// orthant values. Ties go to the lowest orthant code.
    pub fn update_node(&self, values: &[f64], x: NodeId) -> UpdateOutcome {
        let dim = self.grid.dim();
        let orthants = enumerate_orthants(dim).expect("grid dimension is within the cap");
        let mut coord = [0.0; MAX_DIM];
        self.grid.coord_into(x, &mut coord[..dim]);
        if self.target.contains(&coord[..dim]) {
            return UpdateOutcome {
                value: 0.0,
                best_direction: None,
                orthant_values: vec![0.0; orthants.len()],
            };
        }
        let mut best = OrthantValue {
            value: f64::INFINITY,
            direction: None,
        };
        let mut orthant_values = Vec::with_capacity(orthants.len());
        for o in orthants {
            let ov = self.orthant_value(values, x, o);
            orthant_values.push(ov.value);
            if ov.value < best.value {
                best = ov;
            }
        }
        UpdateOutcome {
            value: best.value,
            best_direction: best.direction,
            orthant_values,
        }
    }

    /// Solver-side update of a non-target node: returns the best value and
    /// direction only if strictly below `incumbent`. Orthants whose lower
    /// bound cannot beat the running best are skipped; the result equals
    /// that of [`Self::update_node`] whenever it is returned.
    pub(crate) fn improve(
        &self,
        values: &[f64],
        x: NodeId,
        incumbent: f64,
        evals: &Cell<u64>,
    ) -> Option<(f64, Direction)> {
        let dim = self.grid.dim();
        let mut best = incumbent;
        let mut best_arg: Option<(Orthant, [f64; MAX_DIM])> = None;
        for code in 0..1u32 << dim {
            let o = Orthant::from_code(dim, code).expect("valid orthant code");
            let obj = self.objective(values, x, o, evals);
            if obj.lower_bound() >= best {
                continue;
            }
            if let Some((v, angles)) = self.minimize(&obj) {
                if v < best {
                    best = v;
                    best_arg = Some((o, angles));
                }
            }
        }
        best_arg.map(|(o, angles)| {
            (
                best,
                Direction::from_angles_unchecked(&angles[..dim - 1], o),
            )
        })
    }

    /// Jacobi-style value of `x` (no incumbent), for operator evaluation.
    pub(crate) fn value_of(
        &self,
        values: &[f64],
        x: NodeId,
        evals: &Cell<u64>,
    ) -> (f64, Option<Direction>) {
        match self.improve(values, x, f64::INFINITY, evals) {
            Some((v, d)) => (v, Some(d)),
            None => (1.0, None),
        }
    }

    fn objective<'b>(
        &self,
        values: &[f64],
        x: NodeId,
        o: Orthant,
        evals: &'b Cell<u64>,
    ) -> Objective<'b>
    where
        'a: 'b,
    {
        let dim = self.grid.dim();
        let mut stencil = [None; MAX_DIM + 1];
        self.grid.stencil_into(x, o, &mut stencil[..dim + 1]);
        let mut deficits = [0.0; MAX_DIM + 1];
        for k in 0..=dim {
            let v = stencil[k].map_or(self.outside_value, |n| values[n.index()]);
            deficits[k] = 1.0 - v;
        }
        let mut coord = [0.0; MAX_DIM];
        self.grid.coord_into(x, &mut coord[..dim]);
        let h = self.grid.mesh();
        let iso_discount = if self.speed.is_isotropic() {
            Some(h / self.speed.eval(&coord[..dim], &unit_axis(dim)[..dim]))
        } else {
            None
        };
        Objective {
            dim,
            h,
            orthant: o,
            coord,
            deficits,
            speed: self.speed,
            iso_discount,
            evals,
        }
    }

    /// `None` if the orthant has no reachable stencil value or no feasible
    /// direction.
    fn minimize(&self, obj: &Objective<'_>) -> Option<(f64, [f64; MAX_DIM])> {
        let max_deficit = obj.deficits[..=obj.dim].iter().cloned().fold(0.0, f64::max);
        if max_deficit <= 0.0 {
            return None;
        }
        let n = obj.dim - 1;
        let found = if n == 0 {
            let a = [0.0; MAX_DIM];
            (obj.eval(&a[..0]), a)
        } else {
            match self.method {
                MinimizerMethod::Multistart => multistart(obj, n, self.minimizer),
                _ => nested(obj, [0.0; MAX_DIM], 0, n, self.minimizer),
            }
        };
        if found.0.is_finite() {
            Some(found)
        } else {
            None
        }
    }
}

fn unit_axis(dim: usize) -> [f64; MAX_DIM] {
    let mut a = [0.0; MAX_DIM];
    if dim > 0 {
        a[0] = 1.0;
    }
    a
}

/// One orthant's objective as a function of the angles.
struct Objective<'b> {
    dim: usize,
    h: f64,
    orthant: Orthant,
    coord: [f64; MAX_DIM],
    /// `1 - V(y_k)` over the stencil.
    deficits: [f64; MAX_DIM + 1],
    speed: &'b SpeedField,
    iso_discount: Option<f64>,
    evals: &'b Cell<u64>,
}

impl Objective<'_> {
    #[inline]
    fn eval(&self, angles: &[f64]) -> f64 {
        self.evals.set(self.evals.get() + 1);
        let dim = self.dim;
        let mut alpha = [0.0; MAX_DIM];
        unit_alpha(angles, &mut alpha[..dim]);
        let mut w = [0.0; MAX_DIM + 1];
        if !weights_into(&alpha[..dim], &mut w[..dim + 1]) {
            return f64::INFINITY;
        }
        let deficit: f64 = (0..=dim).map(|k| w[k] * self.deficits[k]).sum();
        let q = match self.iso_discount {
            Some(q) => q,
            None => {
                for (l, a) in alpha.iter_mut().enumerate().take(dim) {
                    *a *= self.orthant.sign(l);
                }
                self.h / self.speed.eval(&self.coord[..dim], &alpha[..dim])
            }
        };
        (1.0 - (1.0 - q) * deficit).clamp(0.0, 1.0)
    }

    /// No direction of this orthant can do better than this.
    fn lower_bound(&self) -> f64 {
        let max_deficit = self.deficits[..=self.dim]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        let q = self.iso_discount.unwrap_or(self.h / self.speed.f_max());
        1.0 - (1.0 - q) * max_deficit
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search of `f` on `[lo, hi]` down to a bracket of width
/// `tol`. Returns the best point evaluated.
pub(crate) fn golden_section<P: Copy>(
    f: &mut impl FnMut(f64) -> (f64, P),
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64, P) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut pc) = f(c);
    let (mut fd, mut pd) = f(d);
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            pd = pc;
            c = hi - INV_PHI * (hi - lo);
            (fc, pc) = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            pc = pd;
            d = lo + INV_PHI * (hi - lo);
            (fd, pd) = f(d);
        }
    }
    if fc <= fd {
        (c, fc, pc)
    } else {
        (d, fd, pd)
    }
}

/// Coarse scan of `[lo, hi]` (endpoints included), then golden-section
/// refinement between the neighbours of the `starts` best samples.
fn scan_and_refine<P: Copy>(
    f: &mut impl FnMut(f64) -> (f64, P),
    lo: f64,
    hi: f64,
    starts: usize,
    cfg: &MinimizerConfig,
) -> (f64, f64, P) {
    let samples = cfg.samples_per_angle;
    let step = (hi - lo) / (samples - 1) as f64;
    let at = |i: usize| {
        if i + 1 == samples {
            hi
        } else {
            lo + i as f64 * step
        }
    };
    let mut scored: Vec<(f64, usize, P)> = (0..samples)
        .map(|i| {
            let (v, p) = f(at(i));
            (v, i, p)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mut best_v, best_i, mut best_p) = scored[0];
    let mut best_t = at(best_i);
    if !best_v.is_finite() {
        return (best_t, best_v, best_p);
    }
    for &(v, i, _) in scored.iter().take(starts) {
        if !v.is_finite() {
            break;
        }
        let a = at(i.saturating_sub(1));
        let b = at((i + 1).min(samples - 1));
        let (t, vt, p) = golden_section(f, a, b, cfg.refine_tolerance);
        if vt < best_v {
            best_t = t;
            best_v = vt;
            best_p = p;
        }
    }
    (best_t, best_v, best_p)
}

/// Subintervals of `[0, pi/2]` where the last angle gives nonnegative
/// weights, for fixed leading angles.
///
/// The last angle `t` only enters `alpha_{d-1} = P cos t` and
/// `alpha_d = P sin t`, so every weight is `(a + b cos t + c sin t)/(d - 1)`
/// and the feasible set is found from the roots of these sinusoids.
fn feasible_intervals(prefix: &[f64], dim: usize) -> Vec<(f64, f64)> {
    if dim == 2 {
        return vec![(0.0, FRAC_PI_2)];
    }
    let mut leading = [0.0; MAX_DIM];
    let mut p = 1.0;
    for (k, &th) in prefix.iter().enumerate() {
        let (s, c) = th.sin_cos();
        leading[k] = p * c;
        p *= s;
    }
    let q: f64 = leading[..dim - 2].iter().sum();
    let d1 = (dim - 1) as f64;
    let d2 = (dim - 2) as f64;
    let mut constraints = [(0.0, 0.0, 0.0); MAX_DIM + 1];
    constraints[0] = (q - 1.0, p, p);
    for k in 0..dim - 2 {
        constraints[k + 1] = (d1 * leading[k] - q + 1.0, -p, -p);
    }
    constraints[dim - 1] = (1.0 - q, d2 * p, -p);
    constraints[dim] = (1.0 - q, -p, d2 * p);
    let constraints = &constraints[..=dim];
    let slack = d1 * FEASIBILITY_SLACK;
    let feasible = |t: f64| {
        let (s, c) = t.sin_cos();
        constraints
            .iter()
            .all(|&(a, b, cc)| a + b * c + cc * s >= -slack)
    };

    let mut cuts = vec![0.0, FRAC_PI_2];
    for &(a, b, c) in constraints {
        let r = b.hypot(c);
        if r <= 1e-300 || (a / r).abs() > 1.0 {
            continue;
        }
        let phi = c.atan2(b);
        let w = (-a / r).acos();
        for base in [phi - w, phi + w] {
            for turn in -1..=1 {
                let t = base + turn as f64 * std::f64::consts::TAU;
                if t > 0.0 && t < FRAC_PI_2 {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut out: Vec<(f64, f64)> = Vec::new();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if feasible(0.5 * (lo + hi)) {
            match out.last_mut() {
                Some(last) if last.1 == lo => last.1 = hi,
                _ => out.push((lo, hi)),
            }
        }
    }
    // Isolated feasible points, such as the cusp tips at the axes.
    for &t in &cuts {
        if !out.iter().any(|&(lo, hi)| t >= lo && t <= hi) && feasible(t) {
            out.push((t, t));
        }
    }
    out
}

/// Minimum over the last angle for fixed leading angles.
fn innermost(
    obj: &Objective<'_>,
    prefix: [f64; MAX_DIM],
    n: usize,
    starts: usize,
    cfg: &MinimizerConfig,
) -> (f64, [f64; MAX_DIM]) {
    let last = n - 1;
    let mut f = |t: f64| {
        let mut a = prefix;
        a[last] = t;
        (obj.eval(&a[..n]), a)
    };
    let mut best = (f64::INFINITY, prefix);
    for (lo, hi) in feasible_intervals(&prefix[..last], obj.dim) {
        let (_, v, a) = if hi - lo <= cfg.refine_tolerance {
            let (v, a) = f(lo);
            (lo, v, a)
        } else {
            scan_and_refine(&mut f, lo, hi, starts, cfg)
        };
        if v < best.0 {
            best = (v, a);
        }
    }
    best
}

fn nested(
    obj: &Objective<'_>,
    prefix: [f64; MAX_DIM],
    level: usize,
    n: usize,
    cfg: &MinimizerConfig,
) -> (f64, [f64; MAX_DIM]) {
    if level + 1 == n {
        return innermost(obj, prefix, n, 1, cfg);
    }
    let mut f = |t: f64| {
        let mut a = prefix;
        a[level] = t;
        nested(obj, a, level + 1, n, cfg)
    };
    let (_, v, a) = scan_and_refine(&mut f, 0.0, FRAC_PI_2, 1, cfg);
    (v, a)
}

/// Tensor scan over the leading angles (each sample minimised over the last
/// angle), then coordinate-wise golden-section refinement of the leading
/// angles from the `multistart_count` best samples.
fn multistart(obj: &Objective<'_>, n: usize, cfg: &MinimizerConfig) -> (f64, [f64; MAX_DIM]) {
    let starts = cfg.multistart_count;
    let outer = n - 1;
    if outer == 0 {
        return innermost(obj, [0.0; MAX_DIM], n, starts, cfg);
    }
    let samples = cfg.samples_per_angle;
    let step = FRAC_PI_2 / (samples - 1) as f64;
    let decode = |mut k: usize| {
        let mut a = [0.0; MAX_DIM];
        for slot in a.iter_mut().take(outer) {
            let i = k % samples;
            *slot = if i + 1 == samples {
                FRAC_PI_2
            } else {
                i as f64 * step
            };
            k /= samples;
        }
        a
    };
    let mut scored: Vec<(f64, [f64; MAX_DIM])> = (0..samples.pow(outer as u32))
        .map(|k| innermost(obj, decode(k), n, starts, cfg))
        .filter(|(v, _)| v.is_finite())
        .collect();
    if scored.is_empty() {
        return (f64::INFINITY, [0.0; MAX_DIM]);
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored[0];
    for &(v0, a0) in scored.iter().take(starts) {
        let (mut v, mut a) = (v0, a0);
        for _round in 0..100 {
            let before = v;
            for axis in 0..outer {
                let lo = (a[axis] - step).max(0.0);
                let hi = (a[axis] + step).min(FRAC_PI_2);
                let base = a;
                let mut f = |t: f64| {
                    let mut b = base;
                    b[axis] = t;
                    innermost(obj, b, n, starts, cfg)
                };
                let (_, vt, at) = golden_section(&mut f, lo, hi, cfg.refine_tolerance);
                if vt < v {
                    v = vt;
                    a = at;
                }
            }
            if before - v <= 1e-16 || outer == 1 {
                break;
            }
        }
        if v < best.0 {
            best = (v, a);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{barycentric, interpolate};
    use crate::problem::SpeedField;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn far_target() -> TargetSet {
        TargetSet::ball(vec![100.0; 3], 0.1)
    }

    #[test]
    fn one_dimensional_orthant() {
        let g = Grid::new(0.1, vec![0.0], vec![5]).unwrap();
        let speed = SpeedField::constant(1.0).unwrap();
        let target = far_target();
        let cfg = MinimizerConfig::default();
        let ctx = UpdateContext::new(&g, &speed, &target, &cfg).unwrap();
        let mut v = vec![1.0; 5];
        v[1] = 0.0;
        let x = g.node(&[2]).unwrap();
        let neg = Orthant::from_signs(&[-1]).unwrap();
        let ov = ctx.orthant_value(&v, x, neg);
        assert_abs_diff_eq!(ov.value, 0.1, epsilon = 1e-15);
        assert_eq!(ov.direction.unwrap().alpha(), &[-1.0]);
    }

    #[test]
    fn two_direction_enumeration_1d() {
        let g = Grid::new(0.1, vec![0.0], vec![5]).unwrap();
        let speed = SpeedField::constant(1.0).unwrap();
        let target = far_target();
        let cfg = MinimizerConfig::default();
        let ctx = UpdateContext::new(&g, &speed, &target, &cfg).unwrap();
        let mut v = vec![1.0; 5];
        v[1] = 0.0;
        v[3] = 0.3;
        let out = ctx.update_node(&v, g.node(&[2]).unwrap());
        assert_abs_diff_eq!(out.value, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(out.orthant_values[0], 0.9 * 0.3 + 0.1, epsilon = 1e-15);
        assert_eq!(out.orthant_values.len(), 2);
    }

    fn planar() -> (Grid, SpeedField, TargetSet, MinimizerConfig) {
        (
            Grid::new(0.1, vec![0.0, 0.0], vec![5, 5]).unwrap(),
            SpeedField::constant(1.0).unwrap(),
            far_target(),
            MinimizerConfig::default(),
        )
    }

    #[test]
    fn equal_stencil_values_give_constant_objective() {
        let (g, s, t, c) = planar();
        let ctx = UpdateContext::new(&g, &s, &t, &c).unwrap();
        let v = vec![0.0; g.len()];
        let ov = ctx.orthant_value(&v, g.node(&[2, 2]).unwrap(), Orthant::positive(2).unwrap());
        assert_abs_diff_eq!(ov.value, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn planar_orthant_against_dense_scan() {
        let (g, s, t, c) = planar();
        let ctx = UpdateContext::new(&g, &s, &t, &c).unwrap();
        let x = g.node(&[2, 2]).unwrap();
        let mut v = vec![1.0; g.len()];
        v[g.node(&[3, 2]).unwrap().index()] = 0.2;
        v[g.node(&[2, 3]).unwrap().index()] = 0.4;
        v[g.node(&[3, 3]).unwrap().index()] = 0.5;
        let o = Orthant::positive(2).unwrap();
        let ov = ctx.orthant_value(&v, x, o);
        // Brute-force oracle on 10^5 + 1 angles, straight from the
        // interpolation formula.
        let mut oracle = f64::INFINITY;
        for k in 0..=100_000 {
            let th = FRAC_PI_2 * k as f64 / 100_000.0;
            let w = barycentric(&g, x, &Direction::from_angles(&[th], o).unwrap());
            oracle = oracle.min(0.9 * interpolate(&v, &w, 1.0) + 0.1);
        }
        assert!(ov.value <= 0.9 * 0.2 + 0.1 + 1e-15);
        assert!(
            (ov.value - oracle).abs() <= 1e-8,
            "{} vs {oracle}",
            ov.value
        );
    }

    #[test]
    fn target_nodes_and_unreachable_stencils() {
        let (g, s, _, c) = planar();
        let t = TargetSet::ball(vec![0.2, 0.2], 0.01);
        let ctx = UpdateContext::new(&g, &s, &t, &c).unwrap();
        let v = vec![1.0; g.len()];
        let inside = ctx.update_node(&v, g.node(&[2, 2]).unwrap());
        assert_eq!(inside.value, 0.0);
        assert!(inside.best_direction.is_none());
        let out = ctx.update_node(&v, g.node(&[1, 1]).unwrap());
        assert_eq!(out.value, 1.0);
        assert!(out.best_direction.is_none());
    }

    #[test]
    fn rejects_large_steps() {
        let g = Grid::new(0.5, vec![0.0], vec![3]).unwrap();
        let s = SpeedField::isotropic(0.5, 1.0, |_| 0.7).unwrap();
        let t = far_target();
        let c = MinimizerConfig::default();
        assert!(matches!(
            UpdateContext::new(&g, &s, &t, &c),
            Err(Error::StepTooLarge { .. })
        ));
        let bad = MinimizerConfig {
            samples_per_angle: 4,
            ..MinimizerConfig::default()
        };
        let g = Grid::new(0.1, vec![0.0], vec![3]).unwrap();
        assert!(UpdateContext::new(&g, &s, &t, &bad).is_err());
    }

    fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    #[test]
    fn update_is_monotone_and_range_preserving() {
        let (g, s, t, c) = planar();
        let ctx = UpdateContext::new(&g, &s, &t, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let v = random_field(&mut rng, g.len());
            let w: Vec<f64> = v
                .iter()
                .map(|a| (a + rng.gen_range(0.0..0.3)).min(1.0))
                .collect();
            for x in [g.node(&[2, 2]).unwrap(), g.node(&[0, 4]).unwrap()] {
                let uv = ctx.update_node(&v, x);
                let uw = ctx.update_node(&w, x);
                assert!(uv.value <= uw.value + 1e-12);
                assert!((0.0..=1.0).contains(&uv.value));
                let m = uv
                    .orthant_values
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(m, uv.value);
            }
        }
    }

    #[test]
    fn pruned_update_matches_full_update() {
        let (g, s, t, c) = planar();
        let ctx = UpdateContext::new(&g, &s, &t, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..200 {
            let v = random_field(&mut rng, g.len());
            let x = g.node(&[rng.gen_range(0..5), rng.gen_range(0..5)]).unwrap();
            let full = ctx.update_node(&v, x);
            let evals = Cell::new(0);
            let (val, dir) = ctx.value_of(&v, x, &evals);
            assert_eq!(val, full.value);
            assert_eq!(dir, full.best_direction);
        }
    }

    #[test]
    fn isotropic_separability_in_three_dimensions() {
        let g = Grid::new(0.1, vec![0.0; 3], vec![3; 3]).unwrap();
        let s = SpeedField::constant(1.0).unwrap();
        let t = far_target();
        let nested = MinimizerConfig {
            method: MinimizerMethod::Nested,
            ..MinimizerConfig::default()
        };
        let multi = MinimizerConfig {
            method: MinimizerMethod::Multistart,
            ..MinimizerConfig::default()
        };
        let a = UpdateContext::new(&g, &s, &t, &nested).unwrap();
        let b = UpdateContext::new(&g, &s, &t, &multi).unwrap();
        let x = g.node(&[1, 1, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..100 {
            let v = random_field(&mut rng, g.len());
            for o in enumerate_orthants(3).unwrap() {
                let va = a.orthant_value(&v, x, o).value;
                let vb = b.orthant_value(&v, x, o).value;
                assert!((va - vb).abs() <= 1e-6, "{va} vs {vb}");
            }
        }
    }

    #[test]
    fn anisotropic_speed_uses_signed_direction() {
        let g = Grid::new(0.1, vec![0.0, 0.0], vec![5, 5]).unwrap();
        // Fast towards -x, slow towards +x.
        let s = SpeedField::anisotropic(0.5, 2.0, |_, a| 1.25 - 0.75 * a[0]).unwrap();
        let t = far_target();
        let c = MinimizerConfig::default();
        let ctx = UpdateContext::new(&g, &s, &t, &c).unwrap();
        let v = vec![0.0; g.len()];
        let x = g.node(&[2, 2]).unwrap();
        let neg = ctx.orthant_value(&v, x, Orthant::from_signs(&[-1, 1]).unwrap());
        let pos = ctx.orthant_value(&v, x, Orthant::positive(2).unwrap());
        assert_abs_diff_eq!(neg.value, 0.1 / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pos.value, 0.1 / 1.25, epsilon = 1e-9);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let mut f = |t: f64| ((t - 0.3) * (t - 0.3), ());
        let (t, v, _) = golden_section(&mut f, 0.0, 1.0, 1e-10);
        assert_abs_diff_eq!(t, 0.3, epsilon = 1e-9);
        assert!(v < 1e-18);
    }
}
