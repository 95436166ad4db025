//! Fast marching and value iteration for the fully discrete scheme, in
//! unconstrained and state-constrained modes.
//!
//! Both solvers work on Kruzkov values in `[0, 1]`; unreachable nodes keep
//! the value 1. In constrained mode nodes outside the domain are pinned at 1
//! and never updated, so stencil reads of them return 1.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeId, MAX_DIM};
use crate::interp::Direction;
use crate::problem::BenchmarkInstance;
use crate::update::{MinimizerConfig, UpdateContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Far,
    Narrow,
    Accepted,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Far => "far",
            Label::Narrow => "narrow",
            Label::Accepted => "accepted",
        }
    }
}

/// Per-node values, labels and the argmin direction of the last update.
#[derive(Clone, Debug)]
pub struct ValueField {
    grid: Grid,
    values: Vec<f64>,
    labels: Vec<Label>,
    directions: Vec<Option<Direction>>,
    accepted_order: Vec<NodeId>,
}

impl ValueField {
    /// A field with the given values, all labels `Far`, no directions.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let n = values.len();
        Ok(ValueField {
            grid,
            values,
            labels: vec![Label::Far; n],
            directions: vec![None; n],
            accepted_order: Vec::new(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: NodeId) -> f64 {
        self.values[x.index()]
    }

    /// Value at the grid node nearest to `point`.
    pub fn value_near(&self, point: &[f64]) -> Option<f64> {
        self.grid.nearest_node(point).map(|n| self.value(n))
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, x: NodeId) -> Label {
        self.labels[x.index()]
    }

    pub fn direction(&self, x: NodeId) -> Option<&Direction> {
        self.directions[x.index()].as_ref()
    }

    /// Nodes in the order fast marching accepted them (target nodes
    /// first); empty for value iteration.
    pub fn accepted_order(&self) -> &[NodeId] {
        &self.accepted_order
    }

    /// Number of nodes with value below 1.
    pub fn reachable_count(&self) -> usize {
        self.values.iter().filter(|&&v| v < 1.0).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Unconstrained,
    Constrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub h: f64,
    pub mode: Mode,
    pub vi_tolerance: f64,
    pub vi_max_iters: usize,
    pub minimizer: MinimizerConfig,
}

impl SolverConfig {
    pub fn new(h: f64) -> Self {
        SolverConfig {
            h,
            mode: Mode::Unconstrained,
            vi_tolerance: 1e-12,
            vi_max_iters: 100_000,
            minimizer: MinimizerConfig::default(),
        }
    }

    pub fn constrained(mut self) -> Self {
        self.mode = Mode::Constrained;
        self
    }

    pub fn with_h(&self, h: f64) -> Self {
        SolverConfig { h, ..self.clone() }
    }
}

/// Instrumentation of one solver run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Accepted nodes, target nodes included (fast marching).
    pub pops: u64,
    /// Full sweeps (value iteration).
    pub iterations: u64,
    /// Heap pushes plus pops, stale entries included.
    pub heap_ops: u64,
    pub objective_evals: u64,
    /// Largest change in the last sweep (value iteration).
    pub residual: f64,
    pub converged: bool,
    pub wall_time: f64,
}

/// The discrete scheme for one instance on one grid: shared by both solvers
/// and by operator evaluation.
pub struct Discretization<'a> {
    instance: &'a BenchmarkInstance,
    grid: Grid,
    config: &'a SolverConfig,
    is_target: Vec<bool>,
    is_pinned: Vec<bool>,
}

impl<'a> Discretization<'a> {
    pub fn new(instance: &'a BenchmarkInstance, config: &'a SolverConfig) -> Result<Self> {
        instance.speed.check_step(config.h)?;
        config.minimizer.validate()?;
        if !(config.vi_tolerance > 0.0) || config.vi_max_iters == 0 {
            return Err(Error::InvalidArgument(
                "value iteration needs a positive tolerance and iteration cap".into(),
            ));
        }
        let domain = match config.mode {
            Mode::Unconstrained => None,
            Mode::Constrained => Some(instance.domain.as_ref().ok_or_else(|| {
                Error::Setup(format!(
                    "constrained mode needs a constraint domain; `{}` has none",
                    instance.name
                ))
            })?),
        };
        let grid = instance.grid(config.h)?;
        let dim = grid.dim();
        let mut is_target = vec![false; grid.len()];
        let mut is_pinned = vec![false; grid.len()];
        let mut c = [0.0; MAX_DIM];
        for x in grid.nodes() {
            grid.coord_into(x, &mut c[..dim]);
            let p = &c[..dim];
            if domain.is_some_and(|o| !o.contains(p)) {
                is_pinned[x.index()] = true;
            } else if instance.target.contains(p) {
                is_target[x.index()] = true;
            }
        }
        if !is_target.iter().any(|&t| t) {
            return Err(Error::EmptyTarget);
        }
        Ok(Discretization {
            instance,
            grid,
            config,
            is_target,
            is_pinned,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn instance(&self) -> &'a BenchmarkInstance {
        self.instance
    }

    pub fn config(&self) -> &'a SolverConfig {
        self.config
    }

    pub fn is_target(&self, x: NodeId) -> bool {
        self.is_target[x.index()]
    }

    /// Outside the constraint domain (constrained mode only).
    pub fn is_pinned(&self, x: NodeId) -> bool {
        self.is_pinned[x.index()]
    }

    fn is_free(&self, x: NodeId) -> bool {
        !self.is_target[x.index()] && !self.is_pinned[x.index()]
    }

    pub fn context(&self) -> UpdateContext<'_> {
        UpdateContext::new(
            &self.grid,
            &self.instance.speed,
            &self.instance.target,
            &self.config.minimizer,
        )
        .expect("validated at construction")
    }

    /// Initial field: 0 on target nodes, 1 elsewhere.
    pub fn initial_values(&self) -> Vec<f64> {
        self.is_target
            .iter()
            .map(|&t| if t { 0.0 } else { 1.0 })
            .collect()
    }

    /// One Jacobi application of the full-grid operator: every free node
    /// gets its update from `values`; target nodes get 0 and pinned nodes 1.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let ctx = self.context();
        let evals = Cell::new(0);
        self.grid
            .nodes()
            .map(|x| {
                if self.is_target(x) {
                    0.0
                } else if self.is_pinned(x) {
                    1.0
                } else {
                    ctx.value_of(values, x, &evals).0
                }
            })
            .collect()
    }

    /// Largest `|T V - V|` over the grid.
    pub fn fixed_point_residual(&self, values: &[f64]) -> f64 {
        self.apply(values)
            .iter()
            .zip(values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn fast_march(&self) -> (ValueField, SolveReport) {
        let start = Instant::now();
        let ctx = self.context();
        let evals = Cell::new(0u64);
        let n = self.grid.len();
        let mut values = self.initial_values();
        let mut labels = vec![Label::Far; n];
        let mut directions: Vec<Option<Direction>> = vec![None; n];
        let mut order = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut report = SolveReport::default();
        let mut nbrs = Vec::new();

        for x in self.grid.nodes().filter(|&x| self.is_target(x)) {
            labels[x.index()] = Label::Accepted;
            order.push(x);
        }
        report.pops = order.len() as u64;
        // Narrow band seeded from the neighbourhood of the target.
        let mut seeds = Vec::new();
        for &t in &order {
            self.grid.neighbors_into(t, &mut nbrs);
            seeds.extend(nbrs.iter().copied().filter(|&y| self.is_free(y)));
        }
        seeds.sort_unstable();
        seeds.dedup();
        for y in seeds {
            if let Some((v, d)) = ctx.improve(&values, y, values[y.index()], &evals) {
                values[y.index()] = v;
                directions[y.index()] = Some(d);
                labels[y.index()] = Label::Narrow;
                heap.push(Entry { value: v, node: y });
                report.heap_ops += 1;
            }
        }

        while let Some(Entry { value, node }) = heap.pop() {
            report.heap_ops += 1;
            if labels[node.index()] == Label::Accepted || value != values[node.index()] {
                continue;
            }
            labels[node.index()] = Label::Accepted;
            order.push(node);
            report.pops += 1;
            self.grid.neighbors_into(node, &mut nbrs);
            for &y in &nbrs {
                if labels[y.index()] == Label::Accepted || !self.is_free(y) {
                    continue;
                }
                if let Some((v, d)) = ctx.improve(&values, y, values[y.index()], &evals) {
                    values[y.index()] = v;
                    directions[y.index()] = Some(d);
                    labels[y.index()] = Label::Narrow;
                    heap.push(Entry { value: v, node: y });
                    report.heap_ops += 1;
                }
            }
        }
        debug_assert!(labels
            .iter()
            .zip(&values)
            .all(|(l, &v)| (*l == Label::Accepted) == (v < 1.0)));

        report.objective_evals = evals.get();
        report.converged = true;
        report.wall_time = start.elapsed().as_secs_f64();
        (
            ValueField {
                grid: self.grid.clone(),
                values,
                labels,
                directions,
                accepted_order: order,
            },
            report,
        )
    }

    /// Gauss-Seidel iteration of the operator from `V = 1` off the target,
    /// cycling through the `2^d` axis orientations of the sweep order.
    pub fn value_iterate(&self) -> (ValueField, SolveReport) {
        let start = Instant::now();
        let ctx = self.context();
        let evals = Cell::new(0u64);
        let n = self.grid.len();
        let dim = self.grid.dim();
        let counts = self.grid.counts().to_vec();
        let mut values = self.initial_values();
        let mut directions: Vec<Option<Direction>> = vec![None; n];
        let mut report = SolveReport::default();
        let free: Vec<bool> = self.grid.nodes().map(|x| self.is_free(x)).collect();

        let mut multi = [0usize; MAX_DIM];
        for sweep in 0..self.config.vi_max_iters {
            let orientation = sweep % (1 << dim);
            let mut residual: f64 = 0.0;
            for k in 0..n {
                // Decompose k row-major, reversing the axes selected by the
                // orientation bits.
                let mut rem = k;
                for l in (0..dim).rev() {
                    let i = rem % counts[l];
                    rem /= counts[l];
                    multi[l] = if orientation & (1 << l) != 0 {
                        counts[l] - 1 - i
                    } else {
                        i
                    };
                }
                let x = self.grid.node(&multi[..dim]).expect("in range");
                if !free[x.index()] {
                    continue;
                }
                let old = values[x.index()];
                if let Some((v, d)) = ctx.improve(&values, x, old, &evals) {
                    residual = residual.max(old - v);
                    values[x.index()] = v;
                    directions[x.index()] = Some(d);
                }
            }
            report.iterations = sweep as u64 + 1;
            report.residual = residual;
            if residual <= self.config.vi_tolerance {
                report.converged = true;
                break;
            }
        }
        let labels = values
            .iter()
            .map(|&v| if v < 1.0 { Label::Accepted } else { Label::Far })
            .collect();
        report.objective_evals = evals.get();
        report.wall_time = start.elapsed().as_secs_f64();
        (
            ValueField {
                grid: self.grid.clone(),
                values,
                labels,
                directions,
                accepted_order: Vec::new(),
            },
            report,
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    value: f64,
    node: NodeId,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed: BinaryHeap is a max-heap, we pop the smallest value, ties
    // broken by the smallest node id.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Fast marching in the mode selected by `cfg.mode`.
pub fn fast_march(
    instance: &BenchmarkInstance,
    cfg: &SolverConfig,
) -> Result<(ValueField, SolveReport)> {
    Ok(Discretization::new(instance, cfg)?.fast_march())
}

/// Constrained fast marching regardless of `cfg.mode`.
pub fn fast_march_constrained(
    instance: &BenchmarkInstance,
    cfg: &SolverConfig,
) -> Result<(ValueField, SolveReport)> {
    let cfg = SolverConfig {
        mode: Mode::Constrained,
        ..cfg.clone()
    };
    Ok(Discretization::new(instance, &cfg)?.fast_march())
}

/// Value iteration in the mode selected by `cfg.mode`. Non-convergence is
/// reported through `SolveReport::converged`.
pub fn value_iterate(
    instance: &BenchmarkInstance,
    cfg: &SolverConfig,
) -> Result<(ValueField, SolveReport)> {
    Ok(Discretization::new(instance, cfg)?.value_iterate())
}

/// `t+(g) = max(sup g, 0)`.
pub fn t_plus(diff: impl IntoIterator<Item = f64>) -> f64 {
    diff.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::benchmark;
    use approx::assert_abs_diff_eq;

    fn halfline_box() -> BenchmarkInstance {
        benchmark("halfline-1d")
            .unwrap()
            .with_box(vec![0.0], vec![1.0])
            .unwrap()
    }

    #[test]
    fn halfline_closed_form() {
        let inst = halfline_box();
        let (field, report) = fast_march(&inst, &SolverConfig::new(0.1)).unwrap();
        assert_eq!(field.grid().len(), 11);
        let x = field.grid().nearest_node(&[0.5]).unwrap();
        assert_abs_diff_eq!(field.value(x), 1.0 - 0.9f64.powi(5), epsilon = 1e-12);
        assert_abs_diff_eq!(field.value(x), 0.40951, epsilon = 1e-12);
        assert_eq!(report.pops, 11);
        assert!(field.labels().iter().all(|&l| l == Label::Accepted));
    }

    #[test]
    fn value_iteration_matches_fast_marching_on_halfline() {
        let inst = halfline_box();
        let cfg = SolverConfig::new(0.1);
        let (fm, _) = fast_march(&inst, &cfg).unwrap();
        let (vi, report) = value_iterate(&inst, &cfg).unwrap();
        assert!(report.converged);
        for (a, b) in fm.values().iter().zip(vi.values()) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert_eq!(vi.value(NodeId(0)), 0.0);
    }

    #[test]
    fn value_iteration_respects_contraction_bound() {
        let inst = halfline_box();
        let cfg = SolverConfig::new(0.1);
        let (_, report) = value_iterate(&inst, &cfg).unwrap();
        // Residual after n sweeps is at most 0.9^n; 1e-12 is reached by
        // n = ceil(log(1e-12) / log(0.9)) = 263.
        let bound = (1e-12f64.ln() / 0.9f64.ln()).ceil() as u64;
        assert_eq!(bound, 263);
        assert!(report.iterations <= bound);
    }

    #[test]
    fn setup_errors() {
        let inst = halfline_box();
        assert!(matches!(
            fast_march(&inst, &SolverConfig::new(2.0)),
            Err(Error::StepTooLarge { .. })
        ));
        let shifted = halfline_box().with_box(vec![0.5], vec![1.5]).unwrap();
        assert_eq!(
            fast_march(&shifted, &SolverConfig::new(0.1)).unwrap_err(),
            Error::EmptyTarget
        );
        assert!(matches!(
            fast_march_constrained(&inst, &SolverConfig::new(0.1)),
            Err(Error::Setup(_))
        ));
    }

    #[test]
    fn fast_march_is_a_fixed_point_on_the_disk() {
        let inst = benchmark("unit-disk").unwrap();
        let cfg = SolverConfig::new(1.0 / 10.0);
        let disc = Discretization::new(&inst, &cfg).unwrap();
        let (field, report) = disc.fast_march();
        assert!(disc.fixed_point_residual(field.values()) <= 1e-9);
        assert_eq!(report.pops as usize, field.reachable_count());
        assert!(report.pops as usize <= field.grid().len());
        let mut seen = vec![false; field.grid().len()];
        for x in field.accepted_order() {
            assert!(!seen[x.index()]);
            seen[x.index()] = true;
        }
    }

    #[test]
    fn accepted_values_are_nondecreasing() {
        let inst = benchmark("unit-disk").unwrap();
        let (field, _) = fast_march(&inst, &SolverConfig::new(1.0 / 20.0)).unwrap();
        let order = field.accepted_order();
        for w in order.windows(2) {
            assert!(field.value(w[0]) <= field.value(w[1]) + 1e-12);
        }
    }

    #[test]
    fn constrained_pins_and_dominates() {
        let inst = benchmark("disk-with-slab-obstacle").unwrap();
        let cfg = SolverConfig::new(1.0 / 20.0);
        let (free, _) = fast_march(&inst, &cfg).unwrap();
        let (con, _) = fast_march_constrained(&inst, &cfg).unwrap();
        let dom = inst.domain.as_ref().unwrap();
        let g = con.grid();
        for x in g.nodes() {
            let c = g.coord(x);
            if !dom.contains(&c) {
                assert_eq!(con.value(x), 1.0);
            }
            if c[0] > crate::problem::SLAB_UPPER[0] {
                assert_eq!(con.value(x), 1.0);
            }
            assert!(con.value(x) >= free.value(x) - 1e-12);
        }
    }
}
