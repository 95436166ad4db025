//! The discretization read as a controlled Markov chain.
//!
//! From node `x` under direction `alpha`, the chain jumps to the stencil node
//! `y_k` with probability equal to its interpolation weight. The expected jump
//! is `h alpha`, and a path that reaches the target after `N` steps costs
//! `1 - prod_k (1 - h / f(x_k, alpha_k))`.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Rollout
//! `i` of a Monte-Carlo estimate uses stream `i` of that generator, so results
//! do not depend on thread count or scheduling.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeId, MAX_DIM};
use crate::interp::{barycentric, Direction};
use crate::solve::{Discretization, ValueField};

/// One reachable jump of a transition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportPoint {
    /// `None` when the stencil node lies outside the grid.
    pub node: Option<NodeId>,
    /// `y_k - x` in length units.
    pub displacement: Vec<f64>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionDistribution {
    support: Vec<SupportPoint>,
}

impl TransitionDistribution {
    /// Stencil nodes with positive weight, in stencil order.
    pub fn support(&self) -> &[SupportPoint] {
        &self.support
    }

    pub fn total_probability(&self) -> f64 {
        self.support.iter().map(|p| p.probability).sum()
    }

    pub fn mean_displacement(&self) -> Vec<f64> {
        let dim = self.support[0].displacement.len();
        (0..dim)
            .map(|l| {
                self.support
                    .iter()
                    .map(|p| p.probability * p.displacement[l])
                    .sum()
            })
            .collect()
    }

    /// Trace of the covariance of the jump.
    pub fn covariance_trace(&self) -> f64 {
        let mean = self.mean_displacement();
        let second: f64 = self
            .support
            .iter()
            .map(|p| p.probability * p.displacement.iter().map(|d| d * d).sum::<f64>())
            .sum();
        second - mean.iter().map(|m| m * m).sum::<f64>()
    }

    /// Draws one support point by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &SupportPoint {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for p in &self.support {
            acc += p.probability;
            if u < acc {
                return p;
            }
        }
        self.support.last().expect("support is never empty")
    }
}

/// The transition law at `x` under `dir`.
pub fn transition(grid: &Grid, x: NodeId, dir: &Direction) -> Result<TransitionDistribution> {
    let dim = grid.dim();
    if dir.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "{}-dimensional direction on a {dim}-dimensional grid",
            dir.dim()
        )));
    }
    let w = barycentric(grid, x, dir);
    if !w.feasible {
        return Err(Error::InfeasibleDirection { node: x.index() });
    }
    let o = dir.orthant();
    let h = grid.mesh();
    let support = w
        .weights
        .iter()
        .zip(&w.nodes)
        .enumerate()
        .filter(|(_, (&p, _))| p > 0.0)
        .map(|(k, (&p, &node))| {
            let displacement = (0..dim)
                .map(|l| {
                    if k == l || k == dim {
                        o.sign(l) * h
                    } else {
                        0.0
                    }
                })
                .collect();
            SupportPoint {
                node,
                displacement,
                probability: p,
            }
        })
        .collect();
    Ok(TransitionDistribution { support })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    MarkovGreedy,
    Replay,
    Custom,
}

/// A pure strategy: the control as a function of the history of
/// `(state, control)` pairs and the current state. `None` means no control
/// is available; the rollout then stops with cost 1.
pub trait Strategy: Sync {
    fn kind(&self) -> StrategyKind;
    fn decide(&self, history: &[(NodeId, Direction)], current: NodeId) -> Option<Direction>;
}

/// Plays the direction stored by the solver at the current node.
pub struct GreedyStrategy<'a> {
    field: &'a ValueField,
}

impl<'a> GreedyStrategy<'a> {
    pub fn new(field: &'a ValueField) -> Self {
        GreedyStrategy { field }
    }
}

impl Strategy for GreedyStrategy<'_> {
    fn kind(&self) -> StrategyKind {
        StrategyKind::MarkovGreedy
    }

    fn decide(&self, _history: &[(NodeId, Direction)], current: NodeId) -> Option<Direction> {
        self.field.direction(current).cloned()
    }
}

/// Plays a fixed control sequence, one entry per step.
pub struct ReplayStrategy {
    controls: Vec<Direction>,
}

impl ReplayStrategy {
    pub fn new(controls: Vec<Direction>) -> Self {
        ReplayStrategy { controls }
    }
}

impl Strategy for ReplayStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Replay
    }

    fn decide(&self, history: &[(NodeId, Direction)], _current: NodeId) -> Option<Direction> {
        self.controls.get(history.len()).cloned()
    }
}

type Decide = dyn Fn(&[(NodeId, Direction)], NodeId) -> Option<Direction> + Send + Sync;

pub struct CustomStrategy {
    decide: Box<Decide>,
}

impl CustomStrategy {
    pub fn new<F>(decide: F) -> Self
    where
        F: Fn(&[(NodeId, Direction)], NodeId) -> Option<Direction> + Send + Sync + 'static,
    {
        CustomStrategy {
            decide: Box::new(decide),
        }
    }
}

impl Strategy for CustomStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Custom
    }

    fn decide(&self, history: &[(NodeId, Direction)], current: NodeId) -> Option<Direction> {
        (self.decide)(history, current)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Terminal {
    ReachedTarget,
    /// Left the grid, entered a pinned node, or found no control.
    HitBoundary,
    StepCap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RolloutResult {
    pub cost: f64,
    pub steps: usize,
    pub terminal: Terminal,
    /// Visited nodes, starting with `x0`. A final exit from the grid is not
    /// recorded.
    pub path: Vec<NodeId>,
}

/// `ceil(50 * diameter / h)`.
pub fn default_step_cap(disc: &Discretization<'_>) -> usize {
    (50.0 * disc.instance().diameter() / disc.grid().mesh()).ceil() as usize
}

/// Simulates the chain from `x0` under `strategy` using stream 0 of `seed`.
///
/// Reaching the target costs the product-form cost of the path; leaving the
/// grid, stepping onto a node outside the constraint domain, finding no
/// control, or hitting `step_cap` all cost 1.
pub fn rollout(
    disc: &Discretization<'_>,
    strategy: &dyn Strategy,
    x0: NodeId,
    seed: u64,
    step_cap: usize,
) -> Result<RolloutResult> {
    rollout_stream(disc, strategy, x0, seed, 0, step_cap)
}

fn rollout_stream(
    disc: &Discretization<'_>,
    strategy: &dyn Strategy,
    x0: NodeId,
    seed: u64,
    stream: u64,
    step_cap: usize,
) -> Result<RolloutResult> {
    let grid = disc.grid();
    if x0.index() >= grid.len() {
        return Err(Error::InvalidArgument(format!(
            "start node {} is outside a grid of {} nodes",
            x0.index(),
            grid.len()
        )));
    }
    if step_cap == 0 {
        return Err(Error::InvalidArgument("step_cap must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let speed = &disc.instance().speed;
    let h = grid.mesh();
    let dim = grid.dim();
    let mut coord = [0.0; MAX_DIM];
    let mut history: Vec<(NodeId, Direction)> = Vec::new();
    let mut path = vec![x0];
    // Per-step discounts h/f, folded backward on arrival.
    let mut discounts: Vec<f64> = Vec::new();
    let mut x = x0;
    let stop = |terminal, cost, path, steps| RolloutResult {
        cost,
        steps,
        terminal,
        path,
    };
    loop {
        let steps = history.len();
        if disc.is_pinned(x) {
            return Ok(stop(Terminal::HitBoundary, 1.0, path, steps));
        }
        if disc.is_target(x) {
            // c <- 1 - (1 - q)(1 - c) from the end of the path, the same
            // recursion and rounding as the scheme.
            let cost = discounts
                .iter()
                .rev()
                .fold(0.0, |c, q| 1.0 - (1.0 - q) * (1.0 - c));
            return Ok(stop(Terminal::ReachedTarget, cost, path, steps));
        }
        if steps == step_cap {
            return Ok(stop(Terminal::StepCap, 1.0, path, steps));
        }
        let Some(dir) = strategy.decide(&history, x) else {
            return Ok(stop(Terminal::HitBoundary, 1.0, path, steps));
        };
        let law = transition(grid, x, &dir)?;
        grid.coord_into(x, &mut coord[..dim]);
        discounts.push(h / speed.eval(&coord[..dim], dir.alpha()));
        let next = law.sample(&mut rng).node;
        history.push((x, dir));
        match next {
            Some(y) => {
                path.push(y);
                x = y;
            }
            None => return Ok(stop(Terminal::HitBoundary, 1.0, path, steps + 1)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; 0 when `n = 1`.
    pub std_error: f64,
    pub samples: usize,
    /// Set when `n < 100`.
    pub underpowered: bool,
    /// Rollouts stopped by the step cap.
    pub truncated: usize,
}

/// Sample count below which an estimate is flagged as underpowered.
pub const MIN_SAMPLES: usize = 100;

/// Mean greedy-rollout cost from `x0` over `n_samples` independent rollouts,
/// with the default step cap.
pub fn monte_carlo_value(
    disc: &Discretization<'_>,
    field: &ValueField,
    x0: NodeId,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let strategy = GreedyStrategy::new(field);
    let cap = default_step_cap(disc);
    let runs = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| rollout_stream(disc, &strategy, x0, seed, i, cap))
        .collect::<Result<Vec<_>>>()?;
    let n = n_samples as f64;
    // Sums are shifted by the first cost, so identical samples give that
    // cost and a zero standard error exactly.
    let c0 = runs[0].cost;
    let (s1, s2) = runs.iter().fold((0.0, 0.0), |(a, b), r| {
        let d = r.cost - c0;
        (a + d, b + d * d)
    });
    let mean = c0 + s1 / n;
    let std_error = if n_samples > 1 {
        let var = ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean,
        std_error,
        samples: n_samples,
        underpowered: n_samples < MIN_SAMPLES,
        truncated: runs
            .iter()
            .filter(|r| r.terminal == Terminal::StepCap)
            .count(),
    })
}

/// Worst deviations over a batch of random feasible transitions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentCheck {
    pub draws: usize,
    /// Largest `|sum p - 1|`.
    pub probability_error: f64,
    /// Largest `|E[jump] - h alpha|` over components.
    pub mean_error: f64,
    /// Largest `Tr Var[jump] - h^2`.
    pub trace_excess: f64,
}

impl MomentCheck {
    pub fn passed(&self) -> bool {
        self.probability_error <= 1e-12 && self.mean_error <= 1e-10 && self.trace_excess <= 1e-10
    }
}

/// Draws `draws` feasible (node, direction) pairs uniformly over grid nodes,
/// orthants and angles (infeasible draws are discarded) and records the
/// moment deviations of their transitions.
pub fn check_transition_moments(grid: &Grid, draws: usize, seed: u64) -> Result<MomentCheck> {
    let dim = grid.dim();
    let orthants = crate::grid::enumerate_orthants(dim)?;
    let h = grid.mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = MomentCheck {
        draws: 0,
        probability_error: 0.0,
        mean_error: 0.0,
        trace_excess: f64::NEG_INFINITY,
    };
    while out.draws < draws {
        let x = NodeId(rng.gen_range(0..grid.len()));
        let angles: Vec<f64> = (0..dim - 1)
            .map(|_| rng.gen_range(0.0..=FRAC_PI_2))
            .collect();
        let o = orthants[rng.gen_range(0..orthants.len())];
        let dir = Direction::from_angles(&angles, o)?;
        let law = match transition(grid, x, &dir) {
            Ok(law) => law,
            Err(Error::InfeasibleDirection { .. }) => continue,
            Err(e) => return Err(e),
        };
        out.draws += 1;
        out.probability_error = out
            .probability_error
            .max((law.total_probability() - 1.0).abs());
        for (m, a) in law.mean_displacement().iter().zip(dir.alpha()) {
            out.mean_error = out.mean_error.max((m - h * a).abs());
        }
        out.trace_excess = out.trace_excess.max(law.covariance_trace() - h * h);
    }
    Ok(out)
}
