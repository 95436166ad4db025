//! Solvers for the minimum-time eikonal problem on regular grids.
//!
//! The value function is computed in Kruzkov form `v = 1 - exp(-T)` by a
//! semi-Lagrangian scheme whose interpolation weights double as the
//! transition probabilities of a controlled Markov chain. Two solvers share
//! the scheme: single-pass fast marching and Gauss-Seidel value iteration,
//! each in unconstrained and state-constrained modes.

pub mod analysis;
pub mod error;
pub mod grid;
pub mod interp;
pub mod mdp;
pub mod problem;
pub mod solve;
pub mod update;

pub use analysis::{
    brute_force_discrete_value, complexity_ratios, complexity_scaling, convergence_sweep,
    fit_power_law, format_float, interior_sup_error, semiconcavity_probe, semiconcavity_probe_at,
    BruteForceValue, ComplexityPoint, ConvergenceRecord, ProbeLevel, SemiconcavityProbe,
};
pub use error::{Error, Result};
pub use grid::{enumerate_orthants, Grid, NodeId, Orthant, MAX_DIM};
pub use interp::{barycentric, direction_from_angles, interpolate, BarycentricWeights, Direction};
pub use mdp::{
    check_transition_moments, default_step_cap, monte_carlo_value, rollout, transition,
    CustomStrategy, GreedyStrategy, MomentCheck, MonteCarloEstimate, ReplayStrategy, RolloutResult,
    Strategy, StrategyKind, SupportPoint, Terminal, TransitionDistribution,
};
pub use problem::{
    benchmark, kruzkov, kruzkov_inverse, BenchmarkInstance, ConstraintDomain, SpeedField,
    SpeedKind, TargetSet, BENCHMARKS,
};
pub use solve::{
    fast_march, fast_march_constrained, t_plus, value_iterate, Discretization, Label, Mode,
    SolveReport, SolverConfig, ValueField,
};
pub use update::{MinimizerConfig, MinimizerMethod, OrthantValue, UpdateContext, UpdateOutcome};
