//! Empirical checks: interior errors against closed forms, order fits over
//! a sequence of steps, second-difference probes, an exhaustive
//! discrete-control oracle and fast-marching cost instrumentation.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{NodeId, MAX_DIM};
use crate::problem::{kruzkov_inverse, BenchmarkInstance, TargetSet};
use crate::solve::{Discretization, SolveReport, SolverConfig, ValueField};

/// Largest `|V - v|` over nodes at distance at least `margin` from the faces
/// of the computational box, target nodes excluded.
pub fn interior_sup_error(
    field: &ValueField,
    instance: &BenchmarkInstance,
    margin: f64,
) -> Result<f64> {
    let exact = instance
        .analytic_value
        .as_ref()
        .ok_or_else(|| Error::NoAnalyticSolution(instance.name.clone()))?;
    let grid = field.grid();
    let h = grid.mesh();
    if !(margin >= 2.0 * h) {
        return Err(Error::InvalidArgument(format!(
            "margin {margin} is below twice the mesh step {h}"
        )));
    }
    let dim = grid.dim();
    let cut = margin * (1.0 - 1e-12);
    let mut c = [0.0; MAX_DIM];
    let mut sup: Option<f64> = None;
    for x in grid.nodes() {
        if grid.boundary_clearance(x) < cut {
            continue;
        }
        grid.coord_into(x, &mut c[..dim]);
        if instance.target.contains(&c[..dim]) {
            continue;
        }
        let e = (field.value(x) - exact(&c[..dim])).abs();
        sup = Some(sup.map_or(e, |s: f64| s.max(e)));
    }
    sup.ok_or(Error::EmptyRegion)
}

/// Unweighted least-squares fit of `log e = log C + p log h`; returns
/// `(p, C)`.
pub fn fit_power_law(h: &[f64], errors: &[f64]) -> Result<(f64, f64)> {
    if h.len() != errors.len() || h.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two matching (h, error) pairs, got {} and {}",
            h.len(),
            errors.len()
        )));
    }
    if let Some(&bad) = h
        .iter()
        .chain(errors)
        .find(|&&v| !(v > 0.0 && v.is_finite()))
    {
        return Err(Error::Domain {
            op: "fit_power_law",
            what: "log-log data point",
            value: bad,
        });
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all h values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    Ok((p, (my - p * mx).exp()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub h_values: Vec<f64>,
    pub sup_errors: Vec<f64>,
    pub fitted_order: f64,
    pub fitted_constant: f64,
    pub margin: f64,
    pub reports: Vec<SolveReport>,
}

impl ConvergenceRecord {
    /// Whether `error <= factor * C * h` at every step.
    pub fn within_bound(&self, factor: f64) -> bool {
        self.h_values
            .iter()
            .zip(&self.sup_errors)
            .all(|(h, e)| *e <= factor * self.fitted_constant * h)
    }
}

/// Fast marching at each step of `h_list` (run concurrently) and the order
/// fit of the interior errors.
pub fn convergence_sweep(
    instance: &BenchmarkInstance,
    h_list: &[f64],
    margin: f64,
    cfg: &SolverConfig,
) -> Result<ConvergenceRecord> {
    if h_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a convergence sweep needs at least 3 steps, got {}",
            h_list.len()
        )));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "steps must be strictly decreasing".into(),
        ));
    }
    let runs = h_list
        .par_iter()
        .map(|&h| {
            let run = || -> Result<(f64, SolveReport)> {
                let cfg = cfg.with_h(h);
                let (field, report) = Discretization::new(instance, &cfg)?.fast_march();
                Ok((interior_sup_error(&field, instance, margin)?, report))
            };
            run().map_err(|e| Error::SweepFailed {
                h,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (sup_errors, reports): (Vec<f64>, Vec<SolveReport>) = runs.into_iter().unzip();
    let (fitted_order, fitted_constant) = fit_power_law(h_list, &sup_errors)?;
    Ok(ConvergenceRecord {
        h_values: h_list.to_vec(),
        sup_errors,
        fitted_order,
        fitted_constant,
        margin,
        reports,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeLevel {
    /// Kruzkov values `v`.
    Value,
    /// Times `T = -ln(1 - v)`.
    Time,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemiconcavityProbe {
    pub level: ProbeLevel,
    pub z_steps: Vec<usize>,
    pub z_magnitudes: Vec<f64>,
    /// Per `z`, the largest `(V(x+z) - 2V(x) + V(x-z)) / |z|^2`.
    pub max_ratio: Vec<f64>,
    /// Number of admissible `(x, z)` triples per `z`.
    pub samples: Vec<usize>,
}

impl SemiconcavityProbe {
    /// `max / min` of the per-`z` maxima; infinite unless all are positive.
    pub fn spread(&self) -> f64 {
        let hi = self
            .max_ratio
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = self.max_ratio.iter().copied().fold(f64::INFINITY, f64::min);
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }
}

/// Second differences of the Kruzkov values along every axis at offsets
/// `k h` for `k` in `z_steps`.
pub fn semiconcavity_probe(
    field: &ValueField,
    target: &TargetSet,
    z_steps: &[usize],
) -> Result<SemiconcavityProbe> {
    semiconcavity_probe_at(field, target, z_steps, ProbeLevel::Value)
}

/// [`semiconcavity_probe`] at a chosen level. Triples are used only when all
/// three nodes are in the grid, outside the target and reachable.
pub fn semiconcavity_probe_at(
    field: &ValueField,
    target: &TargetSet,
    z_steps: &[usize],
    level: ProbeLevel,
) -> Result<SemiconcavityProbe> {
    if z_steps.is_empty() || z_steps.contains(&0) {
        return Err(Error::InvalidArgument(
            "z_steps must be nonempty positive integers".into(),
        ));
    }
    let grid = field.grid();
    let dim = grid.dim();
    let h = grid.mesh();
    let mut c = [0.0; MAX_DIM];
    let usable: Vec<Option<f64>> = grid
        .nodes()
        .map(|x| {
            grid.coord_into(x, &mut c[..dim]);
            let v = field.value(x);
            if target.contains(&c[..dim]) || v >= 1.0 {
                return None;
            }
            Some(match level {
                ProbeLevel::Value => v,
                ProbeLevel::Time => kruzkov_inverse(v).expect("v in [0, 1)"),
            })
        })
        .collect();
    let mut out = SemiconcavityProbe {
        level,
        z_steps: z_steps.to_vec(),
        z_magnitudes: z_steps.iter().map(|&k| k as f64 * h).collect(),
        max_ratio: Vec::new(),
        samples: Vec::new(),
    };
    let mut delta = [0isize; MAX_DIM];
    for &k in z_steps {
        let z = k as f64 * h;
        let mut best = f64::NEG_INFINITY;
        let mut count = 0;
        for x in grid.nodes() {
            let Some(vx) = usable[x.index()] else {
                continue;
            };
            for axis in 0..dim {
                delta[..dim].fill(0);
                delta[axis] = k as isize;
                let plus = grid.offset(x, &delta[..dim]);
                delta[axis] = -(k as isize);
                let minus = grid.offset(x, &delta[..dim]);
                let (Some(p), Some(m)) = (plus, minus) else {
                    continue;
                };
                let (Some(vp), Some(vm)) = (usable[p.index()], usable[m.index()]) else {
                    continue;
                };
                best = best.max((vp - 2.0 * vx + vm) / (z * z));
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyRegion);
        }
        out.max_ratio.push(best);
        out.samples.push(count);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BruteForceValue {
    pub value: f64,
    /// No target-reaching sequence within the step budget, or the value was
    /// still improving at the last step.
    pub truncated: bool,
}

/// Largest grid handled by [`brute_force_discrete_value`].
pub const ORACLE_MAX_NODES: usize = 10_000;
/// Longest control sequence handled by [`brute_force_discrete_value`].
pub const ORACLE_MAX_STEPS: usize = 60;

/// Optimal cost over control sequences of at most `max_steps` axis moves
/// `+-h e_l`, whose transitions are deterministic. Computed by backward
/// dynamic programming over the grid nodes rather than by enumeration.
pub fn brute_force_discrete_value(
    instance: &BenchmarkInstance,
    h: f64,
    x0: &[f64],
    max_steps: usize,
) -> Result<BruteForceValue> {
    instance.speed.check_step(h)?;
    let grid = instance.grid(h)?;
    if grid.len() > ORACLE_MAX_NODES || max_steps > ORACLE_MAX_STEPS {
        return Err(Error::OracleBudget(format!(
            "{} nodes and {max_steps} steps exceed the limits of {ORACLE_MAX_NODES} and {ORACLE_MAX_STEPS}",
            grid.len()
        )));
    }
    let start = grid.nearest_node(x0).ok_or_else(|| {
        Error::InvalidArgument(format!("{x0:?} is outside the computational box"))
    })?;
    let dim = grid.dim();
    let n = grid.len();
    let mut c = [0.0; MAX_DIM];
    let mut on_target = vec![false; n];
    // Per node and move: the successor and the survival factor 1 - h/f.
    let mut moves: Vec<Vec<(Option<NodeId>, f64)>> = Vec::with_capacity(n);
    let mut delta = [0isize; MAX_DIM];
    let mut alpha = [0.0; MAX_DIM];
    for x in grid.nodes() {
        grid.coord_into(x, &mut c[..dim]);
        on_target[x.index()] = instance.target.contains(&c[..dim]);
        let mut m = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            for sign in [1isize, -1] {
                delta[..dim].fill(0);
                delta[axis] = sign;
                alpha[..dim].fill(0.0);
                alpha[axis] = sign as f64;
                let q = h / instance.speed.eval(&c[..dim], &alpha[..dim]);
                m.push((grid.offset(x, &delta[..dim]), 1.0 - q));
            }
        }
        moves.push(m);
    }
    if on_target[start.index()] {
        return Ok(BruteForceValue {
            value: 0.0,
            truncated: false,
        });
    }
    // Survival products: `1 - cost`, exactly 0 when no sequence reaches K.
    let mut best: Vec<f64> = on_target
        .iter()
        .map(|&t| if t { 1.0 } else { 0.0 })
        .collect();
    let mut previous = best[start.index()];
    for _ in 0..max_steps {
        previous = best[start.index()];
        let next: Vec<f64> = (0..n)
            .map(|i| {
                if on_target[i] {
                    return 1.0;
                }
                moves[i]
                    .iter()
                    .map(|&(y, keep)| y.map_or(0.0, |y| keep * best[y.index()]))
                    .fold(0.0, f64::max)
            })
            .collect();
        best = next;
    }
    let survival = best[start.index()];
    Ok(BruteForceValue {
        value: 1.0 - survival,
        truncated: survival == 0.0 || survival != previous,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexityPoint {
    /// Nodes per axis.
    pub size: usize,
    pub h: f64,
    /// Total nodes `M`.
    pub nodes: usize,
    pub reachable: usize,
    pub pops: u64,
    pub heap_ops: u64,
    pub objective_evals: u64,
    pub wall_time: f64,
}

impl ComplexityPoint {
    pub fn m_log_m(&self) -> f64 {
        let m = self.nodes as f64;
        m * m.ln()
    }
}

/// Fast-marching counters at each per-axis size; `h` is the box width over
/// `size - 1`, so the box must be a cube.
pub fn complexity_scaling(
    instance: &BenchmarkInstance,
    grid_sizes: &[usize],
    cfg: &SolverConfig,
) -> Result<Vec<ComplexityPoint>> {
    if grid_sizes.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "complexity scaling needs at least 3 sizes, got {}",
            grid_sizes.len()
        )));
    }
    if let Some(&bad) = grid_sizes.iter().find(|&&s| s < 2) {
        return Err(Error::InvalidGrid(format!(
            "per-axis size {bad} is below 2"
        )));
    }
    let widths: Vec<f64> = instance
        .upper
        .iter()
        .zip(&instance.lower)
        .map(|(u, l)| u - l)
        .collect();
    if widths
        .iter()
        .any(|w| (w - widths[0]).abs() > 1e-12 * widths[0])
    {
        return Err(Error::InvalidArgument(format!(
            "benchmark `{}` does not have a cubic box",
            instance.name
        )));
    }
    grid_sizes
        .par_iter()
        .map(|&size| {
            let h = widths[0] / (size - 1) as f64;
            let cfg = cfg.with_h(h);
            let disc = Discretization::new(instance, &cfg)?;
            let (field, report) = disc.fast_march();
            Ok(ComplexityPoint {
                size,
                h,
                nodes: field.grid().len(),
                reachable: field.reachable_count(),
                pops: report.pops,
                heap_ops: report.heap_ops,
                objective_evals: report.objective_evals,
                wall_time: report.wall_time,
            })
        })
        .collect()
}

/// For consecutive points: the observed heap-operation ratio and the
/// `M log M` ratio it is compared with.
pub fn complexity_ratios(points: &[ComplexityPoint]) -> Vec<(f64, f64)> {
    points
        .windows(2)
        .map(|w| {
            (
                w[1].heap_ops as f64 / w[0].heap_ops as f64,
                w[1].m_log_m() / w[0].m_log_m(),
            )
        })
        .collect()
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `header` and `rows` as CSV with a trailing newline.
pub fn write_csv<W: Write>(
    out: &mut W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_convergence_csv<W: Write>(out: &mut W, record: &ConvergenceRecord) -> io::Result<()> {
    let rows = record
        .h_values
        .iter()
        .zip(&record.sup_errors)
        .map(|(h, e)| vec![format_float(*h), format_float(*e)]);
    write_csv(out, &["h", "sup_error"], rows)
}

pub fn write_semiconcavity_csv<W: Write>(
    out: &mut W,
    probe: &SemiconcavityProbe,
) -> io::Result<()> {
    let rows = probe
        .z_magnitudes
        .iter()
        .zip(&probe.max_ratio)
        .map(|(z, r)| vec![format_float(*z), format_float(*r)]);
    write_csv(out, &["z", "max_ratio"], rows)
}

pub fn write_complexity_csv<W: Write>(out: &mut W, points: &[ComplexityPoint]) -> io::Result<()> {
    let rows = points.iter().map(|p| {
        vec![
            p.size.to_string(),
            p.nodes.to_string(),
            p.reachable.to_string(),
            p.pops.to_string(),
            p.heap_ops.to_string(),
            p.objective_evals.to_string(),
        ]
    });
    write_csv(
        out,
        &[
            "size",
            "nodes",
            "reachable",
            "pops",
            "heap_ops",
            "objective_evals",
        ],
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::problem::benchmark;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn far_target() -> TargetSet {
        TargetSet::ball(vec![100.0, 100.0], 0.0)
    }

    fn sampled(g: &Grid, f: impl Fn(&[f64]) -> f64) -> ValueField {
        let v = g.nodes().map(|x| f(&g.coord(x))).collect();
        ValueField::from_values(g.clone(), v).unwrap()
    }

    #[test]
    fn exact_field_has_zero_error() {
        let inst = benchmark("unit-disk").unwrap();
        let g = inst.grid(0.1).unwrap();
        let field = sampled(&g, |x| inst.value_at(x).unwrap());
        assert_eq!(interior_sup_error(&field, &inst, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn halfline_error_at_midpoint() {
        let inst = benchmark("halfline-1d").unwrap();
        let (field, _) = crate::solve::fast_march(&inst, &SolverConfig::new(0.1)).unwrap();
        // Only x = 0.5 keeps a clearance of 0.5 in [0, 1].
        let e = interior_sup_error(&field, &inst, 0.5).unwrap();
        assert_abs_diff_eq!(e, 0.40951 - (1.0 - (-0.5f64).exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(e, 0.016_040_7, epsilon = 1e-7);
        assert_eq!(
            interior_sup_error(&field, &inst, 0.6),
            Err(Error::EmptyRegion)
        );
        assert!(interior_sup_error(&field, &inst, 0.1).is_err());
    }

    #[test]
    fn slab_has_no_analytic_error() {
        let inst = benchmark("disk-with-slab-obstacle").unwrap();
        let g = inst.grid(0.1).unwrap();
        let field = sampled(&g, |_| 0.5);
        assert!(matches!(
            interior_sup_error(&field, &inst, 0.2),
            Err(Error::NoAnalyticSolution(_))
        ));
    }

    #[test]
    fn interior_error_is_monotone_in_margin() {
        let inst = benchmark("unit-disk").unwrap();
        let (field, _) = crate::solve::fast_march(&inst, &SolverConfig::new(0.1)).unwrap();
        let mut last = f64::INFINITY;
        for k in 2..=7 {
            let e = interior_sup_error(&field, &inst, k as f64 * 0.1).unwrap();
            assert!(e <= last);
            last = e;
        }
    }

    #[test]
    fn synthetic_fits() {
        let h = [0.05, 0.025, 0.0125, 0.00625];
        for (p, c) in [(0.5, 0.7), (1.0, 2.0), (2.0, 0.01)] {
            let e: Vec<f64> = h.iter().map(|x: &f64| c * x.powf(p)).collect();
            let (fp, fc) = fit_power_law(&h, &e).unwrap();
            assert_abs_diff_eq!(fp, p, epsilon = 1e-10);
            assert_abs_diff_eq!(fc, c, epsilon = 1e-10 * c.max(1.0));
        }
        assert!(fit_power_law(&[0.1, 0.05], &[0.0, 1.0]).is_err());
        assert!(fit_power_law(&[0.1], &[1.0]).is_err());
    }

    #[test]
    fn sweep_preconditions() {
        let inst = benchmark("unit-disk").unwrap();
        let cfg = SolverConfig::new(0.1);
        assert!(convergence_sweep(&inst, &[0.1, 0.05], 0.5, &cfg).is_err());
        assert!(convergence_sweep(&inst, &[0.1, 0.05, 0.05], 0.5, &cfg).is_err());
        match convergence_sweep(&inst, &[2.0, 0.1, 0.05], 0.5, &cfg) {
            Err(Error::SweepFailed { h, .. }) => assert_eq!(h, 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn smooth_speed_sweep_is_first_order() {
        let inst = benchmark("smooth-speed-1d").unwrap();
        let h = [0.1, 0.05, 0.025, 0.0125];
        let rec = convergence_sweep(&inst, &h, 0.25, &SolverConfig::new(0.1)).unwrap();
        assert!(rec.fitted_order > 0.8, "{rec:?}");
        assert_eq!(rec.reports.len(), 4);
    }

    #[test]
    fn probe_of_affine_and_quadratic_fields() {
        let g = Grid::new(0.05, vec![-1.0, -1.0], vec![41, 41]).unwrap();
        let affine = sampled(&g, |x| 0.3 + 0.1 * x[0] - 0.2 * x[1]);
        let p = semiconcavity_probe(&affine, &far_target(), &[1, 2, 4]).unwrap();
        assert!(p.max_ratio.iter().all(|&r| r <= 1e-10), "{p:?}");

        let quad = sampled(&g, |x| 0.1 * (x[0] * x[0] + x[1] * x[1]));
        let p = semiconcavity_probe(&quad, &far_target(), &[1, 2, 4]).unwrap();
        for r in &p.max_ratio {
            assert_abs_diff_eq!(*r, 0.2, epsilon = 1e-9);
        }
        assert_eq!(p.z_steps, vec![1, 2, 4]);
        assert_abs_diff_eq!(p.z_magnitudes[2], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn probe_skips_target_and_unreachable_nodes() {
        let g = Grid::new(0.1, vec![0.0], vec![11]).unwrap();
        // A kink at x = 0.5 that lies inside the target is not seen.
        let field = sampled(&g, |x| {
            if x[0] < 0.7 {
                0.5 * (x[0] - 0.5).abs()
            } else {
                1.0
            }
        });
        let target = TargetSet::ball(vec![0.5], 0.05);
        let p = semiconcavity_probe(&field, &target, &[1]).unwrap();
        assert!(p.max_ratio[0].abs() <= 1e-12, "{p:?}");
        assert!(semiconcavity_probe(&field, &target, &[0]).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let inst = benchmark("halfline-1d").unwrap();
        let v = brute_force_discrete_value(&inst, 0.1, &[0.5], 20).unwrap();
        assert_abs_diff_eq!(v.value, 0.40951, epsilon = 1e-12);
        assert!(!v.truncated);
        assert_eq!(
            brute_force_discrete_value(&inst, 0.1, &[0.0], 20)
                .unwrap()
                .value,
            0.0
        );
        let short = brute_force_discrete_value(&inst, 0.1, &[0.8], 5).unwrap();
        assert_eq!(short.value, 1.0);
        assert!(short.truncated);
        assert!(matches!(
            brute_force_discrete_value(&inst, 0.1, &[0.5], 61),
            Err(Error::OracleBudget(_))
        ));
        let big = benchmark("unit-disk").unwrap();
        assert!(matches!(
            brute_force_discrete_value(&big, 0.01, &[0.5, 0.5], 10),
            Err(Error::OracleBudget(_))
        ));
    }

    /// Enumerates every sequence of left/right moves of length at most 12
    /// and keeps the cheapest one that reaches the target.
    fn enumerate_halfline(start: i32, q: f64) -> f64 {
        let mut best = 1.0;
        for len in 1..=12u32 {
            for bits in 0..1u32 << len {
                let mut pos = start;
                let mut survival = 1.0;
                let mut reached = false;
                for k in 0..len {
                    pos += if bits >> k & 1 == 1 { -1 } else { 1 };
                    survival *= 1.0 - q;
                    if !(0..=10).contains(&pos) && pos > 0 {
                        break;
                    }
                    if pos <= 0 {
                        reached = true;
                        break;
                    }
                }
                if reached {
                    best = f64::min(best, 1.0 - survival);
                }
            }
        }
        best
    }

    #[test]
    fn brute_force_matches_enumeration() {
        let inst = benchmark("halfline-1d").unwrap();
        for n in 0..=10 {
            let oracle = if n == 0 {
                0.0
            } else {
                enumerate_halfline(n, 0.1)
            };
            let v = brute_force_discrete_value(&inst, 0.1, &[n as f64 * 0.1], 12).unwrap();
            assert_abs_diff_eq!(v.value, oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn brute_force_dominates_fast_marching_in_one_dimension() {
        for (name, h) in [("halfline-1d", 0.05), ("smooth-speed-1d", 0.05)] {
            let inst = benchmark(name).unwrap();
            let (field, _) = crate::solve::fast_march(&inst, &SolverConfig::new(h)).unwrap();
            for x in field.grid().nodes() {
                let c = field.grid().coord(x);
                let b = brute_force_discrete_value(&inst, h, &c, 60).unwrap();
                assert!(b.value >= field.value(x) - 1e-9, "{name} at {c:?}");
            }
        }
    }

    #[test]
    fn complexity_counts() {
        let inst = benchmark("unit-disk").unwrap();
        let pts = complexity_scaling(&inst, &[9, 17, 33], &SolverConfig::new(0.1)).unwrap();
        for p in &pts {
            assert_eq!(p.pops as usize, p.reachable);
            assert_eq!(p.nodes, p.size * p.size);
        }
        assert_eq!(complexity_ratios(&pts).len(), 2);
        assert!(complexity_scaling(&inst, &[9, 17], &SolverConfig::new(0.1)).is_err());
        assert!(complexity_scaling(&inst, &[1, 9, 17], &SolverConfig::new(0.1)).is_err());
    }

    #[test]
    fn csv_layout() {
        let rec = ConvergenceRecord {
            h_values: vec![0.1, 0.05],
            sup_errors: vec![0.02, 0.01],
            fitted_order: 1.0,
            fitted_constant: 0.2,
            margin: 0.5,
            reports: Vec::new(),
        };
        let mut buf = Vec::new();
        write_convergence_csv(&mut buf, &rec).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("h,sup_error\n"));
        assert!(s.ends_with('\n'));
        let first: Vec<f64> = s
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(first, vec![0.1, 0.02]);
        assert!(rec.within_bound(1.0));
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = format_float(x);
            prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        }

        #[test]
        fn fit_recovers_random_lines(p in 0.1f64..3.0, c in 0.01f64..10.0) {
            let h = [0.1, 0.05, 0.025];
            let e: Vec<f64> = h.iter().map(|x: &f64| c * x.powf(p)).collect();
            let (fp, fc) = fit_power_law(&h, &e).unwrap();
            prop_assert!((fp - p).abs() <= 1e-9);
            prop_assert!((fc - c).abs() <= 1e-8 * c);
        }
    }
}
