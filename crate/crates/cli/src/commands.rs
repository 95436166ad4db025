use eikon::analysis::{
    complexity_ratios, write_complexity_csv, write_convergence_csv, write_semiconcavity_csv,
    ProbeLevel,
};
use eikon::{
    benchmark, check_transition_moments, complexity_scaling, convergence_sweep, monte_carlo_value,
    semiconcavity_probe_at, BenchmarkInstance, ComplexityPoint, Discretization, MinimizerConfig,
    MinimizerMethod, MomentCheck, SolveReport, SolverConfig,
};
use serde::Serialize;

use crate::args::{
    Cli, Command, Common, ComplexityArgs, ConvergeArgs, MdpArgs, MinimizerArg, SemiconcavityArgs,
    SolveArgs,
};
use crate::output::{write_values_csv, OutDir, RunManifest, SCHEMA_VERSION};
use crate::Failure;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::SolveConstrained(a) => solve_constrained(a),
        Command::Converge(a) => converge(a),
        Command::Complexity(a) => complexity(a),
        Command::Semiconcavity(a) => semiconcavity(a),
        Command::MdpCheck(a) => mdp_check(a),
    }
}

fn minimizer(c: &Common) -> MinimizerConfig {
    MinimizerConfig {
        method: match c.minimizer {
            None => MinimizerMethod::Auto,
            Some(MinimizerArg::Nested) => MinimizerMethod::Nested,
            Some(MinimizerArg::Multistart) => MinimizerMethod::Multistart,
        },
        refine_tolerance: c.angle_tol,
        ..MinimizerConfig::default()
    }
}

fn setup(c: &Common, h: f64) -> Result<(BenchmarkInstance, SolverConfig), Failure> {
    let inst = benchmark(&c.benchmark)?;
    let mut cfg = SolverConfig::new(h);
    cfg.minimizer = minimizer(c);
    Ok((inst, cfg))
}

fn manifest(command: &str, c: &Common) -> RunManifest {
    RunManifest {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        benchmark: c.benchmark.clone(),
        h: None,
        h_list: None,
        margin: None,
        sizes: None,
        z_steps: None,
        seed: None,
        samples: None,
        minimizer: minimizer(c),
        outputs: Vec::new(),
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    schema_version: u32,
    command: &'a str,
    benchmark: &'a str,
    h: f64,
    nodes: usize,
    reachable: usize,
    report: &'a SolveReport,
}

fn solve(a: &SolveArgs) -> Result<(), Failure> {
    let (inst, cfg) = setup(&a.common, a.h)?;
    let disc = Discretization::new(&inst, &cfg)?;
    let (field, report) = disc.fast_march();
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.with("values.csv", |w| write_values_csv(w, &field))?;
    out.json(
        "report.json",
        &SolveSummary {
            schema_version: SCHEMA_VERSION,
            command: "solve",
            benchmark: &inst.name,
            h: a.h,
            nodes: field.grid().len(),
            reachable: field.reachable_count(),
            report: &report,
        },
    )?;
    println!(
        "solved {} at h = {}: {} nodes, {} reachable, {} heap operations",
        inst.name,
        a.h,
        field.grid().len(),
        field.reachable_count(),
        report.heap_ops
    );
    out.finish(RunManifest {
        h: Some(a.h),
        ..manifest("solve", &a.common)
    })
}

#[derive(Serialize)]
struct ConstrainedSummary<'a> {
    schema_version: u32,
    command: &'a str,
    benchmark: &'a str,
    h: f64,
    nodes: usize,
    reachable: usize,
    report: &'a SolveReport,
    unconstrained_report: &'a SolveReport,
    /// Largest `|z_O - z|` at the benchmark's probe points.
    probe_gap: Option<f64>,
    /// Largest `z - z_O` over the grid; positive means dominance fails.
    dominance_violation: f64,
    blocked_nodes: usize,
    blocked_below_one: usize,
    passed: bool,
}

fn solve_constrained(a: &SolveArgs) -> Result<(), Failure> {
    let (inst, cfg) = setup(&a.common, a.h)?;
    let cons_cfg = cfg.clone().constrained();
    let cons = Discretization::new(&inst, &cons_cfg)?;
    let free = Discretization::new(&inst, &cfg)?;
    let (zo, report) = cons.fast_march();
    let (z, free_report) = free.fast_march();
    let grid = zo.grid();
    let probe_gap = (!inst.probes.is_empty()).then(|| {
        inst.probes
            .iter()
            .filter_map(|p| grid.nearest_node(p))
            .map(|x| (zo.value(x) - z.value(x)).abs())
            .fold(0.0, f64::max)
    });
    let dominance_violation = grid
        .nodes()
        .map(|x| z.value(x) - zo.value(x))
        .fold(0.0, f64::max);
    let (mut blocked, mut blocked_below_one) = (0, 0);
    if let Some(unreachable) = &inst.unreachable {
        for x in grid.nodes().filter(|&x| unreachable(&grid.coord(x))) {
            blocked += 1;
            blocked_below_one += usize::from(zo.value(x) < 1.0);
        }
    }
    let passed =
        probe_gap.is_none_or(|g| g <= 1e-9) && dominance_violation <= 0.0 && blocked_below_one == 0;

    let mut out = OutDir::create(&a.common.out_dir)?;
    out.with("values.csv", |w| write_values_csv(w, &zo))?;
    out.json(
        "report.json",
        &ConstrainedSummary {
            schema_version: SCHEMA_VERSION,
            command: "solve-constrained",
            benchmark: &inst.name,
            h: a.h,
            nodes: grid.len(),
            reachable: zo.reachable_count(),
            report: &report,
            unconstrained_report: &free_report,
            probe_gap,
            dominance_violation,
            blocked_nodes: blocked,
            blocked_below_one,
            passed,
        },
    )?;
    out.finish(RunManifest {
        h: Some(a.h),
        ..manifest("solve-constrained", &a.common)
    })?;
    println!(
        "constrained {} at h = {}: probe gap {:?}, dominance violation {dominance_violation:e}, {blocked_below_one}/{blocked} blocked nodes below 1",
        inst.name, a.h, probe_gap
    );
    if passed {
        Ok(())
    } else {
        Err(Failure::Runtime(
            "constrained solution is inconsistent with the unconstrained one".into(),
        ))
    }
}

#[derive(Serialize)]
struct ConvergenceSummary<'a> {
    schema_version: u32,
    benchmark: &'a str,
    margin: f64,
    h_values: &'a [f64],
    sup_errors: &'a [f64],
    fitted_order: f64,
    fitted_constant: f64,
    min_order: f64,
    passed: bool,
}

fn converge(a: &ConvergeArgs) -> Result<(), Failure> {
    let list = &a.h_list;
    if list.len() < 3 {
        return Err(Failure::Config(format!(
            "--h-list needs at least 3 steps, got {}",
            list.len()
        )));
    }
    let margin = a.margin.unwrap_or(10.0 * list[0]);
    let (inst, cfg) = setup(&a.common, list[0])?;
    let rec = convergence_sweep(&inst, list, margin, &cfg)?;
    let passed = rec.fitted_order >= a.min_order;
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.with("convergence.csv", |w| write_convergence_csv(w, &rec))?;
    out.json(
        "convergence.json",
        &ConvergenceSummary {
            schema_version: SCHEMA_VERSION,
            benchmark: &inst.name,
            margin,
            h_values: &rec.h_values,
            sup_errors: &rec.sup_errors,
            fitted_order: rec.fitted_order,
            fitted_constant: rec.fitted_constant,
            min_order: a.min_order,
            passed,
        },
    )?;
    out.finish(RunManifest {
        h_list: Some(list.clone()),
        margin: Some(margin),
        ..manifest("converge", &a.common)
    })?;
    println!(
        "{}: fitted order {:.4}, constant {:.4}",
        inst.name, rec.fitted_order, rec.fitted_constant
    );
    if passed {
        Ok(())
    } else {
        Err(Failure::Gate(format!(
            "fitted order {:.4} is below --min-order {}",
            rec.fitted_order, a.min_order
        )))
    }
}

#[derive(Serialize)]
struct RatioCheck {
    observed: f64,
    predicted: f64,
    passed: bool,
}

#[derive(Serialize)]
struct ComplexitySummary<'a> {
    schema_version: u32,
    benchmark: &'a str,
    points: &'a [ComplexityPoint],
    pops_match_reachable: bool,
    /// Consecutive heap-operation ratios against `1.5 (M2 log M2)/(M1 log M1)`.
    ratios: Vec<RatioCheck>,
    passed: bool,
}

fn complexity(a: &ComplexityArgs) -> Result<(), Failure> {
    let (inst, cfg) = setup(&a.common, 0.1)?;
    let points = complexity_scaling(&inst, &a.sizes, &cfg)?;
    let pops_match_reachable = points.iter().all(|p| p.pops as usize == p.reachable);
    let ratios: Vec<RatioCheck> = complexity_ratios(&points)
        .into_iter()
        .map(|(observed, predicted)| RatioCheck {
            observed,
            predicted,
            passed: observed <= 1.5 * predicted,
        })
        .collect();
    let passed = pops_match_reachable && ratios.iter().all(|r| r.passed);
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.with("complexity.csv", |w| write_complexity_csv(w, &points))?;
    out.json(
        "complexity.json",
        &ComplexitySummary {
            schema_version: SCHEMA_VERSION,
            benchmark: &inst.name,
            points: &points,
            pops_match_reachable,
            ratios,
            passed,
        },
    )?;
    out.finish(RunManifest {
        sizes: Some(a.sizes.clone()),
        ..manifest("complexity", &a.common)
    })?;
    for p in &points {
        println!(
            "size {}: {} nodes, {} pops, {} heap operations",
            p.size, p.nodes, p.pops, p.heap_ops
        );
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Gate(
            "heap operations grow faster than 1.5 M log M, or pops differ from the reachable count"
                .into(),
        ))
    }
}

#[derive(Serialize)]
struct SemiconcavitySummary<'a> {
    schema_version: u32,
    benchmark: &'a str,
    h: f64,
    level: ProbeLevel,
    z_magnitudes: &'a [f64],
    max_ratio: &'a [f64],
    spread: f64,
    max_spread: Option<f64>,
}

fn semiconcavity(a: &SemiconcavityArgs) -> Result<(), Failure> {
    let (inst, cfg) = setup(&a.common, a.h)?;
    let disc = Discretization::new(&inst, &cfg)?;
    let (field, _) = disc.fast_march();
    let level = if a.time_level {
        ProbeLevel::Time
    } else {
        ProbeLevel::Value
    };
    let probe = semiconcavity_probe_at(&field, &inst.target, &a.z_steps, level)?;
    let spread = probe.spread();
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.with("semiconcavity.csv", |w| write_semiconcavity_csv(w, &probe))?;
    out.json(
        "semiconcavity.json",
        &SemiconcavitySummary {
            schema_version: SCHEMA_VERSION,
            benchmark: &inst.name,
            h: a.h,
            level,
            z_magnitudes: &probe.z_magnitudes,
            max_ratio: &probe.max_ratio,
            spread,
            max_spread: a.max_spread,
        },
    )?;
    out.finish(RunManifest {
        h: Some(a.h),
        z_steps: Some(a.z_steps.clone()),
        ..manifest("semiconcavity", &a.common)
    })?;
    for (z, r) in probe.z_magnitudes.iter().zip(&probe.max_ratio) {
        println!("z = {z}: max ratio {r:.6}");
    }
    match a.max_spread {
        Some(limit) if !(spread <= limit) => Err(Failure::Gate(format!(
            "max/min of the per-offset maxima is {spread:.4}, above --max-spread {limit}"
        ))),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct ProbeCheck {
    point: Vec<f64>,
    node: usize,
    z: f64,
    mean: f64,
    std_error: f64,
    underpowered: bool,
    truncated: usize,
    passed: bool,
}

#[derive(Serialize)]
struct MdpSummary<'a> {
    schema_version: u32,
    benchmark: &'a str,
    h: f64,
    seed: u64,
    samples: usize,
    moments: MomentCheck,
    moments_passed: bool,
    probes: Vec<ProbeCheck>,
    warnings: Vec<String>,
    passed: bool,
}

/// Draws in the transition-moment battery.
const MOMENT_DRAWS: usize = 1000;

fn mdp_check(a: &MdpArgs) -> Result<(), Failure> {
    if a.samples == 0 {
        return Err(Failure::Config("--samples must be positive".into()));
    }
    let (inst, cfg) = setup(&a.common, a.h)?;
    let disc = Discretization::new(&inst, &cfg)?;
    let (field, _) = disc.fast_march();
    let moments = check_transition_moments(disc.grid(), MOMENT_DRAWS, a.seed)?;
    let moments_passed = moments.passed();
    let mut warnings = Vec::new();
    let mut probes = Vec::new();
    for (i, p) in inst.probes.iter().enumerate() {
        let x = disc
            .grid()
            .nearest_node(p)
            .ok_or_else(|| Failure::Config(format!("probe {p:?} is outside the grid")))?;
        let est = monte_carlo_value(&disc, &field, x, a.samples, a.seed.wrapping_add(i as u64))?;
        let z = field.value(x);
        probes.push(ProbeCheck {
            point: disc.grid().coord(x),
            node: x.index(),
            z,
            mean: est.mean,
            std_error: est.std_error,
            underpowered: est.underpowered,
            truncated: est.truncated,
            passed: (est.mean - z).abs() <= 3.0 * est.std_error,
        });
    }
    if probes.iter().any(|p| p.underpowered) {
        warnings.push(format!(
            "underpowered: {} rollouts per probe is below {}",
            a.samples,
            eikon::mdp::MIN_SAMPLES
        ));
    }
    let passed = moments_passed && probes.iter().all(|p| p.passed);
    let failed: Vec<String> = probes
        .iter()
        .filter(|p| !p.passed)
        .map(|p| format!("node {} at {:?}", p.node, p.point))
        .collect();

    let mut out = OutDir::create(&a.common.out_dir)?;
    out.json(
        "mdp.json",
        &MdpSummary {
            schema_version: SCHEMA_VERSION,
            benchmark: &inst.name,
            h: a.h,
            seed: a.seed,
            samples: a.samples,
            moments,
            moments_passed,
            probes,
            warnings,
            passed,
        },
    )?;
    out.finish(RunManifest {
        h: Some(a.h),
        seed: Some(a.seed),
        samples: Some(a.samples),
        ..manifest("mdp-check", &a.common)
    })?;
    if !moments_passed {
        return Err(Failure::Runtime(
            "transition moment invariants failed".into(),
        ));
    }
    if !failed.is_empty() {
        return Err(Failure::Runtime(format!(
            "Monte-Carlo mean outside 3 standard errors at {}",
            failed.join(", ")
        )));
    }
    println!("{}: all checks passed", inst.name);
    Ok(())
}
