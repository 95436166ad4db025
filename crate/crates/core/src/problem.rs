//! Problem data: speed fields, target sets, constraint domains, the
//! Kruzkov change of variable and the registry of benchmark instances.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Shared closure over points of `R^d`.
pub type PointFn<T> = Arc<dyn Fn(&[f64]) -> T + Send + Sync>;

type SpeedFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// `v = 1 - exp(-T)`. Accepts `T = +inf` (gives exactly 1).
pub fn kruzkov(time: f64) -> Result<f64> {
    if time.is_nan() || time < 0.0 {
        return Err(Error::Domain {
            op: "kruzkov",
            what: "T",
            value: time,
        });
    }
    Ok(-(-time).exp_m1())
}

/// `T = -log(1 - v)`; values `v >= 1` map to `+inf`.
pub fn kruzkov_inverse(value: f64) -> Result<f64> {
    if value.is_nan() || value < 0.0 {
        return Err(Error::Domain {
            op: "kruzkov_inverse",
            what: "v",
            value,
        });
    }
    if value >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-(-value).ln_1p())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedKind {
    Isotropic,
    Anisotropic,
}

/// Speed `f(x, alpha)` with bounds `0 < f_min <= f <= f_max`.
#[derive(Clone)]
pub struct SpeedField {
    eval: SpeedFn,
    f_min: f64,
    f_max: f64,
    kind: SpeedKind,
}

impl SpeedField {
    fn checked(f_min: f64, f_max: f64, kind: SpeedKind, eval: SpeedFn) -> Result<Self> {
        if !(f_min > 0.0 && f_max >= f_min && f_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "speed bounds must satisfy 0 < f_min <= f_max < inf, got [{f_min}, {f_max}]"
            )));
        }
        Ok(SpeedField {
            eval,
            f_min,
            f_max,
            kind,
        })
    }

    pub fn constant(speed: f64) -> Result<Self> {
        Self::checked(
            speed,
            speed,
            SpeedKind::Isotropic,
            Arc::new(move |_, _| speed),
        )
    }

    pub fn isotropic<F>(f_min: f64, f_max: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::checked(
            f_min,
            f_max,
            SpeedKind::Isotropic,
            Arc::new(move |x, _| f(x)),
        )
    }

    pub fn anisotropic<F>(f_min: f64, f_max: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::checked(f_min, f_max, SpeedKind::Anisotropic, Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: &[f64], alpha: &[f64]) -> f64 {
        (self.eval)(x, alpha)
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn kind(&self) -> SpeedKind {
        self.kind
    }

    pub fn is_isotropic(&self) -> bool {
        self.kind == SpeedKind::Isotropic
    }

    /// Supremum of admissible mesh steps, `min(1/f_max, f_min)`.
    pub fn step_bound(&self) -> f64 {
        (1.0 / self.f_max).min(self.f_min)
    }

    /// Requires `0 < h < min(1/f_max, f_min)` so that the discount factor
    /// `1 - h/f` lies in `(0, 1)`.
    pub fn check_step(&self, h: f64) -> Result<()> {
        let bound = self.step_bound();
        if h > 0.0 && h < bound {
            Ok(())
        } else {
            Err(Error::StepTooLarge { h, bound })
        }
    }
}

impl fmt::Debug for SpeedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpeedField")
            .field("f_min", &self.f_min)
            .field("f_max", &self.f_max)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

/// Target set `K`, given by membership and its Euclidean distance function.
#[derive(Clone)]
pub struct TargetSet {
    contains: PointFn<bool>,
    distance: PointFn<f64>,
}

impl TargetSet {
    pub fn new(contains: PointFn<bool>, distance: PointFn<f64>) -> Self {
        TargetSet { contains, distance }
    }

    /// Closed Euclidean ball.
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        let c = center.clone();
        TargetSet {
            contains: Arc::new(move |x| norm_dist(x, &c) <= radius),
            distance: Arc::new(move |x| (norm_dist(x, &center) - radius).max(0.0)),
        }
    }

    /// Half-space `{x : x[axis] <= threshold}`.
    pub fn half_space_below(axis: usize, threshold: f64) -> Self {
        TargetSet {
            contains: Arc::new(move |x| x[axis] <= threshold),
            distance: Arc::new(move |x| (x[axis] - threshold).max(0.0)),
        }
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        (self.contains)(x)
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        (self.distance)(x)
    }
}

impl fmt::Debug for TargetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetSet").finish_non_exhaustive()
    }
}

/// State-constraint domain `O`.
#[derive(Clone)]
pub struct ConstraintDomain {
    contains: PointFn<bool>,
    boundary_distance: PointFn<f64>,
}

impl ConstraintDomain {
    pub fn new(contains: PointFn<bool>, boundary_distance: PointFn<f64>) -> Self {
        ConstraintDomain {
            contains,
            boundary_distance,
        }
    }

    /// Complement of the closed axis-aligned box `[lo, hi]`.
    pub fn excluding_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let (lo2, hi2) = (lo.clone(), hi.clone());
        ConstraintDomain {
            contains: Arc::new(move |x| !in_box(x, &lo2, &hi2)),
            boundary_distance: Arc::new(move |x| box_boundary_distance(x, &lo, &hi)),
        }
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        (self.contains)(x)
    }

    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        (self.boundary_distance)(x)
    }
}

impl fmt::Debug for ConstraintDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintDomain").finish_non_exhaustive()
    }
}

fn norm_dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .zip(c)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn in_box(x: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    x.iter()
        .zip(lo.iter().zip(hi))
        .all(|(&v, (&a, &b))| v >= a && v <= b)
}

fn box_boundary_distance(x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    if in_box(x, lo, hi) {
        x.iter()
            .zip(lo.iter().zip(hi))
            .map(|(&v, (&a, &b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
    } else {
        x.iter()
            .zip(lo.iter().zip(hi))
            .map(|(&v, (&a, &b))| {
                let d = (a - v).max(0.0).max(v - b);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A named, fully specified problem with its default computational box and
/// (where known) its exact solution.
#[derive(Clone)]
pub struct BenchmarkInstance {
    pub name: String,
    pub dim: usize,
    pub speed: SpeedField,
    pub target: TargetSet,
    pub domain: Option<ConstraintDomain>,
    /// Exact Kruzkov value `v`.
    pub analytic_value: Option<PointFn<f64>>,
    /// Exact minimal time `T`.
    pub analytic_time: Option<PointFn<f64>>,
    /// Computational box.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Documented probe points.
    pub probes: Vec<Vec<f64>>,
    /// Points known to be cut off from the target by the constraint.
    pub unreachable: Option<PointFn<bool>>,
}

impl BenchmarkInstance {
    pub fn with_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != self.dim || upper.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "box corners must have {} entries",
                self.dim
            )));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn grid(&self, h: f64) -> Result<Grid> {
        Grid::covering(&self.lower, &self.upper, h)
    }

    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.analytic_value.as_ref().map(|v| v(x))
    }

    pub fn time_at(&self, x: &[f64]) -> Option<f64> {
        self.analytic_time.as_ref().map(|t| t(x))
    }

    /// Diameter of the computational box.
    pub fn diameter(&self) -> f64 {
        norm_dist(&self.lower, &self.upper)
    }
}

impl fmt::Debug for BenchmarkInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkInstance")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("speed", &self.speed)
            .field("constrained", &self.domain.is_some())
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

/// Registered benchmark names.
pub const BENCHMARKS: [&str; 4] = [
    "unit-disk",
    "halfline-1d",
    "smooth-speed-1d",
    "disk-with-slab-obstacle",
];

/// Radius of the target disk of `unit-disk`.
pub const DISK_RADIUS: f64 = 0.25;

/// The excluded box of `disk-with-slab-obstacle`: a wall `x_1 in [0.61, 0.69]`
/// spanning the whole computational box vertically. Its faces lie between
/// nodes for every mesh step of the form `1/(20 k)`.
pub const SLAB_LOWER: [f64; 2] = [0.61, -2.0];
pub const SLAB_UPPER: [f64; 2] = [0.69, 2.0];

/// Probe set of `disk-with-slab-obstacle`. Every straight ray from these
/// points to the disk stays in `x_1 <= 0.5`, away from the slab.
pub const SLAB_PROBES: [[f64; 2]; 8] = [
    [0.5, 0.0],
    [0.4, 0.3],
    [0.5, -0.5],
    [0.0, 0.75],
    [-0.5, 0.5],
    [-0.75, 0.0],
    [0.3, -0.8],
    [-0.6, -0.6],
];

/// Probe set of `unit-disk`: ten nodes of every grid with step `1/(20 k)`.
pub const DISK_PROBES: [[f64; 2]; 10] = [
    [0.75, 0.0],
    [0.5, 0.5],
    [-0.6, 0.3],
    [0.35, -0.7],
    [0.0, 0.9],
    [-0.8, -0.4],
    [0.3, 0.3],
    [-0.45, 0.0],
    [0.65, -0.55],
    [-0.2, 0.6],
];

/// Look up a benchmark by name.
pub fn benchmark(name: &str) -> Result<BenchmarkInstance> {
    match name {
        "unit-disk" => Ok(unit_disk()),
        "halfline-1d" => Ok(halfline()),
        "smooth-speed-1d" => Ok(smooth_speed()),
        "disk-with-slab-obstacle" => Ok(disk_with_slab()),
        _ => Err(Error::UnknownBenchmark {
            name: name.to_string(),
            available: BENCHMARKS.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

fn with_value(time: PointFn<f64>) -> (Option<PointFn<f64>>, Option<PointFn<f64>>) {
    let t = time.clone();
    let value: PointFn<f64> = Arc::new(move |x| -(-t(x)).exp_m1());
    (Some(value), Some(time))
}

fn unit_disk() -> BenchmarkInstance {
    let time: PointFn<f64> =
        Arc::new(|x| (x.iter().map(|v| v * v).sum::<f64>().sqrt() - DISK_RADIUS).max(0.0));
    let (analytic_value, analytic_time) = with_value(time);
    BenchmarkInstance {
        name: "unit-disk".into(),
        dim: 2,
        speed: SpeedField::constant(1.0).expect("valid constant speed"),
        target: TargetSet::ball(vec![0.0, 0.0], DISK_RADIUS),
        domain: None,
        analytic_value,
        analytic_time,
        lower: vec![-1.0, -1.0],
        upper: vec![1.0, 1.0],
        probes: DISK_PROBES.iter().map(|p| p.to_vec()).collect(),
        unreachable: None,
    }
}

fn halfline() -> BenchmarkInstance {
    let time: PointFn<f64> = Arc::new(|x| x[0].max(0.0));
    let (analytic_value, analytic_time) = with_value(time);
    BenchmarkInstance {
        name: "halfline-1d".into(),
        dim: 1,
        speed: SpeedField::constant(1.0).expect("valid constant speed"),
        target: TargetSet::half_space_below(0, 0.0),
        domain: None,
        analytic_value,
        analytic_time,
        lower: vec![0.0],
        upper: vec![1.0],
        probes: (1..=10).map(|k| vec![k as f64 / 10.0]).collect(),
        unreachable: None,
    }
}

/// Speed of `smooth-speed-1d`.
pub fn smooth_speed_1d(x: f64) -> f64 {
    2.0 + x.cos()
}

/// Quadrature tolerance for the travel time of `smooth-speed-1d`.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Minimal time `T(x) = int_0^x dt / (2 + cos t)` for `smooth-speed-1d`,
/// by adaptive Simpson quadrature. Results are memoised per abscissa.
pub fn smooth_speed_time(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&t) = cache.lock().expect("cache poisoned").get(&x.to_bits()) {
        return t;
    }
    let t = adaptive_simpson(&|t| 1.0 / smooth_speed_1d(t), 0.0, x, QUADRATURE_TOLERANCE);
    cache.lock().expect("cache poisoned").insert(x.to_bits(), t);
    t
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn smooth_speed() -> BenchmarkInstance {
    let time: PointFn<f64> = Arc::new(|x| smooth_speed_time(x[0]));
    let (analytic_value, analytic_time) = with_value(time);
    BenchmarkInstance {
        name: "smooth-speed-1d".into(),
        dim: 1,
        speed: SpeedField::isotropic(1.0, 3.0, |x| smooth_speed_1d(x[0]))
            .expect("valid speed bounds"),
        target: TargetSet::half_space_below(0, 0.0),
        domain: None,
        analytic_value,
        analytic_time,
        lower: vec![0.0],
        upper: vec![2.0],
        probes: (1..=8).map(|k| vec![k as f64 / 4.0]).collect(),
        unreachable: None,
    }
}

fn disk_with_slab() -> BenchmarkInstance {
    let mut inst = unit_disk();
    inst.name = "disk-with-slab-obstacle".into();
    inst.domain = Some(ConstraintDomain::excluding_box(
        SLAB_LOWER.to_vec(),
        SLAB_UPPER.to_vec(),
    ));
    // The unconstrained solution is only exact away from the slab's shadow.
    inst.analytic_value = None;
    inst.analytic_time = None;
    inst.probes = SLAB_PROBES.iter().map(|p| p.to_vec()).collect();
    inst.unreachable = Some(Arc::new(|x| x[0] > SLAB_UPPER[0]));
    inst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kruzkov_examples() {
        assert_eq!(kruzkov(0.0).unwrap(), 0.0);
        assert_eq!(kruzkov(f64::INFINITY).unwrap(), 1.0);
        let oracle = 1.0 - (-0.5f64).exp();
        assert_abs_diff_eq!(kruzkov(0.5).unwrap(), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(
            kruzkov(0.5).unwrap(),
            0.393_469_340_287_366_6,
            epsilon = 1e-15
        );
        assert!(kruzkov(-1e-3).is_err());
    }

    #[test]
    fn kruzkov_inverse_examples() {
        assert_eq!(kruzkov_inverse(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            kruzkov_inverse(0.393_469_340_287_366_6).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(kruzkov_inverse(1.0).unwrap(), f64::INFINITY);
        assert_eq!(kruzkov_inverse(1.5).unwrap(), f64::INFINITY);
        assert!(kruzkov_inverse(-0.1).is_err());
    }

    #[test]
    fn kruzkov_round_trip() {
        // 1 - exp(-T) rounds to 1 once exp(-T) drops below half an ulp of 1
        // (T > 36.7), where the inverse saturates to infinity.
        for k in 0..=5000 {
            let t = k as f64 * 0.01;
            let v = kruzkov(t).unwrap();
            let back = kruzkov_inverse(v).unwrap();
            if v < 1.0 {
                let tol = 1e-10_f64.max(f64::EPSILON * t.exp());
                assert!((back - t).abs() <= tol, "t = {t}, back = {back}");
            } else {
                assert!(t > 36.0, "t = {t}");
                assert_eq!(back, f64::INFINITY);
            }
        }
    }

    #[test]
    fn unit_disk_examples() {
        let b = benchmark("unit-disk").unwrap();
        assert_eq!(b.value_at(&[0.25, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(b.time_at(&[0.75, 0.0]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            b.value_at(&[0.75, 0.0]).unwrap(),
            0.393_469_340_287_366_6,
            epsilon = 1e-15
        );
    }

    #[test]
    fn smooth_speed_time_against_closed_form() {
        // Antiderivative of 1/(2 + cos t) on (-pi, pi).
        let closed = |x: f64| 2.0 / 3f64.sqrt() * ((x / 2.0).tan() / 3f64.sqrt()).atan();
        let b = benchmark("smooth-speed-1d").unwrap();
        for k in 0..=40 {
            let x = k as f64 * 0.05;
            assert_abs_diff_eq!(b.time_at(&[x]).unwrap(), closed(x), epsilon = 1e-10);
        }
        // scipy.integrate.quad at epsabs 1e-14.
        assert_abs_diff_eq!(
            smooth_speed_time(1.0),
            0.352_797_793_265_048_45,
            epsilon = 1e-10
        );
    }

    #[test]
    fn unknown_benchmark_names_registry() {
        let err = benchmark("nope").unwrap_err();
        let msg = err.to_string();
        for name in BENCHMARKS {
            assert!(msg.contains(name), "{msg}");
        }
    }

    #[test]
    fn value_and_time_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in BENCHMARKS {
            let b = benchmark(name).unwrap();
            let (Some(_), Some(_)) = (&b.analytic_value, &b.analytic_time) else {
                continue;
            };
            for _ in 0..500 {
                let x: Vec<f64> = (0..b.dim)
                    .map(|l| rng.gen_range(b.lower[l]..=b.upper[l]))
                    .collect();
                let v = b.value_at(&x).unwrap();
                let t = b.time_at(&x).unwrap();
                assert_abs_diff_eq!(v, 1.0 - (-t).exp(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn analytic_time_vanishes_on_target_boundary_and_is_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let disk = benchmark("unit-disk").unwrap();
        for k in 0..100 {
            let a = k as f64 * std::f64::consts::TAU / 100.0;
            let p = [DISK_RADIUS * a.cos(), DISK_RADIUS * a.sin()];
            assert!(disk.time_at(&p).unwrap() <= 1e-15);
        }
        for name in ["halfline-1d", "smooth-speed-1d"] {
            assert_eq!(benchmark(name).unwrap().time_at(&[0.0]).unwrap(), 0.0);
        }
        for name in ["unit-disk", "halfline-1d", "smooth-speed-1d"] {
            let b = benchmark(name).unwrap();
            let lip = 1.0 / b.speed.f_min();
            for _ in 0..500 {
                let x: Vec<f64> = (0..b.dim)
                    .map(|l| rng.gen_range(b.lower[l]..=b.upper[l]))
                    .collect();
                let y: Vec<f64> = (0..b.dim)
                    .map(|l| rng.gen_range(b.lower[l]..=b.upper[l]))
                    .collect();
                let dt = (b.time_at(&x).unwrap() - b.time_at(&y).unwrap()).abs();
                assert!(dt <= lip * norm_dist(&x, &y) + 1e-9, "{name}");
            }
        }
    }

    #[test]
    fn speed_bounds_and_isotropy_spot_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for name in BENCHMARKS {
            let b = benchmark(name).unwrap();
            for _ in 0..1000 {
                let x: Vec<f64> = (0..b.dim)
                    .map(|l| rng.gen_range(b.lower[l] - 1.0..=b.upper[l] + 1.0))
                    .collect();
                let mut a: Vec<f64> = (0..b.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
                a.iter_mut().for_each(|v| *v /= n);
                let f = b.speed.eval(&x, &a);
                assert!(f >= b.speed.f_min() && f <= b.speed.f_max(), "{name}");
                if b.speed.is_isotropic() {
                    let flipped: Vec<f64> = a.iter().map(|v| -v).collect();
                    assert_eq!(f, b.speed.eval(&x, &flipped));
                }
            }
        }
    }

    #[test]
    fn target_and_domain_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let disk = TargetSet::ball(vec![0.0, 0.0], 0.25);
        let dom = ConstraintDomain::excluding_box(SLAB_LOWER.to_vec(), SLAB_UPPER.to_vec());
        for _ in 0..2000 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let y = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if disk.contains(&x) {
                assert_eq!(disk.distance(&x), 0.0);
            }
            let d = norm_dist(&x, &y);
            assert!((disk.distance(&x) - disk.distance(&y)).abs() <= d + 1e-12);
            assert!((dom.boundary_distance(&x) - dom.boundary_distance(&y)).abs() <= d + 1e-12);
        }
        for k in 0..50 {
            let y = -1.0 + k as f64 * 0.04;
            assert_eq!(dom.boundary_distance(&[SLAB_LOWER[0], y]), 0.0);
            assert_eq!(dom.boundary_distance(&[SLAB_UPPER[0], y]), 0.0);
        }
        assert!(!dom.contains(&[0.65, 0.0]));
        assert!(dom.contains(&[0.6, 0.0]));
    }

    #[test]
    fn step_precondition() {
        let s = SpeedField::isotropic(1.0, 3.0, |_| 2.0).unwrap();
        assert!(s.check_step(0.3).is_ok());
        assert!(s.check_step(1.0 / 3.0).is_err());
        let slow = SpeedField::constant(0.5).unwrap();
        assert_eq!(slow.step_bound(), 0.5);
        assert!(matches!(
            slow.check_step(1.0),
            Err(Error::StepTooLarge { .. })
        ));
    }
}
