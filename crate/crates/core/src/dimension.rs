//! The Ledrappier-Young dimension, direct local dimension estimates and
//! numerical checks of the approximate-square machinery.

use log::warn;
use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::cocycle::{
    cocycle_of_symbols, estimate_distortion_constants, word_bounds, word_cocycle, BasePolicy, BASE_POINT_TOLERANCE,
};
use crate::config::AnalysisSettings;
use crate::ergodic::{estimate_entropy, estimate_lyapunov, ErgodicEstimate};
use crate::ifs::{CodedSample, Point, SymbolSequence, TriangularSystem, Word};
use crate::measure::SymbolicMeasure;
use crate::projection::{
    check_projected_separation, projected_dimension_exact, projected_dimension_from_samples, IntervalQuery,
    ProjectedDimension, ProjectionError, Separation, DEFAULT_PROBES, MIN_COUNT,
};
use crate::rng::{child_rng, derive_seed, rng_from};
use crate::stats::{fit_line, Welford};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DimensionError {
    #[error("need chi2 < chi1 < 0, got chi1 = {chi1}, chi2 = {chi2}")]
    ExponentOrder { chi1: f64, chi2: f64 },
    #[error("entropy must be non-positive, got {0}")]
    PositiveEntropy(f64),
    #[error("projected dimension must lie in [0, 1], got {0}")]
    ProjectedOutOfRange(f64),
    #[error("{0}")]
    BadArgument(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    System(#[from] crate::ifs::IfsError),
}

fn bad(msg: impl Into<String>) -> DimensionError {
    DimensionError::BadArgument(msg.into())
}

/// `h/χ2 + ((χ2 − χ1)/χ2)·t`.
pub fn ly_dimension(h: f64, chi1: f64, chi2: f64, t: f64) -> Result<f64, DimensionError> {
    if !(chi2 < chi1 && chi1 < 0.0) {
        return Err(DimensionError::ExponentOrder { chi1, chi2 });
    }
    if !(h <= 0.0) {
        return Err(DimensionError::PositiveEntropy(h));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(DimensionError::ProjectedOutOfRange(t));
    }
    let d = h / chi2 + (chi2 - chi1) / chi2 * t;
    if !(0.0..=2.0).contains(&d) {
        warn!("dimension {d} lies outside [0, 2]");
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeEstimate {
    pub id: usize,
    pub point: Point,
    pub slope: f64,
    pub r2: f64,
    pub radii_used: usize,
}

/// Per-probe local dimension slopes and their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDimensionField {
    pub probes: Vec<ProbeEstimate>,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
}

/// Local dimensions of `μ` from `samples` attractor points.
pub fn estimate_local_dimension_field(
    sys: &TriangularSystem,
    m: &SymbolicMeasure,
    probes: usize,
    samples: usize,
    radii: &[f64],
    seed: u64,
) -> Result<LocalDimensionField, DimensionError> {
    if probes < 16 {
        return Err(bad("at least 16 probes are required"));
    }
    if samples < 10_000 {
        return Err(bad("at least 10^4 samples are required"));
    }
    if radii.len() < 4 {
        return Err(bad("at least 4 radii are required"));
    }
    let cloud = sys.sample_attractor(m, samples, seed);
    local_dimension_from_points(&cloud.points, probes, radii, seed)
}

/// Slopes of `log #{j ≠ k : |x_j − x_k| ≤ r}` against `log r` at `probes`
/// randomly chosen sample points.
pub fn local_dimension_from_points(
    points: &[Point],
    probes: usize,
    radii: &[f64],
    seed: u64,
) -> Result<LocalDimensionField, DimensionError> {
    if !radii.windows(2).all(|w| w[0] > w[1]) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(bad("radii must be positive and strictly decreasing"));
    }
    if points.len() < 2 || probes == 0 {
        return Err(bad("need at least two points and one probe"));
    }
    let mut rng = child_rng(seed, 0x4c44_494d);
    let chosen: Vec<usize> = (0..probes).map(|_| rng.random_range(0..points.len())).collect();
    let r_max2 = radii[0] * radii[0];
    let total = (points.len() - 1) as f64;
    let estimates: Vec<Option<ProbeEstimate>> = chosen
        .par_iter()
        .enumerate()
        .map(|(id, &k)| {
            let c = points[k];
            let mut d2: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, p)| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2))
                .filter(|&d| d <= r_max2)
                .collect();
            d2.sort_by(f64::total_cmp);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &r in radii {
                let count = d2.partition_point(|&d| d <= r * r);
                if count >= MIN_COUNT {
                    xs.push(r.ln());
                    ys.push((count as f64 / total).ln());
                }
            }
            let fit = fit_line(&xs, &ys)?;
            Some(ProbeEstimate {
                id,
                point: c,
                slope: fit.slope,
                r2: fit.r2,
                radii_used: xs.len(),
            })
        })
        .collect();
    let dropped = estimates.iter().filter(|e| e.is_none()).count();
    if dropped > 0 {
        warn!("{dropped} probes had fewer than two radii with {MIN_COUNT} neighbours");
    }
    let probes: Vec<ProbeEstimate> = estimates.into_iter().flatten().collect();
    let radii_dropped: usize = probes.iter().map(|p| radii.len() - p.radii_used).sum();
    if radii_dropped > 0 {
        warn!("dropped {radii_dropped} (probe, radius) pairs with fewer than {MIN_COUNT} neighbours");
    }
    if probes.is_empty() {
        return Err(bad("no probe had enough neighbours"));
    }
    let w: Welford = probes.iter().map(|p| p.slope).collect();
    Ok(LocalDimensionField {
        mean: w.mean(),
        sd: w.sd(),
        stderr: w.stderr(),
        probes,
    })
}

/// The strip `B_n(a, r)`: points of the cylinder `S_word([0,1]^2)` whose
/// first coordinate is within `halfwidth` of `center[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateSquare {
    pub word: Word,
    pub center: Point,
    pub halfwidth: f64,
}

impl ApproximateSquare {
    pub fn new(sys: &TriangularSystem, seq: &SymbolSequence, n: usize, r: f64) -> ApproximateSquare {
        assert!(n >= 1 && r > 0.0, "need n >= 1 and r > 0");
        ApproximateSquare {
            word: seq.prefix(n),
            center: sys.coding_map(seq, BASE_POINT_TOLERANCE),
            halfwidth: 0.5 * r,
        }
    }

    /// Count of sample members, decided symbolically for the cylinder.
    pub fn count(&self, sample: &CodedSample) -> usize {
        (0..sample.points.len())
            .filter(|&k| (sample.points[k][0] - self.center[0]).abs() <= self.halfwidth && sample.in_cylinder(k, &self.word))
            .count()
    }
}

/// The open square `Q_2(a, r)` of side `r` centred at `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareQuery {
    pub center: Point,
    pub side: f64,
}

impl SquareQuery {
    pub fn contains(&self, p: Point) -> bool {
        (p[0] - self.center[0]).abs() < 0.5 * self.side && (p[1] - self.center[1]).abs() < 0.5 * self.side
    }
}

/// Empirical probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassEstimate {
    pub value: f64,
    pub stderr: f64,
}

fn binomial(count: usize, total: usize) -> MassEstimate {
    let p = count as f64 / total as f64;
    MassEstimate {
        value: p,
        stderr: (p * (1.0 - p) / total as f64).sqrt(),
    }
}

/// Empirical `μ(B_n(Π(seq), r))`.
pub fn approximate_square_measure(
    sys: &TriangularSystem,
    m: &SymbolicMeasure,
    seq: &SymbolSequence,
    n: usize,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<MassEstimate, DimensionError> {
    if n == 0 || !(r > 0.0) || samples == 0 {
        return Err(bad("need n >= 1, r > 0 and a positive sample size"));
    }
    let sample = sys.sample_coded(m, samples, n, seed);
    Ok(binomial(ApproximateSquare::new(sys, seq, n, r).count(&sample), samples))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichCase {
    pub seq: SymbolSequence,
    pub n: usize,
    pub r: f64,
}

/// `count` cases with `n` uniform in `1..=8`, an `m`-typical sequence and
/// `r = |f_{i|n,x}| · 10^u`, `u` uniform in `[−1.3, 0.3]`.
pub fn sample_sandwich_cases(sys: &TriangularSystem, m: &SymbolicMeasure, count: usize, seed: u64) -> Vec<SandwichCase> {
    (0..count)
        .map(|k| {
            let mut rng = child_rng(seed, k as u64);
            let n = rng.random_range(1..=8usize);
            let u: f64 = rng.random_range(-1.3..0.3);
            let seq = SymbolSequence::sampled(m, rng.random());
            let tail = sys.coding_depth(BASE_POINT_TOLERANCE);
            let j = cocycle_of_symbols(sys, seq.prefix(n + tail).symbols(), n, BasePolicy::ShiftedCodingPoint);
            SandwichCase {
                seq,
                n,
                r: j.log_fx.exp() * 10f64.powf(u),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichRow {
    pub n: usize,
    pub r: f64,
    pub left: MassEstimate,
    pub upper: MassEstimate,
    pub lower: MassEstimate,
    /// `upper − left`, negative values breach the upper inequality.
    pub upper_slack: f64,
    /// `left − lower`.
    pub lower_slack: f64,
    pub upper_se: f64,
    pub lower_se: f64,
}

impl SandwichRow {
    pub fn upper_violated(&self) -> bool {
        self.upper_slack < -3.0 * self.upper_se
    }

    pub fn lower_violated(&self) -> bool {
        self.lower_slack < -3.0 * self.lower_se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    pub l: f64,
    pub m_hat: f64,
}

impl SandwichReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| usize::from(r.upper_violated()) + usize::from(r.lower_violated())).sum()
    }
}

/// Both sides of the approximate-square sandwich against Monte Carlo
/// estimates of the masses.
///
/// Interval widths use `M̂² r / inf|f_{i|n,x}|` and `r / (M̂² sup|f_{i|n,x}|)`,
/// where the infimum and supremum come from certified enclosures.
pub fn check_measure_sandwich(
    sys: &TriangularSystem,
    m: &SymbolicMeasure,
    cases: &[SandwichCase],
    samples: usize,
    seed: u64,
) -> Result<SandwichReport, DimensionError> {
    if samples == 0 {
        return Err(bad("need a positive sample size"));
    }
    let max_n = cases.iter().map(|c| c.n).max().unwrap_or(1);
    if cases.iter().any(|c| c.n == 0 || !(c.r > 0.0)) {
        return Err(bad("every case needs n >= 1 and r > 0"));
    }
    let m_hat = estimate_distortion_constants(sys, 8, 64, 8, derive_seed(seed, 1)).m;
    let l = m.qb_constant();
    let sample = sys.sample_coded(m, samples, max_n, derive_seed(seed, 2));
    let mut xs: Vec<f64> = sample.points.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    let total = samples as f64;
    let k2 = m_hat * m_hat;

    let rows = cases
        .par_iter()
        .map(|case| {
            let square = ApproximateSquare::new(sys, &case.seq, case.n, case.r);
            let left = binomial(square.count(&sample), samples);
            let bounds = word_bounds(sys, square.word.symbols());
            let (inf_fx, sup_fx) = (bounds.log_fx.lo.exp(), bounds.log_fx.hi.exp());
            let c = sys.coding_map(&case.seq.shift(case.n), BASE_POINT_TOLERANCE)[0];
            let mass = m.cylinder_mass(&square.word);
            let wide = binomial(IntervalQuery::new(c, k2 * case.r / inf_fx).count(&xs), samples);
            let narrow = binomial(IntervalQuery::new(c, case.r / (k2 * sup_fx)).count(&xs), samples);
            let upper = MassEstimate {
                value: l * mass * wide.value,
                stderr: l * mass * wide.stderr,
            };
            let lower = MassEstimate {
                value: mass * narrow.value / l,
                stderr: mass * narrow.stderr / l,
            };
            // left-side variance at the boundary of the tested inequality
            let left_se = |bound: f64| {
                let p = left.value.max(bound);
                (p * (1.0 - p) / total).sqrt()
            };
            SandwichRow {
                n: case.n,
                r: case.r,
                left,
                upper,
                lower,
                upper_slack: upper.value - left.value,
                lower_slack: left.value - lower.value,
                upper_se: left_se(upper.value).hypot(upper.stderr),
                lower_se: left_se(lower.value).hypot(lower.stderr),
            }
        })
        .collect();
    Ok(SandwichReport { rows, l, m_hat })
}

/// Outcome of [`check_separation_theta`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaReport {
    pub theta: f64,
    /// Running minimum after including every `n ≤ k`, for `k = 1..=n_max`.
    pub theta_by_n: Vec<f64>,
    pub evaluations: usize,
    pub ssc_gap: f64,
    /// Smallest distance between coded points whose sequences differ in the
    /// first symbol.
    pub first_level_distance: f64,
    pub first_level_violations: usize,
    pub boundedheight_checks: usize,
    pub boundedheight_violations: usize,
}

impl ThetaReport {
    pub fn passed(&self) -> bool {
        self.theta > 0.0 && self.first_level_violations == 0 && self.boundedheight_violations == 0
    }
}

/// Maximum first-difference position of sampled pairs.
pub const THETA_DEPTH: usize = 12;

/// Estimates the separation constant `θ` from random pairs of sequences.
///
/// Pair `k` differs first at a position drawn uniformly from `0..12`; for
/// every `n` past that position and `n ≤ n_max`, two uniform points `a, b`
/// give the ratio `|S_{i|n}(a) − S_{l|n}(b)| / α2(D_{Π(σ^{n−1} i)} S_{i|n−1})`.
/// The bounded-height inequality is checked along `i|n` against the
/// certified off-diagonal bound of that word.
pub fn check_separation_theta(sys: &TriangularSystem, m: &SymbolicMeasure, pairs: usize, n_max: usize, seed: u64) -> ThetaReport {
    let tail = sys.coding_depth(BASE_POINT_TOLERANCE);
    let len = n_max.max(THETA_DEPTH) + tail + 1;
    let n_symbols = sys.len();
    let per_pair: Vec<(Vec<f64>, f64, usize, usize)> = (0..pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = child_rng(seed, k as u64);
            let split = rng.random_range(0..THETA_DEPTH);
            let mut i = Vec::with_capacity(len);
            m.extend_sample(&mut rng, len, &mut i);
            let mut l = i.clone();
            l[split] = (i[split] + rng.random_range(1..n_symbols)) % n_symbols;
            let mut tail_rng = child_rng(rng.random(), 1);
            for s in l.iter_mut().skip(split + 1) {
                *s = tail_rng.random_range(0..n_symbols);
            }
            let mut ratios = vec![f64::INFINITY; n_max];
            let mut first = f64::INFINITY;
            let (mut checks, mut bad) = (0, 0);
            if split == 0 {
                let a = sys.apply_symbols(&i[..len], crate::ifs::CENTER);
                let b = sys.apply_symbols(&l[..len], crate::ifs::CENTER);
                first = (a[0] - b[0]).hypot(a[1] - b[1]);
            }
            for n in (split + 1)..=n_max {
                let mut prng = rng_from(derive_seed(derive_seed(seed, k as u64), n as u64));
                let a = [prng.random::<f64>(), prng.random::<f64>()];
                let b = [prng.random::<f64>(), prng.random::<f64>()];
                let p = sys.apply_symbols(&i[..n], a);
                let q = sys.apply_symbols(&l[..n], b);
                let alpha2 = if n == 1 {
                    1.0
                } else {
                    let base = sys.apply_symbols(&i[n - 1..n - 1 + tail], crate::ifs::CENTER);
                    word_cocycle(sys, &i[..n - 1], base).singular_values().alpha2()
                };
                ratios[n - 1] = (p[0] - q[0]).hypot(p[1] - q[1]) / alpha2;

                // bounded height along i|n
                let c_w = word_bounds(sys, &i[..n]).constants()[0];
                let (a1, b1, b2) = (prng.random::<f64>(), prng.random::<f64>(), prng.random::<f64>());
                let u = sys.apply_symbols(&i[..n], [b1, b2]);
                let v = sys.apply_symbols(&i[..n], [a1, b2]);
                checks += 1;
                if (u[1] - v[1]).abs() > c_w * (1.0 + 1e-9) * (u[0] - v[0]).abs() + 1e-14 {
                    bad += 1;
                }
            }
            (ratios, first, checks, bad)
        })
        .collect();

    let mut theta_by_n = vec![f64::INFINITY; n_max];
    let mut first_level_distance = f64::INFINITY;
    let (mut evaluations, mut checks, mut violations) = (0, 0, 0);
    for (ratios, first, c, b) in &per_pair {
        for (n, &r) in ratios.iter().enumerate() {
            if r.is_finite() {
                evaluations += 1;
                theta_by_n[n] = theta_by_n[n].min(r);
            }
        }
        first_level_distance = first_level_distance.min(*first);
        checks += c;
        violations += b;
    }
    for n in 1..n_max {
        theta_by_n[n] = theta_by_n[n].min(theta_by_n[n - 1]);
    }
    let gap = sys.ssc_gap();
    let first_level_violations = per_pair.iter().filter(|p| p.1 < gap * (1.0 - 1e-9)).count();
    ThetaReport {
        theta: theta_by_n.last().copied().unwrap_or(f64::INFINITY),
        theta_by_n,
        evaluations,
        ssc_gap: gap,
        first_level_distance,
        first_level_violations,
        boundedheight_checks: checks,
        boundedheight_violations: violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceEntry {
    pub n: usize,
    pub h: ErgodicEstimate,
    pub chi1: ErgodicEstimate,
    pub chi2: ErgodicEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    /// Closed-form entropy.
    pub h: f64,
    /// Shannon-McMillan-Breiman cross-check of `h`.
    pub h_smb: ErgodicEstimate,
    pub chi1: ErgodicEstimate,
    pub chi2: ErgodicEstimate,
    pub separation: Separation,
    pub t: ProjectedDimension,
    pub ly_dim: f64,
    pub local: LocalDimensionField,
    pub convergence: Vec<ConvergenceEntry>,
}

impl DimensionReport {
    pub fn local_dim_mean(&self) -> f64 {
        self.local.mean
    }

    pub fn local_dim_sd(&self) -> f64 {
        self.local.sd
    }

    pub fn local_dim_stderr(&self) -> f64 {
        self.local.stderr
    }
}

fn convergence_grid(n: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = [8, 4, 2, 1].iter().map(|d| (n / d).max(1)).collect();
    grid.dedup();
    grid
}

/// Entropy, exponents, projected dimension, the formula value and the local
/// dimension field for one system and measure.
pub fn analyze(sys: &TriangularSystem, m: &SymbolicMeasure, options: &AnalysisSettings) -> Result<DimensionReport, DimensionError> {
    sys.check_measure(m)?;
    let seed = options.seed;
    let trials = options.trials.max(2);
    let radii = options.radii.grid();
    let h = m.entropy_closed_form().value();

    let convergence: Vec<ConvergenceEntry> = convergence_grid(options.seq_len.max(1))
        .into_iter()
        .map(|n| {
            let h = estimate_entropy(m, n, trials, derive_seed(seed, 1));
            let (chi1, chi2) = estimate_lyapunov(sys, m, n, trials, BasePolicy::default(), derive_seed(seed, 2));
            ConvergenceEntry { n, h, chi1, chi2 }
        })
        .collect();
    let last = *convergence.last().expect("non-empty grid");

    let cloud = sys.sample_attractor(m, options.samples, derive_seed(seed, 3));
    let separation = check_projected_separation(sys, options.ssc_depth);
    let t = match separation {
        Separation::Separated { .. } => projected_dimension_exact(sys, m, last.chi1.value)?,
        _ => projected_dimension_from_samples(
            cloud.points.iter().map(|p| p[0]).collect(),
            &radii,
            DEFAULT_PROBES,
            derive_seed(seed, 4),
        )?,
    };
    let ly_dim = ly_dimension(h, last.chi1.value, last.chi2.value, t.t)?;
    let local = local_dimension_from_points(&cloud.points, options.probes, &radii, derive_seed(seed, 5))?;
    Ok(DimensionReport {
        h,
        h_smb: last.h,
        chi1: last.chi1,
        chi2: last.chi2,
        separation,
        t,
        ly_dim,
        local,
        convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::stats::geometric_grid;

    #[test]
    fn formula_examples() {
        let d = ly_dimension(-(4f64.ln()), -(2f64.ln()), -(8f64.ln()), 1.0).unwrap();
        assert!((d - 4.0 / 3.0).abs() < 1e-15);
        assert!((ly_dimension(-1.0, -1.5, -2.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let t = 2f64.ln() / 3f64.ln();
        let d = ly_dimension(-(2f64.ln()), -(3f64.ln()), -(4f64.ln()), t).unwrap();
        assert!((d - t).abs() < 1e-12);
        assert!(matches!(ly_dimension(-1.0, -2.0, -1.0, 0.5), Err(DimensionError::ExponentOrder { .. })));
        assert!(matches!(ly_dimension(0.5, -1.0, -2.0, 0.5), Err(DimensionError::PositiveEntropy(_))));
        assert!(matches!(ly_dimension(-0.5, -1.0, -2.0, 1.5), Err(DimensionError::ProjectedOutOfRange(_))));
    }

    #[test]
    fn strip_mass_saturates_to_cylinder_mass() {
        let sys = benchmarks::system("bm4").unwrap();
        let m = SymbolicMeasure::uniform(4).unwrap();
        let seq = SymbolSequence::Periodic(Word::from(vec![1, 2]));
        let full = approximate_square_measure(&sys, &m, &seq, 2, 2.0, 40_000, 5).unwrap();
        assert!((full.value - 1.0 / 16.0).abs() <= 4.0 * full.stderr, "{full:?}");
        let narrow = approximate_square_measure(&sys, &m, &seq, 2, 0.05, 40_000, 5).unwrap();
        assert!(narrow.value <= full.value);
        let deeper = approximate_square_measure(&sys, &m, &seq, 3, 2.0, 40_000, 5).unwrap();
        assert!(deeper.value <= full.value);
        assert!(approximate_square_measure(&sys, &m, &seq, 0, 1.0, 10, 5).is_err());
    }

    #[test]
    fn sandwich_holds_on_small_run() {
        let sys = benchmarks::system("bm4").unwrap();
        let m = SymbolicMeasure::uniform(4).unwrap();
        let cases = sample_sandwich_cases(&sys, &m, 10, 3);
        let report = check_measure_sandwich(&sys, &m, &cases, 100_000, 4).unwrap();
        assert_eq!(report.l, 1.0);
        assert!((report.m_hat - 1.0).abs() < 1e-12);
        assert_eq!(report.violations(), 0, "{:?}", report.rows);
        // wide strips see the whole cylinder
        let seq = SymbolSequence::constant(2);
        let wide = check_measure_sandwich(&sys, &m, &[SandwichCase { seq, n: 1, r: 4.0 }], 100_000, 4).unwrap();
        assert!(wide.rows[0].upper_slack >= -3.0 * wide.rows[0].upper_se);
    }

    #[test]
    fn theta_positive_and_monotone() {
        for name in ["bm4", "nonlin1"] {
            let sys = benchmarks::system(name).unwrap();
            let m = SymbolicMeasure::uniform(4).unwrap();
            let r = check_separation_theta(&sys, &m, 200, 12, 7);
            assert!(r.passed(), "{name}: {r:?}");
            assert!(r.theta_by_n.windows(2).all(|w| w[1] <= w[0]));
            let short = check_separation_theta(&sys, &m, 200, 6, 7);
            assert!(short.theta >= r.theta);
            assert!(r.first_level_distance >= r.ssc_gap * (1.0 - 1e-9));
        }
    }

    #[test]
    fn local_dimension_of_cantor_product() {
        let sys = benchmarks::system("collapse2").unwrap();
        let m = SymbolicMeasure::uniform(2).unwrap();
        let radii = geometric_grid(10f64.powf(-1.5), 1e-3, 10);
        let f = estimate_local_dimension_field(&sys, &m, 32, 200_000, &radii, 11).unwrap();
        let expected = 2f64.ln() / 3f64.ln();
        assert!((f.mean - expected).abs() < 0.05, "{}", f.mean);
        assert!(estimate_local_dimension_field(&sys, &m, 8, 200_000, &radii, 11).is_err());
    }

    #[test]
    fn square_queries() {
        let q = SquareQuery {
            center: [0.5, 0.5],
            side: 0.2,
        };
        assert!(q.contains([0.55, 0.45]) && !q.contains([0.61, 0.5]));
    }
}
