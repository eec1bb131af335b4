//! The projected system `{f_i}` on `[0, 1]` and the dimension `t` of the
//! projected measure.

use std::fmt;

use log::warn;
use rand::Rng as _;
use thiserror::Error;

use crate::ifs::{BoxEnclosure, TriangularSystem};
use crate::measure::SymbolicMeasure;
use crate::rng::child_rng;
use crate::stats::{fit_line, Welford};

/// Default number of probe points for Monte Carlo estimates.
pub const DEFAULT_PROBES: usize = 256;
/// Radii with fewer neighbours than this at some probe are dropped.
pub const MIN_COUNT: usize = 30;

const OVERLAP_LENGTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("the projected system is not certified separated")]
    NotSeparated,
    #[error("h/chi1 = {0} exceeds 1 under separation")]
    ExceedsOne(f64),
    #[error("chi1 must be negative, got {0}")]
    NonNegativeExponent(f64),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("radii must be strictly decreasing with at least {min} values")]
    BadRadii { min: usize },
    #[error("only {kept} radii have at least {MIN_COUNT} neighbours at every probe")]
    Degenerate { kept: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    /// First-level projected images are at distance at least `gap`.
    Separated { gap: f64 },
    /// `f_first([0,1])` and `f_second([0,1])` share an interval of length
    /// at least `overlap`.
    Overlapping { first: usize, second: usize, overlap: f64 },
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMethod {
    ExactSeparated,
    MonteCarlo,
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionMethod::ExactSeparated => "exact_separated",
            ProjectionMethod::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedDimension {
    pub t: f64,
    pub method: ProjectionMethod,
    /// Zero for the exact method.
    pub stderr: f64,
    /// Fit quality of the mean log-mass regression.
    pub r2: f64,
    pub radii_used: usize,
}

/// The interval `Q_1(x, r) = [x − r/2, x + r/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalQuery {
    pub center: f64,
    pub width: f64,
}

impl IntervalQuery {
    pub fn new(center: f64, width: f64) -> IntervalQuery {
        assert!(width > 0.0, "interval width must be positive");
        IntervalQuery { center, width }
    }

    /// Number of sorted values inside the closed interval.
    pub fn count(&self, sorted: &[f64]) -> usize {
        let lo = sorted.partition_point(|&v| v < self.center - 0.5 * self.width);
        let hi = sorted.partition_point(|&v| v <= self.center + 0.5 * self.width);
        hi - lo
    }
}

/// Separation of the projected pieces, decided from interval images of all
/// words of length `depth`.
pub fn check_projected_separation(sys: &TriangularSystem, depth: usize) -> Separation {
    let depth = depth.max(1);
    let maps = sys.maps();
    let mut level: Vec<(usize, BoxEnclosure)> =
        (0..maps.len()).map(|i| (i, maps[i].apply_box(&BoxEnclosure::UNIT))).collect();
    for _ in 1..depth {
        level = maps
            .iter()
            .enumerate()
            .flat_map(|(i, m)| level.iter().map(move |(_, b)| (i, m.apply_box(b))))
            .collect();
    }
    let mut gap = f64::INFINITY;
    for a in 0..maps.len() {
        for b in a + 1..maps.len() {
            for (i, p) in level.iter().filter(|(i, _)| *i == a) {
                debug_assert_eq!(*i, a);
                for (_, q) in level.iter().filter(|(j, _)| *j == b) {
                    gap = gap.min(p.x.distance(&q.x));
                }
            }
        }
    }
    if gap > 0.0 {
        return Separation::Separated { gap };
    }
    // f_i([0,1]) contains the interval between f_i(0) and f_i(1)
    let inner: Vec<(f64, f64)> = maps
        .iter()
        .map(|m| {
            let (u, v) = (m.f().value(0.0, 0.0), m.f().value(1.0, 0.0));
            (u.min(v), u.max(v))
        })
        .collect();
    for a in 0..inner.len() {
        for b in a + 1..inner.len() {
            let overlap = inner[a].1.min(inner[b].1) - inner[a].0.max(inner[b].0);
            if overlap > OVERLAP_LENGTH {
                return Separation::Overlapping { first: a, second: b, overlap };
            }
        }
    }
    Separation::Undecided
}

/// `t = h/χ1` for a certified separated projection.
pub fn projected_dimension_exact(
    sys: &TriangularSystem,
    m: &SymbolicMeasure,
    chi1: f64,
) -> Result<ProjectedDimension, ProjectionError> {
    if !(chi1 < 0.0) {
        return Err(ProjectionError::NonNegativeExponent(chi1));
    }
    if !matches!(check_projected_separation(sys, sys.options().ssc_depth), Separation::Separated { .. }) {
        return Err(ProjectionError::NotSeparated);
    }
    let t = m.entropy_closed_form().value() / chi1;
    if t > 1.0 + 1e-9 {
        return Err(ProjectionError::ExceedsOne(t));
    }
    Ok(ProjectedDimension {
        t: t.clamp(0.0, 1.0),
        method: ProjectionMethod::ExactSeparated,
        stderr: 0.0,
        r2: 1.0,
        radii_used: 0,
    })
}

fn check_radii(radii: &[f64], min: usize) -> Result<(), ProjectionError> {
    if radii.len() < min || !radii.windows(2).all(|w| w[0] > w[1]) || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(ProjectionError::BadRadii { min });
    }
    Ok(())
}

/// Monte Carlo `t` from `samples` draws of `π(Π(i))`.
pub fn estimate_projected_dimension_mc(
    sys: &TriangularSystem,
    m: &SymbolicMeasure,
    samples: usize,
    radii: &[f64],
    seed: u64,
) -> Result<ProjectedDimension, ProjectionError> {
    if samples < 1000 {
        return Err(ProjectionError::TooFewSamples { min: 1000, got: samples });
    }
    check_radii(radii, 3)?;
    let xs: Vec<f64> = sys.sample_attractor(m, samples, seed).points.iter().map(|p| p[0]).collect();
    projected_dimension_from_samples(xs, radii, DEFAULT_PROBES, seed)
}

/// Monte Carlo `t` from given projected samples, using `probes` distinct
/// sample points chosen with `probe_seed`.
pub fn projected_dimension_from_samples(
    mut xs: Vec<f64>,
    radii: &[f64],
    probes: usize,
    probe_seed: u64,
) -> Result<ProjectedDimension, ProjectionError> {
    check_radii(radii, 3)?;
    if xs.len() < 2 {
        return Err(ProjectionError::TooFewSamples { min: 2, got: xs.len() });
    }
    xs.sort_by(f64::total_cmp);
    let total = (xs.len() - 1) as f64;
    let probes = probes.min(xs.len()).max(1);
    let mut rng = child_rng(probe_seed, 0x5052_4f42);
    let centres: Vec<f64> = (0..probes).map(|_| xs[rng.random_range(0..xs.len())]).collect();

    // neighbour counts, self excluded
    let counts: Vec<Vec<usize>> = centres
        .iter()
        .map(|&c| radii.iter().map(|&r| IntervalQuery::new(c, r).count(&xs) - 1).collect())
        .collect();
    let keep: Vec<usize> = (0..radii.len())
        .filter(|&k| counts.iter().all(|row| row[k] >= MIN_COUNT))
        .collect();
    if keep.len() < radii.len() {
        warn!(
            "dropped {} of {} radii with fewer than {MIN_COUNT} neighbours",
            radii.len() - keep.len(),
            radii.len()
        );
    }
    if keep.len() < 2 {
        return Err(ProjectionError::Degenerate { kept: keep.len() });
    }
    let log_r: Vec<f64> = keep.iter().map(|&k| radii[k].ln()).collect();
    let mean_log_mass: Vec<f64> = keep
        .iter()
        .map(|&k| counts.iter().map(|row| (row[k] as f64 / total).ln()).sum::<f64>() / probes as f64)
        .collect();
    let fit = fit_line(&log_r, &mean_log_mass).ok_or(ProjectionError::Degenerate { kept: keep.len() })?;
    let slopes: Welford = counts
        .iter()
        .filter_map(|row| {
            let ys: Vec<f64> = keep.iter().map(|&k| (row[k] as f64 / total).ln()).collect();
            fit_line(&log_r, &ys).map(|f| f.slope)
        })
        .collect();
    Ok(ProjectedDimension {
        t: fit.slope.clamp(0.0, 1.0),
        method: ProjectionMethod::MonteCarlo,
        stderr: slopes.stderr(),
        r2: fit.r2,
        radii_used: keep.len(),
    })
}
