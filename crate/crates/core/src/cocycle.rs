//! Jacobian cocycles of triangular systems.
//!
//! Products of lower-triangular Jacobians are stored as
//! `(log|f_x|, sign f_x, g_x/f_x, log|g_y|, sign g_y)`. The off-diagonal
//! ratio stays bounded along words, so the representation survives word
//! lengths where the raw entries underflow.

use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::Interval;
use crate::ifs::{BoxEnclosure, Point, SymbolSequence, TriangularSystem, Word, CENTER};
use crate::rng::{child_rng, derive_seed, Rng};

/// Coding tolerance for the base point of [`cocycle_along`].
pub const BASE_POINT_TOLERANCE: f64 = 1e-9;

const DEGENERATE: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CocycleError {
    #[error("degenerate Jacobian of map {map} at ({x}, {y}): f_x = {fx}, g_y = {gy}")]
    Degenerate {
        map: usize,
        x: f64,
        y: f64,
        fx: f64,
        gy: f64,
    },
    #[error("map {map}: {source}")]
    Expression {
        map: usize,
        #[source]
        source: crate::expr::ExprError,
    },
}

/// The matrix `[[f_x, 0], [g_x, g_y]]` in log-scaled form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerTriangularJacobian {
    pub log_fx: f64,
    pub sign_fx: f64,
    pub gx_over_fx: f64,
    pub log_gy: f64,
    pub sign_gy: f64,
}

impl LowerTriangularJacobian {
    pub const IDENTITY: LowerTriangularJacobian = LowerTriangularJacobian {
        log_fx: 0.0,
        sign_fx: 1.0,
        gx_over_fx: 0.0,
        log_gy: 0.0,
        sign_gy: 1.0,
    };

    /// From raw entries; both diagonal entries must be non-zero.
    #[inline]
    pub fn from_entries(fx: f64, gx: f64, gy: f64) -> LowerTriangularJacobian {
        LowerTriangularJacobian {
            log_fx: fx.abs().ln(),
            sign_fx: fx.signum(),
            gx_over_fx: gx / fx,
            log_gy: gy.abs().ln(),
            sign_gy: gy.signum(),
        }
    }

    /// Raw `(f_x, g_x, g_y)`; may underflow for long words.
    pub fn entries(&self) -> (f64, f64, f64) {
        let fx = self.sign_fx * self.log_fx.exp();
        (fx, self.gx_over_fx * fx, self.sign_gy * self.log_gy.exp())
    }

    /// `self · inner`.
    #[inline]
    pub fn compose(&self, inner: &LowerTriangularJacobian) -> LowerTriangularJacobian {
        // g_x = g_x' f_x'' + g_y' g_x'', divided by f_x' f_x''
        let scale = self.sign_gy * self.sign_fx * (self.log_gy - self.log_fx).exp();
        LowerTriangularJacobian {
            log_fx: self.log_fx + inner.log_fx,
            sign_fx: self.sign_fx * inner.sign_fx,
            gx_over_fx: self.gx_over_fx + scale * inner.gx_over_fx,
            log_gy: self.log_gy + inner.log_gy,
            sign_gy: self.sign_gy * inner.sign_gy,
        }
    }

    pub fn singular_values(&self) -> SingularValues {
        singular_values(self)
    }
}

/// `log α1 ≥ log α2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularValues {
    pub log_alpha1: f64,
    pub log_alpha2: f64,
}

impl SingularValues {
    pub fn alpha1(&self) -> f64 {
        self.log_alpha1.exp()
    }

    pub fn alpha2(&self) -> f64 {
        self.log_alpha2.exp()
    }
}

/// Largest eigenvalue of the Gram matrix of `[[u,0],[v,w]]`.
#[inline]
fn gram_lambda1(u: f64, v: f64, w: f64) -> f64 {
    let s = u * u + v * v + w * w;
    let p = u * w;
    0.5 * (s + ((s - 2.0 * p).max(0.0) * (s + 2.0 * p)).sqrt())
}

/// Singular values in log scale; `log α1 + log α2 = log|f_x| + log|g_y|`
/// holds by construction.
pub fn singular_values(j: &LowerTriangularJacobian) -> SingularValues {
    let m = j.log_fx.max(j.log_gy);
    let u = (j.log_fx - m).exp();
    let v = j.gx_over_fx.abs() * u;
    let w = (j.log_gy - m).exp();
    let log_alpha1 = (m + 0.5 * gram_lambda1(u, v, w).ln()).max(j.log_fx.max(j.log_gy));
    SingularValues {
        log_alpha1,
        log_alpha2: j.log_fx + j.log_gy - log_alpha1,
    }
}

/// How the base point of a cocycle is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BasePolicy {
    /// `Π(σ^n i)`, so that the product is the derivative at the coded point.
    #[default]
    ShiftedCodingPoint,
    /// A fixed point of the square.
    Fixed(Point),
}

/// `D_p S_i` from forward-mode derivatives.
pub fn jacobian_at(sys: &TriangularSystem, i: usize, p: Point) -> Result<LowerTriangularJacobian, CocycleError> {
    let map = &sys.maps()[i];
    let wrap = |source| CocycleError::Expression { map: i, source };
    let f = map.f().eval_with_partials(p[0], p[1]).map_err(wrap)?;
    let g = map.g().eval_with_partials(p[0], p[1]).map_err(wrap)?;
    if f.dx.abs() < DEGENERATE || g.dy.abs() < DEGENERATE {
        return Err(CocycleError::Degenerate {
            map: i,
            x: p[0],
            y: p[1],
            fx: f.dx,
            gy: g.dy,
        });
    }
    Ok(LowerTriangularJacobian::from_entries(f.dx, g.dx, g.dy))
}

pub fn compose(outer: &LowerTriangularJacobian, inner: &LowerTriangularJacobian) -> LowerTriangularJacobian {
    outer.compose(inner)
}

/// `D_a S_w`, accumulated right to left through the intermediate points
/// `S_{w_k … w_n}(a)`.
pub fn word_cocycle(sys: &TriangularSystem, w: &[usize], a: Point) -> LowerTriangularJacobian {
    let maps = sys.maps();
    let mut q = a;
    let mut acc = LowerTriangularJacobian::IDENTITY;
    for &s in w.iter().rev() {
        let (fx, gx, gy) = maps[s].jacobian_entries(q);
        acc = LowerTriangularJacobian::from_entries(fx, gx, gy).compose(&acc);
        q = maps[s].apply(q);
    }
    acc
}

/// `D_a S_{seq|n}` with `a` chosen by `policy`.
pub fn cocycle_along(sys: &TriangularSystem, seq: &SymbolSequence, n: usize, policy: BasePolicy) -> LowerTriangularJacobian {
    let tail = match policy {
        BasePolicy::ShiftedCodingPoint => sys.coding_depth(BASE_POINT_TOLERANCE),
        BasePolicy::Fixed(_) => 0,
    };
    let word = seq.prefix(n + tail);
    cocycle_of_symbols(sys, word.symbols(), n, policy)
}

/// Same as [`cocycle_along`] for an explicit symbol buffer holding at least
/// `n` symbols (plus the coding tail for the shifted policy).
pub fn cocycle_of_symbols(sys: &TriangularSystem, symbols: &[usize], n: usize, policy: BasePolicy) -> LowerTriangularJacobian {
    let base = match policy {
        BasePolicy::ShiftedCodingPoint => sys.apply_symbols(&symbols[n..], CENTER),
        BasePolicy::Fixed(p) => p,
    };
    word_cocycle(sys, &symbols[..n], base)
}

/// Empirical distortion constants together with the interval bound `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionConstants {
    pub c: f64,
    pub m: f64,
    pub a: f64,
    pub r: f64,
    pub eta: f64,
}

impl DistortionConstants {
    fn trivial(eta: f64) -> DistortionConstants {
        DistortionConstants {
            c: 0.0,
            m: 1.0,
            a: 1.0,
            r: 1.0,
            eta,
        }
    }

    fn merge(self, o: DistortionConstants) -> DistortionConstants {
        DistortionConstants {
            c: self.c.max(o.c),
            m: self.m.max(o.m),
            a: self.a.max(o.a),
            r: self.r.max(o.r),
            eta: self.eta.max(o.eta),
        }
    }

    /// Componentwise ratio `self / base` of the four empirical constants,
    /// with `0/0 = 1`.
    pub fn growth_over(&self, base: &DistortionConstants) -> [f64; 4] {
        let ratio = |a: f64, b: f64| if a == b { 1.0 } else { a / b };
        [ratio(self.c, base.c), ratio(self.m, base.m), ratio(self.a, base.a), ratio(self.r, base.r)]
    }
}

#[derive(Debug, Clone, Copy)]
struct PointSample {
    log_fx: f64,
    log_gy: f64,
    log_gx: f64,
    sv: SingularValues,
}

fn word_samples(sys: &TriangularSystem, w: &[usize], points: &[Point]) -> Vec<PointSample> {
    points
        .iter()
        .map(|&p| {
            let j = word_cocycle(sys, w, p);
            PointSample {
                log_fx: j.log_fx,
                log_gy: j.log_gy,
                log_gx: j.gx_over_fx.abs().ln() + j.log_fx,
                sv: j.singular_values(),
            }
        })
        .collect()
}

fn spread(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.fold(f64::INFINITY, f64::min);
    hi - lo
}

/// Constants realised by one word over its sampled points.
fn word_constants(samples: &[PointSample], eta: f64) -> DistortionConstants {
    let max_gx = samples.iter().map(|s| s.log_gx).fold(f64::NEG_INFINITY, f64::max);
    let min_fx = samples.iter().map(|s| s.log_fx).fold(f64::INFINITY, f64::min);
    let m = samples
        .iter()
        .map(|s| (s.sv.log_alpha1 - s.log_fx).max(s.log_gy - s.sv.log_alpha2))
        .fold(0.0, f64::max);
    let a = spread(samples.iter().map(|s| s.log_fx)).max(spread(samples.iter().map(|s| s.log_gy)));
    let r = spread(samples.iter().map(|s| s.sv.log_alpha1)).max(spread(samples.iter().map(|s| s.sv.log_alpha2)));
    DistortionConstants {
        c: (max_gx - min_fx).exp(),
        m: m.exp(),
        a: a.exp(),
        r: r.exp(),
        eta,
    }
}

const CORNERS: [Point; 5] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], CENTER];

/// Random word of length `depth` and `count` base points: the corners and
/// centre first, then uniform points. Deterministic in `(seed, depth, index)`.
fn draw_case(sys: &TriangularSystem, depth: usize, index: usize, count: usize, seed: u64) -> (Vec<usize>, Vec<Point>) {
    let mut rng: Rng = child_rng(derive_seed(seed, depth as u64), index as u64);
    let w: Vec<usize> = (0..depth).map(|_| rng.random_range(0..sys.len())).collect();
    let points = (0..count)
        .map(|k| match CORNERS.get(k) {
            Some(&p) => p,
            None => [rng.random::<f64>(), rng.random::<f64>()],
        })
        .collect();
    (w, points)
}

/// Empirical maxima of the distortion ratios over random words of every
/// depth up to `max_depth` and `points_per_word` base points per word.
///
/// The sampled sets are nested, so the estimates are non-decreasing in each
/// size parameter.
pub fn estimate_distortion_constants(
    sys: &TriangularSystem,
    max_depth: usize,
    words_per_depth: usize,
    points_per_word: usize,
    seed: u64,
) -> DistortionConstants {
    assert!(max_depth >= 1, "max_depth must be at least 1");
    let eta = sys.eta();
    let cases: Vec<(usize, usize)> = (1..=max_depth).flat_map(|d| (0..words_per_depth).map(move |j| (d, j))).collect();
    cases
        .par_iter()
        .map(|&(d, j)| {
            let (w, points) = draw_case(sys, d, j, points_per_word.max(1), seed);
            word_constants(&word_samples(sys, &w, &points), eta)
        })
        .reduce(|| DistortionConstants::trivial(eta), DistortionConstants::merge)
}

/// Interval enclosures of `log|f_{w,x}|`, `log|g_{w,y}|` and `g_{w,x}/f_{w,x}`
/// over the whole square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordBounds {
    pub log_fx: Interval,
    pub log_gy: Interval,
    pub ratio: Interval,
}

fn log_abs(i: Interval) -> Interval {
    Interval::new(i.mig().ln(), i.mag().ln())
}

fn sign_of(i: Interval) -> f64 {
    if i.lo > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Interval version of the cocycle: the point `S_{w_{k+1} … w_n}(a)` ranges
/// over the cylinder enclosure of that suffix.
pub fn word_bounds(sys: &TriangularSystem, w: &[usize]) -> WordBounds {
    let maps = sys.maps();
    let mut b = BoxEnclosure::UNIT;
    let mut log_fx = Interval::point(0.0);
    let mut log_gy = Interval::point(0.0);
    let mut ratio = Interval::point(0.0);
    for &s in w.iter().rev() {
        let d = maps[s].jacobian_box(&b);
        let lfx = log_abs(d.fx);
        let lgy = log_abs(d.gy);
        let r = d.gx.checked_div(d.fx).expect("f_x bounded away from zero");
        let scale = (lgy - lfx).exp();
        let scaled = scale * ratio;
        ratio = if sign_of(d.fx) * sign_of(d.gy) > 0.0 { r + scaled } else { r - scaled };
        log_fx = lfx + log_fx;
        log_gy = lgy + log_gy;
        b = maps[s].apply_box(&b);
    }
    WordBounds { log_fx, log_gy, ratio }
}

impl WordBounds {
    /// Certified upper bounds `(C_w, M_w, A_w, R_w)` for the word.
    pub fn constants(&self) -> [f64; 4] {
        let c = self.ratio.mag() * self.log_fx.width().exp();
        let q = (self.log_gy.hi - self.log_fx.lo).exp();
        let m = gram_lambda1(1.0, self.ratio.mag(), q).sqrt();
        let a = self.log_fx.width().max(self.log_gy.width()).exp();
        [c, m, a, m * a]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `α1 ≥ |f_x| ≥ |g_y| ≥ α2` failed at a sample.
    Ordering,
    OffDiagonal,
    Comparability,
    Distortion,
    SingularDistortion,
    /// `(1/n) log(α1/α2) ≥ −log η − (2/n) log M` failed.
    DistinctExponents,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub word: Word,
    pub observed: f64,
    pub bound: f64,
}

/// Outcome of [`check_lemma_inequalities`].
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub words: usize,
    pub points: usize,
    /// Running constants over words of depth ≤ 8.
    pub at_depth_8: DistortionConstants,
    /// Running constants over words of depth ≤ 12.
    pub at_depth_12: DistortionConstants,
    /// Breaches of the per-word certified bounds or of the orderings.
    pub violations: Vec<Violation>,
    /// Samples that raised a running constant after the first word; these
    /// only mean the constant was not yet saturated.
    pub exceedances: usize,
}

pub const SATURATION_LIMIT: f64 = 1.05;
pub const LEMMA_MAX_DEPTH: usize = 12;
const LEMMA_POINTS: usize = 8;
const RELATIVE_SLACK: f64 = 1e-9;

impl LemmaReport {
    pub fn saturation(&self) -> [f64; 4] {
        self.at_depth_12.growth_over(&self.at_depth_8)
    }

    pub fn saturated(&self) -> bool {
        self.saturation().iter().all(|&g| g <= SATURATION_LIMIT)
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.saturated()
    }
}

fn check_word(sys: &TriangularSystem, w: &[usize], samples: &[PointSample], found: &DistortionConstants) -> Vec<Violation> {
    let mut out = Vec::new();
    let word = Word::from_symbols_unchecked(w.to_vec());
    let mut flag = |kind, observed: f64, bound: f64| {
        if observed > bound * (1.0 + RELATIVE_SLACK) + 1e-300 {
            out.push(Violation {
                kind,
                word: word.clone(),
                observed,
                bound,
            });
        }
    };
    let [c, m, a, r] = word_bounds(sys, w).constants();
    flag(ViolationKind::OffDiagonal, found.c, c);
    flag(ViolationKind::Comparability, found.m, m);
    flag(ViolationKind::Distortion, found.a, a);
    flag(ViolationKind::SingularDistortion, found.r, r);
    let n = w.len() as f64;
    let eps = 1e-12 * n.max(1.0);
    for s in samples {
        let order = [s.sv.log_alpha1, s.log_fx, s.log_gy, s.sv.log_alpha2];
        for pair in order.windows(2) {
            // compare exponentials of log differences to stay in ratio form
            flag(ViolationKind::Ordering, (pair[1] - pair[0] - eps).exp(), 1.0);
        }
        let gap = (s.sv.log_alpha1 - s.sv.log_alpha2) / n;
        let floor = -sys.eta().ln() - 2.0 * m.ln() / n;
        flag(ViolationKind::DistinctExponents, (floor - gap).exp(), 1.0);
    }
    out
}

/// Samples `trials` random words spread evenly over depths `1..=12` and
/// checks the distortion inequalities.
///
/// Hard violations are breaches of bounds certified per word by the
/// interval cocycle ([`word_bounds`]). Exceedances of the running empirical
/// constants are counted separately.
pub fn check_lemma_inequalities(sys: &TriangularSystem, trials: usize, seed: u64) -> LemmaReport {
    assert!(trials >= 1, "trials must be at least 1");
    let per_depth = trials.div_ceil(LEMMA_MAX_DEPTH);
    let eta = sys.eta();
    let cases: Vec<(usize, usize)> = (1..=LEMMA_MAX_DEPTH).flat_map(|d| (0..per_depth).map(move |j| (d, j))).collect();
    let results: Vec<(usize, DistortionConstants, Vec<Violation>)> = cases
        .par_iter()
        .map(|&(d, j)| {
            let (w, points) = draw_case(sys, d, j, LEMMA_POINTS, seed);
            let samples = word_samples(sys, &w, &points);
            let found = word_constants(&samples, eta);
            let v = check_word(sys, &w, &samples, &found);
            (d, found, v)
        })
        .collect();

    let mut running: Option<DistortionConstants> = None;
    let mut at_depth_8 = DistortionConstants::trivial(eta);
    let mut exceedances = 0;
    let mut violations = Vec::new();
    for (d, found, v) in results {
        if let Some(run) = running {
            let g = found.growth_over(&run);
            exceedances += usize::from(g.iter().any(|&x| x > 1.0) && found.merge(run) != run);
        }
        let merged = running.map_or(found, |r| r.merge(found));
        running = Some(merged);
        if d <= 8 {
            at_depth_8 = merged;
        }
        violations.extend(v);
    }
    LemmaReport {
        words: cases.len(),
        points: cases.len() * LEMMA_POINTS,
        at_depth_8,
        at_depth_12: running.unwrap_or(DistortionConstants::trivial(eta)),
        violations,
        exceedances,
    }
}
