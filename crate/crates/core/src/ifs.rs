//! Triangular iterated function systems `S_i(x, y) = (f_i(x), g_i(x, y))` on
//! the unit square.
//!
//! [`TriangularSystem::validate`] certifies the three standing hypotheses with
//! interval arithmetic: every map sends the square into itself and contracts,
//! the horizontal derivative dominates the vertical one, and the first-level
//! pieces of the attractor are separated. Validation is sound but not
//! complete; a system whose enclosures still touch at the requested depth is
//! rejected as undecided rather than accepted.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{monotone_range_bound, range_bound, Axis, ExprError, Expression, Interval};
use crate::measure::SymbolicMeasure;
use crate::rng::child_rng;

pub type Point = [f64; 2];

/// Centre of the unit square, the seed point of the coding map.
pub const CENTER: Point = [0.5, 0.5];

/// Coding tolerance used when sampling the attractor.
pub const SAMPLE_TOLERANCE: f64 = 1e-9;

const SELF_MAP_SLACK: f64 = 1e-9;
const SAMPLE_BLOCK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IfsError {
    #[error("an IFS needs at least two maps, got {0}")]
    TooFewMaps(usize),
    #[error("map {map}: f must depend on x only")]
    NotTriangular { map: usize },
    #[error("map {map}: {source}")]
    Expression {
        map: usize,
        #[source]
        source: ExprError,
    },
    #[error("map {map} does not send [0,1]^2 into itself: image enclosure x {x}, y {y}")]
    NotSelfMap { map: usize, x: Interval, y: Interval },
    #[error("map {map} is not a contraction: Jacobian norm bound {bound}")]
    NotContraction { map: usize, bound: f64 },
    #[error("map {map} violates domination: |f_x| encloses {fx}, |g_y| encloses {gy}")]
    DominationViolation { map: usize, fx: Interval, gy: Interval },
    #[error("strong separation undecided at depth {depth}: enclosures of pieces {first} and {second} touch")]
    SscUndecided { depth: usize, first: usize, second: usize },
    #[error("symbol {symbol} is outside the alphabet of {alphabet} symbols")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("measure has {measure} symbols but the system has {maps} maps")]
    AlphabetMismatch { maps: usize, measure: usize },
}

/// A finite word over the alphabet `{0, …, N−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>, alphabet: usize) -> Result<Word, IfsError> {
        if let Some(&symbol) = symbols.iter().find(|&&s| s >= alphabet) {
            return Err(IfsError::SymbolOutOfRange { symbol, alphabet });
        }
        Ok(Word(symbols))
    }

    pub fn from_symbols_unchecked(symbols: Vec<usize>) -> Word {
        Word(symbols)
    }

    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `w|n`, the first `n` symbols (or the whole word if shorter).
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    /// The shift `σ^k`: drops the first `k` symbols.
    pub fn shift(&self, k: usize) -> Word {
        Word(self.0[k.min(self.len())..].to_vec())
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// All `alphabet^len` words of length `len` in lexicographic order.
    pub fn all(alphabet: usize, len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| {
                    (0..alphabet).map(move |s| {
                        let mut v = w.0.clone();
                        v.push(s);
                        Word(v)
                    })
                })
                .collect();
        }
        out
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Word {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A deterministic infinite symbol sequence with prefix access.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSequence {
    /// The word repeated forever; must be non-empty.
    Periodic(Word),
    /// An `m`-typical sequence drawn from the seeded stream.
    Sampled { measure: SymbolicMeasure, seed: u64 },
    /// A finite head followed by another sequence.
    Concat { head: Word, tail: Box<SymbolSequence> },
    /// `σ^offset` of another sequence.
    Shifted { inner: Box<SymbolSequence>, offset: usize },
}

impl SymbolSequence {
    pub fn constant(symbol: usize) -> SymbolSequence {
        SymbolSequence::Periodic(Word(vec![symbol]))
    }

    pub fn sampled(measure: &SymbolicMeasure, seed: u64) -> SymbolSequence {
        SymbolSequence::Sampled {
            measure: measure.clone(),
            seed,
        }
    }

    /// `seq|n`.
    pub fn prefix(&self, n: usize) -> Word {
        match self {
            SymbolSequence::Periodic(w) => {
                assert!(!w.is_empty(), "periodic sequence needs a non-empty period");
                Word(w.0.iter().copied().cycle().take(n).collect())
            }
            SymbolSequence::Sampled { measure, seed } => measure.sample_word(n, *seed),
            SymbolSequence::Concat { head, tail } => {
                if n <= head.len() {
                    head.prefix(n)
                } else {
                    head.concat(&tail.prefix(n - head.len()))
                }
            }
            SymbolSequence::Shifted { inner, offset } => inner.prefix(offset + n).shift(*offset),
        }
    }

    /// `σ^k seq`.
    pub fn shift(&self, k: usize) -> SymbolSequence {
        if k == 0 {
            return self.clone();
        }
        match self {
            SymbolSequence::Periodic(w) => {
                let r = k % w.len();
                let mut v = w.0[r..].to_vec();
                v.extend_from_slice(&w.0[..r]);
                SymbolSequence::Periodic(Word(v))
            }
            SymbolSequence::Shifted { inner, offset } => SymbolSequence::Shifted {
                inner: inner.clone(),
                offset: offset + k,
            },
            other => SymbolSequence::Shifted {
                inner: Box::new(other.clone()),
                offset: k,
            },
        }
    }
}

/// Axis-aligned box over-approximating a set in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxEnclosure {
    pub x: Interval,
    pub y: Interval,
}

impl BoxEnclosure {
    pub const UNIT: BoxEnclosure = BoxEnclosure {
        x: Interval::UNIT,
        y: Interval::UNIT,
    };

    /// Euclidean distance between the boxes, zero if they intersect.
    pub fn distance(&self, other: &BoxEnclosure) -> f64 {
        self.x.distance(&other.x).hypot(self.y.distance(&other.y))
    }

    pub fn contains(&self, p: Point) -> bool {
        self.x.contains(p[0]) && self.y.contains(p[1])
    }

    pub fn encloses(&self, other: &BoxEnclosure, slack: f64) -> bool {
        self.x.encloses(&other.x, slack) && self.y.encloses(&other.y, slack)
    }

    fn intersect(&self, other: &BoxEnclosure) -> BoxEnclosure {
        // disjoint only through rounding; keep the sound operand
        BoxEnclosure {
            x: self.x.intersect(&other.x).unwrap_or(self.x),
            y: self.y.intersect(&other.y).unwrap_or(self.y),
        }
    }
}

/// Interval enclosures of the Jacobian entries over the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBounds {
    pub fx: Interval,
    pub gx: Interval,
    pub gy: Interval,
}

#[derive(Debug, Clone)]
pub struct TriangularMap {
    f: Expression,
    g: Expression,
    fx: Expression,
    gx: Expression,
    gy: Expression,
    bounds: Option<DerivativeBounds>,
    image: BoxEnclosure,
}

impl TriangularMap {
    pub fn new(f: Expression, g: Expression) -> Result<TriangularMap, IfsError> {
        if f.uses_y() {
            return Err(IfsError::NotTriangular { map: 0 });
        }
        Ok(TriangularMap {
            fx: f.derivative(Axis::X),
            gx: g.derivative(Axis::X),
            gy: g.derivative(Axis::Y),
            f,
            g,
            bounds: None,
            image: BoxEnclosure::UNIT,
        })
    }

    pub fn parse(f: &str, g: &str) -> Result<TriangularMap, IfsError> {
        let wrap = |source| IfsError::Expression { map: 0, source };
        TriangularMap::new(Expression::parse(f).map_err(wrap)?, Expression::parse(g).map_err(wrap)?)
    }

    pub fn f(&self) -> &Expression {
        &self.f
    }

    pub fn g(&self) -> &Expression {
        &self.g
    }

    /// Certified derivative enclosures, present once the map belongs to a
    /// validated system.
    pub fn bounds(&self) -> Option<&DerivativeBounds> {
        self.bounds.as_ref()
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        [self.f.value(p[0], 0.0), self.g.value(p[0], p[1])]
    }

    /// Jacobian entries `(f_x, g_x, g_y)` at `p`.
    #[inline]
    pub fn jacobian_entries(&self, p: Point) -> (f64, f64, f64) {
        (
            self.fx.value(p[0], p[1]),
            self.gx.value(p[0], p[1]),
            self.gy.value(p[0], p[1]),
        )
    }

    /// Enclosures of `(f_x, g_x, g_y)` over `b`, clipped to the certified
    /// bounds over the unit square. Requires a validated map.
    pub fn jacobian_box(&self, b: &BoxEnclosure) -> DerivativeBounds {
        let cert = self.bounds.expect("validated map");
        let clip = |e: &Expression, whole: Interval| match e.range(b.x, b.y) {
            Ok(r) => r.intersect(&whole).unwrap_or(whole),
            Err(_) => whole,
        };
        DerivativeBounds {
            fx: clip(&self.fx, cert.fx),
            gx: clip(&self.gx, cert.gx),
            gy: clip(&self.gy, cert.gy),
        }
    }

    /// Enclosure of the image of `b`, clipped to the certified image of the
    /// unit square.
    pub fn apply_box(&self, b: &BoxEnclosure) -> BoxEnclosure {
        let image = match (self.f.range(b.x, b.y), self.g.range(b.x, b.y)) {
            (Ok(x), Ok(y)) => BoxEnclosure { x, y },
            _ => self.image,
        };
        image.intersect(&self.image)
    }
}

/// Knobs for [`TriangularSystem::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Bisection depth used for the derivative and image enclosures.
    pub derivative_depth: u32,
    /// Word length of the cylinder enclosures used for separation.
    pub ssc_depth: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            derivative_depth: 8,
            ssc_depth: 5,
        }
    }
}

/// Largest singular value of `[[a,0],[b,c]]`. It is nondecreasing in each of
/// `|a|, |b|, |c|`, so entry magnitudes give a bound over an enclosure.
pub fn spectral_norm_bound(a: f64, b: f64, c: f64) -> f64 {
    let s = a * a + b * b + c * c;
    let disc = ((s - 2.0 * a * c).max(0.0) * (s + 2.0 * a * c)).sqrt();
    (0.5 * (s + disc)).sqrt()
}

/// A validated triangular IFS.
#[derive(Debug, Clone)]
pub struct TriangularSystem {
    maps: Vec<TriangularMap>,
    domination_margin: f64,
    ssc_gap: f64,
    contraction_sup: f64,
    eta: f64,
    options: ValidationOptions,
}

impl TriangularSystem {
    /// Certifies the hypotheses in order: self-map, contraction, domination,
    /// separation. The first failing check is reported.
    pub fn validate(maps: Vec<TriangularMap>, options: ValidationOptions) -> Result<TriangularSystem, IfsError> {
        if maps.len() < 2 {
            return Err(IfsError::TooFewMaps(maps.len()));
        }
        let depth = options.derivative_depth;
        let unit = Interval::UNIT;
        let mut maps = maps;
        for (k, m) in maps.iter().enumerate() {
            if m.f.uses_y() {
                return Err(IfsError::NotTriangular { map: k });
            }
        }

        let wrap = |map: usize| move |source| IfsError::Expression { map, source };
        for (k, m) in maps.iter_mut().enumerate() {
            let x = monotone_range_bound(&m.f, unit, unit, depth).map_err(wrap(k))?;
            let y = monotone_range_bound(&m.g, unit, unit, depth).map_err(wrap(k))?;
            if !(x.lo >= -SELF_MAP_SLACK && x.hi <= 1.0 + SELF_MAP_SLACK && y.lo >= -SELF_MAP_SLACK && y.hi <= 1.0 + SELF_MAP_SLACK) {
                return Err(IfsError::NotSelfMap { map: k, x, y });
            }
            m.image = BoxEnclosure { x, y }.intersect(&BoxEnclosure::UNIT);
        }

        let mut bounds = Vec::with_capacity(maps.len());
        for (k, m) in maps.iter().enumerate() {
            bounds.push(DerivativeBounds {
                fx: range_bound(&m.fx, unit, unit, depth).map_err(wrap(k))?,
                gx: range_bound(&m.gx, unit, unit, depth).map_err(wrap(k))?,
                gy: range_bound(&m.gy, unit, unit, depth).map_err(wrap(k))?,
            });
        }

        let mut contraction_sup: f64 = 0.0;
        for (k, b) in bounds.iter().enumerate() {
            let bound = spectral_norm_bound(b.fx.mag(), b.gx.mag(), b.gy.mag());
            if !(bound < 1.0) {
                return Err(IfsError::NotContraction { map: k, bound });
            }
            contraction_sup = contraction_sup.max(bound);
        }

        let mut domination_margin = f64::INFINITY;
        let mut eta: f64 = 0.0;
        for (k, b) in bounds.iter().enumerate() {
            let fx_inf = b.fx.mig();
            let gy_sup = b.gy.mag();
            let gy_inf = b.gy.mig();
            if !(fx_inf > gy_sup && gy_inf > 0.0) {
                return Err(IfsError::DominationViolation {
                    map: k,
                    fx: abs_interval(b.fx),
                    gy: abs_interval(b.gy),
                });
            }
            domination_margin = domination_margin.min(gy_inf);
            eta = eta.max(gy_sup / fx_inf);
        }

        for (m, b) in maps.iter_mut().zip(&bounds) {
            m.bounds = Some(*b);
        }

        let mut sys = TriangularSystem {
            maps,
            domination_margin,
            ssc_gap: 0.0,
            contraction_sup,
            eta,
            options,
        };
        sys.ssc_gap = sys.separation_gap(options.ssc_depth)?;
        Ok(sys)
    }

    fn separation_gap(&self, depth: usize) -> Result<f64, IfsError> {
        let depth = depth.max(1);
        // (first symbol, enclosure) for every word of the current length,
        // built by prepending symbols: E(iv) = S_i(E(v)).
        let mut level: Vec<(usize, BoxEnclosure)> = self.maps.iter().enumerate().map(|(i, m)| (i, m.image)).collect();
        for _ in 1..depth {
            let mut next = Vec::with_capacity(level.len() * self.maps.len());
            for (i, m) in self.maps.iter().enumerate() {
                for (_, b) in &level {
                    next.push((i, m.apply_box(b)));
                }
            }
            level = next;
        }
        let n = self.maps.len();
        let mut groups: Vec<Vec<BoxEnclosure>> = vec![Vec::new(); n];
        for (i, b) in level {
            groups[i].push(b);
        }
        let mut gap = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                let d = groups[a]
                    .par_iter()
                    .map(|p| groups[b].iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min))
                    .reduce(|| f64::INFINITY, f64::min);
                if !(d > 0.0) {
                    return Err(IfsError::SscUndecided {
                        depth,
                        first: a,
                        second: b,
                    });
                }
                gap = gap.min(d);
            }
        }
        Ok(gap)
    }

    pub fn maps(&self) -> &[TriangularMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// `d`: lower bound of `|g_{i,y}|` over all maps.
    pub fn domination_margin(&self) -> f64 {
        self.domination_margin
    }

    /// Certified lower bound of the gap between first-level pieces.
    pub fn ssc_gap(&self) -> f64 {
        self.ssc_gap
    }

    /// Upper bound of every Jacobian spectral norm.
    pub fn contraction_sup(&self) -> f64 {
        self.contraction_sup
    }

    /// Sound upper bound of `sup |g_{i,y}(a)| / |f_{i,x}(b)|`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn options(&self) -> ValidationOptions {
        self.options
    }

    pub fn bounds(&self, i: usize) -> &DerivativeBounds {
        self.maps[i].bounds.as_ref().expect("validated map")
    }

    pub fn check_measure(&self, m: &SymbolicMeasure) -> Result<(), IfsError> {
        if m.symbols() != self.len() {
            return Err(IfsError::AlphabetMismatch {
                maps: self.len(),
                measure: m.symbols(),
            });
        }
        Ok(())
    }

    /// `S_{w_1} ∘ ⋯ ∘ S_{w_n}(p)`: the last symbol acts first.
    pub fn apply_word(&self, w: &Word, p: Point) -> Point {
        self.apply_symbols(w.symbols(), p)
    }

    #[inline]
    pub fn apply_symbols(&self, symbols: &[usize], p: Point) -> Point {
        symbols.iter().rev().fold(p, |q, &s| self.maps[s].apply(q))
    }

    /// Smallest `n` with `contraction_sup^n · √2 ≤ tol`.
    pub fn coding_depth(&self, tol: f64) -> usize {
        assert!(tol > 0.0, "coding tolerance must be positive");
        let mut diameter = std::f64::consts::SQRT_2;
        let mut n = 0;
        while diameter > tol {
            diameter *= self.contraction_sup;
            n += 1;
        }
        n
    }

    /// `Π(seq)` to within `tol`, by applying `seq|n` to the centre.
    pub fn coding_map(&self, seq: &SymbolSequence, tol: f64) -> Point {
        let n = self.coding_depth(tol);
        self.apply_word(&seq.prefix(n), CENTER)
    }

    /// Box enclosing `S_w([0,1]^2)`.
    pub fn cylinder_enclosure(&self, w: &Word) -> BoxEnclosure {
        w.symbols()
            .iter()
            .rev()
            .fold(BoxEnclosure::UNIT, |b, &s| self.maps[s].apply_box(&b))
    }

    /// `count` independent draws of `Π(i)` with `i ~ m`, each carrying
    /// weight `1/count`.
    pub fn sample_attractor(&self, m: &SymbolicMeasure, count: usize, seed: u64) -> PointCloud {
        PointCloud {
            points: self.sample_coded(m, count, 0, seed).points,
        }
    }

    /// Attractor samples together with the first `prefix_len` symbols of
    /// each coding sequence.
    pub fn sample_coded(&self, m: &SymbolicMeasure, count: usize, prefix_len: usize, seed: u64) -> CodedSample {
        let depth = self.coding_depth(SAMPLE_TOLERANCE).max(prefix_len);
        let blocks = count.div_ceil(SAMPLE_BLOCK);
        let parts: Vec<(Vec<Point>, Vec<u16>)> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = child_rng(seed, b as u64);
                let len = SAMPLE_BLOCK.min(count - b * SAMPLE_BLOCK);
                let mut points = Vec::with_capacity(len);
                let mut prefixes = Vec::with_capacity(len * prefix_len);
                let mut buf = Vec::with_capacity(depth);
                for _ in 0..len {
                    buf.clear();
                    m.extend_sample(&mut rng, depth, &mut buf);
                    points.push(self.apply_symbols(&buf, CENTER));
                    prefixes.extend(buf[..prefix_len].iter().map(|&s| s as u16));
                }
                (points, prefixes)
            })
            .collect();
        let mut points = Vec::with_capacity(count);
        let mut prefixes = Vec::with_capacity(count * prefix_len);
        for (p, w) in parts {
            points.extend(p);
            prefixes.extend(w);
        }
        CodedSample {
            points,
            prefixes,
            prefix_len,
        }
    }
}

fn abs_interval(i: Interval) -> Interval {
    Interval::new(i.mig(), i.mag())
}

/// Equally weighted sample of the pushforward measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Attractor sample with stored coding prefixes (flat, `prefix_len` per point).
#[derive(Debug, Clone)]
pub struct CodedSample {
    pub points: Vec<Point>,
    prefixes: Vec<u16>,
    prefix_len: usize,
}

impl CodedSample {
    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn prefix(&self, k: usize) -> &[u16] {
        &self.prefixes[k * self.prefix_len..(k + 1) * self.prefix_len]
    }

    /// Whether sample `k` lies in the symbolic cylinder `[w]`.
    pub fn in_cylinder(&self, k: usize, w: &Word) -> bool {
        assert!(w.len() <= self.prefix_len, "word longer than stored prefixes");
        self.prefix(k).iter().zip(w.symbols()).all(|(&a, &b)| a as usize == b)
    }
}
