//! Quasi-Bernoulli measures on the symbol space: positive Bernoulli measures
//! and positive stationary Markov measures.
//!
//! Both classes have exact cylinder masses. Entropy follows the non-positive
//! sign convention `h = lim (1/n) log m([i|n]) ≤ 0`.

use rand::Rng as _;
use thiserror::Error;

use crate::ifs::Word;
use crate::rng::{rng_from, Rng};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;
const MAX_ENUMERATED_WORDS: u64 = 1_000_000;
const MAX_ENUMERATED_PAIRS: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("a measure needs at least two symbols, got {0}")]
    TooFewSymbols(usize),
    #[error("probability {value} at position {index} is not strictly positive")]
    NonPositive { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("transition matrix has {entries} entries, which is not a square number")]
    NotSquare { entries: usize },
    #[error("row {row} of the transition matrix sums to {sum}, expected 1")]
    RowNotNormalized { row: usize, sum: f64 },
    #[error("initial distribution is not stationary (residual {residual:e})")]
    NotStationary { residual: f64 },
    #[error("initial distribution has {got} entries for {expected} symbols")]
    LengthMismatch { expected: usize, got: usize },
    #[error("enumerating words up to length {max_len} over {symbols} symbols is too large")]
    EnumerationTooLarge { symbols: usize, max_len: usize },
}

/// Entropy in the non-positive convention.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Entropy(f64);

impl Entropy {
    pub fn value(self) -> f64 {
        self.0
    }

    /// `|h|`, the usual positive entropy.
    pub fn positive(self) -> f64 {
        -self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Bernoulli {
        p: Vec<f64>,
        cumulative: Vec<f64>,
    },
    Markov {
        initial: Vec<f64>,
        /// row-major `n × n`
        transition: Vec<f64>,
        initial_cumulative: Vec<f64>,
        row_cumulative: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicMeasure {
    symbols: usize,
    kind: Kind,
}

fn check_vector(v: &[f64]) -> Result<Vec<f64>, MeasureError> {
    for (index, &value) in v.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(MeasureError::NonPositive { index, value });
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(MeasureError::NotNormalized { sum });
    }
    Ok(v.iter().map(|x| x / sum).collect())
}

fn cumulative(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = v
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

fn draw(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

/// Stationary distribution of a positive stochastic matrix by Gaussian
/// elimination on `(Pᵀ − I)π = 0`, with the last equation replaced by `Σπ = 1`.
fn stationary(p: &[f64], n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n * (n + 1)];
    for i in 0..n {
        for j in 0..n {
            a[i * (n + 1) + j] = p[j * n + i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1) * (n + 1) + j] = 1.0;
    }
    a[(n - 1) * (n + 1) + n] = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r * (n + 1) + col].abs().total_cmp(&a[s * (n + 1) + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..=n {
                a.swap(col * (n + 1) + k, pivot * (n + 1) + k);
            }
        }
        let d = a[col * (n + 1) + col];
        for r in 0..n {
            if r != col {
                let f = a[r * (n + 1) + col] / d;
                if f != 0.0 {
                    for k in col..=n {
                        a[r * (n + 1) + k] -= f * a[col * (n + 1) + k];
                    }
                }
            }
        }
    }
    let pi: Vec<f64> = (0..n).map(|i| a[i * (n + 1) + n] / a[i * (n + 1) + i]).collect();
    let s: f64 = pi.iter().sum();
    pi.into_iter().map(|x| x / s).collect()
}

impl SymbolicMeasure {
    pub fn bernoulli(p: &[f64]) -> Result<SymbolicMeasure, MeasureError> {
        if p.len() < 2 {
            return Err(MeasureError::TooFewSymbols(p.len()));
        }
        let p = check_vector(p)?;
        Ok(SymbolicMeasure {
            symbols: p.len(),
            kind: Kind::Bernoulli {
                cumulative: cumulative(&p),
                p,
            },
        })
    }

    pub fn uniform(symbols: usize) -> Result<SymbolicMeasure, MeasureError> {
        SymbolicMeasure::bernoulli(&vec![1.0 / symbols as f64; symbols])
    }

    /// Stationary Markov measure for a row-major positive stochastic matrix.
    pub fn markov(transition: &[f64]) -> Result<SymbolicMeasure, MeasureError> {
        let n = (transition.len() as f64).sqrt().round() as usize;
        if n * n != transition.len() {
            return Err(MeasureError::NotSquare {
                entries: transition.len(),
            });
        }
        if n < 2 {
            return Err(MeasureError::TooFewSymbols(n));
        }
        let mut rows = Vec::with_capacity(n * n);
        for (row, chunk) in transition.chunks(n).enumerate() {
            let normalized = check_vector(chunk).map_err(|e| match e {
                MeasureError::NonPositive { index, value } => MeasureError::NonPositive {
                    index: row * n + index,
                    value,
                },
                MeasureError::NotNormalized { sum } => MeasureError::RowNotNormalized { row, sum },
                other => other,
            })?;
            rows.extend(normalized);
        }
        let initial = stationary(&rows, n);
        Self::assemble(initial, rows, n)
    }

    /// Markov measure with an explicit initial distribution, which must be
    /// stationary for the chain.
    pub fn markov_with_initial(
        initial: &[f64],
        transition: &[f64],
    ) -> Result<SymbolicMeasure, MeasureError> {
        let chain = SymbolicMeasure::markov(transition)?;
        let n = chain.symbols;
        if initial.len() != n {
            return Err(MeasureError::LengthMismatch {
                expected: n,
                got: initial.len(),
            });
        }
        let initial = check_vector(initial)?;
        let Kind::Markov { transition, .. } = &chain.kind else {
            unreachable!()
        };
        let residual = (0..n)
            .map(|j| {
                let image: f64 = (0..n).map(|i| initial[i] * transition[i * n + j]).sum();
                (image - initial[j]).abs()
            })
            .fold(0.0, f64::max);
        if residual > NORMALIZATION_TOLERANCE {
            return Err(MeasureError::NotStationary { residual });
        }
        Self::assemble(initial, transition.clone(), n)
    }

    fn assemble(initial: Vec<f64>, transition: Vec<f64>, n: usize) -> Result<SymbolicMeasure, MeasureError> {
        let row_cumulative = transition.chunks(n).flat_map(cumulative).collect();
        Ok(SymbolicMeasure {
            symbols: n,
            kind: Kind::Markov {
                initial_cumulative: cumulative(&initial),
                initial,
                transition,
                row_cumulative,
            },
        })
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self.kind, Kind::Bernoulli { .. })
    }

    /// Bernoulli with all probabilities equal.
    pub fn is_uniform(&self) -> bool {
        match &self.kind {
            Kind::Bernoulli { p, .. } => p.iter().all(|&x| x == p[0]),
            Kind::Markov { .. } => false,
        }
    }

    /// Probability of each symbol under the one-dimensional marginal.
    pub fn marginal(&self) -> &[f64] {
        match &self.kind {
            Kind::Bernoulli { p, .. } => p,
            Kind::Markov { initial, .. } => initial,
        }
    }

    /// Row-major transition matrix, `None` for Bernoulli measures.
    pub fn transition(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Bernoulli { .. } => None,
            Kind::Markov { transition, .. } => Some(transition),
        }
    }

    /// `m([w])`; the empty word has mass one.
    pub fn cylinder_mass(&self, w: &Word) -> f64 {
        let s = w.symbols();
        match &self.kind {
            Kind::Bernoulli { p, .. } => s.iter().map(|&k| p[k]).product(),
            Kind::Markov { initial, transition, .. } => match s.first() {
                None => 1.0,
                Some(&first) => {
                    let n = self.symbols;
                    initial[first] * s.windows(2).map(|ab| transition[ab[0] * n + ab[1]]).product::<f64>()
                }
            },
        }
    }

    /// `log m([w])` accumulated additively, so long words never underflow.
    pub fn log_cylinder_mass(&self, w: &Word) -> f64 {
        self.mean_log_mass(w.symbols()) * w.len() as f64
    }

    /// `(1/n) log m([w])` for a word of length `n ≥ 1`.
    ///
    /// Symbol (or transition) occurrences are counted and combined per
    /// distinct probability value, so a uniform Bernoulli measure returns
    /// exactly `log(1/N)`.
    pub fn mean_log_mass(&self, s: &[usize]) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        let len = s.len() as f64;
        match &self.kind {
            Kind::Bernoulli { p, .. } => {
                let mut counts = vec![0usize; self.symbols];
                for &k in s {
                    counts[k] += 1;
                }
                grouped_mean(p, &counts, len)
            }
            Kind::Markov { initial, transition, .. } => {
                let n = self.symbols;
                let mut counts = vec![0usize; n * n];
                for ab in s.windows(2) {
                    counts[ab[0] * n + ab[1]] += 1;
                }
                initial[s[0]].ln() / len + grouped_mean(transition, &counts, len)
            }
        }
    }

    /// Exact quasi-Bernoulli constant `L`.
    ///
    /// For a stationary chain `m([ij]) = m([i]) · P(last i, first j)/π(first j) · m([j])`,
    /// so `L` is the largest of these ratios and their inverses.
    pub fn qb_constant(&self) -> f64 {
        match &self.kind {
            Kind::Bernoulli { .. } => 1.0,
            Kind::Markov { initial, transition, .. } => {
                let n = self.symbols;
                let mut l: f64 = 1.0;
                for a in 0..n {
                    for b in 0..n {
                        let r = transition[a * n + b] / initial[b];
                        l = l.max(r).max(1.0 / r);
                    }
                }
                l
            }
        }
    }

    /// Brute-force quasi-Bernoulli constant over all pairs of words
    /// `1 ≤ |i|, |j| ≤ max_len`.
    pub fn verify_quasi_bernoulli(&self, max_len: usize) -> Result<f64, MeasureError> {
        let too_large = MeasureError::EnumerationTooLarge {
            symbols: self.symbols,
            max_len,
        };
        let top = (self.symbols as u64).checked_pow(max_len as u32).ok_or(too_large.clone())?;
        if top > MAX_ENUMERATED_WORDS {
            return Err(too_large);
        }
        let words: Vec<Word> = (1..=max_len).flat_map(|len| Word::all(self.symbols, len)).collect();
        let count = words.len() as u64;
        if count * count > MAX_ENUMERATED_PAIRS {
            return Err(too_large);
        }
        let masses: Vec<f64> = words.iter().map(|w| self.cylinder_mass(w)).collect();
        let mut l: f64 = 1.0;
        for (i, wi) in words.iter().enumerate() {
            for (j, wj) in words.iter().enumerate() {
                let joint = self.cylinder_mass(&wi.concat(wj));
                let r = joint / (masses[i] * masses[j]);
                l = l.max(r).max(1.0 / r);
            }
        }
        Ok(l)
    }

    /// Closed-form entropy: `Σ p log p` or `Σ_a π_a Σ_b P_ab log P_ab`.
    pub fn entropy_closed_form(&self) -> Entropy {
        match &self.kind {
            Kind::Bernoulli { p, .. } if self.is_uniform() => Entropy(-(p.len() as f64).ln()),
            Kind::Bernoulli { p, .. } => Entropy(p.iter().map(|x| x * x.ln()).sum()),
            Kind::Markov { initial, transition, .. } => {
                let n = self.symbols;
                Entropy(
                    (0..n)
                        .map(|a| {
                            let row = &transition[a * n..(a + 1) * n];
                            initial[a] * row.iter().map(|x| x * x.ln()).sum::<f64>()
                        })
                        .sum(),
                )
            }
        }
    }

    /// Appends `n` symbols drawn by ancestral sampling, one uniform variate
    /// per symbol, so that shorter draws from the same stream are prefixes
    /// of longer ones.
    pub fn extend_sample(&self, rng: &mut Rng, n: usize, out: &mut Vec<usize>) {
        out.reserve(n);
        match &self.kind {
            Kind::Bernoulli { cumulative, .. } => {
                for _ in 0..n {
                    out.push(draw(cumulative, rng.random::<f64>()));
                }
            }
            Kind::Markov {
                initial_cumulative,
                row_cumulative,
                ..
            } => {
                let k = self.symbols;
                for _ in 0..n {
                    let u = rng.random::<f64>();
                    let next = match out.last() {
                        None => draw(initial_cumulative, u),
                        Some(&prev) => draw(&row_cumulative[prev * k..(prev + 1) * k], u),
                    };
                    out.push(next);
                }
            }
        }
    }

    pub fn sample_word(&self, n: usize, seed: u64) -> Word {
        let mut rng = rng_from(seed);
        let mut out = Vec::with_capacity(n);
        self.extend_sample(&mut rng, n, &mut out);
        Word::from_symbols_unchecked(out)
    }
}

fn grouped_mean(probs: &[f64], counts: &[usize], len: f64) -> f64 {
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for (&p, &c) in probs.iter().zip(counts) {
        if c == 0 {
            continue;
        }
        match groups.iter_mut().find(|(q, _)| q.to_bits() == p.to_bits()) {
            Some(g) => g.1 += c,
            None => groups.push((p, c)),
        }
    }
    groups.iter().map(|&(p, c)| (c as f64 / len) * p.ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::Word;

    fn example_chain() -> SymbolicMeasure {
        SymbolicMeasure::markov(&[0.7, 0.3, 0.4, 0.6]).unwrap()
    }

    fn w(s: &[usize]) -> Word {
        Word::from_symbols_unchecked(s.to_vec())
    }

    #[test]
    fn bernoulli_cylinder() {
        let m = SymbolicMeasure::bernoulli(&[0.5, 0.5]).unwrap();
        assert_eq!(m.cylinder_mass(&w(&[0, 1, 0])), 0.125);
        assert_eq!(m.cylinder_mass(&Word::empty()), 1.0);
    }

    #[test]
    fn markov_stationary_and_cylinder() {
        let m = example_chain();
        let pi = m.marginal();
        assert!((pi[0] - 4.0 / 7.0).abs() < 1e-15);
        assert!((pi[1] - 3.0 / 7.0).abs() < 1e-15);
        assert!((m.cylinder_mass(&w(&[0, 1])) - 4.0 / 7.0 * 0.3).abs() < 1e-15);
        assert!((m.cylinder_mass(&w(&[0, 1])) - 0.171429).abs() < 1e-6);
    }

    #[test]
    fn qb_constants() {
        assert_eq!(SymbolicMeasure::uniform(3).unwrap().qb_constant(), 1.0);
        // ratios P(a,b)/π(b): 1.225, 0.7, 0.7, 1.4
        assert!((example_chain().qb_constant() - 10.0 / 7.0).abs() < 1e-14);
        // a row equal to π contributes only ratios of one
        let m = SymbolicMeasure::markov(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((m.qb_constant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn brute_force_quasi_bernoulli() {
        let b = SymbolicMeasure::bernoulli(&[0.2, 0.3, 0.5]).unwrap();
        assert!((b.verify_quasi_bernoulli(3).unwrap() - 1.0).abs() < 1e-12);
        let m = example_chain();
        let l4 = m.verify_quasi_bernoulli(4).unwrap();
        assert!((l4 - m.qb_constant()).abs() < 1e-10);
        assert!(m.verify_quasi_bernoulli(2).unwrap() <= l4);
        assert!(matches!(
            SymbolicMeasure::uniform(10).unwrap().verify_quasi_bernoulli(7),
            Err(MeasureError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn entropies() {
        let h = SymbolicMeasure::uniform(2).unwrap().entropy_closed_form().value();
        assert!((h + std::f64::consts::LN_2).abs() < 1e-15);
        let h = SymbolicMeasure::uniform(4).unwrap().entropy_closed_form().value();
        assert!((h + 4f64.ln()).abs() < 1e-15);
        let expected = 4.0 / 7.0 * (0.7 * 0.7f64.ln() + 0.3 * 0.3f64.ln())
            + 3.0 / 7.0 * (0.4 * 0.4f64.ln() + 0.6 * 0.6f64.ln());
        let h = example_chain().entropy_closed_form().value();
        assert!((h - expected).abs() < 1e-15);
        assert!((h + 0.637499).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(SymbolicMeasure::bernoulli(&[1.0]), Err(MeasureError::TooFewSymbols(1))));
        assert!(matches!(
            SymbolicMeasure::bernoulli(&[0.5, 0.4]),
            Err(MeasureError::NotNormalized { .. })
        ));
        assert!(matches!(
            SymbolicMeasure::bernoulli(&[1.0, 0.0]),
            Err(MeasureError::NonPositive { index: 1, .. })
        ));
        assert!(matches!(
            SymbolicMeasure::markov(&[0.5, 0.5, 0.5]),
            Err(MeasureError::NotSquare { entries: 3 })
        ));
        assert!(matches!(
            SymbolicMeasure::markov(&[0.5, 0.5, 0.1, 0.8]),
            Err(MeasureError::RowNotNormalized { row: 1, .. })
        ));
        assert!(matches!(
            SymbolicMeasure::markov_with_initial(&[0.5, 0.5], &[0.7, 0.3, 0.4, 0.6]),
            Err(MeasureError::NotStationary { .. })
        ));
        assert!(SymbolicMeasure::markov_with_initial(&[4.0 / 7.0, 3.0 / 7.0], &[0.7, 0.3, 0.4, 0.6]).is_ok());
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_consistent() {
        let m = example_chain();
        let a = m.sample_word(50, 9);
        assert_eq!(a, m.sample_word(50, 9));
        assert_eq!(&m.sample_word(20, 9).symbols()[..], &a.symbols()[..20]);
        assert_ne!(a, m.sample_word(50, 10));
    }

    #[test]
    fn skewed_bernoulli_first_symbol() {
        let m = SymbolicMeasure::bernoulli(&[1.0 - 1e-9, 0.5e-9, 0.5e-9]).unwrap();
        let word = m.sample_word(1_000_000, 3);
        let zeros = word.symbols().iter().filter(|&&s| s == 0).count();
        assert!(zeros as f64 / 1e6 >= 1.0 - 1e-6);
    }

    #[test]
    fn empirical_frequencies() {
        let p = [0.2, 0.3, 0.5];
        let m = SymbolicMeasure::bernoulli(&p).unwrap();
        let n = 100_000;
        let word = m.sample_word(n, 77);
        for (k, &pk) in p.iter().enumerate() {
            let f = word.symbols().iter().filter(|&&s| s == k).count() as f64 / n as f64;
            assert!((f - pk).abs() <= 3.0 / (n as f64).sqrt(), "symbol {k}: {f}");
        }
    }

    #[test]
    fn uniform_mean_log_mass_is_exact() {
        let m = SymbolicMeasure::uniform(4).unwrap();
        let word = m.sample_word(10_000, 1);
        assert_eq!(m.mean_log_mass(word.symbols()), 0.25f64.ln());
    }
}
