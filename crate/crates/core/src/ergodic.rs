//! Monte Carlo estimates of entropy and Lyapunov exponents.
//!
//! Trial `k` draws its symbols from the stream seeded by
//! [`derive_seed`]`(seed, k)`, so estimates are reproducible bit for bit and
//! independent of the number of worker threads.

use rayon::prelude::*;

pub use crate::cocycle::BasePolicy;
use crate::cocycle::{cocycle_of_symbols, BASE_POINT_TOLERANCE};
use crate::ifs::TriangularSystem;
use crate::measure::SymbolicMeasure;
use crate::rng::{derive_seed, rng_from};
use crate::stats::Welford;

/// Mean over trials of a per-trial `(1/n)`-normalized quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgodicEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub trials: usize,
}

impl ErgodicEstimate {
    fn from_values(values: &[f64], n: usize) -> ErgodicEstimate {
        let w: Welford = values.iter().copied().collect();
        ErgodicEstimate {
            value: w.mean(),
            stderr: w.stderr(),
            n,
            trials: values.len(),
        }
    }
}

fn check(n: usize, trials: usize) {
    assert!(n >= 1, "word length must be at least 1");
    assert!(trials >= 2, "at least two trials are needed for an error bar");
}

/// `(1/n) log m([i|n])` averaged over independent `m`-typical words.
pub fn estimate_entropy(m: &SymbolicMeasure, n: usize, trials: usize, seed: u64) -> ErgodicEstimate {
    check(n, trials);
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = m.sample_word(n, derive_seed(seed, t as u64));
            m.mean_log_mass(w.symbols())
        })
        .collect();
    ErgodicEstimate::from_values(&values, n)
}

/// `(χ1, χ2)` from `(1/n) log α_k(D_a S_{i|n})` with `i ~ m`.
pub fn estimate_lyapunov(
    sys: &TriangularSystem,
    m: &SymbolicMeasure,
    n: usize,
    trials: usize,
    policy: BasePolicy,
    seed: u64,
) -> (ErgodicEstimate, ErgodicEstimate) {
    check(n, trials);
    let tail = match policy {
        BasePolicy::ShiftedCodingPoint => sys.coding_depth(BASE_POINT_TOLERANCE),
        BasePolicy::Fixed(_) => 0,
    };
    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(derive_seed(seed, t as u64));
            let mut symbols = Vec::with_capacity(n + tail);
            m.extend_sample(&mut rng, n + tail, &mut symbols);
            let sv = cocycle_of_symbols(sys, &symbols, n, policy).singular_values();
            (sv.log_alpha1 / n as f64, sv.log_alpha2 / n as f64)
        })
        .collect();
    let (a1, a2): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    (ErgodicEstimate::from_values(&a1, n), ErgodicEstimate::from_values(&a2, n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
}

/// Runs `estimator` at every word length of an increasing grid.
pub fn convergence_diagnostic(estimator: impl Fn(usize) -> ErgodicEstimate, n_grid: &[usize]) -> Vec<ConvergenceRow> {
    assert!(n_grid.windows(2).all(|w| w[0] < w[1]), "n_grid must be increasing");
    n_grid
        .iter()
        .map(|&n| {
            let e = estimator(n);
            ConvergenceRow {
                n,
                value: e.value,
                stderr: e.stderr,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::ifs::CENTER;

    #[test]
    fn uniform_entropy_is_exact() {
        let m = SymbolicMeasure::uniform(2).unwrap();
        let e = estimate_entropy(&m, 100, 8, 1);
        assert_eq!(e.value, -(2f64.ln()));
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn skewed_entropy_near_closed_form() {
        let m = SymbolicMeasure::bernoulli(&[0.3, 0.7]).unwrap();
        let e = estimate_entropy(&m, 10_000, 64, 5);
        let exact = 0.3 * 0.3f64.ln() + 0.7 * 0.7f64.ln();
        assert!((e.value - exact).abs() <= 0.01f64.max(3.0 * e.stderr), "{e:?}");
        let mk = SymbolicMeasure::markov(&[0.7, 0.3, 0.4, 0.6]).unwrap();
        let e = estimate_entropy(&mk, 10_000, 64, 6);
        assert!((e.value + 0.637499).abs() <= 0.01f64.max(3.0 * e.stderr), "{e:?}");
    }

    #[test]
    fn diagonal_exponents_are_exact() {
        let sys = benchmarks::system("bm4").unwrap();
        let m = SymbolicMeasure::bernoulli(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let (c1, c2) = estimate_lyapunov(&sys, &m, 50, 4, BasePolicy::default(), 2);
        assert!((c1.value - 0.5f64.ln()).abs() < 1e-12 && c1.stderr < 1e-12);
        assert!((c2.value - 0.125f64.ln()).abs() < 1e-12 && c2.stderr < 1e-12);
    }

    #[test]
    fn unequal_ratios_average() {
        let sys = crate::config::Config::parse(
            "[system]\nn = 2\n[map 0]\nf = x/2\ng = y/4\n[map 1]\nf = x/3 + 2/3\ng = y/4 + 3/4\n[measure]\nkind = bernoulli\np = 0.5 0.5\n",
        )
        .unwrap()
        .system()
        .unwrap();
        let m = SymbolicMeasure::uniform(2).unwrap();
        let (c1, c2) = estimate_lyapunov(&sys, &m, 2000, 32, BasePolicy::default(), 3);
        let exact = 0.5 * (0.5f64.ln() + (1.0f64 / 3.0).ln());
        assert!((c1.value - exact).abs() <= 3.0 * c1.stderr + 1e-3, "{c1:?}");
        assert!((c2.value - 0.25f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_policy_close() {
        let sys = benchmarks::system("nonlin1").unwrap();
        let m = SymbolicMeasure::uniform(4).unwrap();
        let a = estimate_lyapunov(&sys, &m, 500, 8, BasePolicy::ShiftedCodingPoint, 9);
        assert_eq!(a, estimate_lyapunov(&sys, &m, 500, 8, BasePolicy::ShiftedCodingPoint, 9));
        let b = estimate_lyapunov(&sys, &m, 500, 8, BasePolicy::Fixed(CENTER), 9);
        assert!((a.0.value - b.0.value).abs() < 0.01);
        assert!(a.1.value < a.0.value && a.0.value < 0.0);
    }

    #[test]
    fn convergence_table() {
        let m = SymbolicMeasure::uniform(3).unwrap();
        let rows = convergence_diagnostic(|n| estimate_entropy(&m, n, 4, 1), &[1, 10, 100]);
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| (r.value + 3f64.ln()).abs() < 1e-15));
    }
}
