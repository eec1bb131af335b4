//! Reference systems with known dimension data.

use crate::config::Config;
use crate::dimension::ly_dimension;
use crate::ifs::TriangularSystem;
use crate::measure::SymbolicMeasure;

/// Closed-form values; `None` where no closed form is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expected {
    pub h: f64,
    pub chi1: Option<f64>,
    pub chi2: Option<f64>,
    pub t: Option<f64>,
    pub ly_dim: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub config: &'static str,
    pub expected: Expected,
    pub notes: &'static str,
}

impl Benchmark {
    pub fn parse(&self) -> Config {
        Config::parse(self.config).expect("shipped config parses")
    }
}

fn ln(x: f64) -> f64 {
    x.ln()
}

fn affine(h: f64, chi1: f64, chi2: f64, t: f64) -> Expected {
    Expected {
        h,
        chi1: Some(chi1),
        chi2: Some(chi2),
        t: Some(t),
        ly_dim: Some(ly_dimension(h, chi1, chi2, t).expect("valid closed form")),
    }
}

pub fn list_benchmarks() -> Vec<Benchmark> {
    // column chain of markov1 and its entropy
    let h_col = (4.0 / 7.0) * (0.7 * ln(0.7) + 0.3 * ln(0.3)) + (3.0 / 7.0) * (0.4 * ln(0.4) + 0.6 * ln(0.6));
    let h_markov1 = h_col - ln(2.0);
    vec![
        Benchmark {
            name: "bm4",
            config: include_str!("../benchmarks/bm4.cfg"),
            expected: affine(-ln(4.0), -ln(2.0), -ln(8.0), 1.0),
            notes: "the x-projection is Lebesgue measure, so t = 1",
        },
        Benchmark {
            name: "collapse2",
            config: include_str!("../benchmarks/collapse2.cfg"),
            expected: affine(-ln(2.0), -ln(3.0), -ln(4.0), ln(2.0) / ln(3.0)),
            notes: "separated projection, t = h/chi1 and the formula collapses to h/chi1",
        },
        Benchmark {
            name: "nonlin1",
            config: include_str!("../benchmarks/nonlin1.cfg"),
            expected: Expected {
                h: -ln(4.0),
                chi1: None,
                chi2: None,
                t: None,
                ly_dim: None,
            },
            notes: "no closed form; the formula is compared with the local dimension estimate",
        },
        Benchmark {
            name: "markov1",
            config: include_str!("../benchmarks/markov1.cfg"),
            expected: affine(h_markov1, -ln(2.0), -ln(8.0), h_col / -ln(2.0)),
            notes: "t is the dimension of the column chain on the binary tiling, h_col/log(1/2)",
        },
    ]
}

pub fn benchmark(name: &str) -> Option<Benchmark> {
    list_benchmarks().into_iter().find(|b| b.name == name)
}

/// Validated system of a shipped benchmark.
pub fn system(name: &str) -> Option<TriangularSystem> {
    Some(benchmark(name)?.parse().system().expect("shipped system validates"))
}

pub fn measure(name: &str) -> Option<SymbolicMeasure> {
    Some(benchmark(name)?.parse().measure())
}
