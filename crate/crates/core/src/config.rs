//! Line-oriented system descriptions.
//!
//! ```text
//! [system]
//! n = 2
//! [map 0]
//! f = x/3
//! g = y/4
//! [map 1]
//! f = x/3 + 2/3
//! g = y/4 + 3/4
//! [measure]
//! kind = bernoulli
//! p = 0.5 0.5
//! [analysis]
//! seed = 7
//! ```
//!
//! `#` starts a comment. Keys are lowercase, vectors are space separated.
//! The analysis section is optional and every key in it has a default.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::expr::{ExprError, Expression};
use crate::ifs::{IfsError, TriangularMap, TriangularSystem, ValidationOptions};
use crate::measure::{MeasureError, SymbolicMeasure};
use crate::stats::geometric_grid;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: map {map}, key {key}: {source}")]
    Expression {
        line: usize,
        map: usize,
        key: &'static str,
        #[source]
        source: ExprError,
    },
    #[error("line {line}: [measure] section: {source}")]
    Measure {
        line: usize,
        #[source]
        source: MeasureError,
    },
    #[error("line {line}: [measure] section: {message}")]
    MeasureSpec { line: usize, message: String },
    #[error("missing {what}")]
    Missing { what: String },
    #[error(transparent)]
    System(#[from] IfsError),
}

impl ConfigError {
    /// Line the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line, .. }
            | ConfigError::Expression { line, .. }
            | ConfigError::Measure { line, .. }
            | ConfigError::MeasureSpec { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Bernoulli(Vec<f64>),
    /// Row-major transition matrix of a stationary chain.
    Markov(Vec<f64>),
}

impl MeasureSpec {
    pub fn build(&self) -> Result<SymbolicMeasure, MeasureError> {
        match self {
            MeasureSpec::Bernoulli(p) => SymbolicMeasure::bernoulli(p),
            MeasureSpec::Markov(t) => SymbolicMeasure::markov(t),
        }
    }
}

/// Geometric radius grid `start → end` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiiSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl RadiiSpec {
    pub fn grid(&self) -> Vec<f64> {
        geometric_grid(self.start, self.end, self.count)
    }
}

impl Default for RadiiSpec {
    fn default() -> Self {
        RadiiSpec {
            start: 10f64.powf(-1.5),
            end: 1e-3,
            count: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub seq_len: usize,
    pub trials: usize,
    pub samples: usize,
    pub probes: usize,
    pub radii: RadiiSpec,
    pub seed: u64,
    pub validation_depth: u32,
    pub ssc_depth: usize,
    pub constants_depth: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            seq_len: 2000,
            trials: 64,
            samples: 1_000_000,
            probes: 64,
            radii: RadiiSpec::default(),
            seed: 1,
            validation_depth: 8,
            ssc_depth: 5,
            constants_depth: 12,
        }
    }
}

impl AnalysisSettings {
    pub fn validation_options(&self) -> ValidationOptions {
        ValidationOptions {
            derivative_depth: self.validation_depth,
            ssc_depth: self.ssc_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub f: String,
    pub g: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub maps: Vec<MapSpec>,
    pub measure: MeasureSpec,
    pub analysis: AnalysisSettings,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    System,
    Map(usize),
    Measure,
    Analysis,
}

fn syntax(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Syntax {
        line,
        message: message.into(),
    }
}

fn number<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| syntax(line, format!("invalid value '{value}' for {key}")))
}

fn vector(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split_whitespace().map(|v| number(line, key, v)).collect()
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Config::parse(&text)
    }

    /// Parses and checks a config. Expressions, the measure and the radius
    /// grid are validated here; the system hypotheses are checked by
    /// [`Config::system`].
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut section = Section::None;
        let mut n: Option<(usize, usize)> = None;
        let mut maps: Vec<(Option<(usize, String)>, Option<(usize, String)>, usize)> = Vec::new();
        let mut kind: Option<(usize, String)> = None;
        let mut p: Option<(usize, Vec<f64>)> = None;
        let mut transition: Option<(usize, Vec<f64>)> = None;
        let mut measure_line = 0;
        let mut analysis = AnalysisSettings::default();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(header) = content.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(line, "unterminated section header"))?
                    .trim();
                section = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
                    ["system"] => Section::System,
                    ["measure"] => {
                        measure_line = line;
                        Section::Measure
                    }
                    ["analysis"] => Section::Analysis,
                    ["map", k] => {
                        let k: usize = number(line, "map index", k)?;
                        if k != maps.len() {
                            return Err(syntax(line, format!("expected [map {}], found [map {k}]", maps.len())));
                        }
                        maps.push((None, None, line));
                        Section::Map(k)
                    }
                    _ => return Err(syntax(line, format!("unknown section [{header}]"))),
                };
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| syntax(line, "expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(syntax(line, format!("empty value for {key}")));
            }
            match (section, key) {
                (Section::None, _) => return Err(syntax(line, "key outside of any section")),
                (Section::System, "n") => n = Some((line, number(line, key, value)?)),
                (Section::Map(k), "f") => maps[k].0 = Some((line, value.to_string())),
                (Section::Map(k), "g") => maps[k].1 = Some((line, value.to_string())),
                (Section::Measure, "kind") => kind = Some((line, value.to_string())),
                (Section::Measure, "p") => p = Some((line, vector(line, key, value)?)),
                (Section::Measure, "transition") => transition = Some((line, vector(line, key, value)?)),
                (Section::Analysis, "seq_len") => analysis.seq_len = number(line, key, value)?,
                (Section::Analysis, "trials") => analysis.trials = number(line, key, value)?,
                (Section::Analysis, "samples") => analysis.samples = number(line, key, value)?,
                (Section::Analysis, "probes") => analysis.probes = number(line, key, value)?,
                (Section::Analysis, "seed") => analysis.seed = number(line, key, value)?,
                (Section::Analysis, "validation_depth") => analysis.validation_depth = number(line, key, value)?,
                (Section::Analysis, "ssc_depth") => analysis.ssc_depth = number(line, key, value)?,
                (Section::Analysis, "constants_depth") => analysis.constants_depth = number(line, key, value)?,
                (Section::Analysis, "radii") => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    let [start, end, count] = parts.as_slice() else {
                        return Err(syntax(line, "radii must be 'start end count'"));
                    };
                    let spec = RadiiSpec {
                        start: number(line, key, start)?,
                        end: number(line, key, end)?,
                        count: number(line, key, count)?,
                    };
                    if !(spec.start > spec.end && spec.end > 0.0 && spec.count >= 2) {
                        return Err(syntax(line, "radii must decrease from start to end > 0 with at least 2 points"));
                    }
                    analysis.radii = spec;
                }
                _ => return Err(syntax(line, format!("unknown key '{key}' in this section"))),
            }
        }

        let (n_line, n) = n.ok_or_else(|| ConfigError::Missing {
            what: "[system] n".into(),
        })?;
        if n != maps.len() {
            return Err(syntax(n_line, format!("n = {n} but {} [map] sections are given", maps.len())));
        }
        let mut specs = Vec::with_capacity(n);
        for (k, (f, g, header)) in maps.into_iter().enumerate() {
            let missing = |key: &str| ConfigError::Syntax {
                line: header,
                message: format!("[map {k}] has no {key}"),
            };
            let (f_line, f) = f.ok_or_else(|| missing("f"))?;
            let (g_line, g) = g.ok_or_else(|| missing("g"))?;
            Expression::parse(&f).map_err(|source| ConfigError::Expression {
                line: f_line,
                map: k,
                key: "f",
                source,
            })?;
            Expression::parse(&g).map_err(|source| ConfigError::Expression {
                line: g_line,
                map: k,
                key: "g",
                source,
            })?;
            specs.push(MapSpec { f, g });
        }

        let (kind_line, kind) = kind.ok_or(ConfigError::MeasureSpec {
            line: measure_line,
            message: "missing kind".into(),
        })?;
        let (line, measure) = match kind.as_str() {
            "bernoulli" => {
                let (line, p) = p.ok_or(ConfigError::MeasureSpec {
                    line: kind_line,
                    message: "bernoulli measure needs p".into(),
                })?;
                (line, MeasureSpec::Bernoulli(p))
            }
            "markov" => {
                let (line, t) = transition.ok_or(ConfigError::MeasureSpec {
                    line: kind_line,
                    message: "markov measure needs transition".into(),
                })?;
                (line, MeasureSpec::Markov(t))
            }
            other => {
                return Err(ConfigError::MeasureSpec {
                    line: kind_line,
                    message: format!("unknown kind '{other}'"),
                })
            }
        };
        let built = measure.build().map_err(|source| ConfigError::Measure { line, source })?;
        if built.symbols() != n {
            return Err(ConfigError::MeasureSpec {
                line,
                message: format!("measure has {} symbols but n = {n}", built.symbols()),
            });
        }

        Ok(Config {
            maps: specs,
            measure,
            analysis,
        })
    }

    pub fn measure(&self) -> SymbolicMeasure {
        self.measure.build().expect("checked when parsing")
    }

    /// Validates the described system with the configured depths.
    pub fn system(&self) -> Result<TriangularSystem, IfsError> {
        self.system_with(self.analysis.validation_options())
    }

    pub fn system_with(&self, options: ValidationOptions) -> Result<TriangularSystem, IfsError> {
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let f = Expression::parse(&m.f).map_err(|source| IfsError::Expression { map: k, source })?;
                let g = Expression::parse(&m.g).map_err(|source| IfsError::Expression { map: k, source })?;
                TriangularMap::new(f, g).map_err(|e| match e {
                    IfsError::NotTriangular { .. } => IfsError::NotTriangular { map: k },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        TriangularSystem::validate(maps, options)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        writeln!(s, "[system]\nn = {}", self.maps.len())?;
        for (k, m) in self.maps.iter().enumerate() {
            writeln!(s, "\n[map {k}]\nf = {}\ng = {}", m.f, m.g)?;
        }
        match &self.measure {
            MeasureSpec::Bernoulli(p) => writeln!(s, "\n[measure]\nkind = bernoulli\np = {}", join(p))?,
            MeasureSpec::Markov(t) => writeln!(s, "\n[measure]\nkind = markov\ntransition = {}", join(t))?,
        }
        let a = &self.analysis;
        writeln!(s, "\n[analysis]")?;
        writeln!(s, "seq_len = {}", a.seq_len)?;
        writeln!(s, "trials = {}", a.trials)?;
        writeln!(s, "samples = {}", a.samples)?;
        writeln!(s, "probes = {}", a.probes)?;
        writeln!(s, "radii = {:?} {:?} {}", a.radii.start, a.radii.end, a.radii.count)?;
        writeln!(s, "seed = {}", a.seed)?;
        writeln!(s, "validation_depth = {}", a.validation_depth)?;
        writeln!(s, "ssc_depth = {}", a.ssc_depth)?;
        write!(s, "constants_depth = {}", a.constants_depth)?;
        writeln!(f, "{s}")
    }
}

impl FromStr for Config {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Config::parse(s)
    }
}
