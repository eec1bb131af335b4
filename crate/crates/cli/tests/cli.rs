use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lydim_core::benchmarks;
use lydim_core::config::Config;
use tempfile::TempDir;

fn lydim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lydim")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(format!("{name}.cfg"));
    fs::write(&path, text).unwrap();
    path
}

fn shipped(dir: &Path, name: &str) -> PathBuf {
    write_config(dir, name, benchmarks::benchmark(name).unwrap().config)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["--samples", "40000", "--trials", "8"];

#[test]
fn validate_shipped_configs() {
    let dir = TempDir::new().unwrap();
    for b in benchmarks::list_benchmarks() {
        let path = shipped(dir.path(), b.name);
        let o = lydim(&["validate", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", b.name, stdout(&o));
    }
    let o = lydim(&["validate", shipped(dir.path(), "bm4").to_str().unwrap()]);
    assert!(stdout(&o).contains("d = 0.125"), "{}", stdout(&o));
}

#[test]
fn measure_error_exits_two_and_names_section() {
    let dir = TempDir::new().unwrap();
    let text = benchmarks::benchmark("bm4").unwrap().config.replace("0.25 0.25 0.25 0.25", "0.25 0.25 0.25 0.15");
    let path = write_config(dir.path(), "bad", &text);
    let o = lydim(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[measure]"), "{}", stderr(&o));
}

#[test]
fn syntax_error_reports_line() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "bad", "[system]\nn = 2\n[map 0]\nf = x/2 +\ng = y/4\n[map 1]\nf = x/2\ng = y/4 + 0.5\n[measure]\nkind = bernoulli\np = 0.5 0.5\n");
    let o = lydim(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn domination_failure_exits_one() {
    let dir = TempDir::new().unwrap();
    let text = "[system]\nn = 2\n[map 0]\nf = 0.9*x\ng = 0.95*y\n[map 1]\nf = 0.9*x + 0.1\ng = 0.95*y + 0.05\n\
                [measure]\nkind = bernoulli\np = 0.5 0.5\n";
    let path = write_config(dir.path(), "dom", text);
    let o = lydim(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("domination   FAIL") && out.contains("ssc          not checked"), "{out}");
}

#[test]
fn missing_file_and_bad_usage_exit_two() {
    assert_eq!(lydim(&["validate", "/nonexistent/x.cfg"]).status.code(), Some(2));
    assert_eq!(lydim(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lydim(&["analyze"]).status.code(), Some(2));
}

#[test]
fn render_writes_points() {
    let dir = TempDir::new().unwrap();
    let cfg = shipped(dir.path(), "nonlin1");
    let csv = dir.path().join("pts.csv");
    let o = lydim(&["render", cfg.to_str().unwrap(), "--count", "10", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "x,y");
    for l in &lines[1..] {
        let (x, y) = l.split_once(',').unwrap();
        let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
        assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
    }
    let again = dir.path().join("pts2.csv");
    lydim(&["render", cfg.to_str().unwrap(), "--count", "10", "--out", again.to_str().unwrap()]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());
    let o = lydim(&["render", cfg.to_str().unwrap(), "--count", "0", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = lydim(&["render", cfg.to_str().unwrap(), "--count", "5", "--out", "/nonexistent/dir/p.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

fn analyze(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["analyze", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    lydim(&args)
}

fn outputs(dir: &Path) -> Vec<String> {
    ["report.txt", "localdim.csv", "convergence.csv"]
        .iter()
        .map(|f| fs::read_to_string(dir.join(f)).unwrap())
        .collect()
}

#[test]
fn analyze_writes_report_and_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = shipped(dir.path(), "collapse2");
    let out = dir.path().join("a");
    let o = analyze(&cfg, &out, SMALL);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let [report, localdim, convergence]: [String; 3] = outputs(&out).try_into().unwrap();
    let keys: Vec<&str> = report.lines().map(|l| l.split(" = ").next().unwrap()).collect();
    for k in ["h", "h_stderr", "chi1", "chi1_stderr", "chi2", "chi2_stderr", "t", "t_method", "ly_dim", "localdim_mean", "localdim_sd"] {
        assert!(keys.contains(&k), "missing {k}");
    }
    let value = |k: &str| report.lines().find_map(|l| l.strip_prefix(&format!("{k} = "))).unwrap().to_string();
    let ly: f64 = value("ly_dim").parse().unwrap();
    assert!((ly - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
    assert_eq!(value("t_method"), "exact_separated");
    assert!(localdim.starts_with("probe_id,x,y,slope,r2\n"));
    assert!(convergence.starts_with("n,h,h_stderr,chi1,chi1_stderr,chi2,chi2_stderr\n"));
    for text in [&report, &localdim, &convergence] {
        assert!(!text.contains('\r') && !text.lines().any(|l| l.ends_with(',')));
    }
}

#[test]
fn analyze_is_deterministic_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let cfg = shipped(dir.path(), "nonlin1");
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let oa = analyze(&cfg, &a, SMALL);
    let ob = analyze(&cfg, &b, SMALL);
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(outputs(&a), outputs(&b));
    let mut other = SMALL.to_vec();
    other.extend_from_slice(&["--seed", "99"]);
    analyze(&cfg, &c, &other);
    assert_ne!(outputs(&a)[1], outputs(&c)[1]);
}

#[test]
fn reserialized_config_gives_identical_analysis() {
    let dir = TempDir::new().unwrap();
    let original = shipped(dir.path(), "markov1");
    let text = Config::load(&original).unwrap().to_string();
    let copy = write_config(dir.path(), "copy", &text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    analyze(&original, &a, SMALL);
    analyze(&copy, &b, SMALL);
    assert_eq!(outputs(&a), outputs(&b));
}

#[test]
fn verify_passes_on_shipped_configs() {
    let dir = TempDir::new().unwrap();
    for name in ["bm4", "collapse2", "nonlin1", "markov1"] {
        let cfg = shipped(dir.path(), name);
        let o = lydim(&["verify", cfg.to_str().unwrap(), "--samples", "200000"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains("total      0 violations"));
    }
}

#[test]
fn localdim_command_writes_field() {
    let dir = TempDir::new().unwrap();
    let cfg = shipped(dir.path(), "bm4");
    let out = dir.path().join("ld");
    let o = lydim(&["localdim", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--samples", "100000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("localdim.csv")).unwrap();
    assert!(csv.lines().count() > 16);
    assert!(stdout(&o).starts_with("localdim "));
}
