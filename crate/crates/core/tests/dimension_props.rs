use lydim_core::benchmarks;
use lydim_core::dimension::{check_separation_theta, ly_dimension};
use lydim_core::projection::{
    check_projected_separation, estimate_projected_dimension_mc, projected_dimension_exact,
    projected_dimension_from_samples, Separation,
};
use lydim_core::stats::geometric_grid;
use proptest::prelude::*;

/// `(h, chi1, chi2)` with `chi2 < chi1 < 0` and `h/chi1 ∈ [0, 1]`.
fn inputs() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..5.0, 0.01f64..5.0, 0.0f64..1.0).prop_map(|(a, gap, frac)| {
        let chi1 = -a;
        (frac * chi1, chi1, chi1 - gap)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn collapse_identity((h, chi1, chi2) in inputs()) {
        let d = ly_dimension(h, chi1, chi2, h / chi1).unwrap();
        prop_assert!((d - h / chi1).abs() <= 1e-12);
    }

    #[test]
    fn affine_full_projection((h, chi1, chi2) in inputs()) {
        let d = ly_dimension(h, chi1, chi2, 1.0).unwrap();
        prop_assert!((d - (1.0 + (h - chi1) / chi2)).abs() <= 1e-12);
    }

    #[test]
    fn nondecreasing_in_t((h, chi1, chi2) in inputs(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(ly_dimension(h, chi1, chi2, lo).unwrap() <= ly_dimension(h, chi1, chi2, hi).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn theta_shrinks_with_depth(seed in any::<u64>(), a in 2usize..12) {
        let sys = benchmarks::system("nonlin1").unwrap();
        let m = benchmarks::measure("nonlin1").unwrap();
        let short = check_separation_theta(&sys, &m, 100, a, seed);
        let long = check_separation_theta(&sys, &m, 100, 12, seed);
        prop_assert!(long.theta <= short.theta);
        prop_assert!(long.theta > 0.0 && long.boundedheight_violations == 0);
    }
}

#[test]
fn separated_projection_methods_agree() {
    for b in benchmarks::list_benchmarks() {
        let sys = benchmarks::system(b.name).unwrap();
        if !matches!(check_projected_separation(&sys, 5), Separation::Separated { .. }) {
            continue;
        }
        let m = b.parse().measure();
        let exact = projected_dimension_exact(&sys, &m, b.expected.chi1.unwrap()).unwrap();
        let radii = geometric_grid(10f64.powf(-1.5), 1e-3, 12);
        let mc = estimate_projected_dimension_mc(&sys, &m, 200_000, &radii, 3).unwrap();
        assert!((mc.t - exact.t).abs() <= 0.03f64.max(3.0 * mc.stderr), "{}: {} vs {}", b.name, mc.t, exact.t);
    }
}

#[test]
fn projected_dimension_insensitive_to_probe_seed() {
    let radii = geometric_grid(10f64.powf(-1.5), 1e-3, 12);
    for name in ["bm4", "collapse2", "markov1"] {
        let sys = benchmarks::system(name).unwrap();
        let m = benchmarks::measure(name).unwrap();
        let xs: Vec<f64> = sys.sample_attractor(&m, 200_000, 8).points.iter().map(|p| p[0]).collect();
        let a = projected_dimension_from_samples(xs.clone(), &radii, 256, 1).unwrap();
        let b = projected_dimension_from_samples(xs, &radii, 256, 2).unwrap();
        let se = a.stderr.hypot(b.stderr);
        assert!((a.t - b.t).abs() <= 3.0 * se + 1e-9, "{name}: {} vs {}", a.t, b.t);
        assert!(a.r2 >= 0.99, "{name}: r2 = {}", a.r2);
    }
}
