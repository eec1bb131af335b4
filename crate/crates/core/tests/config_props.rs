use lydim_core::benchmarks;
use lydim_core::config::{Config, MeasureSpec, RadiiSpec};
use proptest::prelude::*;

fn config() -> impl Strategy<Value = Config> {
    let base = prop::sample::select(benchmarks::list_benchmarks().into_iter().map(|b| b.name).collect::<Vec<_>>());
    (
        base,
        prop::collection::vec(0.05f64..1.0, 1..=1),
        100usize..5000,
        2usize..100,
        1000usize..2_000_000,
        any::<u64>(),
        (0.05f64..0.5, 1e-4f64..1e-2, 3usize..30),
    )
        .prop_map(|(name, noise, seq_len, trials, samples, seed, (start, end, count))| {
            let mut c = benchmarks::benchmark(name).unwrap().parse();
            if let MeasureSpec::Bernoulli(p) = &mut c.measure {
                // perturb and renormalize
                p[0] += noise[0];
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|x| *x /= s);
            }
            c.analysis.seq_len = seq_len;
            c.analysis.trials = trials;
            c.analysis.samples = samples;
            c.analysis.seed = seed;
            c.analysis.radii = RadiiSpec { start, end, count };
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn serialization_round_trips(c in config()) {
        let text = c.to_string();
        let again = Config::parse(&text).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(again.to_string(), text);
    }
}

#[test]
fn shipped_configs_round_trip() {
    for b in benchmarks::list_benchmarks() {
        let c = b.parse();
        assert_eq!(Config::parse(&c.to_string()).unwrap(), c, "{}", b.name);
    }
}
