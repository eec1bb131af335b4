#![allow(dead_code)]

use proptest::prelude::*;

/// Random expression sources over `x, y` that are defined and smooth on the
/// whole unit square.
pub fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        (-2.0f64..2.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2.5 + sin({b}))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("tanh({a})")),
            inner.clone().prop_map(|a| format!("exp(0.25*tanh({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("log(2 + cos({a}))")),
            inner.prop_map(|a| format!("({a})^3")),
        ]
    })
}

/// Sub-box of the unit square as `(x0, x1, y0, y1)`.
pub fn unit_box() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c, d)| (a.min(b), a.max(b), c.min(d), c.max(d)))
}

/// Validated shipped systems, built once per test binary.
pub fn systems() -> &'static [(&'static str, lydim_core::TriangularSystem)] {
    static SYSTEMS: std::sync::OnceLock<Vec<(&'static str, lydim_core::TriangularSystem)>> = std::sync::OnceLock::new();
    SYSTEMS.get_or_init(|| {
        lydim_core::benchmarks::list_benchmarks()
            .iter()
            .map(|b| (b.name, lydim_core::benchmarks::system(b.name).unwrap()))
            .collect()
    })
}
