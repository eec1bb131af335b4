mod common;

use lydim_core::expr::{range_bound, Axis, Expression, Interval};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn partials_match_central_differences(src in common::expression(), x in 0.05f64..0.95, y in 0.05f64..0.95) {
        let e = Expression::parse(&src).unwrap();
        let d = e.eval_with_partials(x, y).unwrap();
        let h = 1e-6;
        let fdx = (e.value(x + h, y) - e.value(x - h, y)) / (2.0 * h);
        let fdy = (e.value(x, y + h) - e.value(x, y - h)) / (2.0 * h);
        prop_assert!((d.dx - fdx).abs() <= 1e-6 * d.dx.abs().max(1.0), "{src}: {} vs {fdx}", d.dx);
        prop_assert!((d.dy - fdy).abs() <= 1e-6 * d.dy.abs().max(1.0), "{src}: {} vs {fdy}", d.dy);
        prop_assert!((d.value - e.value(x, y)).abs() <= 1e-15 * d.value.abs().max(1.0));
    }

    #[test]
    fn symbolic_derivative_agrees_with_dual(src in common::expression(), x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let e = Expression::parse(&src).unwrap();
        let d = e.eval_with_partials(x, y).unwrap();
        let sx = e.derivative(Axis::X).value(x, y);
        let sy = e.derivative(Axis::Y).value(x, y);
        prop_assert!((sx - d.dx).abs() <= 1e-9 * d.dx.abs().max(1.0));
        prop_assert!((sy - d.dy).abs() <= 1e-9 * d.dy.abs().max(1.0));
    }

    #[test]
    fn enclosures_contain_samples(src in common::expression(), b in common::unit_box(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let e = Expression::parse(&src).unwrap();
        let (bx, by) = (Interval::new(b.0, b.1), Interval::new(b.2, b.3));
        let (x, y) = (b.0 + u * (b.1 - b.0), b.2 + v * (b.3 - b.2));
        let value = e.value(x, y);
        for depth in [0, 3] {
            let r = range_bound(&e, bx, by, depth).unwrap();
            prop_assert!(r.contains(value), "{src} at ({x}, {y}): {value} not in {r}");
        }
    }

    #[test]
    fn refinement_does_not_widen(src in common::expression(), b in common::unit_box(), k in 0u32..4) {
        let e = Expression::parse(&src).unwrap();
        let (bx, by) = (Interval::new(b.0, b.1), Interval::new(b.2, b.3));
        let coarse = range_bound(&e, bx, by, k).unwrap();
        let fine = range_bound(&e, bx, by, k + 1).unwrap();
        let scale = coarse.mag().max(1.0) * 1e-11;
        prop_assert!(fine.width() <= coarse.width() + scale, "{src}: {fine} wider than {coarse}");
    }

    #[test]
    fn display_reparses(src in common::expression()) {
        let e = Expression::parse(&src).unwrap();
        let again = Expression::parse(&e.ast().to_string()).unwrap();
        prop_assert_eq!(e.ast(), again.ast());
    }
}
