mod common;

use common::{config, expr, point_field, unit_box};
use proptest::prelude::*;

proptest! {
    #![proptest_config(config())]

    #[test]
    fn normalization_is_idempotent(e in expr(true)) {
        common::normalization_is_idempotent(&e)?;
    }

    #[test]
    fn printing_round_trips(e in expr(true)) {
        common::printing_round_trips(&e)?;
    }

    #[test]
    fn derivative_matches_finite_difference(e in expr(false), p in unit_box()) {
        common::derivative_matches_finite_difference(&e, p)?;
    }

    #[test]
    fn total_derivatives_commute(e in expr(true)) {
        common::total_derivatives_commute(&e)?;
    }

    #[test]
    fn prolongation_is_linear(v in point_field("v"), w in point_field("w"), c in -3i64..=3) {
        common::prolongation_is_linear(&v, &w, c)?;
    }

    #[test]
    fn bracket_is_antisymmetric(v in point_field("v"), w in point_field("w")) {
        common::bracket_is_antisymmetric(&v, &w)?;
    }
}
