//! Workloads shared by the benches.

use hhs::fixtures::{fixture_b_product, path};
use hhs::model::HHSModel;
use hhs::product::direct_product_structure;

/// Models audited by the `audit` bench, smallest first.
pub fn audit_models() -> Vec<(&'static str, HHSModel)> {
    vec![
        ("fixture-b", fixture_b_product()),
        ("path-12", path(12)),
        ("grid-5x7", direct_product_structure(&path(5), &path(7)).0),
    ]
}
