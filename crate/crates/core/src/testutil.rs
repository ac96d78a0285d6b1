//! Random expression and form generators shared by the unit tests.

use std::sync::Arc;

use proptest::prelude::*;

use crate::forms::{Chart, DifferentialForm, VectorField};
use crate::symexpr::ScalarExpr;

pub fn chart(dim: usize) -> Arc<Chart> {
    let names: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    Chart::new(&names).unwrap().shared()
}

/// Small polynomial-with-exp expressions over `x0..x{dim-1}`.
pub fn expr(dim: usize) -> impl Strategy<Value = ScalarExpr> {
    let leaf = prop_oneof![
        (-5i64..=5, 1i64..=4).prop_map(|(p, q)| ScalarExpr::rational(p, q)),
        (0..dim).prop_map(|i| ScalarExpr::var(&format!("x{i}"))),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 2u32..=3).prop_map(|(a, n)| a.powi(n as i64)),
            inner.prop_map(|a| (a * ScalarExpr::rational(1, 3)).exp()),
        ]
    })
}

pub fn form(chart: Arc<Chart>, degree: usize) -> impl Strategy<Value = DifferentialForm> {
    let dim = chart.dim();
    let key = proptest::sample::subsequence((0..dim).collect::<Vec<_>>(), degree);
    proptest::collection::vec((key, expr(dim)), 0..=3)
        .prop_map(move |terms| DifferentialForm::from_terms(&chart, degree, terms).unwrap())
}

pub fn field(chart: Arc<Chart>) -> impl Strategy<Value = VectorField> {
    let dim = chart.dim();
    proptest::collection::vec(expr(dim), dim).prop_map(move |c| VectorField::new(&chart, c).unwrap())
}
