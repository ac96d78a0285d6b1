use proptest::prelude::*;

use super::*;
use crate::kcontact::thermo_structure;
use crate::Config;

fn cfg() -> Config {
    Config { samples: 16, ..Config::default() }
}

fn e(s: &str) -> ScalarExpr {
    parse_expr(s).unwrap()
}

fn kf(n: usize, k: usize, i: &[usize], f: &[&str]) -> ParametrizingKFunction {
    ParametrizingKFunction::new(n, k, i, f.iter().map(|s| e(s)).collect()).unwrap()
}

fn source_tester(f: &ParametrizingKFunction) -> ZeroTester {
    f.parameter_chart().zero_tester(&cfg()).unwrap()
}

#[test]
fn rejects_foreign_variables() {
    let r = ParametrizingKFunction::new(2, 2, &[1], vec![e("p_2_1"), e("p_2_1")]);
    assert!(matches!(r, Err(LegendrianError::InvalidKFunction(_))));
    let r = ParametrizingKFunction::new(2, 1, &[3], vec![e("q_1")]);
    assert!(matches!(r, Err(LegendrianError::InvalidKFunction(_))));
    let r = ParametrizingKFunction::new(2, 2, &[1], vec![e("1")]);
    assert!(matches!(r, Err(LegendrianError::InvalidKFunction(_))));
}

#[test]
fn compatibility() {
    let f = kf(2, 2, &[1], &["p_1_1*q_2^2 + q_2", "p_2_1*q_2^2"]);
    let r = check_compatibility(&f, &source_tester(&f)).unwrap();
    assert!(r.compatible && r.linear_in_momenta);

    let f = kf(2, 1, &[1, 2], &["p_1_1^2*p_1_2 + exp(p_1_2)"]);
    let r = check_compatibility(&f, &source_tester(&f)).unwrap();
    assert!(r.compatible && !r.linear_in_momenta);

    let f = kf(2, 2, &[1], &["p_1_1*q_2", "2*p_2_1*q_2"]);
    let r = check_compatibility(&f, &source_tester(&f)).unwrap();
    assert!(!r.compatible);
    assert_eq!(r.first_incompatible, Some(1));
    let err = build_parametrization(&f, &source_tester(&f)).unwrap_err();
    assert_eq!(err, LegendrianError::IncompatibleKFunction { index: 1 });
}

#[test]
fn jet_graph_when_i_is_empty() {
    let f = kf(2, 2, &[], &["q_1*q_2", "exp(q_1)"]);
    let t = source_tester(&f);
    let l = build_parametrization(&f, &t).unwrap();
    assert_eq!(l.dimension(), 2);
    assert_eq!(l.map.component("s_1").unwrap(), &e("q_1*q_2"));
    assert_eq!(l.map.component("s_2").unwrap(), &e("exp(q_1)"));
    let s = canonical_structure(2, 2);
    let r = verify_isotropic(&l.map, &s, None, &t, 1e-8).unwrap();
    assert!(r.isotropic);
    assert_eq!(r.certificate, LegendrianCertificate::NotChecked);
}

#[test]
fn momentum_linear_function_has_vanishing_action() {
    let f = kf(2, 2, &[1], &["p_1_1*q_2^2", "p_2_1*q_2^2"]);
    let t = source_tester(&f);
    let l = build_parametrization(&f, &t).unwrap();
    for a in ["s_1", "s_2"] {
        assert!(t.is_zero(l.map.component(a).unwrap()).unwrap(), "{a}");
    }
    assert_eq!(l.dimension(), legendrian_dimension(2, 2, 1));
}

#[test]
fn built_parametrizations_are_legendrian() {
    let cases = [
        kf(2, 2, &[1], &["p_1_1*q_2^2 + q_2", "p_2_1*q_2^2 + exp(q_2)"]),
        kf(2, 1, &[1, 2], &["p_1_1^2 + p_1_1*p_1_2"]),
        kf(3, 2, &[1, 3], &["p_1_1*q_2 + p_1_3", "p_2_1*q_2 + p_2_3 + q_2^3"]),
        kf(1, 3, &[], &["q_1^2", "q_1", "1"]),
    ];
    for f in &cases {
        let t = source_tester(f);
        let l = build_parametrization(f, &t).unwrap();
        let s = canonical_structure(f.n(), f.k());
        let w = proof_complement(f, s.chart()).unwrap();
        let r = verify_isotropic(&l.map, &s, Some(&w), &t, 1e-8).unwrap();
        assert!(r.isotropic, "{f:?}: {r:?}");
        assert_eq!(r.certificate, LegendrianCertificate::Found, "{f:?}");
        assert_eq!(r.dimension, legendrian_dimension(f.n(), f.k(), f.i_set().len()));
    }
}

#[test]
fn non_isotropic_graph() {
    // s = 0, p = 1 over q: η = ds − p dq pulls back to −dq
    let s = canonical_structure(1, 1);
    let src = Chart::new(&["q_1"]).unwrap().shared();
    let map = SmoothMap::new(&src, s.chart(), vec![e("0"), e("q_1"), e("1")]).unwrap();
    let t = src.zero_tester(&cfg()).unwrap();
    let r = verify_isotropic(&map, &s, None, &t, 1e-8).unwrap();
    assert!(!r.isotropic);
    assert_eq!(r.eta_pullback, ZeroVerdict::NonZero);
}

#[test]
fn dimension_formula() {
    assert_eq!(legendrian_dimension(6, 4, 0), 6);
    assert_eq!(legendrian_dimension(3, 2, 3), 6);
    assert_eq!(legendrian_dimension(5, 5, 5), 25);
    for n1 in 0..=3 {
        assert_eq!(legendrian_dimension(3, 1, n1), 3);
    }
}

#[test]
fn maximality_witness() {
    let f = kf(2, 2, &[1], &["p_1_1*q_2", "p_2_1*q_2"]);
    let t = source_tester(&f);
    let l = build_parametrization(&f, &t).unwrap();
    let s = canonical_structure(2, 2);
    // adding ∂/∂p^α_j (j ∈ J) to TL breaks isotropy
    let w = proof_complement(&f, s.chart()).unwrap();
    let breaks = breaks_isotropy(&l.map, &s, &w, &t).unwrap();
    assert!(breaks.iter().all(|&b| b), "{breaks:?}");
    // a Reeb direction pairs trivially with everything under dη
    let reeb = VectorField::coordinate(s.chart(), 0);
    assert_eq!(breaks_isotropy(&l.map, &s, &[reeb], &t).unwrap(), vec![false]);
}

#[test]
fn ideal_gas_is_legendrian() {
    let f = ideal_gas_energy(&IdealGas::default());
    let l = thermo_parametrization(&f).unwrap();
    let s = thermo_structure();
    let t = l.map.source().zero_tester(&cfg()).unwrap();
    let w = thermo_complement(s.chart()).unwrap();
    let r = verify_isotropic(&l.map, &s, Some(&w), &t, 1e-8).unwrap();
    assert!(r.isotropic, "{r:?}");
    assert_eq!(r.certificate, LegendrianCertificate::Found);
    assert_eq!(r.dimension, 3);

    // P V = N R T
    let pv_nrt = ScalarExpr::var("P") * ScalarExpr::var("V") - ScalarExpr::var("N") * ScalarExpr::var("T");
    assert!(t.is_zero(&l.map.compose(&pv_nrt)).unwrap());

    // this energy scales as λ^(−1/cv), so the Euler identity fails
    assert!(matches!(check_gibbs_equality(&f, &l, &t), Err(LegendrianError::NotHomogeneous { .. })));
}

#[test]
fn gibbs_for_power_laws() {
    for (a, b) in [("1/3", "1/3"), ("1/2", "1/4"), ("2", "-1/2")] {
        let f = e(&format!("3*S^({a})*V^({b})*N^(1 - ({a}) - ({b}))"));
        let l = thermo_parametrization(&f).unwrap();
        let t = l.map.source().zero_tester(&cfg()).unwrap();
        assert!(check_gibbs_equality(&f, &l, &t).unwrap().holds(), "a={a} b={b}");
    }
}

#[test]
fn gibbs_requires_homogeneity() {
    let f = e("S^2");
    let l = thermo_parametrization(&f).unwrap();
    let t = l.map.source().zero_tester(&cfg()).unwrap();
    assert!(matches!(check_gibbs_equality(&f, &l, &t), Err(LegendrianError::NotHomogeneous { .. })));
    // the image is Legendrian regardless
    let r = verify_isotropic(&l.map, &thermo_structure(), None, &t, 1e-8).unwrap();
    assert!(r.isotropic);
}

#[test]
fn kfunction_file_round_trip() {
    let src = r#"{"n": 2, "k": 2, "I": [1], "F": ["p_1_1*q_2", "p_2_1*q_2"]}"#;
    let file: KFunctionFile = serde_json::from_str(src).unwrap();
    let f = file.build().unwrap();
    assert_eq!(f.parameter_coords(), ["q_2", "p_1_1", "p_2_1"]);
    let bad: KFunctionFile = serde_json::from_str(r#"{"n": 1, "k": 1, "F": ["q_1 +"]}"#).unwrap();
    assert!(matches!(bad.build(), Err(LegendrianError::Parse { index: 0, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dimension_is_admissible(n in 1usize..=8, k in 1usize..=6, n1_seed in 0usize..=8) {
        let n1 = n1_seed % (n + 1);
        let d = legendrian_dimension(n, k, n1);
        prop_assert!(d >= n && d <= n * k);
        if n1 == 0 || k == 1 {
            prop_assert_eq!(d, n);
        }
    }

    /// Random linear-in-momenta k-functions always give isotropic images.
    #[test]
    fn linear_kfunctions_are_isotropic(c1 in -3i64..=3, c2 in -3i64..=3, c3 in 1i64..=3) {
        let f1 = format!("p_1_1*({c1}*q_2 + q_2^2) + {c3}*exp(q_2/3)");
        let f2 = format!("p_2_1*({c1}*q_2 + q_2^2) + {c2}*q_2^3");
        let f = kf(2, 2, &[1], &[&f1, &f2]);
        let t = source_tester(&f);
        let l = build_parametrization(&f, &t).unwrap();
        let s = canonical_structure(2, 2);
        let r = verify_isotropic(&l.map, &s, None, &t, 1e-8).unwrap();
        prop_assert!(r.isotropic);
    }
}
