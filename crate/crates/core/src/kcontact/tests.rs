use proptest::prelude::*;

use super::*;
use crate::symexpr::parse_expr;

fn cfg() -> Config {
    Config { samples: 16, ..Config::default() }
}

fn e(s: &str) -> ScalarExpr {
    parse_expr(s).unwrap()
}

#[test]
fn canonical_layout() {
    let s = canonical_structure(2, 2);
    assert_eq!(s.dim(), 8);
    assert_eq!(s.chart().coords()[..4], ["s_1", "s_2", "q_1", "q_2"]);
    let eta1 = &s.eta()[0];
    assert_eq!(eta1.coeff(&[0]), ScalarExpr::one());
    assert_eq!(eta1.coeff(&[2]), e("-p_1_1"));
    assert_eq!(eta1.coeff(&[3]), e("-p_1_2"));
    assert_eq!(eta1.coeffs().len(), 3);
    assert_eq!(canonical_structure(1, 1).dim(), 3);
}

#[test]
fn canonical_structures_verify() {
    for n in 1..=3 {
        for k in 1..=3 {
            let s = canonical_structure(n, k);
            let r = verify_kcontact(&s, 8, &cfg()).unwrap();
            assert!(r.passed(), "n={n} k={k}: {r:?}");
            assert!(r.degenerate_points.is_empty());
        }
    }
}

#[test]
fn degenerate_structure_is_reported() {
    let c = Chart::new(&["x", "y", "z"]).unwrap().shared();
    let dx = DifferentialForm::differential(&c, 0);
    let s = KContactStructure::from_forms(&c, vec![dx.clone(), dx]).unwrap();
    let r = verify_kcontact(&s, 4, &cfg()).unwrap();
    assert!(!r.condition1);
    assert_eq!(r.points[0].eta_rank, 1);
    assert_eq!(r.degenerate_points.len(), 4);
    assert!(r.points[0].point.is_some());
}

#[test]
fn canonical_reeb_is_exact() {
    let s = canonical_structure(2, 3);
    let t = s.zero_tester(&cfg()).unwrap();
    let frame = compute_reeb(&s, &t).unwrap();
    for (a, r) in frame.fields.iter().enumerate() {
        for (i, c) in r.components().iter().enumerate() {
            let expected = if i == a { ScalarExpr::one() } else { ScalarExpr::zero() };
            assert_eq!(c, &expected);
        }
    }
    assert!(check_reeb_commutation(&frame, &t).unwrap());
    let chk = check_reeb(&s, &frame, &t).unwrap();
    assert_eq!(chk.duality, ZeroVerdict::Zero);
    assert_eq!(chk.annihilates_d_eta, ZeroVerdict::Zero);
    assert_eq!(chk.lie_derivative_eta, ZeroVerdict::Zero);
}

#[test]
fn thermo_reeb_is_energy_direction() {
    let s = thermo_structure();
    let t = s.zero_tester(&cfg()).unwrap();
    let r = verify_kcontact(&s, 8, &cfg()).unwrap();
    assert!(r.passed());
    let frame = compute_reeb(&s, &t).unwrap();
    let expected = VectorField::coordinate(s.chart(), 0);
    assert_eq!(frame.fields[0], expected);
}

#[test]
fn non_commuting_frame() {
    let c = Chart::new(&["x", "y"]).unwrap().shared();
    let frame = ReebFrame {
        fields: vec![VectorField::coordinate(&c, 0), VectorField::new(&c, vec![e("0"), e("x")]).unwrap()],
    };
    let t = c.zero_tester(&cfg()).unwrap();
    assert!(!check_reeb_commutation(&frame, &t).unwrap());
}

#[test]
fn reeb_of_non_contact_form_is_singular() {
    let c = Chart::new(&["x", "y", "z"]).unwrap().shared();
    let s = KContactStructure::from_forms(&c, vec![DifferentialForm::differential(&c, 0)]).unwrap();
    let t = c.zero_tester(&cfg()).unwrap();
    assert!(matches!(compute_reeb(&s, &t), Err(KContactError::SingularSystem(_))));
}

#[test]
fn reeb_in_non_darboux_coordinates() {
    // η = e^x (dz − y dx): a contact form whose Reeb field is not a coordinate field
    let c = Chart::new(&["x", "y", "z"]).unwrap().shared();
    let eta = DifferentialForm::from_terms(&c, 1, [(vec![2], e("exp(x)")), (vec![0], e("-y*exp(x)"))]).unwrap();
    let s = KContactStructure::from_forms(&c, vec![eta]).unwrap();
    let t = c.zero_tester(&cfg()).unwrap();
    let frame = compute_reeb(&s, &t).unwrap();
    let chk = check_reeb(&s, &frame, &t).unwrap();
    assert_eq!(chk.duality, ZeroVerdict::Zero, "{:?}", frame.fields[0]);
    assert_eq!(chk.annihilates_d_eta, ZeroVerdict::Zero);
    assert_eq!(chk.lie_derivative_eta, ZeroVerdict::Zero);
}

#[test]
fn contact_volume_nonvanishing() {
    for n in 1..=3 {
        let s = canonical_structure(n, 1);
        let t = s.zero_tester(&cfg()).unwrap();
        let vol = contact_volume(&s).unwrap();
        assert!(is_nonvanishing(&vol, &t).unwrap(), "n={n}: {vol}");
    }
    let vol = contact_volume(&thermo_structure()).unwrap();
    assert!(!vol.is_zero_const());
}

#[test]
fn canonical_polarization_passes() {
    let (n, k) = (2, 2);
    let s = canonical_structure(n, k);
    let t = s.zero_tester(&cfg()).unwrap();
    let v = canonical_polarization(n, k, s.chart());
    let r = check_polarization(&s, &v, &t, 1e-8).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.expected_rank, Some(4));

    // swapping one field for a Reeb direction breaks annihilation
    let mut bad = v.clone();
    bad[0] = VectorField::coordinate(s.chart(), 0);
    let r = check_polarization(&s, &bad, &t, 1e-8).unwrap();
    assert!(!r.annihilates_eta);
    assert!(!r.passed());

    // q-directions are not in ker η
    let mut bad = v;
    bad[0] = VectorField::coordinate(s.chart(), k);
    assert!(!check_polarization(&s, &bad, &t, 1e-8).unwrap().passed());
}

#[test]
fn report_serializes() {
    let r = verify_kcontact(&canonical_structure(1, 2), 3, &cfg()).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"eta_rank\":2"));
    assert!(!json.contains("\"point\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Perturbing any component of the computed frame breaks a defining equation.
    #[test]
    fn reeb_uniqueness(n in 1usize..=2, k in 1usize..=2, alpha_seed in 0usize..64, comp_seed in 0usize..64, c in 1i64..=5) {
        let s = canonical_structure(n, k);
        let t = s.zero_tester(&cfg()).unwrap();
        let mut frame = compute_reeb(&s, &t).unwrap();
        let alpha = alpha_seed % k;
        let comp = comp_seed % s.dim();
        let name = &s.chart().coords()[comp];
        let bump = ScalarExpr::int(c) + ScalarExpr::var(name).powi(2);
        let mut comps = frame.fields[alpha].components().to_vec();
        comps[comp] = &comps[comp] + &bump;
        frame.fields[alpha] = VectorField::new(s.chart(), comps).unwrap();
        let chk = check_reeb(&s, &frame, &t).unwrap();
        prop_assert!(chk.duality != ZeroVerdict::Zero || chk.annihilates_d_eta != ZeroVerdict::Zero);
    }
}
