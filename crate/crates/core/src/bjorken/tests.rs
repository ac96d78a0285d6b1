use proptest::prelude::*;

use super::*;

fn cfg() -> Config {
    Config { samples: 16, ..Config::default() }
}

fn e(s: &str) -> ScalarExpr {
    parse_expr(s).unwrap()
}

fn at(expr: &ScalarExpr, t: f64, z: f64) -> f64 {
    expr.eval_f64(&|v| match v {
        "t" => Some(t),
        "z" => Some(z),
        "x" | "y" => Some(0.3),
        "gamma" => Some(0.7),
        "T0" | "tau0" => Some(1.0),
        _ => None,
    })
    .unwrap()
}

fn zero(f: &BjorkenFlow, x: &ScalarExpr) -> bool {
    let c = check_all(f, [x], &cfg()).unwrap();
    c.passed()
}

#[test]
fn expansion_scalar_values() {
    let f = BjorkenFlow::with_default_profile();
    let theta = expansion_scalar(&f);
    assert!((at(&theta, 2.0, 0.0) - 0.5).abs() < 1e-15);
    assert!((at(&theta, 5.0, 3.0) - 0.25).abs() < 1e-15);
    assert!(zero(&f, &(&theta - f.tau().recip())));
}

#[test]
fn expansion_scalar_matches_finite_differences() {
    let f = BjorkenFlow::with_default_profile();
    let theta = expansion_scalar(&f);
    let u0 = |t: f64, z: f64| t / (t * t - z * z).sqrt();
    let u3 = |t: f64, z: f64| z / (t * t - z * z).sqrt();
    let h = 1e-5;
    for (t, z) in [(1.3, 0.2), (2.0, -1.1), (2.9, 2.5)] {
        let fd = (u0(t + h, z) - u0(t - h, z)) / (2.0 * h) + (u3(t, z + h) - u3(t, z - h)) / (2.0 * h);
        assert!((at(&theta, t, z) - fd).abs() < 1e-8, "({t}, {z})");
    }
}

#[test]
fn velocity_is_normalized_and_boost_invariant() {
    let f = BjorkenFlow::with_default_profile();
    let g = MinkowskiMetric::default();
    assert!(zero(&f, &(g.dot(f.u(), f.u()) - ScalarExpr::one())));
    // u at a boosted point is the boosted u
    let theta = expansion_scalar(&f);
    let (t, z, a) = (2.0f64, 0.5f64, 0.4f64);
    let (tb, zb) = (a.cosh() * t + a.sinh() * z, a.sinh() * t + a.cosh() * z);
    let u = |i: usize, t: f64, z: f64| at(&f.u()[i], t, z);
    assert!((u(0, tb, zb) - (a.cosh() * u(0, t, z) + a.sinh() * u(3, t, z))).abs() < 1e-12);
    assert!((u(3, tb, zb) - (a.sinh() * u(0, t, z) + a.cosh() * u(3, t, z))).abs() < 1e-12);
    assert!((at(&theta, tb, zb) - at(&theta, t, z)).abs() < 1e-12);
}

#[test]
fn shear_tensor_properties() {
    let f = BjorkenFlow::with_default_profile();
    let sigma = shear_tensor(&f).unwrap();
    let g = MinkowskiMetric::default();
    let u_low = g.lower(f.u());
    for n in 0..4 {
        let orth = ScalarExpr::sum((0..4).map(|m| &u_low[m] * &sigma[m][n]));
        assert!(zero(&f, &orth));
        for m in 0..4 {
            assert!(zero(&f, &(&sigma[m][n] - &sigma[n][m])));
        }
    }
    let trace = ScalarExpr::sum((0..4).map(|m| ScalarExpr::int(g.sign(m)) * &sigma[m][m]));
    assert!(zero(&f, &trace));
    // local rest frame at z = 0, τ = 2: σ = diag(0, 1/(3τ), 1/(3τ), −2/(3τ))
    let expected = [0.0, 1.0 / 6.0, 1.0 / 6.0, -1.0 / 3.0];
    for m in 0..4 {
        assert!((at(&sigma[m][m], 2.0, 0.0) - expected[m]).abs() < 1e-14, "σ^{m}{m}");
    }
    let ss = contract(&sigma, &sigma);
    assert!(zero(&f, &(ss - ScalarExpr::rational(2, 3) * f.tau().powi(2).recip())));
}

#[test]
fn sigma_identity_cases() {
    assert!(check_sigma_identity(&BjorkenFlow::with_default_profile(), &cfg()).unwrap());
    let profile = e("2*tau^(-1/2)");
    assert!(check_sigma_identity(&BjorkenFlow::new(&profile).unwrap(), &cfg()).unwrap());
    let rest = BjorkenFlow::from_velocity(vec![e("1"), e("0"), e("0"), e("0")], e("1")).unwrap();
    assert!(check_sigma_identity(&rest, &cfg()).unwrap());
    assert!(sigma_identity_residual(&rest).unwrap().is_zero_const());
    // transverse shear u^x = z: θ = 0 but σσ ≠ 0
    let sheared = BjorkenFlow::from_velocity(vec![e("(1 + z^2)^(1/2)"), e("z"), e("0"), e("0")], e("1")).unwrap();
    assert!(zero(&sheared, &expansion_scalar(&sheared)));
    assert!(!check_sigma_identity(&sheared, &cfg()).unwrap());
}

#[test]
fn input_validation() {
    assert_eq!(
        BjorkenFlow::new(&e("t")).unwrap_err(),
        BjorkenError::ForeignVariable { what: "temperature profile".into(), var: "t".into() }
    );
    assert_eq!(
        BjorkenFlow::from_velocity(vec![e("1"), e("0"), e("0")], e("1")).unwrap_err(),
        BjorkenError::VelocityLength(3)
    );
    assert!(matches!(PGTSuperpotential::new(e("T"), e("1")), Err(BjorkenError::ForeignVariable { .. })));
    assert!(matches!(PGTSuperpotential::new(e("1"), e("T*z")), Err(BjorkenError::ForeignVariable { .. })));
    assert!(matches!(parse_field("I", "T^"), Err(BjorkenError::Parse { .. })));
    assert_eq!(LEVI_CIVITA_0123, 1);
}

#[test]
fn superpotential_antisymmetric() {
    let f = BjorkenFlow::with_default_profile();
    let s = PGTSuperpotential::new(e("gamma"), e("T^3")).unwrap();
    let phi = s.components(&f);
    assert_eq!(phi.len(), 64);
    for l in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                let sum = &phi[(l * 4 + m) * 4 + n] + &phi[(l * 4 + n) * 4 + m];
                assert!(zero(&f, &sum), "{l}{m}{n}");
            }
        }
    }
}

#[test]
fn shift_is_conserved_and_symmetric() {
    let f = BjorkenFlow::with_default_profile();
    let s = PGTSuperpotential::new(e("gamma"), e("exp(T)")).unwrap();
    let shift = s.shift(&f);
    for n in 0..4 {
        let div = ScalarExpr::sum((0..4).map(|m| shift[m][n].differentiate(COORDS[m])));
        assert!(zero(&f, &div));
        for m in 0..4 {
            assert!(zero(&f, &(&shift[m][n] - &shift[n][m])));
        }
    }
}

#[test]
fn shift_decomposition_has_opposite_sign() {
    // explicit shift = γI(∇^νu^μ − θuu) − (γDI + γIθ)Δ, so it matches the
    // displayed transformation only with γ → −γ
    let f = BjorkenFlow::with_default_profile();
    let s = PGTSuperpotential::new(e("gamma"), e("T^3")).unwrap();
    let found = DissipativeDecomposition::from_tensor(&s.shift(&f), &f).unwrap();
    let i = s.scalar_on(&f);
    let theta = expansion_scalar(&f);
    let gi = e("gamma") * &i;
    assert!(zero(&f, &(&found.energy + &gi * &theta)));
    let di = f.directional_derivative(&i);
    let expected_pv = e("gamma") * di + ScalarExpr::rational(2, 3) * &gi * &theta;
    assert!(zero(&f, &(&found.pressure_volume - expected_pv)));
    let sigma = shear_tensor(&f).unwrap();
    for m in 0..4 {
        for n in 0..4 {
            assert!(zero(&f, &(&found.shear[m][n] - &gi * &sigma[m][n])));
        }
    }
    let displayed = apply_pgt(&DissipativeDecomposition::perfect_fluid(e("0"), e("0")), &s, &f).unwrap();
    assert!(!zero(&f, &(&found.energy - &displayed.energy)));
}

#[test]
fn decomposition_round_trip() {
    let f = BjorkenFlow::with_default_profile();
    let d = DissipativeDecomposition::perfect_fluid(e("3*tau0"), e("tau0"));
    let back = DissipativeDecomposition::from_tensor(&d.tensor(&f), &f).unwrap();
    assert!(zero(&f, &(&back.energy - e("3*tau0"))));
    assert!(zero(&f, &(&back.pressure_volume - e("tau0"))));
    assert!(back.shear.iter().flatten().all(|c| zero(&f, c)));
}

#[test]
fn pgt_special_cases() {
    let f = BjorkenFlow::with_default_profile();
    let d = DissipativeDecomposition::perfect_fluid(e("3*T0"), e("T0"));
    let none = apply_pgt(&d, &PGTSuperpotential::new(e("0"), e("T^3")).unwrap(), &f).unwrap();
    assert!(zero(&f, &(&none.energy - &d.energy)));
    assert!(zero(&f, &(&none.pressure_volume - &d.pressure_volume)));
    assert!(zero(&f, &none.bulk));
    assert!(none.shear.iter().flatten().all(|c| zero(&f, c)));

    let c = PGTSuperpotential::new(e("gamma"), e("5")).unwrap();
    let out = apply_pgt(&d, &c, &f).unwrap();
    let theta = expansion_scalar(&f);
    assert!(zero(&f, &(&out.pressure_volume - &d.pressure_volume)));
    assert!(zero(&f, &(&out.energy - &d.energy - e("5*gamma") * &theta)));
    assert!(zero(&f, &(out.total_pressure() - &d.pressure_volume + ScalarExpr::rational(10, 3) * e("gamma") * &theta)));

    let t3 = apply_pgt(&d, &PGTSuperpotential::new(e("1"), e("T^3")).unwrap(), &f).unwrap();
    for x in [&t3.energy, &t3.pressure_volume, &t3.bulk] {
        assert!(at(x, 2.0, 0.5).is_finite());
    }
}

#[test]
fn entropy_production_cases() {
    let f = BjorkenFlow::with_default_profile();
    let perfect = DissipativeDecomposition::perfect_fluid(e("3*T0"), e("T0"));
    assert!(entropy_production(&perfect, &f).unwrap().is_zero_const());

    let sigma = shear_tensor(&f).unwrap();
    let viscous = DissipativeDecomposition { shear: sigma.clone(), ..perfect.clone() };
    let p = entropy_production(&viscous, &f).unwrap();
    assert!(zero(&f, &(&p - ScalarExpr::rational(2, 3) * f.tau().powi(2).recip())));
    assert!(at(&p, 2.0, 1.0) > 0.0);

    for i in ["T^3", "exp(T)", "7"] {
        let s = PGTSuperpotential::new(e("gamma"), e(i)).unwrap();
        let after = apply_pgt(&perfect, &s, &f).unwrap();
        let p = entropy_production(&after, &f).unwrap();
        assert!(zero(&f, &p), "I = {i}");
        let literal = -(e("gamma") * s.scalar_on(&f)) * sigma_identity_residual(&f).unwrap();
        assert!(zero(&f, &(&p - literal)), "I = {i}");
    }
}

#[test]
fn demo_defaults() {
    let r = full_pgt_demo(&PgtDemoParams::default(), &Config::default()).unwrap();
    assert!(r.passed(), "{r:?}");
    assert!(r.max_residual < 1e-10, "{r:#?}");
    assert!(r.shift_decomposition.passed());
    assert!(r.volume_gradient > 0.5);
    assert_eq!(r.seed, 42);
    let again = full_pgt_demo(&PgtDemoParams::default(), &Config::default()).unwrap();
    assert_eq!(serde_json::to_string(&r).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn demo_sweeps() {
    for (gamma, i) in [("-2", "T^3"), ("1/2", "T^3"), ("10", "T^3"), ("gamma", "exp(T)"), ("gamma", "1")] {
        let params = PgtDemoParams { gamma: e(gamma), i_of_t: e(i), ..PgtDemoParams::default() };
        let r = full_pgt_demo(&params, &cfg()).unwrap();
        assert!(r.passed(), "γ = {gamma}, I = {i}: {r:?}");
    }
    let params = PgtDemoParams { temperature_profile: e("1/tau"), ..PgtDemoParams::default() };
    assert!(full_pgt_demo(&params, &cfg()).unwrap().passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn entropy_after_pgt_vanishes(a in -3i64..=3, n in 0i64..=4, p in 1i64..=5, q in 1i64..=5) {
        let f = BjorkenFlow::new(&e(&format!("tau^(-{p}/{})", q + 2))).unwrap();
        let s = PGTSuperpotential::new(e("gamma"), ScalarExpr::int(a) * e("T").powi(n) + e("exp(T)")).unwrap();
        let d = DissipativeDecomposition::perfect_fluid(e("3*T^4"), e("T^4"));
        let after = apply_pgt(&d, &s, &f).unwrap();
        prop_assert!(zero(&f, &entropy_production(&after, &f).unwrap()));
    }
}
