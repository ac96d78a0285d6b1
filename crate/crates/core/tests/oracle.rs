//! Cross-checks against values frozen by `oracle/derive.py`, an independent
//! sympy/numpy computation.

use std::collections::BTreeMap;

use kontact::bjorken::{expansion_scalar, shear_tensor, contract, BjorkenFlow};
use kontact::hddw::{integrate_contact_flow, isentropic_system, solve_hddw_at_point, KContactHamiltonianSystem};
use kontact::hydro::{entropy_current, hydro_kcontact_form, hydro_polarization};
use kontact::kcontact::{canonical_structure, check_polarization, compute_reeb, verify_kcontact, KContactStructure};
use kontact::forms::VectorField;
use kontact::symexpr::{ScalarExpr, SamplePoint};
use kontact::Config;
use serde_json::Value;

fn oracle() -> Value {
    serde_json::from_str(include_str!("fixtures/oracle.json")).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn bjorken_kinematics() {
    let o = oracle();
    let flow = BjorkenFlow::with_default_profile();
    let theta = expansion_scalar(&flow);
    let sigma = shear_tensor(&flow).unwrap();
    let sigma_sq = contract(&sigma, &sigma);
    let dtau = flow.tau().differentiate("t");
    for p in o["bjorken"]["points"].as_array().unwrap() {
        let (t, z) = (f(&p["t"]), f(&p["z"]));
        let at = |e: &ScalarExpr| {
            e.eval_f64(&|v| match v {
                "t" => Some(t),
                "z" => Some(z),
                "x" | "y" => Some(0.0),
                _ => None,
            })
            .unwrap()
        };
        assert!(close(at(flow.tau()), f(&p["tau"]), 1e-14));
        assert!(close(at(&theta), f(&p["theta"]), 1e-14), "theta at ({t}, {z})");
        assert!(close(at(&dtau), f(&p["dtau_dt"]), 1e-14));
        assert!(close(at(&sigma_sq), f(&p["sigma_sq"]), 1e-13));
        for m in 0..4 {
            for n in 0..4 {
                assert!(close(at(&sigma[m][n]), f(&p["sigma"][m][n]), 1e-13), "sigma[{m}][{n}] at ({t}, {z})");
            }
        }
    }
}

fn nullity(s: KContactStructure) -> usize {
    let cfg = Config::default();
    let tester = s.zero_tester(&cfg).unwrap();
    let sys = KContactHamiltonianSystem::new(s, ScalarExpr::zero(), &tester).unwrap();
    let p = sys.chart().sample_domain().sample(1, 3, cfg.max_retries).unwrap().remove(0);
    let n = solve_hddw_at_point(&sys, &p, &cfg).unwrap().nullity();
    assert_eq!(n, sys.expected_nullity());
    n
}

#[test]
fn canonical_nullities() {
    for c in oracle()["kcontact"]["canonical"].as_array().unwrap() {
        let (n, k) = (c["n"].as_u64().unwrap() as usize, c["k"].as_u64().unwrap() as usize);
        let s = canonical_structure(n, k);
        assert_eq!(s.dim() as u64, c["dim"].as_u64().unwrap());
        assert_eq!(nullity(s) as u64, c["nullity"].as_u64().unwrap(), "canonical ({n}, {k})");
    }
}

#[test]
fn hydro_structure() {
    let cfg = Config::default();
    for h in oracle()["kcontact"]["hydro"].as_array().unwrap() {
        let k = h["k"].as_u64().unwrap() as usize;
        let s = hydro_kcontact_form(k).unwrap();
        assert_eq!(s.dim() as u64, h["dim"].as_u64().unwrap());

        let r = verify_kcontact(&s, 5, &cfg).unwrap();
        for p in &r.points {
            assert_eq!(p.eta_rank as u64, h["eta_rank"].as_u64().unwrap());
            assert_eq!(p.ker_d_eta_dim as u64, h["ker_d_eta_dim"].as_u64().unwrap());
            assert_eq!(p.intersection_dim == 0, h["intersection_trivial"].as_bool().unwrap());
        }

        let tester = s.zero_tester(&cfg).unwrap();
        let frame = compute_reeb(&s, &tester).unwrap();
        for (a, field) in frame.fields.iter().enumerate() {
            assert_eq!(*field, VectorField::coordinate(s.chart(), a));
        }

        let pol = check_polarization(&s, &hydro_polarization(k).unwrap(), &tester, cfg.rank_threshold).unwrap();
        assert_eq!(pol.fields as u64, h["polarization_fields"].as_u64().unwrap());
        assert_eq!(pol.min_rank as u64, h["polarization_rank"].as_u64().unwrap());
        assert!(pol.passed());

        assert_eq!(nullity(s) as u64, h["nullity"].as_u64().unwrap(), "hydro k = {k}");
    }
}

#[test]
fn ideal_gas_trajectory() {
    let o = &oracle()["ideal_gas"];
    let cfg = Config::default();
    let gas = kontact::legendrian::ideal_gas_energy(&Default::default());
    let sys = isentropic_system(&gas, &cfg).unwrap();
    let x0: BTreeMap<String, f64> = o["initial"].as_object().unwrap().iter().map(|(k, v)| (k.clone(), f(v))).collect();
    for (dt, key) in [(0.01, "final_dt_0.01"), (0.1, "final_dt_0.1")] {
        let traj = integrate_contact_flow(&sys, &x0, 1.0, dt, &cfg).unwrap();
        let last = traj.states.last().unwrap();
        for (c, v) in traj.coords.iter().zip(last) {
            assert!(close(*v, f(&o[key][c]), 1e-11), "{c} at dt = {dt}: {v} vs {}", o[key][c]);
        }
    }
}

#[test]
fn perfect_fluid_entropy_current() {
    let o = &oracle()["entropy_current"];
    let values: BTreeMap<String, f64> = o["fields"].as_object().unwrap().iter().map(|(k, v)| (k.clone(), f(v))).collect();
    let p = SamplePoint::from_floats(values);
    for (mu, s) in entropy_current(4).unwrap().iter().enumerate() {
        let got = s.eval_f64(&p.lookup()).unwrap();
        assert!(close(got, f(&o["S"][mu]), 1e-14), "S^{mu}");
    }
}
