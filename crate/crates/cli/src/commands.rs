use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kontact::bjorken::{full_pgt_demo, parse_field, IdentityCheck, PgtDemoParams};
use kontact::forms::VectorField;
use kontact::hddw::{
    check_constrained_solution, integrate_contact_flow, isentropic_system, section_residual, solve_at_samples,
    KContactHamiltonianSystem,
};
use kontact::hydro::{
    conformal_pressure, equilibrium_conditions_residual, equilibrium_legendrian, hydro_system, HydroSectionFile,
};
use kontact::kcontact::{check_polarization, check_reeb, check_reeb_commutation, compute_reeb, verify_kcontact, ReebFrame};
use kontact::legendrian::{
    build_parametrization, check_compatibility, check_gibbs_equality, ideal_gas_energy, legendrian_dimension,
    proof_complement, thermo_complement, thermo_parametrization, verify_isotropic, IdealGas, KFunctionFile,
    LegendrianError,
};
use kontact::symexpr::{parse_expr, SamplePoint, ScalarExpr, ZeroVerdict};
use kontact::Config;
use serde_json::json;

use crate::builtins::{resolve, Builtin, Resolved};
use crate::report::{Report, Verdict};
use crate::UsageError;

fn expr(what: &str, src: &str) -> Result<ScalarExpr> {
    parse_expr(src).map_err(|e| UsageError(format!("{what}: {e}")).into())
}

fn frame_json(frame: &ReebFrame) -> serde_json::Value {
    let fields: Vec<BTreeMap<String, String>> = frame
        .fields
        .iter()
        .map(|f| {
            f.chart()
                .coords()
                .iter()
                .zip(f.components())
                .filter(|(_, c)| !c.is_zero_const())
                .map(|(n, c)| (n.clone(), c.to_string()))
                .collect()
        })
        .collect();
    json!(fields)
}

fn reeb_checks(report: &mut Report, r: &Resolved, cfg: &Config) -> Result<ReebFrame> {
    let s = &r.structure;
    let tester = s.zero_tester(cfg)?;
    let frame = compute_reeb(s, &tester)?;
    let c = check_reeb(s, &frame, &tester)?;
    report.check("reeb_duality", c.duality.into(), Some(c.max_residual));
    report.check("reeb_annihilates_d_eta", c.annihilates_d_eta.into(), None);
    report.check("reeb_lie_derivative_eta", c.lie_derivative_eta.into(), None);
    report.pass_if("reeb_commutation", check_reeb_commutation(&frame, &tester)?);
    if let Some(expected) = &r.expected_reeb {
        let ok = frame.fields.len() == expected.len()
            && frame.fields.iter().zip(expected).all(|(f, &i)| *f == VectorField::coordinate(s.chart(), i));
        report.pass_if("reeb_coordinate_frame", ok).detail =
            Some(format!("expected ∂/∂{}", expected.iter().map(|&i| s.chart().coords()[i].as_str()).collect::<Vec<_>>().join(", ∂/∂")));
    }
    Ok(frame)
}

pub fn verify_structure(builtin: Option<&str>, file: Option<&Path>, points: usize, cfg: &Config) -> Result<Report> {
    let r = resolve(builtin, file)?;
    let mut report = Report::new("verify-structure", cfg);
    let s = &r.structure;
    let sr = verify_kcontact(s, points, cfg)?;
    report.pass_if("condition1_eta_rank", sr.condition1);
    report.pass_if("condition2_ker_d_eta_rank", sr.condition2);
    report.pass_if("condition3_trivial_intersection", sr.condition3);
    let frame = reeb_checks(&mut report, &r, cfg)?;
    let mut polarization = serde_json::Value::Null;
    if let Some(v) = &r.polarization {
        let tester = s.zero_tester(cfg)?;
        let pr = check_polarization(s, v, &tester, cfg.rank_threshold)?;
        report.pass_if("polarization", pr.passed()).detail = Some(format!("rank {}..{} of {:?}", pr.min_rank, pr.max_rank, pr.expected_rank));
        polarization = json!(pr);
    }
    report.data = json!({
        "structure": r.name,
        "k": s.k(),
        "dim": s.dim(),
        "points": points,
        "degenerate_points": sr.degenerate_points,
        "rank_table": sr.points,
        "reeb": frame_json(&frame),
        "polarization": polarization,
    });
    Ok(report)
}

pub fn reeb(builtin: Option<&str>, file: Option<&Path>, cfg: &Config) -> Result<Report> {
    let r = resolve(builtin, file)?;
    let mut report = Report::new("reeb", cfg);
    let frame = reeb_checks(&mut report, &r, cfg)?;
    report.data = json!({ "structure": r.name, "k": r.structure.k(), "dim": r.structure.dim(), "reeb": frame_json(&frame) });
    Ok(report)
}

pub enum LegendrianSource {
    KFunction(PathBuf),
    Thermo { f: Option<String>, gibbs: bool },
    HydroEquilibrium { k: usize, pressure: Option<String> },
}

fn isotropy_checks(report: &mut Report, iso: &kontact::legendrian::IsotropyReport) {
    report.check("eta_pullback", iso.eta_pullback.into(), Some(iso.max_residual));
    report.check("d_eta_pullback", iso.d_eta_pullback.into(), None);
}

pub fn legendrian(src: &LegendrianSource, cfg: &Config) -> Result<Report> {
    let mut report = Report::new("legendrian", cfg);
    match src {
        LegendrianSource::KFunction(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: KFunctionFile = serde_json::from_str(&text)
                .map_err(|e| UsageError(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))?;
            let f = file.build().map_err(|e| match e {
                LegendrianError::Parse { .. } | LegendrianError::InvalidKFunction(_) => {
                    anyhow::Error::from(UsageError(format!("{}: {e}", path.display())))
                }
                other => other.into(),
            })?;
            let tester = f.parameter_chart().zero_tester(cfg)?;
            let compat = check_compatibility(&f, &tester)?;
            report.check("compatibility", Verdict::from_bool(compat.compatible), Some(compat.max_residual));
            if !compat.compatible {
                report.data = json!({ "compatibility": compat });
                return Ok(report);
            }
            let l = build_parametrization(&f, &tester)?;
            let s = kontact::kcontact::canonical_structure(f.n(), f.k());
            let w = proof_complement(&f, s.chart())?;
            let iso = verify_isotropic(&l.map, &s, Some(&w), &tester, cfg.rank_threshold)?;
            isotropy_checks(&mut report, &iso);
            let expected = legendrian_dimension(f.n(), f.k(), l.n1());
            report.pass_if("dimension", iso.dimension == expected);
            report.data = json!({
                "n": f.n(), "k": f.k(), "n1": l.n1(),
                "dimension": iso.dimension, "expected_dimension": expected,
                "linear_in_momenta": compat.linear_in_momenta,
                "certificate": iso.certificate,
            });
        }
        LegendrianSource::Thermo { f, gibbs } => {
            let f = match f {
                Some(src) => expr("--f", src)?,
                None => ideal_gas_energy(&IdealGas::default()),
            };
            let l = thermo_parametrization(&f)?;
            let s = kontact::kcontact::thermo_structure();
            let tester = l.map.source().zero_tester(cfg)?;
            let w = thermo_complement(s.chart())?;
            let iso = verify_isotropic(&l.map, &s, Some(&w), &tester, cfg.rank_threshold)?;
            isotropy_checks(&mut report, &iso);
            let mut data = json!({ "f": f.to_string(), "dimension": iso.dimension, "certificate": iso.certificate });
            if *gibbs {
                match check_gibbs_equality(&f, &l, &tester) {
                    Ok(g) => {
                        report.check("gibbs_equality", g.verdict.into(), Some(g.max_residual));
                        data["euler_residual"] = json!(g.euler_residual);
                    }
                    // the equality is only expected for extensive f; say so instead of failing
                    Err(LegendrianError::NotHomogeneous { residual }) => {
                        data["euler_residual"] = json!(residual);
                        data["gibbs"] = json!("not applicable: f is not homogeneous of degree 1");
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            report.data = data;
        }
        LegendrianSource::HydroEquilibrium { k, pressure } => {
            let p = match pressure {
                Some(src) => expr("--pressure", src)?,
                None => conformal_pressure(),
            };
            let l = equilibrium_legendrian(*k, &p)?;
            let sys = hydro_system(*k, cfg)?;
            let tester = l.map.source().zero_tester(cfg)?;
            let iso = verify_isotropic(&l.map, sys.structure(), None, &tester, cfg.rank_threshold)?;
            isotropy_checks(&mut report, &iso);
            let c = check_constrained_solution(&sys, &l.map, &tester, cfg)?;
            report.check("hamiltonian_restricted", c.hamiltonian_restricted.into(), Some(c.hamiltonian_residual));
            report.pass_if("feasible", c.feasible == Some(true));
            let nullity_ok = c.expected_nullity.is_some_and(|e| c.constrained_nullity.iter().all(|&m| m == e));
            report.pass_if("constrained_nullity", nullity_ok).detail =
                Some(format!("expected {:?}", c.expected_nullity));
            report.data = json!({ "k": k, "pressure": p.to_string(), "dimension": iso.dimension, "constrained": c });
        }
    }
    Ok(report)
}

/// `random` or `name=value,...` (unlisted coordinates are 0).
pub fn parse_point(spec: &str, coords: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, f64> = coords.iter().map(|c| (c.clone(), 0.0)).collect();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part.split_once('=').ok_or_else(|| UsageError(format!("bad point entry `{part}`")))?;
        let name = name.trim();
        if !out.contains_key(name) {
            return Err(UsageError(format!("unknown coordinate `{name}` in --point")).into());
        }
        let v: f64 = value.trim().parse().map_err(|_| UsageError(format!("bad value in `{part}`")))?;
        out.insert(name.into(), v);
    }
    Ok(out)
}

pub struct HddwArgs<'a> {
    pub builtin: Option<&'a str>,
    pub file: Option<&'a Path>,
    pub hamiltonian: Option<&'a str>,
    pub point: &'a str,
    pub points: usize,
    pub section: Option<&'a Path>,
    pub map: Option<&'a str>,
}

pub fn hddw(args: &HddwArgs, cfg: &Config) -> Result<Report> {
    let r = resolve(args.builtin, args.file)?;
    let h = match args.hamiltonian {
        Some(src) => expr("--hamiltonian", src)?,
        None => r.hamiltonian.clone().unwrap_or_else(ScalarExpr::zero),
    };
    if let Some(v) = h.free_variables().into_iter().find(|v| r.structure.chart().index_of(v).is_none()) {
        return Err(UsageError(format!("hamiltonian uses `{v}`, which is not a chart coordinate")).into());
    }
    let tester = r.structure.zero_tester(cfg)?;
    let sys = KContactHamiltonianSystem::new(r.structure.clone(), h.clone(), &tester)?;
    let mut report = Report::new("hddw", cfg);

    let points = if args.point == "random" {
        sys.chart().sample_domain().sample(args.points, cfg.seed, cfg.max_retries)?
    } else {
        vec![SamplePoint::from_floats(parse_point(args.point, sys.chart().coords())?)]
    };
    let sols = solve_at_samples(&sys, &points, cfg)?;
    let expected = sys.expected_nullity();
    let nullities: Vec<usize> = sols.iter().map(|s| s.nullity()).collect();
    report.pass_if("nullspace_dim", nullities.iter().all(|&m| m == expected)).detail =
        Some(format!("expected {expected}, found {nullities:?}"));
    let max_res = sols.iter().map(|s| s.residual_norm).fold(0.0, f64::max);
    report.check("particular_residual", Verdict::from_bool(sols.iter().all(|s| s.residual_norm <= s.tolerance)), Some(max_res));

    let mut data = json!({
        "structure": r.name,
        "hamiltonian": h.to_string(),
        "k": sys.k(),
        "dim": sys.dim(),
        "expected_nullspace_dim": expected,
        "points": sols.iter().map(|s| json!({
            "point": s.point,
            "nullspace_dim": s.nullity(),
            "residual_norm": s.residual_norm,
        })).collect::<Vec<_>>(),
    });

    match (args.section, args.map, r.builtin) {
        (Some(path), None, Some(Builtin::Hydro(k))) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: HydroSectionFile = serde_json::from_str(&text)
                .map_err(|e| UsageError(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))?;
            if file.k != k {
                return Err(UsageError(format!("section file has k = {}, structure has k = {k}", file.k)).into());
            }
            let psi = file.build().map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
            let t = psi.source().zero_tester(cfg)?;
            let eq = equilibrium_conditions_residual(&sys, &psi, &t)?;
            for f in &eq.families {
                report.check(&format!("family_{}", f.name), Verdict::from_bool(f.passed), Some(f.max_residual));
            }
            report.pass_if("families_agree_with_hddw", eq.agrees);
            data["equilibrium"] = json!(eq);
        }
        (None, Some(name), _) => {
            let psi = r.maps.get(name).ok_or_else(|| UsageError(format!("no map named `{name}` in the definition file")))?;
            let t = psi.source().zero_tester(cfg)?;
            let res = section_residual(&sys, psi, &t)?;
            report.check("section_first_equation", Verdict::from_bool(res.first_verdicts.iter().all(|v| *v == ZeroVerdict::Zero)), Some(res.max_first));
            report.check("section_second_equation", res.second_verdict.into(), Some(res.max_second));
            data["section"] = json!({ "nonzero_components": res.nonzero_components(sys.chart()) });
        }
        (None, None, _) => {}
        (Some(_), _, _) => return Err(UsageError("--section needs a hydro builtin (hydro4, hydro:K)".into()).into()),
    }
    report.data = data;
    Ok(report)
}

pub struct IdealGasArgs<'a> {
    pub cv: &'a str,
    pub t_end: f64,
    pub dt: f64,
    pub s0: f64,
    pub v0: f64,
    pub n0: f64,
    pub csv: Option<&'a Path>,
}

fn max_rel(values: &[f64], target: impl Fn(usize) -> f64) -> f64 {
    values.iter().enumerate().map(|(i, v)| (v - target(i)).abs() / target(i).abs().max(1e-300)).fold(0.0, f64::max)
}

pub fn ideal_gas(args: &IdealGasArgs, cfg: &Config) -> Result<Report> {
    if !(args.dt > 0.0 && args.dt.is_finite() && args.t_end >= 0.0 && args.t_end.is_finite()) {
        return Err(UsageError(format!("need dt > 0 and t_end >= 0, got dt = {}, t_end = {}", args.dt, args.t_end)).into());
    }
    if [args.s0, args.v0, args.n0].iter().any(|v| !(*v > 0.0)) {
        return Err(UsageError("--s0, --v0 and --n0 must be positive".into()).into());
    }
    let gas = IdealGas { cv: expr("--cv", args.cv)?, ..IdealGas::default() };
    let f = ideal_gas_energy(&gas);
    let sys = isentropic_system(&f, cfg)?;
    let l = thermo_parametrization(&f)?;
    let start = SamplePoint::from_floats([("S".into(), args.s0), ("V".into(), args.v0), ("N".into(), args.n0)].into());
    let image = l.map.image_point(&start)?;
    let x0: BTreeMap<String, f64> = sys.chart().coords().iter().map(|c| (c.clone(), image.floats[c])).collect();
    let traj = integrate_contact_flow(&sys, &x0, args.t_end, args.dt, cfg)?;

    let col = |c: &str| traj.column(c).expect("thermo coordinate");
    let (s, v, n) = (col("S"), col("V"), col("N"));
    let (p, t) = (col("P"), col("T"));
    let mut report = Report::new("ideal-gas", cfg);
    let tol = 1e-6;
    let rel_s = max_rel(&s, |_| args.s0);
    report.check("entropy_constant", Verdict::from_bool(rel_s <= tol), Some(rel_s));
    let rel_n = max_rel(&n, |_| args.n0);
    report.check("particles_constant", Verdict::from_bool(rel_n <= tol), Some(rel_n));
    let rel_v = max_rel(&v, |i| args.v0 * traj.times[i].exp());
    report.check("volume_exponential", Verdict::from_bool(rel_v <= tol), Some(rel_v));
    // P V = N R T with R = 1
    let pv: Vec<f64> = p.iter().zip(&v).map(|(p, v)| p * v).collect();
    let rel_eos = max_rel(&pv, |i| n[i] * t[i]);
    report.check("equation_of_state", Verdict::from_bool(rel_eos <= tol), Some(rel_eos));
    let last = traj.states.last().expect("at least the initial state");
    let end: BTreeMap<String, f64> = traj.coords.iter().cloned().zip(last.iter().copied()).collect();
    let on_l = l.map.image_point(&SamplePoint::from_floats(
        [("S".into(), end["S"]), ("V".into(), end["V"]), ("N".into(), end["N"])].into(),
    ))?;
    let rel_l = ["E", "P", "T", "mu"]
        .iter()
        .map(|c| (end[*c] - on_l.floats[*c]).abs() / on_l.floats[*c].abs().max(1.0))
        .fold(0.0, f64::max);
    report.check("stays_on_legendrian", Verdict::from_bool(rel_l <= tol), Some(rel_l));

    if let Some(path) = args.csv {
        if path == Path::new("-") {
            traj.write_csv(std::io::stdout().lock())?;
        } else {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            traj.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    report.data = json!({
        "cv": gas.cv.to_string(),
        "hamiltonian": sys.hamiltonian().to_string(),
        "t_end": args.t_end,
        "dt": args.dt,
        "steps": traj.times.len() - 1,
        "initial": x0,
        "final": end,
    });
    Ok(report)
}

pub struct BjorkenArgs<'a> {
    pub i_of_t: &'a str,
    pub gamma: &'a str,
    pub t_profile: &'a str,
    pub energy: &'a str,
    pub pressure_volume: &'a str,
}

pub fn bjorken(args: &BjorkenArgs, cfg: &Config) -> Result<Report> {
    let usage = |e: kontact::bjorken::BjorkenError| anyhow::Error::from(UsageError(e.to_string()));
    let params = PgtDemoParams {
        i_of_t: parse_field("--I", args.i_of_t).map_err(usage)?,
        gamma: parse_field("--gamma", args.gamma).map_err(usage)?,
        temperature_profile: parse_field("--T-profile", args.t_profile).map_err(usage)?,
        energy: parse_field("--energy", args.energy).map_err(usage)?,
        pressure_volume: parse_field("--pressure", args.pressure_volume).map_err(usage)?,
    };
    let d = full_pgt_demo(&params, cfg).map_err(|e| match e {
        kontact::bjorken::BjorkenError::ForeignVariable { .. } => usage(e),
        other => other.into(),
    })?;
    let mut report = Report::new("bjorken", cfg);
    let rows: [(&str, &IdentityCheck); 9] = [
        ("normalization", &d.normalization),
        ("theta_identity", &d.theta_identity),
        ("sigma_orthogonality", &d.sigma_orthogonality),
        ("sigma_traceless", &d.sigma_traceless),
        ("sigma_identity", &d.sigma_identity),
        ("antisymmetry", &d.antisymmetry),
        ("divergence_free_shift", &d.divergence_free_shift),
        ("entropy_before", &d.entropy_before),
        ("entropy_after", &d.entropy_after),
    ];
    for (name, c) in rows {
        report.check(name, c.verdict.into(), Some(c.max_residual));
    }
    report.data = json!({
        "I": params.i_of_t.to_string(),
        "gamma": params.gamma.to_string(),
        "T_profile": params.temperature_profile.to_string(),
        "demo": d,
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_parsing() {
        let coords = vec!["a".to_string(), "b".to_string()];
        let p = parse_point("a = 1.5, b=-2", &coords).unwrap();
        assert_eq!(p["a"], 1.5);
        assert_eq!(p["b"], -2.0);
        assert_eq!(parse_point("b=1", &coords).unwrap()["a"], 0.0);
        assert!(parse_point("c=1", &coords).is_err());
        assert!(parse_point("a", &coords).is_err());
        assert!(parse_point("a=x", &coords).is_err());
    }

    #[test]
    fn max_relative_deviation() {
        assert_eq!(max_rel(&[1.0, 1.5], |_| 1.0), 0.5);
        assert_eq!(max_rel(&[2.0], |_| 2.0), 0.0);
    }
}
