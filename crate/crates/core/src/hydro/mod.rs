//! Extensive relativistic hydrodynamics as a k-contact system.
//!
//! Chart order (fixed, used by files and reports):
//! `S0..S{k-1}, P0..P{k-1}, V, xi, N0..N{k-1}, beta0..beta{k-1}, T00..T{k-1}{k-1}`,
//! `k² + 4k + 2` coordinates in total. Greek indices run over `0..k` and are
//! lowered with the diagonal metric `diag(+1, −1, …, −1)`.

mod tensors;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{same_chart, Chart, DifferentialForm, FormsError, SmoothMap, VectorField};
use crate::hddw::{section_residual, HddwError, KContactHamiltonianSystem};
use crate::kcontact::{KContactError, KContactStructure};
use crate::symexpr::{parse_expr, ParseError, ScalarExpr, ZeroTestError, ZeroTester, ZeroVerdict};
use crate::Config;

pub use tensors::{delta_projector, projectors, FluidTensors, MinkowskiMetric, Rank4Projector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HydroError {
    #[error("hydro structures need k ≥ 2, got {0}")]
    InvalidK(usize),
    #[error("the rank-4 projector is defined for k = 4 only, got k = {0}")]
    DimensionNot4(usize),
    #[error("unknown hydro field `{0}`")]
    UnknownField(String),
    #[error("in field `{field}`: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    KContact(#[from] KContactError),
    #[error(transparent)]
    Hddw(#[from] HddwError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

impl From<crate::symexpr::EvalError> for HydroError {
    fn from(e: crate::symexpr::EvalError) -> Self {
        HydroError::ZeroTest(e.into())
    }
}

fn idx(k: usize, l: usize, m: usize) -> String {
    if k > 9 {
        format!("T{l}_{m}")
    } else {
        format!("T{l}{m}")
    }
}

/// Coordinate names and positions of the hydro chart for a given `k`.
#[derive(Debug, Clone)]
pub struct HydroChart {
    k: usize,
    chart: Arc<Chart>,
}

impl HydroChart {
    pub fn new(k: usize) -> Result<Self, HydroError> {
        if k < 2 {
            return Err(HydroError::InvalidK(k));
        }
        let mut c: Vec<String> = (0..k).map(|m| format!("S{m}")).collect();
        c.extend((0..k).map(|m| format!("P{m}")));
        c.push("V".into());
        c.push("xi".into());
        c.extend((0..k).map(|m| format!("N{m}")));
        c.extend((0..k).map(|m| format!("beta{m}")));
        for l in 0..k {
            c.extend((0..k).map(|m| idx(k, l, m)));
        }
        let chart = Chart::new(&c)?.with_constraint(ScalarExpr::var("V")).with_range("V", 0.5, 2.0).shared();
        Ok(HydroChart { k, chart })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn s(&self, m: usize) -> usize {
        m
    }

    pub fn p(&self, m: usize) -> usize {
        self.k + m
    }

    pub fn v(&self) -> usize {
        2 * self.k
    }

    pub fn xi(&self) -> usize {
        2 * self.k + 1
    }

    pub fn n(&self, m: usize) -> usize {
        2 * self.k + 2 + m
    }

    pub fn beta(&self, m: usize) -> usize {
        3 * self.k + 2 + m
    }

    pub fn t(&self, l: usize, m: usize) -> usize {
        4 * self.k + 2 + l * self.k + m
    }

    pub fn name(&self, i: usize) -> &str {
        &self.chart.coords()[i]
    }

    pub fn var(&self, i: usize) -> ScalarExpr {
        self.chart.coord(i)
    }
}

/// `k² + 4k + 2`.
pub fn hydro_dimension(k: usize) -> usize {
    k * k + 4 * k + 2
}

/// `η^μ = dS^μ + ξ dN^μ − β_λ dT^{λμ} − P^μ dV`.
pub fn hydro_kcontact_form(k: usize) -> Result<KContactStructure, HydroError> {
    let h = HydroChart::new(k)?;
    let g = MinkowskiMetric::new(k);
    let chart = h.chart().clone();
    let forms = (0..k)
        .map(|mu| {
            let mut terms = vec![(vec![h.s(mu)], ScalarExpr::one()), (vec![h.n(mu)], h.var(h.xi()))];
            for l in 0..k {
                terms.push((vec![h.t(l, mu)], ScalarExpr::int(-g.sign(l)) * h.var(h.beta(l))));
            }
            terms.push((vec![h.v()], -h.var(h.p(mu))));
            DifferentialForm::from_terms(&chart, 1, terms)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(KContactStructure::from_forms(&chart, forms)?)
}

/// `β_λ ∂/∂S^μ + ∂/∂T^{λμ}`, `−ξ ∂/∂S^μ + ∂/∂N^μ`, `∂/∂P^μ`: `k(k + 2)` fields.
pub fn hydro_polarization(k: usize) -> Result<Vec<VectorField>, HydroError> {
    let h = HydroChart::new(k)?;
    let g = MinkowskiMetric::new(k);
    let mut out = Vec::with_capacity(k * (k + 2));
    for l in 0..k {
        for mu in 0..k {
            let beta_lower = ScalarExpr::int(g.sign(l)) * h.var(h.beta(l));
            out.push(VectorField::from_named(
                h.chart(),
                &[(h.name(h.s(mu)), beta_lower), (h.name(h.t(l, mu)), ScalarExpr::one())],
            )?);
        }
    }
    for mu in 0..k {
        out.push(VectorField::from_named(
            h.chart(),
            &[(h.name(h.s(mu)), -h.var(h.xi())), (h.name(h.n(mu)), ScalarExpr::one())],
        )?);
    }
    for mu in 0..k {
        out.push(VectorField::coordinate(h.chart(), h.p(mu)));
    }
    Ok(out)
}

/// The `H = 0` system on the hydro chart (Reeb frame computed, not assumed).
pub fn hydro_system(k: usize, cfg: &Config) -> Result<KContactHamiltonianSystem, HydroError> {
    let s = hydro_kcontact_form(k)?;
    let tester = s.zero_tester(cfg)?;
    Ok(KContactHamiltonianSystem::new(s, ScalarExpr::zero(), &tester)?)
}

/// `S^μ = P^μ V − ξ N^μ + β_λ T^{λμ}` in chart variables.
pub fn entropy_current(k: usize) -> Result<Vec<ScalarExpr>, HydroError> {
    let h = HydroChart::new(k)?;
    let g = MinkowskiMetric::new(k);
    Ok((0..k)
        .map(|mu| {
            let mut terms = vec![h.var(h.p(mu)) * h.var(h.v()), -(h.var(h.xi()) * h.var(h.n(mu)))];
            for l in 0..k {
                terms.push(ScalarExpr::int(g.sign(l)) * h.var(h.beta(l)) * h.var(h.t(l, mu)));
            }
            ScalarExpr::sum(terms)
        })
        .collect())
}

/// Spacetime chart `(t, x, y, z)` truncated to `k` coordinates (`t, x1, …` beyond 4).
pub fn spacetime_chart(k: usize) -> Arc<Chart> {
    let names: Vec<String> = if k <= 4 {
        ["t", "x", "y", "z"][..k].iter().map(|s| s.to_string()).collect()
    } else {
        std::iter::once("t".to_string()).chain((1..k).map(|i| format!("x{i}"))).collect()
    };
    Chart::new(&names).expect("valid names").shared()
}

/// Section file: `{"k": 4, "fields": {"xi": "t", "T01": "x"}}`. Fields that
/// are not listed are the constant 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroSectionFile {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
}

fn default_k() -> usize {
    4
}

impl HydroSectionFile {
    pub fn build(&self) -> Result<SmoothMap, HydroError> {
        let h = HydroChart::new(self.k)?;
        let mut comps = vec![ScalarExpr::zero(); h.dim()];
        for (name, src) in &self.fields {
            let i = h.chart().index_of(name).ok_or_else(|| HydroError::UnknownField(name.clone()))?;
            comps[i] = parse_expr(src).map_err(|source| HydroError::Parse { field: name.clone(), source })?;
        }
        Ok(SmoothMap::new(&spacetime_chart(self.k), h.chart(), comps)?)
    }
}

/// Build a section from named components; unnamed coordinates are 0.
pub fn hydro_section(k: usize, fields: &[(&str, ScalarExpr)]) -> Result<SmoothMap, HydroError> {
    let h = HydroChart::new(k)?;
    let mut comps = vec![ScalarExpr::zero(); h.dim()];
    for (name, e) in fields {
        let i = h.chart().index_of(name).ok_or_else(|| HydroError::UnknownField(name.to_string()))?;
        comps[i] = e.clone();
    }
    Ok(SmoothMap::new(&spacetime_chart(k), h.chart(), comps)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyResult {
    pub name: String,
    pub passed: bool,
    pub max_residual: f64,
    #[serde(skip)]
    pub components: Vec<ScalarExpr>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub families: Vec<FamilyResult>,
    pub all_passed: bool,
    /// Whether the raw `H = 0` HdDW residual vanishes.
    pub hddw_passed: bool,
    pub agrees: bool,
}

impl EquilibriumReport {
    pub fn failing(&self) -> Vec<&str> {
        self.families.iter().filter(|f| !f.passed).map(|f| f.name.as_str()).collect()
    }
}

/// The seven equilibrium families
/// `∂_μξ, ∂_μN^μ, ∂_μP^μ, ∂_μV, ∂_μβ_λ, Σ_μ ∂_μT^{λμ}, ∂_μS^μ`
/// along `psi`, cross-checked against the `H = 0` HdDW residual of `sys`.
/// `tester` samples the spacetime chart.
pub fn equilibrium_conditions_residual(
    sys: &KContactHamiltonianSystem,
    psi: &SmoothMap,
    tester: &ZeroTester,
) -> Result<EquilibriumReport, HydroError> {
    let k = sys.k();
    let h = HydroChart::new(k)?;
    if !same_chart(psi.target(), h.chart()) || !same_chart(sys.chart(), h.chart()) {
        return Err(FormsError::ChartMismatch("section target vs hydro chart".into()).into());
    }
    if psi.source().dim() != k {
        return Err(FormsError::SourceNotRk { expected: k, found: psi.source().dim() }.into());
    }
    let g = MinkowskiMetric::new(k);
    let x: Vec<String> = psi.source().coords().to_vec();
    let comp = |i: usize| psi.components()[i].clone();
    let d = |i: usize, mu: usize| comp(i).differentiate(&x[mu]);
    let div = |f: &dyn Fn(usize) -> usize| ScalarExpr::sum((0..k).map(|mu| d(f(mu), mu)));
    let entropy: Vec<ScalarExpr> = entropy_current(k)?.iter().map(|s| psi.compose(s)).collect();

    let families: Vec<(&str, Vec<ScalarExpr>)> = vec![
        ("d_xi", (0..k).map(|mu| d(h.xi(), mu)).collect()),
        ("div_N", vec![div(&|mu| h.n(mu))]),
        ("div_P", vec![div(&|mu| h.p(mu))]),
        ("d_V", (0..k).map(|mu| d(h.v(), mu)).collect()),
        (
            "d_beta",
            (0..k)
                .flat_map(|l| (0..k).map(move |mu| (l, mu)))
                .map(|(l, mu)| ScalarExpr::int(g.sign(l)) * d(h.beta(l), mu))
                .collect(),
        ),
        ("div_T", (0..k).map(|l| div(&|mu| h.t(l, mu))).collect()),
        ("div_S", vec![ScalarExpr::sum((0..k).map(|mu| entropy[mu].differentiate(&x[mu])))]),
    ];
    let mut out = Vec::with_capacity(families.len());
    for (name, components) in families {
        let mut passed = true;
        let mut max_residual: f64 = 0.0;
        for c in &components {
            let (v, r) = tester.verdict_with_residual(c)?;
            passed &= v == ZeroVerdict::Zero;
            max_residual = max_residual.max(r);
        }
        out.push(FamilyResult { name: name.into(), passed, max_residual, components });
    }
    let hddw_passed = section_residual(sys, psi, tester)?.vanishes();
    let all_passed = out.iter().all(|f| f.passed);
    Ok(EquilibriumReport { families: out, all_passed, hddw_passed, agrees: all_passed == hddw_passed })
}

/// Equilibrium Legendrian parametrized by `(β^μ, ξ, V)`.
#[derive(Debug, Clone)]
pub struct EquilibriumLegendrian {
    pub map: SmoothMap,
    /// Pressure `p(T, ξ)` used to build it.
    pub pressure: ScalarExpr,
}

/// `p = e^ξ T⁴`.
pub fn conformal_pressure() -> ScalarExpr {
    ScalarExpr::var("xi").exp() * ScalarExpr::var("T").powi(4)
}

/// `P^μ = p β^μ` with `T = (β·β)^(−1/2)`, `N^μ = V ∂P^μ/∂ξ`,
/// `T^{λμ} = −V ∂P^μ/∂β_λ` and `S^μ` from the Gibbs relation. The pullback
/// of every `η^μ` vanishes identically.
pub fn equilibrium_legendrian(k: usize, pressure: &ScalarExpr) -> Result<EquilibriumLegendrian, HydroError> {
    let h = HydroChart::new(k)?;
    let g = MinkowskiMetric::new(k);
    if let Some(v) = pressure.free_variables().into_iter().find(|v| v != "T" && v != "xi") {
        return Err(HydroError::UnknownField(v));
    }
    let beta_names: Vec<String> = (0..k).map(|m| h.name(h.beta(m)).to_string()).collect();
    let mut src_names = beta_names.clone();
    src_names.push("xi".into());
    src_names.push("V".into());
    let beta: Vec<ScalarExpr> = beta_names.iter().map(|b| ScalarExpr::var(b)).collect();
    let bb = g.dot(&beta, &beta);
    let mut source = Chart::new(&src_names)?
        .with_range(&beta_names[0], 1.5, 2.5)
        .with_range("xi", -1.0, 1.0)
        .with_range("V", 0.5, 2.0)
        .with_constraint(bb.clone())
        .with_constraint(ScalarExpr::var("V"));
    for b in &beta_names[1..] {
        source = source.with_range(b, -0.5, 0.5);
    }
    let source = source.shared();
    let temperature = bb.sqrt().recip();
    let p = pressure.substitute(&BTreeMap::from([("T".to_string(), temperature)]));
    let v = ScalarExpr::var("V");
    let xi = ScalarExpr::var("xi");
    let p_up: Vec<ScalarExpr> = beta.iter().map(|b| &p * b).collect();
    let n_up: Vec<ScalarExpr> = p_up.iter().map(|pm| &v * pm.differentiate("xi")).collect();
    // ∂/∂β_λ = g^{λλ} ∂/∂β^λ
    let t_up = |l: usize, mu: usize| -(&v * ScalarExpr::int(g.sign(l)) * p_up[mu].differentiate(&beta_names[l]));
    let mut comps = vec![ScalarExpr::zero(); h.dim()];
    for mu in 0..k {
        comps[h.p(mu)] = p_up[mu].clone();
        comps[h.n(mu)] = n_up[mu].clone();
        comps[h.beta(mu)] = beta[mu].clone();
        let mut s_terms = vec![&p_up[mu] * &v, -(&xi * &n_up[mu])];
        for l in 0..k {
            let t = t_up(l, mu);
            s_terms.push(ScalarExpr::int(g.sign(l)) * &beta[l] * &t);
            comps[h.t(l, mu)] = t;
        }
        comps[h.s(mu)] = ScalarExpr::sum(s_terms);
    }
    comps[h.v()] = v;
    comps[h.xi()] = xi;
    let map = SmoothMap::new(&source, h.chart(), comps)?;
    Ok(EquilibriumLegendrian { map, pressure: pressure.clone() })
}
