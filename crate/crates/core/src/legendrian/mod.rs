//! Legendrian submanifolds from parametrizing k-functions, isotropy checks by
//! pullback, and the contact-thermodynamics special case.

mod thermo;

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forms::{Chart, DifferentialForm, FormsError, SmoothMap, VectorField};
use crate::kcontact::{canonical_coords, canonical_structure, KContactStructure};
use crate::linalg;
use crate::symexpr::{parse_expr, ParseError, ScalarExpr, ZeroTestError, ZeroTester, ZeroVerdict};
use crate::par;

pub use thermo::{
    check_gibbs_equality, ideal_gas_energy, thermo_complement, thermo_parametrization, GibbsReport, IdealGas,
    ThermoParametrization,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LegendrianError {
    #[error("invalid k-function: {0}")]
    InvalidKFunction(String),
    #[error("incompatible k-function: ∂F^α/∂p^α_{index} differs between components")]
    IncompatibleKFunction { index: usize },
    #[error("f is not homogeneous of degree 1 (Euler residual {residual:.3e})")]
    NotHomogeneous { residual: f64 },
    #[error("expression error in F[{index}]: {source}")]
    Parse {
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

impl From<crate::symexpr::EvalError> for LegendrianError {
    fn from(e: crate::symexpr::EvalError) -> Self {
        LegendrianError::ZeroTest(e.into())
    }
}

/// `F^α(q^j, p^α_i)` with the index partition `{1..n} = I ⊔ J` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrizingKFunction {
    n: usize,
    k: usize,
    i_set: Vec<usize>,
    j_set: Vec<usize>,
    f: Vec<ScalarExpr>,
}

/// On-disk form: `{"n": 2, "k": 2, "I": [1], "F": ["p_1_1*q_2", "p_2_1*q_2"]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KFunctionFile {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "I", default)]
    pub i_set: Vec<usize>,
    #[serde(rename = "F")]
    pub f: Vec<String>,
}

impl KFunctionFile {
    pub fn build(&self) -> Result<ParametrizingKFunction, LegendrianError> {
        let f = self
            .f
            .iter()
            .enumerate()
            .map(|(index, src)| parse_expr(src).map_err(|source| LegendrianError::Parse { index, source }))
            .collect::<Result<Vec<_>, _>>()?;
        ParametrizingKFunction::new(self.n, self.k, &self.i_set, f)
    }
}

pub fn q_name(i: usize) -> String {
    format!("q_{i}")
}

pub fn p_name(alpha: usize, i: usize) -> String {
    format!("p_{alpha}_{i}")
}

pub fn s_name(alpha: usize) -> String {
    format!("s_{alpha}")
}

impl ParametrizingKFunction {
    pub fn new(n: usize, k: usize, i_set: &[usize], f: Vec<ScalarExpr>) -> Result<Self, LegendrianError> {
        let bad = |m: String| Err(LegendrianError::InvalidKFunction(m));
        if n == 0 || k == 0 {
            return bad("n and k must be positive".into());
        }
        if f.len() != k {
            return bad(format!("expected {k} functions, got {}", f.len()));
        }
        let set: BTreeSet<usize> = i_set.iter().copied().collect();
        if set.len() != i_set.len() {
            return bad("I contains duplicates".into());
        }
        if let Some(i) = set.iter().find(|&&i| i == 0 || i > n) {
            return bad(format!("index {i} outside 1..={n}"));
        }
        let i_set: Vec<usize> = set.iter().copied().collect();
        let j_set: Vec<usize> = (1..=n).filter(|j| !set.contains(j)).collect();
        for (a, fa) in f.iter().enumerate() {
            let alpha = a + 1;
            let allowed: BTreeSet<String> = j_set
                .iter()
                .map(|&j| q_name(j))
                .chain(i_set.iter().map(|&i| p_name(alpha, i)))
                .collect();
            if let Some(v) = fa.free_variables().into_iter().find(|v| !allowed.contains(v)) {
                return bad(format!("F[{a}] uses `{v}`; allowed variables are {allowed:?}"));
            }
        }
        Ok(ParametrizingKFunction { n, k, i_set, j_set, f })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn i_set(&self) -> &[usize] {
        &self.i_set
    }

    pub fn j_set(&self) -> &[usize] {
        &self.j_set
    }

    pub fn functions(&self) -> &[ScalarExpr] {
        &self.f
    }

    /// Parameter coordinates: `q_j` for `j ∈ J`, then `p_α_i` (α-major) for `i ∈ I`.
    pub fn parameter_coords(&self) -> Vec<String> {
        let mut c: Vec<String> = self.j_set.iter().map(|&j| q_name(j)).collect();
        for alpha in 1..=self.k {
            c.extend(self.i_set.iter().map(|&i| p_name(alpha, i)));
        }
        c
    }

    pub fn parameter_chart(&self) -> Arc<Chart> {
        Chart::new(&self.parameter_coords()).expect("generated names are valid").shared()
    }

    fn dfdp(&self, alpha: usize, i: usize) -> ScalarExpr {
        self.f[alpha - 1].differentiate(&p_name(alpha, i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub compatible: bool,
    /// `F^α = Σ_i p^α_i f^i(q) + g^α(q)` with shared `f^i`, recognised
    /// structurally; compatibility is then certain.
    pub linear_in_momenta: bool,
    pub max_residual: f64,
    /// First index `i ∈ I` whose partials disagree.
    pub first_incompatible: Option<usize>,
}

pub fn check_compatibility(f: &ParametrizingKFunction, tester: &ZeroTester) -> Result<CompatibilityReport, LegendrianError> {
    let linear_in_momenta = linear_form(f);
    let mut first_incompatible = None;
    let mut max_residual: f64 = 0.0;
    for &i in &f.i_set {
        let base = f.dfdp(1, i);
        for alpha in 2..=f.k {
            let (v, r) = tester.verdict_with_residual(&(f.dfdp(alpha, i) - &base))?;
            max_residual = max_residual.max(r);
            if v != ZeroVerdict::Zero && first_incompatible.is_none() {
                first_incompatible = Some(i);
            }
        }
    }
    Ok(CompatibilityReport {
        compatible: first_incompatible.is_none(),
        linear_in_momenta,
        max_residual,
        first_incompatible,
    })
}

fn linear_form(f: &ParametrizingKFunction) -> bool {
    let momenta: BTreeSet<String> = (1..=f.k).flat_map(|a| f.i_set.iter().map(move |&i| p_name(a, i))).collect();
    for &i in &f.i_set {
        let c1 = f.dfdp(1, i);
        if c1.free_variables().iter().any(|v| momenta.contains(v)) {
            return false;
        }
        if (2..=f.k).any(|a| f.dfdp(a, i) != c1) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct LegendrianParametrization {
    pub map: SmoothMap,
    pub function: ParametrizingKFunction,
}

impl LegendrianParametrization {
    pub fn dimension(&self) -> usize {
        self.map.source().dim()
    }

    pub fn n1(&self) -> usize {
        self.function.i_set.len()
    }
}

/// Build the parametrization into the canonical chart of
/// [`canonical_structure`]`(n, k)`.
pub fn build_parametrization(
    f: &ParametrizingKFunction,
    tester: &ZeroTester,
) -> Result<LegendrianParametrization, LegendrianError> {
    if let Some(index) = check_compatibility(f, tester)?.first_incompatible {
        return Err(LegendrianError::IncompatibleKFunction { index });
    }
    let (n, k) = (f.n, f.k);
    let source = f.parameter_chart();
    let target = canonical_structure(n, k).chart().clone();
    let mut comps = Vec::with_capacity(target.dim());
    for alpha in 1..=k {
        let fa = &f.f[alpha - 1];
        let mut terms = vec![fa.clone()];
        for &i in &f.i_set {
            terms.push(-(ScalarExpr::var(&p_name(alpha, i)) * f.dfdp(alpha, i)));
        }
        comps.push(ScalarExpr::sum(terms));
    }
    for l in 1..=n {
        if f.i_set.contains(&l) {
            comps.push(-f.dfdp(1, l));
        } else {
            comps.push(ScalarExpr::var(&q_name(l)));
        }
    }
    for alpha in 1..=k {
        for l in 1..=n {
            if f.i_set.contains(&l) {
                comps.push(ScalarExpr::var(&p_name(alpha, l)));
            } else {
                comps.push(f.f[alpha - 1].differentiate(&q_name(l)));
            }
        }
    }
    debug_assert_eq!(target.coords(), canonical_coords(n, k).as_slice());
    let map = SmoothMap::new(&source, &target, comps)?;
    Ok(LegendrianParametrization { map, function: f.clone() })
}

/// `n + (k − 1) n1`.
pub fn legendrian_dimension(n: usize, k: usize, n1: usize) -> usize {
    assert!(n1 <= n, "n1 must not exceed n");
    n + (k - 1) * n1
}

/// Isotropic complement of `TL` in `ker η` for a built parametrization:
/// `∂/∂q^i + Σ_α p^α_i ∂/∂s^α` for `i ∈ I` and `∂/∂p^α_j` for `j ∈ J`. The
/// `s`-components keep the `q`-directions inside `ker η`; they do not change
/// any `dη` pairing.
pub fn proof_complement(f: &ParametrizingKFunction, chart: &Arc<Chart>) -> Result<Vec<VectorField>, FormsError> {
    let mut w = Vec::new();
    for &i in &f.i_set {
        let mut terms = vec![(q_name(i), ScalarExpr::one())];
        for alpha in 1..=f.k {
            terms.push((s_name(alpha), ScalarExpr::var(&p_name(alpha, i))));
        }
        let named: Vec<(&str, ScalarExpr)> = terms.iter().map(|(n, e)| (n.as_str(), e.clone())).collect();
        w.push(VectorField::from_named(chart, &named)?);
    }
    for alpha in 1..=f.k {
        for &j in &f.j_set {
            w.push(VectorField::from_named(chart, &[(&p_name(alpha, j), ScalarExpr::one())])?);
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegendrianCertificate {
    Found,
    NotFound,
    NotChecked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub eta_pullback: ZeroVerdict,
    pub d_eta_pullback: ZeroVerdict,
    pub max_residual: f64,
    pub isotropic: bool,
    pub dimension: usize,
    pub certificate: LegendrianCertificate,
}

fn form_verdict(f: &DifferentialForm, tester: &ZeroTester) -> Result<(ZeroVerdict, f64), ZeroTestError> {
    let mut v = ZeroVerdict::Zero;
    let mut r: f64 = 0.0;
    for c in f.coeffs().values() {
        let (cv, cr) = tester.verdict_with_residual(c)?;
        r = r.max(cr);
        v = match (v, cv) {
            (ZeroVerdict::NonZero, _) | (_, ZeroVerdict::NonZero) => ZeroVerdict::NonZero,
            (ZeroVerdict::Inconclusive, _) | (_, ZeroVerdict::Inconclusive) => ZeroVerdict::Inconclusive,
            _ => ZeroVerdict::Zero,
        };
    }
    Ok((v, r))
}

/// Pull every `η^α` and `dη^α` back along `map`. With a complement `w`, also
/// test the Legendrian certificate: `w ⊂ ker η`, `dη|_{w×w} = 0` and
/// `TL ⊕ w = ker η` at the sample points of `tester` (a tester over the
/// map's source chart).
pub fn verify_isotropic(
    map: &SmoothMap,
    s: &KContactStructure,
    complement: Option<&[VectorField]>,
    tester: &ZeroTester,
    rank_threshold: f64,
) -> Result<IsotropyReport, LegendrianError> {
    if !crate::forms::same_chart(map.target(), s.chart()) {
        return Err(FormsError::ChartMismatch("parametrization target vs structure chart".into()).into());
    }
    let mut eta_v = ZeroVerdict::Zero;
    let mut deta_v = ZeroVerdict::Zero;
    let mut max_residual: f64 = 0.0;
    for (eta, deta) in s.eta().iter().zip(s.d_eta()) {
        let (v, r) = form_verdict(&eta.pullback(map)?, tester)?;
        max_residual = max_residual.max(r);
        if v != ZeroVerdict::Zero {
            eta_v = v;
        }
        let (v, r) = form_verdict(&deta.pullback(map)?, tester)?;
        max_residual = max_residual.max(r);
        if v != ZeroVerdict::Zero {
            deta_v = v;
        }
    }
    let isotropic = eta_v == ZeroVerdict::Zero && deta_v == ZeroVerdict::Zero;
    let certificate = match complement {
        Some(w) if isotropic => {
            if certificate_holds(map, s, w, tester, rank_threshold)? {
                LegendrianCertificate::Found
            } else {
                LegendrianCertificate::NotFound
            }
        }
        Some(_) => LegendrianCertificate::NotFound,
        None => LegendrianCertificate::NotChecked,
    };
    Ok(IsotropyReport { eta_pullback: eta_v, d_eta_pullback: deta_v, max_residual, isotropic, dimension: map.source().dim(), certificate })
}

fn certificate_holds(
    map: &SmoothMap,
    s: &KContactStructure,
    w: &[VectorField],
    tester: &ZeroTester,
    rel: f64,
) -> Result<bool, LegendrianError> {
    // symbolic checks on the ambient chart, restricted to L by composition
    for f in w {
        for eta in s.eta() {
            if !tester.is_zero(&map.compose(&eta.interior_product(f)?.coeff(&[])))? {
                return Ok(false);
            }
        }
    }
    for a in 0..w.len() {
        for b in a + 1..w.len() {
            for deta in s.d_eta() {
                let pairing = deta.interior_product(&w[a])?.interior_product(&w[b])?.coeff(&[]);
                if !tester.is_zero(&map.compose(&pairing))? {
                    return Ok(false);
                }
            }
        }
    }
    let jac = map.jacobian();
    let dim = s.dim();
    let ker_dim = dim - s.k();
    let ok = par::try_map(tester.parallel, &tester.points, |p| -> Result<bool, LegendrianError> {
        let image = map.image_point(p)?;
        let l_dim = map.source().dim();
        let mut m = DMatrix::zeros(l_dim + w.len(), dim);
        for u in 0..l_dim {
            for i in 0..dim {
                m[(u, i)] = jac[i][u].eval_f64(&p.lookup())?;
            }
        }
        for (r, f) in w.iter().enumerate() {
            m.set_row(l_dim + r, &f.values_at(&image)?.transpose());
        }
        Ok(l_dim + w.len() == ker_dim && linalg::rank(&m, rel) == ker_dim)
    })?;
    Ok(ok.into_iter().all(|b| b))
}

/// For each direction in `w`: whether adding it to `TL` breaks isotropy,
/// i.e. some `dη^α(w, ∂_u φ)` is non-zero at some sample point.
pub fn breaks_isotropy(
    map: &SmoothMap,
    s: &KContactStructure,
    w: &[VectorField],
    tester: &ZeroTester,
) -> Result<Vec<bool>, LegendrianError> {
    let jac = map.jacobian();
    let mut out = Vec::with_capacity(w.len());
    for f in w {
        let mut breaks = false;
        'search: for deta in s.d_eta() {
            let contracted = deta.interior_product(f)?;
            for u in 0..map.source().dim() {
                // dη(w, ∂_u φ) = Σ_i (ι_w dη)_i ∂φ^i/∂u, evaluated on L
                let terms = contracted.coeffs().iter().map(|(idx, c)| map.compose(c) * &jac[idx[0]][u]);
                let pairing = ScalarExpr::sum(terms);
                if tester.verdict(&pairing)? == ZeroVerdict::NonZero {
                    breaks = true;
                    break 'search;
                }
            }
        }
        out.push(breaks);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
