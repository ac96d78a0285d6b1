//! Exterior calculus on a single explicit coordinate chart.
//!
//! Forms are stored sparsely: a degree-`p` form maps strictly increasing
//! `p`-tuples of coordinate indices to coefficient expressions, and an absent
//! key is a zero coefficient. All sign bookkeeping goes through
//! [`sort_with_parity`].

mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symexpr::{EvalError, SampleDomain, SamplePoint, ScalarExpr, ZeroTestError, ZeroTester};

pub use io::{DefinitionError, DefinitionFile, FormSpec, MapSpec, ChartSpec, Definitions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormsError {
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("interior product of a 0-form")]
    ZeroDegree,
    #[error("k mismatch: expected {expected}, found {found}")]
    KMismatch { expected: usize, found: usize },
    #[error("prolongation source must be an R^{expected} chart, found dimension {found}")]
    SourceNotRk { expected: usize, found: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid form: {0}")]
    InvalidForm(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

/// Coordinate chart: ordered coordinate names plus the open sampling domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    coords: Vec<String>,
    /// Each expression is required to be strictly positive.
    #[serde(skip)]
    constraints: Vec<ScalarExpr>,
    ranges: BTreeMap<String, (f64, f64)>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(coords: &[S]) -> Result<Self, FormsError> {
        let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        if coords.is_empty() {
            return Err(FormsError::InvalidChart("a chart needs at least one coordinate".into()));
        }
        let mut seen = BTreeSet::new();
        for c in &coords {
            if !seen.insert(c.as_str()) {
                return Err(FormsError::InvalidChart(format!("duplicate coordinate `{c}`")));
            }
            if !is_identifier(c) {
                return Err(FormsError::InvalidChart(format!("`{c}` is not a valid identifier")));
            }
        }
        Ok(Chart { coords, constraints: Vec::new(), ranges: BTreeMap::new() })
    }

    pub fn with_constraint(mut self, c: ScalarExpr) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn with_range(mut self, coord: &str, lo: f64, hi: f64) -> Self {
        self.ranges.insert(coord.to_string(), (lo, hi));
        self
    }

    pub fn shared(self) -> Arc<Chart> {
        Arc::new(self)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn constraints(&self) -> &[ScalarExpr] {
        &self.constraints
    }

    pub fn ranges(&self) -> &BTreeMap<String, (f64, f64)> {
        &self.ranges
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn coord(&self, i: usize) -> ScalarExpr {
        ScalarExpr::var(&self.coords[i])
    }

    pub fn sample_domain(&self) -> SampleDomain {
        let mut d = SampleDomain::new(&self.coords);
        for (k, (lo, hi)) in &self.ranges {
            d = d.with_range(k, *lo, *hi);
        }
        for c in &self.constraints {
            d = d.with_constraint(c.clone());
        }
        d
    }

    pub fn zero_tester(&self, cfg: &crate::Config) -> Result<ZeroTester, ZeroTestError> {
        ZeroTester::new(&self.sample_domain(), cfg)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> bool {
    Arc::ptr_eq(a, b) || a.coords == b.coords
}

fn require_same(a: &Arc<Chart>, b: &Arc<Chart>, what: &str) -> Result<(), FormsError> {
    if same_chart(a, b) {
        Ok(())
    } else {
        Err(FormsError::ChartMismatch(format!(
            "{what}: [{}] vs [{}]",
            a.coords.join(","),
            b.coords.join(",")
        )))
    }
}

/// Sort `idx` ascending and return the parity of the permutation (+1/-1), or
/// 0 if an index repeats.
pub fn sort_with_parity(idx: &mut [usize]) -> i64 {
    let mut sign = 1;
    // insertion sort: every swap flips the sign
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

fn signed(sign: i64, e: ScalarExpr) -> ScalarExpr {
    if sign < 0 {
        -e
    } else {
        e
    }
}

#[derive(Clone, PartialEq)]
pub struct DifferentialForm {
    chart: Arc<Chart>,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, ScalarExpr>,
}

impl DifferentialForm {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Self {
        DifferentialForm { chart: chart.clone(), degree, coeffs: BTreeMap::new() }
    }

    pub fn function(chart: &Arc<Chart>, f: ScalarExpr) -> Self {
        Self::from_terms(chart, 0, [(vec![], f)]).expect("0-form with empty key")
    }

    /// `dx_i`.
    pub fn differential(chart: &Arc<Chart>, i: usize) -> Self {
        Self::from_terms(chart, 1, [(vec![i], ScalarExpr::one())]).expect("valid coordinate index")
    }

    /// `d(name)` for a coordinate given by name.
    pub fn d_coord(chart: &Arc<Chart>, name: &str) -> Result<Self, FormsError> {
        let i = chart
            .index_of(name)
            .ok_or_else(|| FormsError::InvalidForm(format!("no coordinate `{name}`")))?;
        Ok(Self::differential(chart, i))
    }

    /// Build from `(indices, coefficient)` pairs. Indices may come in any
    /// order; they are sorted with the matching sign and repeated keys add up.
    pub fn from_terms<I>(chart: &Arc<Chart>, degree: usize, terms: I) -> Result<Self, FormsError>
    where
        I: IntoIterator<Item = (Vec<usize>, ScalarExpr)>,
    {
        if degree > chart.dim() {
            return Err(FormsError::InvalidForm(format!(
                "degree {degree} exceeds chart dimension {}",
                chart.dim()
            )));
        }
        let mut acc: BTreeMap<Vec<usize>, Vec<ScalarExpr>> = BTreeMap::new();
        for (mut idx, c) in terms {
            if idx.len() != degree {
                return Err(FormsError::InvalidForm(format!(
                    "index tuple {idx:?} does not match degree {degree}"
                )));
            }
            if let Some(&bad) = idx.iter().find(|&&i| i >= chart.dim()) {
                return Err(FormsError::InvalidForm(format!("index {bad} out of range")));
            }
            let sign = sort_with_parity(&mut idx);
            if sign == 0 {
                continue;
            }
            acc.entry(idx).or_default().push(signed(sign, c));
        }
        let coeffs = acc
            .into_iter()
            .map(|(k, v)| (k, ScalarExpr::sum(v)))
            .filter(|(_, c)| !c.is_zero_const())
            .collect();
        Ok(DifferentialForm { chart: chart.clone(), degree, coeffs })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<usize>, ScalarExpr> {
        &self.coeffs
    }

    /// Coefficient on a strictly increasing key (zero when absent).
    pub fn coeff(&self, idx: &[usize]) -> ScalarExpr {
        self.coeffs.get(idx).cloned().unwrap_or_else(ScalarExpr::zero)
    }

    /// Value on coordinate vectors `∂_{idx[0]}, …` in any order (antisymmetric).
    pub fn component(&self, idx: &[usize]) -> ScalarExpr {
        let mut sorted = idx.to_vec();
        let sign = sort_with_parity(&mut sorted);
        if sign == 0 {
            return ScalarExpr::zero();
        }
        signed(sign, self.coeff(&sorted))
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn map_coeffs(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| (k.clone(), f(c)))
            .filter(|(_, c)| !c.is_zero_const())
            .collect();
        DifferentialForm { chart: self.chart.clone(), degree: self.degree, coeffs }
    }

    pub fn scale(&self, f: &ScalarExpr) -> Self {
        self.map_coeffs(|c| c * f)
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormsError> {
        require_same(&self.chart, &other.chart, "add")?;
        if self.degree != other.degree {
            return Err(FormsError::InvalidForm(format!(
                "cannot add forms of degree {} and {}",
                self.degree, other.degree
            )));
        }
        if self.degree > self.chart.dim() {
            // overflow degrees only ever hold the zero form
            return Ok(Self::zero(&self.chart, self.degree));
        }
        let terms = self.coeffs.iter().chain(other.coeffs.iter()).map(|(k, c)| (k.clone(), c.clone()));
        Self::from_terms(&self.chart, self.degree, terms)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormsError> {
        self.add(&other.scale(&ScalarExpr::int(-1)))
    }

    /// Exterior product. Degree overflow (`p + q > dim`) yields the zero form
    /// of that degree rather than an error.
    pub fn wedge(&self, other: &Self) -> Result<Self, FormsError> {
        require_same(&self.chart, &other.chart, "wedge")?;
        let degree = self.degree + other.degree;
        if degree > self.chart.dim() {
            return Ok(DifferentialForm { chart: self.chart.clone(), degree, coeffs: BTreeMap::new() });
        }
        let mut terms = Vec::new();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let mut idx: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                let sign = sort_with_parity(&mut idx);
                if sign == 0 {
                    continue;
                }
                terms.push((idx, signed(sign, ca * cb)));
            }
        }
        Self::from_terms(&self.chart, degree, terms)
    }

    pub fn exterior_derivative(&self) -> Self {
        let degree = self.degree + 1;
        if degree > self.chart.dim() {
            return DifferentialForm { chart: self.chart.clone(), degree, coeffs: BTreeMap::new() };
        }
        let mut terms = Vec::new();
        for (idx, f) in &self.coeffs {
            for (j, name) in self.chart.coords.iter().enumerate() {
                if idx.contains(&j) {
                    continue;
                }
                let df = f.differentiate(name);
                if df.is_zero_const() {
                    continue;
                }
                let mut key = Vec::with_capacity(degree);
                key.push(j);
                key.extend_from_slice(idx);
                terms.push((key, df));
            }
        }
        Self::from_terms(&self.chart, degree, terms).expect("exterior derivative keys are valid")
    }

    pub fn interior_product(&self, x: &VectorField) -> Result<Self, FormsError> {
        require_same(&self.chart, &x.chart, "interior product")?;
        if self.degree == 0 {
            return Err(FormsError::ZeroDegree);
        }
        let mut terms = Vec::new();
        for (idx, f) in &self.coeffs {
            for (r, &i) in idx.iter().enumerate() {
                let xi = &x.components[i];
                if xi.is_zero_const() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(r);
                let c = xi * f;
                terms.push((rest, if r % 2 == 1 { -c } else { c }));
            }
        }
        Self::from_terms(&self.chart, self.degree - 1, terms)
    }

    /// Cartan's formula `L_X a = ι_X da + d(ι_X a)`.
    pub fn lie_derivative(&self, x: &VectorField) -> Result<Self, FormsError> {
        require_same(&self.chart, &x.chart, "Lie derivative")?;
        let da = self.exterior_derivative();
        let first = if da.degree <= self.chart.dim() {
            da.interior_product(x)?
        } else {
            Self::zero(&self.chart, self.degree)
        };
        if self.degree == 0 {
            return Ok(first);
        }
        first.add(&self.interior_product(x)?.exterior_derivative())
    }

    /// Pull back along `phi`, which must target this form's chart.
    pub fn pullback(&self, phi: &SmoothMap) -> Result<Self, FormsError> {
        require_same(&self.chart, &phi.target, "pullback target")?;
        let bindings = phi.bindings();
        let dphi: Vec<DifferentialForm> = (0..self.chart.dim()).map(|i| phi.differential_of(i)).collect();
        let mut acc = Self::zero(&phi.source, self.degree);
        'terms: for (idx, f) in &self.coeffs {
            let mut term = Self::function(&phi.source, f.substitute(&bindings));
            for &i in idx {
                term = term.wedge(&dphi[i])?;
                if term.is_structurally_zero() {
                    continue 'terms;
                }
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Every coefficient passes the sampling zero test.
    pub fn is_zero(&self, tester: &ZeroTester) -> Result<bool, FormsError> {
        for c in self.coeffs.values() {
            if !tester.is_zero(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn max_abs(&self, tester: &ZeroTester) -> Result<f64, FormsError> {
        let mut m: f64 = 0.0;
        for c in self.coeffs.values() {
            m = m.max(tester.max_abs(c)?);
        }
        Ok(m)
    }

    /// Components of a 1-form at a point.
    pub fn covector_at(&self, p: &SamplePoint) -> Result<DVector<f64>, FormsError> {
        assert_eq!(self.degree, 1, "covector_at needs a 1-form");
        let mut v = DVector::zeros(self.chart.dim());
        for (idx, c) in &self.coeffs {
            v[idx[0]] = c.eval_f64(&p.lookup())?;
        }
        Ok(v)
    }

    /// Antisymmetric matrix `M[i][j] = ω(∂_i, ∂_j)` of a 2-form at a point.
    pub fn matrix_at(&self, p: &SamplePoint) -> Result<DMatrix<f64>, FormsError> {
        assert_eq!(self.degree, 2, "matrix_at needs a 2-form");
        let n = self.chart.dim();
        let mut m = DMatrix::zeros(n, n);
        for (idx, c) in &self.coeffs {
            let v = c.eval_f64(&p.lookup())?;
            m[(idx[0], idx[1])] = v;
            m[(idx[1], idx[0])] = -v;
        }
        Ok(m)
    }
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, (idx, c)) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (r, i) in idx.iter().enumerate() {
                write!(f, "{}d{}", if r == 0 { " " } else { "^" }, self.chart.coords[*i])?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq)]
pub struct VectorField {
    chart: Arc<Chart>,
    components: Vec<ScalarExpr>,
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, components: Vec<ScalarExpr>) -> Result<Self, FormsError> {
        if components.len() != chart.dim() {
            return Err(FormsError::InvalidForm(format!(
                "vector field has {} components on a {}-dimensional chart",
                components.len(),
                chart.dim()
            )));
        }
        Ok(VectorField { chart: chart.clone(), components })
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        VectorField { chart: chart.clone(), components: vec![ScalarExpr::zero(); chart.dim()] }
    }

    /// `∂/∂x_i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> Self {
        let mut v = Self::zero(chart);
        v.components[i] = ScalarExpr::one();
        v
    }

    /// Sparse construction from `(coordinate name, component)` pairs.
    pub fn from_named(chart: &Arc<Chart>, terms: &[(&str, ScalarExpr)]) -> Result<Self, FormsError> {
        let mut v = Self::zero(chart);
        for (name, c) in terms {
            let i = chart
                .index_of(name)
                .ok_or_else(|| FormsError::InvalidForm(format!("no coordinate `{name}`")))?;
            v.components[i] = &v.components[i] + c;
        }
        Ok(v)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &ScalarExpr) -> ScalarExpr {
        ScalarExpr::sum(
            self.components
                .iter()
                .zip(&self.chart.coords)
                .filter(|(c, _)| !c.is_zero_const())
                .map(|(c, name)| c * f.differentiate(name)),
        )
    }

    pub fn lie_bracket(&self, other: &Self) -> Result<Self, FormsError> {
        require_same(&self.chart, &other.chart, "Lie bracket")?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(xi, yi)| self.apply(yi) - other.apply(xi))
            .collect();
        Ok(VectorField { chart: self.chart.clone(), components })
    }

    pub fn scale(&self, f: &ScalarExpr) -> Self {
        VectorField { chart: self.chart.clone(), components: self.components.iter().map(|c| c * f).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormsError> {
        require_same(&self.chart, &other.chart, "vector sum")?;
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect();
        Ok(VectorField { chart: self.chart.clone(), components })
    }

    pub fn is_zero(&self, tester: &ZeroTester) -> Result<bool, FormsError> {
        for c in &self.components {
            if !tester.is_zero(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn values_at(&self, p: &SamplePoint) -> Result<DVector<f64>, FormsError> {
        let mut v = DVector::zeros(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            v[i] = c.eval_f64(&p.lookup())?;
        }
        Ok(v)
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, name) in self.components.iter().zip(&self.chart.coords) {
            if c.is_zero_const() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}*d/d{name}")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `η = η^α ⊗ e_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct RkValuedOneForm {
    chart: Arc<Chart>,
    forms: Vec<DifferentialForm>,
}

impl RkValuedOneForm {
    pub fn new(chart: &Arc<Chart>, forms: Vec<DifferentialForm>) -> Result<Self, FormsError> {
        if forms.is_empty() {
            return Err(FormsError::InvalidForm("k must be positive".into()));
        }
        for f in &forms {
            require_same(chart, f.chart(), "R^k-valued form")?;
            if f.degree() != 1 {
                return Err(FormsError::InvalidForm(format!("component of degree {}", f.degree())));
            }
        }
        Ok(RkValuedOneForm { chart: chart.clone(), forms })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn k(&self) -> usize {
        self.forms.len()
    }

    pub fn forms(&self) -> &[DifferentialForm] {
        &self.forms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KVectorField {
    chart: Arc<Chart>,
    fields: Vec<VectorField>,
}

impl KVectorField {
    pub fn new(chart: &Arc<Chart>, fields: Vec<VectorField>) -> Result<Self, FormsError> {
        if fields.is_empty() {
            return Err(FormsError::InvalidForm("k must be positive".into()));
        }
        for f in &fields {
            require_same(chart, f.chart(), "k-vector field")?;
        }
        Ok(KVectorField { chart: chart.clone(), fields })
    }

    pub fn k(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// Integrability test `[X_α, X_β] = 0` for all pairs.
    pub fn is_integrable(&self, tester: &ZeroTester) -> Result<bool, FormsError> {
        for a in 0..self.k() {
            for b in a + 1..self.k() {
                if !self.fields[a].lie_bracket(&self.fields[b])?.is_zero(tester)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// `ι_X ω = Σ_α ι_{X_α} ω^α` for a k-vector field against k forms of equal degree.
pub fn interior_product_k(x: &KVectorField, w: &[DifferentialForm]) -> Result<DifferentialForm, FormsError> {
    if x.k() != w.len() {
        return Err(FormsError::KMismatch { expected: x.k(), found: w.len() });
    }
    let degree = w.first().map(|f| f.degree()).unwrap_or(1);
    if degree == 0 {
        return Err(FormsError::ZeroDegree);
    }
    let mut acc = DifferentialForm::zero(&x.chart, degree - 1);
    for (xa, wa) in x.fields.iter().zip(w) {
        acc = acc.add(&wa.interior_product(xa)?)?;
    }
    Ok(acc)
}

/// Smooth map between charts given by one expression per target coordinate,
/// written in the source coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    components: Vec<ScalarExpr>,
}

impl SmoothMap {
    pub fn new(source: &Arc<Chart>, target: &Arc<Chart>, components: Vec<ScalarExpr>) -> Result<Self, FormsError> {
        if components.len() != target.dim() {
            return Err(FormsError::InvalidMap(format!(
                "{} components for a {}-dimensional target",
                components.len(),
                target.dim()
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if let Some(v) = c.free_variables().into_iter().find(|v| source.index_of(v).is_none()) {
                return Err(FormsError::InvalidMap(format!(
                    "component `{}` uses `{v}`, which is not a source coordinate",
                    target.coords[i]
                )));
            }
        }
        Ok(SmoothMap { source: source.clone(), target: target.clone(), components })
    }

    pub fn identity(chart: &Arc<Chart>) -> Self {
        let components = (0..chart.dim()).map(|i| chart.coord(i)).collect();
        SmoothMap { source: chart.clone(), target: chart.clone(), components }
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn component(&self, name: &str) -> Option<&ScalarExpr> {
        self.target.index_of(name).map(|i| &self.components[i])
    }

    /// Target coordinate name → component expression.
    pub fn bindings(&self) -> BTreeMap<String, ScalarExpr> {
        self.target.coords.iter().cloned().zip(self.components.iter().cloned()).collect()
    }

    /// `e ∘ φ` for an expression in target coordinates.
    pub fn compose(&self, e: &ScalarExpr) -> ScalarExpr {
        e.substitute(&self.bindings())
    }

    /// `d(φ^i)` as a 1-form on the source chart.
    pub fn differential_of(&self, i: usize) -> DifferentialForm {
        let terms = self
            .source
            .coords
            .iter()
            .enumerate()
            .map(|(u, name)| (vec![u], self.components[i].differentiate(name)));
        DifferentialForm::from_terms(&self.source, 1, terms).expect("source indices are valid")
    }

    /// `J[i][u] = ∂φ^i/∂u`.
    pub fn jacobian(&self) -> Vec<Vec<ScalarExpr>> {
        self.components
            .iter()
            .map(|c| self.source.coords.iter().map(|u| c.differentiate(u)).collect())
            .collect()
    }

    /// Target-chart sample point carrying both the image coordinates and the
    /// source coordinates it came from.
    pub fn image_point(&self, p: &SamplePoint) -> Result<SamplePoint, FormsError> {
        let mut floats = p.floats.clone();
        for (name, c) in self.target.coords.iter().zip(&self.components) {
            floats.insert(name.clone(), c.eval_f64(&p.lookup())?);
        }
        Ok(SamplePoint::from_floats(floats))
    }
}

/// First prolongation of `ψ: R^k → M`, stored as the Jacobian columns
/// `columns[α][i] = ∂ψ^i/∂t^α` in source variables.
#[derive(Debug, Clone)]
pub struct Prolongation {
    pub map: SmoothMap,
    pub columns: Vec<Vec<ScalarExpr>>,
}

pub fn prolongation(psi: &SmoothMap, k: usize) -> Result<Prolongation, FormsError> {
    if psi.source.dim() != k {
        return Err(FormsError::SourceNotRk { expected: k, found: psi.source.dim() });
    }
    let columns = psi
        .source
        .coords
        .iter()
        .map(|t| psi.components.iter().map(|c| c.differentiate(t)).collect())
        .collect();
    Ok(Prolongation { map: psi.clone(), columns })
}
