//! JSON chart/form definition files.
//!
//! ```json
//! {
//!   "chart": {"coords": ["s", "q", "p"], "constraints": ["q"], "ranges": {"p": [0.5, 2]}},
//!   "forms": {"eta": {"degree": 1, "coeffs": {"0": "1", "1": "-p"}}},
//!   "maps": {"graph": {"source": {"coords": ["u"]}, "components": {"s": "0", "q": "u", "p": "1"}}},
//!   "eta": ["eta"],
//!   "hamiltonian": "p"
//! }
//! ```
//!
//! Index tuples are comma-joined zero-based indices. Map components missing
//! from `components` default to zero.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Chart, DifferentialForm, FormsError, SmoothMap};
use crate::symexpr::{parse_expr, ParseError, ScalarExpr};

#[derive(Debug, Error)]
pub enum DefinitionError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("in {context}: {source}")]
    Expr {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("in {context}: {message}")]
    Invalid { context: String, message: String },
    #[error(transparent)]
    Forms(#[from] FormsError),
}

impl DefinitionError {
    /// Line/column of the underlying syntax error, when there is one.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            DefinitionError::Json { line, column, .. } => Some((*line, *column)),
            DefinitionError::Expr { source, .. } => Some((source.line, source.column)),
            _ => None,
        }
    }
}

fn invalid(context: impl Into<String>, message: impl Into<String>) -> DefinitionError {
    DefinitionError::Invalid { context: context.into(), message: message.into() }
}

pub(crate) fn parse_in(context: impl Into<String>, src: &str) -> Result<ScalarExpr, DefinitionError> {
    parse_expr(src).map_err(|source| DefinitionError::Expr { context: context.into(), source })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coords: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<String>,
    #[serde(default)]
    pub ranges: BTreeMap<String, (f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub degree: usize,
    #[serde(default)]
    pub coeffs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub source: ChartSpec,
    pub components: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefinitionFile {
    pub chart: ChartSpec,
    #[serde(default)]
    pub forms: BTreeMap<String, FormSpec>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapSpec>,
    /// Names of the forms making up η, in order.
    #[serde(default)]
    pub eta: Vec<String>,
    #[serde(default)]
    pub hamiltonian: Option<String>,
}

/// A definition file after parsing and validation.
#[derive(Debug, Clone)]
pub struct Definitions {
    pub chart: Arc<Chart>,
    pub forms: BTreeMap<String, DifferentialForm>,
    pub maps: BTreeMap<String, SmoothMap>,
    pub eta: Vec<DifferentialForm>,
    pub hamiltonian: Option<ScalarExpr>,
}

impl ChartSpec {
    pub fn build(&self, context: &str) -> Result<Chart, DefinitionError> {
        let mut chart = Chart::new(&self.coords).map_err(|e| invalid(context, e.to_string()))?;
        for (i, c) in self.constraints.iter().enumerate() {
            let e = parse_in(format!("{context}.constraints[{i}]"), c)?;
            if let Some(v) = e.free_variables().into_iter().find(|v| chart.index_of(v).is_none()) {
                return Err(invalid(format!("{context}.constraints[{i}]"), format!("unknown variable `{v}`")));
            }
            chart = chart.with_constraint(e);
        }
        for (name, (lo, hi)) in &self.ranges {
            if chart.index_of(name).is_none() {
                return Err(invalid(format!("{context}.ranges"), format!("unknown coordinate `{name}`")));
            }
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(invalid(format!("{context}.ranges.{name}"), "range must satisfy lo < hi"));
            }
            chart = chart.with_range(name, *lo, *hi);
        }
        Ok(chart)
    }
}

fn parse_key(key: &str, degree: usize, dim: usize, context: &str) -> Result<Vec<usize>, DefinitionError> {
    if degree == 0 {
        return if key.trim().is_empty() { Ok(vec![]) } else { Err(invalid(context, "0-form key must be \"\"")) };
    }
    let idx: Vec<usize> = key
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(context, format!("bad index tuple `{key}`")))?;
    if idx.len() != degree {
        return Err(invalid(context, format!("index tuple `{key}` has {} entries, degree is {degree}", idx.len())));
    }
    if idx.iter().any(|&i| i >= dim) {
        return Err(invalid(context, format!("index tuple `{key}` out of range for dimension {dim}")));
    }
    if idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(context, format!("index tuple `{key}` must be strictly increasing")));
    }
    Ok(idx)
}

fn check_vars(e: &ScalarExpr, chart: &Chart, context: &str) -> Result<(), DefinitionError> {
    match e.free_variables().into_iter().find(|v| chart.index_of(v).is_none()) {
        Some(v) => Err(invalid(context, format!("`{v}` is not a chart coordinate"))),
        None => Ok(()),
    }
}

impl FormSpec {
    pub fn build(&self, chart: &Arc<Chart>, context: &str) -> Result<DifferentialForm, DefinitionError> {
        if self.degree > chart.dim() {
            return Err(invalid(context, format!("degree {} exceeds dimension {}", self.degree, chart.dim())));
        }
        let mut terms = Vec::new();
        for (key, src) in &self.coeffs {
            let ctx = format!("{context}.coeffs[\"{key}\"]");
            let idx = parse_key(key, self.degree, chart.dim(), &ctx)?;
            let e = parse_in(&ctx, src)?;
            check_vars(&e, chart, &ctx)?;
            terms.push((idx, e));
        }
        Ok(DifferentialForm::from_terms(chart, self.degree, terms)?)
    }
}

impl MapSpec {
    pub fn build(&self, target: &Arc<Chart>, context: &str) -> Result<SmoothMap, DefinitionError> {
        let source = self.source.build(&format!("{context}.source"))?.shared();
        let mut comps = vec![ScalarExpr::zero(); target.dim()];
        for (name, src) in &self.components {
            let ctx = format!("{context}.components.{name}");
            let i = target.index_of(name).ok_or_else(|| invalid(&ctx, "unknown target coordinate"))?;
            let e = parse_in(&ctx, src)?;
            check_vars(&e, &source, &ctx)?;
            comps[i] = e;
        }
        Ok(SmoothMap::new(&source, target, comps)?)
    }
}

impl DefinitionFile {
    pub fn from_json(text: &str) -> Result<Self, DefinitionError> {
        serde_json::from_str(text).map_err(|e| DefinitionError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn build(&self) -> Result<Definitions, DefinitionError> {
        let chart = self.chart.build("chart")?.shared();
        let mut forms = BTreeMap::new();
        for (name, spec) in &self.forms {
            forms.insert(name.clone(), spec.build(&chart, &format!("forms.{name}"))?);
        }
        let mut maps = BTreeMap::new();
        for (name, spec) in &self.maps {
            maps.insert(name.clone(), spec.build(&chart, &format!("maps.{name}"))?);
        }
        let mut eta = Vec::new();
        for name in &self.eta {
            let f = forms.get(name).ok_or_else(|| invalid("eta", format!("no form named `{name}`")))?;
            if f.degree() != 1 {
                return Err(invalid("eta", format!("`{name}` is not a 1-form")));
            }
            eta.push(f.clone());
        }
        let hamiltonian = match &self.hamiltonian {
            Some(src) => {
                let e = parse_in("hamiltonian", src)?;
                check_vars(&e, &chart, "hamiltonian")?;
                Some(e)
            }
            None => None,
        };
        Ok(Definitions { chart, forms, maps, eta, hamiltonian })
    }

    pub fn load(text: &str) -> Result<Definitions, DefinitionError> {
        Self::from_json(text)?.build()
    }

    /// Serialize a chart and named forms back into the file format.
    pub fn from_forms(chart: &Chart, forms: &[(&str, &DifferentialForm)]) -> Self {
        let chart_spec = ChartSpec {
            coords: chart.coords().to_vec(),
            constraints: chart.constraints().iter().map(|c| c.to_string()).collect(),
            ranges: chart.ranges().clone(),
        };
        let forms = forms
            .iter()
            .map(|(name, f)| {
                let coeffs = f
                    .coeffs()
                    .iter()
                    .map(|(k, c)| {
                        let key = k.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
                        (key, c.to_string())
                    })
                    .collect();
                (name.to_string(), FormSpec { degree: f.degree(), coeffs })
            })
            .collect();
        DefinitionFile { chart: chart_spec, forms, maps: BTreeMap::new(), eta: Vec::new(), hamiltonian: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONTACT: &str = r#"{
        "chart": {"coords": ["s", "q", "p"]},
        "forms": {"eta": {"degree": 1, "coeffs": {"0": "1", "1": "-p"}}},
        "maps": {"graph": {"source": {"coords": ["u"]}, "components": {"q": "u", "p": "1"}}},
        "eta": ["eta"],
        "hamiltonian": "p"
    }"#;

    #[test]
    fn loads_contact_example() {
        let d = DefinitionFile::load(CONTACT).unwrap();
        assert_eq!(d.chart.dim(), 3);
        let eta = &d.forms["eta"];
        assert_eq!(eta.coeff(&[1]), -ScalarExpr::var("p"));
        assert_eq!(d.eta.len(), 1);
        let pulled = eta.pullback(&d.maps["graph"]).unwrap();
        assert_eq!(pulled.coeff(&[0]), ScalarExpr::int(-1));
    }

    #[test]
    fn reports_expression_position() {
        let bad = CONTACT.replace("\"-p\"", "\"-p +\"");
        let err = DefinitionFile::load(&bad).unwrap_err();
        assert!(matches!(err, DefinitionError::Expr { .. }), "{err}");
        assert_eq!(err.position(), Some((1, 5)));
        assert!(err.to_string().contains("forms.eta"));
    }

    #[test]
    fn reports_json_position() {
        let err = DefinitionFile::load("{\n  \"chart\": [1,,]\n}").unwrap_err();
        let (line, _) = err.position().unwrap();
        assert_eq!(line, 2);
    }

    #[test]
    fn rejects_bad_keys_and_variables() {
        for (from, to) in [("\"0\": \"1\"", "\"0,1\": \"1\""), ("\"1\": \"-p\"", "\"7\": \"-p\""), ("\"-p\"", "\"-w\"")] {
            let bad = CONTACT.replace(from, to);
            assert!(matches!(DefinitionFile::load(&bad), Err(DefinitionError::Invalid { .. })), "{to}");
        }
    }

    #[test]
    fn round_trip() {
        let d = DefinitionFile::load(CONTACT).unwrap();
        let deta = d.forms["eta"].exterior_derivative();
        let file = DefinitionFile::from_forms(&d.chart, &[("eta", &d.forms["eta"]), ("deta", &deta)]);
        let text = serde_json::to_string(&file).unwrap();
        let back = DefinitionFile::load(&text).unwrap();
        assert_eq!(back.forms["deta"].coeffs(), deta.coeffs());
    }
}
