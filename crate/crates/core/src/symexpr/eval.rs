use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{Node, Rational, ScalarExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// A numeric value: exact rational or binary float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Number {
    Exact(Rational),
    Float(f64),
}

impl Number {
    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => rational_to_f64(r),
            Number::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Number::Exact(r) if r.is_zero())
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => write!(f, "{r}"),
            Number::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<i64> for Number {
    fn from(v: i64) -> Self {
        Number::Exact(Rational::from_integer(v.into()))
    }
}

impl From<f64> for Number {
    fn from(v: f64) -> Self {
        Number::Float(v)
    }
}

impl From<Rational> for Number {
    fn from(v: Rational) -> Self {
        Number::Exact(v)
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(x) = r.to_f64() {
        if x.is_finite() {
            return x;
        }
    }
    // huge numerator and denominator: scale both down before dividing
    let n = r.numer();
    let d = r.denom();
    let shift = n.bits().max(d.bits()).saturating_sub(1000);
    let ns = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let ds = (d >> shift).to_f64().unwrap_or(f64::NAN);
    ns / ds
}

/// Assignment of numeric values to variable names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub assignments: BTreeMap<String, Number>,
}

impl Point {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<Number>) -> Self {
        self.assignments.insert(name.to_string(), value.into());
        self
    }

    pub fn set(&mut self, name: &str, value: impl Into<Number>) {
        self.assignments.insert(name.to_string(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&Number> {
        self.assignments.get(name)
    }

    pub fn get_f64(&self, name: &str) -> Option<f64> {
        self.assignments.get(name).map(Number::to_f64)
    }

    /// Float values in the order of `names`.
    pub fn values_f64(&self, names: &[String]) -> Result<Vec<f64>, EvalError> {
        names
            .iter()
            .map(|n| self.get_f64(n).ok_or_else(|| EvalError::UnboundVariable(n.clone())))
            .collect()
    }
}

/// Evaluated value together with a magnitude bound used to scale relative
/// tolerances: sums report the sum of the magnitudes of their terms so that
/// cancellation between large terms is judged against the terms' size.
#[derive(Debug, Clone, Copy)]
pub struct Scaled {
    pub value: f64,
    pub magnitude: f64,
}

fn domain(msg: impl Into<String>) -> EvalError {
    EvalError::Domain(msg.into())
}

fn check_finite(x: f64, what: &str) -> Result<f64, EvalError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(domain(format!("non-finite result in {what}")))
    }
}

impl ScalarExpr {
    /// Evaluate at a point. Rational expressions at rational points come back
    /// exact; anything touching `exp`, `log` or a non-integer power is a float.
    pub fn evaluate(&self, p: &Point) -> Result<Number, EvalError> {
        if let Some(exact) = self.eval_exact(p)? {
            return Ok(Number::Exact(exact));
        }
        let lookup = |name: &str| p.get_f64(name);
        self.eval_f64(&lookup).map(Number::Float)
    }

    /// `Ok(None)` means "not exactly representable, use floats".
    fn eval_exact(&self, p: &Point) -> Result<Option<Rational>, EvalError> {
        Ok(match self.node() {
            Node::Const(c) => Some(c.clone()),
            Node::Var(name) => match p.get(name) {
                Some(Number::Exact(r)) => Some(r.clone()),
                Some(Number::Float(_)) => None,
                None => return Err(EvalError::UnboundVariable(name.to_string())),
            },
            Node::Sum(terms) => {
                let mut acc = Rational::zero();
                for t in terms {
                    match t.eval_exact(p)? {
                        Some(v) => acc += v,
                        None => return Ok(None),
                    }
                }
                Some(acc)
            }
            Node::Product(factors) => {
                let mut acc = Rational::one();
                for t in factors {
                    match t.eval_exact(p)? {
                        Some(v) => acc *= v,
                        None => return Ok(None),
                    }
                }
                Some(acc)
            }
            Node::Pow(base, e) => {
                if !e.is_integer() {
                    return Ok(None);
                }
                let Some(b) = base.eval_exact(p)? else {
                    return Ok(None);
                };
                let Some(n) = e.to_integer().to_i32() else {
                    return Ok(None);
                };
                if b.is_zero() && n < 0 {
                    return Err(domain("division by zero"));
                }
                Some(b.pow(n))
            }
            Node::Exp(arg) => match arg.eval_exact(p)? {
                Some(v) if v.is_zero() => Some(Rational::one()),
                _ => None,
            },
            Node::Log(arg) => match arg.eval_exact(p)? {
                Some(v) if !v.is_positive() => {
                    return Err(domain(format!("log of non-positive value {v}")))
                }
                Some(v) if v.is_one() => Some(Rational::zero()),
                _ => None,
            },
        })
    }

    /// Plain float evaluation with a caller-supplied variable lookup.
    pub fn eval_f64(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        Ok(self.eval_scaled(lookup)?.value)
    }

    pub fn eval_at(&self, p: &Point) -> Result<f64, EvalError> {
        let lookup = |name: &str| p.get_f64(name);
        self.eval_f64(&lookup)
    }

    pub fn eval_scaled(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<Scaled, EvalError> {
        match self.node() {
            Node::Const(c) => {
                let v = rational_to_f64(c);
                Ok(Scaled { value: v, magnitude: v.abs() })
            }
            Node::Var(name) => {
                let v = lookup(name).ok_or_else(|| EvalError::UnboundVariable(name.to_string()))?;
                Ok(Scaled { value: v, magnitude: v.abs() })
            }
            Node::Sum(terms) => {
                let mut value = 0.0;
                let mut magnitude = 0.0;
                for t in terms {
                    let s = t.eval_scaled(lookup)?;
                    value += s.value;
                    magnitude += s.magnitude;
                }
                Ok(Scaled { value: check_finite(value, "sum")?, magnitude })
            }
            Node::Product(factors) => {
                let mut value = 1.0;
                let mut magnitude = 1.0;
                for t in factors {
                    let s = t.eval_scaled(lookup)?;
                    value *= s.value;
                    magnitude *= s.magnitude;
                }
                Ok(Scaled { value: check_finite(value, "product")?, magnitude })
            }
            Node::Pow(base, e) => {
                let b = base.eval_scaled(lookup)?;
                let ef = rational_to_f64(e);
                if b.value == 0.0 && e.is_negative() {
                    return Err(domain("division by zero"));
                }
                let value = if e.is_integer() {
                    match e.to_integer().to_i32() {
                        Some(n) => b.value.powi(n),
                        None => b.value.powf(ef),
                    }
                } else {
                    if b.value < 0.0 {
                        return Err(domain(format!(
                            "fractional power {e} of negative value {}",
                            b.value
                        )));
                    }
                    b.value.powf(ef)
                };
                let magnitude = if e.is_positive() { b.magnitude.powf(ef) } else { value.abs() };
                Ok(Scaled { value: check_finite(value, "power")?, magnitude })
            }
            Node::Exp(arg) => {
                let a = arg.eval_scaled(lookup)?;
                let value = check_finite(a.value.exp(), "exp")?;
                Ok(Scaled { value, magnitude: value.abs() })
            }
            Node::Log(arg) => {
                let a = arg.eval_scaled(lookup)?;
                if a.value <= 0.0 {
                    return Err(domain(format!("log of non-positive value {}", a.value)));
                }
                let value = a.value.ln();
                Ok(Scaled { value, magnitude: value.abs() })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::expr::rat;

    #[test]
    fn exact_rational_sum() {
        let e = ScalarExpr::rational(1, 2) + ScalarExpr::rational(1, 3);
        assert_eq!(e.evaluate(&Point::new()).unwrap(), Number::Exact(rat(5, 6)));
    }

    #[test]
    fn proper_time_at_rest_point() {
        let t = ScalarExpr::var("t");
        let z = ScalarExpr::var("z");
        let tau = (t.powi(2) - z.powi(2)).sqrt();
        let v = tau.evaluate(&Point::new().with("t", 2).with("z", 0)).unwrap();
        assert_eq!(v.to_f64(), 2.0);
    }

    #[test]
    fn exp_of_log() {
        // built without the structural exp(log x) -> x shortcut
        let x = ScalarExpr::var("x");
        let e = (x.ln() + ScalarExpr::zero() * x.clone()).exp() * ScalarExpr::one();
        let v = e.evaluate(&Point::new().with("x", 7.0)).unwrap().to_f64();
        assert!((v - 7.0).abs() < 1e-12);
        let raw = ScalarExpr::var("y").ln();
        let v = raw.exp().evaluate(&Point::new().with("y", 7.0)).unwrap().to_f64();
        assert!((v - 7.0).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let x = ScalarExpr::var("x");
        assert!(matches!(
            x.ln().evaluate(&Point::new().with("x", -1)),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            x.recip().evaluate(&Point::new().with("x", 0)),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            x.evaluate(&Point::new()),
            Err(EvalError::UnboundVariable(name)) if name == "x"
        ));
    }

    #[test]
    fn integer_powers_stay_exact() {
        let x = ScalarExpr::var("x");
        let e = x.powi(3) * ScalarExpr::rational(2, 7) - x.recip();
        let v = e.evaluate(&Point::new().with("x", Number::Exact(rat(3, 5)))).unwrap();
        let expected = rat(27, 125) * rat(2, 7) - rat(5, 3);
        assert_eq!(v, Number::Exact(expected));
    }
}
