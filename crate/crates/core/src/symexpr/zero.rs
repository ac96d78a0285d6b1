//! Probabilistic zero testing by evaluation at random rational points.
//!
//! Polynomial and rational identities are decided exactly at every sample;
//! anything involving `exp`, `log` or radicals is judged with
//! `|value| <= atol + rtol * magnitude` where `magnitude` is the sum of the
//! absolute sizes of the terms that were combined.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::eval::{EvalError, Number, Point};
use super::expr::{Rational, ScalarExpr};
use crate::config::Config;
use crate::par;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZeroTestError {
    #[error("no valid sample point found after {attempts} attempts (constraints unsatisfiable?)")]
    SampleDomainEmpty { attempts: usize },
    #[error("evaluation failed at a sample point: {0}")]
    Eval(#[from] EvalError),
}

/// Where to draw sample points: per-variable ranges plus strict-positivity
/// constraints that carve out the open set an identity lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDomain {
    pub variables: Vec<String>,
    pub ranges: BTreeMap<String, (f64, f64)>,
    pub default_range: (f64, f64),
    /// Each expression must evaluate strictly positive at an accepted point.
    #[serde(skip)]
    pub constraints: Vec<ScalarExpr>,
}

pub const DEFAULT_RANGE: (f64, f64) = (-2.0, 2.0);

impl SampleDomain {
    pub fn new<S: AsRef<str>>(variables: &[S]) -> Self {
        SampleDomain {
            variables: variables.iter().map(|s| s.as_ref().to_string()).collect(),
            ranges: BTreeMap::new(),
            default_range: DEFAULT_RANGE,
            constraints: Vec::new(),
        }
    }

    pub fn with_range(mut self, var: &str, lo: f64, hi: f64) -> Self {
        self.ranges.insert(var.to_string(), (lo, hi));
        self
    }

    pub fn with_constraint(mut self, c: ScalarExpr) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn with_default_range(mut self, lo: f64, hi: f64) -> Self {
        self.default_range = (lo, hi);
        self
    }

    /// Add any variables of `e` the domain does not list yet.
    pub fn cover(mut self, e: &ScalarExpr) -> Self {
        for v in e.free_variables() {
            if !self.variables.contains(&v) {
                self.variables.push(v);
            }
        }
        self
    }

    pub fn merge(mut self, other: &SampleDomain) -> Self {
        for v in &other.variables {
            if !self.variables.contains(v) {
                self.variables.push(v.clone());
            }
        }
        for (k, r) in &other.ranges {
            self.ranges.entry(k.clone()).or_insert(*r);
        }
        self.constraints.extend(other.constraints.iter().cloned());
        self
    }

    fn range_of(&self, var: &str) -> (f64, f64) {
        self.ranges.get(var).copied().unwrap_or(self.default_range)
    }

    fn accepts(&self, p: &SamplePoint) -> bool {
        self.constraints.iter().all(|c| matches!(c.eval_f64(&p.lookup()), Ok(v) if v > 0.0))
    }

    /// Draw `n` points deterministically from `seed`.
    pub fn sample(&self, n: usize, seed: u64, max_retries: usize) -> Result<Vec<SamplePoint>, ZeroTestError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let budget = max_retries.max(1) * n.max(1);
        let mut attempts = 0;
        while out.len() < n {
            if attempts >= budget {
                return Err(ZeroTestError::SampleDomainEmpty { attempts });
            }
            attempts += 1;
            let p = self.draw(&mut rng);
            if self.accepts(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> SamplePoint {
        let mut exact = Point::new();
        let mut floats = BTreeMap::new();
        for v in &self.variables {
            let (lo, hi) = self.range_of(v);
            let den: i64 = rng.gen_range(1..=48);
            let lo_n = (lo * den as f64).ceil() as i64;
            let hi_n = ((hi * den as f64).floor() as i64).max(lo_n);
            let num: i64 = rng.gen_range(lo_n..=hi_n);
            let r = Rational::new(BigInt::from(num), BigInt::from(den));
            floats.insert(v.clone(), num as f64 / den as f64);
            exact.set(v, Number::Exact(r));
        }
        SamplePoint { exact, floats }
    }
}

/// A sample point carried both as exact rationals and as floats.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub exact: Point,
    pub floats: BTreeMap<String, f64>,
}

impl SamplePoint {
    pub fn lookup(&self) -> impl Fn(&str) -> Option<f64> + '_ {
        move |name: &str| self.floats.get(name).copied()
    }

    pub fn from_floats(values: BTreeMap<String, f64>) -> Self {
        let mut exact = Point::new();
        for (k, v) in &values {
            exact.set(k, Number::Float(*v));
        }
        SamplePoint { exact, floats: values }
    }

    pub fn values(&self, names: &[String]) -> Result<Vec<f64>, EvalError> {
        names
            .iter()
            .map(|n| self.floats.get(n).copied().ok_or_else(|| EvalError::UnboundVariable(n.clone())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroVerdict {
    /// Vanishes at every sample point (exactly, or within tolerance).
    Zero,
    /// Clearly non-zero at some sample point.
    NonZero,
    /// Only marginally above tolerance somewhere: not silently guessed.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PointClass {
    Zero,
    Marginal,
    NonZero,
}

/// Factor above the tolerance band beyond which a residual is "clearly" non-zero.
const CLEAR_FACTOR: f64 = 1e3;

/// Zero tester bound to a fixed, pre-drawn set of sample points.
#[derive(Debug, Clone)]
pub struct ZeroTester {
    pub points: Vec<SamplePoint>,
    pub atol: f64,
    pub rtol: f64,
    pub parallel: bool,
}

impl ZeroTester {
    pub fn new(domain: &SampleDomain, cfg: &Config) -> Result<Self, ZeroTestError> {
        let points = domain.sample(cfg.samples, cfg.seed, cfg.max_retries)?;
        Ok(ZeroTester { points, atol: cfg.atol, rtol: cfg.rtol, parallel: cfg.parallel })
    }

    fn classify(&self, e: &ScalarExpr, p: &SamplePoint, exact: bool) -> Result<(PointClass, f64), EvalError> {
        if exact {
            if let Number::Exact(r) = e.evaluate(&p.exact)? {
                use num_traits::Zero;
                let v = super::eval::rational_to_f64(&r).abs();
                return Ok(if r.is_zero() { (PointClass::Zero, 0.0) } else { (PointClass::NonZero, v) });
            }
        }
        let s = e.eval_scaled(&p.lookup())?;
        let tol = self.atol + self.rtol * s.magnitude;
        let r = s.value.abs();
        let class = if r <= tol {
            PointClass::Zero
        } else if r <= CLEAR_FACTOR * tol {
            PointClass::Marginal
        } else {
            PointClass::NonZero
        };
        Ok((class, r))
    }

    /// Ternary verdict plus the largest absolute residual seen.
    pub fn verdict_with_residual(&self, e: &ScalarExpr) -> Result<(ZeroVerdict, f64), ZeroTestError> {
        if e.is_zero_const() {
            return Ok((ZeroVerdict::Zero, 0.0));
        }
        if let Some(c) = e.as_constant() {
            return Ok((ZeroVerdict::NonZero, super::eval::rational_to_f64(c).abs()));
        }
        let exact = e.is_rational_function();
        // cheap early exit for the common clearly-non-zero case
        if let Some(first) = self.points.first() {
            let (class, r) = self.classify(e, first, exact)?;
            if class == PointClass::NonZero {
                return Ok((ZeroVerdict::NonZero, r));
            }
        }
        let classes = par::try_map(self.parallel, &self.points, |p| self.classify(e, p, exact))?;
        let max_r = classes.iter().map(|c| c.1).fold(0.0, f64::max);
        let verdict = if classes.iter().any(|c| c.0 == PointClass::NonZero) {
            ZeroVerdict::NonZero
        } else if classes.iter().any(|c| c.0 == PointClass::Marginal) {
            ZeroVerdict::Inconclusive
        } else {
            ZeroVerdict::Zero
        };
        Ok((verdict, max_r))
    }

    pub fn verdict(&self, e: &ScalarExpr) -> Result<ZeroVerdict, ZeroTestError> {
        Ok(self.verdict_with_residual(e)?.0)
    }

    pub fn is_zero(&self, e: &ScalarExpr) -> Result<bool, ZeroTestError> {
        Ok(self.verdict(e)? == ZeroVerdict::Zero)
    }

    /// Largest absolute value over the sample points (floats).
    pub fn max_abs(&self, e: &ScalarExpr) -> Result<f64, ZeroTestError> {
        if e.is_zero_const() {
            return Ok(0.0);
        }
        let vals = par::try_map(self.parallel, &self.points, |p| e.eval_f64(&p.lookup()).map(f64::abs))?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    }
}

/// One-shot zero test: draws points over `domain` (extended by the free
/// variables of `e`) and checks that `e` vanishes at all of them.
pub fn is_probably_zero(e: &ScalarExpr, domain: &SampleDomain, cfg: &Config) -> Result<bool, ZeroTestError> {
    let domain = domain.clone().cover(e);
    ZeroTester::new(&domain, cfg)?.is_zero(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_expr;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn trivial_cases() {
        let x = ScalarExpr::var("x");
        let d = SampleDomain::new(&["x"]);
        assert!(is_probably_zero(&(x.clone() - x.clone()), &d, &cfg()).unwrap());
        let e = parse_expr("x*y - 1").unwrap();
        let unit = SampleDomain::new(&["x", "y"]).with_range("x", 0.0, 1.0).with_range("y", 0.0, 1.0);
        assert!(!is_probably_zero(&e, &unit, &cfg()).unwrap());
    }

    #[test]
    fn expansion_of_boost_velocity() {
        // d_t(t/tau) + d_z(z/tau) - 1/tau on t^2 > z^2
        let tau = parse_expr("(t^2 - z^2)^(1/2)").unwrap();
        let t = ScalarExpr::var("t");
        let z = ScalarExpr::var("z");
        let theta = (&t / &tau).differentiate("t") + (&z / &tau).differentiate("z");
        let d = SampleDomain::new(&["t", "z"]).with_constraint(parse_expr("t^2 - z^2").unwrap());
        assert!(is_probably_zero(&(theta - tau.recip()), &d, &cfg()).unwrap());
    }

    #[test]
    fn exact_path_is_exact() {
        let e = parse_expr("(x + y)^2 - x^2 - 2*x*y - y^2").unwrap();
        let d = SampleDomain::new(&["x", "y"]);
        let t = ZeroTester::new(&d, &cfg()).unwrap();
        assert_eq!(t.verdict_with_residual(&e).unwrap(), (ZeroVerdict::Zero, 0.0));
    }

    #[test]
    fn unsatisfiable_domain_reports_empty() {
        let d = SampleDomain::new(&["x"]).with_constraint(parse_expr("-x^2").unwrap());
        let err = ZeroTester::new(&d, &Config { max_retries: 5, ..cfg() }).unwrap_err();
        assert!(matches!(err, ZeroTestError::SampleDomainEmpty { .. }));
    }

    #[test]
    fn sampling_is_seeded() {
        let d = SampleDomain::new(&["a", "b"]);
        let p1 = d.sample(8, 7, 10).unwrap();
        let p2 = d.sample(8, 7, 10).unwrap();
        let p3 = d.sample(8, 8, 10).unwrap();
        assert_eq!(p1, p2);
        assert_ne!(p1, p3);
    }

    #[test]
    fn tiny_perturbation_is_not_zero() {
        let e = parse_expr("exp(x) - exp(x) * (1 + 1/1000000)").unwrap();
        let d = SampleDomain::new(&["x"]);
        assert_eq!(ZeroTester::new(&d, &cfg()).unwrap().verdict(&e).unwrap(), ZeroVerdict::NonZero);
    }
}
