use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Immutable symbolic scalar expression.
///
/// Nodes are shared behind an `Arc`, so cloning is cheap and expressions can be
/// sent freely between worker threads. All constructors apply a light
/// normalisation: nested sums/products are flattened, constants folded, like
/// terms and like factors collected, and trivial powers removed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarExpr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(Rational),
    Var(Arc<str>),
    Sum(Vec<ScalarExpr>),
    Product(Vec<ScalarExpr>),
    Pow(ScalarExpr, Rational),
    Exp(ScalarExpr),
    Log(ScalarExpr),
}

pub(crate) fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

impl ScalarExpr {
    fn from_node(node: Node) -> Self {
        ScalarExpr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: Rational) -> Self {
        Self::from_node(Node::Const(value))
    }

    pub fn int(value: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(value)))
    }

    pub fn rational(p: i64, q: i64) -> Self {
        Self::constant(rat(p, q))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn var(name: &str) -> Self {
        Self::from_node(Node::Var(Arc::from(name)))
    }

    pub fn as_constant(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Structural zero: the constant `0`. Says nothing about expressions that
    /// only vanish after cancellation; use the sampling zero test for those.
    pub fn is_zero_const(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_one())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self.node() {
            Node::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn sum<I: IntoIterator<Item = ScalarExpr>>(terms: I) -> Self {
        let mut constant = Rational::zero();
        let mut collected: BTreeMap<ScalarExpr, Rational> = BTreeMap::new();
        let mut push = |term: ScalarExpr, constant: &mut Rational| match term.node() {
            Node::Const(c) => *constant += c,
            _ => {
                let (coef, rest) = term.split_coefficient();
                *collected.entry(rest).or_insert_with(Rational::zero) += coef;
            }
        };
        for term in terms {
            if let Node::Sum(inner) = term.node() {
                for t in inner {
                    push(t.clone(), &mut constant);
                }
            } else {
                push(term, &mut constant);
            }
        }
        let mut out: Vec<ScalarExpr> = Vec::with_capacity(collected.len() + 1);
        if !constant.is_zero() {
            out.push(Self::constant(constant));
        }
        for (rest, coef) in collected {
            if coef.is_zero() {
                continue;
            }
            out.push(Self::scaled(coef, rest));
        }
        match out.len() {
            0 => Self::zero(),
            1 => out.pop().unwrap(),
            _ => Self::from_node(Node::Sum(out)),
        }
    }

    pub fn product<I: IntoIterator<Item = ScalarExpr>>(factors: I) -> Self {
        let mut coef = Rational::one();
        let mut powers: BTreeMap<ScalarExpr, Rational> = BTreeMap::new();
        let push = |f: &ScalarExpr, coef: &mut Rational, powers: &mut BTreeMap<_, _>| {
            match f.node() {
                Node::Const(c) => *coef *= c,
                Node::Pow(base, e) => {
                    *powers.entry(base.clone()).or_insert_with(Rational::zero) += e;
                }
                _ => *powers.entry(f.clone()).or_insert_with(Rational::zero) += Rational::one(),
            }
        };
        for f in factors {
            if let Node::Product(inner) = f.node() {
                for g in inner {
                    push(g, &mut coef, &mut powers);
                }
            } else {
                push(&f, &mut coef, &mut powers);
            }
            if coef.is_zero() {
                return Self::zero();
            }
        }
        let mut rest: Vec<ScalarExpr> = Vec::with_capacity(powers.len());
        for (base, e) in powers {
            let p = Self::pow(&base, e);
            match p.node() {
                Node::Const(c) => coef *= c,
                // (x*y)^n may expand back into a product
                Node::Product(inner) => {
                    for g in inner {
                        match g.node() {
                            Node::Const(c) => coef *= c,
                            _ => rest.push(g.clone()),
                        }
                    }
                }
                _ => rest.push(p),
            }
        }
        if coef.is_zero() {
            return Self::zero();
        }
        rest.sort();
        if rest.is_empty() {
            return Self::constant(coef);
        }
        if coef.is_one() && rest.len() == 1 {
            return rest.pop().unwrap();
        }
        let mut factors = Vec::with_capacity(rest.len() + 1);
        if !coef.is_one() {
            factors.push(Self::constant(coef));
        }
        factors.extend(rest);
        Self::from_node(Node::Product(factors))
    }

    /// Rational coefficient times a non-constant expression without going
    /// through the full product normalisation.
    fn scaled(coef: Rational, rest: ScalarExpr) -> Self {
        if coef.is_one() {
            return rest;
        }
        match rest.node() {
            Node::Product(inner) => {
                let mut factors = Vec::with_capacity(inner.len() + 1);
                factors.push(Self::constant(coef));
                factors.extend(inner.iter().cloned());
                Self::from_node(Node::Product(factors))
            }
            _ => Self::from_node(Node::Product(vec![Self::constant(coef), rest])),
        }
    }

    /// Split `c * rest` where `c` is the leading rational coefficient.
    fn split_coefficient(&self) -> (Rational, ScalarExpr) {
        match self.node() {
            Node::Const(c) => (c.clone(), Self::one()),
            Node::Product(factors) => match factors[0].node() {
                Node::Const(c) => {
                    let rest = if factors.len() == 2 {
                        factors[1].clone()
                    } else {
                        Self::from_node(Node::Product(factors[1..].to_vec()))
                    };
                    (c.clone(), rest)
                }
                _ => (Rational::one(), self.clone()),
            },
            _ => (Rational::one(), self.clone()),
        }
    }

    pub fn pow(base: &ScalarExpr, exponent: Rational) -> Self {
        if exponent.is_zero() {
            return Self::one();
        }
        if exponent.is_one() {
            return base.clone();
        }
        let integral = exponent.is_integer();
        match base.node() {
            Node::Const(c) => {
                if integral {
                    if c.is_zero() && exponent.is_negative() {
                        // left symbolic: evaluation reports the division by zero
                        return Self::from_node(Node::Pow(base.clone(), exponent));
                    }
                    if let Some(e) = exponent.to_integer().to_i32() {
                        return Self::constant(c.pow(e));
                    }
                }
                if c.is_one() {
                    return Self::one();
                }
                if let Some(root) = exact_rational_power(c, &exponent) {
                    return Self::constant(root);
                }
                Self::from_node(Node::Pow(base.clone(), exponent))
            }
            Node::Pow(inner, e1) if integral => Self::pow(inner, e1 * &exponent),
            Node::Product(factors) if integral => {
                Self::product(factors.iter().map(|f| Self::pow(f, exponent.clone())))
            }
            _ => Self::from_node(Node::Pow(base.clone(), exponent)),
        }
    }

    pub fn powi(&self, n: i64) -> Self {
        Self::pow(self, Rational::from_integer(BigInt::from(n)))
    }

    pub fn sqrt(&self) -> Self {
        Self::pow(self, rat(1, 2))
    }

    pub fn recip(&self) -> Self {
        self.powi(-1)
    }

    pub fn exp(&self) -> Self {
        match self.node() {
            Node::Const(c) if c.is_zero() => Self::one(),
            Node::Log(inner) => inner.clone(),
            _ => Self::from_node(Node::Exp(self.clone())),
        }
    }

    pub fn ln(&self) -> Self {
        match self.node() {
            Node::Const(c) if c.is_one() => Self::zero(),
            Node::Exp(inner) => inner.clone(),
            _ => Self::from_node(Node::Log(self.clone())),
        }
    }

    /// Partial derivative with respect to the variable `v`.
    pub fn differentiate(&self, v: &str) -> ScalarExpr {
        match self.node() {
            Node::Const(_) => Self::zero(),
            Node::Var(name) => {
                if &**name == v {
                    Self::one()
                } else {
                    Self::zero()
                }
            }
            Node::Sum(terms) => Self::sum(terms.iter().map(|t| t.differentiate(v))),
            Node::Product(factors) => {
                let mut terms = Vec::new();
                for (i, f) in factors.iter().enumerate() {
                    let df = f.differentiate(v);
                    if df.is_zero_const() {
                        continue;
                    }
                    let mut parts = Vec::with_capacity(factors.len());
                    parts.push(df);
                    parts.extend(
                        factors
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != i)
                            .map(|(_, g)| g.clone()),
                    );
                    terms.push(Self::product(parts));
                }
                Self::sum(terms)
            }
            Node::Pow(base, e) => {
                let db = base.differentiate(v);
                if db.is_zero_const() {
                    return Self::zero();
                }
                Self::product([
                    Self::constant(e.clone()),
                    Self::pow(base, e - Rational::one()),
                    db,
                ])
            }
            Node::Exp(arg) => {
                let da = arg.differentiate(v);
                if da.is_zero_const() {
                    return Self::zero();
                }
                Self::product([self.clone(), da])
            }
            Node::Log(arg) => {
                let da = arg.differentiate(v);
                if da.is_zero_const() {
                    return Self::zero();
                }
                Self::product([da, arg.recip()])
            }
        }
    }

    /// Simultaneous substitution of variables by expressions.
    pub fn substitute(&self, bindings: &BTreeMap<String, ScalarExpr>) -> ScalarExpr {
        if bindings.is_empty() {
            return self.clone();
        }
        self.map_vars(&|name| bindings.get(name).cloned())
    }

    pub(crate) fn map_vars(&self, f: &dyn Fn(&str) -> Option<ScalarExpr>) -> ScalarExpr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(name) => f(name).unwrap_or_else(|| self.clone()),
            Node::Sum(terms) => Self::sum(terms.iter().map(|t| t.map_vars(f))),
            Node::Product(factors) => Self::product(factors.iter().map(|t| t.map_vars(f))),
            Node::Pow(base, e) => Self::pow(&base.map_vars(f), e.clone()),
            Node::Exp(arg) => arg.map_vars(f).exp(),
            Node::Log(arg) => arg.map_vars(f).ln(),
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(name) => {
                if !out.contains(&**name) {
                    out.insert(name.to_string());
                }
            }
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            Node::Pow(b, _) => b.collect_vars(out),
            Node::Exp(a) | Node::Log(a) => a.collect_vars(out),
        }
    }

    pub fn depends_on(&self, v: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(name) => &**name == v,
            Node::Sum(xs) | Node::Product(xs) => xs.iter().any(|x| x.depends_on(v)),
            Node::Pow(b, _) => b.depends_on(v),
            Node::Exp(a) | Node::Log(a) => a.depends_on(v),
        }
    }

    /// True when the tree is built only from rationals, variables, sums,
    /// products and integer powers (so exact evaluation never leaves ℚ).
    pub fn is_rational_function(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Var(_) => true,
            Node::Sum(xs) | Node::Product(xs) => xs.iter().all(|x| x.is_rational_function()),
            Node::Pow(b, e) => e.is_integer() && b.is_rational_function(),
            Node::Exp(_) | Node::Log(_) => false,
        }
    }

    /// Node count, used to keep an eye on derivative blow-up.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Sum(xs) | Node::Product(xs) => 1 + xs.iter().map(|x| x.size()).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.size(),
            Node::Exp(a) | Node::Log(a) => 1 + a.size(),
        }
    }
}

/// `c^(p/q)` when it happens to be rational (e.g. `4^(1/2) = 2`).
fn exact_rational_power(c: &Rational, exponent: &Rational) -> Option<Rational> {
    if c.is_negative() || c.is_zero() {
        return None;
    }
    let q = exponent.denom().to_u32()?;
    let p = exponent.numer().to_i32()?;
    let n = exact_root(c.numer(), q)?;
    let d = exact_root(c.denom(), q)?;
    Some(Rational::new(n, d).pow(p))
}

fn exact_root(x: &BigInt, q: u32) -> Option<BigInt> {
    if q == 0 || q > 16 {
        return None;
    }
    let r = x.nth_root(q);
    if r.pow(q) == *x {
        Some(r)
    } else {
        None
    }
}

impl From<i64> for ScalarExpr {
    fn from(v: i64) -> Self {
        ScalarExpr::int(v)
    }
}

impl From<Rational> for ScalarExpr {
    fn from(v: Rational) -> Self {
        ScalarExpr::constant(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                let f: fn(ScalarExpr, ScalarExpr) -> ScalarExpr = $body;
                f(self, rhs)
            }
        }
        impl $trait<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(ScalarExpr, ScalarExpr) -> ScalarExpr = $body;
                f(self, rhs.clone())
            }
        }
        impl $trait<ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                let f: fn(ScalarExpr, ScalarExpr) -> ScalarExpr = $body;
                f(self.clone(), rhs)
            }
        }
        impl $trait<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(ScalarExpr, ScalarExpr) -> ScalarExpr = $body;
                f(self.clone(), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| ScalarExpr::sum([a, b]));
binop!(Sub, sub, |a, b| ScalarExpr::sum([a, -b]));
binop!(Mul, mul, |a, b| ScalarExpr::product([a, b]));
binop!(Div, div, |a, b| ScalarExpr::product([a, b.recip()]));

impl Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::product([ScalarExpr::int(-1), self])
    }
}

impl Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        -(self.clone())
    }
}

fn fmt_rational(c: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.is_integer() && !c.is_negative() {
        write!(f, "{}", c.numer())
    } else if c.is_integer() {
        write!(f, "({})", c.numer())
    } else {
        write!(f, "({}/{})", c.numer(), c.denom())
    }
}

/// Output is valid input for the expression parser.
impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => fmt_rational(c, f),
            Node::Var(v) => write!(f, "{v}"),
            Node::Sum(terms) => {
                write!(f, "(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Node::Product(factors) => {
                for (i, t) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            Node::Pow(base, e) => {
                write!(f, "({base})^")?;
                fmt_rational(e, f)
            }
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Log(a) => write!(f, "log({a})"),
        }
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
