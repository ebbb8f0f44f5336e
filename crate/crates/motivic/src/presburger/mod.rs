//! Formulas, quantifier elimination, semilinear normal forms and
//! piecewise-affine definable functions over the value-group sort.

mod progression;
mod qe;
mod set;

pub use progression::{progression_decomposition, Progression};
pub use qe::eliminate_quantifiers;
pub use set::{formula_is_satisfiable, DefinableFn, DefinableMap, Piece, PresburgerSet};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Assignment of integer values to variable names.
pub type Valuation = BTreeMap<String, BigInt>;

/// Affine term with integer coefficients over named variables.
/// Zero coefficients are absent from the map.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinTerm {
    pub coeffs: BTreeMap<String, BigInt>,
    pub constant: BigInt,
}

impl LinTerm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        LinTerm {
            coeffs: BTreeMap::new(),
            constant: c.into(),
        }
    }

    pub fn var(name: &str) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_string(), BigInt::one());
        LinTerm {
            coeffs,
            constant: BigInt::zero(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, name: &str) -> BigInt {
        self.coeffs.get(name).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            let e = out.coeffs.entry(v.clone()).or_insert_with(BigInt::zero);
            *e += c;
        }
        out.constant += &other.constant;
        out.prune()
    }

    pub fn neg(&self) -> Self {
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            constant: -&self.constant,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn add_const(&self, k: impl Into<BigInt>) -> Self {
        let mut out = self.clone();
        out.constant += k.into();
        out
    }

    fn prune(mut self) -> Self {
        self.coeffs.retain(|_, c| !c.is_zero());
        self
    }

    /// Remove the variable and return its former coefficient.
    pub fn drop_var(&self, name: &str) -> (BigInt, Self) {
        let mut out = self.clone();
        let c = out.coeffs.remove(name).unwrap_or_else(BigInt::zero);
        (c, out)
    }

    /// Replace `name` by the given term.
    pub fn subst_var(&self, name: &str, repl: &LinTerm) -> Self {
        let (c, rest) = self.drop_var(name);
        rest.add(&repl.scale(&c))
    }

    /// Simultaneous substitution of several variables.
    pub fn subst_map(&self, map: &BTreeMap<String, LinTerm>) -> Self {
        let mut out = LinTerm::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            match map.get(v) {
                Some(t) => out = out.add(&t.scale(c)),
                None => {
                    let e = out.coeffs.entry(v.clone()).or_insert_with(BigInt::zero);
                    *e += c;
                }
            }
        }
        out.prune()
    }

    pub fn eval(&self, point: &Valuation) -> BigInt {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            let val = point
                .get(v)
                .unwrap_or_else(|| panic!("unbound variable {v} in evaluation"));
            acc += c * val;
        }
        acc
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(|s| s.as_str())
    }
}

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if first {
                if c.is_one() {
                    write!(f, "{v}")?;
                } else if *c == -BigInt::one() {
                    write!(f, "-{v}")?;
                } else {
                    write!(f, "{c}{v}")?;
                }
                first = false;
            } else if c.is_negative() {
                let a = c.abs();
                if a.is_one() {
                    write!(f, " - {v}")?;
                } else {
                    write!(f, " - {a}{v}")?;
                }
            } else if c.is_one() {
                write!(f, " + {v}")?;
            } else {
                write!(f, " + {c}{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant.is_positive() {
            write!(f, " + {}", self.constant)?;
        } else if self.constant.is_negative() {
            write!(f, " - {}", self.constant.abs())?;
        }
        Ok(())
    }
}

/// Affine expression with a positive integer denominator. On the pieces
/// where such an expression is used the numerator is divisible by the
/// denominator, so the value is always an integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffExpr {
    pub num: LinTerm,
    pub den: u64,
}

impl AffExpr {
    pub fn from_lin(t: LinTerm) -> Self {
        AffExpr { num: t, den: 1 }
    }

    pub fn zero() -> Self {
        Self::from_lin(LinTerm::zero())
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::from_lin(LinTerm::constant(c))
    }

    pub fn var(name: &str) -> Self {
        Self::from_lin(LinTerm::var(name))
    }

    pub fn new(num: LinTerm, den: u64) -> Self {
        assert!(den >= 1);
        AffExpr { num, den }.reduced()
    }

    fn reduced(mut self) -> Self {
        if self.den == 1 {
            return self;
        }
        let mut g = BigInt::from(self.den);
        for c in self.num.coeffs.values() {
            g = g.gcd(c);
        }
        g = g.gcd(&self.num.constant);
        if g > BigInt::one() {
            let gi: u64 = (&g).try_into().unwrap();
            self.num = LinTerm {
                coeffs: self
                    .num
                    .coeffs
                    .iter()
                    .map(|(v, c)| (v.clone(), c / &g))
                    .collect(),
                constant: &self.num.constant / &g,
            };
            self.den /= gi;
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let l = lcm_u64(self.den, other.den);
        let a = self.num.scale(&BigInt::from(l / self.den));
        let b = other.num.scale(&BigInt::from(l / other.den));
        AffExpr { num: a.add(&b), den: l }.reduced()
    }

    pub fn neg(&self) -> Self {
        AffExpr {
            num: self.num.neg(),
            den: self.den,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        AffExpr {
            num: self.num.scale(k),
            den: self.den,
        }
        .reduced()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant()
    }

    /// Exact evaluation; panics if the value is not an integer, which
    /// indicates the expression was used outside its supporting piece.
    pub fn eval(&self, point: &Valuation) -> BigInt {
        let v = self.num.eval(point);
        let d = BigInt::from(self.den);
        let (q, r) = v.div_rem(&d);
        assert!(r.is_zero(), "non-integral affine value {v}/{d}");
        q
    }

    /// Substitute a variable by an affine expression.
    pub fn subst_var(&self, name: &str, repl: &AffExpr) -> Self {
        let (c, rest) = self.num.drop_var(name);
        // self = (c*name + rest)/den
        let repl_scaled = repl.scale(&c);
        AffExpr {
            num: rest,
            den: self.den,
        }
        .add(&repl_scaled.scale_den(self.den))
    }

    fn scale_den(&self, extra: u64) -> Self {
        AffExpr {
            num: self.num.clone(),
            den: self.den * extra,
        }
        .reduced()
    }

    pub fn subst_lin_map(&self, map: &BTreeMap<String, LinTerm>) -> Self {
        AffExpr {
            num: self.num.subst_map(map),
            den: self.den,
        }
        .reduced()
    }

    /// Coefficient of a variable as a rational `(num, den)` pair.
    pub fn coeff(&self, name: &str) -> (BigInt, u64) {
        (self.num.coeff(name), self.den)
    }
}

impl fmt::Display for AffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/{}", self.num, self.den)
        }
    }
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a / gcd_u64(a, b) * b
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd_u64(b, a % b)
    }
}

/// First-order Presburger formula. Atoms are `t <= 0`, `t = 0` and
/// `t ≡ 0 mod n` with `n > 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Le(LinTerm),
    Eq(LinTerm),
    Cong(LinTerm, BigInt),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn and(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(g) => *g,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// `t <= 0` with constant folding.
    pub fn le(t: LinTerm) -> Formula {
        if t.is_constant() {
            if t.constant <= BigInt::zero() {
                Formula::True
            } else {
                Formula::False
            }
        } else {
            Formula::Le(t)
        }
    }

    pub fn eq(t: LinTerm) -> Formula {
        if t.is_constant() {
            if t.constant.is_zero() {
                Formula::True
            } else {
                Formula::False
            }
        } else {
            Formula::Eq(t)
        }
    }

    pub fn cong(t: LinTerm, n: BigInt) -> Formula {
        assert!(n > BigInt::one(), "congruence modulus must exceed 1");
        if t.is_constant() {
            if t.constant.mod_floor(&n).is_zero() {
                Formula::True
            } else {
                Formula::False
            }
        } else {
            Formula::Cong(t, n)
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Le(_) | Formula::Eq(_) | Formula::Cong(..) => {
                true
            }
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|f| f.is_quantifier_free()),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    /// Evaluate a quantifier-free formula at a point.
    pub fn eval(&self, point: &Valuation) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Le(t) => t.eval(point) <= BigInt::zero(),
            Formula::Eq(t) => t.eval(point).is_zero(),
            Formula::Cong(t, n) => t.eval(point).mod_floor(n).is_zero(),
            Formula::Not(f) => !f.eval(point),
            Formula::And(fs) => fs.iter().all(|f| f.eval(point)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(point)),
            Formula::Exists(..) | Formula::Forall(..) => {
                panic!("eval on quantified formula; eliminate quantifiers first")
            }
        }
    }

    /// Evaluate a formula whose quantifiers are decided by searching the
    /// window `[-radius, radius]`. Test oracle only: sound for formulas
    /// whose witnesses are known to lie in the window.
    pub fn eval_searching(&self, point: &Valuation, radius: i64) -> bool {
        match self {
            Formula::Exists(v, f) => (-radius..=radius).any(|k| {
                let mut p = point.clone();
                p.insert(v.clone(), BigInt::from(k));
                f.eval_searching(&p, radius)
            }),
            Formula::Forall(v, f) => (-radius..=radius).all(|k| {
                let mut p = point.clone();
                p.insert(v.clone(), BigInt::from(k));
                f.eval_searching(&p, radius)
            }),
            Formula::Not(f) => !f.eval_searching(point, radius),
            Formula::And(fs) => fs.iter().all(|f| f.eval_searching(point, radius)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval_searching(point, radius)),
            other => other.eval(point),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Formula::True | Formula::False => {}
                Formula::Le(t) | Formula::Eq(t) | Formula::Cong(t, _) => {
                    for v in t.vars() {
                        if !bound.iter().any(|b| b == v) {
                            out.insert(v.to_string());
                        }
                    }
                }
                Formula::Not(g) => go(g, bound, out),
                Formula::And(fs) | Formula::Or(fs) => {
                    for g in fs {
                        go(g, bound, out);
                    }
                }
                Formula::Exists(v, g) | Formula::Forall(v, g) => {
                    bound.push(v.clone());
                    go(g, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Substitute free occurrences of variables by affine terms.
    pub fn subst_map(&self, map: &BTreeMap<String, LinTerm>) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Le(t) => Formula::le(t.subst_map(map)),
            Formula::Eq(t) => Formula::eq(t.subst_map(map)),
            Formula::Cong(t, n) => Formula::cong(t.subst_map(map), n.clone()),
            Formula::Not(f) => Formula::not(f.subst_map(map)),
            Formula::And(fs) => Formula::and(fs.iter().map(|f| f.subst_map(map)).collect()),
            Formula::Or(fs) => Formula::or(fs.iter().map(|f| f.subst_map(map)).collect()),
            Formula::Exists(v, f) => {
                let mut inner = map.clone();
                inner.remove(v);
                Formula::Exists(v.clone(), Box::new(f.subst_map(&inner)))
            }
            Formula::Forall(v, f) => {
                let mut inner = map.clone();
                inner.remove(v);
                Formula::Forall(v.clone(), Box::new(f.subst_map(&inner)))
            }
        }
    }
}
