//! Classes of residue-field varieties twisted by additive characters,
//! with the rewrites that make the character sum relations hold, and a
//! finite-field point-counting oracle.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Multivariate polynomial with integer coefficients. Keys are monomials
/// as exponent maps; zero exponents are absent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MPoly {
    pub terms: BTreeMap<BTreeMap<String, u32>, BigInt>,
}

impl MPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(BTreeMap::new(), c);
        }
        MPoly { terms }
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn var(name: &str) -> Self {
        let mut mono = BTreeMap::new();
        mono.insert(name.to_string(), 1);
        let mut terms = BTreeMap::new();
        terms.insert(mono, BigInt::one());
        MPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_empty())
    }

    pub fn constant_value(&self) -> Option<BigInt> {
        if self.is_zero() {
            return Some(BigInt::zero());
        }
        if self.is_constant() {
            return self.terms.values().next().cloned();
        }
        None
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let e = out.terms.entry(m.clone()).or_insert_with(BigInt::zero);
            *e += c;
        }
        out.prune()
    }

    pub fn neg(&self) -> Self {
        MPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = MPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m = m1.clone();
                for (v, e) in m2 {
                    *m.entry(v.clone()).or_insert(0) += e;
                }
                let e = out.terms.entry(m).or_insert_with(BigInt::zero);
                *e += c1 * c2;
            }
        }
        out.prune()
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = MPoly::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    fn prune(mut self) -> Self {
        self.terms.retain(|_, c| !c.is_zero());
        self
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms
            .keys()
            .flat_map(|m| m.keys().cloned())
            .collect()
    }

    pub fn rename(&self, map: &BTreeMap<String, String>) -> Self {
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mm = m
                        .iter()
                        .map(|(v, e)| (map.get(v).cloned().unwrap_or_else(|| v.clone()), *e))
                        .collect();
                    (mm, c.clone())
                })
                .collect(),
        }
    }

    pub fn subst(&self, name: &str, repl: &MPoly) -> Self {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let mut part = MPoly::constant(c.clone());
            for (v, e) in m {
                if v == name {
                    part = part.mul(&repl.pow(*e));
                } else {
                    part = part.mul(&MPoly::var(v).pow(*e));
                }
            }
            out = out.add(&part);
        }
        out
    }

    pub fn subst_map(&self, map: &BTreeMap<String, MPoly>) -> Self {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let mut part = MPoly::constant(c.clone());
            for (v, e) in m {
                match map.get(v) {
                    Some(repl) => part = part.mul(&repl.pow(*e)),
                    None => part = part.mul(&MPoly::var(v).pow(*e)),
                }
            }
            out = out.add(&part);
        }
        out
    }

    /// Evaluate modulo `p` with every variable assigned.
    pub fn eval_mod(&self, assign: &BTreeMap<String, u64>, p: u64) -> Result<u64> {
        let pb = BigInt::from(p);
        let mut acc = BigInt::zero();
        for (m, c) in &self.terms {
            let mut t = c.mod_floor(&pb);
            for (v, e) in m {
                let val = assign.get(v).ok_or_else(|| {
                    Error::UninstantiatedParameters(vec![v.clone()])
                })?;
                let vb = BigInt::from(*val);
                for _ in 0..*e {
                    t = (t * &vb).mod_floor(&pb);
                }
            }
            acc = (acc + t).mod_floor(&pb);
        }
        Ok(acc.to_u64().unwrap())
    }

    /// Decompose as `c * v + rest` when the variable occurs only linearly
    /// and in no other monomial of degree > 1 with it.
    pub fn linear_part(&self, name: &str) -> Option<(MPoly, MPoly)> {
        let mut coeff = MPoly::zero();
        let mut rest = MPoly::zero();
        for (m, c) in &self.terms {
            match m.get(name) {
                None => {
                    rest.terms.insert(m.clone(), c.clone());
                }
                Some(1) => {
                    let mut mm = m.clone();
                    mm.remove(name);
                    coeff.terms.insert(mm, c.clone());
                }
                Some(_) => return None,
            }
        }
        Some((coeff, rest))
    }
}

impl std::fmt::Display for MPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                if c.is_negative() {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            if m.is_empty() {
                write!(f, "{a}")?;
            } else {
                if !a.is_one() {
                    write!(f, "{a}")?;
                }
                for (v, e) in m {
                    if *e == 1 {
                        write!(f, "{v}")?;
                    } else {
                        write!(f, "{v}^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Affine variety over the residue field: equations and inequations in
/// `vars`, with free parameter symbols from the base.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ResVariety {
    pub vars: Vec<String>,
    pub eqs: Vec<MPoly>,
    pub neqs: Vec<MPoly>,
}

impl ResVariety {
    pub fn affine_space(vars: Vec<String>) -> Self {
        ResVariety {
            vars,
            eqs: Vec::new(),
            neqs: Vec::new(),
        }
    }

    pub fn point() -> Self {
        Self::affine_space(Vec::new())
    }

    pub fn param_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.eqs.iter().chain(&self.neqs) {
            out.extend(e.vars());
        }
        for v in &self.vars {
            out.remove(v);
        }
        out
    }
}

/// `sign * [X, e(xi)]`: a variety with a character twist. The class of
/// the trivial twist on a point is the unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub variety: ResVariety,
    pub xi: MPoly,
}

impl Generator {
    pub fn unit() -> Self {
        Generator {
            variety: ResVariety::point(),
            xi: MPoly::zero(),
        }
    }

    /// Rename bound variety variables to a canonical sequence so that
    /// structurally equal classes merge.
    fn canonical(&self, tag: usize) -> Generator {
        let map: BTreeMap<String, String> = self
            .variety
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), format!("_c{tag}_{i}")))
            .collect();
        Generator {
            variety: ResVariety {
                vars: self.variety.vars.iter().map(|v| map[v].clone()).collect(),
                eqs: self.variety.eqs.iter().map(|e| e.rename(&map)).collect(),
                neqs: self.variety.neqs.iter().map(|e| e.rename(&map)).collect(),
            },
            xi: self.xi.rename(&map),
        }
    }

    /// A twist variable that ranges freely over a line and enters `xi`
    /// linearly with unit coefficient makes the whole class vanish: the
    /// character sums to zero along that line.
    fn has_null_line(&self) -> bool {
        for v in &self.variety.vars {
            if self.variety.eqs.iter().any(|e| e.vars().contains(v)) {
                continue;
            }
            if self.variety.neqs.iter().any(|e| e.vars().contains(v)) {
                continue;
            }
            if let Some((coeff, _)) = self.xi.linear_part(v) {
                if let Some(c) = coeff.constant_value() {
                    if c.is_one() || c == -BigInt::one() {
                        if !c.is_zero() {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Z-linear combination of generators; the normal form drops classes that
/// the character relations kill and merges equal generators.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExpClass {
    pub gens: Vec<(BigInt, Generator)>,
}

impl ExpClass {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        ExpClass {
            gens: vec![(BigInt::one(), Generator::unit())],
        }
    }

    pub fn from_generator(g: Generator) -> Self {
        ExpClass {
            gens: vec![(BigInt::one(), g)],
        }
        .normalized()
    }

    pub fn is_zero(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut gens = self.gens.clone();
        gens.extend(other.gens.iter().cloned());
        ExpClass { gens }.normalized()
    }

    pub fn neg(&self) -> Self {
        ExpClass {
            gens: self.gens.iter().map(|(c, g)| (-c, g.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        ExpClass {
            gens: self.gens.iter().map(|(c, g)| (c * k, g.clone())).collect(),
        }
    }

    /// Fiber product over the base: concatenate defining data and add the
    /// character arguments. Variety variables are renamed apart.
    pub fn mul(&self, other: &Self) -> Self {
        let mut gens = Vec::new();
        for (c1, g1) in &self.gens {
            for (c2, g2) in &other.gens {
                let a = g1.canonical(0);
                let b = g2.canonical(1);
                let mut vars = a.variety.vars.clone();
                vars.extend(b.variety.vars.iter().cloned());
                let mut eqs = a.variety.eqs.clone();
                eqs.extend(b.variety.eqs.iter().cloned());
                let mut neqs = a.variety.neqs.clone();
                neqs.extend(b.variety.neqs.iter().cloned());
                gens.push((
                    c1 * c2,
                    Generator {
                        variety: ResVariety { vars, eqs, neqs },
                        xi: a.xi.add(&b.xi),
                    },
                ));
            }
        }
        ExpClass { gens }.normalized()
    }

    pub fn normalized(&self) -> Self {
        let mut merged: Vec<(BigInt, Generator)> = Vec::new();
        for (c, g) in &self.gens {
            if c.is_zero() {
                continue;
            }
            // contradictory presentation: an equation that is a nonzero
            // constant, or an inequation that is zero
            let dead = g
                .variety
                .eqs
                .iter()
                .any(|e| matches!(e.constant_value(), Some(v) if !v.is_zero()))
                || g.variety.neqs.iter().any(|e| e.is_zero());
            if dead || g.has_null_line() {
                continue;
            }
            let canon = g.canonical(0);
            match merged.iter_mut().find(|(_, h)| *h == canon) {
                Some((cc, _)) => *cc += c,
                None => merged.push((c.clone(), canon)),
            }
        }
        merged.retain(|(c, _)| !c.is_zero());
        ExpClass { gens: merged }
    }

    /// Substitute base parameter symbols in every generator.
    pub fn subst_params(&self, map: &BTreeMap<String, MPoly>) -> Self {
        let gens = self
            .gens
            .iter()
            .map(|(c, g)| {
                // never capture variety variables
                let mut m = map.clone();
                for v in &g.variety.vars {
                    m.remove(v);
                }
                (
                    c.clone(),
                    Generator {
                        variety: ResVariety {
                            vars: g.variety.vars.clone(),
                            eqs: g.variety.eqs.iter().map(|e| e.subst_map(&m)).collect(),
                            neqs: g.variety.neqs.iter().map(|e| e.subst_map(&m)).collect(),
                        },
                        xi: g.xi.subst_map(&m),
                    },
                )
            })
            .collect();
        ExpClass { gens }.normalized()
    }

    /// Push forward along the projection that forgets a base parameter
    /// ranging over the residue field: the parameter becomes a variety
    /// variable.
    pub fn promote_param(&self, name: &str) -> Self {
        let gens = self
            .gens
            .iter()
            .map(|(c, g)| {
                let mut vars = g.variety.vars.clone();
                if !vars.iter().any(|v| v == name) {
                    vars.push(name.to_string());
                }
                (
                    c.clone(),
                    Generator {
                        variety: ResVariety {
                            vars,
                            eqs: g.variety.eqs.clone(),
                            neqs: g.variety.neqs.clone(),
                        },
                        xi: g.xi.clone(),
                    },
                )
            })
            .collect();
        ExpClass { gens }.normalized()
    }

    pub fn param_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (_, g) in &self.gens {
            out.extend(g.variety.param_symbols());
            let mut xi_syms = g.xi.vars();
            for v in &g.variety.vars {
                xi_syms.remove(v);
            }
            out.extend(xi_syms);
        }
        out
    }

    /// Character-sum oracle over F_p: sum of psi(xi(x)) over the points of
    /// each variety, with psi(x) = exp(2 pi i x / p).
    pub fn count_points(&self, p: u64, params: &BTreeMap<String, u64>) -> Result<Complex<f64>> {
        let missing: Vec<String> = self
            .param_symbols()
            .into_iter()
            .filter(|s| !params.contains_key(s))
            .collect();
        if !missing.is_empty() {
            return Err(Error::UninstantiatedParameters(missing));
        }
        let mut total = Complex::new(0.0, 0.0);
        for (c, g) in &self.gens {
            let n = g.variety.vars.len() as u32;
            let space = p.checked_pow(n).filter(|s| *s <= 10_000_000);
            let space = space.ok_or(Error::CountTooLarge(
                p.saturating_pow(n),
                10_000_000,
            ))?;
            let mut part = Complex::new(0.0, 0.0);
            let mut assign = params.clone();
            for idx in 0..space {
                let mut rem = idx;
                for v in &g.variety.vars {
                    assign.insert(v.clone(), rem % p);
                    rem /= p;
                }
                if g
                    .variety
                    .eqs
                    .iter()
                    .map(|e| e.eval_mod(&assign, p))
                    .collect::<Result<Vec<_>>>()?
                    .iter()
                    .any(|v| *v != 0)
                {
                    continue;
                }
                if g
                    .variety
                    .neqs
                    .iter()
                    .map(|e| e.eval_mod(&assign, p))
                    .collect::<Result<Vec<_>>>()?
                    .iter()
                    .any(|v| *v == 0)
                {
                    continue;
                }
                let x = g.xi.eval_mod(&assign, p)?;
                let angle = 2.0 * std::f64::consts::PI * (x as f64) / (p as f64);
                part += Complex::new(angle.cos(), angle.sin());
            }
            let cf = c
                .to_f64()
                .ok_or_else(|| Error::ValidationError("coefficient too large".into()))?;
            total += part * cf;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_line_counts_p_points() {
        let g = Generator {
            variety: ResVariety::affine_space(vec!["x".into()]),
            xi: MPoly::zero(),
        };
        let c = ExpClass::from_generator(g);
        for p in [2u64, 3, 5, 7] {
            let v = c.count_points(p, &BTreeMap::new()).unwrap();
            assert!((v.re - p as f64).abs() < 1e-9);
            assert!(v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn full_character_sum_vanishes_by_rewrite() {
        // [A^1, e(x)] = 0
        let g = Generator {
            variety: ResVariety::affine_space(vec!["x".into()]),
            xi: MPoly::var("x"),
        };
        let c = ExpClass::from_generator(g);
        assert!(c.is_zero());
    }

    #[test]
    fn character_sum_oracle_vanishes() {
        // oracle on the un-normalized generator agrees with the rewrite
        let g = Generator {
            variety: ResVariety::affine_space(vec!["x".into()]),
            xi: MPoly::var("x").add(&MPoly::constant(3)),
        };
        let c = ExpClass {
            gens: vec![(BigInt::one(), g)],
        };
        for p in [3u64, 5, 7] {
            let v = c.count_points(p, &BTreeMap::new()).unwrap();
            assert!(v.norm() < 1e-9, "p = {p}: {v}");
        }
    }

    #[test]
    fn quadratic_twist_does_not_vanish() {
        // [A^1, e(x^2)] is a Gauss sum of absolute value sqrt(p)
        let g = Generator {
            variety: ResVariety::affine_space(vec!["x".into()]),
            xi: MPoly::var("x").pow(2),
        };
        let c = ExpClass::from_generator(g);
        assert!(!c.is_zero(), "no rewrite applies to a quadratic argument");
        for p in [3u64, 5, 7, 11] {
            let v = c.count_points(p, &BTreeMap::new()).unwrap();
            assert!((v.norm() - (p as f64).sqrt()).abs() < 1e-6, "p = {p}");
        }
    }

    #[test]
    fn product_multiplies_point_counts() {
        let mu2 = Generator {
            variety: ResVariety {
                vars: vec!["x".into()],
                eqs: vec![MPoly::var("x").pow(2).sub(&MPoly::one())],
                neqs: vec![],
            },
            xi: MPoly::zero(),
        };
        let line = Generator {
            variety: ResVariety::affine_space(vec!["x".into()]),
            xi: MPoly::zero(),
        };
        let prod = ExpClass::from_generator(mu2).mul(&ExpClass::from_generator(line));
        let v = prod.count_points(7, &BTreeMap::new()).unwrap();
        assert!((v.re - 14.0).abs() < 1e-9, "two roots times seven points");
    }

    #[test]
    fn torus_class_subtraction() {
        // [A^1] - [A^1 \ 0] = [point]
        let line = ExpClass::from_generator(Generator {
            variety: ResVariety::affine_space(vec!["x".into()]),
            xi: MPoly::zero(),
        });
        let torus = ExpClass::from_generator(Generator {
            variety: ResVariety {
                vars: vec!["x".into()],
                eqs: vec![],
                neqs: vec![MPoly::var("x")],
            },
            xi: MPoly::zero(),
        });
        let diff = line.sub(&torus);
        for p in [2u64, 5, 11] {
            let v = diff.count_points(p, &BTreeMap::new()).unwrap();
            assert!((v.re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn parameterized_class_needs_instantiation() {
        // conic x^2 = a with base parameter a
        let g = Generator {
            variety: ResVariety {
                vars: vec!["x".into()],
                eqs: vec![MPoly::var("x").pow(2).sub(&MPoly::var("a"))],
                neqs: vec![],
            },
            xi: MPoly::zero(),
        };
        let c = ExpClass::from_generator(g);
        match c.count_points(5, &BTreeMap::new()) {
            Err(Error::UninstantiatedParameters(vs)) => assert_eq!(vs, vec!["a".to_string()]),
            other => panic!("expected UninstantiatedParameters, got {other:?}"),
        }
        let mut params = BTreeMap::new();
        params.insert("a".to_string(), 4u64);
        let v = c.count_points(5, &params).unwrap();
        assert!((v.re - 2.0).abs() < 1e-9, "4 is a square mod 5 with two roots");
    }

    #[test]
    fn promote_param_sums_over_the_base() {
        // pushing the family x^2 = a forward over a in F_p gives p points
        let g = Generator {
            variety: ResVariety {
                vars: vec!["x".into()],
                eqs: vec![MPoly::var("x").pow(2).sub(&MPoly::var("a"))],
                neqs: vec![],
            },
            xi: MPoly::zero(),
        };
        let c = ExpClass::from_generator(g).promote_param("a");
        for p in [3u64, 5, 7] {
            let v = c.count_points(p, &BTreeMap::new()).unwrap();
            assert!((v.re - p as f64).abs() < 1e-9, "the squaring map covers F_p once per x");
        }
    }

    #[test]
    fn cap_on_point_enumeration() {
        let g = Generator {
            variety: ResVariety::affine_space((0..10).map(|i| format!("x{i}")).collect()),
            xi: MPoly::zero(),
        };
        let c = ExpClass::from_generator(g);
        match c.count_points(11, &BTreeMap::new()) {
            Err(Error::CountTooLarge(..)) => {}
            other => panic!("expected CountTooLarge, got {other:?}"),
        }
    }
}
