//! Disjoint-piece normal forms for Presburger sets, piecewise-affine
//! definable functions and maps.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::qe::{eliminate_quantifiers, nnf};
use super::{AffExpr, Formula, LinTerm, Valuation};
use crate::error::{Error, Result};

/// Conjunction of congruences `t ≡ 0 mod n` and inequalities `t <= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Piece {
    pub congs: Vec<(LinTerm, BigInt)>,
    pub ineqs: Vec<LinTerm>,
}

impl Piece {
    pub fn universe() -> Self {
        Self::default()
    }

    pub fn to_formula(&self) -> Formula {
        let mut parts: Vec<Formula> = self
            .congs
            .iter()
            .map(|(t, n)| Formula::cong(t.clone(), n.clone()))
            .collect();
        parts.extend(self.ineqs.iter().map(|t| Formula::le(t.clone())));
        Formula::and(parts)
    }

    pub fn contains(&self, point: &Valuation) -> bool {
        self.congs
            .iter()
            .all(|(t, n)| t.eval(point).mod_floor(n).is_zero())
            && self.ineqs.iter().all(|t| t.eval(point) <= BigInt::zero())
    }

    pub fn conj(&self, other: &Piece) -> Piece {
        let mut out = self.clone();
        out.congs.extend(other.congs.iter().cloned());
        out.ineqs.extend(other.ineqs.iter().cloned());
        out.dedup()
    }

    fn dedup(mut self) -> Piece {
        self.congs.sort();
        self.congs.dedup();
        self.ineqs.sort();
        self.ineqs.dedup();
        self
    }

    pub fn add_ineq(&self, t: LinTerm) -> Piece {
        let mut out = self.clone();
        out.ineqs.push(t);
        out.dedup()
    }

    pub fn add_cong(&self, t: LinTerm, n: BigInt) -> Piece {
        if n.is_one() {
            return self.clone();
        }
        let mut out = self.clone();
        out.congs.push((t, n));
        out.dedup()
    }

    pub fn subst_map(&self, map: &BTreeMap<String, LinTerm>) -> Piece {
        Piece {
            congs: self
                .congs
                .iter()
                .map(|(t, n)| (t.subst_map(map), n.clone()))
                .collect(),
            ineqs: self.ineqs.iter().map(|t| t.subst_map(map)).collect(),
        }
    }

    /// Substitution by affine expressions with denominators. Inequalities
    /// are cleared by the (positive) denominator; congruences absorb it
    /// into the modulus, which is valid on pieces where the expressions
    /// take integer values.
    pub fn subst_aff(&self, map: &BTreeMap<String, AffExpr>) -> Piece {
        let subst_term = |t: &LinTerm| -> AffExpr {
            let mut acc = AffExpr::constant(t.constant.clone());
            for (v, c) in &t.coeffs {
                let repl = map
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| AffExpr::var(v));
                acc = acc.add(&repl.scale(c));
            }
            acc
        };
        let mut out = Piece::default();
        for t in &self.ineqs {
            let e = subst_term(t);
            out.ineqs.push(e.num); // denominator is positive
        }
        for (t, n) in &self.congs {
            let e = subst_term(t);
            out.congs.push((e.num, n * BigInt::from(e.den)));
        }
        out.dedup()
    }

    pub fn is_satisfiable(&self) -> bool {
        formula_is_satisfiable(&self.to_formula())
    }

    pub fn free_vars(&self) -> Vec<String> {
        self.to_formula().free_vars().into_iter().collect()
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for t in &self.ineqs {
            parts.push(format!("{t} <= 0"));
        }
        for (t, n) in &self.congs {
            parts.push(format!("{t} ≡ 0 mod {n}"));
        }
        if parts.is_empty() {
            write!(f, "true")
        } else {
            write!(f, "{}", parts.join(" ∧ "))
        }
    }
}

/// Decide satisfiability over the integers by eliminating all variables.
pub fn formula_is_satisfiable(f: &Formula) -> bool {
    let mut g = f.clone();
    for v in f.free_vars() {
        g = Formula::Exists(v, Box::new(g));
    }
    let ground = eliminate_quantifiers(&g);
    ground.eval(&Valuation::new())
}

/// Semilinear subset of Z^r in disjoint-piece normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresburgerSet {
    pub vars: Vec<String>,
    pub pieces: Vec<Piece>,
}

impl PresburgerSet {
    pub fn empty(vars: Vec<String>) -> Self {
        PresburgerSet {
            vars,
            pieces: Vec::new(),
        }
    }

    pub fn universe(vars: Vec<String>) -> Self {
        PresburgerSet {
            vars,
            pieces: vec![Piece::universe()],
        }
    }

    /// Normalize a formula into disjoint satisfiable pieces.
    pub fn from_formula(f: &Formula, vars: Vec<String>) -> Result<Self> {
        let free = f.free_vars();
        for v in &free {
            if !vars.contains(v) {
                return Err(Error::ValidationError(format!(
                    "free variable {v} not among ambient variables {vars:?}"
                )));
            }
        }
        let qf = eliminate_quantifiers(f);
        let candidates = dnf(&qf);
        let mut out = Vec::new();
        for c in candidates {
            let mut parts = vec![c];
            for p in &out {
                let mut next = Vec::new();
                for x in parts {
                    next.extend(subtract_piece(&x, p));
                }
                parts = next;
            }
            for x in parts {
                if x.is_satisfiable() {
                    out.push(x);
                }
            }
        }
        Ok(PresburgerSet { vars, pieces: out })
    }

    pub fn to_formula(&self) -> Formula {
        Formula::or(self.pieces.iter().map(|p| p.to_formula()).collect())
    }

    pub fn contains(&self, point: &Valuation) -> bool {
        self.pieces.iter().any(|p| p.contains(point))
    }

    pub fn contains_coords(&self, coords: &[BigInt]) -> bool {
        let point = self.valuation(coords);
        self.contains(&point)
    }

    pub fn valuation(&self, coords: &[BigInt]) -> Valuation {
        assert_eq!(coords.len(), self.vars.len());
        self.vars
            .iter()
            .cloned()
            .zip(coords.iter().cloned())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// All members inside the box (one interval per ambient variable).
    pub fn enumerate(&self, bounds: &[(i64, i64)]) -> Result<Vec<Vec<BigInt>>> {
        if bounds.len() != self.vars.len() {
            return Err(Error::ArityMismatch {
                expected: self.vars.len(),
                got: bounds.len(),
                context: "enumeration box".into(),
            });
        }
        let mut out = Vec::new();
        let mut coords = vec![BigInt::zero(); self.vars.len()];
        self.enum_rec(bounds, 0, &mut coords, &mut out);
        Ok(out)
    }

    fn enum_rec(
        &self,
        bounds: &[(i64, i64)],
        i: usize,
        coords: &mut Vec<BigInt>,
        out: &mut Vec<Vec<BigInt>>,
    ) {
        if i == bounds.len() {
            if self.contains_coords(coords) {
                out.push(coords.clone());
            }
            return;
        }
        for k in bounds[i].0..=bounds[i].1 {
            coords[i] = BigInt::from(k);
            self.enum_rec(bounds, i + 1, coords, out);
        }
    }

    pub fn intersect(&self, other: &PresburgerSet) -> Result<PresburgerSet> {
        if self.vars != other.vars {
            return Err(Error::AmbientMismatch(format!(
                "{:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        let mut pieces = Vec::new();
        for a in &self.pieces {
            for b in &other.pieces {
                let c = a.conj(b);
                if c.is_satisfiable() {
                    pieces.push(c);
                }
            }
        }
        Ok(PresburgerSet {
            vars: self.vars.clone(),
            pieces,
        })
    }

    pub fn union(&self, other: &PresburgerSet) -> Result<PresburgerSet> {
        if self.vars != other.vars {
            return Err(Error::AmbientMismatch(format!(
                "{:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        PresburgerSet::from_formula(
            &Formula::or(vec![self.to_formula(), other.to_formula()]),
            self.vars.clone(),
        )
    }

    /// Preimage under a piecewise-affine map into this set's ambient space.
    pub fn preimage(&self, map: &DefinableMap) -> Result<PresburgerSet> {
        if map.out_vars != self.vars {
            return Err(Error::ArityMismatch {
                expected: self.vars.len(),
                got: map.out_vars.len(),
                context: "map output vs set ambient".into(),
            });
        }
        let mut pieces = Vec::new();
        for (dom, outputs) in &map.pieces {
            let subst: BTreeMap<String, AffExpr> = map
                .out_vars
                .iter()
                .cloned()
                .zip(outputs.iter().cloned())
                .collect();
            for p in &self.pieces {
                let cand = p.subst_aff(&subst).conj(dom);
                if cand.is_satisfiable() {
                    pieces.push(cand);
                }
            }
        }
        Ok(PresburgerSet {
            vars: map.dom_vars.clone(),
            pieces,
        })
    }
}

/// Quantifier-free formula to a list of (not yet disjoint) pieces.
pub fn dnf(f: &Formula) -> Vec<Piece> {
    fn go(f: &Formula) -> Vec<Piece> {
        match f {
            Formula::True => vec![Piece::universe()],
            Formula::False => vec![],
            Formula::Le(t) => vec![Piece {
                congs: vec![],
                ineqs: vec![t.clone()],
            }],
            Formula::Cong(t, n) => vec![Piece {
                congs: vec![(t.clone(), n.clone())],
                ineqs: vec![],
            }],
            Formula::Or(fs) => fs.iter().flat_map(go).collect(),
            Formula::And(fs) => {
                let mut acc = vec![Piece::universe()];
                for g in fs {
                    let parts = go(g);
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &parts {
                            next.push(a.conj(b));
                        }
                    }
                    acc = next;
                }
                acc
            }
            other => panic!("dnf expects an nnf formula, got {other:?}"),
        }
    }
    go(&nnf(f, true))
}

/// Disjoint difference `a \ b`, as a list of pieces.
pub fn subtract_piece(a: &Piece, b: &Piece) -> Vec<Piece> {
    // a ∧ ¬(c1 ∧ ... ∧ ck) expands to the disjoint pieces
    // a ∧ ¬c1,  a ∧ c1 ∧ ¬c2,  ...
    let mut out = Vec::new();
    let mut prefix = a.clone();
    for t in &b.ineqs {
        // ¬(t <= 0)  <=>  -t + 1 <= 0
        out.push(prefix.add_ineq(t.neg().add_const(1)));
        prefix = prefix.add_ineq(t.clone());
    }
    for (t, n) in &b.congs {
        let nn: u64 = n.try_into().expect("modulus too large");
        for j in 1..nn {
            out.push(prefix.add_cong(t.add_const(j), n.clone()));
        }
        prefix = prefix.add_cong(t.clone(), n.clone());
    }
    out.retain(|p| p.is_satisfiable());
    out
}

/// Piecewise-affine Z-valued definable function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefinableFn {
    pub vars: Vec<String>,
    pub pieces: Vec<(Piece, AffExpr)>,
}

impl DefinableFn {
    pub fn affine(vars: Vec<String>, value: LinTerm) -> Self {
        DefinableFn {
            vars,
            pieces: vec![(Piece::universe(), AffExpr::from_lin(value))],
        }
    }

    pub fn eval(&self, point: &Valuation) -> Option<BigInt> {
        self.pieces
            .iter()
            .find(|(p, _)| p.contains(point))
            .map(|(_, v)| v.eval(point))
    }

    pub fn domain(&self) -> PresburgerSet {
        PresburgerSet {
            vars: self.vars.clone(),
            pieces: self.pieces.iter().map(|(p, _)| p.clone()).collect(),
        }
    }

    /// Compose with a map into this function's domain: `self ∘ map`.
    pub fn compose(&self, map: &DefinableMap) -> Result<DefinableFn> {
        if map.out_vars != self.vars {
            return Err(Error::ArityMismatch {
                expected: self.vars.len(),
                got: map.out_vars.len(),
                context: "composition arity".into(),
            });
        }
        let mut pieces = Vec::new();
        for (dom, outputs) in &map.pieces {
            let subst: BTreeMap<String, AffExpr> = map
                .out_vars
                .iter()
                .cloned()
                .zip(outputs.iter().cloned())
                .collect();
            for (p, v) in &self.pieces {
                let cand = p.subst_aff(&subst).conj(dom);
                if cand.is_satisfiable() {
                    let mut val = AffExpr::constant(v.num.constant.clone());
                    for (var, c) in &v.num.coeffs {
                        let repl = subst
                            .get(var)
                            .cloned()
                            .unwrap_or_else(|| AffExpr::var(var));
                        val = val.add(&repl.scale(c));
                    }
                    let val = AffExpr::new(val.num, val.den * v.den);
                    pieces.push((cand, val));
                }
            }
        }
        Ok(DefinableFn {
            vars: map.dom_vars.clone(),
            pieces,
        })
    }
}

/// Piecewise-affine definable map Z^dom -> Z^out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefinableMap {
    pub dom_vars: Vec<String>,
    pub out_vars: Vec<String>,
    pub pieces: Vec<(Piece, Vec<AffExpr>)>,
}

impl DefinableMap {
    pub fn identity(vars: Vec<String>) -> Self {
        let outputs = vars.iter().map(|v| AffExpr::var(v)).collect();
        DefinableMap {
            dom_vars: vars.clone(),
            out_vars: vars,
            pieces: vec![(Piece::universe(), outputs)],
        }
    }

    pub fn affine(dom_vars: Vec<String>, out_vars: Vec<String>, outputs: Vec<LinTerm>) -> Self {
        assert_eq!(out_vars.len(), outputs.len());
        DefinableMap {
            dom_vars,
            out_vars,
            pieces: vec![(
                Piece::universe(),
                outputs.into_iter().map(AffExpr::from_lin).collect(),
            )],
        }
    }

    pub fn eval(&self, point: &Valuation) -> Option<Valuation> {
        self.pieces.iter().find(|(p, _)| p.contains(point)).map(|(_, outs)| {
            self.out_vars
                .iter()
                .cloned()
                .zip(outs.iter().map(|e| e.eval(point)))
                .collect()
        })
    }

    /// Extend by identity on extra variables: `self × Id`.
    pub fn product_with_identity(&self, extra: &[String]) -> DefinableMap {
        let mut dom = self.dom_vars.clone();
        dom.extend(extra.iter().cloned());
        let mut out = self.out_vars.clone();
        out.extend(extra.iter().cloned());
        let pieces = self
            .pieces
            .iter()
            .map(|(p, outs)| {
                let mut o = outs.clone();
                o.extend(extra.iter().map(|v| AffExpr::var(v)));
                (p.clone(), o)
            })
            .collect();
        DefinableMap {
            dom_vars: dom,
            out_vars: out,
            pieces,
        }
    }

    /// Substitution table from output variables to expressions over the domain.
    pub fn subst_table(&self, piece_idx: usize) -> BTreeMap<String, AffExpr> {
        self.out_vars
            .iter()
            .cloned()
            .zip(self.pieces[piece_idx].1.iter().cloned())
            .collect()
    }

    /// Surjectivity onto a target set, decided by quantifier elimination.
    pub fn is_onto(&self, target: &PresburgerSet) -> bool {
        // for all y in target, exists x with piece(x) and f(x) = y
        let mut image_parts = Vec::new();
        for (dom, outs) in &self.pieces {
            let mut parts = vec![dom.to_formula()];
            for (v, e) in self.out_vars.iter().zip(outs) {
                // v = e  <=>  den*v - num = 0
                let t = LinTerm::var(v)
                    .scale(&BigInt::from(e.den))
                    .sub(&e.num);
                parts.push(Formula::eq(t));
            }
            image_parts.push(Formula::and(parts));
        }
        let mut exists = Formula::or(image_parts);
        for v in &self.dom_vars {
            exists = Formula::Exists(v.clone(), Box::new(exists));
        }
        let not_covered = Formula::and(vec![target.to_formula(), Formula::not(exists)]);
        !formula_is_satisfiable(&not_covered)
    }
}
