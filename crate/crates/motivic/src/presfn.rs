//! Functions on Z^r built from piecewise indicators, affine powers of L
//! and polynomial prefactors, with exact closed-form summation over
//! Z-variables and numerical specialization at L = q.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::presburger::{
    progression_decomposition, AffExpr, Piece, PresburgerSet, Progression, Valuation,
};
use crate::presburger::DefinableMap;
use crate::ring::{rat_pow, RingAElem};

/// Highest polynomial power in the summation index that closed-form
/// summation will expand.
pub const DEGREE_CAP: usize = 8;

/// One summand `coeff * alpha_1 * ... * alpha_s * L^beta` restricted to a
/// piece of Z^r. The alphas and beta are integer-valued on the support.
#[derive(Clone, Debug)]
pub struct PresTerm {
    pub coeff: RingAElem,
    pub alphas: Vec<AffExpr>,
    pub beta: AffExpr,
    pub support: Piece,
}

impl PresTerm {
    pub fn indicator(piece: Piece) -> Self {
        PresTerm {
            coeff: RingAElem::one(),
            alphas: Vec::new(),
            beta: AffExpr::zero(),
            support: piece,
        }
    }

    pub fn nu_q(&self, point: &Valuation, q: &BigRational) -> Result<BigRational> {
        if !self.support.contains(point) {
            return Ok(BigRational::zero());
        }
        let mut acc = self.coeff.nu_q(q)?;
        for a in &self.alphas {
            acc *= BigRational::from(a.eval(point));
        }
        let b = self
            .beta
            .eval(point)
            .to_i64()
            .ok_or_else(|| Error::ValidationError("exponent too large to specialize".into()))?;
        Ok(acc * rat_pow(q, b))
    }

    fn subst_aff(&self, table: &BTreeMap<String, AffExpr>) -> PresTerm {
        PresTerm {
            coeff: self.coeff.clone(),
            alphas: self.alphas.iter().map(|a| aff_subst(a, table)).collect(),
            beta: aff_subst(&self.beta, table),
            support: self.support.subst_aff(table),
        }
    }
}

fn aff_subst(e: &AffExpr, table: &BTreeMap<String, AffExpr>) -> AffExpr {
    let mut out = e.clone();
    for (v, repl) in table {
        out = out.subst_var(v, repl);
    }
    out
}

/// Finite sum of `PresTerm`s over a fixed tuple of Z-variables.
#[derive(Clone, Debug)]
pub struct PresFunction {
    pub vars: Vec<String>,
    pub terms: Vec<PresTerm>,
}

impl PresFunction {
    pub fn zero(vars: Vec<String>) -> Self {
        PresFunction {
            vars,
            terms: Vec::new(),
        }
    }

    pub fn constant(vars: Vec<String>, coeff: RingAElem) -> Self {
        PresFunction {
            vars,
            terms: vec![PresTerm {
                coeff,
                alphas: Vec::new(),
                beta: AffExpr::zero(),
                support: Piece::universe(),
            }],
        }
    }

    pub fn indicator(set: &PresburgerSet) -> Self {
        PresFunction {
            vars: set.vars.clone(),
            terms: set.pieces.iter().cloned().map(PresTerm::indicator).collect(),
        }
    }

    pub fn from_term(vars: Vec<String>, term: PresTerm) -> Self {
        PresFunction {
            vars,
            terms: vec![term],
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.vars != other.vars {
            return Err(Error::AmbientMismatch(format!(
                "{:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(PresFunction {
            vars: self.vars.clone(),
            terms,
        })
    }

    pub fn neg(&self) -> Self {
        PresFunction {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| PresTerm {
                    coeff: t.coeff.neg(),
                    ..t.clone()
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.vars != other.vars {
            return Err(Error::AmbientMismatch(format!(
                "{:?} vs {:?}",
                self.vars, other.vars
            )));
        }
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let support = a.support.conj(&b.support);
                if !support.is_satisfiable() {
                    continue;
                }
                let mut alphas = a.alphas.clone();
                alphas.extend(b.alphas.iter().cloned());
                terms.push(PresTerm {
                    coeff: a.coeff.mul(&b.coeff),
                    alphas,
                    beta: a.beta.add(&b.beta),
                    support,
                });
            }
        }
        Ok(PresFunction {
            vars: self.vars.clone(),
            terms,
        })
    }

    pub fn scale(&self, c: &RingAElem) -> Self {
        PresFunction {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| PresTerm {
                    coeff: t.coeff.mul(c),
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// Numerical specialization at L = q and a full integer point.
    pub fn nu_q(&self, point: &Valuation, q: &BigRational) -> Result<BigRational> {
        let mut acc = BigRational::zero();
        for t in &self.terms {
            acc += t.nu_q(point, q)?;
        }
        Ok(acc)
    }

    /// Pull back along a definable map into the ambient of this function.
    pub fn pullback(&self, map: &DefinableMap) -> Result<PresFunction> {
        if map.out_vars != self.vars {
            return Err(Error::AmbientMismatch(format!(
                "map lands in {:?}, function lives on {:?}",
                map.out_vars, self.vars
            )));
        }
        let mut terms = Vec::new();
        for (idx, (dom, _)) in map.pieces.iter().enumerate() {
            let table = map.subst_table(idx);
            for t in &self.terms {
                let mut s = t.subst_aff(&table);
                s.support = s.support.conj(dom);
                if s.support.is_satisfiable() {
                    terms.push(s);
                }
            }
        }
        Ok(PresFunction {
            vars: map.dom_vars.clone(),
            terms,
        })
    }

    /// Decide summability over `var` term by term. A term fails when some
    /// unbounded fiber progression carries a non-negative exponent slope.
    pub fn check_integrable(&self, var: &str) -> Result<()> {
        for t in &self.terms {
            if t.coeff.is_zero() {
                continue;
            }
            for prog in term_progressions(t, &self.vars, var)? {
                let (_, b_slope) = split_on_index(&t.beta, var, &prog);
                if prog.last_index.is_none() && b_slope >= BigRational::zero() {
                    return Err(Error::NotIntegrable {
                        witness: format!(
                            "fiber progression start {}, step {} is unbounded with \
                             exponent slope {} >= 0 in the summation index",
                            prog.start, prog.step, b_slope
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Closed-form summation over one Z-variable.
    pub fn sum_var(&self, var: &str) -> Result<PresFunction> {
        self.check_integrable(var)?;
        let rest: Vec<String> = self.vars.iter().filter(|v| *v != var).cloned().collect();
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.coeff.is_zero() {
                continue;
            }
            for prog in term_progressions(t, &self.vars, var)? {
                terms.extend(sum_term_over_progression(t, var, &prog)?);
            }
        }
        Ok(PresFunction { vars: rest, terms })
    }

    /// Sum over every variable; the result is a ring constant.
    pub fn sum_all(&self) -> Result<RingAElem> {
        let mut f = self.clone();
        while let Some(v) = f.vars.first().cloned() {
            f = f.sum_var(&v)?;
        }
        let mut acc = RingAElem::zero();
        for t in &f.terms {
            if !t.support.is_satisfiable() {
                continue;
            }
            let point = Valuation::new();
            let mut c = t.coeff.clone();
            for a in &t.alphas {
                c = c.scale_int(&a.eval(&point));
            }
            let b = t
                .beta
                .eval(&point)
                .to_i64()
                .ok_or_else(|| Error::ValidationError("constant exponent too large".into()))?;
            acc = acc.add(&c.mul_l_pow(b));
        }
        Ok(acc)
    }
}

fn term_progressions(t: &PresTerm, vars: &[String], var: &str) -> Result<Vec<Progression>> {
    let set = PresburgerSet {
        vars: vars.to_vec(),
        pieces: vec![t.support.clone()],
    };
    let progs = progression_decomposition(&set, var)?;
    // refine each progression until every alpha and beta has an integer
    // slope in the progression index
    let mut out = Vec::new();
    for prog in progs {
        let mut t_ref = 1u64;
        for e in t.alphas.iter().chain(std::iter::once(&t.beta)) {
            let (_, slope) = split_on_index(e, var, &prog);
            let den: u64 = slope.denom().try_into().unwrap();
            t_ref = crate::presburger::lcm_u64(t_ref, den);
        }
        if t_ref == 1 {
            out.push(prog);
        } else {
            out.extend(refine_progression(&prog, t_ref));
        }
    }
    Ok(out)
}

/// Value at the progression start and rational slope per index step.
fn split_on_index(e: &AffExpr, var: &str, prog: &Progression) -> (AffExpr, BigRational) {
    let (c, _) = e.num.drop_var(var);
    let slope = BigRational::new(c * BigInt::from(prog.step), BigInt::from(e.den));
    let at_start = e.subst_var(var, &prog.start);
    (at_start, slope)
}

/// Split a progression into `t` interleaved subprogressions of step
/// `t * step` so that residue-dependent quantities become affine.
fn refine_progression(prog: &Progression, t: u64) -> Vec<Progression> {
    let mut out = Vec::new();
    for r in 0..t {
        let start = prog
            .start
            .add(&AffExpr::constant(prog.step * r as i64));
        let step = prog.step * t as i64;
        match &prog.last_index {
            None => out.push(Progression {
                base: prog.base.clone(),
                start,
                step,
                last_index: None,
            }),
            Some(k) => {
                // split the base on k mod t; on each branch the new last
                // index is affine
                for j in 0..t {
                    let nb = prog.base.add_cong(
                        k.num.add_const(-((j * k.den) as i64)),
                        BigInt::from(t * k.den),
                    );
                    if !nb.is_satisfiable() {
                        continue;
                    }
                    let mut kk = AffExpr::new(
                        k.num.add_const(-((j * k.den) as i64)),
                        k.den * t,
                    );
                    if j < r {
                        kk = kk.add(&AffExpr::constant(-1));
                    }
                    // at least one member: kk >= 0
                    let guard = kk.num.neg();
                    let nb = nb.add_ineq(guard);
                    if !nb.is_satisfiable() {
                        continue;
                    }
                    out.push(Progression {
                        base: nb,
                        start: start.clone(),
                        step,
                        last_index: Some(kk),
                    });
                }
            }
        }
    }
    out
}

/// One summand of a closed-form sum: `coeff * prod(alphas) * L^beta` over
/// a refined base piece.
struct SumPart {
    coeff: RingAElem,
    alphas: Vec<AffExpr>,
    beta: AffExpr,
    base: Piece,
}

fn sum_term_over_progression(
    t: &PresTerm,
    var: &str,
    prog: &Progression,
) -> Result<Vec<PresTerm>> {
    // substitute n = start + step * k; slopes are integral after refinement
    let factors: Vec<(AffExpr, BigInt)> = t
        .alphas
        .iter()
        .map(|a| {
            let (u, v) = split_on_index(a, var, prog);
            assert!(v.is_integer());
            (u, v.to_integer())
        })
        .collect();
    let (b_u, b_v) = split_on_index(&t.beta, var, prog);
    assert!(b_v.is_integer());
    let b_v = b_v.to_integer();
    let b_slope: i64 = (&b_v)
        .try_into()
        .map_err(|_| Error::ValidationError("exponent slope too large".into()))?;

    let mut out = Vec::new();
    // expand prod(u_i + v_i k) over subsets taking the k part
    for mask in 0u32..(1 << factors.len()) {
        let mut coeff = t.coeff.clone();
        let mut alphas = Vec::new();
        let mut p = 0usize;
        let mut zero = false;
        for (i, (u, v)) in factors.iter().enumerate() {
            if mask & (1 << i) != 0 {
                if v.is_zero() {
                    zero = true;
                    break;
                }
                coeff = coeff.scale_int(v);
                p += 1;
            } else {
                alphas.push(u.clone());
            }
        }
        if zero {
            continue;
        }
        if p > DEGREE_CAP {
            return Err(Error::DegreeCapExceeded(p, DEGREE_CAP));
        }
        let parts = match &prog.last_index {
            None => {
                // integrability was checked upstream: b_slope < 0 here
                vec![SumPart {
                    coeff: geom_sum(p, (-b_slope) as u64),
                    alphas: Vec::new(),
                    beta: AffExpr::zero(),
                    base: prog.base.clone(),
                }]
            }
            Some(k) => sum_powers_bounded(p, b_slope, k, &prog.base)?,
        };
        for part in parts {
            let mut a = alphas.clone();
            a.extend(part.alphas);
            out.push(PresTerm {
                coeff: coeff.mul(&part.coeff),
                alphas: a,
                beta: b_u.add(&part.beta),
                support: part.base,
            });
        }
    }
    Ok(out)
}

/// `sum_{k>=0} k^p L^{-m k}` in closed form via Eulerian numbers.
pub fn geom_sum(p: usize, m: u64) -> RingAElem {
    let inv = RingAElem::inv_one_minus_l_neg(m as u32);
    if p == 0 {
        return inv;
    }
    let e = eulerian(p);
    let mut num = RingAElem::zero();
    for (j, c) in e.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        num = num.add(&RingAElem::int(c.clone()).mul_l_pow(-((m as i64) * (j as i64 + 1))));
    }
    num.mul(&inv.pow((p + 1) as u32))
}

fn eulerian(p: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for n in 2..=p {
        let mut next = vec![BigInt::zero(); n];
        for (k, item) in next.iter_mut().enumerate() {
            let a = if k < row.len() {
                &row[k] * BigInt::from(k as u64 + 1)
            } else {
                BigInt::zero()
            };
            let b = if k >= 1 && k - 1 < row.len() {
                &row[k - 1] * BigInt::from((n - k) as u64)
            } else {
                BigInt::zero()
            };
            *item = a + b;
        }
        row = next;
    }
    row
}

/// `sum_{k=0}^{K} k^p L^{m k}` in closed form; splits the base where the
/// answer depends on residues of `K`.
fn sum_powers_bounded(
    p: usize,
    m: i64,
    kexpr: &AffExpr,
    base: &Piece,
) -> Result<Vec<SumPart>> {
    if p > DEGREE_CAP {
        return Err(Error::DegreeCapExceeded(p, DEGREE_CAP));
    }
    if m < 0 {
        // tail difference: sum_{k=0}^{K} = sum_{k>=0} - L^{m(K+1)} *
        // sum_{j>=0} (j+K+1)^p L^{m j}
        let mm = (-m) as u64;
        let k1 = kexpr.add(&AffExpr::constant(1));
        let mut out = vec![SumPart {
            coeff: geom_sum(p, mm),
            alphas: Vec::new(),
            beta: AffExpr::zero(),
            base: base.clone(),
        }];
        for r in 0..=p {
            let c = binom(p, r);
            out.push(SumPart {
                coeff: geom_sum(r, mm).scale_int(&(-c)),
                alphas: vec![k1.clone(); p - r],
                beta: k1.scale(&BigInt::from(m)),
                base: base.clone(),
            });
        }
        Ok(out)
    } else if m > 0 {
        // reverse the index: k = K - j
        let mut out = Vec::new();
        for r in 0..=p {
            let sign = if r % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            let c = binom(p, r) * sign;
            for part in sum_powers_bounded(r, -m, kexpr, base)? {
                let mut alphas = vec![kexpr.clone(); p - r];
                alphas.extend(part.alphas);
                out.push(SumPart {
                    coeff: part.coeff.scale_int(&c),
                    alphas,
                    beta: kexpr.scale(&BigInt::from(m)).add(&part.beta),
                    base: part.base,
                });
            }
        }
        Ok(out)
    } else {
        faulhaber_parts(p, kexpr, base)
    }
}

fn binom(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from((n - i) as u64) / BigInt::from(i as u64 + 1);
    }
    acc
}

/// `sum_{k=0}^{K} k^p` as integer-coefficient polynomials in `(K - rho)/M`
/// on base pieces split by `K mod M`.
fn faulhaber_parts(p: usize, kexpr: &AffExpr, base: &Piece) -> Result<Vec<SumPart>> {
    if p == 0 {
        return Ok(vec![SumPart {
            coeff: RingAElem::one(),
            alphas: vec![kexpr.add(&AffExpr::constant(1))],
            beta: AffExpr::zero(),
            base: base.clone(),
        }]);
    }
    let poly = faulhaber_poly(p);
    let mut m = BigInt::one();
    for c in &poly {
        m = num_integer::lcm(m, c.denom().clone());
    }
    let m_u: u64 = (&m)
        .try_into()
        .map_err(|_| Error::ValidationError("Faulhaber denominator too large".into()))?;
    let mut out = Vec::new();
    for rho in 0..m_u {
        let nb = base.add_cong(
            kexpr.num.add_const(-((rho * kexpr.den) as i64)),
            BigInt::from(m_u * kexpr.den),
        );
        if !nb.is_satisfiable() {
            continue;
        }
        let u = AffExpr::new(
            kexpr.num.add_const(-((rho * kexpr.den) as i64)),
            kexpr.den * m_u,
        );
        // compose poly with K = M u + rho; the result has integer coefficients
        let shifted = compose_affine(&poly, &m, &BigInt::from(rho));
        for (i, c) in shifted.iter().enumerate() {
            assert!(c.is_integer(), "Faulhaber residue split must clear denominators");
            let ci = c.to_integer();
            if ci.is_zero() {
                continue;
            }
            out.push(SumPart {
                coeff: RingAElem::int(ci),
                alphas: vec![u.clone(); i],
                beta: AffExpr::zero(),
                base: nb.clone(),
            });
        }
    }
    Ok(out)
}

/// Coefficients of `sum_{k=0}^{K} k^p` as a polynomial in `K`, by Lagrange
/// interpolation through the first `p + 2` partial sums.
fn faulhaber_poly(p: usize) -> Vec<BigRational> {
    let deg = p + 1;
    let points: Vec<(BigRational, BigRational)> = (0..=deg as i64)
        .map(|x| {
            let mut s = BigInt::zero();
            for k in 0..=x {
                s += BigInt::from(k).pow(p as u32);
            }
            (BigRational::from(BigInt::from(x)), BigRational::from(s))
        })
        .collect();
    lagrange(&points)
}

fn lagrange(points: &[(BigRational, BigRational)]) -> Vec<BigRational> {
    let n = points.len();
    let mut acc = vec![BigRational::zero(); n];
    for (i, (xi, yi)) in points.iter().enumerate() {
        // numerator polynomial prod_{j != i} (X - x_j)
        let mut numer = vec![BigRational::one()];
        let mut denom = BigRational::one();
        for (j, (xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut next = vec![BigRational::zero(); numer.len() + 1];
            for (d, c) in numer.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= c * xj;
            }
            numer = next;
            denom *= xi - xj;
        }
        let w = yi / denom;
        for (d, c) in numer.iter().enumerate() {
            acc[d] += c * &w;
        }
    }
    acc
}

/// Substitute `K = M u + rho` into a polynomial in `K`.
fn compose_affine(poly: &[BigRational], m: &BigInt, rho: &BigInt) -> Vec<BigRational> {
    let mr = BigRational::from(m.clone());
    let rr = BigRational::from(rho.clone());
    // Horner: acc = acc * (M u + rho) + c, from the leading coefficient down
    let mut acc = vec![BigRational::zero(); poly.len()];
    for c in poly.iter().rev() {
        let mut next = vec![BigRational::zero(); poly.len()];
        for (d, a) in acc.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            if d + 1 < next.len() {
                next[d + 1] += a * &mr;
            }
            next[d] += a * &rr;
        }
        next[0] += c;
        acc = next;
    }
    acc
}
