//! Decomposition of the fibers of a Presburger set along a distinguished
//! variable into arithmetic progressions with definable start and length.
//! This is the engine behind summation over Z-variables.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{AffExpr, LinTerm, Piece, PresburgerSet};
use crate::error::{Error, Result};

/// One fiber progression over a base piece of the parameter space:
/// `{ start(y) + step * k : 0 <= k <= last_index(y) }`, or `k >= 0`
/// when `last_index` is absent. `step` may be negative for fibers
/// unbounded below.
#[derive(Clone, Debug)]
pub struct Progression {
    pub base: Piece,
    pub start: AffExpr,
    pub step: i64,
    pub last_index: Option<AffExpr>,
}

impl Progression {
    /// Enumerate the first `max` members at a parameter point (test oracle).
    pub fn members_at(
        &self,
        point: &super::Valuation,
        window: (i64, i64),
    ) -> Vec<BigInt> {
        if !self.base.contains(point) {
            return Vec::new();
        }
        let start = self.start.eval(point);
        let mut out = Vec::new();
        let last = self.last_index.as_ref().map(|k| k.eval(point));
        let mut k = BigInt::zero();
        loop {
            if let Some(last) = &last {
                if k > *last {
                    break;
                }
            }
            let n = &start + BigInt::from(self.step) * &k;
            let below = n < BigInt::from(window.0);
            let above = n > BigInt::from(window.1);
            if self.last_index.is_none() {
                // unbounded: stop once we leave the window in the travel direction
                if (self.step > 0 && above) || (self.step < 0 && below) {
                    break;
                }
            }
            if !below && !above {
                out.push(n);
            }
            k += 1;
            if self.last_index.is_none() && k > BigInt::from(10_000) {
                break;
            }
        }
        out
    }
}

struct RatBound {
    num: LinTerm,
    den: u64, // positive
}

/// Decompose the fibers of `set` along its distinguished `var` (which must
/// be an ambient variable) into progressions over the remaining variables.
pub fn progression_decomposition(set: &PresburgerSet, var: &str) -> Result<Vec<Progression>> {
    if !set.vars.iter().any(|v| v == var) {
        return Err(Error::ValidationError(format!(
            "{var} is not an ambient variable of the set"
        )));
    }
    let mut out = Vec::new();
    for piece in &set.pieces {
        out.extend(decompose_piece(piece, var)?);
    }
    Ok(out)
}

fn to_u64(n: &BigInt) -> Result<u64> {
    n.to_u64()
        .ok_or_else(|| Error::ValidationError(format!("modulus {n} too large")))
}

fn mod_inverse(a: i64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let m_i = m as i64;
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (m_i, a.rem_euclid(m_i));
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m_i) as u64)
}

fn crt(a1: u64, m1: u64, a2: u64, m2: u64) -> Option<(u64, u64)> {
    let g = super::gcd_u64(m1, m2);
    let (a1, a2) = (a1 % m1, a2 % m2);
    if (a1 as i64 - a2 as i64).rem_euclid(g as i64) != 0 {
        return None;
    }
    let l = m1 / g * m2;
    let m2g = m2 / g;
    // solve a1 + m1*k ≡ a2 (mod m2), i.e. (m1/g)*k ≡ (a2-a1)/g (mod m2/g)
    let inv = mod_inverse((m1 / g % m2g.max(1)) as i64, m2g.max(1))?;
    let diff = ((a2 as i64 - a1 as i64) / g as i64).rem_euclid(m2g.max(1) as i64) as u64;
    let k = ((diff as u128 * inv as u128) % m2g.max(1) as u128) as u64;
    let x = (a1 as u128 + (m1 as u128) * (k as u128)) % (l as u128);
    Some((x as u64, l))
}

fn decompose_piece(piece: &Piece, var: &str) -> Result<Vec<Progression>> {
    // split constraints into those mentioning var and the rest
    let mut base0 = Piece::default();
    let mut var_congs = Vec::new();
    let mut var_ineqs = Vec::new();
    for (t, n) in &piece.congs {
        let (c, rest) = t.drop_var(var);
        if c.is_zero() {
            base0.congs.push((t.clone(), n.clone()));
        } else {
            var_congs.push((c, rest, n.clone()));
        }
    }
    for t in &piece.ineqs {
        let (c, rest) = t.drop_var(var);
        if c.is_zero() {
            base0.ineqs.push(t.clone());
        } else {
            var_ineqs.push((c, rest));
        }
    }

    // resolve congruences on var, branching the base over the residues of
    // their parameter parts
    let mut branches: Vec<(u64, u64, Piece)> = vec![(0, 1, base0)];
    for (c, rest, m) in &var_congs {
        let m_u = to_u64(m)?;
        let c_i = c
            .to_i64()
            .ok_or_else(|| Error::ValidationError("congruence coefficient too large".into()))?;
        let mut next = Vec::new();
        for (a, d, base) in &branches {
            for rho in 0..m_u {
                // branch: rest ≡ rho (mod m)
                let nb = base.add_cong(rest.add_const(-(rho as i64)), m.clone());
                // c*var + rho ≡ 0 (mod m)
                let g = super::gcd_u64(c_i.unsigned_abs(), m_u);
                if rho % g != 0 {
                    continue;
                }
                let m_g = m_u / g;
                let (n0, new_mod) = if m_g == 1 {
                    (0, 1)
                } else {
                    let inv = match mod_inverse(c_i / g as i64, m_g) {
                        Some(i) => i,
                        None => continue,
                    };
                    let rhs = (-((rho / g) as i64)).rem_euclid(m_g as i64) as u64;
                    (((rhs as u128 * inv as u128) % m_g as u128) as u64, m_g)
                };
                if let Some((a2, d2)) = crt(*a, *d, n0, new_mod) {
                    next.push((a2, d2, nb));
                }
            }
        }
        branches = next;
    }

    // classify inequality bounds
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for (c, rest) in &var_ineqs {
        let c_i = c
            .to_i64()
            .ok_or_else(|| Error::ValidationError("bound coefficient too large".into()))?;
        if c_i > 0 {
            // var <= -rest/c
            uppers.push(RatBound {
                num: rest.neg(),
                den: c_i as u64,
            });
        } else {
            // var >= rest/(-c)
            lowers.push(RatBound {
                num: rest.clone(),
                den: (-c_i) as u64,
            });
        }
    }

    let mut out = Vec::new();
    for (a, d, base) in branches {
        if !base.is_satisfiable() {
            continue;
        }
        for prog in branch_bounds(&base, a, d, &lowers, &uppers)? {
            if prog.base.is_satisfiable() {
                out.push(prog);
            }
        }
    }
    Ok(out)
}

/// Pick the binding lower/upper bound by branching on orderings, then
/// align the bound to the residue class `a mod d`.
fn branch_bounds(
    base: &Piece,
    a: u64,
    d: u64,
    lowers: &[RatBound],
    uppers: &[RatBound],
) -> Result<Vec<Progression>> {
    let lower_branches = dominant_bound(base, lowers, true);
    let mut out = Vec::new();
    for (base_l, low) in lower_branches {
        let upper_branches = dominant_bound(&base_l, uppers, false);
        for (base_u, up) in upper_branches {
            match (&low, &up) {
                (None, None) => {
                    // fiber is a full residue class: ascending and
                    // descending halves
                    out.push(Progression {
                        base: base_u.clone(),
                        start: AffExpr::constant(a as i64),
                        step: d as i64,
                        last_index: None,
                    });
                    out.push(Progression {
                        base: base_u.clone(),
                        start: AffExpr::constant(a as i64 - d as i64),
                        step: -(d as i64),
                        last_index: None,
                    });
                }
                (Some(lb), None) => {
                    for (b2, start) in align_ceil(&base_u, lb, a, d) {
                        out.push(Progression {
                            base: b2,
                            start,
                            step: d as i64,
                            last_index: None,
                        });
                    }
                }
                (None, Some(ub)) => {
                    for (b2, start) in align_floor(&base_u, ub, a, d) {
                        out.push(Progression {
                            base: b2,
                            start,
                            step: -(d as i64),
                            last_index: None,
                        });
                    }
                }
                (Some(lb), Some(ub)) => {
                    for (b2, start) in align_ceil(&base_u, lb, a, d) {
                        for (b3, ufloor) in floor_expr(&b2, ub) {
                            for (b4, k) in floor_div_aff(&b3, &ufloor.sub(&start), d) {
                                // require at least one member: k >= 0
                                let guard = k.num.neg();
                                let b5 = b4.add_ineq(guard);
                                out.push(Progression {
                                    base: b5,
                                    start: start.clone(),
                                    step: d as i64,
                                    last_index: Some(k),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Branch on which bound is binding. `is_lower` selects max (lower bounds)
/// or min (upper bounds). Returns `(refined base, Some(binding))` per
/// branch, or a single `(base, None)` when there are no bounds.
fn dominant_bound<'a>(
    base: &Piece,
    bounds: &'a [RatBound],
    is_lower: bool,
) -> Vec<(Piece, Option<&'a RatBound>)> {
    if bounds.is_empty() {
        return vec![(base.clone(), None)];
    }
    if bounds.len() == 1 {
        return vec![(base.clone(), Some(&bounds[0]))];
    }
    let mut out = Vec::new();
    for (i, cand) in bounds.iter().enumerate() {
        let mut b = base.clone();
        for (j, other) in bounds.iter().enumerate() {
            if i == j {
                continue;
            }
            // compare cand (num1/den1) with other (num2/den2) by
            // cross-multiplication with positive denominators
            let lhs = cand.num.scale(&BigInt::from(other.den));
            let rhs = other.num.scale(&BigInt::from(cand.den));
            let cmp = if is_lower {
                // cand >= other, strict for j < i to keep branches disjoint
                if j < i {
                    rhs.sub(&lhs).add_const(1)
                } else {
                    rhs.sub(&lhs)
                }
            } else if j < i {
                lhs.sub(&rhs).add_const(1)
            } else {
                lhs.sub(&rhs)
            };
            b = b.add_ineq(cmp);
        }
        if b.is_satisfiable() {
            out.push((b, Some(cand)));
        }
    }
    out
}

/// Smallest value >= num/den congruent to `a mod d`, made affine by
/// splitting the base on the residue of `num` modulo `den*d`.
fn align_ceil(base: &Piece, b: &RatBound, a: u64, d: u64) -> Vec<(Piece, AffExpr)> {
    let m = b.den * d;
    let mut out = Vec::new();
    for rho in 0..m {
        let nb = base.add_cong(b.num.add_const(-(rho as i64)), BigInt::from(m));
        if !nb.is_satisfiable() {
            continue;
        }
        // on this branch num = m*s + rho, so ceil(num/den) = (num - rho)/den + ceil(rho/den)
        let rho_den = rho % b.den;
        let ceil0 = AffExpr::new(b.num.add_const(-(rho_den as i64)), b.den);
        let extra = if rho_den > 0 { 1 } else { 0 };
        // ceil0 value ≡ (rho - rho_den)/den (mod d)
        let c_mod = ((rho - rho_den) / b.den) % d;
        let c_val = (c_mod + extra as u64) % d;
        let offset = ((a as i64 - c_val as i64).rem_euclid(d as i64)) as i64;
        let start = ceil0
            .add(&AffExpr::constant(extra))
            .add(&AffExpr::constant(offset));
        out.push((nb, start));
    }
    out
}

/// Largest value <= num/den congruent to `a mod d`.
fn align_floor(base: &Piece, b: &RatBound, a: u64, d: u64) -> Vec<(Piece, AffExpr)> {
    let m = b.den * d;
    let mut out = Vec::new();
    for rho in 0..m {
        let nb = base.add_cong(b.num.add_const(-(rho as i64)), BigInt::from(m));
        if !nb.is_satisfiable() {
            continue;
        }
        let rho_den = rho % b.den;
        let floor0 = AffExpr::new(b.num.add_const(-(rho_den as i64)), b.den);
        // floor0 value ≡ (rho - rho_den)/den (mod d)
        let f_mod = ((rho - rho_den) / b.den) % d;
        let offset = -((f_mod as i64 - a as i64).rem_euclid(d as i64));
        let start = floor0.add(&AffExpr::constant(offset));
        out.push((nb, start));
    }
    out
}

/// `floor(num/den)` of a rational bound, split on residues.
fn floor_expr(base: &Piece, b: &RatBound) -> Vec<(Piece, AffExpr)> {
    if b.den == 1 {
        return vec![(base.clone(), AffExpr::from_lin(b.num.clone()))];
    }
    let mut out = Vec::new();
    for rho in 0..b.den {
        let nb = base.add_cong(b.num.add_const(-(rho as i64)), BigInt::from(b.den));
        if !nb.is_satisfiable() {
            continue;
        }
        out.push((nb, AffExpr::new(b.num.add_const(-(rho as i64)), b.den)));
    }
    out
}

/// `floor(e/d)` for an integer-valued affine expression, split on residues.
fn floor_div_aff(base: &Piece, e: &AffExpr, d: u64) -> Vec<(Piece, AffExpr)> {
    let mut out = Vec::new();
    // e = num/den with den | num on the base; e ≡ j (mod d) is branched via
    // num ≡ j*den (mod d*den)
    let m = d * e.den;
    for j in 0..d {
        let rho = (j as i64) * (e.den as i64);
        let nb = base.add_cong(e.num.add_const(-rho), BigInt::from(m));
        if !nb.is_satisfiable() {
            continue;
        }
        out.push((nb, AffExpr::new(e.num.add_const(-rho), m)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::{Formula, Valuation};

    fn var(v: &str) -> LinTerm {
        LinTerm::var(v)
    }

    fn fiber_via_enum(
        set: &PresburgerSet,
        yval: &[(&str, i64)],
        window: (i64, i64),
    ) -> Vec<BigInt> {
        let mut out = Vec::new();
        for n in window.0..=window.1 {
            let mut p: Valuation = yval
                .iter()
                .map(|(v, k)| (v.to_string(), BigInt::from(*k)))
                .collect();
            p.insert("n".into(), BigInt::from(n));
            if set.contains(&p) {
                out.push(BigInt::from(n));
            }
        }
        out
    }

    fn progressions_fiber(
        progs: &[Progression],
        yval: &[(&str, i64)],
        window: (i64, i64),
    ) -> Vec<BigInt> {
        let point: Valuation = yval
            .iter()
            .map(|(v, k)| (v.to_string(), BigInt::from(*k)))
            .collect();
        let mut out: Vec<BigInt> = progs
            .iter()
            .flat_map(|p| p.members_at(&point, window))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn half_line() {
        let s = PresburgerSet::from_formula(&Formula::le(var("n").neg()), vec!["n".into()])
            .unwrap();
        let progs = progression_decomposition(&s, "n").unwrap();
        assert_eq!(progs.len(), 1);
        assert_eq!(progs[0].step, 1);
        assert!(progs[0].last_index.is_none());
        assert_eq!(progressions_fiber(&progs, &[], (-5, 5)), fiber_via_enum(&s, &[], (-5, 5)));
    }

    #[test]
    fn bounded_by_parameter() {
        // 0 <= n <= y over y >= 0
        let f = Formula::and(vec![
            Formula::le(var("n").neg()),
            Formula::le(var("n").sub(&var("y"))),
            Formula::le(var("y").neg()),
        ]);
        let s = PresburgerSet::from_formula(&f, vec!["y".into(), "n".into()]).unwrap();
        let progs = progression_decomposition(&s, "n").unwrap();
        for y in [0, 1, 5, 9] {
            assert_eq!(
                progressions_fiber(&progs, &[("y", y)], (-3, 20)),
                fiber_via_enum(&s, &[("y", y)], (-3, 20)),
                "y = {y}"
            );
        }
    }

    #[test]
    fn congruence_with_parameter_lower_bound() {
        // n ≡ 1 mod 3, n >= y
        let f = Formula::and(vec![
            Formula::cong(var("n").add_const(-1), BigInt::from(3)),
            Formula::le(var("y").sub(&var("n"))),
        ]);
        let s = PresburgerSet::from_formula(&f, vec!["y".into(), "n".into()]).unwrap();
        let progs = progression_decomposition(&s, "n").unwrap();
        for y in [-2, 0, 5] {
            assert_eq!(
                progressions_fiber(&progs, &[("y", y)], (-10, 30)),
                fiber_via_enum(&s, &[("y", y)], (-10, 30)),
                "y = {y}"
            );
        }
        // every unbounded progression steps by 3
        for p in &progs {
            assert_eq!(p.step.abs(), 3);
        }
    }

    #[test]
    fn two_sided_residue_class() {
        let f = Formula::cong(var("n"), BigInt::from(2));
        let s = PresburgerSet::from_formula(&f, vec!["n".into()]).unwrap();
        let progs = progression_decomposition(&s, "n").unwrap();
        assert_eq!(progressions_fiber(&progs, &[], (-8, 8)), fiber_via_enum(&s, &[], (-8, 8)));
    }

    #[test]
    fn scaled_bound() {
        // 2n >= 3y, n <= 4y over y >= 1
        let f = Formula::and(vec![
            Formula::le(
                var("y")
                    .scale(&BigInt::from(3))
                    .sub(&var("n").scale(&BigInt::from(2))),
            ),
            Formula::le(var("n").sub(&var("y").scale(&BigInt::from(4)))),
            Formula::le(LinTerm::constant(1).sub(&var("y"))),
        ]);
        let s = PresburgerSet::from_formula(&f, vec!["y".into(), "n".into()]).unwrap();
        let progs = progression_decomposition(&s, "n").unwrap();
        for y in [1, 2, 3, 7] {
            assert_eq!(
                progressions_fiber(&progs, &[("y", y)], (-5, 40)),
                fiber_via_enum(&s, &[("y", y)], (-5, 40)),
                "y = {y}"
            );
        }
    }
}
