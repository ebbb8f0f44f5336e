//! Cooper-style quantifier elimination with congruence handling.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{Formula, LinTerm};

/// Eliminate all quantifiers; the result is equivalent over the integers.
pub fn eliminate_quantifiers(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Le(_) | Formula::Eq(_) | Formula::Cong(..) => {
            f.clone()
        }
        Formula::Not(g) => Formula::not(eliminate_quantifiers(g)),
        Formula::And(fs) => Formula::and(fs.iter().map(eliminate_quantifiers).collect()),
        Formula::Or(fs) => Formula::or(fs.iter().map(eliminate_quantifiers).collect()),
        Formula::Exists(v, g) => eliminate_exists(v, &eliminate_quantifiers(g)),
        Formula::Forall(v, g) => Formula::not(eliminate_exists(
            v,
            &Formula::not(eliminate_quantifiers(g)),
        )),
    }
}

/// Negation normal form over `Le`/`Cong` atoms only. Equalities are split,
/// negated congruences expand into the `n - 1` complementary classes.
pub fn nnf(f: &Formula, positive: bool) -> Formula {
    match f {
        Formula::True => {
            if positive {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::False => {
            if positive {
                Formula::False
            } else {
                Formula::True
            }
        }
        Formula::Le(t) => {
            if positive {
                Formula::le(t.clone())
            } else {
                // not (t <= 0)  <=>  -t + 1 <= 0
                Formula::le(t.neg().add_const(1))
            }
        }
        Formula::Eq(t) => {
            if positive {
                Formula::and(vec![Formula::le(t.clone()), Formula::le(t.neg())])
            } else {
                Formula::or(vec![
                    Formula::le(t.add_const(1)),
                    Formula::le(t.neg().add_const(1)),
                ])
            }
        }
        Formula::Cong(t, n) => {
            if positive {
                Formula::cong(t.clone(), n.clone())
            } else {
                let nn: u64 = n.try_into().expect("congruence modulus too large");
                Formula::or(
                    (1..nn)
                        .map(|j| Formula::cong(t.add_const(j), n.clone()))
                        .collect(),
                )
            }
        }
        Formula::Not(g) => nnf(g, !positive),
        Formula::And(fs) => {
            let parts = fs.iter().map(|g| nnf(g, positive)).collect();
            if positive {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        Formula::Or(fs) => {
            let parts = fs.iter().map(|g| nnf(g, positive)).collect();
            if positive {
                Formula::or(parts)
            } else {
                Formula::and(parts)
            }
        }
        Formula::Exists(..) | Formula::Forall(..) => {
            panic!("nnf expects a quantifier-free formula")
        }
    }
}

/// Atoms of the coefficient-normalized formula: the variable occurs with
/// coefficient +1 or -1.
#[derive(Clone)]
enum NAtom {
    /// `sign * x + rest <= 0`
    Le { sign: i8, rest: LinTerm },
    /// `x + rest ≡ 0 mod n`
    Cong { rest: LinTerm, n: BigInt },
    /// atom not mentioning the variable
    Other(Formula),
}

#[derive(Clone)]
enum NTree {
    Atom(NAtom),
    And(Vec<NTree>),
    Or(Vec<NTree>),
    Const(bool),
}

fn collect_coeff_lcm(f: &Formula, var: &str, acc: &mut BigInt) {
    match f {
        Formula::Le(t) | Formula::Cong(t, _) => {
            let c = t.coeff(var);
            if !c.is_zero() {
                *acc = acc.lcm(&c.abs());
            }
        }
        Formula::And(fs) | Formula::Or(fs) => {
            for g in fs {
                collect_coeff_lcm(g, var, acc);
            }
        }
        _ => {}
    }
}

fn normalize_tree(f: &Formula, var: &str, l: &BigInt) -> NTree {
    match f {
        Formula::True => NTree::Const(true),
        Formula::False => NTree::Const(false),
        Formula::Le(t) => {
            let (c, rest) = t.drop_var(var);
            if c.is_zero() {
                NTree::Atom(NAtom::Other(f.clone()))
            } else {
                let m = l / c.abs();
                NTree::Atom(NAtom::Le {
                    sign: if c.is_positive() { 1 } else { -1 },
                    rest: rest.scale(&m),
                })
            }
        }
        Formula::Cong(t, n) => {
            let (c, rest) = t.drop_var(var);
            if c.is_zero() {
                NTree::Atom(NAtom::Other(f.clone()))
            } else {
                let m = l / c.abs();
                let nn = n * &m;
                // c x + r ≡ 0 (mod n)  =>  ±l x + m r ≡ 0 (mod m n);
                // flip sign so the coefficient of x is +l, then treat x' = l x.
                let rest = if c.is_positive() {
                    rest.scale(&m)
                } else {
                    rest.scale(&(-&m))
                };
                NTree::Atom(NAtom::Cong { rest, n: nn })
            }
        }
        Formula::And(fs) => NTree::And(fs.iter().map(|g| normalize_tree(g, var, l)).collect()),
        Formula::Or(fs) => NTree::Or(fs.iter().map(|g| normalize_tree(g, var, l)).collect()),
        other => panic!("unexpected node in normalized formula: {other:?}"),
    }
}

fn tree_minus_infinity(t: &NTree, j: &BigInt) -> Formula {
    match t {
        NTree::Const(true) => Formula::True,
        NTree::Const(false) => Formula::False,
        NTree::And(fs) => Formula::and(fs.iter().map(|g| tree_minus_infinity(g, j)).collect()),
        NTree::Or(fs) => Formula::or(fs.iter().map(|g| tree_minus_infinity(g, j)).collect()),
        NTree::Atom(NAtom::Other(f)) => f.clone(),
        NTree::Atom(NAtom::Le { sign, .. }) => {
            if *sign > 0 {
                // x' <= -rest holds for x' small enough
                Formula::True
            } else {
                Formula::False
            }
        }
        NTree::Atom(NAtom::Cong { rest, n }) => Formula::cong(rest.add_const(j.clone()), n.clone()),
    }
}

fn tree_subst(t: &NTree, x_repl: &LinTerm) -> Formula {
    match t {
        NTree::Const(true) => Formula::True,
        NTree::Const(false) => Formula::False,
        NTree::And(fs) => Formula::and(fs.iter().map(|g| tree_subst(g, x_repl)).collect()),
        NTree::Or(fs) => Formula::or(fs.iter().map(|g| tree_subst(g, x_repl)).collect()),
        NTree::Atom(NAtom::Other(f)) => f.clone(),
        NTree::Atom(NAtom::Le { sign, rest }) => {
            let t = if *sign > 0 {
                x_repl.add(rest)
            } else {
                x_repl.neg().add(rest)
            };
            Formula::le(t)
        }
        NTree::Atom(NAtom::Cong { rest, n }) => Formula::cong(x_repl.add(rest), n.clone()),
    }
}

fn collect_lowers(t: &NTree, out: &mut Vec<LinTerm>) {
    match t {
        NTree::And(fs) | NTree::Or(fs) => {
            for g in fs {
                collect_lowers(g, out);
            }
        }
        NTree::Atom(NAtom::Le { sign, rest }) if *sign < 0 => {
            // -x' + rest <= 0, i.e. x' >= rest
            if !out.contains(rest) {
                out.push(rest.clone());
            }
        }
        _ => {}
    }
}

fn collect_moduli(t: &NTree, acc: &mut BigInt) {
    match t {
        NTree::And(fs) | NTree::Or(fs) => {
            for g in fs {
                collect_moduli(g, acc);
            }
        }
        NTree::Atom(NAtom::Cong { n, .. }) => {
            *acc = acc.lcm(n);
        }
        _ => {}
    }
}

/// Cooper elimination of one existential quantifier over a
/// quantifier-free matrix.
pub fn eliminate_exists(var: &str, matrix: &Formula) -> Formula {
    let matrix = nnf(matrix, true);
    if !matrix.free_vars().contains(var) {
        return matrix;
    }
    let mut l = BigInt::one();
    collect_coeff_lcm(&matrix, var, &mut l);
    let mut tree = normalize_tree(&matrix, var, &l);
    // x' = l x ranges over multiples of l
    if l > BigInt::one() {
        tree = NTree::And(vec![
            tree,
            NTree::Atom(NAtom::Cong {
                rest: LinTerm::zero(),
                n: l.clone(),
            }),
        ]);
    }
    let mut modulus = l.clone();
    collect_moduli(&tree, &mut modulus);
    let mut lowers = Vec::new();
    collect_lowers(&tree, &mut lowers);

    let d: u64 = (&modulus).try_into().expect("congruence lcm too large");
    let mut branches = Vec::new();
    // lower bounds are non-strict (x' >= b), so x' = b + j with j in 0..d
    for j in 0..d {
        branches.push(tree_minus_infinity(&tree, &BigInt::from(j)));
        for b in &lowers {
            branches.push(tree_subst(&tree, &b.add_const(j as i64)));
        }
    }
    Formula::or(branches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::Valuation;

    fn check_equiv(f: &Formula, radius: i64) {
        let qf = eliminate_quantifiers(f);
        assert!(qf.is_quantifier_free());
        let vars: Vec<String> = f.free_vars().into_iter().collect();
        let mut point = Valuation::new();
        check_rec(f, &qf, &vars, 0, &mut point, radius);
    }

    fn check_rec(
        f: &Formula,
        qf: &Formula,
        vars: &[String],
        i: usize,
        point: &mut Valuation,
        radius: i64,
    ) {
        if i == vars.len() {
            assert_eq!(
                f.eval_searching(point, 60),
                qf.eval(point),
                "disagreement at {point:?}"
            );
            return;
        }
        for k in -radius..=radius {
            point.insert(vars[i].clone(), BigInt::from(k));
            check_rec(f, qf, vars, i + 1, point, radius);
        }
        point.remove(&vars[i]);
    }

    #[test]
    fn even_numbers() {
        // exists y. x = 2y  <=>  x ≡ 0 mod 2
        let f = Formula::Exists(
            "y".into(),
            Box::new(Formula::eq(
                LinTerm::var("x").sub(&LinTerm::var("y").scale(&BigInt::from(2))),
            )),
        );
        let qf = eliminate_quantifiers(&f);
        for k in -20..=20 {
            let mut p = Valuation::new();
            p.insert("x".into(), BigInt::from(k));
            assert_eq!(qf.eval(&p), k % 2 == 0, "x = {k}");
        }
    }

    #[test]
    fn intersection_forces_zero() {
        // exists y. (x = 2y and x = 3y)  <=>  x = 0 (brute force oracle)
        let f = Formula::Exists(
            "y".into(),
            Box::new(Formula::and(vec![
                Formula::eq(LinTerm::var("x").sub(&LinTerm::var("y").scale(&BigInt::from(2)))),
                Formula::eq(LinTerm::var("x").sub(&LinTerm::var("y").scale(&BigInt::from(3)))),
            ])),
        );
        let qf = eliminate_quantifiers(&f);
        for k in -20..=20 {
            let mut p = Valuation::new();
            p.insert("x".into(), BigInt::from(k));
            assert_eq!(qf.eval(&p), k == 0, "x = {k}");
        }
    }

    #[test]
    fn quantifier_free_passthrough() {
        let f = Formula::le(LinTerm::var("x").neg());
        assert_eq!(eliminate_quantifiers(&f), f);
    }

    #[test]
    fn forall_and_mixed() {
        // forall y. (y >= x -> y >= 0)  <=>  x >= 0
        let f = Formula::Forall(
            "y".into(),
            Box::new(Formula::or(vec![
                Formula::not(Formula::le(LinTerm::var("x").sub(&LinTerm::var("y")))),
                Formula::le(LinTerm::var("y").neg()),
            ])),
        );
        check_equiv(&f, 15);
    }

    #[test]
    fn congruence_with_bounds() {
        // exists y. (x = 3y and y >= 1)
        let f = Formula::Exists(
            "y".into(),
            Box::new(Formula::and(vec![
                Formula::eq(LinTerm::var("x").sub(&LinTerm::var("y").scale(&BigInt::from(3)))),
                Formula::le(LinTerm::constant(1).sub(&LinTerm::var("y"))),
            ])),
        );
        check_equiv(&f, 15);
    }

    #[test]
    fn two_parameter_equivalence() {
        // exists z. (x <= 2z and 2z <= y)
        let f = Formula::Exists(
            "z".into(),
            Box::new(Formula::and(vec![
                Formula::le(LinTerm::var("x").sub(&LinTerm::var("z").scale(&BigInt::from(2)))),
                Formula::le(LinTerm::var("z").scale(&BigInt::from(2)).sub(&LinTerm::var("y"))),
            ])),
        );
        check_equiv(&f, 10);
    }
}
