//! Randomized properties backing the symbolic layers: ring laws against
//! the specialization homomorphism, quantifier elimination against brute
//! force, and fiber progressions against direct enumeration.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use motivic::presburger::{
    eliminate_quantifiers, progression_decomposition, Formula, LinTerm,
    PresburgerSet, Valuation,
};
use motivic::ring::RingAElem;

fn arb_ring_elem() -> impl Strategy<Value = RingAElem> {
    (
        -3i64..=3,
        proptest::collection::vec(-5i64..=5, 1..=4),
        proptest::collection::vec((1u32..=3, 1u32..=2), 0..=2),
    )
        .prop_map(|(shift, coeffs, dens)| {
            let mut acc = RingAElem::zero();
            for (d, c) in coeffs.into_iter().enumerate() {
                acc = acc.add(&RingAElem::int(c).mul(&RingAElem::l_pow(d as i64)));
            }
            acc = acc.mul_l_pow(shift);
            for (i, m) in dens {
                for _ in 0..m {
                    acc = acc.mul(&RingAElem::inv_one_minus_l_neg(i));
                }
            }
            acc
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(a in arb_ring_elem(), b in arb_ring_elem(), c in arb_ring_elem()) {
        prop_assert!(a.add(&b).is_equal(&b.add(&a)));
        prop_assert!(a.mul(&b).is_equal(&b.mul(&a)));
        prop_assert!(a.add(&b).add(&c).is_equal(&a.add(&b.add(&c))));
        prop_assert!(a.mul(&b).mul(&c).is_equal(&a.mul(&b.mul(&c))));
        prop_assert!(a.mul(&b.add(&c)).is_equal(&a.mul(&b).add(&a.mul(&c))));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn specialization_is_a_homomorphism(a in arb_ring_elem(), b in arb_ring_elem()) {
        let q = BigRational::new(BigInt::from(5), BigInt::from(2));
        let (na, nb) = (a.nu_q(&q).unwrap(), b.nu_q(&q).unwrap());
        prop_assert_eq!(a.add(&b).nu_q(&q).unwrap(), &na + &nb);
        prop_assert_eq!(a.mul(&b).nu_q(&q).unwrap(), &na * &nb);
    }

    // exists x: d*y + e <= x <= d*y + e + w and x = r mod m; the witness
    // range is explicit, so brute force is exact
    #[test]
    fn quantifier_elimination_matches_brute_force(
        d in -3i64..=3,
        e in -5i64..=5,
        w in 0i64..=7,
        m in 2u64..=5,
        r in 0i64..=4,
    ) {
        let lower = LinTerm::var("y").scale(&BigInt::from(d)).add_const(e);
        let body = Formula::and(vec![
            Formula::le(lower.clone().sub(&LinTerm::var("x"))),
            Formula::le(LinTerm::var("x").sub(&lower.clone().add_const(w))),
            Formula::cong(LinTerm::var("x").add_const(-r), BigInt::from(m)),
        ]);
        let closed = Formula::Exists("x".into(), Box::new(body));
        let eliminated = eliminate_quantifiers(&closed);
        for y in -6i64..=6 {
            let mut pt = Valuation::new();
            pt.insert("y".into(), BigInt::from(y));
            let lo = d * y + e;
            let brute = (lo..=lo + w).any(|x| (x - r).rem_euclid(m as i64) == 0);
            prop_assert_eq!(eliminated.eval(&pt), brute, "y = {}", y);
        }
    }

    // fibers of a strip with a congruence decompose into progressions
    // that enumerate exactly the right integers
    #[test]
    fn progressions_enumerate_the_fiber(
        d in -2i64..=2,
        e in -4i64..=4,
        w in 0i64..=9,
        m in 2u64..=4,
        r in 0i64..=3,
    ) {
        let lower = LinTerm::var("y").scale(&BigInt::from(d)).add_const(e);
        let f = Formula::and(vec![
            Formula::le(lower.clone().sub(&LinTerm::var("n"))),
            Formula::le(LinTerm::var("n").sub(&lower.clone().add_const(w))),
            Formula::cong(LinTerm::var("n").add_const(-r), BigInt::from(m)),
        ]);
        let set = PresburgerSet::from_formula(&f, vec!["y".into(), "n".into()]).unwrap();
        let progs = progression_decomposition(&set, "n").unwrap();
        for y in -4i64..=4 {
            let mut pt = Valuation::new();
            pt.insert("y".into(), BigInt::from(y));
            let lo = d * y + e;
            let mut expected: Vec<BigInt> = (lo..=lo + w)
                .filter(|x| (x - r).rem_euclid(m as i64) == 0)
                .map(BigInt::from)
                .collect();
            expected.sort();
            let mut got: Vec<BigInt> = progs
                .iter()
                .flat_map(|p| p.members_at(&pt, (lo - 1, lo + w + 1)))
                .collect();
            got.sort();
            got.dedup();
            prop_assert_eq!(got, expected, "y = {}", y);
        }
    }

    // point membership after parsing agrees with direct evaluation
    #[test]
    fn piece_membership_matches_formula(
        a in -3i64..=3,
        b in -3i64..=3,
        k in -5i64..=5,
    ) {
        let t = LinTerm::var("x")
            .scale(&BigInt::from(a))
            .add(&LinTerm::var("y").scale(&BigInt::from(b)))
            .add_const(k);
        let f = Formula::le(t);
        let set = PresburgerSet::from_formula(&f, vec!["x".into(), "y".into()]).unwrap();
        for x in -3i64..=3 {
            for y in -3i64..=3 {
                let mut pt: BTreeMap<String, BigInt> = BTreeMap::new();
                pt.insert("x".into(), BigInt::from(x));
                pt.insert("y".into(), BigInt::from(y));
                prop_assert_eq!(set.contains(&pt), a * x + b * y + k <= 0);
            }
        }
    }
}
