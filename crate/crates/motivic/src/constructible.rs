//! Tensor of residue-field classes with value-group functions: finite
//! sums of `class (x) presterm` over a base with integer coordinates and
//! residue parameter symbols.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::presburger::{AffExpr, DefinableMap, Piece, PresburgerSet, Valuation};
use crate::presfn::{PresFunction, PresTerm};
use crate::residue::{ExpClass, MPoly};
use crate::ring::{rat_pow, RingAElem};

/// One summand: a residue-field class tensored with a value-group term.
/// The class may mention residue parameters of the base; the term lives
/// on the integer coordinates.
#[derive(Clone, Debug)]
pub struct CTerm {
    pub class: ExpClass,
    pub pres: PresTerm,
}

/// Constructible function with character twists over a base whose
/// coordinates split into integer variables and residue parameters.
#[derive(Clone, Debug)]
pub struct CExpFn {
    pub zvars: Vec<String>,
    pub terms: Vec<CTerm>,
}

impl CExpFn {
    pub fn zero(zvars: Vec<String>) -> Self {
        CExpFn {
            zvars,
            terms: Vec::new(),
        }
    }

    pub fn constant(zvars: Vec<String>, coeff: RingAElem) -> Self {
        CExpFn {
            zvars,
            terms: vec![CTerm {
                class: ExpClass::one(),
                pres: PresTerm {
                    coeff,
                    alphas: Vec::new(),
                    beta: AffExpr::zero(),
                    support: Piece::universe(),
                },
            }],
        }
    }

    pub fn from_pres(f: &PresFunction) -> Self {
        CExpFn {
            zvars: f.vars.clone(),
            terms: f
                .terms
                .iter()
                .map(|t| CTerm {
                    class: ExpClass::one(),
                    pres: t.clone(),
                })
                .collect(),
        }
    }

    pub fn from_class(zvars: Vec<String>, class: ExpClass) -> Self {
        CExpFn {
            zvars,
            terms: vec![CTerm {
                class,
                pres: PresTerm::indicator(Piece::universe()),
            }],
        }
    }

    pub fn is_zero_normal_form(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.class.is_zero() || t.pres.coeff.is_zero() || !t.pres.support.is_satisfiable())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.zvars != other.zvars {
            return Err(Error::AmbientMismatch(format!(
                "{:?} vs {:?}",
                self.zvars, other.zvars
            )));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(CExpFn {
            zvars: self.zvars.clone(),
            terms,
        })
    }

    pub fn neg(&self) -> Self {
        CExpFn {
            zvars: self.zvars.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| CTerm {
                    class: t.class.neg(),
                    pres: t.pres.clone(),
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.zvars != other.zvars {
            return Err(Error::AmbientMismatch(format!(
                "{:?} vs {:?}",
                self.zvars, other.zvars
            )));
        }
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let support = a.pres.support.conj(&b.pres.support);
                if !support.is_satisfiable() {
                    continue;
                }
                let class = a.class.mul(&b.class);
                if class.is_zero() {
                    continue;
                }
                let mut alphas = a.pres.alphas.clone();
                alphas.extend(b.pres.alphas.iter().cloned());
                terms.push(CTerm {
                    class,
                    pres: PresTerm {
                        coeff: a.pres.coeff.mul(&b.pres.coeff),
                        alphas,
                        beta: a.pres.beta.add(&b.pres.beta),
                        support,
                    },
                });
            }
        }
        Ok(CExpFn {
            zvars: self.zvars.clone(),
            terms,
        })
    }

    pub fn scale(&self, c: &RingAElem) -> Self {
        CExpFn {
            zvars: self.zvars.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| CTerm {
                    class: t.class.clone(),
                    pres: PresTerm {
                        coeff: t.pres.coeff.mul(c),
                        ..t.pres.clone()
                    },
                })
                .collect(),
        }
    }

    /// Drop terms whose class or support is trivially empty.
    pub fn normalized(&self) -> Self {
        CExpFn {
            zvars: self.zvars.clone(),
            terms: self
                .terms
                .iter()
                .filter(|t| {
                    !t.class.is_zero()
                        && !t.pres.coeff.is_zero()
                        && t.pres.support.is_satisfiable()
                })
                .cloned()
                .collect(),
        }
    }

    /// Residue parameter symbols appearing in any class.
    pub fn res_params(&self) -> BTreeSet<String> {
        self.terms
            .iter()
            .flat_map(|t| t.class.param_symbols())
            .collect()
    }

    /// Sum over one integer variable in closed form.
    pub fn sum_zvar(&self, var: &str) -> Result<CExpFn> {
        let rest: Vec<String> = self.zvars.iter().filter(|v| *v != var).cloned().collect();
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.class.is_zero() {
                continue;
            }
            let f = PresFunction::from_term(self.zvars.clone(), t.pres.clone());
            let summed = f.sum_var(var)?;
            for s in summed.terms {
                terms.push(CTerm {
                    class: t.class.clone(),
                    pres: s,
                });
            }
        }
        Ok(CExpFn {
            zvars: rest,
            terms,
        })
    }

    /// Push forward along the projection that forgets a residue
    /// parameter: the parameter becomes a bound variety variable.
    pub fn sum_res_param(&self, name: &str) -> CExpFn {
        CExpFn {
            zvars: self.zvars.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| CTerm {
                    class: t.class.promote_param(name),
                    pres: t.pres.clone(),
                })
                .filter(|t| !t.class.is_zero())
                .collect(),
        }
    }

    /// Pull back along a definable map on the integer coordinates.
    pub fn pullback_z(&self, map: &DefinableMap) -> Result<CExpFn> {
        let mut terms = Vec::new();
        for t in &self.terms {
            let f = PresFunction::from_term(self.zvars.clone(), t.pres.clone());
            let g = f.pullback(map)?;
            for s in g.terms {
                terms.push(CTerm {
                    class: t.class.clone(),
                    pres: s,
                });
            }
        }
        Ok(CExpFn {
            zvars: map.dom_vars.clone(),
            terms,
        })
    }

    /// Pull back along a polynomial substitution of residue parameters.
    pub fn pullback_res(&self, map: &BTreeMap<String, MPoly>) -> CExpFn {
        CExpFn {
            zvars: self.zvars.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| CTerm {
                    class: t.class.subst_params(map),
                    pres: t.pres.clone(),
                })
                .filter(|t| !t.class.is_zero())
                .collect(),
        }
    }

    /// Restrict to a subset of the integer base.
    pub fn restrict(&self, set: &PresburgerSet) -> Result<CExpFn> {
        if set.vars != self.zvars {
            return Err(Error::AmbientMismatch(format!(
                "{:?} vs {:?}",
                set.vars, self.zvars
            )));
        }
        let mut terms = Vec::new();
        for t in &self.terms {
            for piece in &set.pieces {
                let support = t.pres.support.conj(piece);
                if !support.is_satisfiable() {
                    continue;
                }
                terms.push(CTerm {
                    class: t.class.clone(),
                    pres: PresTerm {
                        support,
                        ..t.pres.clone()
                    },
                });
            }
        }
        Ok(CExpFn {
            zvars: self.zvars.clone(),
            terms,
        })
    }

    /// Numerical specialization: count residue points over F_p and read
    /// the value-group part at L = p.
    pub fn eval_p(
        &self,
        p: u64,
        zpoint: &Valuation,
        res_params: &BTreeMap<String, u64>,
    ) -> Result<Complex<f64>> {
        let q = BigRational::from(BigInt::from(p));
        let mut acc = Complex::new(0.0, 0.0);
        for t in &self.terms {
            let weight = t.pres.nu_q(zpoint, &q)?;
            if weight.is_zero() {
                continue;
            }
            let cls = t.class.count_points(p, res_params)?;
            let w = weight
                .to_f64()
                .ok_or_else(|| Error::ValidationError("weight overflow in specialization".into()))?;
            acc += cls * w;
        }
        Ok(acc)
    }
}

/// Class graded by declared ambient dimension. Dimensions are part of the
/// input data, never inferred.
#[derive(Clone, Debug)]
pub struct GradedClass {
    pub parts: BTreeMap<usize, CExpFn>,
}

impl GradedClass {
    pub fn single(dim: usize, f: CExpFn) -> Self {
        let mut parts = BTreeMap::new();
        parts.insert(dim, f);
        GradedClass { parts }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut parts = self.parts.clone();
        for (d, f) in &other.parts {
            match parts.get_mut(d) {
                Some(g) => *g = g.add(f)?,
                None => {
                    parts.insert(*d, f.clone());
                }
            }
        }
        Ok(GradedClass { parts })
    }

    pub fn part(&self, dim: usize) -> Option<&CExpFn> {
        self.parts.get(&dim)
    }
}

/// Value of a specialization used by reports: exact where possible,
/// numerical otherwise.
pub fn nu_q_of_ring(c: &RingAElem, q: &BigRational) -> Result<BigRational> {
    c.nu_q(q)
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn pow_q(q: &BigRational, k: i64) -> BigRational {
    rat_pow(q, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::LinTerm;
    use crate::residue::{Generator, ResVariety};

    fn half_line(v: &str) -> Piece {
        Piece::universe().add_ineq(LinTerm::var(v).neg())
    }

    #[test]
    fn mixed_sum_factorizes() {
        // class [x^2 = a] times L^{-n} over n >= 0, summed over n and a
        let class = ExpClass::from_generator(Generator {
            variety: ResVariety {
                vars: vec!["x".into()],
                eqs: vec![MPoly::var("x").pow(2).sub(&MPoly::var("a"))],
                neqs: vec![],
            },
            xi: MPoly::zero(),
        });
        let f = CExpFn {
            zvars: vec!["n".into()],
            terms: vec![CTerm {
                class,
                pres: PresTerm {
                    coeff: RingAElem::one(),
                    alphas: vec![],
                    beta: AffExpr::var("n").neg(),
                    support: half_line("n"),
                },
            }],
        };
        let g = f.sum_zvar("n").unwrap().sum_res_param("a");
        // at p: (number of (x, a) with x^2 = a) * sum q^{-n} = p * q/(q-1)
        for p in [3u64, 5] {
            let v = g
                .eval_p(p, &Valuation::new(), &BTreeMap::new())
                .unwrap();
            let expected = p as f64 * (p as f64) / (p as f64 - 1.0);
            assert!((v.re - expected).abs() < 1e-9, "p = {p}");
            assert!(v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn character_twist_kills_term_in_products() {
        // multiplying by a full-line character class annihilates
        let twist = CExpFn::from_class(
            vec!["n".into()],
            ExpClass::from_generator(Generator {
                variety: ResVariety::affine_space(vec!["u".into()]),
                xi: MPoly::var("u"),
            }),
        );
        assert!(twist.is_zero_normal_form());
        let one = CExpFn::constant(vec!["n".into()], RingAElem::one());
        let prod = one.mul(&twist).unwrap();
        assert!(prod.is_zero_normal_form());
    }

    #[test]
    fn restrict_then_sum_matches_direct_enumeration() {
        let f = CExpFn::constant(vec!["n".into()], RingAElem::one());
        let set = PresburgerSet::from_formula(
            &crate::presburger::Formula::and(vec![
                crate::presburger::Formula::le(LinTerm::var("n").neg()),
                crate::presburger::Formula::le(LinTerm::var("n").add_const(-3)),
            ]),
            vec!["n".into()],
        )
        .unwrap();
        // weight with L^{-n} to make the sum finite
        let w = CExpFn {
            zvars: vec!["n".into()],
            terms: vec![CTerm {
                class: ExpClass::one(),
                pres: PresTerm {
                    coeff: RingAElem::one(),
                    alphas: vec![],
                    beta: AffExpr::var("n").neg(),
                    support: Piece::universe(),
                },
            }],
        };
        let g = f.mul(&w).unwrap().restrict(&set).unwrap().sum_zvar("n").unwrap();
        let v = g.eval_p(2, &Valuation::new(), &BTreeMap::new()).unwrap();
        let expected = 1.0 + 0.5 + 0.25 + 0.125;
        assert!((v.re - expected).abs() < 1e-12);
    }

    #[test]
    fn pullback_res_square_substitution() {
        // class e(a) pulled back along a -> b^2 becomes e(b^2)
        let class = ExpClass::from_generator(Generator {
            variety: ResVariety::point(),
            xi: MPoly::var("a"),
        });
        let f = CExpFn::from_class(vec![], class);
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), MPoly::var("b").pow(2));
        let g = f.pullback_res(&map);
        let mut params = BTreeMap::new();
        params.insert("b".to_string(), 2u64);
        let v = g.eval_p(5, &Valuation::new(), &params).unwrap();
        // e(4) at p = 5
        let angle = 2.0 * std::f64::consts::PI * 4.0 / 5.0;
        assert!((v.re - angle.cos()).abs() < 1e-9);
        assert!((v.im - angle.sin()).abs() < 1e-9);
    }
}
