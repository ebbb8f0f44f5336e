//! Exact arithmetic in the coefficient ring generated by the symbol `L`,
//! its inverse, and the inverses `1/(1 - L^-i)` for `i > 0`, together with
//! the specialization homomorphisms sending `L` to a rational `q > 1`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Dense integer polynomial in one variable (the symbol `L`).
/// Invariant: no trailing zero coefficients; the zero polynomial is empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly(Vec<BigInt>);

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly(Vec::new())
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let c = c.into();
        if c.is_zero() {
            Self::zero()
        } else {
            IntPoly(vec![c])
        }
    }

    /// The monomial `L^d`.
    pub fn monomial(d: usize) -> Self {
        let mut v = vec![BigInt::zero(); d + 1];
        v[d] = BigInt::one();
        IntPoly(v)
    }

    pub fn from_coeffs(mut v: Vec<BigInt>) -> Self {
        while v.last().map_or(false, |c| c.is_zero()) {
            v.pop();
        }
        IntPoly(v)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    /// Number of leading zero coefficients, i.e. the largest `k` with `L^k | self`.
    pub fn low_order(&self) -> usize {
        self.0.iter().take_while(|c| c.is_zero()).count()
    }

    /// Divide by `L^k`; requires `L^k | self`.
    pub fn shr(&self, k: usize) -> Self {
        debug_assert!(self.is_zero() || self.low_order() >= k);
        if self.is_zero() {
            Self::zero()
        } else {
            IntPoly::from_coeffs(self.0[k..].to_vec())
        }
    }

    /// Multiply by `L^k`.
    pub fn shl(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![BigInt::zero(); k];
        v.extend_from_slice(&self.0);
        IntPoly(v)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let mut v = vec![BigInt::zero(); n];
        for (i, c) in self.0.iter().enumerate() {
            v[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            v[i] += c;
        }
        IntPoly::from_coeffs(v)
    }

    pub fn neg(&self) -> Self {
        IntPoly(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut v = vec![BigInt::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        IntPoly::from_coeffs(v)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        IntPoly(self.0.iter().map(|a| a * c).collect())
    }

    /// Exact division; returns `None` when `div` does not divide `self`
    /// over the integers.
    pub fn div_exact(&self, div: &Self) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        if div.is_zero() || self.0.len() < div.0.len() {
            return None;
        }
        let mut rem = self.0.clone();
        let dlead = div.0.last().unwrap();
        let qlen = rem.len() - div.0.len() + 1;
        let mut quot = vec![BigInt::zero(); qlen];
        for qi in (0..qlen).rev() {
            let top = rem[qi + div.0.len() - 1].clone();
            if top.is_zero() {
                continue;
            }
            if (&top % dlead) != BigInt::zero() {
                return None;
            }
            let c = &top / dlead;
            for (j, d) in div.0.iter().enumerate() {
                rem[qi + j] -= &c * d;
            }
            quot[qi] = c;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(IntPoly::from_coeffs(quot))
    }

    pub fn eval_rational(&self, q: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.0.iter().rev() {
            acc = acc * q + BigRational::from_integer(c.clone());
        }
        acc
    }
}

/// `L^i - 1` as an integer polynomial.
fn cyclo_factor(i: u32) -> IntPoly {
    let mut v = vec![BigInt::zero(); i as usize + 1];
    v[0] = -BigInt::one();
    v[i as usize] = BigInt::one();
    IntPoly(v)
}

/// Element of the coefficient ring, stored as
/// `L^shift * num(L) / prod_i (L^i - 1)^{m_i}`.
///
/// Invariants: denominator indices and multiplicities are positive, the
/// numerator is not divisible by any denominator factor, and `L` does not
/// divide the numerator (powers of `L` live in `shift`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingAElem {
    shift: i64,
    num: IntPoly,
    den: BTreeMap<u32, u32>,
}

impl RingAElem {
    pub fn zero() -> Self {
        RingAElem {
            shift: 0,
            num: IntPoly::zero(),
            den: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        RingAElem {
            shift: 0,
            num: IntPoly::constant(1),
            den: BTreeMap::new(),
        }
    }

    pub fn int(c: impl Into<BigInt>) -> Self {
        RingAElem {
            shift: 0,
            num: IntPoly::constant(c),
            den: BTreeMap::new(),
        }
        .normalized()
    }

    /// `L^k` for any integer `k`.
    pub fn l_pow(k: i64) -> Self {
        RingAElem {
            shift: k,
            num: IntPoly::constant(1),
            den: BTreeMap::new(),
        }
    }

    /// `1/(1 - L^-i) = L^i / (L^i - 1)`, for `i > 0`.
    pub fn inv_one_minus_l_neg(i: u32) -> Self {
        assert!(i > 0, "denominator index must be positive");
        let mut den = BTreeMap::new();
        den.insert(i, 1);
        RingAElem {
            shift: i as i64,
            num: IntPoly::constant(1),
            den,
        }
    }

    /// `1 - L^-i` as an element, the inverse pair of [`Self::inv_one_minus_l_neg`].
    pub fn one_minus_l_neg(i: u32) -> Self {
        Self::one().add(&Self::l_pow(-(i as i64)).neg())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn normalized(mut self) -> Self {
        if self.num.is_zero() {
            return Self::zero();
        }
        let k = self.num.low_order();
        if k > 0 {
            self.num = self.num.shr(k);
            self.shift += k as i64;
        }
        let indices: Vec<u32> = self.den.keys().copied().collect();
        for i in indices {
            let f = cyclo_factor(i);
            loop {
                let m = match self.den.get(&i) {
                    Some(&m) if m > 0 => m,
                    _ => break,
                };
                match self.num.div_exact(&f) {
                    Some(q) => {
                        self.num = q;
                        if m == 1 {
                            self.den.remove(&i);
                        } else {
                            self.den.insert(i, m - 1);
                        }
                    }
                    None => break,
                }
            }
        }
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let mut den = self.den.clone();
        for (&i, &m) in &other.den {
            let e = den.entry(i).or_insert(0);
            *e = (*e).max(m);
        }
        let mut na = self.num.clone();
        let mut nb = other.num.clone();
        for (&i, &m) in &den {
            let f = cyclo_factor(i);
            let ma = self.den.get(&i).copied().unwrap_or(0);
            let mb = other.den.get(&i).copied().unwrap_or(0);
            for _ in ma..m {
                na = na.mul(&f);
            }
            for _ in mb..m {
                nb = nb.mul(&f);
            }
        }
        let s = self.shift.min(other.shift);
        na = na.shl((self.shift - s) as usize);
        nb = nb.shl((other.shift - s) as usize);
        RingAElem {
            shift: s,
            num: na.add(&nb),
            den,
        }
        .normalized()
    }

    pub fn neg(&self) -> Self {
        RingAElem {
            shift: self.shift,
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut den = self.den.clone();
        for (&i, &m) in &other.den {
            *den.entry(i).or_insert(0) += m;
        }
        RingAElem {
            shift: self.shift + other.shift,
            num: self.num.mul(&other.num),
            den,
        }
        .normalized()
    }

    pub fn scale_int(&self, c: &BigInt) -> Self {
        RingAElem {
            shift: self.shift,
            num: self.num.scale(c),
            den: self.den.clone(),
        }
        .normalized()
    }

    /// Multiply by `L^k`.
    pub fn mul_l_pow(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        RingAElem {
            shift: self.shift + k,
            num: self.num.clone(),
            den: self.den.clone(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Equality of represented values, decided by cross-multiplication.
    /// Complete because denominators are products of known `(L^i - 1)` factors.
    pub fn is_equal(&self, other: &Self) -> bool {
        let mut lhs = self.num.clone();
        for (&i, &m) in &other.den {
            let f = cyclo_factor(i);
            for _ in 0..m {
                lhs = lhs.mul(&f);
            }
        }
        let mut rhs = other.num.clone();
        for (&i, &m) in &self.den {
            let f = cyclo_factor(i);
            for _ in 0..m {
                rhs = rhs.mul(&f);
            }
        }
        let s = self.shift.min(other.shift);
        lhs = lhs.shl((self.shift - s) as usize);
        rhs = rhs.shl((other.shift - s) as usize);
        lhs == rhs
    }

    /// The specialization sending `L` to `q`; a ring homomorphism, defined
    /// for `q > 1` so no denominator factor vanishes.
    pub fn nu_q(&self, q: &BigRational) -> Result<BigRational> {
        if *q <= BigRational::one() {
            return Err(Error::QOutOfRange(q.to_string()));
        }
        let mut val = self.num.eval_rational(q) * rat_pow(q, self.shift);
        for (&i, &m) in &self.den {
            let factor = rat_pow(q, i as i64) - BigRational::one();
            for _ in 0..m {
                val /= factor.clone();
            }
        }
        Ok(val)
    }
}

/// `q^k` for an arbitrary integer exponent.
pub fn rat_pow(q: &BigRational, k: i64) -> BigRational {
    let mut acc = BigRational::one();
    let mut base = if k >= 0 { q.clone() } else { q.recip() };
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base.clone();
        }
        base = base.clone() * base;
        e >>= 1;
    }
    acc
}

impl RingAElem {
    /// Rendering with denominators written as `1-L^-i`, the form the
    /// scenario language uses. Absorbs `L^i` from each denominator factor
    /// into the power-of-`L` prefix so `L^i/(L^i-1)` prints `1/(1-L^-1)`.
    pub fn render_surface(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut eff_shift = self.shift;
        for (&i, &m) in &self.den {
            eff_shift -= i as i64 * m as i64;
        }
        let mut num_str = String::new();
        let mut nterms = 0usize;
        for (d, c) in self.num.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let abs = c.abs();
            let body = match d {
                0 => format!("{abs}"),
                1 if abs.is_one() => "L".to_string(),
                1 => format!("{abs}*L"),
                _ if abs.is_one() => format!("L^{d}"),
                _ => format!("{abs}*L^{d}"),
            };
            if nterms == 0 {
                if c.is_negative() {
                    num_str.push('-');
                }
                num_str.push_str(&body);
            } else {
                num_str.push_str(if c.is_negative() { " - " } else { " + " });
                num_str.push_str(&body);
            }
            nterms += 1;
        }
        let mut parts = Vec::new();
        if nterms > 1 && (eff_shift != 0 || !self.den.is_empty()) {
            parts.push(format!("({num_str})"));
        } else if num_str != "1" || eff_shift == 0 {
            parts.push(num_str);
        }
        if eff_shift != 0 {
            parts.push(format!("L^{eff_shift}"));
        }
        let mut out = parts.join("*");
        for (&i, &m) in &self.den {
            if m == 1 {
                out.push_str(&format!("/(1-L^-{i})"));
            } else {
                out.push_str(&format!("/(1-L^-{i})^{m}"));
            }
        }
        out
    }
}

impl fmt::Display for RingAElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        let mut num_str = String::new();
        let mut first = true;
        for (d, c) in self.num.coeffs().iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let abs = c.abs();
            let body = match d {
                0 => format!("{abs}"),
                _ => {
                    let var = if d == 1 {
                        "L".to_string()
                    } else {
                        format!("L^{d}")
                    };
                    if abs.is_one() {
                        var
                    } else {
                        format!("{abs}*{var}")
                    }
                }
            };
            if first {
                if c.is_negative() {
                    num_str.push('-');
                }
                num_str.push_str(&body);
                first = false;
            } else {
                num_str.push_str(&format!(" {sign} {body}"));
            }
        }
        let multi_term = self.num.coeffs().iter().filter(|c| !c.is_zero()).count() > 1;
        if multi_term && (self.shift != 0 || !self.den.is_empty()) {
            parts.push(format!("({num_str})"));
        } else if num_str != "1" || (self.shift == 0 && self.den.is_empty()) {
            parts.push(num_str);
        }
        if self.shift != 0 {
            parts.push(format!("L^{}", self.shift));
        }
        let mut out = parts.join("*");
        for (&i, &m) in &self.den {
            let fac = if m == 1 {
                format!("(L^{i}-1)")
            } else {
                format!("(L^{i}-1)^{m}")
            };
            out.push_str(&format!("/{fac}"));
        }
        write!(f, "{out}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn inverse_pair_multiplies_to_one() {
        let a = RingAElem::inv_one_minus_l_neg(1);
        let b = RingAElem::one_minus_l_neg(1);
        assert!(a.mul(&b).is_equal(&RingAElem::one()));
    }

    #[test]
    fn add_l_l_is_2l() {
        let l = RingAElem::l_pow(1);
        let two_l = RingAElem::int(2).mul(&RingAElem::l_pow(1));
        assert!(l.add(&l).is_equal(&two_l));
    }

    #[test]
    fn shift_bookkeeping() {
        // L^-1/(1-L^-1) * L = 1/(1-L^-1)
        let a = RingAElem::l_pow(-1).mul(&RingAElem::inv_one_minus_l_neg(1));
        let res = a.mul(&RingAElem::l_pow(1));
        assert!(res.is_equal(&RingAElem::inv_one_minus_l_neg(1)));
    }

    #[test]
    fn equality_across_representations() {
        // L/(L-1) = 1/(1-L^-1)
        let mut den = BTreeMap::new();
        den.insert(1, 1);
        let a = RingAElem {
            shift: 1,
            num: IntPoly::constant(1),
            den,
        };
        assert!(a.is_equal(&RingAElem::inv_one_minus_l_neg(1)));
        assert!(!RingAElem::inv_one_minus_l_neg(1).is_equal(&RingAElem::inv_one_minus_l_neg(2)));
    }

    #[test]
    fn nu_q_examples() {
        let two = q(2, 1);
        let three = q(3, 1);
        assert_eq!(RingAElem::l_pow(-3).nu_q(&two).unwrap(), q(1, 8));
        assert_eq!(
            RingAElem::inv_one_minus_l_neg(1).nu_q(&three).unwrap(),
            q(3, 2)
        );
        assert!(RingAElem::one().nu_q(&q(1, 1)).is_err());
    }

    #[test]
    fn closed_form_matches_series_oracle() {
        // L^-1 * (1/(1-L^-1))^2 is the closed form of sum_{k>=1} k L^-k;
        // compare at q = 2 against the truncated series, 60 terms.
        let geom = RingAElem::inv_one_minus_l_neg(1);
        let closed = RingAElem::l_pow(-1).mul(&geom.mul(&geom));
        let two = q(2, 1);
        let exact = closed.nu_q(&two).unwrap();
        let mut partial = BigRational::zero();
        for k in 1..=60i64 {
            partial += BigRational::from_integer(BigInt::from(k)) * rat_pow(&two, -k);
        }
        let delta = (exact - partial).abs();
        assert!(delta < q(1, 1_000_000_000_000));
    }

    #[test]
    fn normalization_is_idempotent() {
        let a = RingAElem::inv_one_minus_l_neg(2)
            .mul(&RingAElem::one_minus_l_neg(1))
            .add(&RingAElem::l_pow(-4));
        let again = a.clone().normalized();
        assert_eq!(a, again);
    }

    #[test]
    fn reduction_cancels_whole_factors() {
        // (L-1)/(L-1) reduces to 1
        let mut den = BTreeMap::new();
        den.insert(1, 1);
        let e = RingAElem {
            shift: 0,
            num: IntPoly::from_coeffs(vec![BigInt::from(-1), BigInt::from(1)]),
            den,
        }
        .normalized();
        assert_eq!(e, RingAElem::one());
    }
}
