//! Valued-field cells, their validation, and the closed-form push-forwards
//! along valued-field coordinates: ball and graph volumes, change of
//! variables, nullity of exponentials on large balls, and the two-term
//! exponential push-forward recipe. A p-adic coset oracle cross-checks
//! every rule numerically.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::constructible::{CExpFn, CTerm, GradedClass};
use crate::error::{Error, Result};
use crate::presburger::{AffExpr, DefinableFn, PresburgerSet, Valuation};
use crate::presfn::PresTerm;
use crate::residue::{ExpClass, Generator, MPoly, ResVariety};
use crate::ring::RingAElem;

/// Term in the valued-field sort: coordinates, the uniformizer, integers
/// and ring operations. Enough for all centers and exponential arguments
/// used by the push-forward rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VTerm {
    Coord(String),
    /// uniformizer
    T,
    Int(BigInt),
    TPow(i64),
    Add(Vec<VTerm>),
    Mul(Vec<VTerm>),
    Neg(Box<VTerm>),
}

impl VTerm {
    pub fn int(k: impl Into<BigInt>) -> Self {
        VTerm::Int(k.into())
    }

    pub fn zero() -> Self {
        VTerm::Int(BigInt::zero())
    }

    pub fn coords(&self) -> Vec<String> {
        match self {
            VTerm::Coord(c) => vec![c.clone()],
            VTerm::T | VTerm::Int(_) | VTerm::TPow(_) => Vec::new(),
            VTerm::Add(ts) | VTerm::Mul(ts) => {
                let mut out = Vec::new();
                for t in ts {
                    for c in t.coords() {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
                out
            }
            VTerm::Neg(t) => t.coords(),
        }
    }

    /// Specialize t to p and evaluate over the rationals.
    pub fn eval(&self, point: &BTreeMap<String, BigRational>, p: u64) -> Result<BigRational> {
        Ok(match self {
            VTerm::Coord(c) => point
                .get(c)
                .cloned()
                .ok_or_else(|| Error::UninstantiatedParameters(vec![c.clone()]))?,
            VTerm::T => BigRational::from(BigInt::from(p)),
            VTerm::Int(k) => BigRational::from(k.clone()),
            VTerm::TPow(k) => padic::rat_p_pow(p, *k),
            VTerm::Add(ts) => {
                let mut acc = BigRational::zero();
                for t in ts {
                    acc += t.eval(point, p)?;
                }
                acc
            }
            VTerm::Mul(ts) => {
                let mut acc = BigRational::one();
                for t in ts {
                    acc *= t.eval(point, p)?;
                }
                acc
            }
            VTerm::Neg(t) => -t.eval(point, p)?,
        })
    }
}

/// Exact p-adic arithmetic on rationals whose denominators are powers of p.
pub mod padic {
    use super::*;

    pub fn rat_p_pow(p: u64, k: i64) -> BigRational {
        let pk = BigInt::from(p).pow(k.unsigned_abs() as u32);
        if k >= 0 {
            BigRational::from(pk)
        } else {
            BigRational::new(BigInt::one(), pk)
        }
    }

    /// p-adic valuation; `None` for zero.
    pub fn ord_p(x: &BigRational, p: u64) -> Option<i64> {
        if x.is_zero() {
            return None;
        }
        let pb = BigInt::from(p);
        let mut ord = 0i64;
        let mut num = x.numer().abs();
        while (&num % &pb).is_zero() {
            num /= &pb;
            ord += 1;
        }
        let mut den = x.denom().abs();
        while (&den % &pb).is_zero() {
            den /= &pb;
            ord -= 1;
        }
        Some(ord)
    }

    /// First digit of the unit part: `x / p^{ord(x)} mod p`.
    pub fn ac_p(x: &BigRational, p: u64) -> u64 {
        let ord = ord_p(x, p).expect("angular component of zero");
        let unit = x / rat_p_pow(p, ord);
        // unit = a/b with a, b prime to p; digit = a * b^{-1} mod p
        let pb = BigInt::from(p);
        let a = unit.numer().mod_floor_u(&pb);
        let b = unit.denom().mod_floor_u(&pb);
        let binv = mod_inv(b, p);
        (a * binv) % p
    }

    trait ModFloorU {
        fn mod_floor_u(&self, p: &BigInt) -> u64;
    }

    impl ModFloorU for BigInt {
        fn mod_floor_u(&self, p: &BigInt) -> u64 {
            use num_integer::Integer;
            self.mod_floor(p).to_u64().unwrap()
        }
    }

    fn mod_inv(a: u64, p: u64) -> u64 {
        // p is prime in every oracle call
        let mut result = 1u64;
        let mut base = a % p;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        result
    }

    /// p-adic fractional part: the finite tail of negative powers of p,
    /// as a rational in [0, 1).
    pub fn frac_p(x: &BigRational, p: u64) -> BigRational {
        use num_integer::Integer;
        let ord = match ord_p(x, p) {
            Some(o) if o < 0 => o,
            _ => return BigRational::zero(),
        };
        // x = a / p^{-ord} with a prime to p in the denominator sense
        let pk = BigInt::from(p).pow((-ord) as u32);
        let scaled = x * BigRational::from(pk.clone());
        debug_assert!(scaled.is_integer());
        let a = scaled.to_integer().mod_floor(&pk);
        BigRational::new(a, pk)
    }

    /// Additive character of level zero: trivial on the p-adic integers.
    pub fn psi_p(x: &BigRational, p: u64) -> Complex<f64> {
        let f = frac_p(x, p);
        let angle = 2.0 * std::f64::consts::PI * f.to_f64().unwrap();
        Complex::new(angle.cos(), angle.sin())
    }

    /// Representatives of the cosets `z + p^N Z_p` for `z` with digits in
    /// positions `from..N`. Each coset has measure `p^{-N}`.
    pub fn cosets(p: u64, from: i64, level: i64) -> Vec<BigRational> {
        assert!(level > from);
        let digits = (level - from) as u32;
        let count = (p as u128).pow(digits);
        assert!(count <= 20_000_000, "coset space too large");
        let mut out = Vec::with_capacity(count as usize);
        for idx in 0..count {
            let mut rem = idx;
            let mut z = BigRational::zero();
            for d in 0..digits {
                let a = (rem % p as u128) as u64;
                rem /= p as u128;
                if a != 0 {
                    z += BigRational::from(BigInt::from(a)) * rat_p_pow(p, from + d as i64);
                }
            }
            out.push(z);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Zero,
    One,
}

/// Declared presentation data. The Jacobian order of a presentation is
/// pinned to zero; anything else is rejected.
#[derive(Clone, Debug, Default)]
pub struct Presentation {
    pub extra_res: Vec<String>,
    pub extra_z: Vec<String>,
    pub jac_ord: i64,
}

/// Cell over a base: the family `z = c(y)` (kind zero) or the family of
/// balls `ord(z - c(y)) = alpha(y), ac(z - c(y)) = xi` (kind one).
#[derive(Clone, Debug)]
pub struct Cell {
    pub kind: CellKind,
    /// value-group part of the base
    pub base: PresburgerSet,
    /// residue parameters of the base
    pub res_params: Vec<String>,
    /// the bound valued-field coordinate
    pub coord: String,
    pub center: VTerm,
    pub order: Option<DefinableFn>,
    /// angular component as a residue polynomial; never zero for 1-cells
    pub ac: Option<MPoly>,
    pub presentation: Presentation,
}

impl Cell {
    pub fn cell1(
        base: PresburgerSet,
        coord: &str,
        center: VTerm,
        order: DefinableFn,
        ac: MPoly,
    ) -> Self {
        Cell {
            kind: CellKind::One,
            base,
            res_params: Vec::new(),
            coord: coord.to_string(),
            center,
            order: Some(order),
            ac: Some(ac),
            presentation: Presentation::default(),
        }
    }

    pub fn cell0(base: PresburgerSet, coord: &str, center: VTerm) -> Self {
        Cell {
            kind: CellKind::Zero,
            base,
            res_params: Vec::new(),
            coord: coord.to_string(),
            center,
            order: None,
            ac: None,
            presentation: Presentation::default(),
        }
    }

    /// Membership test for the p-adic oracle.
    pub fn contains_padic(
        &self,
        z: &BigRational,
        zpoint: &Valuation,
        coords: &BTreeMap<String, BigRational>,
        res: &BTreeMap<String, u64>,
        p: u64,
    ) -> Result<bool> {
        if !self.base.contains(zpoint) {
            return Ok(false);
        }
        let c = self.center.eval(coords, p)?;
        let diff = z - c;
        match self.kind {
            CellKind::Zero => Ok(diff.is_zero()),
            CellKind::One => {
                let alpha = self
                    .order
                    .as_ref()
                    .unwrap()
                    .eval(zpoint)
                    .ok_or_else(|| Error::PointOutsideDomain("order undefined".into()))?;
                let Some(ord) = padic::ord_p(&diff, p) else {
                    return Ok(false);
                };
                if BigInt::from(ord) != alpha {
                    return Ok(false);
                }
                let want = self
                    .ac
                    .as_ref()
                    .unwrap()
                    .eval_mod(res, p)?;
                Ok(padic::ac_p(&diff, p) == want)
            }
        }
    }
}

/// Structural and sampled validation of a cell.
pub fn validate_cell(cell: &Cell) -> Result<()> {
    if cell.presentation.jac_ord != 0 {
        return Err(Error::PresentationMismatch(format!(
            "presentation Jacobian order must be 0, declared {}",
            cell.presentation.jac_ord
        )));
    }
    if cell.center.coords().iter().any(|c| *c == cell.coord) {
        return Err(Error::PresentationMismatch(format!(
            "center mentions the bound coordinate {}",
            cell.coord
        )));
    }
    match cell.kind {
        CellKind::One => {
            let ac = cell.ac.as_ref().ok_or(Error::ZeroAngularComponent)?;
            if ac.is_zero() {
                return Err(Error::ZeroAngularComponent);
            }
            let order = cell.order.as_ref().ok_or_else(|| {
                Error::ValidationError("1-cell requires order data".into())
            })?;
            if order.vars != cell.base.vars {
                return Err(Error::ArityMismatch {
                    expected: cell.base.vars.len(),
                    got: order.vars.len(),
                    context: "cell order function ambient".into(),
                });
            }
        }
        CellKind::Zero => {
            if cell.ac.is_some() || cell.order.is_some() {
                return Err(Error::ValidationError(
                    "0-cell carries no order or angular data".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Volume of the family of balls: the push-forward of the cell indicator
/// along its bound coordinate is `L^{-alpha - 1}` on the base.
pub fn integrate_cell1(cell: &Cell) -> Result<CExpFn> {
    validate_cell(cell)?;
    if cell.kind != CellKind::One {
        return Err(Error::ValidationError("integrate_cell1 wants a 1-cell".into()));
    }
    let order = cell.order.as_ref().unwrap();
    let mut terms = Vec::new();
    for base_piece in &cell.base.pieces {
        for (dom, alpha) in &order.pieces {
            let support = base_piece.conj(dom);
            if !support.is_satisfiable() {
                continue;
            }
            terms.push(CTerm {
                class: ExpClass::one(),
                pres: PresTerm {
                    coeff: RingAElem::one(),
                    alphas: Vec::new(),
                    beta: alpha.neg().add(&AffExpr::constant(-1)),
                    support,
                },
            });
        }
    }
    Ok(CExpFn {
        zvars: cell.base.vars.clone(),
        terms,
    })
}

/// Volume of a graph: the push-forward of a 0-cell indicator weighted by
/// the declared Jacobian order of the section.
pub fn integrate_cell0(cell: &Cell, jac_ord: &DefinableFn) -> Result<CExpFn> {
    validate_cell(cell)?;
    if cell.kind != CellKind::Zero {
        return Err(Error::ValidationError("integrate_cell0 wants a 0-cell".into()));
    }
    if jac_ord.vars != cell.base.vars {
        return Err(Error::MissingJacobianData(format!(
            "Jacobian order over {:?}, base over {:?}",
            jac_ord.vars, cell.base.vars
        )));
    }
    let mut terms = Vec::new();
    for base_piece in &cell.base.pieces {
        for (dom, j) in &jac_ord.pieces {
            let support = base_piece.conj(dom);
            if !support.is_satisfiable() {
                continue;
            }
            terms.push(CTerm {
                class: ExpClass::one(),
                pres: PresTerm {
                    coeff: RingAElem::one(),
                    alphas: Vec::new(),
                    beta: j.clone(),
                    support,
                },
            });
        }
    }
    Ok(CExpFn {
        zvars: cell.base.vars.clone(),
        terms,
    })
}

/// Change of variables along an isomorphism with declared constant
/// Jacobian order: `f_!([f^* phi]) = L^{ord Jac f} [phi]`, applied to the
/// grade of the declared dimension.
pub fn change_of_variables(
    ord_jac: i64,
    declared_dim: usize,
    phi: &GradedClass,
) -> Result<GradedClass> {
    let part = phi
        .part(declared_dim)
        .ok_or_else(|| Error::DimensionMismatch(format!(
            "no grade-{declared_dim} part in the class"
        )))?;
    Ok(GradedClass::single(
        declared_dim,
        part.scale(&RingAElem::l_pow(ord_jac)),
    ))
}

/// Exponential over a family of balls of large volume vanishes. The
/// precondition `alpha < 0` on the whole base is a Presburger check.
pub fn integrate_large_ball_exp(cell: &Cell) -> Result<CExpFn> {
    validate_cell(cell)?;
    let order = cell
        .order
        .as_ref()
        .ok_or_else(|| Error::ValidationError("large-ball rule wants a 1-cell".into()))?;
    for base_piece in &cell.base.pieces {
        for (dom, alpha) in &order.pieces {
            // alpha >= 0 anywhere on the base violates the precondition
            let bad = base_piece.conj(dom).add_ineq(alpha.num.neg());
            if bad.is_satisfiable() {
                return Err(Error::OrderNotNegative(format!(
                    "order {} reaches 0 on the base",
                    alpha
                )));
            }
        }
    }
    Ok(CExpFn::zero(cell.base.vars.clone()))
}

/// One piece of a cell decomposition: the cell, its presentation and the
/// prepared function on the cell base.
#[derive(Clone, Debug)]
pub struct DecompItem {
    pub cell: Cell,
    pub psi: CExpFn,
    pub declared_dim: usize,
}

/// Cell decomposition given as input data; never computed.
#[derive(Clone, Debug, Default)]
pub struct CellDecomposition {
    pub items: Vec<DecompItem>,
}

impl CellDecomposition {
    /// Sampled disjointness: every coset point lies in at most one cell.
    pub fn check_disjoint_sampled(
        &self,
        p: u64,
        level: i64,
        zpoint: &Valuation,
        res: &BTreeMap<String, u64>,
    ) -> Result<()> {
        let coords: BTreeMap<String, BigRational> = BTreeMap::new();
        for z in padic::cosets(p, 0, level) {
            let mut hits = 0;
            for item in &self.items {
                if item.cell.contains_padic(&z, zpoint, &coords, res, p)? {
                    hits += 1;
                }
            }
            if hits > 1 {
                return Err(Error::DecompositionNotAdapted(format!(
                    "coset {z} lies in {hits} cells"
                )));
            }
        }
        Ok(())
    }
}

/// Push forward along the bound coordinate of every cell and add up the
/// weighted volumes.
pub fn pushforward_projection(decomp: &CellDecomposition) -> Result<CExpFn> {
    if decomp.items.is_empty() {
        return Ok(CExpFn::zero(Vec::new()));
    }
    let mut acc: Option<CExpFn> = None;
    for (i, item) in decomp.items.iter().enumerate() {
        let vol = match item.cell.kind {
            CellKind::One => integrate_cell1(&item.cell),
            CellKind::Zero => integrate_cell0(
                &item.cell,
                &DefinableFn::affine(item.cell.base.vars.clone(), crate::presburger::LinTerm::zero()),
            ),
        }
        .map_err(|e| match e {
            Error::NotIntegrable { witness } => Error::NotIntegrable {
                witness: format!("cell {i}: {witness}"),
            },
            other => other,
        })?;
        let contrib = item.psi.mul(&vol)?;
        acc = Some(match acc {
            None => contrib,
            Some(a) => a.add(&contrib)?,
        });
    }
    Ok(acc.unwrap())
}

/// Input data for the two-term exponential push-forward: the region where
/// the exponential argument is constant on fibers, the large-volume region
/// that dies, and the region with declared remainder and shift.
#[derive(Clone, Debug, Default)]
pub struct ExpPartition {
    pub b_part: Option<BExpData>,
    pub a1_alpha_negative: Option<Cell>,
    pub a2_part: Option<A2ExpData>,
}

/// `g` constant on fibers over the base: its reduction enters the residue
/// character directly.
#[derive(Clone, Debug)]
pub struct BExpData {
    pub xi_tilde: MPoly,
    pub g_tilde_red: MPoly,
    /// already-projected value-group part on the target
    pub pushed: CExpFn,
    /// optional sample data for the fiberwise-constancy check
    pub g_term: Option<VTerm>,
    pub fiber_coord: Option<String>,
}

/// On the remaining region `g` differs from a base term `r` by a unit-free
/// shift `eta` modulo the maximal ideal.
#[derive(Clone, Debug)]
pub struct A2ExpData {
    pub xi_tilde: MPoly,
    pub eta: MPoly,
    pub r_red: MPoly,
    pub pushed: CExpFn,
    /// optional sample data for the congruence check: g, r and a lift of eta
    pub g_term: Option<VTerm>,
    pub r_term: Option<VTerm>,
    pub eta_lift: Option<VTerm>,
    pub samples: Vec<BTreeMap<String, BigRational>>,
}

/// Assemble the two-term exponential push-forward. The large-volume part
/// contributes zero once its order is verified negative.
pub fn pushforward_exp_valued(part: &ExpPartition, p_check: u64) -> Result<CExpFn> {
    let mut acc: Option<CExpFn> = None;
    if let Some(b) = &part.b_part {
        if let (Some(g), Some(fiber)) = (&b.g_term, &b.fiber_coord) {
            check_fiberwise_constant(g, fiber, p_check)?;
        }
        let class = ExpClass::from_generator(Generator {
            variety: ResVariety::point(),
            xi: b.xi_tilde.add(&b.g_tilde_red),
        });
        let contrib = b.pushed.mul(&CExpFn::from_class(b.pushed.zvars.clone(), class))?;
        acc = Some(contrib);
    }
    if let Some(cell) = &part.a1_alpha_negative {
        // must vanish; surface the violated precondition otherwise
        integrate_large_ball_exp(cell)?;
    }
    if let Some(a2) = &part.a2_part {
        if let (Some(g), Some(r), Some(eta)) = (&a2.g_term, &a2.r_term, &a2.eta_lift) {
            for sample in &a2.samples {
                let gv = g.eval(sample, p_check)?;
                let rv = r.eval(sample, p_check)?;
                let ev = eta.eval(sample, p_check)?;
                let diff = gv - rv - ev;
                let ok = diff.is_zero()
                    || matches!(padic::ord_p(&diff, p_check), Some(o) if o >= 1);
                if !ok {
                    return Err(Error::PartitionInvalid(format!(
                        "g - r - eta is a unit at a sample point ({diff})"
                    )));
                }
            }
        }
        let class = ExpClass::from_generator(Generator {
            variety: ResVariety::point(),
            xi: a2.xi_tilde.add(&a2.eta).add(&a2.r_red),
        });
        let contrib = a2
            .pushed
            .mul(&CExpFn::from_class(a2.pushed.zvars.clone(), class))?;
        acc = Some(match acc {
            None => contrib,
            Some(a) => a.add(&contrib)?,
        });
    }
    Ok(acc.unwrap_or_else(|| CExpFn::zero(Vec::new())))
}

fn check_fiberwise_constant(g: &VTerm, fiber: &str, p: u64) -> Result<()> {
    // sample a few fiber values over zeroed remaining coordinates
    let coords = g.coords();
    for v1 in 0..3u64 {
        for v2 in 0..3u64 {
            let mut p1 = BTreeMap::new();
            let mut p2 = BTreeMap::new();
            for c in &coords {
                p1.insert(c.clone(), BigRational::zero());
                p2.insert(c.clone(), BigRational::zero());
            }
            p1.insert(fiber.to_string(), BigRational::from(BigInt::from(v1)));
            p2.insert(fiber.to_string(), BigRational::from(BigInt::from(v2)));
            // the character argument is read modulo the maximal ideal
            let diff = g.eval(&p1, p)? - g.eval(&p2, p)?;
            let ok = diff.is_zero() || matches!(padic::ord_p(&diff, p), Some(o) if o >= 1);
            if !ok {
                return Err(Error::PartitionInvalid(format!(
                    "exponential argument varies along the fiber coordinate {fiber}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::{Formula, LinTerm};

    fn point_base() -> PresburgerSet {
        PresburgerSet::universe(Vec::new())
    }

    fn const_order(k: i64) -> DefinableFn {
        DefinableFn::affine(Vec::new(), LinTerm::constant(k))
    }

    #[test]
    fn validate_unit_sphere_cell() {
        let cell = Cell::cell1(
            point_base(),
            "z",
            VTerm::zero(),
            const_order(0),
            MPoly::one(),
        );
        validate_cell(&cell).unwrap();
    }

    #[test]
    fn zero_angular_component_rejected() {
        let cell = Cell::cell1(
            point_base(),
            "z",
            VTerm::zero(),
            const_order(0),
            MPoly::zero(),
        );
        assert_eq!(validate_cell(&cell), Err(Error::ZeroAngularComponent));
    }

    #[test]
    fn graph_cell_is_a_valid_0cell() {
        let cell = Cell::cell0(point_base(), "z", VTerm::Mul(vec![VTerm::T, VTerm::T]));
        validate_cell(&cell).unwrap();
    }

    #[test]
    fn nonzero_presentation_jacobian_rejected() {
        let mut cell = Cell::cell0(point_base(), "z", VTerm::zero());
        cell.presentation.jac_ord = 1;
        assert!(matches!(
            validate_cell(&cell),
            Err(Error::PresentationMismatch(_))
        ));
    }

    #[test]
    fn ball_volume_formula() {
        // alpha = 2: volume L^{-3}
        let cell = Cell::cell1(point_base(), "z", VTerm::zero(), const_order(2), MPoly::one());
        let v = integrate_cell1(&cell).unwrap();
        assert_eq!(v.terms.len(), 1);
        assert!(v.terms[0]
            .pres
            .coeff
            .is_equal(&RingAElem::one()));
        let q = BigRational::from(BigInt::from(2));
        let val = v.terms[0].pres.nu_q(&Valuation::new(), &q).unwrap();
        assert_eq!(val, BigRational::new(BigInt::one(), BigInt::from(8)));
    }

    #[test]
    fn parametric_ball_volume() {
        // alpha(y) = y over y >= 0: volume L^{-y-1}
        let base = PresburgerSet::from_formula(
            &Formula::le(LinTerm::var("y").neg()),
            vec!["y".into()],
        )
        .unwrap();
        let cell = Cell::cell1(
            base,
            "z",
            VTerm::zero(),
            DefinableFn::affine(vec!["y".into()], LinTerm::var("y")),
            MPoly::one(),
        );
        let v = integrate_cell1(&cell).unwrap();
        let q = BigRational::from(BigInt::from(3));
        for y in [0i64, 1, 4] {
            let mut pt = Valuation::new();
            pt.insert("y".into(), BigInt::from(y));
            let mut acc = BigRational::zero();
            for t in &v.terms {
                acc += t.pres.nu_q(&pt, &q).unwrap();
            }
            let expected = BigRational::new(BigInt::one(), BigInt::from(3).pow(y as u32 + 1));
            assert_eq!(acc, expected, "y = {y}");
        }
    }

    #[test]
    fn ball_volume_matches_coset_count() {
        // number of level-N cosets in the ball ord(z) = alpha, ac = 1 is
        // p^{N - alpha - 1}
        for p in [2u64, 3, 5] {
            for alpha in [0i64, 1, 2] {
                let n = alpha + 3;
                let cell = Cell::cell1(
                    point_base(),
                    "z",
                    VTerm::zero(),
                    const_order(alpha),
                    MPoly::one(),
                );
                let coords = BTreeMap::new();
                let res = BTreeMap::new();
                let count = padic::cosets(p, 0, n)
                    .into_iter()
                    .filter(|z| {
                        cell.contains_padic(z, &Valuation::new(), &coords, &res, p)
                            .unwrap()
                    })
                    .count() as u64;
                assert_eq!(
                    count,
                    p.pow((n - alpha - 1) as u32),
                    "p = {p}, alpha = {alpha}"
                );
            }
        }
    }

    #[test]
    fn large_ball_exponential_dies() {
        let cell = Cell::cell1(
            point_base(),
            "z",
            VTerm::zero(),
            const_order(-1),
            MPoly::one(),
        );
        let v = integrate_large_ball_exp(&cell).unwrap();
        assert!(v.is_zero_normal_form());
    }

    #[test]
    fn large_ball_gate_requires_negative_order() {
        let cell = Cell::cell1(
            point_base(),
            "z",
            VTerm::zero(),
            const_order(0),
            MPoly::one(),
        );
        assert!(matches!(
            integrate_large_ball_exp(&cell),
            Err(Error::OrderNotNegative(_))
        ));
    }

    #[test]
    fn large_ball_character_sum_oracle() {
        // the character integrated over the full ball of radius p cancels:
        // sum of psi_p over all level-4 cosets of p^{-1} Z_p
        let p = 3u64;
        let n = 4i64;
        let mut acc = Complex::new(0.0, 0.0);
        let measure = (p as f64).powi(-(n as i32));
        for z in padic::cosets(p, -1, n) {
            acc += padic::psi_p(&z, p) * measure;
        }
        assert!(acc.norm() < 1e-9, "residual {}", acc.norm());
    }

    #[test]
    fn change_of_variables_scaling_masses() {
        // f(z) = t^k z sends {ord = 0, ac = 1} onto {ord = k, ac = 1};
        // the direct image acquires the factor L^k, and p-adic masses of
        // the two indicator supports differ by exactly p^{-k}
        for p in [2u64, 3] {
            for k in [1i64, 2] {
                let n = k + 3;
                let src = Cell::cell1(
                    point_base(),
                    "z",
                    VTerm::zero(),
                    const_order(0),
                    MPoly::one(),
                );
                let dst = Cell::cell1(
                    point_base(),
                    "w",
                    VTerm::zero(),
                    const_order(k),
                    MPoly::one(),
                );
                let coords = BTreeMap::new();
                let res = BTreeMap::new();
                let measure = (p as f64).powi(-(n as i32));
                let mass = |cell: &Cell| {
                    padic::cosets(p, 0, n)
                        .into_iter()
                        .filter(|z| {
                            cell.contains_padic(z, &Valuation::new(), &coords, &res, p)
                                .unwrap()
                        })
                        .count() as f64
                        * measure
                };
                let m_src = mass(&src);
                let m_dst = mass(&dst);
                assert!(
                    (m_src - m_dst * (p as f64).powi(k as i32)).abs() < 1e-12,
                    "p = {p}, k = {k}"
                );
                // the symbolic rule: phi on the target, graded in dim 1
                let phi = GradedClass::single(1, integrate_cell1(&dst).unwrap());
                let out = change_of_variables(k, 1, &phi).unwrap();
                let q = BigRational::from(BigInt::from(p));
                let direct = out.part(1).unwrap();
                let mut val = BigRational::zero();
                for t in &direct.terms {
                    val += t.pres.nu_q(&Valuation::new(), &q).unwrap();
                }
                // L^k * L^{-k-1} = L^{-1}: matches the source mass times
                // nothing else
                assert_eq!(
                    val,
                    BigRational::new(BigInt::one(), BigInt::from(p)),
                    "p = {p}, k = {k}"
                );
            }
        }
    }

    #[test]
    fn affine_unit_change_preserves_mass() {
        // f(z) = u z + c with ord u = 0 has Jacobian order 0
        let dst = Cell::cell1(point_base(), "w", VTerm::zero(), const_order(0), MPoly::one());
        let phi = GradedClass::single(1, integrate_cell1(&dst).unwrap());
        let out = change_of_variables(0, 1, &phi).unwrap();
        let q = BigRational::from(BigInt::from(3));
        let before: BigRational = phi
            .part(1)
            .unwrap()
            .terms
            .iter()
            .map(|t| t.pres.nu_q(&Valuation::new(), &q).unwrap())
            .sum();
        let after: BigRational = out
            .part(1)
            .unwrap()
            .terms
            .iter()
            .map(|t| t.pres.nu_q(&Valuation::new(), &q).unwrap())
            .sum();
        assert_eq!(before, after);
    }

    #[test]
    fn decomposition_sum_of_two_cells() {
        // two disjoint balls: volumes add
        let c1 = Cell::cell1(point_base(), "z", VTerm::zero(), const_order(0), MPoly::one());
        let c2 = Cell::cell1(point_base(), "z", VTerm::zero(), const_order(1), MPoly::one());
        let one = CExpFn::constant(Vec::new(), RingAElem::one());
        let decomp = CellDecomposition {
            items: vec![
                DecompItem {
                    cell: c1,
                    psi: one.clone(),
                    declared_dim: 1,
                },
                DecompItem {
                    cell: c2,
                    psi: one,
                    declared_dim: 1,
                },
            ],
        };
        decomp
            .check_disjoint_sampled(3, 4, &Valuation::new(), &BTreeMap::new())
            .unwrap();
        let v = pushforward_projection(&decomp).unwrap();
        let q = BigRational::from(BigInt::from(3));
        let total: BigRational = v
            .terms
            .iter()
            .map(|t| t.pres.nu_q(&Valuation::new(), &q).unwrap())
            .sum();
        // 1/3 + 1/9
        assert_eq!(total, BigRational::new(BigInt::from(4), BigInt::from(9)));
    }

    #[test]
    fn overlapping_decomposition_detected() {
        let c1 = Cell::cell1(point_base(), "z", VTerm::zero(), const_order(0), MPoly::one());
        let decomp = CellDecomposition {
            items: vec![
                DecompItem {
                    cell: c1.clone(),
                    psi: CExpFn::constant(Vec::new(), RingAElem::one()),
                    declared_dim: 1,
                },
                DecompItem {
                    cell: c1,
                    psi: CExpFn::constant(Vec::new(), RingAElem::one()),
                    declared_dim: 1,
                },
            ],
        };
        assert!(matches!(
            decomp.check_disjoint_sampled(3, 3, &Valuation::new(), &BTreeMap::new()),
            Err(Error::DecompositionNotAdapted(_))
        ));
    }

    #[test]
    fn empty_decomposition_pushes_to_zero() {
        let v = pushforward_projection(&CellDecomposition::default()).unwrap();
        assert!(v.is_zero_normal_form());
    }

    #[test]
    fn exponential_pushforward_b_term() {
        // fiberwise-constant argument: the reduction enters the character
        let pushed = CExpFn::constant(Vec::new(), RingAElem::one());
        let part = ExpPartition {
            b_part: Some(BExpData {
                xi_tilde: MPoly::var("a"),
                g_tilde_red: MPoly::constant(1),
                pushed,
                g_term: Some(VTerm::Add(vec![
                    VTerm::int(1),
                    VTerm::Mul(vec![VTerm::T, VTerm::Coord("y".into())]),
                ])),
                fiber_coord: Some("y".into()),
            }),
            ..Default::default()
        };
        let out = pushforward_exp_valued(&part, 5).unwrap();
        let mut res = BTreeMap::new();
        res.insert("a".to_string(), 2u64);
        let v = out.eval_p(5, &Valuation::new(), &res).unwrap();
        // e((a + 1)) at a = 2: angle 2 pi 3/5
        let angle = 2.0 * std::f64::consts::PI * 3.0 / 5.0;
        assert!((v.re - angle.cos()).abs() < 1e-9);
        assert!((v.im - angle.sin()).abs() < 1e-9);
    }

    #[test]
    fn exponential_pushforward_fiber_variation_rejected() {
        let pushed = CExpFn::constant(Vec::new(), RingAElem::one());
        let part = ExpPartition {
            b_part: Some(BExpData {
                xi_tilde: MPoly::zero(),
                g_tilde_red: MPoly::zero(),
                pushed,
                g_term: Some(VTerm::Coord("y".into())),
                fiber_coord: Some("y".into()),
            }),
            ..Default::default()
        };
        assert!(matches!(
            pushforward_exp_valued(&part, 5),
            Err(Error::PartitionInvalid(_))
        ));
    }

    #[test]
    fn exponential_pushforward_a2_congruence_checked() {
        // g = y + t y, r = y, eta lift = 0: g - r - 0 = t y has ord >= 1
        let pushed = CExpFn::constant(Vec::new(), RingAElem::one());
        let mut sample = BTreeMap::new();
        sample.insert("y".to_string(), BigRational::from(BigInt::from(2)));
        let a2 = A2ExpData {
            xi_tilde: MPoly::zero(),
            eta: MPoly::zero(),
            r_red: MPoly::var("b"),
            pushed,
            g_term: Some(VTerm::Add(vec![
                VTerm::Coord("y".into()),
                VTerm::Mul(vec![VTerm::T, VTerm::Coord("y".into())]),
            ])),
            r_term: Some(VTerm::Coord("y".into())),
            eta_lift: Some(VTerm::zero()),
            samples: vec![sample.clone()],
        };
        let part = ExpPartition {
            a2_part: Some(a2.clone()),
            ..Default::default()
        };
        pushforward_exp_valued(&part, 5).unwrap();

        // breaking the congruence trips the gate
        let bad = A2ExpData {
            r_term: Some(VTerm::zero()),
            ..a2
        };
        let part = ExpPartition {
            a2_part: Some(bad),
            ..Default::default()
        };
        assert!(matches!(
            pushforward_exp_valued(&part, 5),
            Err(Error::PartitionInvalid(_))
        ));
    }

    #[test]
    fn a1_part_contributes_nothing_after_gate() {
        let cell = Cell::cell1(
            point_base(),
            "z",
            VTerm::zero(),
            const_order(-1),
            MPoly::one(),
        );
        let part = ExpPartition {
            a1_alpha_negative: Some(cell),
            ..Default::default()
        };
        let out = pushforward_exp_valued(&part, 3).unwrap();
        assert!(out.is_zero_normal_form());
    }
}
