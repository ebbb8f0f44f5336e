//! Push-forward functoriality checks: extension by zero, projections with
//! graph factorization, the projection formula, Fubini order independence,
//! and the pull-back/push-forward commutation suite with its verdicts.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use crate::constructible::{CExpFn, CTerm};
use crate::error::{Error, Result};
use crate::presburger::{AffExpr, DefinableMap, Formula, PresburgerSet, Valuation};
use crate::presfn::PresFunction;
use crate::residue::MPoly;

/// Numeric tolerance for every specialization oracle.
pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "witness")]
pub enum Verdict {
    #[serde(rename = "symbolic-equal")]
    SymbolicEqual,
    #[serde(rename = "specialization-equal")]
    SpecializationEqual,
    #[serde(rename = "unequal")]
    Unequal(String),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        !matches!(self, Verdict::Unequal(_))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaRecord {
    pub label: String,
    pub delta: f64,
}

/// Outcome of one check, serializable in a stable field order.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub verdict: Verdict,
    pub integrability: Vec<String>,
    pub deltas: Vec<DeltaRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u128>,
}

impl Report {
    pub fn strip_timing(mut self) -> Self {
        self.runtime_ms = None;
        self
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("scenario: {}\n", self.scenario));
        let v = match &self.verdict {
            Verdict::SymbolicEqual => "symbolic-equal".to_string(),
            Verdict::SpecializationEqual => "specialization-equal".to_string(),
            Verdict::Unequal(w) => format!("unequal ({w})"),
        };
        out.push_str(&format!("verdict: {v}\n"));
        for note in &self.integrability {
            out.push_str(&format!("integrability: {note}\n"));
        }
        for d in &self.deltas {
            out.push_str(&format!("delta: {} = {:.3e}\n", d.label, d.delta));
        }
        if let Some(ms) = self.runtime_ms {
            out.push_str(&format!("runtime_ms: {ms}\n"));
        }
        out
    }
}

/// Oracle configuration shared by all checks.
#[derive(Clone, Debug)]
pub struct OracleSettings {
    pub qs: Vec<BigRational>,
    pub primes: Vec<u64>,
    pub level: i64,
    pub box_radius: i64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            qs: vec![
                BigRational::from(BigInt::from(2)),
                BigRational::from(BigInt::from(3)),
            ],
            primes: vec![3, 5, 7],
            level: 4,
            box_radius: 3,
        }
    }
}

/// The map being pulled back along: either a definable map on the integer
/// coordinates or a polynomial substitution of residue parameters.
#[derive(Clone, Debug)]
pub enum GammaMap {
    Z(DefinableMap),
    Res(BTreeMap<String, MPoly>),
    Identity,
}

/// One commutation scenario: spaces are given by their coordinate lists,
/// `phi` lives on W' x X and is pushed along the X coordinates.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub w_vars: Vec<String>,
    pub wp_vars: Vec<String>,
    pub x_vars: Vec<String>,
    pub gamma: GammaMap,
    pub gamma_surjective: bool,
    pub phi: CExpFn,
    pub oracle: OracleSettings,
}

/// Extension by zero along an inclusion of definable pieces.
pub fn i_shriek(
    phi: &CExpFn,
    sub: &PresburgerSet,
    ambient: &PresburgerSet,
) -> Result<CExpFn> {
    if sub.vars != ambient.vars {
        return Err(Error::AmbientMismatch(format!(
            "{:?} vs {:?}",
            sub.vars, ambient.vars
        )));
    }
    let outside = Formula::and(vec![
        sub.to_formula(),
        Formula::not(ambient.to_formula()),
    ]);
    if crate::presburger::formula_is_satisfiable(&outside) {
        return Err(Error::NotASubset(
            "the declared subset leaves the ambient set".into(),
        ));
    }
    phi.restrict(sub)
}

/// Push forward along the projection that forgets the given integer
/// variables, one at a time.
pub fn pushforward_z(phi: &CExpFn, vars: &[String]) -> Result<CExpFn> {
    let mut acc = phi.clone();
    for v in vars {
        acc = acc.sum_zvar(v)?;
    }
    Ok(acc)
}

/// Push forward along a map given by its graph: extend by zero onto the
/// graph inside source x target, then project out the source coordinates.
pub fn pushforward_graph(phi: &CExpFn, f: &DefinableMap) -> Result<CExpFn> {
    if f.dom_vars != phi.zvars {
        return Err(Error::AmbientMismatch(format!(
            "map domain {:?}, function on {:?}",
            f.dom_vars, phi.zvars
        )));
    }
    // terms on source coordinates, constrained to the graph, with the
    // target coordinates adjoined
    let mut all_vars = f.dom_vars.clone();
    all_vars.extend(f.out_vars.iter().cloned());
    let mut terms = Vec::new();
    for (dom, outs) in &f.pieces {
        for t in &phi.terms {
            let mut support = t.pres.support.conj(dom);
            for (v, e) in f.out_vars.iter().zip(outs) {
                // v = e as den*v - num = 0, split into two inequalities
                let lhs = crate::presburger::LinTerm::var(v)
                    .scale(&BigInt::from(e.den))
                    .sub(&e.num);
                support = support.add_ineq(lhs.clone()).add_ineq(lhs.neg());
            }
            if !support.is_satisfiable() {
                continue;
            }
            terms.push(CTerm {
                class: t.class.clone(),
                pres: crate::presfn::PresTerm {
                    support,
                    ..t.pres.clone()
                },
            });
        }
    }
    let lifted = CExpFn {
        zvars: all_vars,
        terms,
    };
    pushforward_z(&lifted, &f.dom_vars)
}

/// Lift a function on the target of a projection to the full space.
pub fn lift_along_projection(phi: &CExpFn, full_vars: &[String]) -> Result<CExpFn> {
    for v in &phi.zvars {
        if !full_vars.contains(v) {
            return Err(Error::AmbientMismatch(format!(
                "{v} missing from the product space"
            )));
        }
    }
    Ok(CExpFn {
        zvars: full_vars.to_vec(),
        terms: phi.terms.clone(),
    })
}

/// Pull back along gamma acting on the first factor of a product.
fn pullback_gamma_times_id(
    phi: &CExpFn,
    gamma: &GammaMap,
    x_vars: &[String],
) -> Result<CExpFn> {
    match gamma {
        GammaMap::Identity => Ok(phi.clone()),
        GammaMap::Z(map) => phi.pullback_z(&map.product_with_identity(x_vars)),
        GammaMap::Res(subst) => Ok(phi.pullback_res(subst)),
    }
}

/// Pull back a function on W' to W.
fn pullback_gamma(phi: &CExpFn, gamma: &GammaMap) -> Result<CExpFn> {
    match gamma {
        GammaMap::Identity => Ok(phi.clone()),
        GammaMap::Z(map) => phi.pullback_z(map),
        GammaMap::Res(subst) => Ok(phi.pullback_res(subst)),
    }
}

/// Structural zero test on the difference: group terms by everything but
/// the ring coefficient and check that coefficients cancel groupwise.
/// Sound but incomplete; inconclusive results fall back to the oracles.
fn structurally_equal(a: &CExpFn, b: &CExpFn) -> bool {
    let mut groups: BTreeMap<String, crate::ring::RingAElem> = BTreeMap::new();
    let mut feed = |f: &CExpFn, sign: i64| {
        for t in &f.terms {
            if !t.pres.support.is_satisfiable() || t.class.is_zero() {
                continue;
            }
            for (c, g) in &t.class.gens {
                let mut alphas: Vec<String> =
                    t.pres.alphas.iter().map(|x| x.to_string()).collect();
                alphas.sort();
                let key = format!(
                    "{:?}|{:?}|{}|{}",
                    g,
                    alphas,
                    t.pres.beta,
                    t.pres.support
                );
                let add = t.pres.coeff.scale_int(&(c * BigInt::from(sign)));
                let e = groups
                    .entry(key)
                    .or_insert_with(crate::ring::RingAElem::zero);
                *e = e.add(&add);
            }
        }
    };
    feed(a, 1);
    feed(b, -1);
    groups.values().all(|c| c.is_zero())
}

/// Sample integer points of a box over the given coordinates.
pub fn sample_points(vars: &[String], radius: i64) -> Vec<Valuation> {
    if vars.is_empty() {
        return vec![Valuation::new()];
    }
    let mut out = vec![Valuation::new()];
    for v in vars {
        let mut next = Vec::new();
        for p in &out {
            for k in -radius..=radius {
                let mut q = p.clone();
                q.insert(v.clone(), BigInt::from(k));
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Compare two functions on the same space by every configured oracle.
/// Returns the per-sample deltas, or a witness description on mismatch.
pub fn oracle_compare(
    a: &CExpFn,
    b: &CExpFn,
    oracle: &OracleSettings,
) -> Result<std::result::Result<Vec<DeltaRecord>, String>> {
    if a.zvars != b.zvars {
        return Err(Error::AmbientMismatch(format!(
            "{:?} vs {:?}",
            a.zvars, b.zvars
        )));
    }
    let points = sample_points(&a.zvars, oracle.box_radius);
    let mut res_params: Vec<String> = a.res_params().into_iter().collect();
    for s in b.res_params() {
        if !res_params.contains(&s) {
            res_params.push(s);
        }
    }
    let mut deltas = Vec::new();
    let trivial_classes = res_params.is_empty()
        && a.terms.iter().chain(&b.terms).all(|t| t.class == crate::residue::ExpClass::one());
    if trivial_classes {
        for q in &oracle.qs {
            for pt in &points {
                let va = cexp_nu_q(a, pt, q)?;
                let vb = cexp_nu_q(b, pt, q)?;
                let delta = (&va - &vb).abs().to_f64().unwrap_or(f64::INFINITY);
                if delta > ORACLE_TOL {
                    return Ok(Err(format!(
                        "q = {q}, point {pt:?}: {va} vs {vb}"
                    )));
                }
                deltas.push(DeltaRecord {
                    label: format!("q={q} pt={}", fmt_point(pt)),
                    delta,
                });
            }
        }
    }
    for p in &oracle.primes {
        for pt in &points {
            for assign in sample_res_assignments(&res_params, *p) {
                let va = a.eval_p(*p, pt, &assign)?;
                let vb = b.eval_p(*p, pt, &assign)?;
                let delta = (va - vb).norm();
                if delta > ORACLE_TOL {
                    return Ok(Err(format!(
                        "p = {p}, point {pt:?}, residues {assign:?}: {va} vs {vb}"
                    )));
                }
                deltas.push(DeltaRecord {
                    label: format!("p={p} pt={}", fmt_point(pt)),
                    delta,
                });
            }
        }
    }
    Ok(Ok(deltas))
}

fn fmt_point(pt: &Valuation) -> String {
    let parts: Vec<String> = pt.iter().map(|(k, v)| format!("{k}={v}")).collect();
    if parts.is_empty() {
        "()".into()
    } else {
        parts.join(",")
    }
}

fn sample_res_assignments(params: &[String], p: u64) -> Vec<BTreeMap<String, u64>> {
    if params.is_empty() {
        return vec![BTreeMap::new()];
    }
    let reps: Vec<u64> = (0..p.min(3)).collect();
    let mut out = vec![BTreeMap::new()];
    for s in params {
        let mut next = Vec::new();
        for a in &out {
            for r in &reps {
                let mut b = a.clone();
                b.insert(s.clone(), *r);
                next.push(b);
            }
        }
        out = next;
    }
    out
}

/// Specialization of a trivial-class function at an integer point.
pub fn cexp_nu_q(f: &CExpFn, pt: &Valuation, q: &BigRational) -> Result<BigRational> {
    let pres = PresFunction {
        vars: f.zvars.clone(),
        terms: f.terms.iter().map(|t| t.pres.clone()).collect(),
    };
    pres.nu_q(pt, q)
}

/// Compare two functions: structural pass first, oracles after.
pub fn compare(
    id: &str,
    a: &CExpFn,
    b: &CExpFn,
    oracle: &OracleSettings,
) -> Result<Report> {
    let start = Instant::now();
    let mut integrability = Vec::new();
    let (verdict, deltas) = if structurally_equal(a, b) {
        (Verdict::SymbolicEqual, Vec::new())
    } else {
        match oracle_compare(a, b, oracle)? {
            Ok(deltas) => (Verdict::SpecializationEqual, deltas),
            Err(witness) => (Verdict::Unequal(witness), Vec::new()),
        }
    };
    integrability.push("checked".into());
    Ok(Report {
        scenario: id.to_string(),
        verdict,
        integrability,
        deltas,
        runtime_ms: Some(start.elapsed().as_millis()),
    })
}

/// Projection formula: pushing `f^*(alpha) . beta` equals `alpha . f_! beta`
/// for the projection along `sum_vars`.
pub fn check_projection_formula(
    id: &str,
    alpha: &CExpFn,
    beta: &CExpFn,
    sum_vars: &[String],
    oracle: &OracleSettings,
) -> Result<Report> {
    let lifted = lift_along_projection(alpha, &beta.zvars)?;
    let lhs = pushforward_z(&lifted.mul(beta)?, sum_vars)?;
    let rhs = alpha.mul(&pushforward_z(beta, sum_vars)?)?;
    compare(id, &lhs, &rhs, oracle)
}

/// Fubini: summing a two-variable function in either order agrees.
pub fn check_fubini(
    id: &str,
    phi: &CExpFn,
    var_a: &str,
    var_b: &str,
    oracle: &OracleSettings,
) -> Result<Report> {
    let ab = phi.sum_zvar(var_a)?.sum_zvar(var_b)?;
    let ba = phi.sum_zvar(var_b)?.sum_zvar(var_a)?;
    compare(id, &ab, &ba, oracle)
}

/// The commutation check: pushing forward after pulling back along
/// `gamma x Id` equals pulling back the push-forward.
pub fn check_commutativity(sc: &Scenario) -> Result<Report> {
    let start = Instant::now();
    let mut integrability = Vec::new();

    // condition (1): phi integrable along the projected coordinates
    let phi_pres = PresFunction {
        vars: sc.phi.zvars.clone(),
        terms: sc.phi.terms.iter().map(|t| t.pres.clone()).collect(),
    };
    let mut phi_integrable = Ok(());
    for v in &sc.x_vars {
        if let Err(e) = phi_pres.check_integrable(v) {
            phi_integrable = Err(e);
            break;
        }
    }
    let pulled = pullback_gamma_times_id(&sc.phi, &sc.gamma, &sc.x_vars)?;
    let pulled_pres = PresFunction {
        vars: pulled.zvars.clone(),
        terms: pulled.terms.iter().map(|t| t.pres.clone()).collect(),
    };
    let mut pulled_integrable = Ok(());
    for v in &sc.x_vars {
        if let Err(e) = pulled_pres.check_integrable(v) {
            pulled_integrable = Err(e);
            break;
        }
    }
    match (&phi_integrable, &pulled_integrable) {
        (Ok(()), Ok(())) => integrability.push("both sides integrable".into()),
        (Err(e), Ok(())) if sc.gamma_surjective => {
            // a surjective gamma transports integrability both ways; this
            // would falsify the statement, so it is surfaced as-is
            return Err(Error::IntegrabilityViolation(format!(
                "gamma declared surjective, pulled-back side integrable but phi is not: {e}"
            )));
        }
        (Err(e), _) => return Err(e.clone()),
        (Ok(()), Err(e)) => {
            return Err(Error::IntegrabilityViolation(format!(
                "pull-back destroyed integrability: {e}"
            )))
        }
    }

    let lhs = pushforward_z(&pulled, &sc.x_vars)?;
    let rhs = pullback_gamma(&pushforward_z(&sc.phi, &sc.x_vars)?, &sc.gamma)?;

    let mut report = compare(&sc.id, &lhs, &rhs, &sc.oracle)?;
    report.integrability = integrability;
    report.runtime_ms = Some(start.elapsed().as_millis());
    Ok(report)
}

/// Extension square: pulling back an extension by zero equals
/// extending the pull-back, when gamma acts on the other factor.
pub fn check_extension_square(
    id: &str,
    phi: &CExpFn,
    sub: &PresburgerSet,
    ambient: &PresburgerSet,
    gamma: &GammaMap,
    x_vars: &[String],
    oracle: &OracleSettings,
) -> Result<Report> {
    let extended = i_shriek(phi, sub, ambient)?;
    let lhs = pullback_gamma_times_id(&extended, gamma, x_vars)?;
    let pulled = pullback_gamma_times_id(phi, gamma, x_vars)?;
    // transport the inclusion along gamma x Id on the integer coordinates
    let (sub_w, ambient_w) = match gamma {
        GammaMap::Z(map) => {
            let ext = map.product_with_identity(x_vars);
            (sub.preimage(&ext)?, ambient.preimage(&ext)?)
        }
        _ => (sub.clone(), ambient.clone()),
    };
    let rhs = i_shriek(&pulled, &sub_w, &ambient_w)?;
    compare(id, &lhs, &rhs, oracle)
}

/// Splitting composition: the composed square is verified directly on top
/// of the two small squares, so a failure localizes.
pub fn check_splitting_composition(
    id: &str,
    phi: &CExpFn,
    gamma: &GammaMap,
    first: &[String],
    second: &[String],
    oracle: &OracleSettings,
) -> Result<Vec<Report>> {
    let mut x_all = first.to_vec();
    x_all.extend(second.iter().cloned());

    // small square 1: project the first block only
    let sc1 = Scenario {
        id: format!("{id}.first"),
        w_vars: Vec::new(),
        wp_vars: Vec::new(),
        x_vars: first.to_vec(),
        gamma: gamma.clone(),
        gamma_surjective: false,
        phi: phi.clone(),
        oracle: oracle.clone(),
    };
    let r1 = check_commutativity(&sc1)?;

    // small square 2: project the second block of the already-projected
    let projected = pushforward_z(phi, first)?;
    let sc2 = Scenario {
        id: format!("{id}.second"),
        w_vars: Vec::new(),
        wp_vars: Vec::new(),
        x_vars: second.to_vec(),
        gamma: gamma.clone(),
        gamma_surjective: false,
        phi: projected,
        oracle: oracle.clone(),
    };
    let r2 = check_commutativity(&sc2)?;

    // composed square, verified independently
    let sc3 = Scenario {
        id: format!("{id}.composed"),
        w_vars: Vec::new(),
        wp_vars: Vec::new(),
        x_vars: x_all,
        gamma: gamma.clone(),
        gamma_surjective: false,
        phi: phi.clone(),
        oracle: oracle.clone(),
    };
    let r3 = check_commutativity(&sc3)?;
    Ok(vec![r1, r2, r3])
}

/// Replay of the graph reduction: pushing along a definable map via its
/// graph equals the direct composite where the map is a projection
/// composed with an isomorphism on the remaining coordinates.
pub fn check_graph_reduction(
    id: &str,
    phi: &CExpFn,
    f: &DefinableMap,
    direct: &CExpFn,
    oracle: &OracleSettings,
) -> Result<Report> {
    let via_graph = pushforward_graph(phi, f)?;
    compare(id, &via_graph, direct, oracle)
}

pub fn projection_map(dom: &[String], out: &[String]) -> DefinableMap {
    DefinableMap {
        dom_vars: dom.to_vec(),
        out_vars: out.to_vec(),
        pieces: vec![(
            crate::presburger::Piece::universe(),
            out.iter().map(|v| AffExpr::var(v)).collect(),
        )],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::{LinTerm, Piece};
    use crate::presfn::PresTerm;
    use crate::residue::{ExpClass, Generator, ResVariety};
    use crate::ring::RingAElem;

    fn decaying(vars: Vec<String>, var: &str, low: i64) -> CExpFn {
        let piece =
            Piece::universe().add_ineq(LinTerm::constant(low).sub(&LinTerm::var(var)));
        CExpFn {
            zvars: vars,
            terms: vec![CTerm {
                class: ExpClass::one(),
                pres: PresTerm {
                    coeff: RingAElem::one(),
                    alphas: vec![],
                    beta: AffExpr::var(var).neg(),
                    support: piece,
                },
            }],
        }
    }

    #[test]
    fn identity_gamma_is_symbolic_equal() {
        let sc = Scenario {
            id: "identity".into(),
            w_vars: vec![],
            wp_vars: vec![],
            x_vars: vec!["n".into()],
            gamma: GammaMap::Identity,
            gamma_surjective: true,
            phi: decaying(vec!["n".into()], "n", 0),
            oracle: OracleSettings::default(),
        };
        let r = check_commutativity(&sc).unwrap();
        assert_eq!(r.verdict, Verdict::SymbolicEqual);
    }

    #[test]
    fn point_base_sum_matches_closed_form() {
        let sc = Scenario {
            id: "point-base".into(),
            w_vars: vec![],
            wp_vars: vec![],
            x_vars: vec!["n".into()],
            gamma: GammaMap::Identity,
            gamma_surjective: true,
            phi: decaying(vec!["n".into()], "n", 0),
            oracle: OracleSettings::default(),
        };
        let r = check_commutativity(&sc).unwrap();
        assert!(r.verdict.passed());
        // both sides are 1/(1 - L^{-1}); nu_2 = 2
        let rhs = pushforward_z(&sc.phi, &sc.x_vars).unwrap();
        let v = cexp_nu_q(&rhs, &Valuation::new(), &BigRational::from(BigInt::from(2)))
            .unwrap();
        assert_eq!(v, BigRational::from(BigInt::from(2)));
    }

    #[test]
    fn value_group_collapse_scenario() {
        // gamma: Z -> point (surjective collapse); phi on point x Z
        let phi = decaying(vec!["n".into()], "n", 0);
        let gamma = DefinableMap {
            dom_vars: vec!["w".into()],
            out_vars: vec![],
            pieces: vec![(Piece::universe(), vec![])],
        };
        let sc = Scenario {
            id: "collapse".into(),
            w_vars: vec!["w".into()],
            wp_vars: vec![],
            x_vars: vec!["n".into()],
            gamma: GammaMap::Z(gamma),
            gamma_surjective: true,
            phi,
            oracle: OracleSettings::default(),
        };
        let r = check_commutativity(&sc).unwrap();
        assert!(r.verdict.passed(), "{:?}", r.verdict);
    }

    #[test]
    fn residue_square_map_scenario() {
        // gamma: xi -> xi^2 on the residue parameter of a class family
        let class = ExpClass::from_generator(Generator {
            variety: ResVariety::point(),
            xi: MPoly::var("u"),
        });
        let mut phi = decaying(vec!["n".into()], "n", 0);
        phi.terms[0].class = class;
        let mut subst = BTreeMap::new();
        subst.insert("u".to_string(), MPoly::var("v").pow(2));
        let sc = Scenario {
            id: "residue-square".into(),
            w_vars: vec!["n".into()],
            wp_vars: vec!["n".into()],
            x_vars: vec!["n".into()],
            gamma: GammaMap::Res(subst),
            gamma_surjective: false,
            phi,
            oracle: OracleSettings::default(),
        };
        let r = check_commutativity(&sc).unwrap();
        assert!(r.verdict.passed(), "{:?}", r.verdict);
    }

    #[test]
    fn non_surjective_embedding_direction_only() {
        // gamma: m -> 2m embeds Z into Z; phi = L^{-w-n} on w, n >= 0
        let piece = Piece::universe()
            .add_ineq(LinTerm::var("n").neg())
            .add_ineq(LinTerm::var("w").neg());
        let phi = CExpFn {
            zvars: vec!["w".into(), "n".into()],
            terms: vec![CTerm {
                class: ExpClass::one(),
                pres: PresTerm {
                    coeff: RingAElem::one(),
                    alphas: vec![],
                    beta: AffExpr::var("n").neg().sub(&AffExpr::var("w")),
                    support: piece,
                },
            }],
        };
        let gamma = DefinableMap::affine(
            vec!["m".into()],
            vec!["w".into()],
            vec![LinTerm::var("m").scale(&BigInt::from(2))],
        );
        let sc = Scenario {
            id: "embedding".into(),
            w_vars: vec!["m".into()],
            wp_vars: vec!["w".into()],
            x_vars: vec!["n".into()],
            gamma: GammaMap::Z(gamma),
            gamma_surjective: false,
            phi,
            oracle: OracleSettings::default(),
        };
        let r = check_commutativity(&sc).unwrap();
        assert!(r.verdict.passed(), "{:?}", r.verdict);
    }

    #[test]
    fn i_shriek_roundtrip() {
        let half = PresburgerSet::from_formula(
            &Formula::le(LinTerm::var("n").neg()),
            vec!["n".into()],
        )
        .unwrap();
        let all = PresburgerSet::universe(vec!["n".into()]);
        let phi = decaying(vec!["n".into()], "n", 0);
        let ext = i_shriek(&phi, &half, &all).unwrap();
        let back = ext.restrict(&half).unwrap();
        let r = compare("roundtrip", &ext, &back, &OracleSettings::default()).unwrap();
        assert!(r.verdict.passed());
    }

    #[test]
    fn i_shriek_rejects_non_subset() {
        let all = PresburgerSet::universe(vec!["n".into()]);
        let half = PresburgerSet::from_formula(
            &Formula::le(LinTerm::var("n").neg()),
            vec!["n".into()],
        )
        .unwrap();
        let phi = decaying(vec!["n".into()], "n", 0);
        assert!(matches!(
            i_shriek(&phi, &all, &half),
            Err(Error::NotASubset(_))
        ));
    }

    #[test]
    fn projection_formula_with_unit() {
        let beta = decaying(vec!["s".into(), "n".into()], "n", 0);
        let alpha = CExpFn::constant(vec!["s".into()], RingAElem::one());
        let r = check_projection_formula(
            "proj-unit",
            &alpha,
            &beta,
            &["n".into()],
            &OracleSettings::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::SymbolicEqual);
    }

    #[test]
    fn projection_formula_with_l_factor() {
        let beta = decaying(vec!["s".into(), "n".into()], "n", 0);
        let alpha = CExpFn::constant(vec!["s".into()], RingAElem::l_pow(1));
        let r = check_projection_formula(
            "proj-L",
            &alpha,
            &beta,
            &["n".into()],
            &OracleSettings::default(),
        )
        .unwrap();
        assert!(r.verdict.passed());
    }

    #[test]
    fn fubini_triangle() {
        let piece = Piece::universe()
            .add_ineq(LinTerm::var("m").neg())
            .add_ineq(LinTerm::var("m").sub(&LinTerm::var("n")));
        let phi = CExpFn {
            zvars: vec!["m".into(), "n".into()],
            terms: vec![CTerm {
                class: ExpClass::one(),
                pres: PresTerm {
                    coeff: RingAElem::one(),
                    alphas: vec![],
                    beta: AffExpr::var("n").scale(&BigInt::from(-2)),
                    support: piece,
                },
            }],
        };
        let r = check_fubini("fubini", &phi, "m", "n", &OracleSettings::default()).unwrap();
        assert!(r.verdict.passed());
    }

    #[test]
    fn graph_pushforward_matches_direct_projection() {
        let phi = decaying(vec!["a".into(), "b".into()], "b", 0)
            .restrict(
                &PresburgerSet::from_formula(
                    &Formula::and(vec![
                        Formula::le(LinTerm::var("a").neg()),
                        Formula::le(LinTerm::var("a").add_const(-4)),
                    ]),
                    vec!["a".into(), "b".into()],
                )
                .unwrap(),
            )
            .unwrap();
        // f: (a, b) -> s = a, a projection in graph form
        let f = DefinableMap::affine(
            vec!["a".into(), "b".into()],
            vec!["s".into()],
            vec![LinTerm::var("a")],
        );
        let direct = pushforward_z(&phi, &["b".into()])
            .unwrap()
            .pullback_z(&DefinableMap::affine(
                vec!["s".into()],
                vec!["a".into()],
                vec![LinTerm::var("s")],
            ))
            .unwrap();
        let r = check_graph_reduction(
            "graph",
            &phi,
            &f,
            &direct,
            &OracleSettings::default(),
        )
        .unwrap();
        assert!(r.verdict.passed(), "{:?}", r.verdict);
    }

    #[test]
    fn splitting_composition_localizes() {
        let piece = Piece::universe()
            .add_ineq(LinTerm::var("m").neg())
            .add_ineq(LinTerm::var("n").neg());
        let phi = CExpFn {
            zvars: vec!["m".into(), "n".into()],
            terms: vec![CTerm {
                class: ExpClass::one(),
                pres: PresTerm {
                    coeff: RingAElem::one(),
                    alphas: vec![],
                    beta: AffExpr::var("n").neg().sub(&AffExpr::var("m")),
                    support: piece,
                },
            }],
        };
        let reports = check_splitting_composition(
            "split",
            &phi,
            &GammaMap::Identity,
            &["m".into()],
            &["n".into()],
            &OracleSettings::default(),
        )
        .unwrap();
        assert_eq!(reports.len(), 3);
        assert!(reports.iter().all(|r| r.verdict.passed()));
    }

    #[test]
    fn unequal_verdict_carries_witness() {
        let a = decaying(vec!["n".into()], "n", 0);
        let b = decaying(vec!["n".into()], "n", 1);
        let r = compare("mismatch", &a, &b, &OracleSettings::default()).unwrap();
        match r.verdict {
            Verdict::Unequal(w) => assert!(!w.is_empty()),
            other => panic!("expected Unequal, got {other:?}"),
        }
    }
}
