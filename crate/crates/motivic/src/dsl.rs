//! Scenario language: tokenizer, recursive-descent parser, and the
//! canonical printer whose output re-parses to an identical tree.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::constructible::{CExpFn, CTerm};
use crate::error::{Error, Result};
use crate::functoriality::{GammaMap, OracleSettings, Scenario};
use crate::presburger::{AffExpr, DefinableMap, LinTerm, Piece};
use crate::presfn::PresTerm;
use crate::residue::{ExpClass, Generator, MPoly, ResVariety};
use crate::ring::RingAElem;

#[derive(Clone, Debug, PartialEq)]
enum TokKind {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Tok {
    kind: TokKind,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            toks.push(Tok {
                kind: TokKind::Ident(s),
                line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            toks.push(Tok {
                kind: TokKind::Int(s.parse().unwrap()),
                line,
                col: start_col,
            });
            continue;
        }
        let two: Option<&'static str> = if i + 1 < chars.len() {
            match (c, chars[i + 1]) {
                ('-', '>') => Some("->"),
                (':', '=') => Some(":="),
                ('<', '=') => Some("<="),
                ('>', '=') => Some(">="),
                _ => None,
            }
        } else {
            None
        };
        if let Some(s) = two {
            toks.push(Tok {
                kind: TokKind::Sym(s),
                line,
                col: start_col,
            });
            i += 2;
            col += 2;
            continue;
        }
        let one: &'static str = match c {
            '(' => "(",
            ')' => ")",
            '{' => "{",
            '}' => "}",
            '[' => "[",
            ']' => "]",
            '^' => "^",
            '+' => "+",
            '-' => "-",
            '*' => "*",
            '/' => "/",
            ',' => ",",
            '=' => "=",
            '<' => "<",
            '>' => ">",
            _ => {
                return Err(Error::ParseError {
                    line,
                    col,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        };
        toks.push(Tok {
            kind: TokKind::Sym(one),
            line,
            col: start_col,
        });
        i += 1;
        col += 1;
    }
    toks.push(Tok {
        kind: TokKind::Eof,
        line,
        col,
    });
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = self.peek();
        Err(Error::ParseError {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        match &self.peek().kind {
            TokKind::Sym(t) if *t == s => {
                self.next();
                Ok(())
            }
            other => self.err(format!("expected '{s}', found {other:?}")),
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        match &self.peek().kind {
            TokKind::Ident(t) if t == kw => {
                self.next();
                Ok(())
            }
            other => self.err(format!("expected keyword '{kw}', found {other:?}")),
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().kind.clone() {
            TokKind::Ident(s) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other:?}")),
        }
    }

    fn int(&mut self) -> Result<BigInt> {
        match self.peek().kind.clone() {
            TokKind::Int(n) => {
                self.next();
                Ok(n)
            }
            TokKind::Sym("-") => {
                self.next();
                Ok(-self.int()?)
            }
            other => self.err(format!("expected integer, found {other:?}")),
        }
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Sym(t) if *t == s)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Ident(t) if t == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn var_list(&mut self) -> Result<Vec<String>> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.at_sym(")") {
            loop {
                out.push(self.ident()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    // ring expressions: integers, L with integer exponents, sums,
    // products, and division by powers of `1-L^-i`
    fn ring_expr(&mut self) -> Result<RingAElem> {
        let mut acc = if self.eat_sym("-") {
            self.ring_term()?.neg()
        } else {
            self.ring_term()?
        };
        loop {
            if self.eat_sym("+") {
                acc = acc.add(&self.ring_term()?);
            } else if self.eat_sym("-") {
                acc = acc.sub(&self.ring_term()?);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn ring_term(&mut self) -> Result<RingAElem> {
        let mut acc = self.ring_factor()?;
        loop {
            if self.eat_sym("*") {
                acc = acc.mul(&self.ring_factor()?);
            } else if self.eat_sym("/") {
                let t = self.peek().clone();
                let d = self.ring_factor()?;
                acc = acc.mul(&invert_one_minus_power(&d).ok_or(Error::ParseError {
                    line: t.line,
                    col: t.col,
                    msg: "division is only defined by powers of 1-L^-i".into(),
                })?);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn ring_factor(&mut self) -> Result<RingAElem> {
        let base = match self.peek().kind.clone() {
            TokKind::Int(n) => {
                self.next();
                RingAElem::int(n)
            }
            TokKind::Ident(s) if s == "L" => {
                self.next();
                if self.eat_sym("^") {
                    let e = self.int()?;
                    let e: i64 = e
                        .to_string()
                        .parse()
                        .map_err(|_| self.parse_err("exponent out of range"))?;
                    RingAElem::l_pow(e)
                } else {
                    RingAElem::l_pow(1)
                }
            }
            TokKind::Sym("(") => {
                self.next();
                let inner = self.ring_expr()?;
                self.expect_sym(")")?;
                inner
            }
            other => return self.err(format!("expected ring expression, found {other:?}")),
        };
        if self.eat_sym("^") {
            let e = self.int()?;
            if e.is_negative() {
                return self.err("negative exponent on a compound factor");
            }
            let e: u32 = e
                .to_string()
                .parse()
                .map_err(|_| self.parse_err("exponent out of range"))?;
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }

    fn parse_err(&self, msg: &str) -> Error {
        let t = self.peek();
        Error::ParseError {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        }
    }

    // affine expressions over integer variables
    fn aff_expr(&mut self) -> Result<AffExpr> {
        let mut acc = if self.eat_sym("-") {
            self.aff_term()?.neg()
        } else {
            self.aff_term()?
        };
        loop {
            if self.eat_sym("+") {
                acc = acc.add(&self.aff_term()?);
            } else if self.eat_sym("-") {
                acc = acc.sub(&self.aff_term()?);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn aff_term(&mut self) -> Result<AffExpr> {
        match self.peek().kind.clone() {
            TokKind::Int(n) => {
                self.next();
                if self.eat_sym("*") {
                    let v = self.ident()?;
                    Ok(AffExpr::var(&v).scale(&n))
                } else {
                    Ok(AffExpr::constant(n))
                }
            }
            TokKind::Ident(v) => {
                self.next();
                Ok(AffExpr::var(&v))
            }
            TokKind::Sym("(") => {
                self.next();
                let inner = self.aff_expr()?;
                self.expect_sym(")")?;
                self.expect_sym("/")?;
                let d = self.int()?;
                if d <= BigInt::zero() {
                    return self.err("denominator must be positive");
                }
                if inner.den != 1 {
                    return self.err("nested quotients are not supported");
                }
                let d: u64 = d
                    .to_string()
                    .parse()
                    .map_err(|_| self.parse_err("denominator out of range"))?;
                Ok(AffExpr::new(inner.num, d))
            }
            other => self.err(format!("expected affine expression, found {other:?}")),
        }
    }

    // residue polynomials
    fn poly_expr(&mut self) -> Result<MPoly> {
        let mut acc = if self.eat_sym("-") {
            self.poly_term()?.neg()
        } else {
            self.poly_term()?
        };
        loop {
            if self.eat_sym("+") {
                acc = acc.add(&self.poly_term()?);
            } else if self.eat_sym("-") {
                acc = acc.sub(&self.poly_term()?);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn poly_term(&mut self) -> Result<MPoly> {
        let mut acc = self.poly_factor()?;
        while self.eat_sym("*") {
            acc = acc.mul(&self.poly_factor()?);
        }
        Ok(acc)
    }

    fn poly_factor(&mut self) -> Result<MPoly> {
        let base = match self.peek().kind.clone() {
            TokKind::Int(n) => {
                self.next();
                MPoly::constant(n)
            }
            TokKind::Ident(v) => {
                self.next();
                MPoly::var(&v)
            }
            TokKind::Sym("(") => {
                self.next();
                let inner = self.poly_expr()?;
                self.expect_sym(")")?;
                inner
            }
            other => return self.err(format!("expected polynomial, found {other:?}")),
        };
        if self.eat_sym("^") {
            let e = self.int()?;
            if e.is_negative() {
                return self.err("negative exponent in a polynomial");
            }
            let e: u32 = e
                .to_string()
                .parse()
                .map_err(|_| self.parse_err("exponent out of range"))?;
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }

    // one comparison or congruence, normalized into the piece
    fn condition(&mut self, piece: Piece) -> Result<Piece> {
        let lhs = self.aff_expr()?;
        let op = match self.peek().kind.clone() {
            TokKind::Sym(s)
                if matches!(s, "<=" | ">=" | "<" | ">" | "=") =>
            {
                self.next();
                s
            }
            other => return self.err(format!("expected comparison, found {other:?}")),
        };
        let rhs = self.aff_expr()?;
        let diff = lhs.sub(&rhs);
        if diff.den != 1 {
            return self.err("conditions must have integral coefficients");
        }
        let d = diff.num;
        match op {
            "<=" => Ok(piece.add_ineq(d)),
            ">=" => Ok(piece.add_ineq(d.neg())),
            "<" => Ok(piece.add_ineq(d.add_const(1))),
            ">" => Ok(piece.add_ineq(d.neg().add_const(1))),
            "=" => {
                if self.at_kw("mod") {
                    self.next();
                    let m = self.int()?;
                    if m <= BigInt::one() {
                        return self.err("modulus must exceed 1");
                    }
                    Ok(piece.add_cong(d, m))
                } else {
                    Ok(piece.add_ineq(d.clone()).add_ineq(d.neg()))
                }
            }
            _ => unreachable!(),
        }
    }
}

/// Recognize powers of `1-L^-i` so the parser can divide by them.
fn invert_one_minus_power(d: &RingAElem) -> Option<RingAElem> {
    for i in 1..=16u32 {
        let base = RingAElem::one_minus_l_neg(i);
        let mut acc = RingAElem::one();
        for m in 1..=8u32 {
            acc = acc.mul(&base);
            if acc.is_equal(d) {
                return Some(RingAElem::inv_one_minus_l_neg(i).pow(m));
            }
        }
    }
    None
}

fn validation(msg: impl Into<String>) -> Error {
    Error::ValidationError(msg.into())
}

/// Parse one scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    p.expect_kw("scenario")?;
    let id = p.ident()?;

    let mut spaces: BTreeMap<String, Vec<String>> = BTreeMap::new();
    while p.at_kw("space") {
        p.next();
        let name = p.ident()?;
        if !matches!(name.as_str(), "W" | "Wp" | "X") {
            return Err(p.parse_err("space must be one of W, Wp, X"));
        }
        if spaces.contains_key(&name) {
            return Err(validation(format!("space {name} declared twice")));
        }
        let vars = p.var_list()?;
        spaces.insert(name, vars);
    }
    if !p.at_kw("map") {
        return p.err("expected 'space' or 'map'");
    }
    let w_vars = spaces.remove("W").unwrap_or_default();
    let wp_vars = spaces.remove("Wp").unwrap_or_default();
    let x_vars = spaces
        .remove("X")
        .ok_or_else(|| validation("space X missing".to_string()))?;

    p.expect_kw("map")?;
    let gamma = if p.at_kw("identity") {
        p.next();
        GammaMap::Identity
    } else if p.at_kw("zaffine") {
        p.next();
        let dom = p.var_list()?;
        p.expect_sym("->")?;
        let out = p.var_list()?;
        p.expect_sym("[")?;
        let mut exprs = Vec::new();
        if !p.at_sym("]") {
            loop {
                let e = p.aff_expr()?;
                if e.den != 1 {
                    return Err(validation(
                        "map zaffine: components must be integral".to_string(),
                    ));
                }
                exprs.push(e.num);
                if !p.eat_sym(",") {
                    break;
                }
            }
        }
        p.expect_sym("]")?;
        if dom != w_vars {
            return Err(validation(format!(
                "map zaffine: domain {dom:?} does not match space W {w_vars:?}"
            )));
        }
        if out != wp_vars {
            return Err(validation(format!(
                "map zaffine: target {out:?} does not match space Wp {wp_vars:?}"
            )));
        }
        if exprs.len() != out.len() {
            return Err(validation(format!(
                "map zaffine: {} components for {} target coordinates",
                exprs.len(),
                out.len()
            )));
        }
        GammaMap::Z(DefinableMap::affine(dom, out, exprs))
    } else if p.at_kw("res") {
        p.next();
        p.expect_sym("(")?;
        let mut subst = BTreeMap::new();
        loop {
            let v = p.ident()?;
            p.expect_sym(":=")?;
            let poly = p.poly_expr()?;
            subst.insert(v, poly);
            if !p.eat_sym(",") {
                break;
            }
        }
        p.expect_sym(")")?;
        GammaMap::Res(subst)
    } else {
        return p.err("expected identity, zaffine, or res");
    };

    p.expect_kw("surjective")?;
    let surj_word = p.ident()?;
    let gamma_surjective = match surj_word.as_str() {
        "true" => true,
        "false" => false,
        _ => return Err(p.parse_err("surjective expects true or false")),
    };

    p.expect_kw("function")?;
    p.expect_sym("{")?;
    let phi_vars: Vec<String> = wp_vars.iter().chain(&x_vars).cloned().collect();
    let mut terms = Vec::new();
    while p.at_kw("term") {
        p.next();
        p.expect_sym("{")?;
        p.expect_kw("coeff")?;
        let coeff = p.ring_expr()?;
        let mut alphas = Vec::new();
        while p.at_kw("factor") {
            p.next();
            alphas.push(p.aff_expr()?);
        }
        p.expect_kw("lpow")?;
        let beta = p.aff_expr()?;
        let mut class = ExpClass::one();
        if p.at_kw("char") {
            p.next();
            p.expect_kw("e")?;
            p.expect_sym("(")?;
            let xi = p.poly_expr()?;
            p.expect_sym(")")?;
            class = ExpClass::from_generator(Generator {
                variety: ResVariety::point(),
                xi,
            });
        }
        let mut support = Piece::universe();
        while p.at_kw("where") {
            p.next();
            support = p.condition(support)?;
        }
        p.expect_sym("}")?;
        for v in support
            .free_vars()
            .iter()
            .chain(beta.num.vars().map(|s| s.to_string()).collect::<Vec<_>>().iter())
        {
            if !phi_vars.contains(v) {
                return Err(validation(format!(
                    "term references undeclared variable {v}"
                )));
            }
        }
        terms.push(CTerm {
            class,
            pres: PresTerm {
                coeff,
                alphas,
                beta,
                support,
            },
        });
    }
    p.expect_sym("}")?;

    let mut oracle = OracleSettings {
        qs: Vec::new(),
        primes: Vec::new(),
        level: 4,
        box_radius: 3,
    };
    if p.at_kw("oracle") {
        p.next();
        p.expect_sym("{")?;
        while !p.at_sym("}") {
            let key = p.ident()?;
            match key.as_str() {
                "q" => {
                    let n = p.int()?;
                    let d = if p.eat_sym("/") { p.int()? } else { BigInt::one() };
                    oracle.qs.push(BigRational::new(n, d));
                }
                "prime" => {
                    let n = p.int()?;
                    let n: u64 = n
                        .to_string()
                        .parse()
                        .map_err(|_| p.parse_err("prime out of range"))?;
                    oracle.primes.push(n);
                }
                "level" => {
                    let n = p.int()?;
                    oracle.level = n
                        .to_string()
                        .parse()
                        .map_err(|_| p.parse_err("level out of range"))?;
                }
                "box" => {
                    let n = p.int()?;
                    oracle.box_radius = n
                        .to_string()
                        .parse()
                        .map_err(|_| p.parse_err("box out of range"))?;
                }
                other => return Err(p.parse_err(&format!("unknown oracle key '{other}'"))),
            }
        }
        p.expect_sym("}")?;
    }
    if oracle.qs.is_empty() {
        oracle.qs = OracleSettings::default().qs;
    }
    if oracle.primes.is_empty() {
        oracle.primes = OracleSettings::default().primes;
    }

    match &p.peek().kind {
        TokKind::Eof => {}
        other => return p.err(format!("unexpected trailing input {other:?}")),
    }

    Ok(Scenario {
        id,
        w_vars,
        wp_vars,
        x_vars,
        gamma,
        gamma_surjective,
        phi: CExpFn {
            zvars: phi_vars,
            terms,
        },
        oracle,
    })
}

fn print_lin(t: &LinTerm) -> String {
    let mut out = String::new();
    let mut first = true;
    for (v, c) in &t.coeffs {
        if c.is_zero() {
            continue;
        }
        let a = c.abs();
        let body = if a.is_one() {
            v.clone()
        } else {
            format!("{a}*{v}")
        };
        if first {
            if c.is_negative() {
                out.push('-');
            }
            out.push_str(&body);
            first = false;
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
            out.push_str(&body);
        }
    }
    let k = &t.constant;
    if !k.is_zero() || first {
        if first {
            out.push_str(&k.to_string());
        } else {
            out.push_str(if k.is_negative() { " - " } else { " + " });
            out.push_str(&k.abs().to_string());
        }
    }
    out
}

fn print_aff(e: &AffExpr) -> String {
    if e.den == 1 {
        print_lin(&e.num)
    } else {
        format!("({})/{}", print_lin(&e.num), e.den)
    }
}

fn print_poly(poly: &MPoly) -> String {
    if poly.terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    let mut first = true;
    for (mono, c) in &poly.terms {
        if c.is_zero() {
            continue;
        }
        let a = c.abs();
        let mut factors = Vec::new();
        if !a.is_one() || mono.is_empty() {
            factors.push(a.to_string());
        }
        for (v, e) in mono {
            if *e == 1 {
                factors.push(v.clone());
            } else {
                factors.push(format!("{v}^{e}"));
            }
        }
        let body = factors.join("*");
        if first {
            if c.is_negative() {
                out.push('-');
            }
            out.push_str(&body);
            first = false;
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
            out.push_str(&body);
        }
    }
    out
}

fn print_vars(vars: &[String]) -> String {
    format!("({})", vars.join(", "))
}

/// Canonical form of a function, shared by the printer and the CLI.
pub fn print_function(f: &CExpFn) -> String {
    let mut out = String::from("function {\n");
    for t in &f.terms {
        out.push_str("  term {\n");
        out.push_str(&format!("    coeff {}\n", t.pres.coeff.render_surface()));
        for a in &t.pres.alphas {
            out.push_str(&format!("    factor {}\n", print_aff(a)));
        }
        out.push_str(&format!("    lpow {}\n", print_aff(&t.pres.beta)));
        if t.class != ExpClass::one() {
            // only point-variety single-generator classes have a surface form
            if t.class.gens.len() == 1 && t.class.gens[0].1.variety.vars.is_empty() {
                let (c, g) = &t.class.gens[0];
                if c.is_one() {
                    out.push_str(&format!("    char e({})\n", print_poly(&g.xi)));
                } else {
                    out.push_str(&format!(
                        "    char e({}) # weight {c}\n",
                        print_poly(&g.xi)
                    ));
                }
            } else {
                out.push_str(&format!("    # class with {} generators\n", t.class.gens.len()));
            }
        }
        for ineq in &t.pres.support.ineqs {
            out.push_str(&format!("    where {} <= 0\n", print_lin(ineq)));
        }
        for (lin, m) in &t.pres.support.congs {
            out.push_str(&format!("    where {} = 0 mod {}\n", print_lin(lin), m));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

/// Canonical printing; `parse_scenario(print_scenario(s))` rebuilds `s`.
pub fn print_scenario(sc: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario {}\n", sc.id));
    out.push_str(&format!("space W {}\n", print_vars(&sc.w_vars)));
    out.push_str(&format!("space Wp {}\n", print_vars(&sc.wp_vars)));
    out.push_str(&format!("space X {}\n", print_vars(&sc.x_vars)));
    match &sc.gamma {
        GammaMap::Identity => out.push_str("map identity\n"),
        GammaMap::Z(m) => {
            let exprs: Vec<String> = m.pieces[0]
                .1
                .iter()
                .map(|e| print_lin(&e.num))
                .collect();
            out.push_str(&format!(
                "map zaffine {} -> {} [{}]\n",
                print_vars(&m.dom_vars),
                print_vars(&m.out_vars),
                exprs.join(", ")
            ));
        }
        GammaMap::Res(subst) => {
            let parts: Vec<String> = subst
                .iter()
                .map(|(v, poly)| format!("{v} := {}", print_poly(poly)))
                .collect();
            out.push_str(&format!("map res ({})\n", parts.join(", ")));
        }
    }
    out.push_str(&format!("surjective {}\n", sc.gamma_surjective));
    out.push_str(&print_function(&sc.phi));
    out.push_str("oracle {\n");
    for q in &sc.oracle.qs {
        if q.is_integer() {
            out.push_str(&format!("  q {}\n", q.numer()));
        } else {
            out.push_str(&format!("  q {}/{}\n", q.numer(), q.denom()));
        }
    }
    for p in &sc.oracle.primes {
        out.push_str(&format!("  prime {p}\n"));
    }
    out.push_str(&format!("  level {}\n", sc.oracle.level));
    out.push_str(&format!("  box {}\n", sc.oracle.box_radius));
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GEO: &str = r#"
scenario geo
space W ()
space Wp ()
space X (n)
map identity
surjective true
function {
  term {
    coeff 1
    lpow -n
    where -n <= 0
  }
}
oracle {
  q 2
  q 3
  level 4
  box 3
}
"#;

    #[test]
    fn minimal_scenario_parses() {
        let sc = parse_scenario(GEO).unwrap();
        assert_eq!(sc.id, "geo");
        assert_eq!(sc.x_vars, vec!["n".to_string()]);
        assert_eq!(sc.phi.terms.len(), 1);
    }

    #[test]
    fn misspelled_keyword_reports_location() {
        let bad = GEO.replace("surjective", "surjectve");
        match parse_scenario(&bad) {
            Err(Error::ParseError { line, col, .. }) => {
                assert!(line > 1);
                assert!(col >= 1);
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_is_a_validation_error() {
        let bad = GEO.replace(
            "map identity",
            "map zaffine (a, b) -> () []",
        );
        match parse_scenario(&bad) {
            Err(Error::ValidationError(msg)) => assert!(msg.contains("zaffine")),
            other => panic!("expected ValidationError, got {other:?}"),
        }
    }

    #[test]
    fn unknown_oracle_key_rejected() {
        let bad = GEO.replace("box 3", "boks 3");
        assert!(matches!(
            parse_scenario(&bad),
            Err(Error::ParseError { .. })
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let sc = parse_scenario(GEO).unwrap();
        let printed = print_scenario(&sc);
        let sc2 = parse_scenario(&printed).unwrap();
        assert_eq!(printed, print_scenario(&sc2));
    }

    #[test]
    fn ring_expression_round_trip() {
        for src in [
            "1/(1-L^-1)",
            "L^2",
            "3*L + 1",
            "(1 + L)*L^-2/(1-L^-2)^2",
            "-5",
        ] {
            let mut p = Parser {
                toks: lex(src).unwrap(),
                pos: 0,
            };
            let e = p.ring_expr().unwrap();
            let printed = e.render_surface();
            let mut p2 = Parser {
                toks: lex(&printed).unwrap(),
                pos: 0,
            };
            let e2 = p2.ring_expr().unwrap();
            assert!(e.is_equal(&e2), "{src} -> {printed}");
            assert_eq!(printed, e2.render_surface());
        }
    }

    #[test]
    fn residue_map_and_char_round_trip() {
        let src = r#"
scenario twist
space W (n)
space Wp (n)
space X ()
map res (u := v^2)
surjective false
function {
  term {
    coeff 1
    lpow 0
    char e(u)
    where -n <= 0
  }
}
"#;
        let sc = parse_scenario(src).unwrap();
        let printed = print_scenario(&sc);
        let sc2 = parse_scenario(&printed).unwrap();
        assert_eq!(printed, print_scenario(&sc2));
        assert!(matches!(sc.gamma, GammaMap::Res(_)));
    }

    #[test]
    fn congruence_condition_round_trip() {
        let src = GEO.replace("where -n <= 0", "where -n <= 0\n    where n = 0 mod 2");
        let sc = parse_scenario(&src).unwrap();
        assert_eq!(sc.phi.terms[0].pres.support.congs.len(), 1);
        let printed = print_scenario(&sc);
        assert_eq!(printed, print_scenario(&parse_scenario(&printed).unwrap()));
    }
}
