//! Operator expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | factor
//! factor := atom ('^' nat)?
//! atom   := rational | 'u' | 'wp' | "wp'" | 'D' | 'd' i | 'w' i j "'"? | 'g2' | 'g3' | 'm' | '(' expr ')'
//! ```
//!
//! `m` is replaced by its bound value while parsing.  `g2`, `g3` are replaced
//! when bound and kept as symbols otherwise.  Products keep their written
//! order; lowering applies the Leibniz rule.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::cm::{CMOperator, Gen, Mono};
use crate::elliptic::{wp_prime_series, wp_series, EllipticElement, EllipticInvariants};
use crate::opalg::{DiffOp, OpError};
use crate::scalar::{parse_q, qi, Scalar, Q};
use crate::series::LaurentSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    U,
    Wp,
    WpPrime,
    D,
    /// `∂/∂x_i`, 1-based.
    Di(u8),
    /// `℘(x_i − x_j)` or its derivative, 1-based.
    W { i: u8, j: u8, prime: bool },
    G2,
    G3,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::U => write!(f, "u"),
            Symbol::Wp => write!(f, "wp"),
            Symbol::WpPrime => write!(f, "wp'"),
            Symbol::D => write!(f, "D"),
            Symbol::Di(i) => write!(f, "d{i}"),
            Symbol::W { i, j, prime } => write!(f, "w{i}{j}{}", if *prime { "'" } else { "" }),
            Symbol::G2 => write!(f, "g2"),
            Symbol::G3 => write!(f, "g3"),
        }
    }
}

/// Syntax tree of an operator expression.  Literals are nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorExpr {
    Num(Q),
    Sym(Symbol),
    Neg(Box<OperatorExpr>),
    Add(Box<OperatorExpr>, Box<OperatorExpr>),
    Sub(Box<OperatorExpr>, Box<OperatorExpr>),
    Mul(Box<OperatorExpr>, Box<OperatorExpr>),
    Pow(Box<OperatorExpr>, u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },
    #[error("parameter `{name}` is not bound (byte {offset})")]
    Unbound { name: String, offset: usize },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LowerError {
    #[error("symbol `{0}` is not available in this operator ring")]
    Symbol(String),
    #[error("particle index out of range in `{0}`")]
    Index(String),
    #[error(transparent)]
    Op(#[from] OpError),
}

/// Values substituted for parameters while parsing.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    pub m: Option<Q>,
    pub g2: Option<Q>,
    pub g3: Option<Q>,
}

fn num_node(v: &Q) -> OperatorExpr {
    if v < &Q::zero() {
        OperatorExpr::Neg(Box::new(OperatorExpr::Num(-v.clone())))
    } else {
        OperatorExpr::Num(v.clone())
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    bind: &'a Bindings,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn expr(&mut self) -> Result<OperatorExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = OperatorExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = OperatorExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<OperatorExpr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat('*') {
            lhs = OperatorExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<OperatorExpr, ParseError> {
        if self.eat('-') {
            return Ok(OperatorExpr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<OperatorExpr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            self.skip_ws();
            let d = self.digits();
            if d.is_empty() {
                return self.err("expected a nonnegative integer exponent");
            }
            let n: u32 = d.parse().map_err(|_| ParseError::Syntax {
                offset: self.pos,
                msg: "exponent too large".into(),
            })?;
            return Ok(OperatorExpr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<OperatorExpr, ParseError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.digits();
                let text = if self.src[self.pos..].starts_with('/') {
                    self.pos += 1;
                    let den = self.digits();
                    if den.is_empty() {
                        return self.err("expected denominator");
                    }
                    format!("{num}/{den}")
                } else {
                    num.to_string()
                };
                match parse_q(&text) {
                    Some(v) => Ok(OperatorExpr::Num(v)),
                    None => Err(ParseError::Syntax {
                        offset: start,
                        msg: format!("invalid rational `{text}`"),
                    }),
                }
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let mut end = self.pos;
                while self.src[end..].starts_with(|c: char| c.is_ascii_alphanumeric()) {
                    end += 1;
                }
                let word = &self.src[self.pos..end];
                self.pos = end;
                let prime = self.src[self.pos..].starts_with('\'');
                let sym = match word {
                    "u" => Symbol::U,
                    "wp" if prime => Symbol::WpPrime,
                    "wp" => Symbol::Wp,
                    "D" => Symbol::D,
                    "m" => {
                        return match &self.bind.m {
                            Some(v) => Ok(num_node(v)),
                            None => Err(ParseError::Unbound {
                                name: "m".into(),
                                offset: start,
                            }),
                        }
                    }
                    "g2" => {
                        return Ok(self.bind.g2.as_ref().map_or(OperatorExpr::Sym(Symbol::G2), num_node));
                    }
                    "g3" => {
                        return Ok(self.bind.g3.as_ref().map_or(OperatorExpr::Sym(Symbol::G3), num_node));
                    }
                    w if w.len() == 2 && w.starts_with('d') && w.as_bytes()[1].is_ascii_digit() => {
                        Symbol::Di(w.as_bytes()[1] - b'0')
                    }
                    w if w.len() == 3
                        && w.starts_with('w')
                        && w.as_bytes()[1].is_ascii_digit()
                        && w.as_bytes()[2].is_ascii_digit() =>
                    {
                        Symbol::W {
                            i: w.as_bytes()[1] - b'0',
                            j: w.as_bytes()[2] - b'0',
                            prime,
                        }
                    }
                    _ => {
                        return Err(ParseError::Syntax {
                            offset: start,
                            msg: format!("unknown symbol `{word}`"),
                        })
                    }
                };
                let takes_prime = matches!(sym, Symbol::WpPrime | Symbol::W { prime: true, .. });
                if prime && !takes_prime {
                    return self.err("unexpected `'`");
                }
                if takes_prime {
                    self.pos += 1;
                }
                Ok(OperatorExpr::Sym(sym))
            }
            Some(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}

pub fn parse_operator(src: &str) -> Result<OperatorExpr, ParseError> {
    parse_operator_with(src, &Bindings::default())
}

pub fn parse_operator_with(src: &str, bind: &Bindings) -> Result<OperatorExpr, ParseError> {
    let mut p = Parser { src, pos: 0, bind };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

impl OperatorExpr {
    fn prec(&self) -> u8 {
        match self {
            OperatorExpr::Add(..) | OperatorExpr::Sub(..) => 0,
            OperatorExpr::Mul(..) => 1,
            OperatorExpr::Neg(..) => 2,
            OperatorExpr::Pow(..) => 3,
            OperatorExpr::Num(_) | OperatorExpr::Sym(_) => 4,
        }
    }

    /// Symbols in order of appearance, with repetition.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                OperatorExpr::Num(_) => {}
                OperatorExpr::Sym(s) => out.push(*s),
                OperatorExpr::Neg(x) | OperatorExpr::Pow(x, _) => stack.push(x),
                OperatorExpr::Add(a, b) | OperatorExpr::Sub(a, b) | OperatorExpr::Mul(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
        out
    }

    fn write(&self, out: &mut String, min: u8) {
        let paren = self.prec() < min;
        if paren {
            out.push('(');
        }
        match self {
            OperatorExpr::Num(v) => out.push_str(&v.to_string()),
            OperatorExpr::Sym(s) => out.push_str(&s.to_string()),
            OperatorExpr::Neg(x) => {
                out.push('-');
                x.write(out, 2);
            }
            OperatorExpr::Add(a, b) | OperatorExpr::Sub(a, b) => {
                a.write(out, 0);
                out.push_str(if matches!(self, OperatorExpr::Add(..)) { " + " } else { " - " });
                b.write(out, 1);
            }
            OperatorExpr::Mul(a, b) => {
                a.write(out, 1);
                out.push('*');
                b.write(out, 2);
            }
            OperatorExpr::Pow(b, n) => {
                b.write(out, 4);
                out.push_str(&format!("^{n}"));
            }
        }
        if paren {
            out.push(')');
        }
    }

    /// Generic evaluation in any ring with the usual operations.
    fn fold<T: Clone>(
        &self,
        leaf: &impl Fn(&OperatorExpr) -> Result<T, LowerError>,
        ops: &RingOps<T>,
    ) -> Result<T, LowerError> {
        match self {
            OperatorExpr::Num(_) | OperatorExpr::Sym(_) => leaf(self),
            OperatorExpr::Neg(x) => Ok((ops.neg)(&x.fold(leaf, ops)?)),
            OperatorExpr::Add(a, b) => (ops.add)(&a.fold(leaf, ops)?, &b.fold(leaf, ops)?),
            OperatorExpr::Sub(a, b) => {
                let nb = (ops.neg)(&b.fold(leaf, ops)?);
                (ops.add)(&a.fold(leaf, ops)?, &nb)
            }
            OperatorExpr::Mul(a, b) => (ops.mul)(&a.fold(leaf, ops)?, &b.fold(leaf, ops)?),
            OperatorExpr::Pow(b, n) => {
                let base = b.fold(leaf, ops)?;
                let mut acc = (ops.one)();
                for _ in 0..*n {
                    acc = (ops.mul)(&acc, &base)?;
                }
                Ok(acc)
            }
        }
    }

    /// Lowers to an operator with coefficients in the elliptic ring of `inv`.
    pub fn to_elliptic_op(&self, inv: &Arc<EllipticInvariants>) -> Result<DiffOp<EllipticElement>, LowerError> {
        let zero = EllipticElement::zero(inv);
        let mult = |e: EllipticElement| DiffOp::multiplication(e);
        let leaf = |e: &OperatorExpr| -> Result<DiffOp<EllipticElement>, LowerError> {
            Ok(match e {
                OperatorExpr::Num(v) => mult(EllipticElement::constant(v.clone(), inv)),
                OperatorExpr::Sym(Symbol::Wp) => mult(EllipticElement::p(inv)),
                OperatorExpr::Sym(Symbol::WpPrime) => mult(EllipticElement::dp(inv)),
                OperatorExpr::Sym(Symbol::D) => DiffOp::d_pow(1, zero.clone()),
                OperatorExpr::Sym(Symbol::G2) => mult(EllipticElement::constant(inv.g2().clone(), inv)),
                OperatorExpr::Sym(Symbol::G3) => mult(EllipticElement::constant(inv.g3().clone(), inv)),
                OperatorExpr::Sym(s) => return Err(LowerError::Symbol(s.to_string())),
                _ => unreachable!(),
            })
        };
        let z = zero.clone();
        let ops = RingOps {
            one: Box::new(move || DiffOp::identity(z.clone())),
            neg: Box::new(|a: &DiffOp<EllipticElement>| a.neg()),
            add: Box::new(|a: &DiffOp<EllipticElement>, b: &DiffOp<EllipticElement>| Ok(a.add(b)?)),
            mul: Box::new(|a: &DiffOp<EllipticElement>, b: &DiffOp<EllipticElement>| Ok(a.compose(b)?)),
        };
        self.fold(&leaf, &ops)
    }

    /// Lowers to an operator with Laurent coefficients in the local
    /// coordinate `u` at the origin.
    pub fn to_series_op(
        &self,
        inv: &Arc<EllipticInvariants>,
        trunc: i64,
    ) -> Result<DiffOp<LaurentSeries<Q>>, LowerError> {
        let zero = LaurentSeries::<Q>::zero(trunc);
        let mult = |e: LaurentSeries<Q>| DiffOp::multiplication(e);
        let leaf = |e: &OperatorExpr| -> Result<DiffOp<LaurentSeries<Q>>, LowerError> {
            Ok(match e {
                OperatorExpr::Num(v) => mult(LaurentSeries::constant(v.clone(), trunc)),
                OperatorExpr::Sym(Symbol::U) => mult(LaurentSeries::var(trunc)),
                OperatorExpr::Sym(Symbol::Wp) => mult(wp_series(inv, trunc)),
                OperatorExpr::Sym(Symbol::WpPrime) => mult(wp_prime_series(inv, trunc)),
                OperatorExpr::Sym(Symbol::D) => DiffOp::d_pow(1, zero.clone()),
                OperatorExpr::Sym(Symbol::G2) => mult(LaurentSeries::constant(inv.g2().clone(), trunc)),
                OperatorExpr::Sym(Symbol::G3) => mult(LaurentSeries::constant(inv.g3().clone(), trunc)),
                OperatorExpr::Sym(s) => return Err(LowerError::Symbol(s.to_string())),
                _ => unreachable!(),
            })
        };
        let z = zero.clone();
        let ops = RingOps {
            one: Box::new(move || DiffOp::identity(z.clone())),
            neg: Box::new(|a: &DiffOp<LaurentSeries<Q>>| a.neg()),
            add: Box::new(|a: &DiffOp<LaurentSeries<Q>>, b: &DiffOp<LaurentSeries<Q>>| Ok(a.add(b)?)),
            mul: Box::new(|a: &DiffOp<LaurentSeries<Q>>, b: &DiffOp<LaurentSeries<Q>>| Ok(a.compose(b)?)),
        };
        self.fold(&leaf, &ops)
    }

    /// Lowers to an `n`-particle operator; `g2`, `g3` stay symbolic.
    pub fn to_cm_op(&self, n: usize, m: &Q) -> Result<CMOperator, LowerError> {
        let leaf = |e: &OperatorExpr| -> Result<CMOperator, LowerError> {
            let mut out = CMOperator::zero(n, m.clone());
            match e {
                OperatorExpr::Num(v) => out.add_term(vec![0; n], Mono::new(), v.clone()),
                OperatorExpr::Sym(s @ Symbol::Di(i)) => {
                    if *i == 0 || *i as usize > n {
                        return Err(LowerError::Index(s.to_string()));
                    }
                    out = CMOperator::d(n, m.clone(), *i as usize - 1, 1);
                }
                OperatorExpr::Sym(s @ Symbol::W { i, j, prime }) => {
                    let (i, j) = (*i as usize, *j as usize);
                    if i == 0 || j == 0 || i > n || j > n || i == j {
                        return Err(LowerError::Index(s.to_string()));
                    }
                    out = CMOperator::w(n, m.clone(), i - 1, j - 1, *prime as u8, qi(1));
                }
                OperatorExpr::Sym(Symbol::G2) => out.add_term(vec![0; n], Mono::from([(Gen::G2, 1)]), qi(1)),
                OperatorExpr::Sym(Symbol::G3) => out.add_term(vec![0; n], Mono::from([(Gen::G3, 1)]), qi(1)),
                OperatorExpr::Sym(s) => return Err(LowerError::Symbol(s.to_string())),
                _ => unreachable!(),
            }
            Ok(out)
        };
        let m1 = m.clone();
        let ops = RingOps {
            one: Box::new(move || CMOperator::identity(n, m1.clone())),
            neg: Box::new(|a: &CMOperator| a.scale(&qi(-1))),
            add: Box::new(|a: &CMOperator, b: &CMOperator| Ok(a.add(b))),
            mul: Box::new(|a: &CMOperator, b: &CMOperator| Ok(a.mul(b))),
        };
        self.fold(&leaf, &ops)
    }
}

type Binary<T> = Box<dyn Fn(&T, &T) -> Result<T, LowerError>>;

struct RingOps<T> {
    one: Box<dyn Fn() -> T>,
    neg: Box<dyn Fn(&T) -> T>,
    add: Binary<T>,
    mul: Binary<T>,
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s, 0);
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lame::build_lame;
    use crate::scalar::q;

    fn inv() -> Arc<EllipticInvariants> {
        EllipticInvariants::default_curve().into_arc()
    }

    #[test]
    fn lame_from_text() {
        let bind = Bindings {
            m: Some(qi(1)),
            ..Default::default()
        };
        let e = parse_operator_with("D^2 - m*(m+1)*wp", &bind).unwrap();
        assert_eq!(e.to_elliptic_op(&inv()).unwrap(), build_lame(&qi(1), &inv()));
    }

    #[test]
    fn canonical_commutation() {
        let e = parse_operator("D*u - u*D").unwrap();
        let op = e.to_series_op(&inv(), 20).unwrap();
        assert_eq!(op.order(), Some(0));
        assert!(op.coeff(0).agrees_below(&LaurentSeries::one(20), 19));
    }

    #[test]
    fn weierstrass_relation_vanishes() {
        let e = parse_operator("wp'^2 - 4*wp^3 + g2*wp + g3").unwrap();
        assert!(e.to_elliptic_op(&inv()).unwrap().is_zero());
    }

    #[test]
    fn display_grammar_reparses() {
        let e = parse_operator("D^3 - 3*wp*D - 3/2*wp'").unwrap();
        assert_eq!(e.to_string(), "D^3 - 3*wp*D - 3/2*wp'");
        let op = e.to_elliptic_op(&inv()).unwrap();
        assert_eq!(op.to_string(), "D^3 - 3*wp*D - 3/2*wp'");
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse_operator("D^2 + * wp"),
            Err(ParseError::Syntax {
                offset: 6,
                msg: "unexpected `*`".into()
            })
        );
        assert!(matches!(parse_operator("m*wp"), Err(ParseError::Unbound { offset: 0, .. })));
        assert!(parse_operator("D^x").is_err());
        assert!(parse_operator("(D").is_err());
    }

    #[test]
    fn negative_binding_round_trips() {
        let bind = Bindings {
            m: Some(q(-1, 2)),
            ..Default::default()
        };
        let e = parse_operator_with("m*wp", &bind).unwrap();
        assert_eq!(parse_operator(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn calogero_moser_text() {
        let e = parse_operator("d1^2 + d2^2 - 4*w12").unwrap();
        let op = e.to_cm_op(2, &qi(1)).unwrap();
        assert_eq!(op, crate::cm::build_cm(2, &qi(1)).1);
        assert_eq!(parse_operator(&op.to_string()).unwrap().to_cm_op(2, &qi(1)).unwrap(), op);
        assert!(parse_operator("w13").unwrap().to_cm_op(2, &qi(1)).is_err());
    }
}
