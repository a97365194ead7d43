//! Ordinary differential operators `Σ a_j D^j` over a differential ring.
//!
//! Two coefficient rings are supported: truncated Laurent series in the local
//! coordinate `u` (the formal disc, `D = d/du`) and the elliptic ring
//! `Q[p, p′]` (`D = d/dx`).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::elliptic::{EllipticElement, EllipticInvariants};
use crate::scalar::{binomial, qi, Scalar, Q};
use crate::series::{fmt_term, join_terms, LaurentSeries};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("operands live over different coefficient rings")]
    RingMismatch,
}

/// A commutative ring with a derivation, as needed by [`DiffOp`].
pub trait DiffRing: Clone + PartialEq + fmt::Debug + fmt::Display {
    /// The zero of the ring `self` lives in.
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn ring_is_zero(&self) -> bool;
    fn ring_add(&self, other: &Self) -> Self;
    fn ring_sub(&self, other: &Self) -> Self;
    fn ring_mul(&self, other: &Self) -> Self;
    fn ring_neg(&self) -> Self;
    fn ring_scale(&self, c: &Q) -> Self;
    fn derivation(&self) -> Self;
    /// Whether two elements can be combined (same curve, same field).
    fn compatible(&self, other: &Self) -> bool;
    /// Invertibility in the ring.
    fn is_unit(&self) -> bool;
}

impl<S: Scalar> DiffRing for LaurentSeries<S> {
    fn zero_like(&self) -> Self {
        LaurentSeries::zero(self.trunc().max(0))
    }
    fn one_like(&self) -> Self {
        LaurentSeries::one(self.trunc().max(0))
    }
    fn ring_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn ring_add(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn ring_sub(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn ring_neg(&self) -> Self {
        self.neg()
    }
    fn ring_scale(&self, c: &Q) -> Self {
        self.scale(&S::from_q(c))
    }
    fn derivation(&self) -> Self {
        self.derive()
    }
    fn compatible(&self, _other: &Self) -> bool {
        true
    }
    fn is_unit(&self) -> bool {
        !self.is_zero() && self.valuation() == 0
    }
}

impl DiffRing for EllipticElement {
    fn zero_like(&self) -> Self {
        EllipticElement::zero(self.invariants())
    }
    fn one_like(&self) -> Self {
        EllipticElement::one(self.invariants())
    }
    fn ring_is_zero(&self) -> bool {
        self.is_zero()
    }
    fn ring_add(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn ring_sub(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn ring_mul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn ring_neg(&self) -> Self {
        self.neg()
    }
    fn ring_scale(&self, c: &Q) -> Self {
        self.scale(c)
    }
    fn derivation(&self) -> Self {
        self.ring_derive()
    }
    fn compatible(&self, other: &Self) -> bool {
        self.same_curve(other)
    }
    fn is_unit(&self) -> bool {
        self.as_constant().is_some_and(|c| !c.is_zero())
    }
}

/// `Σ_{j=0}^{N} a_j D^j` with `a_N ≠ 0`; the zero operator has no order.
#[derive(Clone, PartialEq, Debug)]
pub struct DiffOp<R> {
    coeffs: Vec<R>,
    zero: R,
}

impl<R: DiffRing> DiffOp<R> {
    /// Operator from coefficients `a_0, a_1, …`; trailing zeros are dropped.
    /// `zero` fixes the ring (and is kept for the zero operator).
    pub fn new(coeffs: Vec<R>, zero: R) -> Self {
        let mut op = DiffOp {
            coeffs,
            zero: zero.zero_like(),
        };
        op.normalize();
        op
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(R::ring_is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn zero_op(zero: R) -> Self {
        DiffOp::new(Vec::new(), zero)
    }

    /// Multiplication by the ring element `a`.
    pub fn multiplication(a: R) -> Self {
        let z = a.zero_like();
        DiffOp::new(vec![a], z)
    }

    pub fn identity(zero: R) -> Self {
        DiffOp::multiplication(zero.one_like())
    }

    /// `D^k`.
    pub fn d_pow(k: usize, zero: R) -> Self {
        let mut coeffs = vec![zero.zero_like(); k + 1];
        coeffs[k] = zero.one_like();
        DiffOp::new(coeffs, zero)
    }

    /// `None` for the zero operator.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    /// Coefficient of `D^j` (zero beyond the order).
    pub fn coeff(&self, j: usize) -> R {
        self.coeffs.get(j).cloned().unwrap_or_else(|| self.zero.clone())
    }

    pub fn leading(&self) -> Option<&R> {
        self.coeffs.last()
    }

    pub fn ring_zero(&self) -> &R {
        &self.zero
    }

    fn check(&self, other: &Self) -> Result<(), OpError> {
        if self.zero.compatible(&other.zero) {
            Ok(())
        } else {
            Err(OpError::RingMismatch)
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&R, &R) -> R) -> Result<Self, OpError> {
        self.check(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|j| f(&self.coeff(j), &other.coeff(j))).collect();
        Ok(DiffOp::new(coeffs, self.zero.clone()))
    }

    pub fn add(&self, other: &Self) -> Result<Self, OpError> {
        self.zip_with(other, R::ring_add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OpError> {
        self.zip_with(other, R::ring_sub)
    }

    pub fn neg(&self) -> Self {
        DiffOp::new(
            self.coeffs.iter().map(R::ring_neg).collect(),
            self.zero.clone(),
        )
    }

    pub fn scale(&self, c: &Q) -> Self {
        DiffOp::new(
            self.coeffs.iter().map(|a| a.ring_scale(c)).collect(),
            self.zero.clone(),
        )
    }

    /// `a ∘ self` for a ring element `a`.
    pub fn left_mul(&self, a: &R) -> Self {
        DiffOp::new(
            self.coeffs.iter().map(|c| a.ring_mul(c)).collect(),
            self.zero.clone(),
        )
    }

    /// `self ∘ other`, expanding `D^i ∘ b = Σ_k C(i,k) b^{(k)} D^{i−k}`.
    pub fn compose(&self, other: &Self) -> Result<Self, OpError> {
        self.check(other)?;
        let (Some(na), Some(nb)) = (self.order(), other.order()) else {
            return Ok(DiffOp::zero_op(self.zero.clone()));
        };
        let mut out = vec![self.zero.clone(); na + nb + 1];
        for (j, b) in other.coeffs.iter().enumerate() {
            if b.ring_is_zero() {
                continue;
            }
            let mut derivs = vec![b.clone()];
            for k in 1..=na {
                let next = derivs[k - 1].derivation();
                derivs.push(next);
            }
            for (i, a) in self.coeffs.iter().enumerate() {
                if a.ring_is_zero() {
                    continue;
                }
                for (k, bk) in derivs.iter().enumerate().take(i + 1) {
                    if bk.ring_is_zero() {
                        continue;
                    }
                    let term = a.ring_mul(bk).ring_scale(&qi(binomial(i, k) as i64));
                    let idx = i - k + j;
                    out[idx] = out[idx].ring_add(&term);
                }
            }
        }
        Ok(DiffOp::new(out, self.zero.clone()))
    }

    /// `[self, other] = self∘other − other∘self`.
    pub fn commutator(&self, other: &Self) -> Result<Self, OpError> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// Formal adjoint: `D* = −D`, `a* = a`, anti-multiplicative.
    pub fn adjoint(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![self.zero.clone(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            let mut d = a.clone();
            for k in 0..=i {
                if k > 0 {
                    d = d.derivation();
                }
                let mut c = qi(binomial(i, k) as i64);
                if i % 2 == 1 {
                    c = -c;
                }
                out[i - k] = out[i - k].ring_add(&d.ring_scale(&c));
            }
        }
        DiffOp::new(out, self.zero.clone())
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = DiffOp::identity(self.zero.clone());
        for _ in 0..n {
            acc = acc.compose(self).expect("same ring");
        }
        acc
    }

    /// `P(self)` for `P` given by rational coefficients, constant first.
    pub fn poly(&self, p: &[Q]) -> Self {
        let mut acc = DiffOp::zero_op(self.zero.clone());
        for c in p.iter().rev() {
            acc = acc.compose(self).expect("same ring");
            let shift = DiffOp::identity(self.zero.clone()).scale(c);
            acc = acc.add(&shift).expect("same ring");
        }
        acc
    }

    pub fn map<T: DiffRing>(&self, zero: T, f: impl Fn(&R) -> T) -> DiffOp<T> {
        DiffOp::new(self.coeffs.iter().map(f).collect(), zero)
    }
}

impl<S: Scalar> DiffOp<LaurentSeries<S>> {
    /// `Σ a_j ψ^{(j)}`.
    pub fn apply(&self, psi: &LaurentSeries<S>) -> LaurentSeries<S> {
        let mut acc = LaurentSeries::zero(psi.trunc());
        let mut d = psi.clone();
        for (j, a) in self.coeffs.iter().enumerate() {
            if j > 0 {
                d = d.derive();
            }
            if !a.is_zero() {
                acc = acc.add(&a.mul(&d));
            } else {
                acc = acc.truncate(d.trunc().min(acc.trunc()));
            }
        }
        acc
    }
}

impl DiffOp<EllipticElement> {
    pub fn invariants(&self) -> &Arc<EllipticInvariants> {
        self.zero.invariants()
    }

    /// Elliptic zero operator on a curve.
    pub fn zero_on(inv: &Arc<EllipticInvariants>) -> Self {
        DiffOp::zero_op(EllipticElement::zero(inv))
    }

    /// Embeds the coefficients as Laurent series at a pole of `℘`.
    pub fn embed(&self, trunc: i64) -> DiffOp<LaurentSeries<Q>> {
        self.map(LaurentSeries::zero(trunc), |a| a.embed(trunc))
    }

    /// Applies the operator to a series in the coordinate centred at a
    /// lattice point, embedding the coefficients first.
    pub fn apply(&self, psi: &LaurentSeries<Q>) -> LaurentSeries<Q> {
        let t = psi.trunc() + 2 * self.coeffs.len() as i64 + 4;
        self.embed(t).apply(psi)
    }

    /// Weighted homogeneity: `a_j` has weight `w − j` for every `j`.
    pub fn homogeneous_weight(&self) -> Option<u32> {
        let top = self.order()? as u32;
        for (j, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            if a.weight()? + j as u32 != top {
                return None;
            }
        }
        Some(top)
    }
}

fn d_str(j: usize) -> String {
    match j {
        0 => String::new(),
        1 => "D".to_string(),
        _ => format!("D^{j}"),
    }
}

fn join_mono(a: &str, b: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => b.to_string(),
        (_, true) => a.to_string(),
        _ => format!("{a}*{b}"),
    }
}

impl fmt::Display for DiffOp<EllipticElement> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut terms = Vec::new();
        for (j, a) in self.coeffs.iter().enumerate().rev() {
            let mut ts: Vec<_> = a.terms().collect();
            ts.reverse();
            for (pa, pb, c) in ts {
                let mono = join_mono(
                    &crate::elliptic::exact::elliptic_monomial_str(pa, pb),
                    &d_str(j),
                );
                terms.push(fmt_term(&c.to_string(), &mono));
            }
        }
        write!(f, "{}", join_terms(&terms))
    }
}

impl<S: Scalar> fmt::Display for DiffOp<LaurentSeries<S>> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut terms = Vec::new();
        for (j, a) in self.coeffs.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let body = format!("({a})");
            terms.push((false, join_mono(&body, &d_str(j))));
        }
        write!(f, "{}", join_terms(&terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn curve() -> Arc<EllipticInvariants> {
        EllipticInvariants::default_curve().into_arc()
    }

    fn lame(m: Q, inv: &Arc<EllipticInvariants>) -> DiffOp<EllipticElement> {
        let c = -(&m * (&m + qi(1)));
        DiffOp::new(
            vec![
                EllipticElement::p(inv).scale(&c),
                EllipticElement::zero(inv),
                EllipticElement::one(inv),
            ],
            EllipticElement::zero(inv),
        )
    }

    #[test]
    fn leibniz_base_case() {
        let z = LaurentSeries::<Q>::zero(20);
        let d = DiffOp::d_pow(1, z.clone());
        let u = DiffOp::multiplication(LaurentSeries::var(20));
        let du = d.compose(&u).unwrap();
        assert_eq!(du.order(), Some(1));
        assert_eq!(du.coeff(1), LaurentSeries::var(20));
        assert!(du.coeff(0).sub(&LaurentSeries::one(20)).is_zero());
    }

    #[test]
    fn d2_commutator_with_wp() {
        let inv = curve();
        let z = EllipticElement::zero(&inv);
        let d2 = DiffOp::d_pow(2, z.clone());
        let p = DiffOp::multiplication(EllipticElement::p(&inv));
        let c = d2.commutator(&p).unwrap();
        assert_eq!(c.coeff(1), EllipticElement::dp(&inv).scale(&qi(2)));
        let expect = EllipticElement::monomial(qi(6), 2, 0, &inv)
            .sub(&EllipticElement::constant(q(1, 2) * inv.g2(), &inv));
        assert_eq!(c.coeff(0), expect);
    }

    #[test]
    fn adjoint_examples() {
        let inv = curve();
        let z = EllipticElement::zero(&inv);
        assert_eq!(DiffOp::d_pow(1, z.clone()).adjoint(), DiffOp::d_pow(1, z.clone()).neg());
        assert_eq!(DiffOp::d_pow(3, z.clone()).adjoint(), DiffOp::d_pow(3, z.clone()).neg());
        let l = lame(q(3, 2), &inv);
        assert_eq!(l.adjoint(), l);
    }

    #[test]
    fn lame_commutes_with_polynomials_in_itself() {
        let inv = curve();
        let l = lame(qi(2), &inv);
        let p = l.poly(&[q(1, 3), qi(-2), qi(5), qi(1)]);
        assert!(l.commutator(&p).unwrap().is_zero());
        assert_eq!(p.order(), Some(6));
    }

    #[test]
    fn ring_mismatch() {
        let a = DiffOp::d_pow(1, EllipticElement::zero(&curve()));
        let other = EllipticInvariants::new(qi(1), qi(1)).unwrap().into_arc();
        let b = DiffOp::d_pow(1, EllipticElement::zero(&other));
        assert_eq!(a.compose(&b), Err(OpError::RingMismatch));
    }

    #[test]
    fn apply_examples() {
        let z = LaurentSeries::<Q>::zero(20);
        let u3 = LaurentSeries::monomial(qi(1), 3, 20);
        let out = DiffOp::d_pow(2, z.clone()).apply(&u3);
        assert!(out.sub(&LaurentSeries::monomial(qi(6), 1, 20)).is_zero());
        let id = DiffOp::identity(z);
        assert!(id.apply(&u3).sub(&u3).is_zero());
    }

    #[test]
    fn display_grammar() {
        let inv = curve();
        let q1 = DiffOp::new(
            vec![
                EllipticElement::dp(&inv).scale(&q(-3, 2)),
                EllipticElement::p(&inv).scale(&qi(-3)),
                EllipticElement::zero(&inv),
                EllipticElement::one(&inv),
            ],
            EllipticElement::zero(&inv),
        );
        assert_eq!(q1.to_string(), "D^3 - 3*wp*D - 3/2*wp'");
    }
}
