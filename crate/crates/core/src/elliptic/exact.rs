use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::EllipticError;
use crate::scalar::{q, qi, Scalar, Q};
use crate::series::{fmt_term, join_terms, LaurentSeries};

/// Rational Weierstrass invariants of a smooth curve `p′² = 4p³ − g2·p − g3`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EllipticInvariants {
    g2: Q,
    g3: Q,
}

impl EllipticInvariants {
    pub fn new(g2: Q, g3: Q) -> Result<Self, EllipticError> {
        let inv = EllipticInvariants { g2, g3 };
        if inv.discriminant().is_zero() {
            return Err(EllipticError::Degenerate);
        }
        Ok(inv)
    }

    /// Skips the discriminant check. Only meant for exercising the series
    /// recursion on degenerate input.
    #[doc(hidden)]
    pub fn new_unchecked(g2: Q, g3: Q) -> Self {
        EllipticInvariants { g2, g3 }
    }

    /// The default test curve `g2 = 4, g3 = 1`.
    pub fn default_curve() -> Self {
        EllipticInvariants::new(qi(4), qi(1)).expect("nonzero discriminant")
    }

    pub fn g2(&self) -> &Q {
        &self.g2
    }

    pub fn g3(&self) -> &Q {
        &self.g3
    }

    /// `g2³ − 27·g3²`.
    pub fn discriminant(&self) -> Q {
        &self.g2 * &self.g2 * &self.g2 - qi(27) * &self.g3 * &self.g3
    }

    /// `4x³ − g2·x − g3` for any scalar `x`.
    pub fn cubic<S: Scalar>(&self, x: &S) -> S {
        let g2 = S::from_q(&self.g2);
        let g3 = S::from_q(&self.g3);
        S::from_i64(4) * x.clone() * x.clone() * x.clone() - g2 * x.clone() - g3
    }

    pub fn into_arc(self) -> Arc<Self> {
        Arc::new(self)
    }
}

/// Coefficients `c_2, …, c_n` of `℘ = u⁻² + Σ_{k≥2} c_k u^(2k−2)`.
///
/// `c_2 = g2/20`, `c_3 = g3/28`, and for `k ≥ 4`
/// `c_k = 3/((2k+1)(k−3)) · Σ_{j=2}^{k−2} c_j c_{k−j}`.
pub fn wp_coefficients<S: Scalar>(g2: &S, g3: &S, n: usize) -> Vec<S> {
    let mut c: Vec<S> = vec![S::zero(); n.max(3) + 1];
    if n >= 2 {
        c[2] = g2.clone() * S::from_q(&q(1, 20));
    }
    if n >= 3 {
        c[3] = g3.clone() * S::from_q(&q(1, 28));
    }
    for k in 4..=n {
        let mut acc = S::zero();
        for j in 2..=k - 2 {
            acc = acc + c[j].clone() * c[k - j].clone();
        }
        let denom = ((2 * k + 1) * (k - 3)) as i64;
        c[k] = acc * S::from_q(&q(3, denom));
    }
    c.truncate(n + 1);
    c
}

/// Exact Laurent expansion of `℘` at the origin, known below `u^trunc`.
pub fn wp_series(inv: &EllipticInvariants, trunc: i64) -> LaurentSeries<Q> {
    let trunc = trunc.max(-2);
    // exponent 2k−2 < trunc
    let kmax = ((trunc + 1) / 2).max(1) as usize;
    let c = wp_coefficients(&inv.g2, &inv.g3, kmax);
    let len = (trunc + 2).max(0) as usize;
    let mut coeffs = vec![Q::zero(); len];
    if len > 0 {
        coeffs[0] = Q::one();
    }
    for (k, ck) in c.iter().enumerate().skip(2) {
        let idx = 2 * k; // exponent 2k−2, offset by the valuation −2
        if idx < len {
            coeffs[idx] = ck.clone();
        }
    }
    LaurentSeries::new(-2, coeffs, trunc)
}

/// Exact Laurent expansion of `℘′` at the origin, known below `u^trunc`.
pub fn wp_prime_series(inv: &EllipticInvariants, trunc: i64) -> LaurentSeries<Q> {
    wp_series(inv, trunc + 1).derive()
}

type Monomial = (u32, u8);

/// Element of `Q[p, p′]/(p′² − 4p³ + g2·p + g3)` in canonical form: a sum of
/// `c·p^a·p′^b` with `b ∈ {0, 1}` and no zero coefficients.
#[derive(Clone)]
pub struct EllipticElement {
    terms: BTreeMap<Monomial, Q>,
    inv: Arc<EllipticInvariants>,
}

impl PartialEq for EllipticElement {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && (Arc::ptr_eq(&self.inv, &other.inv) || self.inv == other.inv)
    }
}

impl fmt::Debug for EllipticElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EllipticElement({self})")
    }
}

impl EllipticElement {
    pub fn zero(inv: &Arc<EllipticInvariants>) -> Self {
        EllipticElement {
            terms: BTreeMap::new(),
            inv: inv.clone(),
        }
    }

    pub fn constant(c: Q, inv: &Arc<EllipticInvariants>) -> Self {
        Self::monomial(c, 0, 0, inv)
    }

    pub fn one(inv: &Arc<EllipticInvariants>) -> Self {
        Self::constant(Q::one(), inv)
    }

    /// `p`, standing for `℘`.
    pub fn p(inv: &Arc<EllipticInvariants>) -> Self {
        Self::monomial(Q::one(), 1, 0, inv)
    }

    /// `p′`, standing for `℘′`.
    pub fn dp(inv: &Arc<EllipticInvariants>) -> Self {
        Self::monomial(Q::one(), 0, 1, inv)
    }

    /// `c·p^a·p′^b`, reduced to canonical form.
    pub fn monomial(c: Q, a: u32, b: u32, inv: &Arc<EllipticInvariants>) -> Self {
        let mut out = Self::zero(inv);
        if c.is_zero() {
            return out;
        }
        if b <= 1 {
            out.terms.insert((a, b as u8), c);
            return out;
        }
        // p′² = 4p³ − g2 p − g3
        let rel = Self::relation_rhs(inv);
        let mut acc = Self::monomial(c, a, b - 2, inv);
        acc = acc.mul(&rel);
        out = out.add(&acc);
        out
    }

    fn relation_rhs(inv: &Arc<EllipticInvariants>) -> Self {
        let mut t = BTreeMap::new();
        t.insert((3, 0), qi(4));
        if !inv.g2.is_zero() {
            t.insert((1, 0), -inv.g2.clone());
        }
        if !inv.g3.is_zero() {
            t.insert((0, 0), -inv.g3.clone());
        }
        EllipticElement {
            terms: t,
            inv: inv.clone(),
        }
    }

    pub fn invariants(&self) -> &Arc<EllipticInvariants> {
        &self.inv
    }

    pub fn same_curve(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inv, &other.inv) || self.inv == other.inv
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` when the element is the constant `c`.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    /// Canonical terms `((a, b), c)` in lexicographic `(a, b)` order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u8, &Q)> {
        self.terms.iter().map(|(&(a, b), c)| (a, b, c))
    }

    /// Coefficient of `p^a·p′^b`.
    pub fn coeff(&self, a: u32, b: u8) -> Q {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(Q::zero)
    }

    /// Largest weight `2a + 3b` among the terms (`None` for zero).
    pub fn weight(&self) -> Option<u32> {
        self.terms.keys().map(|&(a, b)| 2 * a + 3 * b as u32).max()
    }

    fn insert_add(terms: &mut BTreeMap<Monomial, Q>, key: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        let remove = match terms.get_mut(&key) {
            Some(v) => {
                *v += c;
                v.is_zero()
            }
            None => {
                terms.insert(key, c);
                false
            }
        };
        if remove {
            terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert!(self.same_curve(other), "elements over different curves");
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            Self::insert_add(&mut terms, *k, c.clone());
        }
        EllipticElement {
            terms,
            inv: self.inv.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        EllipticElement {
            terms: self.terms.iter().map(|(k, c)| (*k, -c.clone())).collect(),
            inv: self.inv.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(&self.inv);
        }
        EllipticElement {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
            inv: self.inv.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert!(self.same_curve(other), "elements over different curves");
        let mut terms: BTreeMap<Monomial, Q> = BTreeMap::new();
        let g2 = &self.inv.g2;
        let g3 = &self.inv.g3;
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &other.terms {
                let c = c1 * c2;
                let a = a1 + a2;
                if b1 + b2 <= 1 {
                    Self::insert_add(&mut terms, (a, b1 + b2), c);
                } else {
                    Self::insert_add(&mut terms, (a + 3, 0), qi(4) * &c);
                    Self::insert_add(&mut terms, (a + 1, 0), -(g2 * &c));
                    Self::insert_add(&mut terms, (a, 0), -(g3 * &c));
                }
            }
        }
        EllipticElement {
            terms,
            inv: self.inv.clone(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.inv);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// The derivation `d/dx` with `d(p) = p′` and `d(p′) = 6p² − g2/2`.
    pub fn ring_derive(&self) -> Self {
        let inv = &self.inv;
        let mut out = Self::zero(inv);
        let dpp = Self::monomial(qi(6), 2, 0, inv).add(&Self::constant(-&inv.g2 / qi(2), inv));
        for (&(a, b), c) in &self.terms {
            if a > 0 {
                let t = Self::monomial(c * qi(a as i64), a - 1, b as u32 + 1, inv);
                out = out.add(&t);
            }
            if b == 1 {
                let t = Self::monomial(c.clone(), a, 0, inv).mul(&dpp);
                out = out.add(&t);
            }
        }
        out
    }

    /// Evaluates at `p = p0`, `p′ = dp0`.
    pub fn eval<S: Scalar>(&self, p0: &S, dp0: &S) -> S {
        let mut acc = S::zero();
        for (&(a, b), c) in &self.terms {
            let mut t = S::from_q(c);
            for _ in 0..a {
                t = t * p0.clone();
            }
            if b == 1 {
                t = t * dp0.clone();
            }
            acc = acc + t;
        }
        acc
    }

    /// Substitutes the Laurent expansions of `℘` and `℘′` at the origin.
    pub fn embed(&self, trunc: i64) -> LaurentSeries<Q> {
        // ℘^a·℘′^b has valuation −2a − 3b; ask for enough relative precision.
        let max_pole = self
            .terms
            .keys()
            .map(|&(a, b)| 2 * a as i64 + 3 * b as i64)
            .max()
            .unwrap_or(0);
        let p = wp_series(&self.inv, trunc + max_pole + 3);
        let dp = p.derive();
        self.substitute(&p, &dp, trunc)
    }

    /// Substitutes arbitrary series for `p` and `p′`.
    pub fn substitute<S: Scalar>(
        &self,
        p: &LaurentSeries<S>,
        dp: &LaurentSeries<S>,
        trunc: i64,
    ) -> LaurentSeries<S> {
        let mut acc = LaurentSeries::zero(trunc);
        let amax = self.terms.keys().map(|k| k.0).max().unwrap_or(0);
        let unit_trunc = trunc.max(p.trunc() - p.valuation());
        let mut powers = vec![LaurentSeries::one(unit_trunc)];
        for i in 1..=amax as usize {
            let next = powers[i - 1].mul(p);
            powers.push(next);
        }
        for (&(a, b), c) in &self.terms {
            let mut t = powers[a as usize].scale(&S::from_q(c));
            if b == 1 {
                t = t.mul(dp);
            }
            acc = acc.add(&t);
        }
        acc.truncate(trunc)
    }
}

pub(crate) fn elliptic_monomial_str(a: u32, b: u8) -> String {
    let mut parts = Vec::new();
    match a {
        0 => {}
        1 => parts.push("wp".to_string()),
        _ => parts.push(format!("wp^{a}")),
    }
    if b == 1 {
        parts.push("wp'".to_string());
    }
    parts.join("*")
}

impl fmt::Display for EllipticElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<(bool, String)> = self
            .terms
            .iter()
            .rev()
            .map(|(&(a, b), c)| fmt_term(&c.to_string(), &elliptic_monomial_str(a, b)))
            .collect();
        write!(f, "{}", join_terms(&terms))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> Arc<EllipticInvariants> {
        EllipticInvariants::default_curve().into_arc()
    }

    #[test]
    fn degenerate_curves_rejected() {
        assert_eq!(
            EllipticInvariants::new(qi(0), qi(0)),
            Err(EllipticError::Degenerate)
        );
        assert_eq!(
            EllipticInvariants::new(qi(3), qi(1)),
            Err(EllipticError::Degenerate)
        );
        assert_eq!(EllipticInvariants::default_curve().discriminant(), qi(37));
    }

    #[test]
    fn zero_seed_series_is_pure_pole() {
        let inv = EllipticInvariants::new_unchecked(qi(0), qi(0));
        let s = wp_series(&inv, 20);
        assert_eq!(s, LaurentSeries::monomial(qi(1), -2, 20));
    }

    #[test]
    fn second_coefficient_from_substitution() {
        // Oracle: plug ℘ = u⁻² + a u² + b u⁴ + O(u⁶) into ℘′² − 4℘³ + g2℘ + g3.
        // u⁻² coefficient: −20a + g2 = 0 ⇒ a = g2/20; u⁰: −28b + g3 = 0 ⇒ b = g3/28.
        let inv = EllipticInvariants::new(q(7, 3), q(-2, 5)).unwrap();
        let s = wp_series(&inv, 6);
        assert_eq!(s.coeff(2), Some(q(7, 60)));
        assert_eq!(s.coeff(4), Some(q(-2, 140)));
    }

    #[test]
    fn odd_coefficients_vanish() {
        let s = wp_series(&EllipticInvariants::default_curve(), 40);
        for k in -2..40 {
            if k % 2 != 0 {
                assert!(Scalar::is_zero(&s.coeff(k).unwrap()));
            }
        }
    }

    #[test]
    fn derivation_rules() {
        let inv = curve();
        let p = EllipticElement::p(&inv);
        let dp = EllipticElement::dp(&inv);
        assert_eq!(p.ring_derive(), dp);
        let expected = EllipticElement::monomial(qi(6), 2, 0, &inv)
            .add(&EllipticElement::constant(qi(-2), &inv));
        assert_eq!(dp.ring_derive(), expected);
        // d(p·p′) = 10p³ − (3/2)g2·p − g3 with g2 = 4, g3 = 1
        let lhs = p.mul(&dp).ring_derive();
        let rhs = EllipticElement::monomial(qi(10), 3, 0, &inv)
            .add(&EllipticElement::monomial(qi(-6), 1, 0, &inv))
            .add(&EllipticElement::constant(qi(-1), &inv));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn relation_reduces_to_zero() {
        let inv = curve();
        let p = EllipticElement::p(&inv);
        let dp = EllipticElement::dp(&inv);
        let r = dp
            .mul(&dp)
            .sub(&p.pow(3).scale(&qi(4)))
            .add(&p.scale(inv.g2()))
            .add(&EllipticElement::constant(inv.g3().clone(), &inv));
        assert!(r.is_zero());
    }

    #[test]
    fn embedding_of_basic_elements() {
        let inv = curve();
        assert_eq!(EllipticElement::one(&inv).embed(10), LaurentSeries::one(10));
        assert_eq!(
            EllipticElement::p(&inv).embed(10),
            wp_series(&inv, 10)
        );
        let dp = EllipticElement::dp(&inv).embed(10);
        assert_eq!(dp, wp_prime_series(&inv, 10));
    }

    #[test]
    fn display_in_operator_grammar() {
        let inv = curve();
        let e = EllipticElement::monomial(q(-3, 2), 0, 1, &inv)
            .add(&EllipticElement::monomial(qi(6), 2, 0, &inv))
            .add(&EllipticElement::constant(qi(-2), &inv));
        assert_eq!(e.to_string(), "6*wp^2 - 3/2*wp' - 2");
    }
}
