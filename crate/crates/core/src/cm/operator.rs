use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::elliptic::{EllipticElement, EllipticInvariants};
use crate::opalg::DiffOp;
use crate::scalar::{binomial, q, qi, Scalar, Q};
use crate::series::{fmt_term, join_terms};

use super::CMError;

/// Generators of the coefficient ring: `w_{ij}^{(k)} = ℘^{(k)}(x_i − x_j)`
/// with `i < j`, `k ∈ {0, 1}` (0-based indices), and the invariants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    W { i: u8, j: u8, k: u8 },
    G2,
    G3,
}

impl Gen {
    /// `w^{(k)}_{ij}` in canonical form with its sign.
    pub fn w(i: usize, j: usize, k: u8) -> (Gen, i64) {
        assert!(i != j && k < 2);
        if i < j {
            (Gen::W { i: i as u8, j: j as u8, k }, 1)
        } else {
            let sign = if k == 1 { -1 } else { 1 };
            (Gen::W { i: j as u8, j: i as u8, k }, sign)
        }
    }

    pub fn weight(&self) -> u32 {
        match self {
            Gen::W { k: 0, .. } => 2,
            Gen::W { .. } => 3,
            Gen::G2 => 4,
            Gen::G3 => 6,
        }
    }
}

impl fmt::Display for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen::W { i, j, k } => {
                write!(f, "w{}{}", i + 1, j + 1)?;
                if *k == 1 {
                    write!(f, "'")?;
                }
                Ok(())
            }
            Gen::G2 => write!(f, "g2"),
            Gen::G3 => write!(f, "g3"),
        }
    }
}

pub type Mono = BTreeMap<Gen, u32>;
pub type Poly = BTreeMap<Mono, Q>;

pub fn mono_weight(m: &Mono) -> u32 {
    m.iter().map(|(g, e)| g.weight() * e).sum()
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = a.clone();
    for (g, e) in b {
        *out.entry(*g).or_insert(0) += e;
    }
    out
}

fn poly_add_term(p: &mut Poly, m: Mono, c: Q) {
    if c.is_zero() {
        return;
    }
    let slot = p.entry(m).or_insert_with(Q::zero);
    *slot += c;
    if slot.is_zero() {
        p.retain(|_, v| !v.is_zero());
    }
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            poly_add_term(&mut out, mono_mul(ma, mb), ca * cb);
        }
    }
    out
}

fn gen_derive(g: Gen, idx: usize) -> Poly {
    let mut out = Poly::new();
    if let Gen::W { i, j, k } = g {
        let s = (idx == i as usize) as i64 - (idx == j as usize) as i64;
        if s == 0 {
            return out;
        }
        if k == 0 {
            out.insert(Mono::from([(Gen::W { i, j, k: 1 }, 1)]), qi(s));
        } else {
            // ℘″ = 6℘² − g2/2
            out.insert(Mono::from([(Gen::W { i, j, k: 0 }, 2)]), qi(6 * s));
            out.insert(Mono::from([(Gen::G2, 1)]), q(-s, 2));
        }
    }
    out
}

/// `∂/∂x_idx` of a polynomial in the generators.
pub fn poly_derive(p: &Poly, idx: usize) -> Poly {
    let mut out = Poly::new();
    for (m, c) in p {
        for (g, e) in m {
            let dg = gen_derive(*g, idx);
            if dg.is_empty() {
                continue;
            }
            let mut rest = m.clone();
            if *e == 1 {
                rest.remove(g);
            } else {
                rest.insert(*g, e - 1);
            }
            let factor = c * qi(*e as i64);
            for (dm, dc) in dg {
                poly_add_term(&mut out, mono_mul(&rest, &dm), &factor * dc);
            }
        }
    }
    out
}

/// Normal-ordered operator `Σ c · (monomial in generators) · ∂^α` on `n`
/// particles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CMOperator {
    pub n: usize,
    pub m: Q,
    pub terms: BTreeMap<(Vec<u32>, Mono), Q>,
}

impl CMOperator {
    pub fn zero(n: usize, m: Q) -> Self {
        CMOperator {
            n,
            m,
            terms: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, dexp: Vec<u32>, mono: Mono, c: Q) {
        assert_eq!(dexp.len(), self.n);
        if c.is_zero() {
            return;
        }
        let key = (dexp, mono);
        let slot = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// `∂_i^k`.
    pub fn d(n: usize, m: Q, i: usize, k: u32) -> Self {
        let mut out = Self::zero(n, m);
        let mut e = vec![0; n];
        e[i] = k;
        out.add_term(e, Mono::new(), Q::one());
        out
    }

    /// Multiplication by `c · w^{(k)}_{ij}`.
    pub fn w(n: usize, m: Q, i: usize, j: usize, k: u8, c: Q) -> Self {
        let (g, s) = Gen::w(i, j, k);
        let mut out = Self::zero(n, m);
        out.add_term(vec![0; n], Mono::from([(g, 1)]), c * qi(s));
        out
    }

    pub fn by_dexp(&self) -> BTreeMap<Vec<u32>, Poly> {
        let mut out: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
        for ((d, mono), c) in &self.terms {
            out.entry(d.clone()).or_default().insert(mono.clone(), c.clone());
        }
        out
    }

    fn from_dexp(n: usize, m: Q, map: BTreeMap<Vec<u32>, Poly>) -> Self {
        let mut out = Self::zero(n, m);
        for (d, p) in map {
            for (mono, c) in p {
                out.add_term(d.clone(), mono, c);
            }
        }
        out
    }

    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|(d, _)| d.iter().sum()).max()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((d, mono), c) in &other.terms {
            out.add_term(d.clone(), mono.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.n, self.m.clone());
        for ((d, mono), v) in &self.terms {
            out.add_term(d.clone(), mono.clone(), v * c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&qi(-1)))
    }

    /// Composition with the Leibniz rule.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut acc: BTreeMap<Vec<u32>, Poly> = BTreeMap::new();
        let rhs = other.by_dexp();
        for (alpha, p) in self.by_dexp() {
            for gamma in sub_indices(&alpha) {
                let mut weight = Q::one();
                for i in 0..n {
                    weight *= qi(binomial(alpha[i] as usize, gamma[i] as usize) as i64);
                }
                let p_scaled: Poly = p.iter().map(|(m, c)| (m.clone(), c * &weight)).collect();
                for (beta, qp) in &rhs {
                    let mut dq = qp.clone();
                    for (i, &g) in gamma.iter().enumerate() {
                        for _ in 0..g {
                            dq = poly_derive(&dq, i);
                        }
                    }
                    if dq.is_empty() {
                        continue;
                    }
                    let prod = poly_mul(&p_scaled, &dq);
                    let e: Vec<u32> = (0..n).map(|i| alpha[i] - gamma[i] + beta[i]).collect();
                    let slot = acc.entry(e).or_default();
                    for (m, c) in prod {
                        poly_add_term(slot, m, c);
                    }
                }
            }
        }
        Self::from_dexp(n, self.m.clone(), acc)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.n, self.m.clone());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn identity(n: usize, m: Q) -> Self {
        let mut out = Self::zero(n, m);
        out.add_term(vec![0; n], Mono::new(), Q::one());
        out
    }

    /// Relabels particle `i` as `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let mut out = Self::zero(self.n, self.m.clone());
        for ((d, mono), c) in &self.terms {
            let mut nd = vec![0; self.n];
            for (i, e) in d.iter().enumerate() {
                nd[perm[i]] = *e;
            }
            let mut sign = 1;
            let mut nm = Mono::new();
            for (g, e) in mono {
                let g2 = match *g {
                    Gen::W { i, j, k } => {
                        let (g2, s) = Gen::w(perm[i as usize], perm[j as usize], k);
                        if e % 2 == 1 {
                            sign *= s;
                        }
                        g2
                    }
                    other => other,
                };
                nm.insert(g2, *e);
            }
            out.add_term(nd, nm, c * qi(sign));
        }
        out
    }

    /// Invariance under every adjacent transposition.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n.saturating_sub(1)).all(|i| {
            let mut perm: Vec<usize> = (0..self.n).collect();
            perm.swap(i, i + 1);
            self.permute(&perm) == *self
        })
    }

    /// Restriction of an `n = 2` operator to functions of `y = x1 − x2`:
    /// `∂1 ↦ D`, `∂2 ↦ −D`, `w12 ↦ ℘(y)`.
    pub fn reduce_relative(
        &self,
        inv: &Arc<EllipticInvariants>,
    ) -> Result<DiffOp<EllipticElement>, CMError> {
        if self.n != 2 {
            return Err(CMError::Unsupported(format!(
                "relative-coordinate reduction needs n = 2, got {}",
                self.n
            )));
        }
        let order = self.order().unwrap_or(0) as usize;
        let zero = EllipticElement::zero(inv);
        let mut coeffs = vec![zero.clone(); order + 1];
        for ((d, mono), c) in &self.terms {
            let k = (d[0] + d[1]) as usize;
            let sign = if d[1] % 2 == 1 { qi(-1) } else { qi(1) };
            let mut v = EllipticElement::constant(c * sign, inv);
            for (g, e) in mono {
                let factor = match g {
                    Gen::W { k: 0, .. } => EllipticElement::p(inv),
                    Gen::W { .. } => EllipticElement::dp(inv),
                    Gen::G2 => EllipticElement::constant(inv.g2().clone(), inv),
                    Gen::G3 => EllipticElement::constant(inv.g3().clone(), inv),
                };
                v = v.mul(&factor.pow(*e));
            }
            coeffs[k] = coeffs[k].add(&v);
        }
        Ok(DiffOp::new(coeffs, zero))
    }
}

/// All multi-indices `γ ≤ α`.
fn sub_indices(alpha: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &a in alpha {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=a).map(move |g| {
                    let mut v = p.clone();
                    v.push(g);
                    v
                })
            })
            .collect();
    }
    out
}

fn mono_str(m: &Mono) -> String {
    m.iter()
        .map(|(g, e)| if *e == 1 { g.to_string() } else { format!("{g}^{e}") })
        .collect::<Vec<_>>()
        .join("*")
}

fn dexp_str(d: &[u32]) -> String {
    d.iter()
        .enumerate()
        .filter(|(_, e)| **e > 0)
        .map(|(i, e)| if *e == 1 { format!("d{}", i + 1) } else { format!("d{}^{e}", i + 1) })
        .collect::<Vec<_>>()
        .join("*")
}

impl fmt::Display for CMOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<_> = self
            .terms
            .iter()
            .rev()
            .map(|((d, mono), c)| {
                let body = [mono_str(mono), dexp_str(d)]
                    .into_iter()
                    .filter(|s| !s.is_empty())
                    .collect::<Vec<_>>()
                    .join("*");
                fmt_term(&c.to_string(), &body)
            })
            .collect();
        write!(f, "{}", join_terms(&terms))
    }
}

/// `L¹ = Σ ∂_i` and `L² = Σ ∂_i² − m(m+1) Σ_{i≠j} ℘(x_i − x_j)`.
pub fn build_cm(n: usize, m: &Q) -> (CMOperator, CMOperator) {
    let mut l1 = CMOperator::zero(n, m.clone());
    let mut l2 = CMOperator::zero(n, m.clone());
    for i in 0..n {
        l1 = l1.add(&CMOperator::d(n, m.clone(), i, 1));
        l2 = l2.add(&CMOperator::d(n, m.clone(), i, 2));
    }
    let c = -(m * (m + qi(1))) * qi(2);
    for i in 0..n {
        for j in i + 1..n {
            l2 = l2.add(&CMOperator::w(n, m.clone(), i, j, 0, c.clone()));
        }
    }
    (l1, l2)
}

pub fn cm_commutator(a: &CMOperator, b: &CMOperator) -> CMOperator {
    a.mul(b).sub(&b.mul(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_particle_hamiltonian() {
        let (l1, l2) = build_cm(2, &qi(1));
        assert_eq!(l2.to_string(), "d1^2 + d2^2 - 4*w12");
        assert_eq!(l1.to_string(), "d1 + d2");
        assert_eq!(build_cm(1, &qi(3)).1.to_string(), "d1^2");
    }

    #[test]
    fn leibniz_rule() {
        let m = qi(1);
        let d1 = CMOperator::d(2, m.clone(), 0, 1);
        let w = CMOperator::w(2, m.clone(), 0, 1, 0, qi(1));
        assert_eq!(cm_commutator(&d1, &w).to_string(), "w12'");
        let d2 = CMOperator::d(2, m.clone(), 1, 2);
        let dw = CMOperator::w(2, m, 0, 1, 1, qi(1));
        // ∂2² w′ = w′∂2² − 2w″∂2 + w‴
        let got = cm_commutator(&d2, &dw);
        assert_eq!(got.order(), Some(1));
        assert!(got.to_string().contains("12*w12^2*d2"), "{got}");
    }

    #[test]
    fn translation_invariance_and_symmetry() {
        for n in 2..=3 {
            let (l1, l2) = build_cm(n, &qi(2));
            assert!(cm_commutator(&l1, &l2).is_zero());
            assert!(cm_commutator(&l2, &l2).is_zero());
            assert!(l2.is_symmetric());
        }
    }

    #[test]
    fn relative_reduction() {
        let inv = EllipticInvariants::default_curve().into_arc();
        let (_, l2) = build_cm(2, &qi(1));
        let red = l2.reduce_relative(&inv).unwrap();
        assert_eq!(red.to_string(), "2*D^2 - 4*wp");
    }
}
