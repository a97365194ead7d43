use std::collections::BTreeMap;
use std::sync::Arc;

use super::CommutantError;
use crate::elliptic::{EllipticElement, EllipticInvariants};
use crate::linalg;
use crate::opalg::DiffOp;
use crate::scalar::{Scalar, Q};

/// One unknown of the ansatz: the coefficient of `p^a·p′^b·D^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AnsatzTerm {
    pub j: usize,
    pub a: u32,
    pub b: u8,
}

impl AnsatzTerm {
    pub fn weight(&self) -> u32 {
        2 * self.a + 3 * self.b as u32
    }

    fn operator(&self, inv: &Arc<EllipticInvariants>) -> DiffOp<EllipticElement> {
        DiffOp::d_pow(self.j, EllipticElement::zero(inv))
            .left_mul(&EllipticElement::monomial(Q::one(), self.a, self.b as u32, inv))
    }
}

/// The linear system `A·x = rhs` expressing `[L, D^s + Σ x_k E_k] = 0`.
///
/// Rows are indexed by `(power of D, a, b)` of the monomial `p^a p′^b D^j`
/// in the commutator; `skew_rows` / `skew_rhs` encode `Q* = −Q`.
#[derive(Clone, Debug)]
pub struct CommutatorSystem {
    pub order: usize,
    pub wbound: u32,
    pub unknowns: Vec<AnsatzTerm>,
    pub labels: Vec<(usize, u32, u8)>,
    pub rows: Vec<Vec<Q>>,
    pub rhs: Vec<Q>,
    pub skew_rows: Vec<Vec<Q>>,
    pub skew_rhs: Vec<Q>,
}

fn ansatz_terms(s: usize, wbound: u32) -> Vec<AnsatzTerm> {
    let mut out = Vec::new();
    for j in 0..s.saturating_sub(1) {
        let Some(wmax) = wbound.checked_sub(j as u32) else {
            continue;
        };
        for b in 0..=1u8 {
            let mut a = 0;
            while 2 * a + 3 * b as u32 <= wmax {
                out.push(AnsatzTerm { j, a, b });
                a += 1;
            }
        }
    }
    out
}

type Columns = BTreeMap<(usize, u32, u8), Vec<Q>>;

fn scatter(cols: &mut Columns, op: &DiffOp<EllipticElement>, k: usize, width: usize) {
    for (j, c) in op.coeffs().iter().enumerate() {
        for (a, b, x) in c.terms() {
            let row = cols
                .entry((j, a, b))
                .or_insert_with(|| vec![Q::zero(); width]);
            row[k] = row[k].clone() + x.clone();
        }
    }
}

fn assemble(cols: Columns, n: usize) -> (Vec<(usize, u32, u8)>, Vec<Vec<Q>>, Vec<Q>) {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (label, mut row) in cols {
        let last = row.pop().expect("constant column");
        labels.push(label);
        rows.push(row);
        rhs.push(-last);
        debug_assert_eq!(rows.last().map(Vec::len), Some(n));
    }
    (labels, rows, rhs)
}

fn check_lame_type(l: &DiffOp<EllipticElement>) -> Result<(), CommutantError> {
    let lead_one = l.leading().and_then(EllipticElement::as_constant) == Some(Q::one());
    if l.order() != Some(2) || !lead_one {
        return Err(CommutantError::NotLameType);
    }
    Ok(())
}

/// Builds the exact system for commutants of order `s` with coefficient
/// weights `≤ wbound − j` and no `D^{s−1}` term.
pub fn commutator_system(
    l: &DiffOp<EllipticElement>,
    s: usize,
    wbound: u32,
) -> Result<CommutatorSystem, CommutantError> {
    check_lame_type(l)?;
    let inv = l.invariants().clone();
    let unknowns = ansatz_terms(s, wbound);
    let n = unknowns.len();
    let lead = DiffOp::d_pow(s, EllipticElement::zero(&inv));

    let mut cols = Columns::new();
    let mut skew = Columns::new();
    for (k, t) in unknowns.iter().enumerate() {
        let e = t.operator(&inv);
        scatter(&mut cols, &l.commutator(&e)?, k, n + 1);
        scatter(&mut skew, &e.add(&e.adjoint())?, k, n + 1);
    }
    scatter(&mut cols, &l.commutator(&lead)?, n, n + 1);
    scatter(&mut skew, &lead.add(&lead.adjoint())?, n, n + 1);

    let (labels, rows, rhs) = assemble(cols, n);
    let (_, skew_rows, skew_rhs) = assemble(skew, n);
    Ok(CommutatorSystem {
        order: s,
        wbound,
        unknowns,
        labels,
        rows,
        rhs,
        skew_rows,
        skew_rhs,
    })
}

impl CommutatorSystem {
    /// Homogenized matrix `[A | −rhs]`: the last column multiplies the
    /// leading coefficient of `D^s`.
    pub fn homogeneous(&self) -> Vec<Vec<Q>> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| {
                let mut r = r.clone();
                r.push(-b.clone());
                r
            })
            .collect()
    }

    /// Nullspace of the homogenized commutator system.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        linalg::nullspace(self.homogeneous(), self.unknowns.len() + 1)
    }

    /// Whether some nullspace vector has nonzero leading coefficient.
    pub fn has_monic_solution(&self) -> bool {
        self.nullspace()
            .iter()
            .any(|v| !v.last().expect("leading slot").is_zero())
    }

    fn augmented(&self, with_skew: bool) -> Vec<Vec<Q>> {
        let mut out: Vec<Vec<Q>> = Vec::new();
        let mut push = |rows: &[Vec<Q>], rhs: &[Q]| {
            for (r, b) in rows.iter().zip(rhs) {
                let mut r = r.clone();
                r.push(b.clone());
                out.push(r);
            }
        };
        push(&self.rows, &self.rhs);
        if with_skew {
            push(&self.skew_rows, &self.skew_rhs);
        }
        out
    }

    /// Particular solution with free unknowns set to zero, preferring the
    /// skew-adjoint one.  Returns `(x, skew_adjoint)`.
    pub fn solve(&self) -> Option<(Vec<Q>, bool)> {
        let n = self.unknowns.len();
        if let Some(x) = linalg::solve_augmented(self.augmented(true), n) {
            return Some((x, true));
        }
        linalg::solve_augmented(self.augmented(false), n).map(|x| (x, false))
    }

    pub fn operator(&self, x: &[Q], inv: &Arc<EllipticInvariants>) -> DiffOp<EllipticElement> {
        let mut coeffs = vec![EllipticElement::zero(inv); self.order + 1];
        coeffs[self.order] = EllipticElement::one(inv);
        for (t, c) in self.unknowns.iter().zip(x) {
            if c.is_zero() {
                continue;
            }
            let m = EllipticElement::monomial(c.clone(), t.a, t.b as u32, inv);
            coeffs[t.j] = coeffs[t.j].add(&m);
        }
        DiffOp::new(coeffs, EllipticElement::zero(inv))
    }
}

/// Searches for `Q = D^s + Σ_{j<s−1} b_j D^j` with `[L, Q] = 0`.
///
/// `L` must be `D² + u` with `u ∈ Q[p, p′]`.  Among the solutions the one with
/// `Q* = −Q` is returned when it exists; remaining freedom is fixed by setting
/// free unknowns to zero.  `NotFound` is a bounded-search verdict.
pub fn find_commuting(
    l: &DiffOp<EllipticElement>,
    s: usize,
    wbound: Option<u32>,
) -> Result<DiffOp<EllipticElement>, CommutantError> {
    if s.is_multiple_of(2) {
        return Err(CommutantError::EvenOrder(s));
    }
    let wbound = wbound.unwrap_or(s as u32);
    let sys = commutator_system(l, s, wbound)?;
    let (x, _) = sys
        .solve()
        .ok_or(CommutantError::NotFound { order: s, wbound })?;
    let q = sys.operator(&x, l.invariants());
    if !l.commutator(&q)?.is_zero() {
        return Err(CommutantError::NotCommuting);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lame::build_lame;
    use crate::scalar::{q, qi};

    fn curve() -> Arc<EllipticInvariants> {
        EllipticInvariants::default_curve().into_arc()
    }

    #[test]
    fn first_lame_commutant() {
        let inv = curve();
        let l = build_lame(&qi(1), &inv);
        let q1 = find_commuting(&l, 3, None).unwrap();
        assert_eq!(q1.to_string(), "D^3 - 3*wp*D - 3/2*wp'");
    }

    #[test]
    fn free_operator_commutes_with_d() {
        let inv = curve();
        let l = build_lame(&qi(0), &inv);
        assert_eq!(find_commuting(&l, 1, None).unwrap().to_string(), "D");
    }

    #[test]
    fn half_integer_has_no_cubic_commutant() {
        let inv = curve();
        let l = build_lame(&q(1, 2), &inv);
        assert!(matches!(
            find_commuting(&l, 3, None),
            Err(CommutantError::NotFound { order: 3, .. })
        ));
    }

    #[test]
    fn even_order_rejected() {
        let l = build_lame(&qi(1), &curve());
        assert_eq!(find_commuting(&l, 4, None), Err(CommutantError::EvenOrder(4)));
    }
}
