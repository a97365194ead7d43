//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_traits::{One, Zero};
use qcis::commutant::CommutatorSystem;
use qcis::{DiffOp, EllipticElement, LaurentSeries, Q};

/// Rank over Q by plain Gaussian elimination.
pub fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let piv = rows[r][c].clone();
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = &rows[i][c] / &piv;
                for k in c..ncols {
                    let t = &f * &rows[r][k];
                    rows[i][k] -= t;
                }
            }
        }
        r += 1;
    }
    r
}

/// The commutator system of `sys` rebuilt by expanding every `[L, E_k]` as a
/// Laurent series at the origin.  Columns follow `sys.unknowns`, then `D^s`.
pub fn series_system(l: &DiffOp<EllipticElement>, sys: &CommutatorSystem, trunc: i64) -> Vec<Vec<Q>> {
    let inv = l.invariants();
    let ls = l.embed(trunc);
    let mut cols: Vec<DiffOp<LaurentSeries<Q>>> = Vec::new();
    for t in &sys.unknowns {
        let e = DiffOp::d_pow(t.j, EllipticElement::zero(inv))
            .left_mul(&EllipticElement::monomial(Q::one(), t.a, t.b as u32, inv));
        cols.push(ls.commutator(&e.embed(trunc)).unwrap());
    }
    let lead = DiffOp::d_pow(sys.order, EllipticElement::zero(inv));
    cols.push(ls.commutator(&lead.embed(trunc)).unwrap());
    let jmax = cols.iter().filter_map(|c| c.order()).max().unwrap_or(0);
    let known = cols
        .iter()
        .flat_map(|c| c.coeffs().iter().map(|a| a.trunc()))
        .min()
        .unwrap_or(0);
    let mut rows = Vec::new();
    for j in 0..=jmax {
        for k in -3 * trunc..known {
            let row: Vec<Q> = cols
                .iter()
                .map(|c| c.coeff(j).coeff(k).unwrap_or_else(Q::zero))
                .collect();
            if row.iter().any(|x| !x.is_zero()) {
                rows.push(row);
            }
        }
    }
    rows
}

/// `(nullity, monic)`: dimension of the solution space of the homogenized
/// series system and whether some solution has nonzero `D^s` coefficient.
pub fn brute_force_nullspace(rows: &[Vec<Q>], ncols: usize) -> (usize, bool) {
    let full = rank(rows.to_vec());
    let rest: Vec<Vec<Q>> = rows.iter().map(|r| r[..ncols - 1].to_vec()).collect();
    (ncols - full, rank(rest) == full)
}

pub fn mat_mul(a: &[Vec<qcis::Gauss>], b: &[Vec<qcis::Gauss>]) -> Vec<Vec<qcis::Gauss>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n).fold(qcis::Gauss::real(Q::zero()), |acc, k| acc + a[i][k].clone() * b[k][j].clone())
                })
                .collect()
        })
        .collect()
}
