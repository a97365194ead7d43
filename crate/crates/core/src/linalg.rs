//! Exact dense linear algebra over a [`Scalar`] field.

use crate::scalar::Scalar;

/// Reduced row echelon form, in place.  Returns the pivot columns.
pub fn rref<S: Scalar>(rows: &mut Vec<Vec<S>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].inv().expect("nonzero pivot");
        for x in rows[r].iter_mut().skip(c) {
            *x = x.clone() * inv.clone();
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                if !y.is_zero() {
                    *x = x.clone() - f.clone() * y.clone();
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

pub fn rank<S: Scalar>(mut rows: Vec<Vec<S>>, ncols: usize) -> usize {
    rref(&mut rows, ncols).len()
}

/// Basis of `{x : A x = 0}` for `A` with `ncols` columns.
pub fn nullspace<S: Scalar>(mut rows: Vec<Vec<S>>, ncols: usize) -> Vec<Vec<S>> {
    let pivots = rref(&mut rows, ncols);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![S::zero(); ncols];
        v[free] = S::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Solves the augmented system `[A | b]` (last column is `b`).
///
/// Free variables are set to zero.  `None` if the system is inconsistent.
pub fn solve_augmented<S: Scalar>(mut rows: Vec<Vec<S>>, nvars: usize) -> Option<Vec<S>> {
    let pivots = rref(&mut rows, nvars + 1);
    if pivots.last() == Some(&nvars) {
        return None;
    }
    let mut x = vec![S::zero(); nvars];
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = rows[r][nvars].clone();
    }
    Some(x)
}

/// `A x` for a dense row-major matrix.
pub fn mat_vec<S: Scalar>(rows: &[Vec<S>], x: &[S]) -> Vec<S> {
    rows.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
        })
        .collect()
}

/// Square matrix product.
pub fn mat_mul<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Vec<Vec<S>> {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(S::zero(), |acc, (x, brow)| acc + x.clone() * brow[j].clone())
                })
                .collect()
        })
        .collect()
}

/// Determinant by Gaussian elimination.
pub fn determinant<S: Scalar>(mut m: Vec<Vec<S>>) -> S {
    let n = m.len();
    let mut det = S::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return S::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let piv = m[c][c].clone();
        det = det * piv.clone();
        let inv = piv.inv().expect("nonzero pivot");
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone() * inv.clone();
            for j in c..n {
                let t = m[c][j].clone();
                m[i][j] = m[i][j].clone() - f.clone() * t;
            }
        }
    }
    det
}

/// Lagrange interpolation: coefficients (constant first) of the unique
/// polynomial of degree `< xs.len()` through the given points.
pub fn interpolate<S: Scalar>(xs: &[S], ys: &[S]) -> Vec<S> {
    let n = xs.len();
    let mut out = vec![S::zero(); n];
    for i in 0..n {
        let mut basis = vec![S::one()];
        let mut denom = S::one();
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut next = vec![S::zero(); basis.len() + 1];
            for (k, b) in basis.iter().enumerate() {
                next[k + 1] = next[k + 1].clone() + b.clone();
                next[k] = next[k].clone() - b.clone() * xs[j].clone();
            }
            basis = next;
            denom = denom * (xs[i].clone() - xs[j].clone());
        }
        let w = ys[i].clone() / denom;
        for (o, b) in out.iter_mut().zip(&basis) {
            *o = o.clone() + w.clone() * b.clone();
        }
    }
    out
}

/// Horner evaluation, constant coefficient first.
pub fn poly_eval<S: Scalar>(coeffs: &[S], x: &S) -> S {
    coeffs
        .iter()
        .rev()
        .fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi, Q};

    #[test]
    fn nullspace_of_rank_one() {
        let a = vec![vec![qi(1), qi(2), qi(3)], vec![qi(2), qi(4), qi(6)]];
        let ns = nullspace(a.clone(), 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(mat_vec(&a, v).iter().all(Scalar::is_zero));
        }
    }

    #[test]
    fn inconsistent_system() {
        let a = vec![vec![qi(1), qi(1), qi(1)], vec![qi(1), qi(1), qi(2)]];
        assert!(solve_augmented(a, 2).is_none());
        let b = vec![vec![qi(2), qi(1), qi(3)], vec![qi(1), qi(-1), qi(0)]];
        assert_eq!(solve_augmented(b, 2), Some(vec![qi(1), qi(1)]));
    }

    #[test]
    fn interpolation_recovers_cubic() {
        let p = vec![q(1, 3), qi(-2), qi(0), qi(1)];
        let xs: Vec<Q> = (0..4).map(qi).collect();
        let ys: Vec<Q> = xs.iter().map(|x| poly_eval(&p, x)).collect();
        assert_eq!(interpolate(&xs, &ys), p);
    }

    #[test]
    fn determinant_matches_hand_value() {
        let m = vec![vec![qi(0), qi(2)], vec![qi(3), qi(5)]];
        assert_eq!(determinant(m), qi(-6));
    }
}
