//! Commuting operator Q_m of order 2m+1 for the Lamé operator, its
//! spectral polynomial, and the action of Q_m on the solution fiber.

use qcis::commutant::{centralizer_action, find_base_point, find_commuting, spectral_polynomial};
use qcis::lame::build_lame;
use qcis::scalar::{q, qi};
use qcis::{EllipticInvariants, Gauss};

fn main() {
    let inv = EllipticInvariants::new(qi(4), qi(1)).expect("smooth curve").into_arc();
    for m in 1..=2 {
        let l = build_lame(&qi(m), &inv);
        let qm = find_commuting(&l, 2 * m as usize + 1, None).expect("finite-zone");
        let p = spectral_polynomial(&l, &qm, None, 40).expect("Q^2 = P(L)");
        println!("m = {m}");
        println!("  L = {l}");
        println!("  Q = {qm}");
        let coeffs: Vec<String> = p.coeffs.iter().map(|c| c.to_string()).collect();
        println!("  P coefficients (constant first): [{}]", coeffs.join(", "));
        println!("  [L, Q] = 0: {}", l.commutator(&qm).unwrap().is_zero());
        println!("  Q* = -Q: {}", qm.adjoint() == qm.neg());
    }

    let l = build_lame(&qi(1), &inv);
    let q1 = find_commuting(&l, 3, None).unwrap();
    let p = spectral_polynomial(&l, &q1, None, 40).unwrap();
    let base = find_base_point(&inv).unwrap();
    for lam in [q(3, 2), qi(-2), q(7, 5)] {
        let a = centralizer_action(&l, &q1, &Gauss::real(lam.clone()), &base, 24).unwrap();
        let tr = a[0][0].clone() + a[1][1].clone();
        let det = a[0][0].clone() * a[1][1].clone() - a[0][1].clone() * a[1][0].clone();
        println!(
            "lambda = {lam}: tr = {tr}, det = {det}, P(lambda) = {}",
            p.eval(&Gauss::real(lam.clone()))
        );
    }
}
