//! Elliptic Calogero–Moser operators: the quadratic Hamiltonian, a cubic
//! integral found by ansatz, and a two-particle Bethe state.

use num_complex::Complex64;
use qcis::cm::{build_cm, cm_commutator, cm_eigen_check, cm_rank_two_particles, cm_solve_bethe, solve_higher_integral, IntegralOptions};
use qcis::scalar::qi;
use qcis::{EllipticInvariants, Lattice};

fn main() {
    let (l1, l2) = build_cm(3, &qi(1));
    println!("L1 = {l1}");
    println!("L2 = {l2}");
    println!("[L1, L2] = {}", cm_commutator(&l1, &l2));

    let l3 = solve_higher_integral(3, &qi(1), 3, &IntegralOptions::default()).expect("cubic integral");
    println!("L3 = {}", l3.operator);
    println!("numeric residual of [L2, L3]: {:.1e}", l3.residual);

    let lat = Lattice::square();
    let st = cm_solve_bethe(2, 1, &lat, 0).expect("Newton converges");
    let check = cm_eigen_check(&st, Complex64::new(0.3, 0.1), &lat, 14).expect("local check");
    let fmt = |v: &[Complex64]| v.iter().map(|z| format!("{z:.6}")).collect::<Vec<_>>().join(", ");
    println!("two-particle state: poles [{}]", fmt(&st.poles));
    println!("eigenvalues of (L1, L2): [{}], residual {:.1e}", fmt(&check.pi), check.residual);

    let inv = EllipticInvariants::default_curve().into_arc();
    println!("rank for n = 2: {}", cm_rank_two_particles(1, &inv).unwrap());
}
