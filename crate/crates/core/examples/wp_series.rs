//! Exact Laurent expansion of ℘ on a rational curve and the numeric
//! evaluator on a period lattice.

use num_complex::Complex64;
use qcis::elliptic::{wp_prime_series, wp_series};
use qcis::scalar::{q, qi};
use qcis::{EllipticInvariants, Lattice, LaurentSeries};

fn main() {
    let inv = EllipticInvariants::new(qi(4), qi(1)).expect("smooth curve");
    let p = wp_series(&inv, 12);
    println!("wp  = {p}");
    println!("wp' = {}", wp_prime_series(&inv, 12));

    let dp = wp_prime_series(&inv, 12);
    let rel = dp
        .mul(&dp)
        .sub(&p.pow(3).scale(&qi(4)))
        .add(&p.scale(inv.g2()))
        .add(&LaurentSeries::constant(inv.g3().clone(), 12));
    println!("wp'^2 - 4wp^3 + g2 wp + g3 = {rel}");

    let odd = EllipticInvariants::new(q(-3, 7), q(5, 11)).expect("smooth curve");
    println!("g2 = -3/7, g3 = 5/11: wp = {}", wp_series(&odd, 8));

    let lat = Lattice::square();
    println!("square lattice: g2 = {:.12}, g3 = {:.12}", lat.g2(), lat.g3());
    let z = Complex64::new(0.23, 0.17);
    let v = lat.values(z).expect("regular point");
    println!("wp({z}) = {:.12}, wp' = {:.12}, zeta = {:.12}", v.wp, v.wp_prime, v.zeta);
    let shifted = lat.wp(z + lat.omega1() + lat.omega2()).expect("regular point");
    println!("periodicity gap: {:.2e}", (shifted - v.wp).norm());
}
