//! The bounded algebraic-type test separates integer from half-integer m.

use qcis::commutant::{algebraic_type_test, Verdict};
use qcis::lame::build_lame;
use qcis::scalar::{q, qi};
use qcis::EllipticInvariants;

fn main() {
    let inv = EllipticInvariants::default_curve().into_arc();
    for m in [qi(1), qi(2), q(1, 2), q(3, 2)] {
        let l = build_lame(&m, &inv);
        match algebraic_type_test(&l, 7, None, 6, 0, 40).expect("search runs") {
            Verdict::AlgebraicType {
                order,
                regular_samples,
                samples,
                ..
            } => println!("m = {m}: commuting operator of order {order}, regular at {regular_samples}/{samples} samples"),
            Verdict::NoWitnessUpTo(k) => println!("m = {m}: no commuting operator up to order {k}"),
        }
    }
}
