//! Operator expressions in text form, lowered to exact operators.

use qcis::cli::{parse_operator, parse_operator_with, Bindings};
use qcis::scalar::{q, qi};
use qcis::EllipticInvariants;

fn main() {
    let inv = EllipticInvariants::default_curve().into_arc();
    let bind = Bindings {
        m: Some(qi(2)),
        ..Default::default()
    };
    let l = parse_operator_with("D^2 - m*(m+1)*wp", &bind).unwrap();
    println!("{l}  ->  {}", l.to_elliptic_op(&inv).unwrap());

    let q3 = parse_operator("(D^3 - 3*wp*D)*D - 3/2*wp'").unwrap();
    println!("{q3}  ->  {}", q3.to_elliptic_op(&inv).unwrap());

    let rel = parse_operator("wp'^2 - 4*wp^3 + g2*wp + g3").unwrap();
    println!("{rel}  ->  {}", rel.to_elliptic_op(&inv).unwrap());

    let ccr = parse_operator("D*u - u*D").unwrap();
    println!("{ccr}  ->  {}", ccr.to_series_op(&inv, 8).unwrap());

    let h = parse_operator("d1^2 + d2^2 + d3^2 - 4*(w12 + w13 + w23)").unwrap();
    println!("{h}  ->  {}", h.to_cm_op(3, &qi(1)).unwrap());

    let half = Bindings {
        m: Some(q(-1, 2)),
        ..Default::default()
    };
    println!("{}", parse_operator_with("m*wp", &half).unwrap());
    match parse_operator("D^2 + * wp") {
        Err(e) => println!("error: {e}"),
        Ok(_) => unreachable!(),
    }
}
