//! Hermite–Bethe eigenfunctions of the Lamé operator on the square lattice.

use qcis::lame::{solve_bethe, verify_point};
use qcis::Lattice;

fn main() {
    let lat = Lattice::square();
    for m in 1..=3 {
        for seed in 0..3 {
            let pt = match solve_bethe(m, &lat, seed) {
                Ok(pt) => pt,
                Err(e) => {
                    println!("m = {m}, seed {seed}: {e}");
                    continue;
                }
            };
            let v = verify_point(&pt, &lat, 15, true).expect("checks run");
            println!(
                "m = {m}, seed {seed}: lambda = {:.10}, bethe {:.1e}, pi {:.1e}, eigen {:.1e}, sigma gap {:.1e}, mu^2 - P {:.1e}",
                pt.lambda,
                v.bethe,
                v.pi,
                v.eigen,
                v.sigma_lambda_gap,
                v.spectral.unwrap_or(f64::NAN)
            );
        }
    }
}
