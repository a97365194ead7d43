//! Monodromy of the Lamé equation: abelian for integer m, irreducible for
//! half-integer m.

use num_complex::Complex64;
use qcis::monodromy::{commutativity_scan, irreducibility_probe, monodromy_group};
use qcis::Lattice;

fn main() {
    let lat = Lattice::square();
    let lambda = Complex64::new(-1.6, 0.29);
    for m in [0.0, 1.0, 2.0, 0.5, 1.5] {
        let r = monodromy_group(m, lambda, &lat, None).expect("paths avoid poles");
        let line = irreducibility_probe(&r);
        println!(
            "m = {m}: commutator {:.2e}, det {:.1e}, relation {:.1e} ({}), line {:.2e}",
            r.commutator_defect,
            r.max_det_defect(),
            r.relation_defect,
            r.relation_word,
            line.defect
        );
    }

    let lambdas: Vec<Complex64> = (0..8).map(|k| Complex64::new(-4.3 + 1.37 * k as f64, 0.29)).collect();
    for row in commutativity_scan(1.0, &lambdas, &lat).expect("scan runs") {
        println!(
            "lambda = {:.2}: commutator {:.1e}{}",
            row.lambda,
            row.commutator_defect,
            row.reason.map(|r| format!(" [{r}]")).unwrap_or_default()
        );
    }
}
