//! Leading-order loss bounds for the two-qubit bus model.
//!
//! Prints the prefactors, the least-action optimum and, where one applies,
//! the closed-form limit next to the quadrature result.

use darkpath::lambda::{closed_form, minimal_loss, pap_prefactor, transfer_time, LambdaParams};

fn main() {
    println!("c(r1, r2) on the edge r1 + r2 = 1 and at the centre:");
    for (r1, r2) in [(1.0, 0.0), (0.75, 0.25), (0.5, 0.5), (1.0 / 3.0, 1.0 / 3.0), (0.0, 0.0)] {
        println!("  c({r1:.3}, {r2:.3}) = {:.6}", pap_prefactor(r1, r2).unwrap());
    }

    let sets = [
        ("PAP, all rates", LambdaParams::pap(1.0).with_kappa(0.1).with_relaxation(2.5e-3, 2e-3).with_dephasing(1e-3, 1e-3)),
        ("bounded 1:2, all rates", LambdaParams::bounded(1.0, 2.0).with_kappa(0.1).with_relaxation(2.5e-3, 2e-3).with_dephasing(1e-3, 1e-3)),
        ("PAP, equal relaxation", LambdaParams::pap(1.0).with_kappa(0.1).with_relaxation(2e-3, 2e-3)),
        ("bounded, first qubit only", LambdaParams::bounded(1.0, 2.0).with_kappa(0.1).with_relaxation(2.5e-3, 0.0)),
    ];
    for (name, p) in sets {
        let df = minimal_loss(&p).unwrap();
        let t = match transfer_time(0.0, &p) {
            Ok(t) => format!("{t:.4}"),
            Err(e) => format!("none ({e})"),
        };
        print!("{name}: dF_min = {df:.6e}, t* = {t}");
        if let Some(cf) = closed_form(&p) {
            print!(", {:?} closed form {:.6e}", cf.limit, cf.delta_f_min);
        }
        println!();
    }
}
