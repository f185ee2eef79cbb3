//! Nested Fourier-pulse optimization at a fixed transfer time.

use darkpath::bench::{analytic_fidelity, optimize_nested, OptimizeOptions};
use darkpath::lambda::LambdaParams;

fn main() {
    let p = LambdaParams::pap(1.0).with_kappa(0.1).with_relaxation(2.5e-3, 2e-3).with_dephasing(1e-3, 1e-3);
    let t_f = 12.0;
    let mut opts = OptimizeOptions::default();
    opts.nelder_mead.max_evals = 600;
    opts.nelder_mead.restarts = 0;

    let results = optimize_nested(&p, t_f, &[0, 1, 2, 3], &opts).unwrap();
    for r in &results {
        println!("N = {}: 1-F = {:.6e} after {} simulations (seed {})", r.n, r.loss(), r.evaluations, r.seed);
    }
    println!("leading-order optimum at this t_f: {:.6e}", 1.0 - analytic_fidelity(t_f, &p).unwrap());
}
