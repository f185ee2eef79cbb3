//! Relaxation-asymmetry point: time-and-pulse optimization in N, then
//! extrapolation to N → ∞ against the analytic bound.
//!
//! Pass the asymmetry as the first argument (default 1). Takes under a minute.

use darkpath::bench::{lambda_point, OptimizeOptions};
use darkpath::lambda::LambdaParams;

fn main() {
    let lambda: f64 = std::env::args().nth(1).map_or(1.0, |s| s.parse().expect("asymmetry in (-1, 1]"));
    let base = LambdaParams::pap(1.0).with_kappa(0.025).with_relaxation(0.0, 2.5e-4);
    let mut opts = OptimizeOptions::default();
    opts.nelder_mead.max_evals = 1500;
    opts.nelder_mead.restarts = 1;

    let row = lambda_point(&base, lambda, 4, &opts).unwrap();
    println!("gamma1 = {:.3e}, gamma2 = {:.3e}, bound {:.6e}", row.gamma1_r, row.gamma2_r, row.bound);
    for r in &row.results {
        println!("  N = {}: 1-F = {:.6e} at t_f = {:.3} ({:.4} x bound)", r.n, r.loss(), r.t_f, r.loss() / row.bound);
    }
    match (&row.extrapolation, &row.extrapolation_error) {
        (Some(e), _) => println!(
            "extrapolated dF = {:.6e} ({:.4} x bound), exponent {:.2}",
            e.delta_f_inf,
            e.delta_f_inf / row.bound,
            e.exponent
        ),
        (None, err) => println!("no extrapolation: {err:?}"),
    }
}
