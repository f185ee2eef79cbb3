//! Fidelity against transfer time: numeric optimum for small N next to the
//! analytic curve.

use darkpath::bench::{sweep_tf, unique_interior_max, OptimizeOptions};
use darkpath::lambda::{transfer_time, LambdaParams};

fn main() {
    let p = LambdaParams::pap(1.0).with_kappa(0.1).with_relaxation(2.5e-3, 2e-3).with_dephasing(1e-3, 1e-3);
    let t_star = transfer_time(0.0, &p).unwrap();
    let grid: Vec<f64> = (0..7).map(|k| t_star * (0.4 + 0.2 * k as f64)).collect();
    let mut opts = OptimizeOptions::default();
    opts.nelder_mead.max_evals = 300;
    opts.nelder_mead.restarts = 0;

    let rows = sweep_tf(&p, &grid, &[0, 2], &opts).unwrap();
    println!("{:>8} {:>12} {:>12} {:>12}", "t_f", "F(N=0)", "F(N=2)", "F analytic");
    for r in &rows {
        let a = r.analytic.map_or("-".into(), |f| format!("{f:.8}"));
        println!("{:8.3} {:12.8} {:12.8} {a:>12}", r.t_f, r.numeric[0].fidelity, r.numeric[1].fidelity);
    }
    let best: Vec<f64> = rows.iter().map(|r| r.numeric[1].fidelity).collect();
    match unique_interior_max(&best) {
        Some(k) => println!("N=2 peak at t_f = {:.3}, analytic optimum {t_star:.3}", grid[k]),
        None => println!("N=2 curve has no unique interior peak on this grid"),
    }
}
