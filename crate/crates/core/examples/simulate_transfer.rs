//! Master-equation transfer under a linear pulse and under the smoothed
//! energy-optimal pulse, compared with the leading-order loss.

use darkpath::lambda::{optimal_trajectory, protocol_loss, smooth_boundaries, LambdaParams, LinearTheta};
use darkpath::master::{transfer_report, SimOptions};

fn main() {
    let p = LambdaParams::pap(1.0).with_kappa(0.1).with_relaxation(2.5e-3, 2e-3).with_dephasing(1e-3, 1e-3);
    let opts = SimOptions::default();

    let sol = optimal_trajectory(0.0, &p, 2001).unwrap();
    let t_f = sol.t_f;
    println!("energy-optimal t_f = {t_f:.4}, predicted loss {:.6e}", sol.delta_f);

    let linear = LinearTheta { t_f };
    let predicted = protocol_loss(&linear, &p).unwrap();
    let r = transfer_report(&p, linear, &opts).unwrap();
    println!(
        "linear:   1-F = {:.6e} (leading order {predicted:.6e}), {} steps, trace drift {:.1e}",
        1.0 - r.fidelity.unwrap(),
        r.n_steps(),
        r.trace_drift
    );

    let smooth = smooth_boundaries(sol, t_f / 20.0).unwrap();
    let r = transfer_report(&p, smooth, &opts).unwrap();
    println!("smoothed: 1-F = {:.6e}, min eigenvalue {:.1e}", 1.0 - r.fidelity.unwrap(), r.min_eigenvalue);
}
