//! Least-action path by collocation, checked against the energy method.

use std::f64::consts::FRAC_PI_2;

use darkpath::action::{action, solve_least_action, ActionModel, LeastActionOptions, ThetaChart};
use darkpath::lambda::{energy_for_time, optimal_loss, LambdaParams, LambdaPath, LinearTheta};

fn main() {
    let t_f = 15.0;
    for (name, p, chart) in [
        ("PAP", LambdaParams::pap(1.0), ThetaChart::angle as fn(LambdaParams) -> ThetaChart),
        ("bounded 1:2", LambdaParams::bounded(1.0, 2.0), ThetaChart::weighted),
    ] {
        let p = p.with_kappa(0.1).with_relaxation(2.5e-3, 2e-3).with_dephasing(1e-3, 1e-3);
        let chart = chart(p);
        let model = ActionModel::lambda(&p).unwrap();
        let q0 = [chart.coordinate(0.0)];
        let q1 = [chart.coordinate(FRAC_PI_2)];
        let sol = solve_least_action(&model, &chart, &q0, &q1, t_f, &LeastActionOptions::default()).unwrap();
        let energy = optimal_loss(energy_for_time(t_f, &p).unwrap(), &p).unwrap();
        let linear = action(&model, &LambdaPath::new(LinearTheta { t_f }, p)).unwrap();
        println!(
            "{name}: collocation {:.8e} in {} iterations, energy method {energy:.8e}, linear pulse {linear:.8e}",
            sol.action, sol.iterations
        );
    }
}
