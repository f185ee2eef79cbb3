//! Independent oracles for the action framework.

use std::f64::consts::{FRAC_PI_2, PI};

use darkpath::action::{action, solve_least_action, ActionModel, Chart, LeastActionOptions, ThetaChart};
use darkpath::lambda::{
    couplings, couplings_derivative, energy_for_time, jump_operators, leakage_element, optimal_loss, potential_theta,
    LambdaParams, LambdaPath, LinearTheta,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{kinetic_pair, lambda_params};

#[test]
fn kinetic_matches_long_form_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB);
    let mut done = 0;
    while done < 50 {
        let Some((k, expected)) = kinetic_pair(&mut rng) else {
            continue;
        };
        assert!(
            (k - expected).abs() <= 1e-10 * expected.abs().max(1.0),
            "{k} vs {expected}"
        );
        done += 1;
    }
}

#[test]
fn lambda_kinetic_term_is_cavity_rate_over_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let g = rng.gen_range(0.2..5.0);
        let p = lambda_params(&mut rng, g);
        let theta = rng.gen_range(0.01..FRAC_PI_2 - 0.01);
        let theta_dot = rng.gen_range(1e-3..1.0);
        let model = ActionModel::lambda(&p).unwrap();
        let gd = couplings_derivative(theta, &p).map(|x| x * theta_dot);
        let k = model.kinetic(&couplings(theta, &p), &gd).unwrap();
        let expected = p.kappa_tot() * theta_dot * theta_dot / (g * g);
        assert!((k - expected).abs() <= 1e-9 * expected, "{k} vs {expected}");
    }
}

#[test]
fn lambda_potential_and_darkness() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ops = jump_operators();
    for _ in 0..50 {
        let g = rng.gen_range(0.5..2.0);
        let p = lambda_params(&mut rng, g);
        let model = ActionModel::lambda(&p).unwrap();
        assert_eq!(model.dark_channels(), &[0, 5]);
        let theta = rng.gen_range(0.0..FRAC_PI_2);
        let v = model.potential(&couplings(theta, &p)).unwrap();
        let expected = potential_theta(theta, &p);
        assert!((v - expected).abs() <= 1e-12 * expected.abs().max(1e-12));
        assert!(leakage_element(&ops[0], theta) < 1e-14);
        assert!(leakage_element(&ops[5], theta) < 1e-14);
    }
}

fn least_action_against_energy_method(p: LambdaParams, chart: ThetaChart, t_f: f64, tol: f64) {
    let model = ActionModel::lambda(&p).unwrap();
    let q0 = [chart.coordinate(0.0)];
    let q1 = [chart.coordinate(FRAC_PI_2)];
    let sol = solve_least_action(&model, &chart, &q0, &q1, t_f, &LeastActionOptions::default()).unwrap();
    let expected = optimal_loss(energy_for_time(t_f, &p).unwrap(), &p).unwrap();
    assert!(
        (sol.action - expected).abs() <= tol * expected,
        "collocation {} vs energy method {expected}",
        sol.action
    );
    assert!(sol.action <= sol.straight_action);
    let end = chart.controls(sol.q.last().unwrap());
    let target = couplings(FRAC_PI_2, &p);
    assert!((end[0] - target[0]).abs() < 1e-12 && (end[1] - target[1]).abs() < 1e-12);
}

#[test]
fn least_action_pap_matches_energy_method() {
    let p = LambdaParams::pap(1.0)
        .with_kappa(0.1)
        .with_relaxation(2.5e-3, 2e-3)
        .with_dephasing(1e-3, 1e-3);
    least_action_against_energy_method(p, ThetaChart::angle(p), 15.0, 1e-5);
}

#[test]
fn least_action_bounded_matches_energy_method() {
    let p = LambdaParams::bounded(1.0, 2.0)
        .with_kappa(0.1)
        .with_relaxation(2.5e-3, 2e-3)
        .with_dephasing(1e-3, 1e-3);
    least_action_against_energy_method(p, ThetaChart::weighted(p), 15.0, 1e-5);
}

#[test]
fn action_of_linear_pap_closed_form() {
    // K = κθ̇², V = −γ for equal relaxation: ΔF = κπ²/(4t_f) + γt_f
    for &t_f in &[3.0, 10.0, 40.0] {
        let p = LambdaParams::pap(1.0).with_kappa(0.05).with_relaxation(1e-3, 1e-3);
        let model = ActionModel::lambda(&p).unwrap();
        let s = action(&model, &LambdaPath::new(LinearTheta { t_f }, p)).unwrap();
        let expected = 0.05 * PI * PI / (4.0 * t_f) + 1e-3 * t_f;
        assert!((s - expected).abs() < 1e-10 * expected);
    }
}
