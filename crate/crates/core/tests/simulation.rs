//! Master-equation and adiabatic-frame checks against exact references.

use std::f64::consts::FRAC_PI_2;

use darkpath::adiabatic::{build_frame, nonadiabatic_eps, Channel, perturbative_amplitudes, HamiltonianFamily};
use darkpath::lambda::{lambda_family, LambdaParams, LambdaPath, LinearTheta, DARK_LEVEL, EG0, GE0};
use darkpath::master::{
    propagate_lindblad, propagate_lindblad_rk4, propagate_lindblad_sampled, propagate_schrodinger,
    transfer_fidelity, FourierPulse, SimOptions,
};
use darkpath::operator::{DensityMatrix, Operator, C64, ONE, ZERO};
use darkpath::path::ConstantPath;
use nalgebra::{DMatrix, DVector};

fn reference_rates() -> LambdaParams {
    LambdaParams::pap(1.0)
        .with_kappa(0.1)
        .with_relaxation(2.5e-3, 2e-3)
        .with_dephasing(1e-3, 1e-3)
}

fn basis(d: usize, k: usize) -> DVector<C64> {
    DVector::from_fn(d, |i, _| if i == k { ONE } else { ZERO })
}

#[test]
fn adaptive_and_fixed_step_integrators_agree() {
    let p = reference_rates();
    let fam = lambda_family(&p).unwrap();
    let path = LambdaPath::new(LinearTheta { t_f: 15.0 }, p);
    let rho0 = DensityMatrix::basis(4, EG0);
    let a = propagate_lindblad(&fam, &path, &rho0, Some(GE0), &SimOptions::default()).unwrap();
    let b = propagate_lindblad_rk4(&fam, &path, &rho0, Some(GE0), 20_000).unwrap();
    assert!((a.fidelity.unwrap() - b.fidelity.unwrap()).abs() < 1e-7);
}

#[test]
fn halving_tolerance_is_converged() {
    let p = reference_rates();
    let pulse = || FourierPulse::new(15.0, vec![-0.05, 0.02]);
    let loose = transfer_fidelity(&p, pulse(), &SimOptions::default()).unwrap();
    let tight = SimOptions {
        rtol: 5e-10,
        atol: 5e-13,
        ..SimOptions::default()
    };
    let strict = transfer_fidelity(&p, pulse(), &tight).unwrap();
    assert!((loose - strict).abs() < 1e-8);
    assert!((0.0..=1.0).contains(&loose));
}

#[test]
fn time_independent_schrodinger_matches_exponential() {
    let h = Operator::from_real_rows(&[&[0.3, 1.0, 0.0], &[1.0, -0.2, 0.4], &[0.0, 0.4, 0.7]]).unwrap();
    let fam = HamiltonianFamily::new(vec![h.clone()], vec![]).unwrap();
    let path = ConstantPath {
        controls: vec![1.0],
        t_f: 7.0,
    };
    let psi0 = basis(3, 0);
    let r = propagate_schrodinger(&fam, &path, &psi0, &SimOptions::default(), &[], |_, _| {}).unwrap();
    let u = (h.matrix() * C64::new(0.0, -7.0)).exp();
    let exact = u * &psi0;
    let err = (r.state_vector().unwrap() - exact).norm();
    assert!(err < 1e-9, "{err}");
}

#[test]
fn long_run_norm_is_stable() {
    let p = LambdaParams::pap(1.0);
    let fam = lambda_family(&p).unwrap();
    let path = LambdaPath::new(LinearTheta { t_f: 1e4 }, p);
    let r = propagate_schrodinger(&fam, &path, &basis(4, EG0), &SimOptions::default(), &[], |_, _| {}).unwrap();
    assert!(r.trace_drift < 1e-9, "{}", r.trace_drift);
}

#[test]
fn two_level_decay_is_exponential() {
    let sm = Operator::transition(2, 1, 0);
    let fam = HamiltonianFamily::new(vec![Operator::zeros(2)], vec![Channel::new("decay", sm, 0.7)]).unwrap();
    let path = ConstantPath {
        controls: vec![0.0],
        t_f: 3.0,
    };
    let times: Vec<f64> = (0..=6).map(|k| 0.5 * k as f64).collect();
    let mut seen = Vec::new();
    propagate_lindblad_sampled(
        &fam,
        &path,
        &DensityMatrix::basis(2, 0),
        Some(0),
        &SimOptions::default(),
        &times,
        |t, rho: &DMatrix<C64>| seen.push((t, rho[(0, 0)].re)),
    )
    .unwrap();
    assert_eq!(seen.len(), times.len());
    for (t, pop) in seen {
        assert!((pop - (-0.7 * t).exp()).abs() < 1e-9, "t = {t}");
    }
}

#[test]
fn slow_linear_pulse_is_adiabatic() {
    let p = LambdaParams::pap(1.0);
    for &t_f in &[80.0, 320.0, 1280.0] {
        let loss = 1.0 - transfer_fidelity(&p, LinearTheta { t_f }, &SimOptions::default()).unwrap();
        // two boundary kicks of size θ̇/G interfering with phase G·t_f
        let eps = FRAC_PI_2 / t_f;
        let expected = 2.0 * eps * eps * (1.0 - t_f.cos());
        assert!(loss <= 4.0 * eps * eps, "t_f = {t_f}: {loss}");
        assert!((loss - expected).abs() <= 0.15 * expected, "t_f = {t_f}: {loss} vs {expected}");
    }
}

#[test]
fn eps_halves_when_time_doubles() {
    let p = LambdaParams::bounded(1.0, 2.0);
    let fam = lambda_family(&p).unwrap();
    let peak = |t_f: f64| {
        let path = LambdaPath::new(FourierPulse::new(t_f, vec![0.3 / t_f]), p);
        let frame = build_frame(&fam, &path, 401).unwrap();
        (0..=100)
            .map(|k| {
                let e = nonadiabatic_eps(&frame, &fam, &path, t_f * k as f64 / 100.0).unwrap();
                e.iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let (a, b) = (peak(10.0), peak(20.0));
    assert!((a / b - 2.0).abs() < 1e-9, "{}", a / b);
}

#[test]
fn frame_phases_converge_under_refinement() {
    let p = LambdaParams::bounded(1.0, 2.0);
    let fam = lambda_family(&p).unwrap();
    let path = LambdaPath::new(FourierPulse::new(12.0, vec![0.02]), p);
    let coarse = build_frame(&fam, &path, 2001).unwrap();
    let fine = build_frame(&fam, &path, 4001).unwrap();
    let a = coarse.dynamical_phases.last().unwrap();
    let b = fine.dynamical_phases.last().unwrap();
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= 1e-6 * y.abs() + 1e-12, "{x} vs {y}");
    }
    assert!(coarse.geometric_phases.iter().flatten().all(|g| g.is_finite()));
}

#[test]
fn perturbative_leakage_matches_exact_population() {
    // 1 − |c₁|² against Σ|c_m|² from perturbation theory, O(ε³) apart
    let p = LambdaParams::pap(1.0);
    let fam = lambda_family(&p).unwrap();
    for &t_f in &[40.0, 80.0] {
        let path = LambdaPath::new(LinearTheta { t_f }, p);
        let frame = build_frame(&fam, &path, 4001).unwrap();
        let times: Vec<f64> = (1..=8).map(|k| t_f * k as f64 / 8.0).collect();
        let mut states = Vec::new();
        propagate_schrodinger(&fam, &path, &basis(4, EG0), &SimOptions::default(), &times, |t, psi| {
            states.push((t, psi.clone()))
        })
        .unwrap();
        let eps = FRAC_PI_2 / t_f;
        for (t, psi) in states {
            let pt = frame.point(&fam, &path, t).unwrap();
            let exact = 1.0 - pt.snapshot.vector(DARK_LEVEL).dotc(&psi).norm_sqr();
            let c = perturbative_amplitudes(&frame, &fam, &path, t, DARK_LEVEL).unwrap();
            let pert: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            assert!((exact - pert).abs() <= 4.0 * eps.powi(3), "t_f = {t_f}, t = {t}: {exact} vs {pert}");
        }
    }
}
