//! First-order leakage amplitudes from the adiabatic frame against the exact
//! Schrödinger projection, for a lossless linear pulse.

use darkpath::adiabatic::{build_frame, perturbative_amplitudes, phase_correction};
use darkpath::lambda::{lambda_family, LambdaParams, LambdaPath, LinearTheta, DARK_LEVEL, EG0};
use darkpath::master::{propagate_schrodinger, SimOptions};
use darkpath::operator::{ONE, ZERO};
use nalgebra::DVector;

fn main() {
    let p = LambdaParams::pap(1.0);
    let fam = lambda_family(&p).unwrap();
    let t_f = 30.0;
    let path = LambdaPath::new(LinearTheta { t_f }, p);
    let frame = build_frame(&fam, &path, 4001).unwrap();

    let times: Vec<f64> = (1..=6).map(|k| t_f * k as f64 / 6.0).collect();
    let psi0 = DVector::from_fn(4, |i, _| if i == EG0 { ONE } else { ZERO });
    let mut states = Vec::new();
    propagate_schrodinger(&fam, &path, &psi0, &SimOptions::default(), &times, |t, psi| {
        states.push((t, psi.clone()))
    })
    .unwrap();

    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "|c-| exact", "|c-| pert", "|c+| exact", "|c+| pert");
    for (t, psi) in &states {
        let pt = frame.point(&fam, &path, *t).unwrap();
        let c = perturbative_amplitudes(&frame, &fam, &path, *t, DARK_LEVEL).unwrap();
        let exact = |m: usize| pt.snapshot.vector(m).dotc(psi).norm();
        println!("{t:6.1} {:12.4e} {:12.4e} {:12.4e} {:12.4e}", exact(0), c[0].norm(), exact(2), c[2].norm());
    }
    let dg = phase_correction(&frame, &fam, &path, t_f, DARK_LEVEL).unwrap();
    println!("second-order phase correction on the dark level: {dg:.1e}");
}
