//! Oracles shared by the oracle and acceptance targets.

use std::f64::consts::PI;

use darkpath::action::ActionModel;
use darkpath::adiabatic::{Channel, HamiltonianFamily};
use darkpath::lambda::LambdaParams;
use darkpath::operator::{Operator, C64};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    let a = DMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenpairs in ascending order, each vector multiplied by a random phase.
pub fn eigen_random_gauge(rng: &mut ChaCha8Rng, h: &DMatrix<C64>) -> (Vec<f64>, Vec<DVector<C64>>) {
    let e = SymmetricEigen::new(h.clone());
    let mut idx: Vec<usize> = (0..h.nrows()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&k| e.eigenvalues[k]).collect();
    let vecs = idx
        .iter()
        .map(|&k| e.eigenvectors.column(k).into_owned() * C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
        .collect();
    (vals, vecs)
}

fn el(a: &DMatrix<C64>, bra: &DVector<C64>, ket: &DVector<C64>) -> C64 {
    bra.dotc(&(a * ket))
}

/// Second-order expansion of `⟨A†A⟩ − |⟨A⟩|²` in the leakage amplitudes `c`
/// for a channel that does not move `|E_r⟩`, term by term.
pub fn long_form(a: &DMatrix<C64>, v: &[DVector<C64>], r: usize, c: &[C64]) -> f64 {
    let ad = a.adjoint();
    let ada = &ad * a;
    let others: Vec<usize> = (0..v.len()).filter(|&k| k != r).collect();
    let leak: f64 = others.iter().map(|&l| c[l].norm_sqr()).sum();
    let c1_sq = 1.0 - leak;
    let c1_4 = 1.0 - 2.0 * leak;
    let e1 = &v[r];
    let a11 = el(a, e1, e1);
    let ad11 = el(&ad, e1, e1);

    let mut k = c1_sq * el(&ada, e1, e1) - C64::new(c1_4 * a11.norm_sqr(), 0.0);
    for &n in &others {
        k += c[n].conj() * el(&ada, &v[n], e1);
        k += c[n] * el(&ada, e1, &v[n]);
        k -= c[n].conj() * el(&ad, &v[n], e1) * a11;
        k -= c[n] * ad11 * el(a, e1, &v[n]);
    }
    for &n in &others {
        for &m in &others {
            let w = c[n].conj() * c[m];
            k += w * el(&ada, &v[n], &v[m]);
            k -= w * (el(&ad, &v[n], &v[m]) * a11 + ad11 * el(a, &v[n], &v[m]) + el(&ad, &v[n], e1) * el(a, e1, &v[m]));
        }
    }
    assert!(k.im.abs() < 1e-9 * (1.0 + k.re.abs()));
    k.re
}

/// Draws a random model with at least one dark channel and returns the
/// kinetic term from `ActionModel` next to the long-form value.
/// `None` when the draw has a near-degenerate spectrum.
pub fn kinetic_pair(rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
    let d = rng.gen_range(3..=5);
    let nc = rng.gen_range(1..=3);
    let gens: Vec<DMatrix<C64>> = (0..nc).map(|_| random_hermitian(rng, d)).collect();
    let g: Vec<f64> = (0..nc).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let h = gens
        .iter()
        .zip(&g)
        .fold(DMatrix::zeros(d, d), |acc, (m, &x)| acc + m * C64::new(x, 0.0));
    let (vals, vecs) = eigen_random_gauge(rng, &h);
    let scale = vals.iter().map(|e| e.abs()).fold(0.0, f64::max);
    if vals.windows(2).any(|w| w[1] - w[0] < 0.05 * scale) {
        return None;
    }
    let r = rng.gen_range(0..d);

    // dark channels: ⟨E_m|A|E_r⟩ = 0 for m ≠ r, everything else random
    let n_dark = rng.gen_range(1..=3);
    let n_bright = rng.gen_range(0..=2);
    let mut channels = Vec::new();
    let mut dark = Vec::new();
    let mut rates = Vec::new();
    for k in 0..n_dark + n_bright {
        let mut a = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for i in 0..d {
            for j in 0..d {
                if k < n_dark && j == r && i != r {
                    continue;
                }
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                a += &vecs[i] * vecs[j].adjoint() * z;
            }
        }
        let rate = rng.gen_range(0.1..2.0);
        if k < n_dark {
            dark.push(k);
            rates.push((a.clone(), rate));
        }
        channels.push(Channel::new(format!("c{k}"), Operator::new(a).unwrap(), rate));
    }
    let fam = HamiltonianFamily::new(
        gens.iter().map(|m| Operator::new(m.clone()).unwrap()).collect(),
        channels,
    )
    .unwrap();
    let model = ActionModel::with_dark(fam, r, dark).unwrap();

    let g_dot: Vec<f64> = (0..nc).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let i = C64::new(0.0, 1.0);
    let c: Vec<C64> = (0..d)
        .map(|l| {
            if l == r {
                return C64::new(0.0, 0.0);
            }
            let gap = vals[l] - vals[r];
            -i * gens
                .iter()
                .zip(&g_dot)
                .map(|(hj, &gd)| el(hj, &vecs[l], &vecs[r]) * gd)
                .sum::<C64>()
                / (gap * gap)
        })
        .collect();
    let expected: f64 = rates.iter().map(|(a, rate)| rate * long_form(a, &vecs, r, &c)).sum();
    let k = model.kinetic(&g, &g_dot).unwrap();
    Some((k, expected))
}

pub fn lambda_params(rng: &mut ChaCha8Rng, g_max: f64) -> LambdaParams {
    let mut p = LambdaParams::pap(g_max)
        .with_kappa(rng.gen_range(1e-3..0.2))
        .with_relaxation(rng.gen_range(0.0..1e-2), rng.gen_range(0.0..1e-2))
        .with_dephasing(rng.gen_range(0.0..1e-2), rng.gen_range(0.0..1e-2));
    p.kappa_phi = rng.gen_range(0.0..0.1);
    p
}
