//! Effective potential and inverse mass for a user-defined three-level model.
//!
//! A Λ system with a dephasing excited level; the dark-channel
//! classification is automatic.

use darkpath::action::{action, ActionModel};
use darkpath::adiabatic::{Channel, HamiltonianFamily};
use darkpath::operator::Operator;
use darkpath::path::LinearPath;

fn main() {
    let pump = Operator::from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]).unwrap();
    let stokes = Operator::from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]).unwrap();
    let decay = Channel::new("excited", Operator::transition(3, 1, 1), 0.05);
    let dephase = Channel::new("ground", Operator::transition(3, 0, 0), 1e-3);
    let fam = HamiltonianFamily::new(vec![pump, stokes], vec![decay, dephase]).unwrap();

    let path = LinearPath {
        start: vec![0.05, 1.0],
        end: vec![1.0, 0.05],
        t_f: 40.0,
    };
    let model = ActionModel::for_path(fam, 1, &path).unwrap();
    println!("dark channels {:?}, bright channels {:?}", model.dark_channels(), model.bright_channels());
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let g = [0.05 + 0.95 * s, 1.0 - 0.95 * s];
        let m = model.inverse_mass(&g).unwrap();
        println!("  g = ({:.3}, {:.3}): V = {:.3e}, M^-1 diag = ({:.3e}, {:.3e})", g[0], g[1], model.potential(&g).unwrap(), m[(0, 0)], m[(1, 1)]);
    }
    println!("leading-order loss of the linear ramp: {:.6e}", action(&model, &path).unwrap());
}
