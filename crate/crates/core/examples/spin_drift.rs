//! Spin drifts of a displaced Gaussian, the Clifford identity and the
//! spin-orbit/spin-spin split.

use stochmech::electrodynamics::interaction_potentials;
use stochmech::fields::{clifford_identity_residual, spin_drift, Boundary, Grid, ScalarField, SpinAxis};

fn main() -> anyhow::Result<()> {
    let g = Grid::new(vec![21; 3], vec![0.1; 3], vec![-1.0; 3], Boundary::Reflecting)?;
    let rho = ScalarField::from_fn(&g, |x| (-((x[0] - 0.2).powi(2) + x[1] * x[1] + x[2] * x[2]) / 0.5).exp())?;
    let (b, b_star) = spin_drift(&rho, SpinAxis::z(), 0.5)?;
    for idx in [[5, 10, 10], [10, 5, 10], [15, 15, 10]] {
        let i = g.flat_index(&idx);
        println!("x = {:?}: b = {:?}, b* = {:?}", g.position(i), b.at(i), b_star.at(i));
    }
    let (gv, s) = ([1.0, 2.0, -0.5], [2.0, -1.0, 0.0]);
    println!("Clifford residual (perpendicular) {:.1e}", clifford_identity_residual(gv, s));
    println!("Clifford residual (oblique)       {:.3}", clifford_identity_residual(gv, [1.0, 0.0, 0.0]));
    let (p_s, b, v, e) = ([0.0, 3e-35, 4e-35], [0.0, 0.0, 1e5], [0.0, 2e5, 0.0], [1e9, 0.0, 0.0]);
    let r = interaction_potentials(p_s, b, v, e, 9.109e-31, 2.998e8, -1.602e-19)?;
    println!("V_so = {:.4e} J, V_ss = {:.4e} J", r.spin_orbit, r.spin_spin);
    println!("sum  = {:.4e} J, unsplit = {:.4e} J", r.spin_orbit + r.spin_spin, r.unsplit);
    Ok(())
}
