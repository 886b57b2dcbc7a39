//! Drift-free Fokker-Planck spreading against sigma^2 = sigma0^2 + 2 beta t,
//! and a forward/backward round trip at stationarity.

use stochmech::fields::{Boundary, Grid, ScalarField, VectorField, DEFAULT_DENSITY_FLOOR};
use stochmech::fokker_planck::{flux_osmotic_velocity, FPState, FpStepper};

fn variance(rho: &ScalarField) -> f64 {
    let g = rho.grid();
    (0..g.len()).map(|i| g.weight(i) * rho.get(i) * g.coord(i, 0).powi(2)).sum()
}

fn main() -> anyhow::Result<()> {
    let beta = 0.5;
    let g = Grid::line(801, -8.0, 8.0, Boundary::Reflecting)?;
    let rho = ScalarField::from_fn(&g, |x| (-x[0] * x[0] / 2.0).exp())?;
    let rho = rho.scale(1.0 / rho.integral());
    let s0 = FPState::new(rho.clone(), VectorField::zeros(&g), beta, 0.0)?;
    let mut st = FpStepper::default();
    let dt = 0.9 * st.bound(&s0);
    let run = st.evolve(&s0, dt, 400, 50)?;
    println!("{:>8} {:>12} {:>12}", "t", "variance", "expected");
    for s in &run.snapshots {
        println!("{:>8.4} {:>12.8} {:>12.8}", s.t, variance(&s.rho), 1.0 + 2.0 * beta * s.t);
    }
    println!("mass drift per step <= {:.2e}", run.diagnostics.max_step_mass_drift);

    let u = flux_osmotic_velocity(&rho, beta, DEFAULT_DENSITY_FLOOR)?;
    let fwd = st.forward(&FPState::new(rho.clone(), u.clone(), beta, 0.0)?, dt)?;
    let back = st.backward(&FPState::new(fwd.rho, u.scale(-1.0), beta, fwd.t)?, dt)?;
    println!("stationary round trip error {:.2e}", back.rho.axpy(-1.0, &rho)?.max_abs());
    Ok(())
}
