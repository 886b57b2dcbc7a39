//! Harmonic-oscillator eigenstates, then the stationarity residual of their
//! osmotic velocity.

use stochmech::experiment::stationarity_round_trip;
use stochmech::fields::{Boundary, Grid, ScalarField};
use stochmech::schrodinger::{solve_stationary, HamiltonianSpec};

fn main() -> anyhow::Result<()> {
    let g = Grid::line(4001, -8.0, 8.0, Boundary::DirichletZero)?;
    let v = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0])?;
    let spec = HamiltonianSpec::new(v, 1.0, 1.0);
    for (n, s) in solve_stationary(&spec, 4)?.iter().enumerate() {
        println!("E_{n} = {:.9} (exact {:.1}), residual {:.1e}", s.energy, n as f64 + 0.5, s.residual_norm);
    }
    for nodes in [2001, 4001, 8001, 16001] {
        let g = Grid::line(nodes, -8.0, 8.0, Boundary::DirichletZero)?;
        let v = ScalarField::from_fn(&g, |x| 0.5 * x[0] * x[0])?;
        let r = stationarity_round_trip(&HamiltonianSpec::new(v, 1.0, 1.0), 0.5)?;
        println!(
            "nodes {nodes:>6}: E0 error {:.2e}, stationarity residual {:.2e}",
            r.energy_relative_error, r.residual
        );
    }
    Ok(())
}
