//! Radial hydrogen levels in atomic units and the 1s stationarity residual.

use stochmech::experiment::stationarity_round_trip;
use stochmech::fields::{Grid, ScalarField};
use stochmech::schrodinger::{solve_stationary, HamiltonianSpec};

fn main() -> anyhow::Result<()> {
    let g = Grid::radial(30_000, 2e-3)?;
    let v = ScalarField::from_fn(&g, |x| -1.0 / x[0])?;
    let spec = HamiltonianSpec::new(v, 1.0, 1.0);
    for (i, s) in solve_stationary(&spec, 3)?.iter().enumerate() {
        let n = (i + 1) as f64;
        println!("E_{}s = {:.8} (exact {:.8})", i + 1, s.energy, -0.5 / (n * n));
    }
    let g = Grid::radial(30_000, 1e-3)?;
    let v = ScalarField::from_fn(&g, |x| -1.0 / x[0])?;
    let r = stationarity_round_trip(&HamiltonianSpec::new(v, 1.0, 1.0), -0.5)?;
    println!("1s: E error {:.2e}, stationarity residual {:.2e}", r.energy_relative_error, r.residual);
    Ok(())
}
