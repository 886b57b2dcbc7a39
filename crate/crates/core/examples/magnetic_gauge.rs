//! A constant vector potential shifts the packet velocity by kappa A / m,
//! while the density is gauge invariant.

use num_complex::Complex64;
use stochmech::fields::{Grid, ScalarField, VectorField, WaveFunction};
use stochmech::schrodinger::{canonical_momentum, evolve, evolve_magnetic, HamiltonianSpec};

fn mean_x(psi: &WaveFunction) -> f64 {
    let g = psi.grid();
    psi.amplitudes().iter().enumerate().map(|(i, a)| a.norm_sqr() * g.weight(i) * g.coord(i, 0)).sum()
}

fn main() -> anyhow::Result<()> {
    let g = Grid::periodic_line(1024, -40.0, 80.0)?;
    let (kappa, a0, k0) = (1.0, 0.5, 1.0);
    let psi0 = WaveFunction::from_fn(&g, 1.0, 1.0, |x| {
        Complex64::from_polar((-x[0] * x[0] / 16.0).exp(), k0 * x[0])
    })?;
    let plain = HamiltonianSpec::new(ScalarField::zeros(&g), 1.0, 1.0);
    let magnetic = plain.clone().with_vector_potential(VectorField::uniform(&g, &[a0]), kappa);
    let (t, dt) = (4.0, 0.005);
    let steps = (t / dt) as usize;
    let free = evolve(&plain, &psi0, dt, steps)?;
    let with_a = evolve_magnetic(&magnetic, &psi0, dt, steps)?;
    let p = canonical_momentum(&psi0, 0)?;
    println!("canonical momentum          {p:.5}");
    println!("velocity without A          {:.5}", (mean_x(free.last()) - mean_x(&psi0)) / t);
    println!("velocity with A             {:.5}", (mean_x(with_a.last()) - mean_x(&psi0)) / t);
    println!("expected (p + kappa A) / m  {:.5}", p + kappa * a0);
    println!("norm drift per step         {:.2e}", with_a.max_step_norm_drift);
    Ok(())
}
