//! Osmotic, transition and drift velocities of a moving Gaussian packet.

use num_complex::Complex64;
use stochmech::fields::{
    density_from_wavefunction, drift_fields, osmotic_velocity, Boundary, Grid, VectorField, WaveFunction,
    DEFAULT_DENSITY_FLOOR,
};
use stochmech::schrodinger::madelung_fields;

fn main() -> anyhow::Result<()> {
    let (sigma, k) = (1.0, 2.0);
    let g = Grid::line(801, -8.0, 8.0, Boundary::DirichletZero)?;
    let psi = WaveFunction::from_fn(&g, 1.0, 1.0, |x| {
        Complex64::from_polar((-x[0] * x[0] / (4.0 * sigma * sigma)).exp(), k * x[0])
    })?;
    let rho = density_from_wavefunction(&psi)?;
    let beta = psi.beta();
    let u = osmotic_velocity(&rho, beta, DEFAULT_DENSITY_FLOOR)?;
    let m = madelung_fields(&psi, &VectorField::zeros(&g))?;
    let (b, b_star) = drift_fields(&m.upsilon, &m.u)?;
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}", "x", "rho", "u", "-x/2", "b", "b*");
    for i in (0..g.len()).step_by(80) {
        let x = g.coord(i, 0);
        println!(
            "{x:>6.2} {:>10.4e} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            rho.get(i),
            u.component(0)[i],
            -beta * x / (sigma * sigma),
            b.component(0)[i],
            b_star.component(0)[i]
        );
    }
    println!("upsilon = {:.6} (hbar k / m = {k})", m.upsilon.component(0)[400]);
    Ok(())
}
