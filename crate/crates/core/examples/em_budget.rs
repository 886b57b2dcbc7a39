//! Magnetic mass, magnetic and radiated energy and the Larmor quadrature.

use stochmech::electrodynamics::{
    em_budget, magnetic_energy_quadrature, poynting_and_larmor, theta_grid, EmConstants, FieldConvention,
    DEFAULT_RMAX_FACTOR,
};

fn main() -> anyhow::Result<()> {
    let k = EmConstants::default();
    let dv = 0.1 * k.c;
    let b = em_budget(&k, dv, 4)?;
    println!("{}", serde_json::to_string_pretty(&b)?);
    for conv in [FieldConvention::InverseC, FieldConvention::Si] {
        let q = magnetic_energy_quadrature(dv, &k.with_convention(conv), DEFAULT_RMAX_FACTOR, 4000)?;
        println!("{conv:?} field energy {:.6e} J (closed form {:.6e} J)", q.total, b.magnetic_energy);
    }
    let l = poynting_and_larmor(dv, 1e20, &theta_grid(2001), &k)?;
    println!("Larmor power {:.6e} W, quadrature {:.6e} W", l.power, l.power_quadrature);
    println!("quadrature prefactor {:.10}", l.quadrature_prefactor);
    Ok(())
}
