//! Free electron diffusion: the MSD slope of a drift-free ensemble recovers
//! beta = hbar / 2 m_e.

use stochmech::constants::PhysicalConstants;
use stochmech::langevin::{msd_and_diffusion, simulate_ensemble, StepperConfig, ZeroDrift};

fn main() -> anyhow::Result<()> {
    let k = PhysicalConstants::si();
    let beta = k.electron_beta();
    let mut cfg = StepperConfig::free(1e-3, 1000, 20_000, beta, 7, 3);
    cfg.record_stride = 50;
    let ens = simulate_ensemble(&cfg, &ZeroDrift)?;
    let msd = msd_and_diffusion(&ens, 0.0)?;
    println!("{:>8} {:>14}", "t (s)", "msd (m^2)");
    for (t, m) in msd.times.iter().zip(&msd.msd) {
        println!("{t:>8.3} {m:>14.6e}");
    }
    println!("beta      = {beta:.5e} m^2/s");
    println!("beta_hat  = {:.5e} m^2/s (r^2 = {:.6})", msd.beta_hat, msd.fit.r_squared);
    println!("rel error = {:.3e}", (msd.beta_hat - beta).abs() / beta);
    Ok(())
}
