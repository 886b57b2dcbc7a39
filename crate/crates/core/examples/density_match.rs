//! Langevin paths driven by the osmotic drift of the oscillator ground state
//! settle into the eigenstate density.

use stochmech::experiment::{execute, Experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::with_defaults(Experiment::DensityMatch, 42);
    cfg.set("paths", 20_000i64);
    let out = execute(&cfg, None)?;
    let csv = out.csv.as_deref().unwrap_or_default();
    println!("{:>6} {:>10} {:>10}", "x", "empirical", "solver");
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect();
        if v[0].abs() < 2.6 {
            println!("{:>6.2} {:>10.5} {:>10.5}", v[0], v[1], v[2]);
        }
    }
    println!("total variation {:.4}", out.results["total_variation"]);
    Ok(())
}
