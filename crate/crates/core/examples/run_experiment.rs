//! Runs a config file through the library and writes its run directory.

use std::path::PathBuf;

use stochmech::experiment::{run, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "configs/em-budget.toml".into());
    let cfg = ExperimentConfig::load(&path)?;
    let report = run(&cfg, None, &std::env::temp_dir().join("stochmech-runs"))?;
    for inv in &report.outcome.invariants {
        println!("{:<40} {:>12.4e} {} {:e}  {}", inv.name, inv.value, inv.relation, inv.bound, if inv.passed { "ok" } else { "FAILED" });
    }
    println!("{}", report.dir.display());
    Ok(())
}
