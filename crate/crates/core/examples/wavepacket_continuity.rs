//! Crank-Nicolson free packet: norm, spreading and the continuity residual
//! of its Madelung density under refinement.

use stochmech::experiment::packet_continuity_study;
use stochmech::stats::convergence_orders;

fn main() -> anyhow::Result<()> {
    let (levels, ledger) = packet_continuity_study(1.0, 1.0, 20.0, 201, 20, 1.0, 5)?;
    let orders = convergence_orders(&levels.iter().map(|l| l.residual_l2).collect::<Vec<_>>());
    println!("{:>6} {:>10} {:>12} {:>7}", "nodes", "dt", "residual", "order");
    for (i, l) in levels.iter().enumerate() {
        let p = if i == 0 { String::new() } else { format!("{:.3}", orders[i - 1]) };
        println!("{:>6} {:>10.3e} {:>12.4e} {p:>7}", l.nodes, l.dt, l.residual_l2);
    }
    println!("coarse run: {}", serde_json::to_string(&ledger["snapshots"][20])?);
    Ok(())
}
