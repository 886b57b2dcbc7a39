//! Absorption and emission on the invariant-mass ledger, then a replayed
//! random log and the relativistic series.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochmech::constants::PhysicalConstants;
use stochmech::experiment::{random_events, reference_ledger_state};
use stochmech::mass_ledger::{apply_transition, relativistic_expansion, replay, LedgerLog, TermUpdate};

fn main() -> anyhow::Result<()> {
    let k = PhysicalConstants::si();
    let s0 = reference_ledger_state(&k)?;
    println!("m = {:.6e} kg, nu_vib = {:.6e} Hz", s0.mass, s0.nu_vib);
    let hartree = 4.3597447e-18;
    let up = apply_transition(&s0, hartree, 0.0, TermUpdate::Default, 0.0)?;
    let down = apply_transition(&up.after, -hartree, 0.0, TermUpdate::Default, 0.0)?;
    for (name, s) in [("absorbed", up.after), ("emitted", down.after)] {
        println!("{name:>9}: nu_vib = {:.12e} Hz, m = {:.6e} kg", s.nu_vib, s.mass);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let log = LedgerLog { initial: s0, events: random_events(&s0, &mut rng, 1000, 1e-3, k.c) };
    let log = LedgerLog {
        events: log.events.into_iter().filter(|e| matches!(e.update, TermUpdate::Default)).collect(),
        ..log
    };
    let h = replay(&log)?;
    println!("{} transitions, max mass drift {:.1e}", h.transitions.len(), h.max_mass_drift);

    let series = relativistic_expansion(s0.mass, 0.1 * k.c, k.c, 6)?;
    println!("coefficients {:?}", series.coefficients);
    for (n, s) in series.partial_sums.iter().enumerate() {
        println!("{} terms: {:.12e} J (rel error {:.2e})", n + 1, s, (s - series.exact).abs() / series.exact);
    }
    Ok(())
}
