//! Stochastic-mechanics toolkit.

pub mod constants;
pub mod electrodynamics;
pub mod experiment;
pub mod fields;
pub mod fokker_planck;
pub mod langevin;
pub mod mass_ledger;
pub mod schrodinger;
pub mod stats;
