//! Shared fixtures for the benchmarks.

use isotherm_core::protocol::Schedule;
use isotherm_core::BathParams;

/// `β = γ0 = 1`, `ω: 1 → 2` on a geometric schedule.
pub fn reference_schedule(num_steps: usize, delta_tau: f64) -> Schedule {
    let bath = BathParams::new(1.0, 1.0).expect("valid bath");
    Schedule::geometric(bath, 1.0, 2.0, num_steps, delta_tau).expect("valid schedule")
}
