//! Events per second of a single trajectory.
//!
//! `cargo run --release --example throughput -- [n] [T]`

use std::time::Instant;

use pmm_core::engine::{replica_rng, sample_initial, SimState};
use pmm_core::ModelParams;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(400, |s| s.parse().unwrap());
    let horizon: f64 = args.next().map_or(0.5, |s| s.parse().unwrap());
    let params = ModelParams::new(n, 0.0, 1.0, 1.5, 0.2, 0.8).unwrap();
    let mut rng = replica_rng(1, 0);
    let config = sample_initial(|u| 0.2 + 0.6 * u, &params, &mut rng).unwrap();
    let mut sim = SimState::new(params, config, rng).unwrap();
    let start = Instant::now();
    sim.advance_to(horizon, ());
    let secs = start.elapsed().as_secs_f64();
    println!(
        "n={n} T={horizon}: {} events in {secs:.2}s, {:.1} ns/event",
        sim.events(),
        1e9 * secs / sim.events() as f64
    );
}
