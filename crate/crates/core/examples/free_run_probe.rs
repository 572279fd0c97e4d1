//! Scratch probe: free-space exit angle vs sponge strength (should be ~0).

use pilotwave::experiment::{run_single, RunConfig};
use pilotwave::geometry::default_specs;
use pilotwave::units::LAMBDA_C;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let y_lc: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let res: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    let b: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(16.7);

    let mut spec = default_specs()["free"].clone();
    spec.launch_distance = 6.0 * LAMBDA_C;
    spec.detect_radius = 5.0 * LAMBDA_C;
    let config = RunConfig::new(b, 0.3, y_lc * LAMBDA_C, spec, res).unwrap();
    eprintln!(
        "grid {}x{} dx={:.4} launch=({:.2},{:.2})",
        config.grid.nx,
        config.grid.ny,
        config.grid.dx,
        config.apparatus.barrier_x - config.apparatus.launch_distance,
        config.y
    );
    let r = run_single(&config).unwrap();
    println!(
        "y={y_lc} res={res} b={b}: outcome={:?} theta={:?} u_steady={:?} note={:?}",
        r.outcome, r.theta, r.u_steady, r.note
    );
}
