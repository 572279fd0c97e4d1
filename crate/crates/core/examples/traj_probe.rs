//! Scratch probe: dump the early trajectory of a coupled free particle.

use pilotwave::experiment::{RunConfig, Simulation};
use pilotwave::geometry::default_specs;
use pilotwave::units::{LAMBDA_C, T_C};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let y_lc: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let res: u32 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    let b: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(16.7);
    let t_end_tc: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(30.0);
    let sigma: Option<f64> = args.get(5).and_then(|s| s.parse().ok());

    let mut spec = default_specs()["free"].clone();
    spec.launch_distance = 6.0 * LAMBDA_C;
    spec.detect_radius = 5.0 * LAMBDA_C;
    let mut config = RunConfig::new(b, 0.3, y_lc * LAMBDA_C, spec, res).unwrap();
    if let Some(s) = sigma {
        config.kernel_sigma = s;
    }
    let mut sim = Simulation::new(&config).unwrap();
    let x0 = sim.particle.q.x;
    println!("t_tc,dx_lc,y_lc,px,py,speed");
    while sim.particle.time < t_end_tc * T_C {
        sim.step().unwrap();
        if sim.field.step % 20 == 0 {
            let p = sim.particle;
            println!(
                "{:.3},{:.4},{:.5},{:.5},{:.6},{:.5}",
                p.time / T_C,
                (p.q.x - x0) / LAMBDA_C,
                p.q.y / LAMBDA_C,
                p.p.x,
                p.p.y,
                p.speed()
            );
        }
    }
    // Field profile along the particle's line, ahead and behind.
    if std::env::var("DUMP_LINE").is_ok() {
        let grid = &sim.grid;
        let iy = ((sim.particle.q.y - grid.origin.y) / grid.dx).round() as usize;
        let ixp = ((sim.particle.q.x - grid.origin.x) / grid.dx).round() as usize;
        for ix in 0..grid.nx {
            let rel = (grid.x(ix) - grid.x(ixp)) / LAMBDA_C;
            eprintln!("LINE {rel:.4} {:.6e}", sim.field.phi.get(ix, iy));
        }
    }
}
