//! Scratch probe: long free cruise. Reports drift speed, Zitter persistence,
//! and the pilot wavelength ahead of the particle at late time.

use pilotwave::experiment::{RunConfig, Simulation};
use pilotwave::geometry::default_specs;
use pilotwave::units::{LAMBDA_C, T_C};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let b: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(16.7);
    let sigma: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let res: u32 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(8);
    let t_end: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(60.0);
    let p0: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.3);

    let launch_lc: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(11.0);

    let mut spec = default_specs()["free"].clone();
    spec.launch_distance = launch_lc * LAMBDA_C;
    spec.detect_radius = (launch_lc + 3.0) * LAMBDA_C;
    let mut config = RunConfig::new(b, p0, 0.0, spec, res).unwrap();
    config.kernel_sigma = sigma;
    let mut sim = Simulation::new(&config).unwrap();
    if let Ok(raw) = std::env::var("PILOTWAVE_RAW_LAUNCH") {
        let p: f64 = raw.parse().unwrap();
        sim.particle.p = pilotwave::Vec2::new(p, 0.0);
    }

    let mut px_samples: Vec<(f64, f64)> = Vec::new();
    while sim.particle.time < t_end * T_C {
        sim.step().unwrap();
        if sim.field.step % 4 == 0 {
            px_samples.push((sim.particle.time, sim.particle.p.x));
        }
    }

    // Trailing 15 Tc: mean momentum, Zitter amplitude and period.
    let t_last = px_samples.last().unwrap().0;
    let tail: Vec<(f64, f64)> = px_samples
        .iter()
        .cloned()
        .filter(|(t, _)| *t >= t_last - 15.0 * T_C)
        .collect();
    let mean_p = tail.iter().map(|s| s.1).sum::<f64>() / tail.len() as f64;
    let amp = (tail.iter().map(|s| (s.1 - mean_p).powi(2)).sum::<f64>() / tail.len() as f64)
        .sqrt()
        * std::f64::consts::SQRT_2;
    let mut crossings = Vec::new();
    for w in tail.windows(2) {
        if (w[0].1 - mean_p) * (w[1].1 - mean_p) < 0.0 {
            crossings.push(0.5 * (w[0].0 + w[1].0));
        }
    }
    let zitter_period = if crossings.len() >= 3 {
        2.0 * (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64
    } else {
        f64::NAN
    };

    let u = mean_p / (1.0 + mean_p * mean_p).sqrt();
    let lambda_db = std::f64::consts::TAU / mean_p.abs().max(1e-9);

    // Pilot wavelength from zero crossings of phi along the particle's line,
    // in a window offset from the particle (positive = ahead).
    let measure = |from_rel: f64, to_rel: f64| -> (f64, f64, usize) {
        let grid = &sim.grid;
        let iy = ((sim.particle.q.y - grid.origin.y) / grid.dx).round() as usize;
        let from = sim.particle.q.x + from_rel;
        let to = sim.particle.q.x + to_rel;
        let mut line: Vec<(f64, f64)> = Vec::new();
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            if x >= from && x <= to {
                line.push((x, sim.field.phi.get(ix, iy)));
            }
        }
        let mut crossings = Vec::new();
        for w in line.windows(2) {
            if w[0].1 * w[1].1 < 0.0 {
                let f = w[0].1 / (w[0].1 - w[1].1);
                crossings.push(w[0].0 + f * (w[1].0 - w[0].0));
            }
        }
        let lambda = if crossings.len() >= 3 {
            2.0 * (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64
        } else {
            f64::NAN
        };
        let amp = line.iter().map(|s| s.1.abs()).fold(0.0_f64, f64::max);
        (lambda, amp, crossings.len())
    };

    let (near, amp_near, n1) = measure(1.0 * LAMBDA_C, 1.0 * LAMBDA_C + 2.0 * lambda_db);
    let (centered, amp_c, n0) = measure(-1.5 * lambda_db, 1.5 * lambda_db);
    let (behind, amp_b, n3) = measure(-1.0 * LAMBDA_C - 2.0 * lambda_db, -1.0 * LAMBDA_C);

    println!(
        "b={b} sigma={sigma} res={res} p0={p0}: mean_p={mean_p:.4} u={u:.4} dress={:.2} zitter_amp={amp:.4} zitter_T={:.3}Tc | lambda_db={lambda_db:.2} ahead={near:.2} ({:.2}, n={n1}, a={amp_near:.1e}) centered={centered:.2} ({:.2}, n={n0}, a={amp_c:.1e}) behind={behind:.2} ({:.2}, n={n3}, a={amp_b:.1e})",
        p0 / mean_p.max(1e-9),
        zitter_period / T_C,
        near / lambda_db,
        centered / lambda_db,
        behind / lambda_db,
    );
}
