//! Scratch probe for sponge tuning (not part of the deliverable surface).

use pilotwave::field::{field_energy, step_field, FieldState, SpongeLayer, SpongeProfile};
use pilotwave::grid::{Boundary, Field2, Grid2D};
use pilotwave::units::LAMBDA_C;

fn pulse_return_fraction(width_lc: f64, strength: f64, kc: f64, s_env: f64) -> f64 {
    let half = 8.0 * LAMBDA_C;
    let grid = Grid2D::covering(8, (-half, half), (-half, half)).unwrap();
    let v2 = Field2::constant(grid.nx, grid.ny, 1.0);
    let profile = SpongeProfile { width: width_lc * LAMBDA_C, strength };
    let layer = SpongeLayer::new(&grid, &profile).unwrap();

    let r0 = 2.0 * LAMBDA_C;
    let phi = Field2::from_fn(&grid, |x, y| {
        let r = (x * x + y * y).sqrt();
        (-(r - r0).powi(2) / (2.0 * s_env * s_env)).exp() * (kc * (r - r0)).cos()
    });
    let mut state = FieldState::with_initial(phi, Field2::zeros(grid.nx, grid.ny));
    let e0 = field_energy(&state, &v2, &grid, Boundary::Fixed);

    let inner = half / 2.0;
    let inner_energy = |st: &FieldState| -> f64 {
        let mut e = 0.0;
        for iy in 1..grid.ny - 1 {
            for ix in 1..grid.nx - 1 {
                let p = grid.pos(ix, iy);
                if p.x.abs() <= inner && p.y.abs() <= inner {
                    let c = st.phi.get(ix, iy);
                    let gx = (st.phi.get(ix + 1, iy) - st.phi.get(ix - 1, iy)) / (2.0 * grid.dx);
                    let gy = (st.phi.get(ix, iy + 1) - st.phi.get(ix, iy - 1)) / (2.0 * grid.dx);
                    let d = st.phi_dot.get(ix, iy);
                    e += 0.5 * (d * d + gx * gx + gy * gy + c * c);
                }
            }
        }
        e * grid.cell_area()
    };

    let mut max_ret: f64 = 0.0;
    let mut trace = Vec::new();
    while state.time < 220.0 {
        step_field(&mut state, &v2, None, &grid, Boundary::Fixed, Some(&layer)).unwrap();
        if state.step % 40 == 0 {
            let e = inner_energy(&state);
            trace.push((state.time, e / e0));
            if state.time >= 100.0 {
                max_ret = max_ret.max(e);
            }
        }
    }
    for (t, f) in &trace {
        if (t / 10.0).fract() < 0.05 {
            eprintln!("  t={t:7.1}  inner/E0 = {f:.5}");
        }
    }
    max_ret / e0
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let width: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let strength: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.4);
    let kc: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2.5);
    let senv: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    println!(
        "width={width} strength={strength} kc={kc} senv={senv} -> return {:.5}",
        pulse_return_fraction(width, strength, kc, senv)
    );
}
