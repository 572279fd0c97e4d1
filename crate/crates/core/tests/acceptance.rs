//! Acceptance suite: one test per criterion, always at desk scale unless
//! stated otherwise. Each test prints its measured numbers before asserting,
//! so a red criterion still documents what the build produced.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::OnceLock;

use pilotwave::experiment::{
    evenly_spaced_y, preset_experiments, run_ensemble, EnsembleSpec, Outcome,
    RunConfig, RunResult, Simulation,
};
use pilotwave::field::{
    deposit_source_with_sigma, field_energy, sample_gradient_with_sigma, step_field, FieldState,
    SpongeLayer, SpongeProfile,
};
use pilotwave::geometry::{default_specs, ApparatusSpec};
use pilotwave::grid::{Boundary, Field2, Grid2D, Vec2};
use pilotwave::io;
use pilotwave::particle::measure_steady_state;
use pilotwave::stats::{
    analyze_ensemble, chi_square, effective_wavelength, lyapunov_local, weighted_histogram,
    AngularHistogram, DiffractionMap, EnsembleAnalysis, FraunhoferModel, TabulatedDensity,
};
use pilotwave::units::{LAMBDA_C, T_C};

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2)
}

// ---------------------------------------------------------------------------
// Shared desk-scale ensembles
// ---------------------------------------------------------------------------

struct SweepData {
    spec: ApparatusSpec,
    results: Vec<RunResult>,
    analysis: EnsembleAnalysis,
}

fn single_b_sweep() -> &'static BTreeMap<String, SweepData> {
    static DATA: OnceLock<BTreeMap<String, SweepData>> = OnceLock::new();
    DATA.get_or_init(|| {
        let preset = &preset_experiments()["single-b-sweep"];
        let mut out = BTreeMap::new();
        for (label, spec) in preset.ensembles(true).unwrap() {
            let b = spec.base.b;
            let results = run_ensemble(&spec, workers(), None).unwrap();
            let analysis = analyze_ensemble(&results, &spec.base.apparatus, b).unwrap();
            out.insert(
                label,
                SweepData { spec: spec.base.apparatus.clone(), results, analysis },
            );
        }
        out
    })
}

fn double_desk() -> &'static SweepData {
    static DATA: OnceLock<SweepData> = OnceLock::new();
    DATA.get_or_init(|| {
        let preset = &preset_experiments()["double"];
        let (_, spec) = preset.ensembles(true).unwrap().remove(0);
        let results = run_ensemble(&spec, workers(), None).unwrap();
        let analysis = analyze_ensemble(&results, &spec.base.apparatus, spec.base.b).unwrap();
        SweepData { spec: spec.base.apparatus.clone(), results, analysis }
    })
}

// ---------------------------------------------------------------------------
// Criterion 1: field solver oracles
// ---------------------------------------------------------------------------

/// Modified Bessel K0 by quadrature of `int_0^inf exp(-x cosh t) dt`
/// (the independent oracle for the static screened field).
fn bessel_k0(x: f64) -> f64 {
    let n = 8000;
    let t_max = 14.0;
    let h = t_max / n as f64;
    let f = |t: f64| (-x * t.cosh()).exp();
    let mut sum = f(0.0) + f(t_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    sum * h / 3.0
}

#[test]
fn criterion_1_field_solver_oracles() {
    // --- discrete dispersion on 6 modes to 1e-10 relative.
    let n = 48;
    let dx = LAMBDA_C / 16.0;
    let grid = Grid2D::new(n, n, dx, 0.4 * dx, Vec2::ZERO).unwrap();
    let v2 = Field2::constant(n, n, 1.0);
    let mut worst: f64 = 0.0;
    for (mx, my) in [(1, 0), (0, 1), (1, 1), (2, 1), (3, 2), (5, 3)] {
        let kx = TAU * mx as f64 / (n as f64 * grid.dx);
        let ky = TAU * my as f64 / (n as f64 * grid.dx);
        let mode = Field2::from_fn(&grid, |x, y| (kx * x + ky * y + 0.3).cos());
        let norm: f64 = mode.data.iter().map(|v| v * v).sum();
        let mut state = FieldState::with_initial(mode.clone(), Field2::zeros(n, n));
        let mut coeffs = vec![1.0];
        for _ in 0..60 {
            step_field(&mut state, &v2, None, &grid, Boundary::Periodic, None).unwrap();
            coeffs.push(
                state.phi.data.iter().zip(&mode.data).map(|(a, b)| a * b).sum::<f64>() / norm,
            );
        }
        let cmax = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let mut ratios: Vec<f64> = (1..coeffs.len() - 1)
            .filter(|&i| coeffs[i].abs() > 0.2 * cmax)
            .map(|i| (coeffs[i + 1] + coeffs[i - 1]) / (2.0 * coeffs[i]))
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cos_omega_dt = ratios[ratios.len() / 2];
        let omega_sq = (2.0 - 2.0 * cos_omega_dt) / (grid.dt * grid.dt);
        let k_hat_sq = (4.0 / grid.cell_area())
            * ((kx * grid.dx / 2.0).sin().powi(2) + (ky * grid.dx / 2.0).sin().powi(2));
        worst = worst.max((omega_sq - (k_hat_sq + 1.0)).abs() / (k_hat_sq + 1.0));
    }
    println!("criterion 1a dispersion: worst relative error {worst:.2e} (limit 1e-10)");
    assert!(worst < 1e-10, "dispersion error {worst:.2e}");

    // --- closed-box energy drift over 1e4 steps.
    let n = 64;
    let grid = Grid2D::new(n, n, dx, 0.4 * dx, Vec2::ZERO).unwrap();
    let v2 = Field2::constant(n, n, 1.0);
    let lx = n as f64 * grid.dx;
    let phi = Field2::from_fn(&grid, |x, y| {
        let sx = std::f64::consts::PI * x / lx;
        let sy = std::f64::consts::PI * y / lx;
        sx.sin() * sy.sin() + 0.5 * (3.0 * sx).sin() * (2.0 * sy).sin()
    });
    let mut state = FieldState::with_initial(phi, Field2::zeros(n, n));
    let e0 = field_energy(&state, &v2, &grid, Boundary::Fixed);
    for _ in 0..10_000 {
        step_field(&mut state, &v2, None, &grid, Boundary::Fixed, None).unwrap();
    }
    let drift = (field_energy(&state, &v2, &grid, Boundary::Fixed) - e0).abs() / e0;
    println!("criterion 1b energy drift: {drift:.2e} over 1e4 steps (limit 1e-6)");
    assert!(drift < 1e-6, "energy drift {drift:.2e}");

    // --- static source steady state vs (b/2pi) K0(r), 2% for r in [1, 5].
    // Run at 48 cells per lambda_c with a grid-scale kernel so both the
    // smearing offset and the stencil error stay inside the tolerance; the
    // source ramps on adiabatically and the field is time-averaged to
    // suppress the residual ring-down.
    let half = 5.0 * LAMBDA_C;
    let grid = Grid2D::covering(48, (-half, half), (-half, half)).unwrap();
    let v2 = Field2::constant(grid.nx, grid.ny, 1.0);
    let sponge = SpongeLayer::new(&grid, &SpongeProfile::default()).unwrap();
    let sigma = grid.dx;
    let b = 16.7;
    let cx = grid.nx / 2;
    let cy = grid.ny / 2;
    let center = grid.pos(cx, cy);

    let mut state = FieldState::zeros(&grid);
    let ramp_time = 60.0;
    let t_avg_start = 230.0;
    let t_end = 330.0;
    let mut avg = Field2::zeros(grid.nx, grid.ny);
    let mut n_avg = 0usize;
    while state.time < t_end {
        let ramp = (state.time / ramp_time).min(1.0);
        let smooth = 0.5 * (1.0 - (std::f64::consts::PI * ramp).cos());
        let source = deposit_source_with_sigma(center, 1.0, b * smooth, &grid, 0.0, sigma).unwrap();
        step_field(&mut state, &v2, Some(&source), &grid, Boundary::Fixed, Some(&sponge))
            .unwrap();
        if state.time >= t_avg_start && state.step % 8 == 0 {
            for (a, p) in avg.data.iter_mut().zip(&state.phi.data) {
                *a += p;
            }
            n_avg += 1;
        }
    }
    for a in &mut avg.data {
        *a /= n_avg as f64;
    }

    let mut worst_green = 0.0_f64;
    let k_lo = (1.0 / grid.dx).ceil() as usize;
    let k_hi = (5.0 / grid.dx).floor() as usize;
    for k in k_lo..=k_hi {
        let r = k as f64 * grid.dx;
        let expect = b / TAU * bessel_k0(r);
        // Average the four axis directions.
        let got = (avg.get(cx + k, cy) + avg.get(cx - k, cy) + avg.get(cx, cy + k)
            + avg.get(cx, cy - k))
            / 4.0;
        worst_green = worst_green.max((got - expect).abs() / expect);
    }
    println!("criterion 1c static Green function: worst relative error {worst_green:.4} (limit 0.02)");
    assert!(worst_green < 0.02, "K0 profile error {worst_green:.4}");

    // --- matched kernels: no self-force at rest on the averaged field.
    let avg_state = FieldState::with_initial(avg.clone(), Field2::zeros(grid.nx, grid.ny));
    let self_grad = sample_gradient_with_sigma(&avg_state, center, &grid, sigma).unwrap();
    let mut max_grad = 0.0_f64;
    for k in k_lo..=k_hi {
        let g = sample_gradient_with_sigma(
            &avg_state,
            Vec2::new(center.x + k as f64 * grid.dx, center.y),
            &grid,
            sigma,
        )
        .unwrap();
        max_grad = max_grad.max(g.norm());
    }
    let ratio = self_grad.norm() / max_grad;
    println!("criterion 1d self-force: |grad| at source = {ratio:.2e} of peak (limit 1e-8)");
    assert!(ratio < 1e-8, "self-force ratio {ratio:.2e}");
}

// ---------------------------------------------------------------------------
// Criterion 2: free-particle physics
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_free_particle_equilibration_and_pilot_wavelength() {
    let mut spec = default_specs()["free"].clone();
    spec.launch_distance = 11.0 * LAMBDA_C;
    spec.detect_radius = 14.0 * LAMBDA_C;
    let config = RunConfig::new(16.7, 0.3, 0.0, spec, 16).unwrap();
    let mut sim = Simulation::new(&config).unwrap();

    let mut window = Vec::new();
    while sim.particle.time < 60.0 * T_C {
        sim.step().unwrap();
        if sim.field.step % 4 == 0 && sim.particle.time >= 30.0 * T_C {
            window.push(sim.particle);
        }
    }
    let steady = measure_steady_state(&window).unwrap();
    println!(
        "criterion 2a equilibration: u_steady = {:.4}, trailing drift = {:.4} (limit 0.01)",
        steady.u_steady, steady.drift
    );
    assert!(steady.drift < 0.01, "trailing speed drift {:.4}", steady.drift);

    //

    // Pilot wavelength from a line through the particle spanning the wave
    // packet (the leading and trailing emission branches straddle the
    // de Broglie wavenumber; the wave riding with the particle carries it).
    let lambda_db = steady.lambda_db;
    let grid = &sim.grid;
    let iy = ((sim.particle.q.y - grid.origin.y) / grid.dx).round() as usize;
    let from = sim.particle.q.x - 2.0 * lambda_db;
    let to = sim.particle.q.x + 2.0 * lambda_db;
    let mut crossings = Vec::new();
    for ix in 0..grid.nx - 1 {
        let (x0, x1) = (grid.x(ix), grid.x(ix + 1));
        if x0 < from || x1 > to {
            continue;
        }
        let (a, b) = (sim.field.phi.get(ix, iy), sim.field.phi.get(ix + 1, iy));
        if a * b < 0.0 {
            crossings.push(x0 + a / (a - b) * grid.dx);
        }
    }
    assert!(crossings.len() >= 4, "only {} zero crossings", crossings.len());
    // Least-squares slope of crossing position vs index = lambda / 2.
    let n = crossings.len() as f64;
    let mean_i = (n - 1.0) / 2.0;
    let mean_x = crossings.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, &x) in crossings.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxx += di * di;
        sxy += di * (x - mean_x);
    }
    let lambda_measured = 2.0 * sxy / sxx;
    let rel = (lambda_measured - lambda_db).abs() / lambda_db;
    println!(
        "criterion 2b pilot wavelength: measured {:.2}, lambda_dB {:.2}, relative error {:.4} (limit 0.05)",
        lambda_measured, lambda_db, rel
    );
    assert!(rel < 0.05, "pilot wavelength off by {rel:.4}");
}

// ---------------------------------------------------------------------------
// Criteria 3-5: desk-scale single-slit family
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_fold_spacing() {
    let sweep = single_b_sweep();
    let target = 0.28 * LAMBDA_C;
    let mut ok = true;
    for b in ["12.5", "16.7"] {
        let data = &sweep[&format!("single-b-sweep_b{b}")];
        match data.analysis.fold_spacing {
            Some(s) => {
                let rel = (s - target).abs() / target;
                println!(
                    "criterion 3 fold spacing b={b}: {:.3} lambda_c (target 0.28 +- 20%)",
                    s / LAMBDA_C
                );
                ok &= rel <= 0.2;
            }
            None => {
                println!("criterion 3 fold spacing b={b}: no interior fold peaks detected");
                ok = false;
            }
        }
    }
    assert!(ok, "fold spacing outside 0.28 lambda_c +- 20%");
}

#[test]
fn criterion_4_b_squared_scaling() {
    let sweep = single_b_sweep();
    let w_hi = sweep["single-b-sweep_b25"].analysis.central_width;
    let w_lo = sweep["single-b-sweep_b16.7"].analysis.central_width;
    let expect = (25.0f64 / 16.7).powi(2);
    match (w_hi, w_lo) {
        (Some(hi), Some(lo)) if lo > 0.0 => {
            let ratio = hi / lo;
            println!(
                "criterion 4 central-node width ratio: {hi:.4}/{lo:.4} = {ratio:.3} (target {expect:.2} +- 25%)"
            );
            assert!(
                (ratio - expect).abs() / expect <= 0.25,
                "width ratio {ratio:.3} outside {expect:.2} +- 25%"
            );
        }
        other => panic!("central widths unavailable or degenerate: {other:?}"),
    }
}

#[test]
fn criterion_5_chaos_onset() {
    let sweep = single_b_sweep();
    let mut all_edges_positive = true;
    for b in ["12.5", "16.7", "20.9", "25"] {
        let data = &sweep[&format!("single-b-sweep_b{b}")];
        let w = data.spec.slit_width;
        let edge_band = 0.5 * LAMBDA_C;
        let edge_max = data
            .analysis
            .lyapunov
            .iter()
            .filter(|(y, _)| (y.abs() - w / 2.0).abs() <= edge_band)
            .map(|&(_, l)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        println!("criterion 5 edge Lyapunov b={b}: max {edge_max:.2} (must be > 0)");
        all_edges_positive &= edge_max > 0.0;
    }
    let data = &sweep["single-b-sweep_b25"];
    let positive = data.analysis.lyapunov.iter().filter(|&&(_, l)| l > 0.0).count();
    let frac = positive as f64 / data.analysis.lyapunov.len().max(1) as f64;
    println!(
        "criterion 5 full-slit Lyapunov b=25: {positive}/{} positive ({frac:.2}, need >= 0.9)",
        data.analysis.lyapunov.len()
    );
    assert!(all_edges_positive, "edge Lyapunov not positive for every coupling");
    assert!(frac >= 0.9, "only {frac:.2} of the b=25 profile is chaotic");
}

// ---------------------------------------------------------------------------
// Criterion 6: double-slit model comparison
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_fraunhofer_beats_gaussian() {
    let data = double_desk();
    let n_good = data.analysis.n_good;
    println!("criterion 6 double slit: {n_good} good runs (need >= 400)");
    assert!(n_good >= 400, "only {n_good} good runs");
    let f = data.analysis.fit_fraunhofer.reduced_pearson();
    let g = data.analysis.fit_gaussian.reduced_pearson();
    println!(
        "criterion 6 chi2/nu: fraunhofer {f:.2}, gaussian {g:.2} (need fraunhofer < gaussian and < 3)"
    );
    assert!(f < g, "Fraunhofer ({f:.2}) does not beat Gaussian ({g:.2})");
    assert!(f < 3.0, "Fraunhofer chi2/nu = {f:.2} >= 3");
}

/// Desk-scale check of the double-slit transmission fraction.
#[test]
fn double_slit_good_fraction_near_half() {
    let data = double_desk();
    let counts = io::OutcomeCounts::tally(&data.results);
    let frac = counts.exited_downstream as f64 / counts.total as f64;
    println!(
        "double-slit good fraction: {}/{} = {frac:.3} (paper-scale 0.52 +- 0.15)",
        counts.exited_downstream, counts.total
    );
    assert!(
        (frac - 0.52).abs() <= 0.15,
        "good fraction {frac:.3} outside 0.52 +- 0.15"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: statistics unit oracles
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_statistics_oracles() {
    // chi-square against brute-force re-summation.
    let model = TabulatedDensity::from_fn(-1.0, 1.0, 4001, |t| (-t * t * 2.5).exp());
    let mut model = model;
    model.normalize();
    let edges: Vec<f64> = (0..=15).map(|i| -0.8 + 1.6 * i as f64 / 15.0).collect();
    let weights: Vec<f64> = (0..15).map(|i| 3.0 + ((i * 61) % 13) as f64).collect();
    let hist = AngularHistogram::new(edges, weights).unwrap();
    let report = chi_square(&hist, &model, 1).unwrap();
    let mut brute_p = 0.0;
    let mut brute_y = 0.0;
    for bin in &report.bins {
        let r = bin.observed - bin.expected;
        brute_p += r * r / bin.expected;
        let y = (r.abs() - 0.5).max(0.0);
        brute_y += y * y / bin.expected;
    }
    assert!((report.chi2_pearson - brute_p).abs() <= 1e-12 * brute_p);
    assert!((report.chi2_yates - brute_y).abs() <= 1e-12 * brute_y.max(1.0));

    // Fraunhofer zeros at analytic positions.
    let w = 4.07 * LAMBDA_C;
    let lam = 2.2;
    let m = FraunhoferModel::new(w, 0.0, lam).unwrap();
    for k in 1..=4 {
        let theta = (k as f64 * lam / w).asin();
        assert!(m.density(theta) < 1e-18 * m.density(0.0), "sinc zero {k}");
    }
    let d = 3.66 * LAMBDA_C;
    let m2 = FraunhoferModel::new(2.03 * LAMBDA_C, d, lam).unwrap();
    for k in 0..=2 {
        let theta = ((k as f64 + 0.5) * lam / d).asin();
        assert!(m2.density(theta) < 1e-18 * m2.density(0.0), "cos zero {k}");
    }

    // Lyapunov exact on affine maps.
    let ys: Vec<f64> = (0..160).map(|i| i as f64 * (LAMBDA_C / 15.0)).collect();
    for slope_per_lc in [1.0, 10.0] {
        let thetas: Vec<f64> = ys.iter().map(|y| slope_per_lc / LAMBDA_C * y).collect();
        let map = DiffractionMap::from_pairs(ys.iter().cloned().zip(thetas).collect()).unwrap();
        for &(_, l) in &lyapunov_local(&map, LAMBDA_C) {
            assert!((l - slope_per_lc.ln()).abs() < 1e-12);
        }
    }

    // Histogram totals equal the independent weight sum.
    let sigma_w = 0.41 * LAMBDA_C;
    let ys = [-0.3 * LAMBDA_C, 0.0, 0.2 * LAMBDA_C, 0.7 * LAMBDA_C];
    let results: Vec<RunResult> = ys
        .iter()
        .enumerate()
        .map(|(i, &y)| RunResult {
            run_id: i,
            b: 16.7,
            p0: 0.3,
            y,
            outcome: Outcome::ExitedDownstream,
            theta: Some(0.05 * i as f64 - 0.1),
            u_steady: Some(0.27),
            note: None,
            trajectory: None,
        })
        .collect();
    let hist = weighted_histogram(&results, &[0.0], sigma_w, Some(4)).unwrap();
    let brute: f64 = ys.iter().map(|y| (-(y * y) / (2.0 * sigma_w * sigma_w)).exp()).sum();
    assert!((hist.total_weight - brute).abs() <= 1e-12 * brute);

    // Effective wavelength identity at b = 68.
    for p in [0.11, 0.3, 0.77] {
        assert!((effective_wavelength(68.0, p) - TAU / p).abs() <= 1e-12 * TAU / p);
    }
    println!("criterion 7 statistics oracles: all exact checks passed");
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism and parallel invariance
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_determinism_and_checkpoint_resume() {
    let mut spec = default_specs()["free"].clone();
    spec.launch_distance = 6.0 * LAMBDA_C;
    spec.detect_radius = 5.0 * LAMBDA_C;
    let base = RunConfig::new(16.7, 0.3, 0.0, spec, 8).unwrap();
    let ensemble = EnsembleSpec {
        base,
        y_values: evenly_spaced_y(0.8 * LAMBDA_C, 10),
        b_values: None,
        p0_values: None,
    };

    let serial = run_ensemble(&ensemble, 1, None).unwrap();
    let parallel = run_ensemble(&ensemble, 4, None).unwrap();
    let csv_serial = io::results_csv_string(&serial, None);
    let csv_parallel = io::results_csv_string(&parallel, None);
    assert_eq!(csv_serial, csv_parallel, "worker count changed the ensemble CSV");

    // Interrupted run: complete the first half only, then resume.
    let dir = std::env::temp_dir().join(format!("pw-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let checkpoint = dir.join("partial.checkpoint.csv");
    io::write_results_csv_atomic(&checkpoint, &serial[..5], None).unwrap();
    let resumed = run_ensemble(&ensemble, 3, Some(&checkpoint)).unwrap();
    let csv_resumed = io::results_csv_string(&resumed, None);
    assert_eq!(csv_serial, csv_resumed, "checkpoint resume changed the ensemble CSV");
    std::fs::remove_dir_all(&dir).ok();
    println!("criterion 8 determinism: CSVs byte-identical across workers and resume");
}

// ---------------------------------------------------------------------------
// Criterion 9 (optional, ~1 h): velocity-regime flag
// ---------------------------------------------------------------------------

/// Slow launches track the effective-wavelength prediction; fast launches
/// fall below it. Heavy: run with `cargo test -p pilotwave --test acceptance
/// -- --ignored criterion_9`.
#[test]
#[ignore = "velocity sweep takes on the order of an hour at desk scale"]
fn criterion_9_velocity_regime() {
    let preset = &preset_experiments()["velocity-sweep"];
    let mut tracked = Vec::new();
    let mut fast = Vec::new();
    for (label, spec) in preset.ensembles(true).unwrap() {
        let p0 = spec.base.p0;
        if !(p0 <= 0.26 || p0 >= 0.7) {
            continue;
        }
        let results = run_ensemble(&spec, workers(), None).unwrap();
        let analysis = match analyze_ensemble(&results, &spec.base.apparatus, spec.base.b) {
            Ok(a) => a,
            Err(e) => {
                println!("criterion 9 {label}: analysis failed: {e}");
                continue;
            }
        };
        let (Some(m), Some(pred)) = (analysis.central_width, analysis.central_width_predicted)
        else {
            println!("criterion 9 {label}: degenerate widths");
            continue;
        };
        let u = analysis.u_steady_mean;
        let ratio = m / pred;
        println!("criterion 9 {label}: u={u:.3} width/predicted = {ratio:.3}");
        if u <= 0.25 {
            tracked.push(ratio);
        } else if p0 >= 0.7 {
            fast.push(ratio);
        }
    }
    assert!(
        !tracked.is_empty() && tracked.iter().all(|r| (r - 1.0).abs() <= 0.25),
        "slow-regime widths do not track the prediction within 25%: {tracked:?}"
    );
    assert!(
        !fast.is_empty() && fast.iter().all(|&r| r < 0.75),
        "fast-regime widths do not fall below the prediction: {fast:?}"
    );
}

// ---------------------------------------------------------------------------
// Full-scale reproduction presets (documentation pointers, not assertions)
// ---------------------------------------------------------------------------

/// The paper-scale chi-square values (1.36/0.89 Fraunhofer, 17.6/11.0
/// Gaussian) are reproduction targets for the full-scale `double` preset,
/// run via the CLI; they are not asserted at desk scale.
#[test]
fn full_scale_targets_documented() {
    let presets = preset_experiments();
    assert_eq!(presets["double"].y_count_full, 2500);
    assert_eq!(presets["double"].resolution_full, 16);
}
