//! Scratch probe: desk-scale single-slit ensemble diagnostics.

use pilotwave::experiment::{run_ensemble, Outcome};
use pilotwave::stats::{analyze_ensemble, FOLD_KEEP_BAND};
use pilotwave::units::LAMBDA_C;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let b: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(12.5);
    let count: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100);
    let preset_name: String = args.get(3).cloned().unwrap_or_else(|| "single-b-sweep".into());
    let sigma: Option<f64> = args.get(4).and_then(|s| s.parse().ok());

    let presets = pilotwave::preset_experiments();
    let preset = &presets[preset_name.as_str()];
    let desk = std::env::var("PILOTWAVE_RES16").is_err();
    let mut ensembles = preset.ensembles(desk).unwrap();
    // Pick the ensemble at this b (first p0).
    let (label, mut spec) = ensembles
        .drain(..)
        .find(|(l, _)| l.contains(&format!("b{b}")))
        .expect("b not in preset");
    spec.y_values = pilotwave::experiment::evenly_spaced_y(
        preset.y_half_range,
        count,
    );
    if let Some(s) = sigma {
        spec.base.kernel_sigma = s;
    }
    eprintln!(
        "running {label}: {} runs, grid {}x{}",
        spec.len(),
        spec.base.grid.nx,
        spec.base.grid.ny
    );
    let t0 = std::time::Instant::now();
    let results = run_ensemble(&spec, std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4), None).unwrap();
    let dt = t0.elapsed().as_secs_f64();

    let good = results.iter().filter(|r| r.outcome == Outcome::ExitedDownstream).count();
    let reflected = results.iter().filter(|r| r.outcome == Outcome::Reflected).count();
    let timed = results.iter().filter(|r| r.outcome == Outcome::TimedOut).count();
    let failed = results.iter().filter(|r| r.outcome == Outcome::Failed).count();
    println!(
        "{label}: {} runs in {dt:.1}s; good={good} reflected={reflected} timed_out={timed} failed={failed}",
        results.len()
    );

    match analyze_ensemble(&results, &spec.base.apparatus, b) {
        Ok(a) => {
            println!(
                "  u_steady_mean={:.4} p_steady={:.4} lambda_eff={:.4} lc ({:.4} nat) sigma_smooth={:.5} rad",
                a.u_steady_mean,
                a.p_steady,
                a.lambda_eff / LAMBDA_C,
                a.lambda_eff,
                a.sigma_smooth
            );
            println!(
                "  fold peaks (|y|<{:.2} lc): {:?}",
                FOLD_KEEP_BAND / LAMBDA_C,
                a.peaks.iter().map(|p| (p / LAMBDA_C * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            );
            println!(
                "  fold spacing = {:?} lc",
                a.fold_spacing.map(|s| s / LAMBDA_C)
            );
            println!(
                "  central width = {:?} rad (predicted {:?})",
                a.central_width, a.central_width_predicted
            );
            println!(
                "  chi2/nu: fraunhofer P={:.2} Y={:.2}; gaussian P={:.2} Y={:.2}",
                a.fit_fraunhofer.reduced_pearson(),
                a.fit_fraunhofer.reduced_yates(),
                a.fit_gaussian.reduced_pearson(),
                a.fit_gaussian.reduced_yates()
            );
            println!("  smoothness: {:?}", a.smoothness.class);
            let lpos = a.lyapunov.iter().filter(|&&(_, l)| l > 0.0).count();
            println!(
                "  lyapunov: {}/{} positive, mean {:?}",
                lpos,
                a.lyapunov.len(),
                a.smoothness.mean_lyapunov
            );
            // theta range
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in &results {
                if let Some(t) = r.theta {
                    lo = lo.min(t);
                    hi = hi.max(t);
                }
            }
            println!("  theta range: [{lo:.4}, {hi:.4}] rad");
            if std::env::var("DUMP_MAP").is_ok() {
                for i in 0..a.map.len() {
                    println!("MAP {:.5} {:.6}", a.map.y[i] / LAMBDA_C, a.map.theta[i]);
                }
            }
        }
        Err(e) => println!("  analysis failed: {e}"),
    }
}
