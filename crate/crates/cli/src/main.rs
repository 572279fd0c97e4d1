use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pilotwave::experiment::{
    preset_experiments, run_ensemble, run_single_observed, EnsembleSpec,
};
use pilotwave::io::{
    self, config_hash_run, config_hash_sweep, read_sweep_csv, ConfigFile, GridInfo, Manifest,
    OutcomeCounts, SweepMeta, ARTIFACT_VERSION,
};
use pilotwave::stats::analyze_ensemble;
use pilotwave::units::to_lambda_c;

#[derive(Parser)]
#[command(
    name = "pilotwave",
    version,
    about = "Pilot-wave diffraction laboratory: a Klein-Gordon field coupled to a point particle, driven through slit apparatuses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trajectory from a config file.
    Run(RunArgs),
    /// Run an ensemble preset or config file, with checkpointing.
    Sweep(SweepArgs),
    /// Post-process one ensemble CSV into histogram/map/fit/peaks outputs.
    Analyze(AnalyzeArgs),
    /// Emit plot-ready figure bundles from a directory of sweep results.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Ensemble preset name (see `sweep --preset list`).
    #[arg(long)]
    preset: Option<String>,
    /// TOML ensemble configuration (alternative to --preset).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker count (default: PILOTWAVE_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Checkpoint directory for resumable sweeps.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Reduced resolution and run counts.
    #[arg(long)]
    desk_scale: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Ensemble results CSV produced by `sweep`.
    csv: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing sweep result CSVs.
    #[arg(long)]
    results: PathBuf,
    /// Output directory for the figure bundles.
    #[arg(long, default_value = "report")]
    out: PathBuf,
    /// Also dump apparatus potential rasters.
    #[arg(long)]
    apparatus: bool,
}

fn default_workers() -> usize {
    std::env::var("PILOTWAVE_WORKERS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match code {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let file = ConfigFile::load(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = file.run_config()?;
    config.keep_trajectory = true;
    let hash = config_hash_run(&config);
    std::fs::create_dir_all(&args.out)?;

    let snapshot_stride = file.run.snapshot_stride.unwrap_or(0);
    let out = args.out.clone();
    let grid = config.grid.clone();
    let t0 = Instant::now();
    let mut snapshot_err = None;
    let result = run_single_observed(&config, |field, _| {
        if snapshot_stride > 0 && field.step % snapshot_stride == 0 && snapshot_err.is_none() {
            let path = out.join(format!("snapshot_{:08}.csv", field.step));
            if let Err(e) = io::write_raster_csv(&path, &field.phi, &grid, field.time) {
                snapshot_err = Some(e);
            }
        }
    })?;
    if let Some(e) = snapshot_err {
        return Err(e.into());
    }

    let trajectory = result.trajectory.as_deref().unwrap_or(&[]);
    io::write_trajectory_csv(&args.out.join("trajectory.csv"), trajectory, &hash)?;

    let manifest = Manifest {
        artifact_version: ARTIFACT_VERSION.into(),
        config_hash: hash,
        preset: None,
        desk_scale: false,
        grid: GridInfo::of(&config.grid),
        counts: OutcomeCounts::tally(std::slice::from_ref(&result)),
        timing_seconds: t0.elapsed().as_secs_f64(),
        workers: 1,
        config: file,
    };
    manifest.write(&args.out.join("run_manifest.json"))?;

    println!(
        "outcome: {}  theta: {}  u_steady: {}",
        result.outcome.as_str(),
        result
            .theta
            .map(|t| format!("{t:.6} rad"))
            .unwrap_or_else(|| "-".into()),
        result
            .u_steady
            .map(|u| format!("{u:.4} c"))
            .unwrap_or_else(|| "-".into()),
    );
    Ok(0)
}

fn sweep_jobs(args: &SweepArgs) -> Result<Vec<(String, EnsembleSpec, Option<String>, ConfigFile)>> {
    if let Some(name) = &args.preset {
        let presets = preset_experiments();
        if name == "list" {
            for (k, p) in &presets {
                println!("{k}: {}", p.description);
            }
            std::process::exit(0);
        }
        let preset = presets.get(name.as_str()).with_context(|| {
            format!(
                "unknown preset {name:?}; available: {}",
                presets.keys().cloned().collect::<Vec<_>>().join(", ")
            )
        })?;
        let mut jobs = Vec::new();
        for (label, spec) in preset.ensembles(args.desk_scale)? {
            let file = io::config_file_for_sweep(&spec);
            jobs.push((label, spec, Some(name.clone()), file));
        }
        Ok(jobs)
    } else if let Some(path) = &args.config {
        let file =
            ConfigFile::load(path).with_context(|| format!("reading {}", path.display()))?;
        let spec = file.ensemble_spec()?;
        let label = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("ensemble")
            .to_string();
        Ok(vec![(label, spec, None, file)])
    } else {
        bail!("sweep needs --preset <name> or --config <file>");
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let jobs = sweep_jobs(args)?;
    let workers = args.workers.unwrap_or_else(default_workers);
    std::fs::create_dir_all(&args.out)?;

    let mut all_ok = true;
    for (label, spec, preset, file) in jobs {
        let hash = config_hash_sweep(&spec);
        let checkpoint = args
            .checkpoint
            .as_ref()
            .map(|dir| dir.join(format!("{label}.checkpoint.csv")));
        let t0 = Instant::now();
        let results = run_ensemble(&spec, workers, checkpoint.as_deref())?;
        let elapsed = t0.elapsed().as_secs_f64();

        let meta = SweepMeta {
            config_hash: &hash,
            apparatus: &spec.base.apparatus,
            grid: &spec.base.grid,
        };
        let csv_path = args.out.join(format!("{label}.csv"));
        io::write_results_csv_atomic(&csv_path, &results, Some(&meta))?;

        let counts = OutcomeCounts::tally(&results);
        let manifest = Manifest {
            artifact_version: ARTIFACT_VERSION.into(),
            config_hash: hash,
            preset: preset.clone(),
            desk_scale: args.desk_scale,
            grid: GridInfo::of(&spec.base.grid),
            counts: counts.clone(),
            timing_seconds: elapsed,
            workers,
            config: file,
        };
        manifest.write(&args.out.join(format!("{label}_manifest.json")))?;

        let completed = counts.total - counts.failed;
        let frac = completed as f64 / counts.total.max(1) as f64;
        println!(
            "{label}: {} runs in {elapsed:.1}s  good={} reflected={} timed_out={} failed={}",
            counts.total, counts.exited_downstream, counts.reflected, counts.timed_out,
            counts.failed
        );
        if frac < 0.9 {
            eprintln!("{label}: only {:.0}% of runs completed", frac * 100.0);
            all_ok = false;
        }
    }
    Ok(if all_ok { 0 } else { 2 })
}

fn analyze_csv(csv: &Path, out: &Path) -> Result<()> {
    let (results, meta) = read_sweep_csv(csv)?;
    let spec = meta.apparatus.clone().context(
        "results CSV carries no apparatus metadata header; re-run `sweep` to regenerate it",
    )?;
    let mut bs: Vec<f64> = results.iter().map(|r| r.b).collect();
    bs.dedup();
    if bs.len() != 1 {
        bail!("ensemble CSV mixes couplings; analyze one (b, p0) file at a time");
    }
    let b = bs[0];
    let analysis = analyze_ensemble(&results, &spec, b)?;

    std::fs::create_dir_all(out)?;
    io::write_histogram_csv(&out.join("histogram.csv"), &analysis)?;
    io::write_map_csv(&out.join("map.csv"), &analysis)?;
    io::write_peaks_csv(&out.join("peaks.csv"), &analysis)?;
    let hash = meta.config_hash.unwrap_or_default();
    io::write_fit_json(&out.join("fit.json"), &analysis, b, &hash)?;

    println!(
        "n_good={}  u_steady={:.4}  lambda_eff={:.4} lc  chi2/nu: fraunhofer {:.3}, gaussian {:.3}",
        analysis.n_good,
        analysis.u_steady_mean,
        to_lambda_c(analysis.lambda_eff),
        analysis.fit_fraunhofer.reduced_pearson(),
        analysis.fit_gaussian.reduced_pearson(),
    );
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<i32> {
    analyze_csv(&args.csv, &args.out)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct LoadedEnsemble {
    b: f64,
    p0: f64,
    analysis: pilotwave::stats::EnsembleAnalysis,
}

fn load_for_report(path: &Path) -> Result<LoadedEnsemble> {
    let (results, meta) = read_sweep_csv(path)?;
    let spec = meta
        .apparatus
        .clone()
        .with_context(|| format!("{}: no apparatus metadata", path.display()))?;
    let b = results.first().map(|r| r.b).unwrap_or(0.0);
    let p0 = results.first().map(|r| r.p0).unwrap_or(0.0);
    let analysis = analyze_ensemble(&results, &spec, b)?;
    Ok(LoadedEnsemble { b, p0, analysis })
}

fn cmd_report(args: &ReportArgs) -> Result<i32> {
    std::fs::create_dir_all(&args.out)?;
    let find = |stem: &str| -> Option<PathBuf> {
        let p = args.results.join(format!("{stem}.csv"));
        p.exists().then_some(p)
    };

    // fig3a-c: single-slit histograms over b; fig3d: the double slit.
    for (fig, stem) in [
        ("fig3a", "single-b-sweep_b16.7"),
        ("fig3b", "single-b-sweep_b20.9"),
        ("fig3c", "single-b-sweep_b25"),
        ("fig3d", "double_b25"),
    ] {
        match find(stem) {
            Some(path) => {
                let loaded = load_for_report(&path)?;
                io::write_histogram_csv(&args.out.join(format!("{fig}.csv")), &loaded.analysis)?;
            }
            None => eprintln!("skip {fig}: {stem}.csv not found"),
        }
    }

    // fig5: diffraction maps; fig6a: fold peaks; fig6b: Lyapunov profiles.
    let singles = ["12.5", "16.7", "20.9", "25"];
    let mut fig5 = String::from("label,b,y,theta,dtheta_dy\n");
    let mut fig6a = String::from("b,y_peak,theta\n");
    let mut fig6b = String::from("b,y,lyapunov\n");
    let mut have5 = false;
    for b_str in singles {
        let Some(path) = find(&format!("single-b-sweep_b{b_str}")) else {
            eprintln!("skip fig5/6 entry: single-b-sweep_b{b_str}.csv not found");
            continue;
        };
        let loaded = load_for_report(&path)?;
        have5 = true;
        let map = &loaded.analysis.map;
        for i in 0..map.len() {
            fig5.push_str(&format!(
                "single_b{b_str},{},{},{},{}\n",
                loaded.b,
                to_lambda_c(map.y[i]),
                map.theta[i],
                map.dtheta_dy[i]
                    .map(|d| (d * pilotwave::units::LAMBDA_C).to_string())
                    .unwrap_or_default(),
            ));
        }
        for &p in &loaded.analysis.peaks {
            fig6a.push_str(&format!("{},{},\n", loaded.b, to_lambda_c(p)));
        }
        for &(y, l) in &loaded.analysis.lyapunov {
            fig6b.push_str(&format!("{},{},{}\n", loaded.b, to_lambda_c(y), l));
        }
    }
    if let Some(path) = find("double_b25") {
        let loaded = load_for_report(&path)?;
        let map = &loaded.analysis.map;
        for i in 0..map.len() {
            fig5.push_str(&format!(
                "double_b25,{},{},{},{}\n",
                loaded.b,
                to_lambda_c(map.y[i]),
                map.theta[i],
                map.dtheta_dy[i]
                    .map(|d| (d * pilotwave::units::LAMBDA_C).to_string())
                    .unwrap_or_default(),
            ));
        }
    }
    if have5 {
        io::atomic_write(&args.out.join("fig5.csv"), fig5.as_bytes())?;
        io::atomic_write(&args.out.join("fig6a.csv"), fig6a.as_bytes())?;
        io::atomic_write(&args.out.join("fig6b.csv"), fig6b.as_bytes())?;
    }

    // fig7a: central-node width vs b. fig7b: width vs steady speed.
    let mut fig7a = String::from("b,width_measured,width_predicted\n");
    let mut have7a = false;
    for b_str in singles {
        if let Some(path) = find(&format!("single-b-sweep_b{b_str}")) {
            let loaded = load_for_report(&path)?;
            if let (Some(m), Some(p)) = (
                loaded.analysis.central_width,
                loaded.analysis.central_width_predicted,
            ) {
                fig7a.push_str(&format!("{},{m},{p}\n", loaded.b));
                have7a = true;
            }
        }
    }
    if have7a {
        io::atomic_write(&args.out.join("fig7a.csv"), fig7a.as_bytes())?;
    }

    let mut fig7b = String::from("p0,u_steady,width_measured,width_predicted,lambda_db\n");
    let mut have7b = false;
    if let Ok(entries) = std::fs::read_dir(&args.results) {
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("velocity-sweep_") && n.ends_with(".csv"))
            })
            .collect();
        paths.sort();
        for path in paths {
            let loaded = load_for_report(&path)?;
            if let (Some(m), Some(p)) = (
                loaded.analysis.central_width,
                loaded.analysis.central_width_predicted,
            ) {
                let lambda_db =
                    to_lambda_c(std::f64::consts::TAU / loaded.analysis.p_steady);
                fig7b.push_str(&format!(
                    "{},{},{m},{p},{lambda_db}\n",
                    loaded.p0, loaded.analysis.u_steady_mean
                ));
                have7b = true;
            }
        }
    }
    if have7b {
        io::atomic_write(&args.out.join("fig7b.csv"), fig7b.as_bytes())?;
    }

    if args.apparatus {
        for (name, key) in [("apparatus_single", "single"), ("apparatus_double", "double")] {
            let spec = pilotwave::geometry::default_specs()[key].clone();
            let grid = pilotwave::experiment::grid_for_apparatus(&spec, 8)?;
            let app = pilotwave::geometry::build_apparatus(&spec, &grid)?;
            io::write_raster_csv(&args.out.join(format!("{name}.csv")), &app.v2, &grid, 0.0)?;
        }
    }

    println!("report bundles written to {}", args.out.display());
    Ok(0)
}
