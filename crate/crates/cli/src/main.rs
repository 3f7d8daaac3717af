//! `kstap`: simulate SIRV clutter cubes, estimate covariances, filter, and run
//! Monte Carlo sweeps and two-pass change detection.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::{debug, info};

use kstap::covariance::{kron_ls, lr_kron, scm, KronCovModel, LrKronOptions, SampleCovariance};
use kstap::eval::{
    multipass_change, run_sweep, ChangeMethod, Method, Metric, MultipassOptions, SteeringMode, SweepSpec,
};
use kstap::io::results::{planned_outputs, RunManifest};
use kstap::io::{emit_results, load_config, read_cube, write_cube, DataCube, ModelFile};
use kstap::par::{self, Execution};
use kstap::sim::{
    default_doppler_grid, inject_targets, make_ground_truth, make_test_set, make_training_set,
    simulate_multipass_pair, stream_rng, ScenarioConfig,
};
use kstap::stap::{
    kron_classical_filter, kron_full_filter, kron_spatial_filter, lr_stap_filter, optimal_filter, StapFilter,
};
use kstap::Error;

#[derive(Parser, Debug)]
#[command(name = "kstap", version, about = "Kronecker STAP experiments")]
struct Cli {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially and is bit-exact, 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Print the files a command would write, then exit without running it.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate training (and optionally test) cubes from a scenario config.
    Simulate(SimulateArgs),
    /// Estimate a covariance model from a cube.
    Estimate(EstimateArgs),
    /// Apply a clutter filter to every snapshot of a cube.
    Filter(FilterArgs),
    /// Run a Monte Carlo sweep over training sample counts.
    Evaluate(EvaluateArgs),
    /// Two-pass change detection between registered cubes.
    Multipass(MultipassArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Training cube (or the reference pass with --mission-out).
    #[arg(long)]
    out: PathBuf,
    /// Clutter-only test cube of `n_test` snapshots.
    #[arg(long)]
    test_out: Option<PathBuf>,
    /// Write a registered mission pass here; `out` becomes the reference pass.
    #[arg(long)]
    mission_out: Option<PathBuf>,
    /// Speckle coherence between the two passes.
    #[arg(long, default_value_t = 0.95)]
    coherence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum EstimateMethod {
    Lrkron,
    Kronls,
    Scm,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Training cube.
    #[arg(long = "in")]
    input: PathBuf,
    /// Spatial rank bound.
    #[arg(long, default_value_t = 1)]
    ra: usize,
    /// Temporal rank bound.
    #[arg(long, default_value_t = 20)]
    rb: usize,
    #[arg(long, value_enum, default_value_t = EstimateMethod::Lrkron)]
    method: EstimateMethod,
    /// Relative objective decrease at which lrkron stops.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Model file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FilterChoice {
    Kron,
    KronSpatial,
    KronClassical,
    LowRank(usize),
    Optimal,
}

impl FromStr for FilterChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kron" => Ok(FilterChoice::Kron),
            "kron-spatial" => Ok(FilterChoice::KronSpatial),
            "kron-classical" => Ok(FilterChoice::KronClassical),
            "opt" => Ok(FilterChoice::Optimal),
            _ => match s.strip_prefix("lr:").map(str::parse::<usize>) {
                Some(Ok(r)) if r > 0 => Ok(FilterChoice::LowRank(r)),
                _ => Err(format!(
                    "unknown filter `{s}` (expected kron, kron-spatial, kron-classical, lr:R or opt)"
                )),
            },
        }
    }
}

#[derive(Args, Debug)]
struct FilterArgs {
    /// Model file written by `estimate`.
    #[arg(long)]
    model: PathBuf,
    /// Cube to filter.
    #[arg(long = "in")]
    input: PathBuf,
    /// kron, kron-spatial, kron-classical, lr:R or opt.
    #[arg(long)]
    filter: FilterChoice,
    /// Cube of filtered snapshots.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Training sample counts, e.g. `n=1,2,5,10`.
    #[arg(long, value_parser = parse_sweep)]
    sweep: SweepAxis,
    /// Monte Carlo trials per sample count.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Comma-separated: opt, lr, kron, kron-spatial, kron-spatial-naive, kron-classical.
    #[arg(long, value_delimiter = ',', default_value = "lr,kron,kron-spatial")]
    methods: Vec<Method>,
    /// Comma-separated: rho, msr, auc.
    #[arg(long, value_delimiter = ',', default_value = "rho,msr,auc")]
    metrics: Vec<Metric>,
    /// Steering for the SINR loss: `grid` or `clutter-free`.
    #[arg(long, value_parser = parse_steering, default_value = "grid")]
    steering: SteeringMode,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>.manifest.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MultipassArgs {
    /// Reference pass cube.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Mission pass cube, registered to the reference.
    #[arg(long)]
    mission: PathBuf,
    /// incoherent, lr_stap or kron_stap.
    #[arg(long)]
    method: ChangeMethod,
    /// Temporal rank for kron_stap.
    #[arg(long, default_value_t = 20)]
    rb: usize,
    /// Components removed by lr_stap.
    #[arg(long, default_value_t = 40)]
    lr_rank: usize,
    /// CSV of per-bin change statistics.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Debug)]
struct SweepAxis(Vec<usize>);

fn parse_sweep(s: &str) -> Result<SweepAxis, String> {
    let list = s.strip_prefix("n=").ok_or("sweep must look like n=1,2,5")?;
    let values: Vec<usize> = list
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("bad sample count `{v}`: {e}")))
        .collect::<Result<_, _>>()?;
    if values.is_empty() || values.contains(&0) {
        return Err("sample counts must be positive".into());
    }
    Ok(SweepAxis(values))
}

fn parse_steering(s: &str) -> Result<SteeringMode, String> {
    match s {
        "grid" => Ok(SteeringMode::Grid),
        "clutter-free" => Ok(SteeringMode::ClutterFree),
        _ => Err(format!("unknown steering `{s}` (expected grid or clutter-free)")),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn manifest_path(primary: &Path) -> PathBuf {
    with_suffix(primary, ".manifest.json")
}

/// Files a command writes, in the order they are listed in its manifest.
fn outputs(cli: &Cli) -> Vec<PathBuf> {
    let mut files = match &cli.command {
        Command::Simulate(a) => {
            let mut v = vec![a.out.clone()];
            v.extend(a.test_out.clone());
            if let Some(m) = &a.mission_out {
                v.push(m.clone());
                v.push(with_suffix(m, ".targets.csv"));
            }
            v
        }
        Command::Estimate(a) => vec![a.out.clone()],
        Command::Filter(a) => vec![a.out.clone()],
        Command::Evaluate(a) => return planned_outputs(&a.out).to_vec(),
        Command::Multipass(a) => vec![a.out.clone()],
    };
    let first = files[0].clone();
    files.push(manifest_path(&first));
    files
}

fn load_scenario(path: &Path, seed: Option<u64>) -> kstap::Result<ScenarioConfig> {
    let mut cfg = load_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write_manifest(config: &impl serde::Serialize, seed: u64, files: &[PathBuf]) -> kstap::Result<()> {
    let manifest = files.last().expect("manifest path is always listed");
    RunManifest::new(config, seed, files)?.write(manifest)
}

const STREAM_TRAIN: u64 = 0;
const STREAM_CORRUPT: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_PAIR: u64 = 3;

fn simulate(a: &SimulateArgs, seed: Option<u64>, files: &[PathBuf]) -> kstap::Result<()> {
    let cfg = load_scenario(&a.config, seed)?;
    let gt = make_ground_truth(&cfg)?;
    let (p, q) = (cfg.p, cfg.q);
    if let Some(mission_path) = &a.mission_out {
        let mut rng = stream_rng(cfg.seed, STREAM_PAIR);
        let (reference, mission) = simulate_multipass_pair(&gt, &cfg, a.coherence, cfg.n_train, &mut rng)?;
        let (mission, mask) = inject_targets(mission, &cfg, &mut stream_rng(cfg.seed, STREAM_CORRUPT));
        write_cube(&a.out, &DataCube::new(p, q, reference)?)?;
        write_cube(mission_path, &DataCube::new(p, q, mission)?)?;
        let bins: String = mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(k, _)| format!("{k}\n"))
            .collect();
        std::fs::write(with_suffix(mission_path, ".targets.csv"), format!("bin\n{bins}"))?;
        info!("wrote reference and mission passes of {} bins", cfg.n_train);
    } else {
        let clean = make_training_set(&gt, &cfg, cfg.n_train, &mut stream_rng(cfg.seed, STREAM_TRAIN));
        let (train, mask) = inject_targets(clean, &cfg, &mut stream_rng(cfg.seed, STREAM_CORRUPT));
        debug!("{} corrupted training snapshots", mask.iter().filter(|m| **m).count());
        write_cube(&a.out, &DataCube::new(p, q, train)?)?;
        info!("wrote {} training snapshots to {}", cfg.n_train, a.out.display());
    }
    if let Some(test_path) = &a.test_out {
        let test = make_test_set(&gt, &cfg, None, cfg.n_test, &mut stream_rng(cfg.seed, STREAM_TEST));
        write_cube(test_path, &DataCube::new(p, q, test)?)?;
    }
    write_manifest(&cfg, cfg.seed, files)
}

fn sample_covariance(cube: &DataCube) -> kstap::Result<SampleCovariance> {
    scm(&cube.snapshots, cube.p, cube.q)
}

fn estimate(a: &EstimateArgs, files: &[PathBuf]) -> kstap::Result<()> {
    let cube = read_cube(&a.input)?;
    let s = sample_covariance(&cube)?;
    let model = match a.method {
        EstimateMethod::Scm => ModelFile::dense(&s),
        EstimateMethod::Kronls => ModelFile::Kron {
            method: "kronls".into(),
            model: kron_ls(&s)?,
        },
        EstimateMethod::Lrkron => {
            let opts = LrKronOptions {
                tol: a.tol,
                max_iter: a.max_iter,
                ..Default::default()
            };
            ModelFile::Kron {
                method: "lrkron".into(),
                model: lr_kron(&s, a.ra, a.rb, &opts)?,
            }
        }
    };
    if let ModelFile::Kron { model, .. } = &model {
        for (k, obj) in model.objective_trace.iter().enumerate() {
            println!("{k}\t{obj:.16e}");
        }
        info!("converged={} after {} iterations", model.converged, model.iterations);
    }
    model.save(&a.out)?;
    let record = serde_json::json!({
        "command": "estimate",
        "input": a.input.display().to_string(),
        "method": format!("{:?}", a.method).to_lowercase(),
        "ra": a.ra,
        "rb": a.rb,
        "tol": a.tol,
        "max_iter": a.max_iter,
    });
    write_manifest(&record, 0, files)
}

fn require_kron(model: &ModelFile) -> kstap::Result<&KronCovModel> {
    match model {
        ModelFile::Kron { model, .. } => Ok(model),
        ModelFile::Dense { .. } => Err(Error::Format(
            "this filter needs a Kronecker model (estimate with lrkron or kronls)".into(),
        )),
    }
}

fn build_filter(choice: FilterChoice, model: &ModelFile) -> kstap::Result<StapFilter> {
    let dense = || -> kstap::Result<SampleCovariance> {
        match model {
            ModelFile::Dense { p, q, n, s } => SampleCovariance::from_matrix(s.clone(), *n, *p, *q),
            ModelFile::Kron { model, .. } => SampleCovariance::from_matrix(model.covariance(), 1, model.p(), model.q()),
        }
    };
    match choice {
        FilterChoice::Kron => kron_full_filter(require_kron(model)?),
        FilterChoice::KronSpatial => kron_spatial_filter(require_kron(model)?),
        FilterChoice::KronClassical => kron_classical_filter(require_kron(model)?),
        FilterChoice::LowRank(r) => lr_stap_filter(&dense()?, r),
        FilterChoice::Optimal => {
            let s = dense()?;
            optimal_filter(&s.s, s.p, s.q)
        }
    }
}

fn filter(a: &FilterArgs, exec: Execution, files: &[PathBuf]) -> kstap::Result<()> {
    let model = ModelFile::load(&a.model)?;
    let cube = read_cube(&a.input)?;
    if model.dims() != (cube.p, cube.q) {
        return Err(Error::Dimension(format!(
            "model is {:?} but cube is ({}, {})",
            model.dims(),
            cube.p,
            cube.q
        )));
    }
    let f = build_filter(a.filter, &model)?;
    let out = f.apply_batch(&cube.snapshots, exec)?;
    write_cube(&a.out, &DataCube::new(cube.p, cube.q, out)?)?;
    let record = serde_json::json!({
        "command": "filter",
        "model": a.model.display().to_string(),
        "input": a.input.display().to_string(),
        "filter": format!("{:?}", a.filter),
    });
    write_manifest(&record, 0, files)
}

fn evaluate(a: &EvaluateArgs, seed: Option<u64>, exec: Execution) -> kstap::Result<()> {
    let cfg = load_scenario(&a.config, seed)?;
    let spec = SweepSpec {
        axis: a.sweep.0.clone(),
        methods: a.methods.clone(),
        metrics: a.metrics.clone(),
        trials: a.trials,
        steering: a.steering,
    };
    let result = run_sweep(&cfg, &spec, exec)?;
    for pt in &result.points {
        info!(
            "{:>18} n={:<5} {:<4} {:.6} ± {:.6}",
            pt.method.name(),
            pt.axis_value,
            pt.metric.name(),
            pt.mean,
            pt.stderr
        );
    }
    let record = serde_json::json!({ "scenario": cfg, "sweep": spec });
    emit_results(&result, &record, &a.out)?;
    Ok(())
}

fn multipass(a: &MultipassArgs, exec: Execution, files: &[PathBuf]) -> kstap::Result<()> {
    let reference = read_cube(&a.reference)?;
    let mission = read_cube(&a.mission)?;
    if (reference.p, reference.q) != (mission.p, mission.q) {
        return Err(Error::Dimension("reference and mission cubes differ in p or q".into()));
    }
    let (p, q) = (reference.p, reference.q);
    let opts = MultipassOptions {
        method: a.method,
        p,
        q,
        r_b: a.rb.min(q),
        lr_rank: a.lr_rank.min(2 * p * q - 1),
        dopplers: default_doppler_grid(q).into_iter().filter(|f| *f != 0.0).collect(),
    };
    let stats = multipass_change(&reference.snapshots, &mission.snapshots, &opts, exec)?;
    let mut csv = String::from("bin,change\n");
    for (k, v) in stats.iter().enumerate() {
        csv.push_str(&format!("{k},{v:.16e}\n"));
    }
    std::fs::write(&a.out, csv)?;
    let record = serde_json::json!({
        "command": "multipass",
        "ref": a.reference.display().to_string(),
        "mission": a.mission.display().to_string(),
        "options": opts,
    });
    write_manifest(&record, 0, files)
}

fn run(cli: &Cli) -> kstap::Result<()> {
    let files = outputs(cli);
    if cli.dry_run {
        for f in &files {
            println!("{}", f.display());
        }
        return Ok(());
    }
    let exec = Execution::from_threads(cli.threads);
    par::with_threads(cli.threads, || match &cli.command {
        Command::Simulate(a) => simulate(a, cli.seed, &files),
        Command::Estimate(a) => estimate(a, &files),
        Command::Filter(a) => filter(a, exec, &files),
        Command::Evaluate(a) => evaluate(a, cli.seed, exec),
        Command::Multipass(a) => multipass(a, exec, &files),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
