//! Command-line driver: Monte Carlo BER sweeps, plotting, and a hidden
//! demodulator-versus-oracle debugging check.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use turbo_dpsk::channel::{draw_realization, ebn0_definition, mac_transmit, ChannelParams, JakesModel};
use turbo_dpsk::demod::{demodulate, DetectionMode, PriorTable};
use turbo_dpsk::oracle::exhaustive_joint_map;
use turbo_dpsk::rng::derive_rng;
use turbo_dpsk::signal::{differential_encode, BitSeq};
use turbo_dpsk::sim::{self, plot::emit_plot, ExperimentConfig};

#[derive(Parser)]
#[command(name = "turbo-dpsk", version, about = "Two-way relay DPSK receiver simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER sweep and write a CSV of the results.
    Sweep(SweepArgs),
    /// Render a sweep CSV as an SVG figure.
    Plot(PlotArgs),
    /// Compare the demodulator against exhaustive enumeration (debug).
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config file (flat key = value); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, overriding the config (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Sweep CSV produced by `sweep`.
    csv: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Detection mode: coherent or noncoherent.
    #[arg(long, default_value = "noncoherent")]
    mode: String,
    /// Coded epochs per trial frame (at most 8).
    #[arg(long, default_value_t = 6)]
    epochs: usize,
    /// Number of random frames.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(args) => run_sweep(args),
        Command::Plot(args) => run_plot(args),
        Command::Oracle(args) => run_oracle(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn run_sweep(args: SweepArgs) -> turbo_dpsk::Result<()> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }

    eprintln!(
        "sweep: mode={} code={} fdTs={} points={} iterations={:?} seed={}",
        config.mode,
        config.code,
        config.fd_ts,
        config.ebn0_db.len(),
        config.iterations,
        config.seed
    );
    let records = sim::run_sweep_with(&config, |p| {
        eprintln!(
            "  {:>6.2} dB: {} frames, {} final-iteration bit errors ({:.1}s)",
            p.ebn0_db, p.frames, p.final_iteration_errors, p.seconds
        );
    })?;

    std::fs::create_dir_all(&args.out)?;
    let csv_path = args.out.join(format!("ber_{}_{}.csv", config.mode, config.code));
    std::fs::write(&csv_path, sim::csv_string(&records))?;
    let meta_path = csv_path.with_extension("meta.txt");
    std::fs::write(&meta_path, run_metadata(&config, &text))?;
    println!("{}", csv_path.display());
    Ok(())
}

fn run_metadata(config: &ExperimentConfig, raw_config: &str) -> String {
    let mut meta = String::new();
    meta.push_str("# sweep metadata\n");
    meta.push_str(&format!("definition: {}\n", ebn0_definition()));
    meta.push_str(&format!(
        "mode={} code={} fdTs={} sigma1_sq={} sigma2_sq={} es={} seed={} workers={}\n",
        config.mode,
        config.code,
        config.fd_ts,
        config.sigma1_sq,
        config.sigma2_sq,
        config.es,
        config.seed,
        config.workers
    ));
    meta.push_str(&format!(
        "iterations={:?} max_frames={} min_error_events={}\n",
        config.iterations, config.max_frames, config.min_error_events
    ));
    if !raw_config.is_empty() {
        meta.push_str("# config file\n");
        meta.push_str(raw_config);
        if !raw_config.ends_with('\n') {
            meta.push('\n');
        }
    }
    meta
}

fn run_plot(args: PlotArgs) -> turbo_dpsk::Result<()> {
    let text = std::fs::read_to_string(&args.csv)?;
    let records = sim::parse_csv(&text)?;
    std::fs::create_dir_all(&args.out)?;
    let stem = args
        .csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ber".into());
    let title = format!("{} / {}", records[0].mode, records[0].code);
    let out = args.out.join(format!("{stem}.svg"));
    emit_plot(&records, &title, &out)?;
    println!("{}", out.display());
    Ok(())
}

fn run_oracle(args: OracleArgs) -> turbo_dpsk::Result<()> {
    let mode = match args.mode.as_str() {
        "coherent" => DetectionMode::Coherent,
        "noncoherent" => DetectionMode::Noncoherent,
        other => {
            return Err(turbo_dpsk::Error::Config(format!(
                "unknown mode `{other}`"
            )))
        }
    };
    let params = ChannelParams::new(0.5, 0.5, 0.4, 1.0, 0.03)?;
    let model = JakesModel::new(params.fd_ts)?;
    let mut rng = derive_rng(args.seed, 0x0c11, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..args.trials {
        let n = args.epochs;
        let c1 = BitSeq::coded((0..n).map(|_| rng.random_range(0..=1u8)).collect())?;
        let c2 = BitSeq::coded((0..n).map(|_| rng.random_range(0..=1u8)).collect())?;
        let x1 = differential_encode(&c1, 1, params.es)?;
        let x2 = differential_encode(&c2, 1, params.es)?;
        let real = draw_realization(&params, &model, n + 1, &mut rng)?;
        let r = mac_transmit(&x1, &x2, &real)?;
        let prior = PriorTable::uniform(n);
        let csi = (mode == DetectionMode::Coherent).then_some(&real);
        let (_, app) = demodulate(&r, mode, csi, &prior, &params)?;
        let oracle = exhaustive_joint_map(&r, mode, csi, &prior, &params)?;
        for k in 0..n {
            for l in 0..4 {
                worst = worst.max((app.epoch(k)[l] - oracle.app.epoch(k)[l]).abs());
            }
        }
    }
    println!(
        "{} trials x {} epochs ({}): max |demod - oracle| = {worst:.3e}",
        args.trials, args.epochs, mode
    );
    Ok(())
}

fn _assert_path_is_send(_: &Path) {}
