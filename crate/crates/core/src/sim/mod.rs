//! Monte Carlo BER experiment driver: configuration parsing, Eb/N0 sweeps
//! with early stopping, CSV output and static plots.
//!
//! Reproducibility: every frame's randomness is derived from
//! `(seed, sweep point, frame index)` alone, and early-stopping decisions
//! are taken at fixed batch boundaries, so results are bit-identical for
//! any worker count.

pub mod plot;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::assets;
use crate::channel::{
    draw_realization, ebn0_to_noise_var, mac_transmit, ChannelParams, JakesModel, MAX_FD_TS,
};
use crate::codec::ConvCode;
use crate::demod::DetectionMode;
use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::signal::BitSeq;
use crate::turbo::{OuterCodeKind, OuterDecoder, RelayReceiver, TurboConfig};

/// Frames simulated between early-stopping checks. Fixed so that stopping
/// points do not depend on the worker count.
const BATCH_FRAMES: usize = 64;

/// A full sweep description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: DetectionMode,
    pub code: OuterCodeKind,
    pub fd_ts: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub es: f64,
    /// Eb/N0 sweep points in dB.
    pub ebn0_db: Vec<f64>,
    /// Iteration counts reported in the output (the receiver runs to the
    /// largest one).
    pub iterations: Vec<usize>,
    pub max_frames: usize,
    pub min_error_events: usize,
    pub seed: u64,
    /// Worker threads; 0 picks the number of cores.
    pub workers: usize,
    pub llr_clamp: f64,
    pub ldpc_iterations: usize,
    /// Optional parity-check matrix override (alist file).
    pub ldpc_alist: Option<PathBuf>,
    /// Optional interleaver override (one index per line).
    pub interleaver: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: DetectionMode::Coherent,
            code: OuterCodeKind::Ldpc,
            fd_ts: 0.03,
            sigma1_sq: 0.5,
            sigma2_sq: 0.5,
            es: 1.0,
            ebn0_db: expand_sweep(0.0, 2.0, 10.0),
            iterations: vec![1, 2, 3],
            max_frames: 10_000,
            min_error_events: 100,
            seed: 1,
            workers: 0,
            llr_clamp: crate::demod::DEFAULT_LLR_CLAMP,
            ldpc_iterations: 20,
            ldpc_alist: None,
            interleaver: None,
        }
    }
}

fn expand_sweep(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

impl ExperimentConfig {
    /// Parses a flat `key = value` config. Empty text gives the defaults;
    /// unknown keys are rejected. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |reason: String| Error::Config(format!("key `{key}`: {reason}"));
        match key {
            "mode" => {
                self.mode = match value {
                    "coherent" => DetectionMode::Coherent,
                    "noncoherent" => DetectionMode::Noncoherent,
                    other => return Err(bad(format!("unknown mode `{other}`"))),
                }
            }
            "code" => {
                self.code = match value {
                    "ldpc" => OuterCodeKind::Ldpc,
                    "conv" => OuterCodeKind::Conv,
                    other => return Err(bad(format!("unknown code `{other}`"))),
                }
            }
            "fd_ts" => self.fd_ts = parse_f64(key, value)?,
            "sigma1_sq" => self.sigma1_sq = parse_f64(key, value)?,
            "sigma2_sq" => self.sigma2_sq = parse_f64(key, value)?,
            "es" => self.es = parse_f64(key, value)?,
            "ebn0_db" => {
                if let Some((start, rest)) = value.split_once(':') {
                    let (step, stop) = rest.split_once(':').ok_or_else(|| {
                        bad("sweep must be start:step:stop or a comma list".into())
                    })?;
                    let start = parse_f64(key, start.trim())?;
                    let step = parse_f64(key, step.trim())?;
                    let stop = parse_f64(key, stop.trim())?;
                    if !(step > 0.0) {
                        return Err(bad(format!("sweep step must be positive, got {step}")));
                    }
                    if stop < start {
                        return Err(bad(format!("sweep stop {stop} below start {start}")));
                    }
                    self.ebn0_db = expand_sweep(start, step, stop);
                } else {
                    self.ebn0_db = value
                        .split(',')
                        .map(|tok| parse_f64(key, tok.trim()))
                        .collect::<Result<_>>()?;
                }
            }
            "iterations" => {
                self.iterations = value
                    .split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse::<usize>()
                            .map_err(|_| bad(format!("bad iteration count `{tok}`")))
                    })
                    .collect::<Result<_>>()?;
            }
            "max_frames" => self.max_frames = parse_usize(key, value)?,
            "min_error_events" => self.min_error_events = parse_usize(key, value)?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad(format!("bad seed `{value}`")))?
            }
            "workers" => self.workers = parse_usize(key, value)?,
            "llr_clamp" => self.llr_clamp = parse_f64(key, value)?,
            "ldpc_iterations" => self.ldpc_iterations = parse_usize(key, value)?,
            "ldpc_alist" => self.ldpc_alist = Some(PathBuf::from(value)),
            "interleaver" => self.interleaver = Some(PathBuf::from(value)),
            other => {
                return Err(Error::Config(format!("unknown key `{other}`")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, reason: String| Error::Config(format!("key `{key}`: {reason}"));
        if self.ebn0_db.is_empty() {
            return Err(err("ebn0_db", "sweep must not be empty".into()));
        }
        if self.iterations.is_empty() || self.iterations.contains(&0) {
            return Err(err(
                "iterations",
                "must list at least one positive count".into(),
            ));
        }
        if self.max_frames == 0 {
            return Err(err("max_frames", "must be at least 1".into()));
        }
        if self.min_error_events == 0 {
            return Err(err("min_error_events", "must be at least 1".into()));
        }
        if !(self.fd_ts >= 0.0 && self.fd_ts <= MAX_FD_TS) {
            return Err(err(
                "fd_ts",
                format!("must lie in [0, {MAX_FD_TS}], got {}", self.fd_ts),
            ));
        }
        for (key, value) in [
            ("sigma1_sq", self.sigma1_sq),
            ("sigma2_sq", self.sigma2_sq),
            ("es", self.es),
            ("llr_clamp", self.llr_clamp),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(err(key, format!("must be positive, got {value}")));
            }
        }
        if self.ldpc_iterations == 0 {
            return Err(err("ldpc_iterations", "must be at least 1".into()));
        }
        Ok(())
    }

    /// Largest iteration count the receiver must run.
    pub fn max_iteration(&self) -> usize {
        *self.iterations.iter().max().expect("validated non-empty")
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("key `{key}`: bad number `{value}`")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("key `{key}`: bad count `{value}`")))
}

/// One (Eb/N0, iteration) result row.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub mode: DetectionMode,
    pub code: OuterCodeKind,
    pub fd_ts: f64,
    pub ebn0_db: f64,
    pub iteration: usize,
    pub frames: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub frame_errors: u64,
    /// Wall-clock seconds spent on this sweep point (shared by all of the
    /// point's iteration rows; not deterministic across runs).
    pub seconds: f64,
}

pub const CSV_HEADER: &str =
    "mode,code,fdTs,ebn0_db,iteration,frames,bit_errors,ber,frame_errors,seconds";

impl BerRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.4},{},{},{},{:.6e},{},{:.3}",
            self.mode,
            self.code,
            self.fd_ts,
            self.ebn0_db,
            self.iteration,
            self.frames,
            self.bit_errors,
            self.ber,
            self.frame_errors,
            self.seconds
        )
    }
}

/// Full CSV (header plus one row per record).
pub fn csv_string(records: &[BerRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&record.csv_row());
        out.push('\n');
    }
    out
}

/// Parses CSV text produced by [`csv_string`].
pub fn parse_csv(text: &str) -> Result<Vec<BerRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::Config("empty CSV".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::Config(format!(
            "unexpected CSV header `{}`",
            header.trim()
        )));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Config(format!(
                "CSV line {}: expected 10 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::Config(format!("CSV line {}: bad {what}", lineno + 2));
        records.push(BerRecord {
            mode: match fields[0] {
                "coherent" => DetectionMode::Coherent,
                "noncoherent" => DetectionMode::Noncoherent,
                _ => return Err(bad("mode")),
            },
            code: match fields[1] {
                "ldpc" => OuterCodeKind::Ldpc,
                "conv" => OuterCodeKind::Conv,
                _ => return Err(bad("code")),
            },
            fd_ts: fields[2].parse().map_err(|_| bad("fdTs"))?,
            ebn0_db: fields[3].parse().map_err(|_| bad("ebn0_db"))?,
            iteration: fields[4].parse().map_err(|_| bad("iteration"))?,
            frames: fields[5].parse().map_err(|_| bad("frames"))?,
            bit_errors: fields[6].parse().map_err(|_| bad("bit_errors"))?,
            ber: fields[7].parse().map_err(|_| bad("ber"))?,
            frame_errors: fields[8].parse().map_err(|_| bad("frame_errors"))?,
            seconds: fields[9].parse().map_err(|_| bad("seconds"))?,
        });
    }
    Ok(records)
}

/// Progress callback payload, reported once per completed sweep point.
#[derive(Debug, Clone, Copy)]
pub struct PointProgress {
    pub ebn0_db: f64,
    pub frames: u64,
    pub final_iteration_errors: u64,
    pub seconds: f64,
}

/// Everything a sweep shares across frames.
struct SweepContext {
    receiver: RelayReceiver,
    jakes: JakesModel,
    info_len: usize,
    coded_len: usize,
}

impl SweepContext {
    fn build(config: &ExperimentConfig) -> Result<Self> {
        let turbo = TurboConfig {
            iterations: config.max_iteration(),
            mode: config.mode,
            llr_clamp: config.llr_clamp,
            ldpc_iterations: config.ldpc_iterations,
        };
        let (outer, coded_len, info_len) = match config.code {
            OuterCodeKind::Ldpc => {
                let code = assets::load_ldpc(config.ldpc_alist.as_deref())?;
                let n = code.n();
                let k = code.k();
                (OuterDecoder::Ldpc(Arc::new(code)), n, k)
            }
            OuterCodeKind::Conv => {
                let n = assets::CONV_N;
                let k = ConvCode::info_len(n)?;
                (OuterDecoder::Conv(ConvCode::new()), n, k)
            }
        };
        let interleaver = assets::load_interleaver(coded_len, config.interleaver.as_deref())?;
        let receiver = RelayReceiver::new(turbo, outer, Arc::new(interleaver))?;
        let jakes = JakesModel::new(config.fd_ts)?;
        Ok(Self {
            receiver,
            jakes,
            info_len,
            coded_len,
        })
    }

    fn code_rate(&self) -> f64 {
        self.info_len as f64 / self.coded_len as f64
    }
}

/// Per-frame outcome: XOR-bit errors after each iteration.
struct FrameOutcome {
    errors_per_iteration: Vec<u32>,
}

fn simulate_frame(
    ctx: &SweepContext,
    params: &ChannelParams,
    seed: u64,
    point: u64,
    frame: u64,
) -> Result<FrameOutcome> {
    let mut rng = derive_rng(seed, point, frame);
    let (cw1, cw2) = match ctx.receiver.outer() {
        OuterDecoder::Ldpc(code) => {
            let d1: Vec<u8> = (0..ctx.info_len).map(|_| rng.random_range(0..=1)).collect();
            let d2: Vec<u8> = (0..ctx.info_len).map(|_| rng.random_range(0..=1)).collect();
            (code.encode(&d1)?, code.encode(&d2)?)
        }
        OuterDecoder::Conv(code) => {
            let d1: Vec<u8> = (0..ctx.info_len).map(|_| rng.random_range(0..=1)).collect();
            let d2: Vec<u8> = (0..ctx.info_len).map(|_| rng.random_range(0..=1)).collect();
            (code.encode(&d1)?, code.encode(&d2)?)
        }
    };
    let xor: Vec<u8> = cw1.iter().zip(&cw2).map(|(a, b)| a ^ b).collect();

    let interleaver = ctx.receiver.interleaver();
    let t1 = interleaver.interleave(&cw1)?;
    let t2 = interleaver.interleave(&cw2)?;
    let x1 = crate::signal::differential_encode(&BitSeq::coded(t1)?, 1, params.es)?;
    let x2 = crate::signal::differential_encode(&BitSeq::coded(t2)?, 1, params.es)?;

    let realization = draw_realization(params, &ctx.jakes, ctx.coded_len + 1, &mut rng)?;
    let r = mac_transmit(&x1, &x2, &realization)?;

    let csi = match ctx.receiver.config().mode {
        DetectionMode::Coherent => Some(&realization),
        DetectionMode::Noncoherent => None,
    };
    let decision = ctx.receiver.receive(&r, csi, params, Some(&xor))?;
    let errors_per_iteration = decision
        .trace
        .entries()
        .iter()
        .map(|entry| entry.xor_bit_errors.expect("reference supplied") as u32)
        .collect();
    Ok(FrameOutcome {
        errors_per_iteration,
    })
}

/// Runs a sweep, reporting one completed point at a time through `progress`.
pub fn run_sweep_with(
    config: &ExperimentConfig,
    mut progress: impl FnMut(PointProgress),
) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let ctx = SweepContext::build(config)?;
    let rate = ctx.code_rate();
    let max_iter = config.max_iteration();
    let bits_per_frame = ctx.coded_len as u64;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;

    let mut records = Vec::new();
    for (point, &ebn0_db) in config.ebn0_db.iter().enumerate() {
        let started = Instant::now();
        let delta_sq =
            ebn0_to_noise_var(ebn0_db, rate, config.es, config.sigma1_sq, config.sigma2_sq)?;
        let params = ChannelParams::new(
            config.sigma1_sq,
            config.sigma2_sq,
            delta_sq,
            config.es,
            config.fd_ts,
        )?;

        let mut bit_errors = vec![0u64; max_iter];
        let mut frame_errors = vec![0u64; max_iter];
        let mut frames = 0u64;

        while (frames as usize) < config.max_frames {
            let batch = BATCH_FRAMES.min(config.max_frames - frames as usize);
            let outcomes: Vec<Result<FrameOutcome>> = pool.install(|| {
                (frames..frames + batch as u64)
                    .into_par_iter()
                    .map(|f| simulate_frame(&ctx, &params, config.seed, point as u64, f))
                    .collect()
            });
            for outcome in outcomes {
                let outcome = outcome?;
                for (it, &e) in outcome.errors_per_iteration.iter().enumerate() {
                    bit_errors[it] += u64::from(e);
                    frame_errors[it] += u64::from(e > 0);
                }
            }
            frames += batch as u64;

            // Stop once every reported iteration has its error events.
            let satisfied = config
                .iterations
                .iter()
                .all(|&it| bit_errors[it - 1] >= config.min_error_events as u64);
            if satisfied {
                break;
            }
        }

        let seconds = started.elapsed().as_secs_f64();
        for &it in &config.iterations {
            records.push(BerRecord {
                mode: config.mode,
                code: config.code,
                fd_ts: config.fd_ts,
                ebn0_db,
                iteration: it,
                frames,
                bit_errors: bit_errors[it - 1],
                ber: bit_errors[it - 1] as f64 / (frames * bits_per_frame) as f64,
                frame_errors: frame_errors[it - 1],
                seconds,
            });
        }
        progress(PointProgress {
            ebn0_db,
            frames,
            final_iteration_errors: bit_errors[max_iter - 1],
            seconds,
        });
    }
    Ok(records)
}

/// Runs a sweep silently.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    run_sweep_with(config, |_| {})
}

/// Interpolated Eb/N0 (dB) at which a BER curve crosses `target`, using
/// log-linear interpolation between bracketing sweep points. Records must
/// belong to a single curve (one iteration count), sorted by Eb/N0.
/// Returns `None` when the curve never crosses the target.
pub fn crossing_ebn0(points: &[(f64, f64)], target: f64) -> Option<f64> {
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if y0 <= 0.0 || y1 <= 0.0 {
            // A zero-BER endpoint: treat as below target if the left end is
            // above it.
            if y0 >= target && y1 < target.min(1.0) {
                return Some(x1);
            }
            continue;
        }
        if (y0 >= target && y1 <= target) || (y0 <= target && y1 >= target) {
            let ly0 = y0.log10();
            let ly1 = y1.log10();
            let lt = target.log10();
            if (ly1 - ly0).abs() < 1e-12 {
                return Some(x0);
            }
            return Some(x0 + (x1 - x0) * (lt - ly0) / (ly1 - ly0));
        }
    }
    None
}

/// Extracts the `(ebn0, ber)` curve of one iteration from sweep records,
/// sorted by Eb/N0.
pub fn curve_of(records: &[BerRecord], iteration: usize) -> Vec<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.iteration == iteration)
        .map(|r| (r.ebn0_db, r.ber))
        .collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    points
}
