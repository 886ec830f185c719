mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use omog_core::alignment::write_transform_table;
use omog_core::io::{
    evaluate_masks, evaluate_residuals, list_image_files, read_all_frames, read_frames, read_mask, synth_jitter,
    write_image, write_mask, FrameSource,
};
use omog_core::pipeline::{foreground_image, warm_start_with_stats};
use omog_core::{load_snapshot, run_stream, save_snapshot, Error, Frame, OnlineConfig, Result};

use config::{ModelFlags, StreamFlags};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (unknown flag, missing argument)
  3  invalid configuration (flag or config file values, batch too small)
  4  input or output error (unreadable files, bad formats, size mismatch)
  5  unreadable or incompatible snapshot
  6  numerical failure (singular systems, EM failure)
  7  alignment failure";

#[derive(Parser, Debug)]
#[command(name = "omog", version, about = "Online MoG background subtraction", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit an initial model to a batch of frames and save it
    #[command(after_help = EXIT_CODES)]
    Init {
        /// Frame directory (PGM/PNG, sorted by name) or raw stream file
        frames: PathBuf,
        /// Snapshot file to write
        #[arg(short, long)]
        output: PathBuf,
        /// Use only the first N frames
        #[arg(long)]
        frames_limit: Option<usize>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Stream frames through a saved model
    #[command(after_help = EXIT_CODES)]
    Run {
        /// Frame directory (PGM/PNG, sorted by name) or raw stream file
        frames: PathBuf,
        /// Snapshot to start from
        #[arg(short, long)]
        snapshot: PathBuf,
        /// Directory for emitted images and the transform table
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the updated snapshot here after the run
        #[arg(long)]
        save: Option<PathBuf>,
        /// Write background images to OUT/bg
        #[arg(long = "emit-bg")]
        emit_bg: bool,
        /// Write residual magnitude images to OUT/fg
        #[arg(long = "emit-fg")]
        emit_fg: bool,
        /// Write foreground masks to OUT/mask
        #[arg(long = "emit-mask")]
        emit_mask: bool,
        /// Do not print per-frame timing
        #[arg(short, long)]
        quiet: bool,
        #[command(flatten)]
        model: ModelFlags,
        #[command(flatten)]
        stream: StreamFlags,
    },
    /// Score masks or residual images against ground truth
    #[command(after_help = EXIT_CODES)]
    Eval {
        /// Directory of ground-truth masks
        #[arg(long)]
        truth: PathBuf,
        /// Directory of binary masks
        #[arg(long, conflicts_with = "residuals", required_unless_present = "residuals")]
        masks: Option<PathBuf>,
        /// Directory of residual magnitude images; the best global threshold is searched
        #[arg(long)]
        residuals: Option<PathBuf>,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Apply random rotations and translations to a frame sequence
    #[command(after_help = EXIT_CODES)]
    Jitter {
        /// Frame directory (PGM/PNG, sorted by name) or raw stream file
        frames: PathBuf,
        /// Output directory for jittered frames and transforms.txt
        #[arg(short, long)]
        out: PathBuf,
        /// Largest rotation in degrees
        #[arg(long, default_value_t = 5.0)]
        max_rot: f64,
        /// Largest shift in pixels on each axis
        #[arg(long, default_value_t = 5.0)]
        max_shift: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print a snapshot summary
    #[command(after_help = EXIT_CODES)]
    Inspect { snapshot: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::BatchTooSmall { .. } => 3,
        Error::InvalidInput(_)
        | Error::Io { .. }
        | Error::Format { .. }
        | Error::FrameSizeMismatch { .. }
        | Error::DimensionMismatch { .. } => 4,
        Error::Snapshot(_) | Error::Uninitialized => 5,
        Error::EmptySampleSet
        | Error::DegenerateSubspace(_)
        | Error::RankDeficient
        | Error::DegenerateTransform { .. }
        | Error::EmFailure { .. } => 6,
        Error::AlignmentFailure(_) => 7,
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn fmt_list(vs: &[f64]) -> String {
    vs.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(" ")
}

fn frame_count(source: &FrameSource) -> Result<usize> {
    Ok(read_frames(source)?.remaining())
}

fn cmd_init(frames: &Path, output: &Path, limit: Option<usize>, model: &ModelFlags) -> Result<()> {
    let file = model.file()?;
    let cfg = model.online_config(&file, OnlineConfig::default())?;
    let source = FrameSource::from_path(frames);
    let available = frame_count(&source)?;
    let n = limit.map_or(available, |l| l.min(available));
    if n < cfg.rank + 1 {
        return Err(Error::BatchTooSmall {
            needed: cfg.rank + 1,
            found: n,
        });
    }
    let batch: Vec<Frame> = read_frames(&source)?.take(n).collect::<Result<_>>()?;
    let (snapshot, stats) = warm_start_with_stats(&batch, &cfg, model.seed(&file).unwrap_or(0))?;
    save_snapshot(&snapshot, output)?;
    let mog = &snapshot.model.mog;
    println!("frames: {}", stats.frames);
    println!("size: {}x{}", snapshot.model.width, snapshot.model.height);
    println!("rank: {}", cfg.rank);
    println!("weights: {}", fmt_list(&mog.weights));
    println!("variances: {}", fmt_list(&mog.variances));
    println!(
        "residual: mean |e| {:.6e}, rms {:.6e}, mean log-likelihood {:.4}",
        stats.residual_mean_abs, stats.residual_rms, stats.mean_log_likelihood
    );
    Ok(())
}

struct Emit {
    bg: Option<PathBuf>,
    fg: Option<PathBuf>,
    mask: Option<PathBuf>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    frames: &Path,
    snapshot_path: &Path,
    out: Option<&Path>,
    save: Option<&Path>,
    emit: (bool, bool, bool),
    quiet: bool,
    model: &ModelFlags,
    stream: &StreamFlags,
) -> Result<()> {
    let file = model.file()?;
    let mut snapshot = load_snapshot(snapshot_path)?;
    let cfg = model.online_config(&file, snapshot.model.config.clone())?;
    if cfg.rank != snapshot.model.config.rank || cfg.mog_components != snapshot.model.config.mog_components {
        return Err(Error::InvalidConfig(format!(
            "snapshot has rank {} and {} components; they cannot change after init",
            snapshot.model.config.rank, snapshot.model.config.mog_components
        )));
    }
    let (emit_bg, emit_fg, emit_mask) = emit;
    let options = stream.stream_options(&file, emit_mask)?;
    if (emit_bg || emit_fg || emit_mask) && out.is_none() {
        return Err(Error::InvalidConfig("--emit-* needs --out".into()));
    }
    snapshot.model.config = cfg;
    if let Some(seed) = model.seed(&file) {
        snapshot.seed = seed;
    }

    let sub = |on: bool, name: &str| -> Result<Option<PathBuf>> {
        match (on, out) {
            (true, Some(dir)) => {
                let p = dir.join(name);
                create_dir(&p)?;
                Ok(Some(p))
            }
            _ => Ok(None),
        }
    };
    if let Some(dir) = out {
        create_dir(dir)?;
    }
    let emit = Emit {
        bg: sub(emit_bg, "bg")?,
        fg: sub(emit_fg, "fg")?,
        mask: sub(emit_mask, "mask")?,
    };

    let (w, h) = (snapshot.model.width, snapshot.model.height);
    let mut transforms = Vec::new();
    let mut position = 0usize;
    let summary = run_stream(&mut snapshot, read_frames(&FrameSource::from_path(frames))?, &options, |o| {
        let name = format!("{position:06}.pgm");
        if !quiet {
            match &o.failure {
                Some(msg) => println!("frame {position}: {:.3} ms (alignment failed: {msg})", o.model_seconds * 1e3),
                None => println!("frame {position}: {:.3} ms", o.model_seconds * 1e3),
            }
        }
        if let Some(t) = o.transform {
            transforms.push((position, t));
        }
        if let (Some(dir), Some(bg)) = (&emit.bg, o.background()) {
            write_image(&dir.join(&name), &bg)?;
        }
        if let (Some(dir), Some(r)) = (&emit.fg, &o.result) {
            write_image(&dir.join(&name), &foreground_image(r, w, h))?;
        }
        if let (Some(dir), Some(m)) = (&emit.mask, &o.mask) {
            write_mask(&dir.join(&name), m)?;
        }
        position += 1;
        Ok(())
    })?;

    if let (Some(dir), Some(_)) = (out, &options.align) {
        write_transform_table(&dir.join("transforms.txt"), &transforms)?;
    }
    if let Some(path) = save {
        save_snapshot(&snapshot, path)?;
    }
    println!(
        "frames: {}, alignment failures: {}, model time: {:.3} s, fps: {:.1}",
        summary.frames,
        summary.failures,
        summary.model_seconds,
        summary.fps()
    );
    Ok(())
}

fn stems(dir: &Path) -> Result<Vec<String>> {
    Ok(list_image_files(dir)?
        .iter()
        .map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
        .collect())
}

fn cmd_eval(truth: &Path, masks: Option<&Path>, residuals: Option<&Path>, report: Option<&Path>) -> Result<()> {
    let truths = list_image_files(truth)?.iter().map(|p| read_mask(p)).collect::<Result<Vec<_>>>()?;
    let result = match (masks, residuals) {
        (Some(dir), _) => {
            let ms = list_image_files(dir)?.iter().map(|p| read_mask(p)).collect::<Result<Vec<_>>>()?;
            evaluate_masks(&ms, &truths, stems(dir)?)?
        }
        (None, Some(dir)) => {
            let rs = read_all_frames(&FrameSource::Directory(dir.to_path_buf()))?;
            evaluate_residuals(&rs, &truths, None, stems(dir)?)?
        }
        (None, None) => return Err(Error::InvalidConfig("give --masks or --residuals".into())),
    };
    let json = result.to_json();
    match report {
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            println!(
                "precision {:.4} recall {:.4} F {:.4}",
                result.mean_precision, result.mean_recall, result.mean_f_measure
            );
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_jitter(frames: &Path, out: &Path, max_rot: f64, max_shift: f64, seed: u64) -> Result<()> {
    let input = read_all_frames(&FrameSource::from_path(frames))?;
    let (jittered, taus) = synth_jitter(&input, max_rot, max_shift, seed)?;
    create_dir(out)?;
    for (i, f) in jittered.iter().enumerate() {
        write_image(&out.join(format!("{i:06}.pgm")), f)?;
    }
    let rows: Vec<_> = taus.into_iter().enumerate().collect();
    write_transform_table(&out.join("transforms.txt"), &rows)?;
    println!("wrote {} frames to {}", jittered.len(), out.display());
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    let s = load_snapshot(path)?;
    let m = &s.model;
    println!("size: {}x{}", m.width, m.height);
    println!("rank: {}", m.config.rank);
    println!("frames processed: {}", s.frame_counter);
    println!("seed: {}", s.seed);
    println!("weights: {}", fmt_list(&m.mog.weights));
    println!("variances: {}", fmt_list(&m.mog.variances));
    println!("recursion residual: {:.3e}", m.subspace.recursion_residual());
    println!(
        "config: {}",
        serde_json::to_string(&m.config).expect("config serializes")
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Init {
            frames,
            output,
            frames_limit,
            model,
        } => cmd_init(frames, output, *frames_limit, model),
        Command::Run {
            frames,
            snapshot,
            out,
            save,
            emit_bg,
            emit_fg,
            emit_mask,
            quiet,
            model,
            stream,
        } => cmd_run(
            frames,
            snapshot,
            out.as_deref(),
            save.as_deref(),
            (*emit_bg, *emit_fg, *emit_mask),
            *quiet,
            model,
            stream,
        ),
        Command::Eval {
            truth,
            masks,
            residuals,
            report,
        } => cmd_eval(truth, masks.as_deref(), residuals.as_deref(), report.as_deref()),
        Command::Jitter {
            frames,
            out,
            max_rot,
            max_shift,
            seed,
        } => cmd_jitter(frames, out, *max_rot, *max_shift, *seed),
        Command::Inspect { snapshot } => cmd_inspect(snapshot),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
