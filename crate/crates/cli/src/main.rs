//! `segsa`: fit SA models, score images and analyse the scores from the shell.
//!
//! Exit status is 0 on success (warnings go to stderr), 2 on usage errors and
//! 3 when the data or the file system is at fault.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use segsa::aggregate::{read_score_csv, score_rows, write_score_csv, write_stats_csv, ScoreRow};
use segsa::analysis::savings::fraction_grid;
use segsa::analysis::{write_correlation_csv, write_curves_csv, SaLevel, SubsetSize, DEFAULT_THRESHOLDS};
use segsa::metrics::{Method, DEFAULT_VAR_THRESHOLD};
use segsa::pipeline::{
    self, write_file, Dataset, FitConfig, FitStatus, HeatmapConfig, PValueMode, PipelineError, ScoreConfig, SelectConfig,
    DEFAULT_ATS_PER_CLASS, DEFAULT_PIXELS_PER_CLASS_IMAGE, DEFAULT_PIXELS_PER_CLASS_SCORING,
};
use segsa::synth::{self, SynthConfig};
use segsa::ClassId;

const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "segsa", version, about = "Surprise Adequacy for semantic segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Dataset manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Fail up front if any file the manifest references is missing.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Directory holding `class_<id>.<method>.sam` files.
    #[arg(long)]
    models: PathBuf,
    #[arg(long, default_value = "mdsa")]
    method: Method,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model per class from label-mask pixel samples.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_PIXELS_PER_CLASS_IMAGE)]
        pixels_per_class: usize,
        #[arg(long, default_value_t = DEFAULT_ATS_PER_CLASS)]
        ats_per_class: usize,
        /// Comma-separated class ids; all declared classes by default.
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<u8>>,
        #[arg(long, default_value_t = DEFAULT_VAR_THRESHOLD)]
        var_threshold: f64,
        /// Fit report CSV; defaults to `fit_report.csv` in the model directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predicted class regions and write the score CSV.
    Score {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_PIXELS_PER_CLASS_SCORING)]
        pixels_per_class: usize,
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<u8>>,
        #[arg(long)]
        out: PathBuf,
        /// Per-class standardization stats; defaults to `<out>` with a `.stats.csv` suffix.
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Spearman correlation between SA and IoU per class and group.
    Correlate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scores: PathBuf,
        /// Use a permutation p-value with this many shuffles instead of the t approximation.
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Labelling-savings curves: skip the least surprising images.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 0.9)]
        max_fraction: f64,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS)]
        thresholds: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick a retraining subset by SA level.
    Select {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scores: PathBuf,
        /// Class or group name as it appears in the score CSV.
        #[arg(long)]
        target: String,
        #[arg(long)]
        level: SaLevel,
        /// small, medium, large, or an image count.
        #[arg(long)]
        size: SubsetSize,
        /// Base count the named sizes are fractions of; defaults to the candidate count.
        #[arg(long)]
        base: Option<usize>,
        /// Only consider images whose label mask has more target pixels than this.
        #[arg(long)]
        min_label_pixels: Option<usize>,
        /// One image id per line.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render per-pixel SA heatmaps as PGM.
    Heatmap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_PIXELS_PER_CLASS_SCORING)]
        pixels_per_class: usize,
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<u8>>,
        /// Fixed `lo,hi` gray range; the batch 5th-95th percentile otherwise.
        #[arg(long, value_name = "LO,HI", value_parser = parse_range)]
        range: Option<(f64, f64)>,
        /// Also write `<image>.<class>.mask.pgm` marking pixels with SA above this.
        #[arg(long)]
        threshold: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the synthetic demo dataset.
    Synth {
        #[arg(long, default_value_t = SynthConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SynthConfig::default().n_train)]
        train: usize,
        #[arg(long, default_value_t = SynthConfig::default().n_test)]
        test: usize,
        #[arg(long, default_value_t = SynthConfig::default().d)]
        dim: usize,
        #[arg(long, default_value_t = SynthConfig::default().shift)]
        shift: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi}: {e}"))?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("LO must be below HI, got {lo},{hi}"))
    }
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn class_ids(v: Option<Vec<u8>>) -> Option<Vec<ClassId>> {
    v.map(|v| v.into_iter().map(ClassId).collect())
}

fn load(common: &Common) -> Result<Dataset, PipelineError> {
    Dataset::load(&common.manifest, common.strict)
}

fn read_scores(path: &Path) -> Result<Vec<ScoreRow>, PipelineError> {
    let file = fs::File::open(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
    Ok(read_score_csv(file)?)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), PipelineError>) -> Result<Vec<u8>, PipelineError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn csv_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Data(format!("writing CSV: {e}"))
}

fn stats_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.stats.csv"))
}

fn run(cmd: Command) -> Result<(), PipelineError> {
    match cmd {
        Command::Fit { common, model, pixels_per_class, ats_per_class, classes, var_threshold, out } => {
            let data = load(&common)?;
            let cfg = FitConfig {
                method: model.method,
                seed: common.seed,
                pixels_per_class_image: pixels_per_class,
                ats_per_class,
                classes: class_ids(classes),
                var_threshold,
            };
            let fits = segsa::par::with_jobs(common.jobs, || pipeline::fit(&data, &cfg))?;
            for f in &fits {
                if let FitStatus::Skipped(why) = &f.status {
                    warn(format!("class {} ({}) skipped: {why}", f.class, data.class_name(f.class)));
                }
            }
            let written = pipeline::save_models(&model.models, &fits)?;
            let report = out.unwrap_or_else(|| model.models.join("fit_report.csv"));
            write_file(&report, &pipeline::fit_report_csv(&data, &fits))?;
            eprintln!("fitted {} model(s) into {}", written.len(), model.models.display());
        }
        Command::Score { common, model, pixels_per_class, classes, out, stats_out } => {
            let data = load(&common)?;
            let models = pipeline::load_models(&model.models, &data, model.method)?;
            if models.is_empty() {
                return Err(PipelineError::Data(format!("no {} models found in {}", model.method, model.models.display())));
            }
            let cfg = ScoreConfig { seed: common.seed, pixels_per_class_scoring: pixels_per_class, classes: class_ids(classes) };
            let scored = segsa::par::with_jobs(common.jobs, || pipeline::score(&data, &models, &cfg))?;
            scored.warnings.iter().for_each(warn);
            let name = |c: ClassId| data.class_name(c);
            let rows = score_rows(&scored.table, &data.manifest.groups, name);
            write_file(&out, &csv_bytes(|b| Ok(write_score_csv(b, &rows)?))?)?;
            let stats = stats_out.unwrap_or_else(|| stats_path(&out));
            write_file(&stats, &csv_bytes(|b| Ok(write_stats_csv(b, &scored.table, name)?))?)?;
        }
        Command::Correlate { common, scores, permutations, out } => {
            let data = load(&common)?;
            let rows = read_scores(&scores)?;
            let mode = match permutations {
                Some(permutations) => PValueMode::Permutation { permutations, seed: common.seed },
                None => PValueMode::TApprox,
            };
            let (report, warnings) = segsa::par::with_jobs(common.jobs, || pipeline::correlate(&data, &rows, mode))?;
            warnings.iter().for_each(warn);
            write_file(&out, &csv_bytes(|b| write_correlation_csv(b, &report).map_err(csv_err))?)?;
        }
        Command::Simulate { common, scores, step, max_fraction, thresholds, out } => {
            if !(step > 0.0 && (0.0..=1.0).contains(&max_fraction)) {
                return Err(PipelineError::Data(format!("bad fraction grid: step {step}, max {max_fraction}")));
            }
            let data = load(&common)?;
            let rows = read_scores(&scores)?;
            let fractions = fraction_grid(step, max_fraction);
            let (curves, warnings) = segsa::par::with_jobs(common.jobs, || pipeline::simulate(&data, &rows, &fractions, &thresholds))?;
            warnings.iter().for_each(warn);
            write_file(&out, &csv_bytes(|b| write_curves_csv(b, &curves).map_err(csv_err))?)?;
        }
        Command::Select { common, scores, target, level, size, base, min_label_pixels, out } => {
            let data = load(&common)?;
            let rows = read_scores(&scores)?;
            let cfg = SelectConfig { target, level, size, base, seed: common.seed, min_label_pixels };
            let sel = segsa::par::with_jobs(common.jobs, || pipeline::select(&data, &rows, &cfg))?;
            let text: String = sel.image_ids.iter().map(|id| format!("{id}\n")).collect();
            write_file(&out, text.as_bytes())?;
        }
        Command::Heatmap { common, model, pixels_per_class, classes, range, threshold, out } => {
            let data = load(&common)?;
            let models = pipeline::load_models(&model.models, &data, model.method)?;
            let cfg = HeatmapConfig {
                score: ScoreConfig { seed: common.seed, pixels_per_class_scoring: pixels_per_class, classes: class_ids(classes) },
                range,
                threshold,
            };
            let files = segsa::par::with_jobs(common.jobs, || pipeline::heatmaps(&data, &models, &cfg))?;
            for f in &files {
                write_file(&out.join(&f.file_name), &f.bytes)?;
            }
        }
        Command::Synth { seed, train, test, dim, shift, out } => {
            let cfg = SynthConfig { seed, n_train: train, n_test: test, d: dim, shift, ..SynthConfig::default() };
            synth::generate(&out, &cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
