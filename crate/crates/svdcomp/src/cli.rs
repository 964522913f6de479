//! Command-line surface: calibrate, predict, validate, compare, inspect.
//!
//! The binary in `src/bin/svdcomp.rs` is a thin wrapper over [`run`];
//! everything here is a library function so the pipeline is scriptable
//! and testable without spawning processes.
//!
//! Exit codes partition by failure class and are stable:
//! 0 ok, 2 usage, 3 io (including artifact format/corruption), 4 parse,
//! 5 numeric.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::calibration::{
    calibrate, load_model, save_model, CalibratedModel, SexModel, DEFAULT_COMPONENTS,
    DEFAULT_OFFSET,
};
use crate::error::{Error, Result};
use crate::lifetable::{
    apply_exclusions, default_exclusion_rules, load_exclusion_rules, parse_hmd_lifetable, Corpus,
    Sex, SkippedYear,
};
use crate::prediction::{predict_schedule, AdultSource, PredictionRequest};
use crate::synth;
use crate::validation::{
    compare_models, cross_validate, fit_demo_coefficients, pooled_reports, CvDesign, CvResult,
    ErrorReport, InputMode, LogQuadModel,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PARSE: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Shared data-source and calibration options.
#[derive(Debug, Clone, Args)]
pub struct CliConfig {
    /// Directory of HMD-format 1x1 life tables (*.fltper_1x1.txt /
    /// *.mltper_1x1.txt, searched recursively).
    #[arg(long, env = "SVDCOMP_DATA_DIR")]
    pub data_dir: Option<PathBuf>,

    /// Use the bundled synthetic corpus instead of reading files.
    #[arg(long, conflicts_with = "data_dir")]
    pub synthetic: bool,

    /// Exclusion config (JSON); defaults to the bundled list.
    #[arg(long)]
    pub exclusions: Option<PathBuf>,

    /// Logit offset used in calibration.
    #[arg(long, default_value_t = DEFAULT_OFFSET, allow_negative_numbers = true)]
    pub offset: f64,

    /// Number of SVD components to retain.
    #[arg(long, default_value_t = DEFAULT_COMPONENTS)]
    pub components: usize,

    /// Seed for any randomized procedure.
    #[arg(long, env = "SVDCOMP_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl CliConfig {
    /// Load, filter, and split the corpora; returns (female, male) plus
    /// skipped-year diagnostics.
    pub fn load_corpora(&self) -> Result<(Corpus, Corpus, Vec<SkippedYear>)> {
        if self.synthetic {
            let (f, m) = synth::corpora();
            return Ok((f, m, Vec::new()));
        }
        let dir = self
            .data_dir
            .as_ref()
            .ok_or_else(|| Error::argument("either --data-dir or --synthetic is required"))?;
        let rules = match &self.exclusions {
            Some(path) => load_exclusion_rules(&fs::read_to_string(path)?)?,
            None => default_exclusion_rules(),
        };
        let (merged, skipped) = load_hmd_dir(dir)?;
        let merged = apply_exclusions(&merged, &rules);
        let female = merged.filter_sex(Sex::Female);
        let male = merged.filter_sex(Sex::Male);
        if female.is_empty() || male.is_empty() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!(
                    "no input data: {} female and {} male schedules parsed from {}",
                    female.len(),
                    male.len(),
                    dir.display()
                ),
            )));
        }
        Ok((female, male, skipped))
    }
}

/// Scan a directory tree for HMD 1x1 life-table files and parse them all.
/// Results are merged and sorted by (population, sex, year) so the corpus
/// does not depend on filesystem iteration order.
pub fn load_hmd_dir(dir: &Path) -> Result<(Corpus, Vec<SkippedYear>)> {
    let mut files: Vec<(String, Sex, PathBuf)> = Vec::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| Error::Io(std::io::Error::other(e)))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let sex = if name.ends_with(".fltper_1x1.txt") {
            Sex::Female
        } else if name.ends_with(".mltper_1x1.txt") {
            Sex::Male
        } else {
            continue;
        };
        let population = name.split('.').next().unwrap_or_default().to_owned();
        files.push((population, sex, entry.into_path()));
    }
    if files.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!(
                "no input data: no *per_1x1.txt files under {}",
                dir.display()
            ),
        )));
    }
    files.sort();

    let mut schedules = Vec::new();
    let mut skipped = Vec::new();
    for (population, sex, path) in files {
        let text = fs::read_to_string(&path)?;
        let parsed = parse_hmd_lifetable(&text, sex, &population)
            .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
        schedules.extend(parsed.schedules);
        skipped.extend(parsed.skipped);
    }
    let mut corpus = Corpus::new(
        schedules,
        format!("HMD-format files under {}", dir.display()),
    );
    corpus.sort_canonical();
    Ok((corpus, skipped))
}

/// Probability with 8 significant digits, for CSV output.
fn sig8(x: f64) -> String {
    format!("{x:.7e}")
}

#[derive(Debug, Parser)]
#[command(
    name = "svdcomp",
    version,
    about = "SVD component model of age-specific mortality: calibrate, predict, validate, compare"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate a model from life tables and write the artifact.
    Calibrate {
        #[command(flatten)]
        config: CliConfig,
        /// Output path for the model artifact.
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Predict a 110-age schedule from 5q0 (and optionally 45q15).
    Predict {
        /// Model artifact path.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sex: Sex,
        /// Child mortality 5q0, in (0, 1).
        #[arg(long)]
        q5: f64,
        /// Adult mortality 45q15, in (0, 1); predicted when omitted.
        #[arg(long)]
        q45: Option<f64>,
        /// Keep the raw component prediction for age 0.
        #[arg(long)]
        no_infant_replacement: bool,
        /// Use the kernel-smoothed components.
        #[arg(long)]
        smoothed: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Cross-validate: calibrate on repeated subsamples, score everything.
    Validate {
        #[command(flatten)]
        config: CliConfig,
        #[arg(long, default_value_t = 25)]
        samples: usize,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        /// Sweep of sample fractions as lo:hi:step (e.g. 0.1:0.9:0.2);
        /// overrides --fraction.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        stratify: bool,
        /// Prediction inputs: "child" (5q0 only) or "both".
        #[arg(long, default_value = "child")]
        mode: InputMode,
        /// Directory for the per-sample and aggregate report CSVs.
        #[arg(long, default_value = "cv_out")]
        out_dir: PathBuf,
    },
    /// Compare the calibrated model against the log-quadratic baseline.
    Compare {
        #[command(flatten)]
        config: CliConfig,
        /// Model artifact path.
        #[arg(long)]
        model: PathBuf,
        /// Baseline coefficient CSV (sex,age_group_start,n,a,b,c,v).
        #[arg(long, required_unless_present = "demo_baseline")]
        logquad: Option<PathBuf>,
        /// Fit a demonstration baseline from the corpus instead of
        /// loading published coefficients.
        #[arg(long)]
        demo_baseline: bool,
    },
    /// Print a model artifact's metadata and fit summary.
    Inspect {
        /// Model artifact path.
        #[arg(long)]
        model: PathBuf,
    },
}

/// Parse arguments from the process environment, run, and map errors to
/// stable exit codes with a one-line diagnostic.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version go to stdout with success; real usage errors
            // keep clap's conventional exit code 2.
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let result = match cli.command {
        Command::Calibrate { config, out } => cmd_calibrate(&config, &out, &mut stdout.lock()),
        Command::Predict {
            model,
            sex,
            q5,
            q45,
            no_infant_replacement,
            smoothed,
            format,
        } => {
            let request = PredictionRequest {
                sex,
                q5,
                q45,
                replace_infant: !no_infant_replacement,
                use_smoothed: smoothed,
            };
            cmd_predict(&model, &request, format, &mut stdout.lock())
        }
        Command::Validate {
            config,
            samples,
            fraction,
            sweep,
            stratify,
            mode,
            out_dir,
        } => cmd_validate(
            &config,
            samples,
            fraction,
            sweep.as_deref(),
            stratify,
            mode,
            &out_dir,
            &mut stdout.lock(),
        ),
        Command::Compare {
            config,
            model,
            logquad,
            demo_baseline,
        } => cmd_compare(
            &config,
            &model,
            logquad.as_deref(),
            demo_baseline,
            &mut stdout.lock(),
        ),
        Command::Inspect { model } => cmd_inspect(&model, &mut stdout.lock()),
    };
    match result {
        Ok(()) => EXIT_OK,
        // A closed stdout (e.g. piping into `head`) is not a failure.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let (class, code) = match &e {
                Error::Argument(_) => ("usage", EXIT_USAGE),
                Error::Io(_) | Error::Format(_) | Error::Corruption(_) => ("io", EXIT_IO),
                Error::Parse(_) => ("parse", EXIT_PARSE),
                Error::Numeric(_) => ("numeric", EXIT_NUMERIC),
            };
            eprintln!("svdcomp: {class}: {e}");
            code
        }
    }
}

fn fit_summary_rows(sex_model: &SexModel) -> Vec<(String, f64)> {
    let mut rows = Vec::new();
    for (i, fraction) in sex_model.components.explained_fractions.iter().enumerate() {
        rows.push((format!("explained_fraction_{}", i + 1), *fraction));
    }
    for (i, model) in sex_model.weight_models.models.iter().enumerate() {
        rows.push((format!("r2_weight_{}", i + 1), model.r_squared));
    }
    rows.push(("r2_adult".to_owned(), sex_model.adult_model.r_squared));
    rows.push(("r2_infant".to_owned(), sex_model.infant_model.r_squared));
    rows
}

fn write_fit_summary(model: &CalibratedModel, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{:<8}{:<24}value", "sex", "metric")?;
    for sex in Sex::BOTH {
        if let Ok(sex_model) = model.sex_model(sex) {
            for (metric, value) in fit_summary_rows(sex_model) {
                writeln!(out, "{:<8}{:<24}{:.7}", sex.to_string(), metric, value)?;
            }
        }
    }
    Ok(())
}

/// Calibrate and write the artifact; prints explained fractions and all
/// twelve R-squared values.
pub fn cmd_calibrate(config: &CliConfig, out_path: &Path, out: &mut impl Write) -> Result<()> {
    let (female, male, skipped) = config.load_corpora()?;
    for skip in &skipped {
        eprintln!(
            "warning: skipped {} {} {}: {}",
            skip.population_code, skip.sex, skip.year, skip.reason
        );
    }
    let model = calibrate(&female, &male, config.offset, config.components)?;
    save_model(&model, out_path)?;
    writeln!(
        out,
        "calibrated on {} schedules ({} female, {} male); artifact written to {}",
        model.n_schedules,
        female.len(),
        male.len(),
        out_path.display()
    )?;
    write_fit_summary(&model, out)?;
    Ok(())
}

/// Predict one schedule and print it in the chosen format.
pub fn cmd_predict(
    model_path: &Path,
    request: &PredictionRequest,
    format: OutputFormat,
    out: &mut impl Write,
) -> Result<()> {
    let model = load_model(model_path)?;
    let predicted = predict_schedule(request, &model)?;
    let source = match predicted.q45_source {
        AdultSource::Input => "input",
        AdultSource::Predicted => "predicted",
    };
    match format {
        OutputFormat::Csv => {
            writeln!(out, "age,qx")?;
            for (age, q) in predicted.qx.iter().enumerate() {
                writeln!(out, "{age},{}", sig8(*q))?;
            }
            // Keep stdout parseable; provenance goes to stderr.
            eprintln!(
                "weights_used={:?} q45_used={} q45_source={source} infant_replaced={} out_of_support={}",
                predicted.weights_used, predicted.q45_used, predicted.infant_replaced, predicted.out_of_support
            );
        }
        OutputFormat::Json => {
            let doc = serde_json::to_string_pretty(&predicted)
                .map_err(|e| Error::Format(format!("prediction not serializable: {e}")))?;
            writeln!(out, "{doc}")?;
        }
    }
    Ok(())
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::argument(format!(
            "sweep must be lo:hi:step, got {spec:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::argument(format!("bad sweep number {p:?}")))
        })
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo > 0.0 && hi < 1.0 && lo <= hi && step > 0.0) {
        return Err(Error::argument(format!("sweep {spec:?} out of range")));
    }
    let mut fractions = Vec::new();
    let mut f = lo;
    while f <= hi + 1e-9 {
        fractions.push(f);
        f += step;
    }
    Ok(fractions)
}

fn write_cv_outputs(
    result: &CvResult,
    out_dir: &Path,
    prefix: &str,
    out: &mut impl Write,
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    for sample in &result.samples {
        for reports in &sample.by_sex {
            for (status, report) in [("in", &reports.in_sample), ("out", &reports.out_of_sample)] {
                let name = format!(
                    "{prefix}sample_{:03}_{}_{status}.csv",
                    sample.sample_index, reports.sex
                );
                fs::write(out_dir.join(name), report.to_csv())?;
            }
        }
    }
    let mut pooled = pooled_reports(result)?;
    pooled.sort_by_key(|r| (r.sex, r.sample_status.as_str()));
    for report in &pooled {
        let name = format!(
            "{prefix}aggregate_{}_{}.csv",
            report.sex, report.sample_status
        );
        fs::write(out_dir.join(name), report.to_csv())?;
        writeln!(
            out,
            "{prefix}{} {}: n={} overall_median={:.3e} iqr={:.3e} total_abs_error={:.4}",
            report.sex,
            report.sample_status,
            report.n_schedules,
            report.overall_median,
            report.overall_iqr,
            report.total_absolute_error
        )?;
    }
    if !result.failures.is_empty() {
        writeln!(out, "{prefix}failed samples: {}", result.failures.len())?;
        for failure in &result.failures {
            eprintln!(
                "sample {} failed: {}",
                failure.sample_index, failure.message
            );
        }
    }
    Ok(())
}

/// Run a cross-validation design (or a fraction sweep) and write reports.
#[allow(clippy::too_many_arguments)]
pub fn cmd_validate(
    config: &CliConfig,
    samples: usize,
    fraction: f64,
    sweep: Option<&str>,
    stratify: bool,
    mode: InputMode,
    out_dir: &Path,
    out: &mut impl Write,
) -> Result<()> {
    let (female, male, _) = config.load_corpora()?;
    let fractions = match sweep {
        Some(spec) => parse_sweep(spec)?,
        None => vec![fraction],
    };
    let sweeping = fractions.len() > 1;
    for f in fractions {
        let design = CvDesign {
            n_samples: samples,
            sample_fraction: f,
            seed: config.seed,
            stratify,
        };
        let result = cross_validate(
            &female,
            &male,
            &design,
            mode,
            config.offset,
            config.components,
        )?;
        let prefix = if sweeping {
            format!("sweep_{f:.2}_")
        } else {
            String::new()
        };
        write_cv_outputs(&result, out_dir, &prefix, out)?;
    }
    Ok(())
}

/// Print the eight-row model-vs-baseline comparison table.
pub fn cmd_compare(
    config: &CliConfig,
    model_path: &Path,
    logquad_path: Option<&Path>,
    demo_baseline: bool,
    out: &mut impl Write,
) -> Result<()> {
    let (female, male, _) = config.load_corpora()?;
    let model = load_model(model_path)?;
    let coefficients = match (logquad_path, demo_baseline) {
        (Some(path), false) => crate::validation::load_logquad_file(path)?,
        (None, true) => fit_demo_coefficients(&female, &male)?,
        (Some(_), true) => {
            return Err(Error::argument(
                "--logquad and --demo-baseline are mutually exclusive",
            ))
        }
        (None, false) => {
            return Err(Error::argument(
                "either --logquad or --demo-baseline is required",
            ))
        }
    };
    let baseline = LogQuadModel::new(coefficients);
    let comparison = compare_models(&female, &male, &model, &baseline)?;
    write!(out, "{}", comparison.to_csv())?;
    Ok(())
}

/// Print model metadata and the fit summary table.
pub fn cmd_inspect(model_path: &Path, out: &mut impl Write) -> Result<()> {
    let model = load_model(model_path)?;
    writeln!(out, "format_version: {}", model.format_version)?;
    writeln!(out, "offset: {}", model.offset)?;
    writeln!(out, "components: {}", model.n_components())?;
    writeln!(out, "n_schedules: {}", model.n_schedules)?;
    writeln!(out, "corpus_fingerprint: {}", model.corpus_fingerprint)?;
    let sexes: Vec<&str> = Sex::BOTH
        .iter()
        .filter(|&&s| model.sex_model(s).is_ok())
        .map(|s| s.as_str())
        .collect();
    writeln!(out, "sexes: {}", sexes.join(","))?;
    write_fit_summary(&model, out)?;
    Ok(())
}

/// Export CSVs for a list of standalone reports (used by examples).
pub fn write_reports(reports: &[ErrorReport], out_dir: &Path, prefix: &str) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    for report in reports {
        let name = format!(
            "{prefix}{}_{}_{}.csv",
            report.sex, report.input_mode, report.sample_status
        );
        fs::write(out_dir.join(name), report.to_csv())?;
    }
    Ok(())
}
