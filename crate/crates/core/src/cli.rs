//! Command-line front end: `run`, `generate`, `evaluate` and `ablate`.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 when the computation itself fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::{
    compose_multiview, generate, load_csv, read_labels_csv, read_views_csv, write_data_csv, write_views_csv,
    GeneratorKind, GeneratorSpec, Orientation,
};
use crate::error::MiscError;
use crate::factorization::{run_variant, KernelSpec, KernelWidth, SolverConfig, Variant};
use crate::metrics::{evaluate_views, f1_pairs, nmi};
use crate::model_selection::kmeans;
use crate::pipeline::{apply_key, parse_config_with_defaults, run_and_evaluate, run_misc, InputSource, PipelineConfig, RunSettings};

/// Environment variable consulted for the seed when neither a flag nor the config sets one.
pub const SEED_ENV: &str = "MISC_SEED";

#[derive(Debug, Parser)]
#[command(name = "misc", version, about = "Multiple non-redundant clusterings from independent subspaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write one clustering per discovered subspace.
    Run(RunArgs),
    /// Write a synthetic dataset and its ground-truth views.
    Generate(GenerateArgs),
    /// Score label files against ground-truth views.
    Evaluate(EvaluateArgs),
    /// Compare snmf, gsnmf, ksnmf and kgsnmf on one dataset.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Data CSV; overrides any input named in the config.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_orientation)]
    orientation: Option<Orientation>,
    /// Configuration file (`key = value` lines with optional sections).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth views CSV; adds an F1/NMI report to report.json.
    #[arg(long)]
    views: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: config `output_dir`, else `results`].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Neighbors per sample in the graph.
    #[arg(long)]
    eps: Option<usize>,
    /// Force this many subspaces.
    #[arg(long)]
    v: Option<usize>,
    /// Clusters per subspace (comma separated; one value applies to all).
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Factorize subspaces on separate threads.
    #[arg(long)]
    parallel: bool,
    /// Any config key, e.g. `--set kernel_width=2.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    GaussianBlobs,
    Atom,
    Lsun,
    Rings,
}

#[derive(Debug, Args)]
struct GeneratorArgs {
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Blob centers as `x,y;x,y;…` (gaussian_blobs only).
    #[arg(long)]
    centers: Option<String>,
    /// One blob standard deviation, or one per center, comma separated.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Config file with `[input]` and `[view …]` sections for a multi-view dataset.
    #[arg(long, conflicts_with = "kind")]
    config: Option<PathBuf>,
    /// Data CSV to write; views go to `<stem>_views.csv` next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Clustering label file (`sample_index,label`). Repeatable.
    #[arg(long, required = true)]
    labels: Vec<PathBuf>,
    #[arg(long)]
    views: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    /// Data CSV instead of a generator.
    #[arg(long, conflicts_with = "kind")]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_orientation, default_value = "samples_as_rows")]
    orientation: Orientation,
    /// Ground-truth views CSV for `--input`; the first view is scored.
    #[arg(long)]
    views: Option<PathBuf>,
    /// Number of clusters [default: classes in the ground truth].
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    variants: Option<Vec<Variant>>,
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 5)]
    eps: usize,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Gaussian kernel width [default: automatic].
    #[arg(long)]
    kernel_width: Option<f64>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    s.parse().map_err(|e: MiscError| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: MiscError| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(MiscError),
}

impl From<MiscError> for Failure {
    fn from(e: MiscError) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parses `argv` (including the program name) and runs the chosen subcommand.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args, &mut stdout),
        Command::Generate(args) => cmd_generate(args, &mut stdout),
        Command::Evaluate(args) => cmd_evaluate(args, &mut stdout),
        Command::Ablate(args) => cmd_ablate(args, &mut stdout),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| MiscError::io(path, e).into())
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(MiscError::io("<stdout>", e).into()),
        _ => Ok(()),
    }
}

fn load_settings(config: Option<&Path>) -> CliResult<RunSettings> {
    let mut defaults = PipelineConfig::default();
    if let Some(seed) = env_seed()? {
        defaults.seed = seed;
    }
    match config {
        Some(path) => parse_config_with_defaults(&read_text(path)?, defaults).map_err(|e| match e {
            MiscError::Config { .. } | MiscError::InvalidArgument(_) => usage(format!("{}: {e}", path.display())),
            other => other.into(),
        }),
        None => Ok(RunSettings {
            pipeline: defaults,
            input: None,
        }),
    }
}

fn cmd_run(args: RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let RunSettings { mut pipeline, input } = load_settings(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        pipeline.seed = seed;
    }
    if let Some(lambda) = args.lambda {
        pipeline.lambda = lambda;
    }
    if let Some(eps) = args.eps {
        pipeline.eps_neighbors = eps;
    }
    if let Some(v) = args.v {
        pipeline.v_override = Some(v);
    }
    if let Some(k) = args.k {
        pipeline.k_override = Some(k);
    }
    if let Some(max_iter) = args.max_iter {
        pipeline.max_iter = max_iter;
    }
    pipeline.parallel |= args.parallel;
    for kv in &args.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        apply_key(&mut pipeline, 0, key.trim(), value.trim()).map_err(|e| usage(e.to_string()))?;
    }
    pipeline.validate().map_err(|e| usage(e.to_string()))?;

    let input = match (args.input, input) {
        (Some(path), _) => InputSource::Csv {
            path,
            orientation: args.orientation.unwrap_or(Orientation::SamplesAsRows),
        },
        (None, Some(InputSource::Csv { path, orientation })) => InputSource::Csv {
            path,
            orientation: args.orientation.unwrap_or(orientation),
        },
        (None, Some(generated)) => generated,
        (None, None) => return Err(usage("no input: pass --input or name one in --config")),
    };
    let (data, mut views) = input.load()?;
    if let Some(path) = &args.views {
        views = read_views_csv(path)?;
    }
    let report = if views.is_empty() {
        run_misc(&data, &pipeline)?
    } else {
        run_and_evaluate(&data, &views, &pipeline)?
    };

    let dir = args
        .out
        .or_else(|| pipeline.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    report.write(&dir)?;
    if matches!(input, InputSource::Generated { .. }) {
        write_views_csv(dir.join("views.csv"), &views)?;
    }
    let ks: Vec<String> = report.subspaces.iter().map(|s| s.k.to_string()).collect();
    write_out(
        out,
        &format!(
            "found {} subspace(s) {:?} with k = [{}]; wrote {}",
            report.v,
            report.partition.groups(),
            ks.join(", "),
            dir.display()
        ),
    )?;
    if let Some(metrics) = &report.metrics {
        write_out(out, &metrics.to_string())?;
    }
    Ok(())
}

impl GeneratorArgs {
    fn spec(&self) -> CliResult<GeneratorSpec> {
        let kind = self.kind.ok_or_else(|| usage("missing --kind"))?;
        let n = self.n.ok_or_else(|| usage("missing --n"))?;
        let seed = match self.seed {
            Some(s) => s,
            None => env_seed()?.unwrap_or(0),
        };
        let kind = match kind {
            KindArg::Atom => GeneratorKind::atom(),
            KindArg::Lsun => GeneratorKind::lsun(),
            KindArg::Rings => GeneratorKind::rings(),
            KindArg::GaussianBlobs => {
                let centers = self
                    .centers
                    .as_deref()
                    .ok_or_else(|| usage("gaussian_blobs needs --centers"))?
                    .split(';')
                    .map(|c| {
                        c.split(',')
                            .map(|v| v.trim().parse::<f64>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| usage(format!("invalid center `{c}`")))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                let scales = match self.scales.as_deref() {
                    None => vec![1.0; centers.len()],
                    Some([s]) => vec![*s; centers.len()],
                    Some(s) if s.len() == centers.len() => s.to_vec(),
                    Some(_) => return Err(usage("give one scale, or one per center")),
                };
                GeneratorKind::GaussianBlobs { centers, scales }
            }
        };
        if self.centers.is_some() && !matches!(kind, GeneratorKind::GaussianBlobs { .. }) {
            return Err(usage("--centers only applies to gaussian_blobs"));
        }
        Ok(GeneratorSpec::new(kind, n, seed))
    }
}

fn views_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    out.with_file_name(format!("{stem}_views.csv"))
}

fn cmd_generate(args: GenerateArgs, out: &mut dyn Write) -> CliResult<()> {
    let dataset = match &args.config {
        Some(path) => match load_settings(Some(path))?.input {
            Some(generated @ InputSource::Generated { .. }) => {
                let (data, views) = generated.load()?;
                crate::data::LabeledDataset::new(data, views)?
            }
            _ => return Err(usage("the config must describe generated views ([input] n plus [view …] sections)")),
        },
        None => {
            let spec = args.generator.spec()?;
            let mut ds = generate(&spec)?;
            ds.views[0].0 = spec.kind.name().to_string();
            ds
        }
    };
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| MiscError::io(dir, e))?;
    }
    write_data_csv(&args.out, &dataset.data)?;
    let views_file = views_path(&args.out);
    write_views_csv(&views_file, &dataset.views)?;
    write_out(
        out,
        &format!(
            "wrote {} samples x {} features to {} and {} view(s) to {}",
            dataset.data.n_samples(),
            dataset.data.dim(),
            args.out.display(),
            dataset.views.len(),
            views_file.display()
        ),
    )
}

fn cmd_evaluate(args: EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let labels = args
        .labels
        .iter()
        .map(read_labels_csv)
        .collect::<Result<Vec<_>, _>>()?;
    let views = read_views_csv(&args.views)?;
    let report = evaluate_views(&labels, &views)?;
    match args.format {
        Format::Json => write_out(out, &serde_json::to_string_pretty(&report).map_err(MiscError::from)?),
        Format::Table => write_out(out, report.to_string().trim_end()),
    }
}

#[derive(Serialize)]
struct Scores {
    nmi: f64,
    f1: f64,
}

#[derive(Serialize)]
struct VariantOutcome {
    variant: Variant,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    scores: Option<Scores>,
    iterations: usize,
    converged: bool,
    final_objective: f64,
    objective_trace: Vec<f64>,
}

#[derive(Serialize)]
struct AblationReport {
    dataset: String,
    n: usize,
    k: usize,
    lambda: f64,
    eps_neighbors: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kmeans: Option<Scores>,
    variants: Vec<VariantOutcome>,
}

fn scores(found: &[usize], truth: Option<&Vec<usize>>) -> CliResult<Option<Scores>> {
    truth
        .map(|t| {
            Ok(Scores {
                nmi: nmi(found, t)?,
                f1: f1_pairs(found, t)?,
            })
        })
        .transpose()
}

fn cmd_ablate(args: AblateArgs, out: &mut dyn Write) -> CliResult<()> {
    let (name, data, truth, seed) = match &args.input {
        Some(path) => {
            let data = load_csv(path, args.orientation)?;
            let truth = match &args.views {
                Some(v) => read_views_csv(v)?.into_iter().next().map(|(_, labels)| labels),
                None => None,
            };
            let seed = match args.generator.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            (path.display().to_string(), data, truth, seed)
        }
        None => {
            let spec = args.generator.spec()?;
            let ds = compose_multiview(&[generate(&spec)?], spec.seed)?;
            let truth = ds.views.into_iter().next().map(|(_, labels)| labels);
            (spec.kind.name().to_string(), ds.data, truth, spec.seed)
        }
    };
    let k = match (args.k, &truth) {
        (Some(k), _) => k,
        (None, Some(t)) => t.iter().max().map_or(1, |m| m + 1),
        (None, None) => return Err(usage("pass --k when no ground truth is available")),
    };
    let kernel = match args.kernel_width {
        Some(w) => KernelSpec {
            width: KernelWidth::Fixed(w),
            ..KernelSpec::gaussian()
        },
        None => KernelSpec::gaussian(),
    };
    let cfg = SolverConfig {
        lambda: args.lambda,
        max_iter: args.max_iter,
        seed,
        ..SolverConfig::default()
    };
    let x = data.values().view();
    let baseline = kmeans(&x, k, seed, 10)?;
    let mut variants = Vec::new();
    for variant in args.variants.unwrap_or_else(|| Variant::ALL.to_vec()) {
        let state = run_variant(&x, k, variant, &kernel, args.eps, &cfg)?;
        let clustering = state.assign(seed, 10)?;
        variants.push(VariantOutcome {
            variant,
            scores: scores(&clustering.labels, truth.as_ref())?,
            iterations: state.iterations,
            converged: state.converged,
            final_objective: state.final_objective(),
            objective_trace: state.objective_trace,
        });
    }
    let report = AblationReport {
        dataset: name,
        n: data.n_samples(),
        k,
        lambda: args.lambda,
        eps_neighbors: args.eps,
        seed,
        kmeans: scores(&baseline.labels, truth.as_ref())?,
        variants,
    };
    let json = serde_json::to_string_pretty(&report).map_err(MiscError::from)?;
    match &args.out {
        Some(path) => {
            fs::write(path, json + "\n").map_err(|e| MiscError::io(path, e))?;
            write_out(out, &format!("wrote {}", path.display()))
        }
        None => write_out(out, &json),
    }
}
