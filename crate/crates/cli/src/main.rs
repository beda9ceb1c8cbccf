mod grid;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coclust::dataset::{parse_long_observations, parse_wide_table, LongOptions, WideOptions};
use coclust::report::{cluster_summaries, export_json, import_json, render_heatmap_svg, HeatmapOptions};
use coclust::{fit, verify_counts, Dataset, Error, FitResult, OptimizerConfig, Schema};

#[derive(Parser)]
#[command(name = "coclust", version, about = "Co-clustering of mixed numeric and categorical data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write model.json, trace.csv, summary.txt and heatmap.svg.
    Fit(FitArgs),
    /// Check a stored model and print its summary.
    Inspect(InspectArgs),
    /// Re-render summary.txt and heatmap.svg from a stored model.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Wide,
    Long,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, value_enum, default_value = "wide")]
    format: Format,
    /// JSON schema (list of {"name", "kind"}); inferred when omitted.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    missing_token: String,
    #[arg(long, default_value = ",")]
    delimiter: char,
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    #[command(flatten)]
    io: InputArgs,
    /// Partition sizes: `a..b`, `a:pow2:b` or a comma list.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Optimizer settings as JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Evaluate moves on one thread.
    #[arg(long)]
    serial: bool,
    #[arg(long, default_value = "coclust-out")]
    out: PathBuf,
    /// Write model.json only.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct InspectArgs {
    model: PathBuf,
    /// Dataset to check the stored counts against.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    io: InputArgs,
}

#[derive(Args)]
struct ReportArgs {
    model: PathBuf,
    /// Output directory (defaults to the model's directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error tagged with the pipeline stage that raised it.
struct Failure {
    stage: &'static str,
    message: String,
}

fn fail(stage: &'static str) -> impl Fn(Error) -> Failure {
    move |e| Failure {
        stage,
        message: e.to_string(),
    }
}

fn io_fail<'a>(stage: &'static str, path: &'a Path) -> impl Fn(std::io::Error) -> Failure + 'a {
    move |e| Failure {
        stage,
        message: format!("{}: {e}", path.display()),
    }
}

fn read_dataset(path: &Path, io: &InputArgs, schema: Option<&Schema>) -> Result<Dataset, Failure> {
    let text = fs::read_to_string(path).map_err(io_fail("ingest", path))?;
    let loaded;
    let schema = match (&io.schema, schema) {
        (Some(p), _) => {
            let s = fs::read_to_string(p).map_err(io_fail("schema", p))?;
            loaded = Schema::from_json(&s).map_err(fail("schema"))?;
            Some(&loaded)
        }
        (None, s) => s,
    };
    let data = match io.format {
        Format::Wide => {
            let opts = WideOptions {
                delimiter: io.delimiter,
                missing: io.missing_token.clone(),
                ..WideOptions::default()
            };
            parse_wide_table(&text, schema, &opts)
        }
        Format::Long => {
            let opts = LongOptions {
                delimiter: io.delimiter,
                missing: io.missing_token.clone(),
            };
            parse_long_observations(&text, schema, &opts)
        }
    }
    .map_err(fail("ingest"))?;
    if data.n_observations() == 0 {
        return Err(fail("ingest")(Error::EmptyDataset));
    }
    Ok(data)
}

fn trace_csv(r: &FitResult) -> String {
    let mut s = String::from("step,move,criterion\n");
    let _ = writeln!(s, "0,initial,{}", r.initial_criterion);
    for (i, (mv, c)) in r.moves.iter().zip(&r.trace).enumerate() {
        let _ = writeln!(s, "{},\"{mv}\",{c}", i + 1);
    }
    s
}

fn write(dir: &Path, name: &str, content: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(io_fail("write", &path))
}

fn cmd_fit(args: FitArgs) -> Result<(), Failure> {
    let data = read_dataset(&args.input, &args.io, None)?;
    for w in data.warnings() {
        eprintln!("warning: {w}");
    }
    let mut config = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_fail("config", p))?;
            serde_json::from_str(&text).map_err(|e| Failure {
                stage: "config",
                message: e.to_string(),
            })?
        }
        None => OptimizerConfig::for_dataset(&data),
    };
    if let Some(g) = &args.grid {
        config.grid = grid::parse_grid(g).map_err(|message| Failure {
            stage: "config",
            message,
        })?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(m) = args.max_sweeps {
        config.max_sweeps = m;
    }
    if args.serial {
        config.parallel = false;
    }
    config.validate().map_err(fail("config"))?;
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .map_err(|e| Failure {
                stage: "config",
                message: e.to_string(),
            })?;
    }

    let result = fit(&data, &config).map_err(fail("fit"))?;

    fs::create_dir_all(&args.out).map_err(io_fail("write", &args.out))?;
    let json = export_json(&result.model, data.schema(), data.instances(), config.criterion);
    write(&args.out, "model.json", &json)?;
    if !args.quiet {
        let report = cluster_summaries(&result.model, &data, config.criterion);
        write(&args.out, "trace.csv", &trace_csv(&result))?;
        write(&args.out, "summary.txt", &report.summary_text())?;
        write(
            &args.out,
            "heatmap.svg",
            &render_heatmap_svg(&report, &HeatmapOptions::default()),
        )?;
    }
    println!("P* = {}", result.chosen_parts);
    println!("criterion = {}", result.criterion);
    if !args.quiet {
        println!(
            "{} instance clusters, {} part clusters, {} parts; {} stage-2 moves in {:.2?} + {:.2?}",
            result.model.n_instance_clusters(),
            result.model.n_part_clusters(),
            result.model.n_parts(),
            result.moves.len(),
            result.timings.stage1,
            result.timings.stage2
        );
    }
    Ok(())
}

fn load_model(path: &Path) -> Result<coclust::report::ImportedModel, Failure> {
    let text = fs::read_to_string(path).map_err(io_fail("model", path))?;
    import_json(&text).map_err(fail("model"))
}

fn cmd_inspect(args: InspectArgs) -> Result<(), Failure> {
    let imported = load_model(&args.model)?;
    let report = imported.report();
    print!("{}", report.summary_text());
    if let Some(term) = imported.first_divergent_term() {
        return Err(Failure {
            stage: "criterion",
            message: format!("recomputed criterion differs from the stored value at term {term}"),
        });
    }
    println!("criterion check: ok");
    if let Some(path) = &args.data {
        let data = read_dataset(path, &args.io, Some(&imported.schema))?;
        if data.instances() != imported.instances.as_slice() {
            return Err(Failure {
                stage: "verify",
                message: "instance identifiers differ from the model".into(),
            });
        }
        verify_counts(&imported.model, &data).map_err(|d| Failure {
            stage: "verify",
            message: format!("first discrepancy: {d}"),
        })?;
        println!("count check against {}: ok", path.display());
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let imported = load_model(&args.model)?;
    let dir = match args.out {
        Some(d) => d,
        None => args
            .model
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir).map_err(io_fail("write", &dir))?;
    let report = imported.report();
    write(&dir, "summary.txt", &report.summary_text())?;
    write(&dir, "heatmap.svg", &render_heatmap_svg(&report, &HeatmapOptions::default()))?;
    println!("wrote {} and {}", dir.join("summary.txt").display(), dir.join("heatmap.svg").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Inspect(a) => cmd_inspect(a),
        Command::Report(a) => cmd_report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error [{}]: {}", f.stage, f.message);
            ExitCode::FAILURE
        }
    }
}
