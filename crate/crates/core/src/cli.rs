//! Command-line front end: `run`, `map` and `stats`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::EvolutionConfig;
use crate::data::{load_dataset, Dataset, Manifest};
use crate::engine::{run_evolution, write_aggregate_csv, write_log_csv, write_runs_csv, write_summary_json};
use crate::error::{Error, Result};
use crate::genotype::{map_genotype, map_with_trace, Genotype, MappingOptions, MaxDepths};
use crate::grammar::Grammar;
use crate::stats::mann_whitney;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dsge", version, about = "Evolve feedforward neural networks with grammars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run seeded evolutions and write per-run logs, summaries and an aggregate.
    Run(RunArgs),
    /// Map a genotype to its phenotype.
    Map(MapArgs),
    /// Compare one metric between two sets of runs with a Mann-Whitney U test.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    grammar: Option<PathBuf>,
    /// Manifest name, or a path to a CSV file.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value = "data/manifest.toml")]
    manifest: PathBuf,
    /// Label column when --dataset is a CSV path.
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Label value of class 1 when --dataset is a CSV path.
    #[arg(long, default_value = "1")]
    positive_label: String,
    /// File of `key = value` settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long, env = "DSGE_OUT_DIR", default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct MapArgs {
    #[arg(long)]
    grammar: PathBuf,
    /// Nested lists, e.g. `[[0],[0],[1],[0,0,1],[2,5,9]]`.
    #[arg(long)]
    genotype: String,
    /// e.g. `sigexpr:6,sum:3`.
    #[arg(long, default_value = "")]
    max_depths: String,
    /// Seed for repairing short or invalid genotypes.
    #[arg(long)]
    seed: Option<u64>,
    /// Print every derivation step with the integers still unread.
    #[arg(long)]
    trace: bool,
    /// Number of input features available to `<features>`.
    #[arg(long, default_value_t = 1)]
    features: usize,
    #[arg(long, default_value_t = 1)]
    outputs: usize,
    #[arg(long)]
    all_previous: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Column to compare.
    #[arg(long)]
    metric: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Exact permutation p-value instead of the normal approximation.
    #[arg(long)]
    exact: bool,
}

/// Parse `args` (program name first) and execute, returning the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, out),
        Command::Map(args) => cmd_map(args, out, err),
        Command::Stats(args) => cmd_stats(args, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn write_out(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text).map_err(|e| Error::io("<stdout>", e))
}

fn read_grammar(path: &Path) -> Result<Grammar> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Grammar::parse(&text)
}

fn resolve_dataset(args: &RunArgs, name: &str) -> Result<Dataset> {
    let as_path = Path::new(name);
    if as_path.extension().is_some_and(|e| e == "csv") {
        return load_dataset(as_path, &args.label_column, &args.positive_label);
    }
    Manifest::load(&args.manifest)?.load_dataset(name)
}

fn cmd_run(args: RunArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => EvolutionConfig::from_file(path)?,
        None => EvolutionConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(g) = args.generations {
        config.generations = g;
    }
    if let Some(p) = args.population_size {
        config.population_size = p;
    }
    if let Some(g) = &args.grammar {
        config.grammar = Some(g.clone());
    }
    if let Some(d) = &args.dataset {
        config.dataset = Some(d.clone());
    }
    if args.runs == 0 {
        return Err(Error::InvalidArgument("--runs must be at least 1".into()));
    }
    let grammar_path = config
        .grammar
        .clone()
        .ok_or_else(|| Error::Config("no grammar given (--grammar or `grammar =`)".into()))?;
    let dataset_name = config
        .dataset
        .clone()
        .ok_or_else(|| Error::Config("no dataset given (--dataset or `dataset =`)".into()))?;
    config.validate()?;
    let grammar = read_grammar(&grammar_path)?;
    let dataset = resolve_dataset(&args, &dataset_name)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let base_seed = config.seed;
    let mut results = Vec::with_capacity(args.runs);
    for k in 0..args.runs {
        let run_config = EvolutionConfig {
            seed: base_seed + k as u64,
            ..config.clone()
        };
        let result = run_evolution(&run_config, &grammar, &dataset)?;
        let stem = format!("{}_seed{}", dataset.name, run_config.seed);
        write_log_csv(&args.out_dir.join(format!("{stem}_log.csv")), &result.history)?;
        write_summary_json(&args.out_dir.join(format!("{stem}_summary.json")), &run_config, &result)?;
        write_out(
            out,
            format_args!(
                "seed {}: train fitness {:.4}, test accuracy {:.4}\n",
                run_config.seed, result.train.fitness, result.test.accuracy
            ),
        )?;
        results.push(result);
    }
    write_runs_csv(&args.out_dir.join("runs.csv"), &results)?;
    write_aggregate_csv(&args.out_dir.join("aggregate.csv"), &results)?;
    write_out(out, format_args!("wrote {}\n", args.out_dir.display()))
}

fn cmd_map(args: MapArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let grammar = read_grammar(&args.grammar)?;
    let depths: MaxDepths = args.max_depths.parse()?;
    let mut genotype = Genotype::from_text(&grammar, &args.genotype)?;
    let opts = MappingOptions {
        all_previous: args.all_previous,
        n_outputs: args.outputs,
        ..MappingOptions::new(args.features)
    };
    let mut rng = args.seed.map(ChaCha8Rng::seed_from_u64);
    let rng = rng.as_mut().map(|r| r as &mut dyn RngCore);
    let mapping = if args.trace {
        map_with_trace(&mut genotype, &grammar, &depths, &opts, rng)?
    } else {
        map_genotype(&mut genotype, &grammar, &depths, &opts, rng)?
    };
    write_out(out, format_args!("{}\n", mapping.phenotype))?;
    if args.trace {
        let width = mapping.trace.iter().map(|r| r.form.chars().count()).max().unwrap_or(0).max(15);
        write_out(out, format_args!("{:<width$}  integers left\n", "derivation step"))?;
        for row in &mapping.trace {
            write_out(out, format_args!("{:<width$}  {}\n", row.form, row.integers_left))?;
        }
    }
    if mapping.draws > 0 {
        let _ = writeln!(err, "repaired genotype: {}", genotype.to_text());
    }
    Ok(())
}

fn read_column(path: &Path, metric: &str) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = headers.iter().position(|h| h == metric).ok_or_else(|| Error::Dataset {
        path: path.to_path_buf(),
        message: format!("no column `{metric}`"),
    })?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            rec[col].trim().parse::<f64>().map_err(|_| Error::Dataset {
                path: path.to_path_buf(),
                message: format!("row {}: `{}` is not a number", i + 1, &rec[col]),
            })
        })
        .collect()
}

fn cmd_stats(args: StatsArgs, out: &mut dyn Write) -> Result<()> {
    let a = read_column(&args.a, &args.metric)?;
    let b = read_column(&args.b, &args.metric)?;
    let t = mann_whitney(&a, &b, args.alpha, args.exact)?;
    let mean = (a.len() * b.len()) as f64 / 2.0;
    let direction = if t.u > mean {
        "a > b"
    } else if t.u < mean {
        "a < b"
    } else {
        "a = b"
    };
    let method = if t.exact { "exact" } else { "normal approximation, tie corrected" };
    write_out(
        out,
        format_args!(
            "metric: {}\nn_a = {}, n_b = {}\nU = {}\nz = {:.6}\np = {:.6} ({method})\nr = {:.6} ({})\nverdict: {} ({direction}, alpha = {})\n",
            args.metric,
            a.len(),
            b.len(),
            t.u,
            t.z,
            t.p_value,
            t.r,
            t.effect,
            t.symbol(),
            args.alpha
        ),
    )
}
