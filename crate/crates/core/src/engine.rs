//! The generational loop: evaluate on the training split, log, breed.
//!
//! Every random decision is drawn from ChaCha8 streams derived from the
//! run seed. Stream 0 drives initialisation and variation; each
//! individual's mapping repairs use a stream derived from its generation
//! and population slot, so evaluation can run in parallel without
//! affecting results.

use std::io::Write;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::EvolutionConfig;
use crate::data::{stratified_split, Dataset};
use crate::error::{Error, Result};
use crate::genotype::{create_individual, map_genotype, Genotype, MappingOptions};
use crate::grammar::Grammar;
use crate::metrics::{fitness, Metrics, Predictions};
use crate::network::{parse_phenotype, NetworkSpec, Scratch, StructureStats};
use crate::variation::{next_generation, ranking, Evaluated};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub train: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestIndividual {
    pub genotype: String,
    pub phenotype: String,
    pub layer_sizes: Vec<usize>,
    pub structure: StructureStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub seed: u64,
    pub dataset: String,
    pub history: Vec<GenerationRecord>,
    pub best: BestIndividual,
    pub train: Metrics,
    pub test: Metrics,
}

/// Rows and labels visible to one phase of a run.
struct View<'a> {
    rows: Vec<&'a [f64]>,
    labels: Vec<u8>,
}

impl View<'_> {
    fn predictions(&self, net: &NetworkSpec) -> Result<Predictions> {
        let mut scratch = Scratch::default();
        let confidences = self
            .rows
            .iter()
            .map(|x| net.confidence(x, &mut scratch))
            .collect::<Result<Vec<f64>>>()?;
        Predictions::new(confidences, self.labels.clone())
    }
}

struct Scored {
    evaluated: Evaluated,
    phenotype: String,
    layer_sizes: Vec<usize>,
    network: NetworkSpec,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn repair_stream(generation: usize, index: usize) -> u64 {
    ((generation as u64 + 1) << 32) | index as u64
}

fn evaluate(
    mut genotype: Genotype,
    grammar: &Grammar,
    config: &EvolutionConfig,
    opts: &MappingOptions,
    train: &View<'_>,
    rng: &mut dyn RngCore,
) -> Result<Scored> {
    let mapping = map_genotype(&mut genotype, grammar, &config.max_depth, opts, Some(rng))?;
    let network = parse_phenotype(&mapping.phenotype, opts.n_features)?;
    let preds = train.predictions(&network)?;
    let f = fitness(&preds, 2)?;
    Ok(Scored {
        evaluated: Evaluated {
            genotype,
            fitness: if f.is_nan() { f64::INFINITY } else { f },
            usage: mapping.read_counts,
        },
        phenotype: mapping.phenotype,
        layer_sizes: mapping.layer_sizes,
        network,
    })
}

/// Run one seeded evolution. Only the training part of the split is seen
/// until the final best individual is scored on the test part.
pub fn run_evolution(config: &EvolutionConfig, grammar: &Grammar, dataset: &Dataset) -> Result<RunResult> {
    run_evolution_with(config, grammar, dataset, |_, _| {})
}

/// [`run_evolution`] with a callback after each generation receiving its
/// record and every evaluated network.
pub fn run_evolution_with(
    config: &EvolutionConfig,
    grammar: &Grammar,
    dataset: &Dataset,
    mut on_generation: impl FnMut(&GenerationRecord, &[&NetworkSpec]),
) -> Result<RunResult> {
    config.validate()?;
    let split = stratified_split(dataset, config.train_fraction, config.seed)?;
    let (rows, labels) = dataset.subset(&split.train);
    let train = View { rows, labels };
    let opts = MappingOptions {
        all_previous: config.all_previous,
        n_outputs: config.n_outputs(),
        ..MappingOptions::new(dataset.n_features())
    };

    let mut rng = stream_rng(config.seed, 0);
    let mut population = (0..config.population_size)
        .map(|_| create_individual(grammar, &config.max_depth, &opts, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let mut history = Vec::with_capacity(config.generations);
    let mut best = None;
    for generation in 0..config.generations {
        let scored = population
            .into_par_iter()
            .enumerate()
            .map(|(i, genotype)| {
                let mut repair = stream_rng(config.seed, repair_stream(generation, i));
                evaluate(genotype, grammar, config, &opts, &train, &mut repair)
            })
            .collect::<Result<Vec<_>>>()?;

        let fitnesses: Vec<f64> = scored.iter().map(|s| s.evaluated.fitness).collect();
        let leader = ranking(&fitnesses)[0];
        let train_metrics = Metrics::compute(&train.predictions(&scored[leader].network)?)?;
        let record = GenerationRecord {
            generation,
            best_fitness: fitnesses[leader],
            mean_fitness: fitnesses.iter().sum::<f64>() / fitnesses.len() as f64,
            train: train_metrics,
        };
        let networks: Vec<&NetworkSpec> = scored.iter().map(|s| &s.network).collect();
        on_generation(&record, &networks);
        history.push(record);

        let evaluated: Vec<Evaluated> = if generation + 1 == config.generations {
            best = scored.into_iter().nth(leader);
            break;
        } else {
            scored.into_iter().map(|s| s.evaluated).collect()
        };
        population = next_generation(&evaluated, &config.variation, grammar, &config.max_depth, &opts, &mut rng)?;
    }

    let best = best.expect("at least one generation");
    let train_metrics = history.last().unwrap().train;
    let (rows, labels) = dataset.subset(&split.test);
    let test = View { rows, labels };
    let test_metrics = Metrics::compute(&test.predictions(&best.network)?)?;
    Ok(RunResult {
        seed: config.seed,
        dataset: dataset.name.clone(),
        history,
        best: BestIndividual {
            genotype: best.evaluated.genotype.to_text(),
            phenotype: best.phenotype,
            layer_sizes: best.layer_sizes,
            structure: best.network.structure_stats(),
        },
        train: train_metrics,
        test: test_metrics,
    })
}

pub const LOG_HEADER: [&str; 7] = [
    "generation",
    "best_fitness",
    "mean_fitness",
    "train_rmse",
    "train_acc",
    "train_auroc",
    "train_f1",
];

pub fn write_log_csv(path: &Path, history: &[GenerationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LOG_HEADER)?;
    for r in history {
        w.write_record([
            r.generation.to_string(),
            r.best_fitness.to_string(),
            r.mean_fitness.to_string(),
            r.train.rmse.to_string(),
            r.train.accuracy.to_string(),
            r.train.auroc.to_string(),
            r.train.f_measure.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a EvolutionConfig,
    seed: u64,
    dataset: &'a str,
    generations_run: usize,
    best: &'a BestIndividual,
    train: &'a Metrics,
    test: &'a Metrics,
    notes: Notes,
}

#[derive(Serialize)]
struct Notes {
    rmse: &'static str,
    threshold: f64,
    best_selected_by: &'static str,
}

pub fn summary_json(config: &EvolutionConfig, result: &RunResult) -> Result<String> {
    let summary = Summary {
        config,
        seed: result.seed,
        dataset: &result.dataset,
        generations_run: result.history.len(),
        best: &result.best,
        train: &result.train,
        test: &result.test,
        notes: Notes {
            rmse: "global over all instances, not averaged per class",
            threshold: crate::metrics::THRESHOLD,
            best_selected_by: "train fitness",
        },
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

pub fn write_summary_json(path: &Path, config: &EvolutionConfig, result: &RunResult) -> Result<()> {
    let mut text = summary_json(config, result)?;
    text.push('\n');
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Per-run values summarised in the aggregate table.
pub fn run_metrics(result: &RunResult) -> Vec<(&'static str, f64)> {
    let s = &result.best.structure;
    vec![
        ("train_fitness", result.train.fitness),
        ("train_rmse", result.train.rmse),
        ("train_accuracy", result.train.accuracy),
        ("train_auroc", result.train.auroc),
        ("train_f1", result.train.f_measure),
        ("test_fitness", result.test.fitness),
        ("test_rmse", result.test.rmse),
        ("test_accuracy", result.test.accuracy),
        ("test_auroc", result.test.auroc),
        ("test_f1", result.test.f_measure),
        ("num_hidden_layers", s.num_hidden_layers as f64),
        ("num_neurons", s.num_neurons as f64),
        ("num_features", s.num_used_features as f64),
    ]
}

/// Mean and sample standard deviation of each run metric.
pub fn aggregate(results: &[RunResult]) -> Vec<(&'static str, f64, f64)> {
    let per_run: Vec<_> = results.iter().map(run_metrics).collect();
    let Some(first) = per_run.first() else { return Vec::new() };
    (0..first.len())
        .map(|m| {
            let values: Vec<f64> = per_run.iter().map(|r| r[m].1).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            (first[m].0, mean, std)
        })
        .collect()
}

pub fn write_runs_csv(path: &Path, results: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["seed".to_string()];
    if let Some(r) = results.first() {
        header.extend(run_metrics(r).into_iter().map(|(k, _)| k.to_string()));
    }
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![r.seed.to_string()];
        row.extend(run_metrics(r).into_iter().map(|(_, v)| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_aggregate_csv(path: &Path, results: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "mean", "std"])?;
    for (name, mean, std) in aggregate(results) {
        w.write_record([name.to_string(), mean.to_string(), std.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
