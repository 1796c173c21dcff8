//! Mutation, crossover, tournament selection and generational replacement.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genotype::{map_genotype, GeneKey, Genotype, MappingOptions, MaxDepths, ReadCounts};
use crate::grammar::Grammar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationConfig {
    pub crossover_rate: f64,
    /// Probability that an offspring receives exactly one integer mutation.
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elite_fraction: f64,
}

impl Default for VariationConfig {
    fn default() -> Self {
        VariationConfig {
            crossover_rate: 0.95,
            mutation_rate: 0.95,
            tournament_size: 3,
            elite_fraction: 0.01,
        }
    }
}

impl VariationConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        prob("crossover_rate", self.crossover_rate)?;
        prob("mutation_rate", self.mutation_rate)?;
        if self.tournament_size == 0 {
            return Err(Error::InvalidArgument("tournament_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.elite_fraction) {
            return Err(Error::InvalidArgument(format!(
                "elite fraction must lie in [0, 1), got {}",
                self.elite_fraction
            )));
        }
        Ok(())
    }

    pub fn elite_count(&self, population: usize) -> usize {
        ((self.elite_fraction * population as f64).ceil() as usize).min(population)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub genotype: Genotype,
    /// Gene and position changed; `None` when nothing was eligible.
    pub site: Option<(GeneKey, usize)>,
}

/// Alternatives a used position may switch to.
fn options_at(grammar: &Grammar, key: GeneKey, current: usize, choices: usize, capped: bool) -> Vec<usize> {
    match key {
        GeneKey::Static(nt) if capped => grammar.non_recursive(nt).into_iter().filter(|&a| a != current).collect(),
        _ => (0..choices).filter(|&a| a != current).collect(),
    }
}

/// Change one expressed integer. Genes are picked in proportion to how
/// many integers the last mapping read from them; genes with a single
/// alternative are never picked. Positions expanded at a depth limit may
/// only switch to non-recursive alternatives.
pub fn mutate<R: Rng + ?Sized>(genotype: &Genotype, usage: &ReadCounts, grammar: &Grammar, rng: &mut R) -> Mutation {
    let mut candidates = Vec::new();
    let mut weights = Vec::new();
    for (&key, gene_usage) in &usage.genes {
        let Some(gene) = genotype.gene(key) else { continue };
        let read = gene_usage.read.min(gene.len());
        if gene_usage.choices < 2 || read == 0 {
            continue;
        }
        let eligible =
            (0..read).any(|p| !options_at(grammar, key, gene[p], gene_usage.choices, gene_usage.capped[p]).is_empty());
        if eligible {
            candidates.push((key, read, gene_usage));
            weights.push(read as f64);
        }
    }
    if candidates.is_empty() {
        return Mutation {
            genotype: genotype.clone(),
            site: None,
        };
    }
    let pick = WeightedIndex::new(&weights).expect("positive weights").sample(rng);
    let (key, read, gene_usage) = candidates[pick];
    let gene = genotype.gene(key).unwrap();
    let (pos, options) = loop {
        let pos = rng.gen_range(0..read);
        let options = options_at(grammar, key, gene[pos], gene_usage.choices, gene_usage.capped[pos]);
        if !options.is_empty() {
            break (pos, options);
        }
    };
    let mut child = genotype.clone();
    child.gene_mut(key).unwrap()[pos] = options[rng.gen_range(0..options.len())];
    Mutation {
        genotype: child,
        site: Some((key, pos)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub children: (Genotype, Genotype),
    /// Index into the common genes from which genes were swapped; `None`
    /// when fewer than two genes are shared.
    pub cut: Option<usize>,
}

/// Genes present in both parents, in canonical order.
pub fn common_genes(a: &Genotype, b: &Genotype) -> Vec<GeneKey> {
    a.keys().into_iter().filter(|k| b.gene(*k).is_some()).collect()
}

/// One-point crossover over whole genes shared by both parents. Genes at
/// or after the cut are exchanged; genes only one parent has stay put.
pub fn crossover<R: Rng + ?Sized>(a: &Genotype, b: &Genotype, rng: &mut R) -> Crossover {
    let common = common_genes(a, b);
    if common.len() < 2 {
        return Crossover {
            children: (a.clone(), b.clone()),
            cut: None,
        };
    }
    let cut = rng.gen_range(1..common.len());
    Crossover {
        children: crossover_at(a, b, &common, cut),
        cut: Some(cut),
    }
}

pub fn crossover_at(a: &Genotype, b: &Genotype, common: &[GeneKey], cut: usize) -> (Genotype, Genotype) {
    let (mut x, mut y) = (a.clone(), b.clone());
    for &key in &common[cut..] {
        std::mem::swap(x.gene_mut(key).unwrap(), y.gene_mut(key).unwrap());
    }
    (x, y)
}

/// Draw `size` members with replacement and return the fittest (lowest
/// fitness); ties go to the earliest draw.
pub fn tournament_select<R: Rng + ?Sized>(fitnesses: &[f64], size: usize, rng: &mut R) -> Result<usize> {
    if fitnesses.is_empty() {
        return Err(Error::InvalidArgument("tournament over an empty population".into()));
    }
    let mut best = rng.gen_range(0..fitnesses.len());
    for _ in 1..size {
        let c = rng.gen_range(0..fitnesses.len());
        if fitnesses[c] < fitnesses[best] {
            best = c;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct Evaluated {
    pub genotype: Genotype,
    pub fitness: f64,
    pub usage: ReadCounts,
}

/// Indices sorted by fitness, stable on ties.
pub fn ranking(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]));
    order
}

/// Build the next population: elites copied unchanged, the rest bred by
/// tournament selection, crossover and mutation. Crossed-over children
/// are re-mapped before mutation so that read counts reflect them.
pub fn next_generation<R: Rng>(
    population: &[Evaluated],
    config: &VariationConfig,
    grammar: &Grammar,
    depths: &MaxDepths,
    opts: &MappingOptions,
    rng: &mut R,
) -> Result<Vec<Genotype>> {
    config.validate()?;
    let n = population.len();
    let fitnesses: Vec<f64> = population.iter().map(|e| e.fitness).collect();
    let mut next: Vec<Genotype> = ranking(&fitnesses)
        .into_iter()
        .take(config.elite_count(n))
        .map(|i| population[i].genotype.clone())
        .collect();

    while next.len() < n {
        let pa = &population[tournament_select(&fitnesses, config.tournament_size, rng)?];
        let pb = &population[tournament_select(&fitnesses, config.tournament_size, rng)?];
        let crossed = rng.gen::<f64>() < config.crossover_rate;
        let children = if crossed {
            let Crossover { children: (x, y), .. } = crossover(&pa.genotype, &pb.genotype, rng);
            [(x, None), (y, None)]
        } else {
            [(pa.genotype.clone(), Some(&pa.usage)), (pb.genotype.clone(), Some(&pb.usage))]
        };
        for (mut child, usage) in children {
            if next.len() == n {
                break;
            }
            if rng.gen::<f64>() < config.mutation_rate {
                let usage = match usage {
                    Some(u) => u.clone(),
                    None => map_genotype(&mut child, grammar, depths, opts, Some(rng as &mut dyn RngCore))?.read_counts,
                };
                child = mutate(&child, &usage, grammar, rng).genotype;
            }
            next.push(child);
        }
    }
    Ok(next)
}
