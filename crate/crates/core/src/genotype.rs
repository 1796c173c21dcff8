//! Variable-length per-nonterminal genotypes, random creation and the
//! genotype to phenotype mapping with on-the-fly repair.
//!
//! A genotype holds one gene per nonterminal of the grammar: the ordered
//! list of alternative indices chosen each time that nonterminal was
//! expanded. Connection genes (`<features-i>`) are kept apart because
//! which of them exist depends on the individual's layer structure.
//!
//! Creation and mapping share one derivation routine: creating an
//! individual is mapping an empty genotype while drawing every choice.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::grammar::{self, build_dynamic_rules, layer_sources, DynamicRuleSet, Grammar, NtId, Symbol};
use crate::network::FeatureRef;

/// Upper bound on expansions in a single derivation.
pub const MAX_EXPANSIONS: usize = 1_000_000;

/// Per-nonterminal limit on consecutive self-expansions. Absent means
/// unbounded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaxDepths(BTreeMap<String, usize>);

impl MaxDepths {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, depth: usize) -> Self {
        self.0.insert(name.to_string(), depth);
        self
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn resolve(&self, grammar: &Grammar) -> Result<Vec<Option<usize>>> {
        for name in self.0.keys() {
            grammar.id(name)?;
        }
        Ok(grammar.names().map(|n| self.get(n)).collect())
    }
}

/// Accepts `sum:3,sigexpr:6` as well as `{sigexpr: 6, sum: 3}`.
impl FromStr for MaxDepths {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut depths = MaxDepths::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidArgument(format!("expected `name: depth`, got `{part}`")))?;
            let value = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad depth in `{part}`")))?;
            depths.0.insert(name.trim().trim_matches(['<', '>']).to_string(), value);
        }
        Ok(depths)
    }
}

impl fmt::Display for MaxDepths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Identifies a gene: a grammar nonterminal, or the connection rule of a
/// layer (`<features-i>`, 1-based). Static genes sort first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneKey {
    Static(NtId),
    Dynamic(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genotype {
    pub genes: Vec<Vec<usize>>,
    pub dynamic: BTreeMap<usize, Vec<usize>>,
    pub dynamic_rules: DynamicRuleSet,
}

impl Genotype {
    pub fn empty(grammar: &Grammar) -> Self {
        Genotype {
            genes: vec![Vec::new(); grammar.len()],
            dynamic: BTreeMap::new(),
            dynamic_rules: DynamicRuleSet::default(),
        }
    }

    pub fn gene(&self, key: GeneKey) -> Option<&Vec<usize>> {
        match key {
            GeneKey::Static(nt) => self.genes.get(nt.0),
            GeneKey::Dynamic(i) => self.dynamic.get(&i),
        }
    }

    pub fn gene_mut(&mut self, key: GeneKey) -> Option<&mut Vec<usize>> {
        match key {
            GeneKey::Static(nt) => self.genes.get_mut(nt.0),
            GeneKey::Dynamic(i) => self.dynamic.get_mut(&i),
        }
    }

    /// All gene keys in canonical order.
    pub fn keys(&self) -> Vec<GeneKey> {
        (0..self.genes.len())
            .map(|i| GeneKey::Static(NtId(i)))
            .chain(self.dynamic.keys().map(|&i| GeneKey::Dynamic(i)))
            .collect()
    }

    /// Parse the nested-list text form. Lists beyond the grammar's
    /// nonterminals are the connection genes `<features-1>`, `<features-2>`...
    pub fn from_text(grammar: &Grammar, text: &str) -> Result<Self> {
        let lists: Vec<Vec<usize>> = serde_json::from_str(text.trim())
            .map_err(|e| Error::MalformedGenotype(format!("expected nested integer lists: {e}")))?;
        if lists.len() < grammar.len() {
            return Err(Error::MalformedGenotype(format!(
                "{} genes given, grammar has {} nonterminals",
                lists.len(),
                grammar.len()
            )));
        }
        let mut genotype = Genotype::empty(grammar);
        for (i, list) in lists.into_iter().enumerate() {
            if i < grammar.len() {
                let alts = grammar.alternatives(NtId(i)).len();
                if let Some(bad) = list.iter().find(|&&v| v >= alts) {
                    return Err(Error::MalformedGenotype(format!(
                        "<{}> has {alts} alternatives, gene holds {bad}",
                        grammar.name(NtId(i))
                    )));
                }
                genotype.genes[i] = list;
            } else if !list.is_empty() {
                genotype.dynamic.insert(i - grammar.len() + 1, list);
            }
        }
        Ok(genotype)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[");
        let last = self.dynamic.keys().next_back().copied().unwrap_or(0);
        let dynamic = (1..=last).map(|i| self.dynamic.get(&i).map(Vec::as_slice).unwrap_or(&[]));
        for (k, gene) in self.genes.iter().map(Vec::as_slice).chain(dynamic).enumerate() {
            if k > 0 {
                out.push(',');
            }
            write_list(&mut out, gene, ",");
        }
        out.push(']');
        out
    }
}

fn write_list(out: &mut String, values: &[usize], sep: &str) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        let _ = write!(out, "{v}");
    }
    out.push(']');
}

/// Usage of one gene in the latest mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeneUsage {
    /// Integers consumed.
    pub read: usize,
    /// Number of valid values for this gene.
    pub choices: usize,
    /// Per consumed integer: was the nonterminal at its depth limit there.
    pub capped: Vec<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReadCounts {
    pub genes: BTreeMap<GeneKey, GeneUsage>,
}

impl ReadCounts {
    pub fn read(&self, key: GeneKey) -> usize {
        self.genes.get(&key).map_or(0, |u| u.read)
    }

    /// `(key, integers consumed)` in canonical order.
    pub fn counts(&self) -> Vec<(GeneKey, usize)> {
        self.genes.iter().map(|(k, u)| (*k, u.read)).collect()
    }
}

/// Names of the nonterminals that give a grammar its layer structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSymbols {
    /// Expanded once per hidden layer.
    pub layer: String,
    /// Expanded once per hidden neuron.
    pub node: String,
    /// The output layer; replicated once per output neuron.
    pub output: String,
}

impl Default for LayerSymbols {
    fn default() -> Self {
        LayerSymbols {
            layer: "layer".into(),
            node: "node".into(),
            output: "output-layer".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingOptions {
    pub n_features: usize,
    /// Connect to every earlier layer (inputs included) instead of only
    /// the previous one.
    pub all_previous: bool,
    /// Number of output neurons; values above one replicate the output
    /// layer derivation and separate the copies with `-`.
    pub n_outputs: usize,
    pub symbols: LayerSymbols,
}

impl MappingOptions {
    pub fn new(n_features: usize) -> Self {
        MappingOptions {
            n_features,
            all_previous: false,
            n_outputs: 1,
            symbols: LayerSymbols::default(),
        }
    }
}

/// One row of a derivation trace: the sentential form after a step and
/// the integers not yet consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub form: String,
    pub integers_left: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub phenotype: String,
    pub read_counts: ReadCounts,
    /// Neurons per hidden layer, as derived.
    pub layer_sizes: Vec<usize>,
    /// Random draws made to extend or repair the genotype.
    pub draws: usize,
    /// Deepest self-expansion depth reached per nonterminal.
    pub deepest: Vec<usize>,
    pub trace: Vec<TraceRow>,
}

struct Resolved {
    caps: Vec<Option<usize>>,
    layer: Option<NtId>,
    node: Option<NtId>,
    output: Option<NtId>,
}

impl Resolved {
    fn new(grammar: &Grammar, depths: &MaxDepths, opts: &MappingOptions) -> Result<Self> {
        if opts.n_outputs == 0 {
            return Err(Error::InvalidArgument("at least one output is required".into()));
        }
        let output = grammar.lookup(&opts.symbols.output);
        if opts.n_outputs > 1 && output.is_none() {
            return Err(Error::InvalidArgument(format!(
                "several outputs need an <{}> rule in the grammar",
                opts.symbols.output
            )));
        }
        Ok(Resolved {
            caps: depths.resolve(grammar)?,
            layer: grammar.lookup(&opts.symbols.layer),
            node: grammar.lookup(&opts.symbols.node),
            output,
        })
    }
}

enum Item<'g> {
    Symbol(&'g Symbol, usize),
    Separator,
    LeaveOutput,
}

struct Drawer<'r> {
    rng: Option<&'r mut dyn RngCore>,
    draws: usize,
}

impl Drawer<'_> {
    fn rng(&mut self, why: impl FnOnce() -> String) -> Result<&mut dyn RngCore> {
        self.draws += 1;
        match self.rng.as_deref_mut() {
            Some(rng) => Ok(rng),
            None => Err(Error::RepairNeeded(why())),
        }
    }
}

fn derive(
    grammar: &Grammar,
    genotype: &mut Genotype,
    depths: &MaxDepths,
    opts: &MappingOptions,
    rng: Option<&mut dyn RngCore>,
    tracing: bool,
) -> Result<Mapping> {
    if genotype.genes.len() != grammar.len() {
        return Err(Error::MalformedGenotype(format!(
            "{} genes for {} nonterminals",
            genotype.genes.len(),
            grammar.len()
        )));
    }
    let res = Resolved::new(grammar, depths, opts)?;
    let mut drawer = Drawer { rng, draws: 0 };

    let mut usage: BTreeMap<GeneKey, GeneUsage> = (0..grammar.len())
        .map(|i| {
            let key = GeneKey::Static(NtId(i));
            let choices = grammar.alternatives(NtId(i)).len();
            (key, GeneUsage { read: 0, choices, capped: Vec::new() })
        })
        .collect();
    let mut deepest = vec![0usize; grammar.len()];
    let mut layer_sizes: Vec<usize> = Vec::new();
    let mut in_output = false;
    let mut sources_cache: HashMap<usize, (Vec<FeatureRef>, Option<WeightedIndex<f64>>)> = HashMap::new();
    let mut phenotype = String::new();
    let mut trace = Vec::new();

    let start = Symbol::NonTerminal(grammar.start());
    let mut stack: Vec<Item<'_>> = vec![Item::Symbol(&start, 0)];
    let mut steps = 0usize;

    if tracing {
        trace.push(trace_row(grammar, &phenotype, &stack, genotype, &usage));
    }

    while let Some(item) = stack.pop() {
        let symbol = match item {
            Item::Symbol(symbol, depth) => (symbol, depth),
            Item::Separator => {
                phenotype.push('-');
                continue;
            }
            Item::LeaveOutput => {
                in_output = false;
                continue;
            }
        };
        match symbol {
            (Symbol::Terminal(t), _) => {
                phenotype.push_str(t);
                continue;
            }
            (Symbol::NonTerminal(nt), depth) => {
                let nt = *nt;
                steps += 1;
                if steps > MAX_EXPANSIONS {
                    return Err(Error::DerivationTooLong(MAX_EXPANSIONS));
                }
                if Some(nt) == res.layer && !in_output {
                    layer_sizes.push(0);
                }
                if Some(nt) == res.node && !in_output {
                    if layer_sizes.is_empty() {
                        layer_sizes.push(0);
                    }
                    *layer_sizes.last_mut().unwrap() += 1;
                }
                let is_output = Some(nt) == res.output;
                if is_output {
                    in_output = true;
                    stack.push(Item::LeaveOutput);
                }

                let alts = grammar.alternatives(nt);
                let at_cap = res.caps[nt.0].is_some_and(|cap| depth >= cap);
                deepest[nt.0] = deepest[nt.0].max(depth);
                let gene_usage = usage.get_mut(&GeneKey::Static(nt)).unwrap();
                let pos = gene_usage.read;
                let gene = &mut genotype.genes[nt.0];

                let fallback = |drawer: &mut Drawer, why: &str| -> Result<usize> {
                    let non_rec = grammar.non_recursive(nt);
                    if non_rec.is_empty() {
                        return Err(Error::NoTerminalExpansion(grammar.name(nt).to_string()));
                    }
                    let rng = drawer.rng(|| format!("{why} <{}>", grammar.name(nt)))?;
                    Ok(non_rec[rng.gen_range(0..non_rec.len())])
                };

                let choice = if pos < gene.len() {
                    let stored = gene[pos];
                    if stored >= alts.len() {
                        return Err(Error::MalformedGenotype(format!(
                            "<{}> has {} alternatives, gene holds {stored}",
                            grammar.name(nt),
                            alts.len()
                        )));
                    }
                    if at_cap && grammar.is_recursive(nt, stored) {
                        let fixed = fallback(&mut drawer, "recursive choice past the depth limit of")?;
                        gene[pos] = fixed;
                        fixed
                    } else {
                        stored
                    }
                } else {
                    let drawn = if at_cap {
                        fallback(&mut drawer, "exhausted gene of")?
                    } else {
                        let rng = drawer.rng(|| format!("exhausted gene of <{}>", grammar.name(nt)))?;
                        rng.gen_range(0..alts.len())
                    };
                    gene.push(drawn);
                    drawn
                };
                gene_usage.read += 1;
                gene_usage.capped.push(at_cap);

                let children = &alts[choice];
                let copies = if is_output { opts.n_outputs } else { 1 };
                for copy in 0..copies {
                    if copy > 0 {
                        stack.push(Item::Separator);
                    }
                    for child in children.iter().rev() {
                        let child_depth = match child {
                            Symbol::NonTerminal(c) if *c == nt => depth + 1,
                            _ => 0,
                        };
                        stack.push(Item::Symbol(child, child_depth));
                    }
                }
            }
            (Symbol::Features, _) => {
                let layer = if in_output {
                    if layer_sizes.is_empty() {
                        return Err(Error::MalformedGenotype(
                            "output layer derived before any hidden layer".into(),
                        ));
                    }
                    layer_sizes.len() + 1
                } else {
                    layer_sizes.len().max(1)
                };
                let (sources, weights) = sources_cache.entry(layer).or_insert_with(|| {
                    let prior = &layer_sizes[..layer - 1];
                    let sources = layer_sources(layer, prior, opts.n_features, opts.all_previous, in_output);
                    let weights = (opts.all_previous && layer >= 2 && !sources.is_empty()).then(|| {
                        let w = grammar::source_weights(layer, prior, opts.n_features, in_output);
                        WeightedIndex::new(w).expect("weights are positive")
                    });
                    (sources, weights)
                });
                if sources.is_empty() {
                    return Err(Error::MalformedGenotype(format!(
                        "<features-{layer}> has no sources to connect to"
                    )));
                }
                let key = GeneKey::Dynamic(layer);
                let gene_usage = usage.entry(key).or_default();
                gene_usage.choices = sources.len();
                let pos = gene_usage.read;
                let gene = genotype.dynamic.entry(layer).or_default();
                let mut draw = |drawer: &mut Drawer, why: &str| -> Result<usize> {
                    let rng = drawer.rng(|| format!("{why} <features-{layer}>"))?;
                    Ok(match weights {
                        Some(w) => w.sample(rng),
                        None => rng.gen_range(0..sources.len()),
                    })
                };
                let choice = if pos < gene.len() {
                    if gene[pos] < sources.len() {
                        gene[pos]
                    } else {
                        let fixed = draw(&mut drawer, "connection to a missing neuron in")?;
                        gene[pos] = fixed;
                        fixed
                    }
                } else {
                    let drawn = draw(&mut drawer, "exhausted gene of")?;
                    gene.push(drawn);
                    drawn
                };
                gene_usage.read += 1;
                gene_usage.capped.push(false);
                let _ = write!(phenotype, "{}", sources[choice]);
            }
        }
        if tracing {
            trace.push(trace_row(grammar, &phenotype, &stack, genotype, &usage));
        }
    }

    genotype.dynamic_rules = if layer_sizes.is_empty() || layer_sizes.contains(&0) {
        DynamicRuleSet::default()
    } else {
        build_dynamic_rules(&layer_sizes, opts.n_features.max(1), opts.all_previous)?
    };

    Ok(Mapping {
        phenotype,
        read_counts: ReadCounts { genes: usage },
        layer_sizes,
        draws: drawer.draws,
        deepest,
        trace,
    })
}

fn trace_row(
    grammar: &Grammar,
    phenotype: &str,
    stack: &[Item<'_>],
    genotype: &Genotype,
    usage: &BTreeMap<GeneKey, GeneUsage>,
) -> TraceRow {
    let mut form = phenotype.to_string();
    for item in stack.iter().rev() {
        match item {
            Item::Symbol(sym, _) => form.push_str(&grammar.symbol_text(sym)),
            Item::Separator => form.push('-'),
            Item::LeaveOutput => {}
        }
    }
    let mut left = String::from("[");
    for (k, key) in genotype.keys().into_iter().enumerate() {
        if k > 0 {
            left.push_str(", ");
        }
        let gene = genotype.gene(key).unwrap();
        let read = usage.get(&key).map_or(0, |u| u.read).min(gene.len());
        write_list(&mut left, &gene[read..], ",");
    }
    left.push(']');
    TraceRow {
        form,
        integers_left: left,
    }
}

/// Create a random individual by deriving from the start symbol, drawing
/// every choice and falling back to non-recursive alternatives at the
/// depth limits.
pub fn create_individual<R: Rng + ?Sized>(
    grammar: &Grammar,
    depths: &MaxDepths,
    opts: &MappingOptions,
    rng: &mut R,
) -> Result<Genotype> {
    let mut genotype = Genotype::empty(grammar);
    let mut rng = rng;
    derive(grammar, &mut genotype, depths, opts, Some(&mut rng as &mut dyn RngCore), false)?;
    Ok(genotype)
}

/// Map a genotype to its phenotype, extending exhausted genes and fixing
/// invalid choices in place. Without an rng any needed repair is an error.
pub fn map_genotype(
    genotype: &mut Genotype,
    grammar: &Grammar,
    depths: &MaxDepths,
    opts: &MappingOptions,
    rng: Option<&mut dyn RngCore>,
) -> Result<Mapping> {
    derive(grammar, genotype, depths, opts, rng, false)
}

/// [`map_genotype`] that also records each derivation step.
pub fn map_with_trace(
    genotype: &mut Genotype,
    grammar: &Grammar,
    depths: &MaxDepths,
    opts: &MappingOptions,
    rng: Option<&mut dyn RngCore>,
) -> Result<Mapping> {
    derive(grammar, genotype, depths, opts, rng, true)
}
