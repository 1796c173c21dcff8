//! BNF grammars and the per-individual `<features-i>` rules.
//!
//! Grammar text is a list of rules of the form `<name> ::= alt | alt`.
//! Alternatives may continue on following lines that begin with `|`, and
//! lines whose first non-blank character is `#` are comments. Inside an
//! alternative, `<name>` is a nonterminal and every other whitespace
//! separated run of characters is a terminal, so `<digit>.<digit>` is the
//! sequence nonterminal, terminal `"."`, nonterminal.
//!
//! The nonterminal `<features>` is reserved: it is never defined in the
//! text and resolves per individual to the sources a layer may connect to.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::network::FeatureRef;

/// Name of the placeholder resolved to per-layer connection rules.
pub const FEATURES: &str = "features";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NtId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Symbol {
    Terminal(String),
    NonTerminal(NtId),
    /// The dynamic `<features>` placeholder.
    Features,
}

pub type Alternative = Vec<Symbol>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    start: NtId,
    names: Vec<String>,
    index: HashMap<String, NtId>,
    rules: Vec<Vec<Alternative>>,
    recursive: Vec<BTreeSet<usize>>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Is there a `<name>` token at the start of `s`? Returns the name and the
/// byte length of the token.
fn nonterminal_at(s: &str) -> Option<(&str, usize)> {
    let rest = s.strip_prefix('<')?;
    let end = rest.find('>')?;
    let name = &rest[..end];
    valid_name(name).then_some((name, end + 2))
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Terminal(String),
    NonTerminal(&'a str),
}

fn tokenize(alt: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut terminal = String::new();
    let mut i = 0;
    while i < alt.len() {
        let rest = &alt[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            if !terminal.is_empty() {
                tokens.push(Token::Terminal(std::mem::take(&mut terminal)));
            }
            i += c.len_utf8();
        } else if let Some((name, len)) = nonterminal_at(rest) {
            if !terminal.is_empty() {
                tokens.push(Token::Terminal(std::mem::take(&mut terminal)));
            }
            tokens.push(Token::NonTerminal(name));
            i += len;
        } else {
            terminal.push(c);
            i += c.len_utf8();
        }
    }
    if !terminal.is_empty() {
        tokens.push(Token::Terminal(terminal));
    }
    tokens
}

struct RawRule {
    line: usize,
    name: String,
    body: Vec<(usize, String)>,
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw: Vec<RawRule> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(cont) = trimmed.strip_prefix('|') {
                let rule = raw.last_mut().ok_or_else(|| Error::GrammarSyntax {
                    line: line_no,
                    message: "continuation line before any rule".into(),
                })?;
                // The leading `|` separates this alternative from the
                // previous line's last one.
                rule.body.push((line_no, format!("|{cont}")));
                continue;
            }
            let (head, body) = trimmed.split_once("::=").ok_or_else(|| Error::GrammarSyntax {
                line: line_no,
                message: "expected `<name> ::= ...`".into(),
            })?;
            let head = head.trim();
            let name = match nonterminal_at(head) {
                Some((name, len)) if len == head.len() => name,
                _ => {
                    return Err(Error::GrammarSyntax {
                        line: line_no,
                        message: format!("invalid rule head `{head}`"),
                    })
                }
            };
            if name == FEATURES {
                return Err(Error::GrammarSyntax {
                    line: line_no,
                    message: "<features> is reserved and generated per individual".into(),
                });
            }
            if raw.iter().any(|r| r.name == name) {
                return Err(Error::GrammarSyntax {
                    line: line_no,
                    message: format!("duplicate rule for <{name}>"),
                });
            }
            raw.push(RawRule {
                line: line_no,
                name: name.to_string(),
                body: vec![(line_no, body.to_string())],
            });
        }
        if raw.is_empty() {
            return Err(Error::GrammarSyntax {
                line: 1,
                message: "grammar has no rules".into(),
            });
        }

        let names: Vec<String> = raw.iter().map(|r| r.name.clone()).collect();
        let index: HashMap<String, NtId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NtId(i)))
            .collect();

        let mut rules = Vec::with_capacity(raw.len());
        for rule in &raw {
            let mut alternatives = Vec::new();
            // Split the concatenated body on `|`, remembering line numbers
            // for error messages.
            let mut pieces: Vec<(usize, String)> = vec![(rule.line, String::new())];
            for (line, chunk) in &rule.body {
                for (k, part) in chunk.split('|').enumerate() {
                    if k == 0 {
                        pieces.last_mut().unwrap().1.push_str(part);
                        pieces.last_mut().unwrap().1.push(' ');
                    } else {
                        pieces.push((*line, format!("{part} ")));
                    }
                }
            }
            for (line, piece) in pieces {
                let tokens = tokenize(&piece);
                if tokens.is_empty() {
                    return Err(Error::GrammarSyntax {
                        line,
                        message: format!("empty alternative in <{}>", rule.name),
                    });
                }
                let mut alt = Vec::with_capacity(tokens.len());
                for token in tokens {
                    alt.push(match token {
                        Token::Terminal(t) => Symbol::Terminal(t),
                        Token::NonTerminal(FEATURES) => Symbol::Features,
                        Token::NonTerminal(name) => Symbol::NonTerminal(
                            *index
                                .get(name)
                                .ok_or_else(|| Error::UndefinedNonTerminal(name.to_string()))?,
                        ),
                    });
                }
                alternatives.push(alt);
            }
            rules.push(alternatives);
        }

        let recursive = classify_recursion(&rules);
        Ok(Grammar {
            start: NtId(0),
            names,
            index,
            rules,
            recursive,
        })
    }

    pub fn start(&self) -> NtId {
        self.start
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn name(&self, nt: NtId) -> &str {
        &self.names[nt.0]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn lookup(&self, name: &str) -> Option<NtId> {
        self.index.get(name).copied()
    }

    pub fn id(&self, name: &str) -> Result<NtId> {
        self.lookup(name)
            .ok_or_else(|| Error::UnknownNonTerminal(name.to_string()))
    }

    pub fn alternatives(&self, nt: NtId) -> &[Alternative] {
        &self.rules[nt.0]
    }

    pub fn recursive(&self, nt: NtId) -> &BTreeSet<usize> {
        &self.recursive[nt.0]
    }

    pub fn is_recursive(&self, nt: NtId, alternative: usize) -> bool {
        self.recursive[nt.0].contains(&alternative)
    }

    pub fn non_recursive(&self, nt: NtId) -> Vec<usize> {
        (0..self.rules[nt.0].len())
            .filter(|i| !self.recursive[nt.0].contains(i))
            .collect()
    }

    /// Indices of the alternatives of `name` from which `name` is derivable.
    pub fn recursive_alternative_indices(&self, name: &str) -> Result<BTreeSet<usize>> {
        Ok(self.recursive(self.id(name)?).clone())
    }

    /// Render a symbol the way it is written in grammar text.
    pub fn symbol_text<'a>(&'a self, symbol: &'a Symbol) -> std::borrow::Cow<'a, str> {
        match symbol {
            Symbol::Terminal(t) => t.as_str().into(),
            Symbol::NonTerminal(nt) => format!("<{}>", self.name(*nt)).into(),
            Symbol::Features => format!("<{FEATURES}>").into(),
        }
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, alts) in self.rules.iter().enumerate() {
            write!(f, "<{}> ::=", self.names[i])?;
            for (k, alt) in alts.iter().enumerate() {
                if k > 0 {
                    write!(f, " |")?;
                }
                for sym in alt {
                    write!(f, " {}", self.symbol_text(sym))?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Grammar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Grammar::parse(s)
    }
}

/// Reflexive-transitive reachability, then an alternative of `head` is
/// recursive iff some nonterminal in it reaches `head`.
fn classify_recursion(rules: &[Vec<Alternative>]) -> Vec<BTreeSet<usize>> {
    let n = rules.len();
    let mut reach = vec![vec![false; n]; n];
    for (start, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![start];
        row[start] = true;
        while let Some(nt) = stack.pop() {
            for sym in rules[nt].iter().flatten() {
                if let Symbol::NonTerminal(NtId(next)) = sym {
                    if !row[*next] {
                        row[*next] = true;
                        stack.push(*next);
                    }
                }
            }
        }
    }
    rules
        .iter()
        .enumerate()
        .map(|(head, alts)| {
            alts.iter()
                .enumerate()
                .filter(|(_, alt)| {
                    alt.iter().any(|sym| match sym {
                        Symbol::NonTerminal(NtId(s)) => reach[*s][head],
                        _ => false,
                    })
                })
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}

/// Connection sources for every layer of one individual. Entry `i - 1`
/// holds the expansions of `<features-i>`; the last entry belongs to the
/// output layer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DynamicRuleSet {
    rules: Vec<Vec<FeatureRef>>,
}

impl DynamicRuleSet {
    pub fn get(&self, layer: usize) -> Option<&[FeatureRef]> {
        layer
            .checked_sub(1)
            .and_then(|i| self.rules.get(i))
            .map(Vec::as_slice)
    }

    /// Number of `<features-i>` rules, output rule included.
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn output_rule(&self) -> Option<&[FeatureRef]> {
        self.rules.last().map(Vec::as_slice)
    }
}

/// Sources `<features-layer>` may expand to, given the sizes of the hidden
/// layers before it. With `is_output` the rule never contains inputs.
pub fn layer_sources(
    layer: usize,
    prior_sizes: &[usize],
    n_features: usize,
    all_previous: bool,
    is_output: bool,
) -> Vec<FeatureRef> {
    debug_assert!(layer >= 1 && prior_sizes.len() >= layer - 1);
    let inputs = || (0..n_features).map(FeatureRef::Input);
    let hidden = |j: usize| (0..prior_sizes[j]).map(move |m| FeatureRef::Hidden { layer: j, neuron: m });
    if layer == 1 && !is_output {
        return inputs().collect();
    }
    if all_previous {
        let mut out: Vec<FeatureRef> = if is_output { Vec::new() } else { inputs().collect() };
        for j in 0..layer - 1 {
            out.extend(hidden(j));
        }
        out
    } else {
        hidden(layer - 2).collect()
    }
}

/// Build `<features-1>` .. `<features-L>` for the hidden layers plus the
/// output rule `<features-L+1>`.
pub fn build_dynamic_rules(
    layer_sizes: &[usize],
    n_features: usize,
    all_previous: bool,
) -> Result<DynamicRuleSet> {
    if layer_sizes.is_empty() {
        return Err(Error::InvalidArgument("layer list is empty".into()));
    }
    if n_features == 0 || layer_sizes.contains(&0) {
        return Err(Error::InvalidArgument("counts must be positive".into()));
    }
    let depth = layer_sizes.len();
    let rules = (1..=depth + 1)
        .map(|i| layer_sources(i, &layer_sizes[..i - 1], n_features, all_previous, i == depth + 1))
        .collect();
    Ok(DynamicRuleSet { rules })
}

/// Geometric split of probability mass over groups ordered from earliest to
/// latest: the latest gets 1/2, the one before 1/4, and the earliest group
/// takes whatever remains. Each group's mass is shared uniformly.
fn halving_weights(groups: &[usize]) -> Vec<f64> {
    let k = groups.len();
    let mut weights = Vec::with_capacity(groups.iter().sum());
    for (g, &size) in groups.iter().enumerate() {
        // Distance from the latest group.
        let back = k - 1 - g;
        let mass = if g == 0 {
            0.5f64.powi((k - 1) as i32)
        } else {
            0.5f64.powi(back as i32 + 1)
        };
        weights.extend(std::iter::repeat(mass / size as f64).take(size));
    }
    weights
}

/// Selection probability of every source in `<features-layer>` under the
/// all-previous-layers policy, aligned with [`layer_sources`]. Layer
/// `len + 1` is the output layer, whose sources are hidden neurons only.
pub fn connection_source_weights(
    layer: usize,
    layer_sizes: &[usize],
    n_features: usize,
) -> Result<Vec<f64>> {
    if layer < 2 {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} has no earlier hidden layers"
        )));
    }
    if layer > layer_sizes.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} exceeds {} hidden layers plus output",
            layer_sizes.len()
        )));
    }
    Ok(source_weights(layer, &layer_sizes[..layer - 1], n_features, layer == layer_sizes.len() + 1))
}

pub(crate) fn source_weights(
    layer: usize,
    prior_sizes: &[usize],
    n_features: usize,
    is_output: bool,
) -> Vec<f64> {
    let mut groups = Vec::with_capacity(layer);
    if !is_output {
        groups.push(n_features);
    }
    groups.extend_from_slice(&prior_sizes[..layer - 1]);
    halving_weights(&groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const REAL_NUMBERS: &str = include_str!("../../../grammars/real_numbers.bnf");
    const MULTI: &str = include_str!("../../../grammars/multi_layer.bnf");
    const ONE: &str = include_str!("../../../grammars/one_layer.bnf");

    #[test]
    fn real_number_grammar_shape() {
        let g = Grammar::parse(REAL_NUMBERS).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.alternatives(g.id("second").unwrap()).len(), 2);
        assert_eq!(g.alternatives(g.id("digit").unwrap()).len(), 10);
        assert_eq!(g.recursive_alternative_indices("second").unwrap(), BTreeSet::from([0]));
        assert!(g.recursive_alternative_indices("digit").unwrap().is_empty());
        let float = g.alternatives(g.id("float").unwrap());
        assert_eq!(float[0].len(), 3);
        assert_eq!(float[0][1], Symbol::Terminal(".".into()));
    }

    #[test]
    fn minimal_grammar() {
        let g = Grammar::parse("<s> ::= a").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.alternatives(NtId(0)), &[vec![Symbol::Terminal("a".into())]]);
        assert!(g.recursive(NtId(0)).is_empty());
    }

    #[test]
    fn multi_layer_grammar_recursion() {
        let g = Grammar::parse(MULTI).unwrap();
        let sum = g.id("sum").unwrap();
        assert_eq!(g.alternatives(sum).len(), 3);
        assert_eq!(g.alternatives(sum)[1], g.alternatives(sum)[2]);
        assert_eq!(g.recursive(sum), &BTreeSet::from([1, 2]));
        assert_eq!(g.recursive_alternative_indices("hidden-layers").unwrap(), BTreeSet::from([0, 1]));
        assert_eq!(g.recursive_alternative_indices("nodes").unwrap(), BTreeSet::from([0, 1]));
        assert!(g.alternatives(sum)[0].contains(&Symbol::Features));
    }

    #[test]
    fn one_layer_grammar_parses() {
        let g = Grammar::parse(ONE).unwrap();
        assert_eq!(g.name(g.start()), "sigexpr");
        assert_eq!(g.recursive_alternative_indices("sigexpr").unwrap(), BTreeSet::from([1]));
        assert_eq!(g.recursive_alternative_indices("sum").unwrap(), BTreeSet::from([1]));
        assert_eq!(g.non_recursive(g.id("number").unwrap()), vec![0, 1]);
    }

    #[test]
    fn mutual_recursion_is_detected() {
        let g = Grammar::parse("<a> ::= x <b> | y\n<b> ::= <a> z | w").unwrap();
        assert_eq!(g.recursive_alternative_indices("a").unwrap(), BTreeSet::from([0]));
        assert_eq!(g.recursive_alternative_indices("b").unwrap(), BTreeSet::from([0]));
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            Grammar::parse("<s> ::= <t>"),
            Err(Error::UndefinedNonTerminal(n)) if n == "t"
        ));
        assert!(matches!(
            Grammar::parse("<s> ::= a |  | b"),
            Err(Error::GrammarSyntax { line: 1, .. })
        ));
        assert!(matches!(
            Grammar::parse("<s> ::= a\n\nfoo"),
            Err(Error::GrammarSyntax { line: 3, .. })
        ));
        assert!(matches!(
            Grammar::parse("<s> ::= a\n| "),
            Err(Error::GrammarSyntax { line: 2, .. })
        ));
        assert!(Grammar::parse("| a").is_err());
        assert!(Grammar::parse("<features> ::= x").is_err());
        assert!(Grammar::parse("# only a comment").is_err());
        assert!(matches!(
            Grammar::parse("<s> ::= a").unwrap().recursive_alternative_indices("q"),
            Err(Error::UnknownNonTerminal(_))
        ));
    }

    #[test]
    fn display_round_trips_shipped_grammars() {
        for text in [REAL_NUMBERS, MULTI, ONE] {
            let g = Grammar::parse(text).unwrap();
            let again = Grammar::parse(&g.to_string()).unwrap();
            assert_eq!(g, again);
        }
    }

    fn h(layer: usize, neuron: usize) -> FeatureRef {
        FeatureRef::Hidden { layer, neuron }
    }

    #[test]
    fn dynamic_rules_previous_layer_only() {
        let rules = build_dynamic_rules(&[4, 3], 2, false).unwrap();
        assert_eq!(rules.len(), 3);
        assert_eq!(rules.get(1).unwrap(), &[FeatureRef::Input(0), FeatureRef::Input(1)]);
        assert_eq!(rules.get(2).unwrap(), &(0..4).map(|m| h(0, m)).collect::<Vec<_>>()[..]);
        assert_eq!(rules.get(3).unwrap(), &(0..3).map(|m| h(1, m)).collect::<Vec<_>>()[..]);
        assert!(rules.output_rule().unwrap().iter().all(|f| !f.is_input()));
    }

    #[test]
    fn dynamic_rules_all_previous() {
        let rules = build_dynamic_rules(&[4, 3], 2, true).unwrap();
        let second = rules.get(2).unwrap();
        assert_eq!(second.len(), 6);
        assert!(second.contains(&FeatureRef::Input(1)));
        assert!((0..4).all(|m| second.contains(&h(0, m))));
        let output = rules.get(3).unwrap();
        assert_eq!(output.len(), 7);
        assert!(output.iter().all(|f| !f.is_input()));
    }

    #[test]
    fn dynamic_rules_single_layer() {
        for all in [false, true] {
            let rules = build_dynamic_rules(&[5], 3, all).unwrap();
            assert_eq!(rules.len(), 2);
            assert_eq!(rules.get(1).unwrap().len(), 3);
            assert_eq!(rules.output_rule().unwrap(), &(0..5).map(|m| h(0, m)).collect::<Vec<_>>()[..]);
        }
        assert!(build_dynamic_rules(&[], 3, true).is_err());
    }

    #[test]
    fn source_weights_second_layer() {
        let w = connection_source_weights(2, &[3, 2], 2).unwrap();
        assert_eq!(w.len(), 5);
        let inputs: f64 = w[..2].iter().sum();
        let previous: f64 = w[2..].iter().sum();
        assert!((inputs - 0.5).abs() < 1e-15);
        assert!((previous - 0.5).abs() < 1e-15);
        assert!(connection_source_weights(1, &[3], 2).is_err());
        assert!(connection_source_weights(4, &[3, 2], 2).is_err());
    }

    /// Independent oracle: walk sources from the most recent layer back,
    /// handing each layer half of the mass still unassigned, and give
    /// the remainder to the earliest group.
    fn enumerated_weights(layer: usize, sizes: &[usize], n: usize, output: bool) -> Vec<(FeatureRef, f64)> {
        let mut table = Vec::new();
        let mut remaining = 1.0;
        let mut groups: Vec<Vec<FeatureRef>> = Vec::new();
        if !output {
            groups.push((0..n).map(FeatureRef::Input).collect());
        }
        for j in 0..layer - 1 {
            groups.push((0..sizes[j]).map(|m| h(j, m)).collect());
        }
        let last = groups.len() - 1;
        let mut masses = vec![0.0; groups.len()];
        for g in (1..=last).rev() {
            masses[g] = remaining / 2.0;
            remaining -= masses[g];
        }
        masses[0] = remaining;
        for (g, members) in groups.iter().enumerate() {
            for f in members {
                table.push((*f, masses[g] / members.len() as f64));
            }
        }
        table
    }

    #[test]
    fn source_weights_match_enumeration() {
        // Fourth layer of (2, 2, 2, 1): 0.5 / 0.25 / 0.125 / 0.125(inputs).
        let sizes = [2, 2, 2, 1];
        let w = connection_source_weights(4, &sizes, 3).unwrap();
        let sources = layer_sources(4, &sizes[..3], 3, true, false);
        let oracle = enumerated_weights(4, &sizes, 3, false);
        assert_eq!(sources.len(), w.len());
        for ((src, expected), (got_src, got)) in oracle.iter().zip(sources.iter().zip(&w)) {
            assert_eq!(src, got_src);
            assert!((expected - got).abs() < 1e-15);
        }
        let per_group = [
            w[..3].iter().sum::<f64>(),
            w[3..5].iter().sum(),
            w[5..7].iter().sum(),
            w[7..9].iter().sum(),
        ];
        assert_eq!(per_group, [0.125, 0.125, 0.25, 0.5]);

        // Output layer after (2, 2, 2): hidden sources only.
        let sizes = [2, 2, 2];
        let w = connection_source_weights(4, &sizes, 3).unwrap();
        let oracle = enumerated_weights(4, &sizes, 3, true);
        assert_eq!(w.len(), 6);
        for ((_, expected), got) in oracle.iter().zip(&w) {
            assert!((expected - got).abs() < 1e-15);
        }
    }

    proptest::proptest! {
        #[test]
        fn weights_normalised(sizes in proptest::collection::vec(1usize..6, 1..7), n in 1usize..8, pick in 0usize..100) {
            let layer = 2 + pick % sizes.len();
            let w = connection_source_weights(layer, &sizes, n).unwrap();
            let total: f64 = w.iter().sum();
            proptest::prop_assert!((total - 1.0).abs() < 1e-12);
            proptest::prop_assert_eq!(w.len(), layer_sources(layer, &sizes[..layer - 1], n, true, layer == sizes.len() + 1).len());
        }

        #[test]
        fn previous_only_rules_are_exact(sizes in proptest::collection::vec(1usize..6, 1..7), n in 1usize..8) {
            let rules = build_dynamic_rules(&sizes, n, false).unwrap();
            for i in 2..=sizes.len() + 1 {
                let expected: Vec<_> = (0..sizes[i - 2]).map(|m| h(i - 2, m)).collect();
                proptest::prop_assert_eq!(rules.get(i).unwrap(), &expected[..]);
            }
        }
    }
}
