//! Layered networks decoded from phenotype strings.
//!
//! Two phenotype shapes are understood:
//!
//! * layered: `sig(...) - sig(...) -- sig(...)`, where `-` separates
//!   neurons, `--` separates layers and the last layer is the output;
//! * weighted sum: `w * sig(...) + w * sig(...)`, a single hidden layer
//!   whose outputs feed one sigmoid output neuron with zero bias.
//!
//! Inside `sig(...)` a neuron is `w * src + ... + bias`, where `src` is
//! `xK` (input K) or `hJ,M` (neuron M of hidden layer J), all 1-based.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureRef {
    /// Input feature, 0-based.
    Input(usize),
    /// Hidden neuron, both indices 0-based.
    Hidden { layer: usize, neuron: usize },
}

impl FeatureRef {
    pub fn is_input(&self) -> bool {
        matches!(self, FeatureRef::Input(_))
    }
}

impl fmt::Display for FeatureRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureRef::Input(k) => write!(f, "x{}", k + 1),
            FeatureRef::Hidden { layer, neuron } => write!(f, "h{},{}", layer + 1, neuron + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neuron {
    pub bias: f64,
    pub connections: Vec<(FeatureRef, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub n_inputs: usize,
    pub hidden: Vec<Vec<Neuron>>,
    pub outputs: Vec<Neuron>,
    pub output_activation: OutputActivation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StructureStats {
    pub num_hidden_layers: usize,
    pub num_neurons: usize,
    pub num_used_features: usize,
}

/// Logistic function, kept strictly inside (0, 1) where f64 would round
/// to an endpoint.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

impl NetworkSpec {
    /// Check the layering invariant: hidden layer `i` reads inputs or
    /// layers before `i`, outputs read hidden neurons only.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Phenotype { position: 0, message: msg });
        if self.hidden.is_empty() || self.hidden.iter().any(Vec::is_empty) {
            return bad("network needs at least one non-empty hidden layer".into());
        }
        if self.outputs.is_empty() {
            return bad("network has no output neuron".into());
        }
        let check = |src: &FeatureRef, before: usize, inputs_ok: bool| match *src {
            FeatureRef::Input(k) => inputs_ok && k < self.n_inputs,
            FeatureRef::Hidden { layer, neuron } => layer < before && neuron < self.hidden[layer].len(),
        };
        for (i, layer) in self.hidden.iter().enumerate() {
            for neuron in layer {
                if let Some((src, _)) = neuron.connections.iter().find(|(s, _)| !check(s, i, true)) {
                    return bad(format!("{src} is not available to hidden layer {}", i + 1));
                }
            }
        }
        for neuron in &self.outputs {
            if let Some((src, _)) = neuron
                .connections
                .iter()
                .find(|(s, _)| !check(s, self.hidden.len(), false))
            {
                return bad(format!("{src} is not available to the output layer"));
            }
        }
        Ok(())
    }

    /// Per-output confidences for one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = Scratch::default();
        self.forward_with(x, &mut scratch)?;
        Ok(scratch.outputs)
    }

    /// Confidence of class 1: the single sigmoid output, or the second
    /// softmax component.
    pub fn confidence(&self, x: &[f64], scratch: &mut Scratch) -> Result<f64> {
        self.forward_with(x, scratch)?;
        Ok(match self.output_activation {
            OutputActivation::Sigmoid => scratch.outputs[0],
            OutputActivation::Softmax => scratch.outputs[scratch.outputs.len() - 1],
        })
    }

    pub fn forward_with(&self, x: &[f64], scratch: &mut Scratch) -> Result<()> {
        if x.len() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                got: x.len(),
            });
        }
        let Scratch { hidden, offsets, outputs } = scratch;
        hidden.clear();
        offsets.clear();
        let value = |hidden: &[f64], offsets: &[usize], src: &FeatureRef| match *src {
            FeatureRef::Input(k) => x[k],
            FeatureRef::Hidden { layer, neuron } => {
                debug_assert!(layer < offsets.len(), "read of uncomputed layer");
                hidden[offsets[layer] + neuron]
            }
        };
        for layer in &self.hidden {
            let start = hidden.len();
            for neuron in layer {
                let z = neuron.bias
                    + neuron
                        .connections
                        .iter()
                        .map(|(src, w)| w * value(&hidden[..start], offsets, src))
                        .sum::<f64>();
                hidden.push(sigmoid(z));
            }
            offsets.push(start);
        }
        outputs.clear();
        for neuron in &self.outputs {
            let z = neuron.bias
                + neuron
                    .connections
                    .iter()
                    .map(|(src, w)| w * value(hidden, offsets, src))
                    .sum::<f64>();
            outputs.push(z);
        }
        match self.output_activation {
            OutputActivation::Sigmoid => outputs.iter_mut().for_each(|z| *z = sigmoid(*z)),
            OutputActivation::Softmax => softmax(outputs),
        }
        Ok(())
    }

    pub fn structure_stats(&self) -> StructureStats {
        let mut used = vec![false; self.n_inputs];
        for neuron in self.hidden.iter().flatten().chain(&self.outputs) {
            for (src, _) in &neuron.connections {
                if let FeatureRef::Input(k) = src {
                    used[*k] = true;
                }
            }
        }
        StructureStats {
            num_hidden_layers: self.hidden.len(),
            num_neurons: self.hidden.iter().map(Vec::len).sum(),
            num_used_features: used.iter().filter(|u| **u).count(),
        }
    }
}

/// Reusable buffers for repeated forward passes.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    hidden: Vec<f64>,
    offsets: Vec<usize>,
    outputs: Vec<f64>,
}

impl fmt::Display for Neuron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sig(")?;
        for (src, w) in &self.connections {
            write!(f, "{w}*{src}+")?;
        }
        write!(f, "{})", self.bias)
    }
}

/// Canonical layered form; [`parse_phenotype`] reads it back to an equal
/// network.
impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for layer in self.hidden.iter().chain(std::iter::once(&self.outputs)) {
            if !std::ptr::eq(layer, &self.hidden[0]) {
                write!(f, "--")?;
            }
            for (m, neuron) in layer.iter().enumerate() {
                if m > 0 {
                    write!(f, "-")?;
                }
                write!(f, "{neuron}")?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Phenotype {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(format!("expected `{token}`"))
        }
    }

    fn digits(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn integer(&mut self) -> Result<usize> {
        let d = self.digits();
        if d.is_empty() {
            return self.err("expected an index");
        }
        // ASCII digits only, so this cannot fail except on overflow.
        std::str::from_utf8(d)
            .unwrap()
            .parse()
            .or_else(|_| self.err("index out of range"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        if self.digits().is_empty() {
            self.pos = start;
            return self.err("expected a number");
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            if self.digits().is_empty() {
                return self.err("expected digits after `.`");
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse().or_else(|_| self.err("bad number"))
    }

    fn source(&mut self) -> Result<FeatureRef> {
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(b'x') => {
                self.pos += 1;
                let k = self.integer()?;
                if k == 0 {
                    return self.err("features are numbered from 1");
                }
                Ok(FeatureRef::Input(k - 1))
            }
            Some(b'h') => {
                self.pos += 1;
                let j = self.integer()?;
                if self.src.get(self.pos) != Some(&b',') {
                    return self.err("expected `,` in hidden reference");
                }
                self.pos += 1;
                let m = self.integer()?;
                if j == 0 || m == 0 {
                    return self.err("layers and neurons are numbered from 1");
                }
                Ok(FeatureRef::Hidden { layer: j - 1, neuron: m - 1 })
            }
            _ => self.err("expected `xK` or `hJ,M`"),
        }
    }

    fn neuron(&mut self) -> Result<Neuron> {
        self.expect("sig(")?;
        let mut connections = Vec::new();
        loop {
            let value = self.number()?;
            if self.eat("*") {
                connections.push((self.source()?, value));
                self.expect("+")?;
            } else {
                self.expect(")")?;
                return Ok(Neuron { bias: value, connections });
            }
        }
    }

    fn layered(&mut self) -> Result<Vec<Vec<Neuron>>> {
        let mut layers = vec![vec![self.neuron()?]];
        loop {
            if self.eat("--") {
                layers.push(vec![self.neuron()?]);
            } else if self.eat("-") {
                let n = self.neuron()?;
                layers.last_mut().unwrap().push(n);
            } else if self.peek().is_none() {
                return Ok(layers);
            } else {
                return self.err("expected `-`, `--` or end of phenotype");
            }
        }
    }

    fn weighted_sum(&mut self) -> Result<(Vec<Neuron>, Neuron)> {
        let mut hidden = Vec::new();
        let mut output = Neuron { bias: 0.0, connections: Vec::new() };
        loop {
            let w = self.number()?;
            self.expect("*")?;
            output.connections.push((FeatureRef::Hidden { layer: 0, neuron: hidden.len() }, w));
            hidden.push(self.neuron()?);
            if self.peek().is_none() {
                return Ok((hidden, output));
            }
            self.expect("+")?;
        }
    }
}

/// Decode a phenotype string into a network over `n_inputs` features. A
/// single output neuron uses the sigmoid; several use the softmax.
pub fn parse_phenotype(phenotype: &str, n_inputs: usize) -> Result<NetworkSpec> {
    let mut p = Parser {
        src: phenotype.as_bytes(),
        pos: 0,
    };
    let (hidden, outputs) = if p.eat("sig(") {
        p.pos = 0;
        let mut layers = p.layered()?;
        if layers.len() < 2 {
            return p.err("layered phenotype needs a hidden and an output layer");
        }
        let outputs = layers.pop().unwrap();
        (layers, outputs)
    } else {
        let (hidden, output) = p.weighted_sum()?;
        (vec![hidden], vec![output])
    };
    let output_activation = if outputs.len() > 1 {
        OutputActivation::Softmax
    } else {
        OutputActivation::Sigmoid
    };
    let net = NetworkSpec {
        n_inputs,
        hidden,
        outputs,
        output_activation,
    };
    net.validate()?;
    Ok(net)
}
