//! Finite state machines describing convolutional encoders.
//!
//! Binary machines use controller-canonical form with one input per step.
//! The state index holds the register contents with the most recent entry in
//! bit 0, so a new input enters at the low-delay end and shifts the rest up.

use std::fmt;
use std::str::FromStr;

use crate::config::{ConfigWriter, TokenStream};
use crate::error::{Error, Result};

/// Largest `states x inputs` table built by [`Fsm::io_table`] by default.
pub const DEFAULT_TABLE_LIMIT: usize = 1 << 20;

/// Register lengths above this make the trellis impractically large.
const MAX_MEMORY: usize = 20;

/// Binary polynomial in `z^-1`, written as a 0/1 string whose leftmost
/// character is the `z^0` coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorPolynomial {
    coefficients: Vec<bool>,
}

impl GeneratorPolynomial {
    pub fn new(coefficients: Vec<bool>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("generator polynomial is empty"));
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[bool] {
        &self.coefficients
    }

    /// Number of coefficients, i.e. highest delay plus one.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Powers of `z^-1` with nonzero coefficient.
    pub fn delays(&self) -> Vec<usize> {
        self.coefficients
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
            .collect()
    }

    /// Bit `i` set when the `z^-i` coefficient is one.
    fn mask(&self) -> usize {
        self.coefficients
            .iter()
            .enumerate()
            .fold(0, |m, (i, &c)| m | (usize::from(c) << i))
    }
}

impl FromStr for GeneratorPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coefficients = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::invalid(format!(
                    "generator `{s}` must contain only 0 and 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficients)
    }
}

impl fmt::Display for GeneratorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.coefficients {
            f.write_str(if c { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn parity(x: usize) -> usize {
    (x.count_ones() & 1) as usize
}

fn memory_of(polys: &[&GeneratorPolynomial]) -> Result<usize> {
    let memory = polys.iter().map(|g| g.len()).max().unwrap_or(1) - 1;
    if memory > MAX_MEMORY {
        return Err(Error::invalid(format!(
            "memory order {memory} exceeds the supported maximum {MAX_MEMORY}"
        )));
    }
    Ok(memory)
}

/// Binary non-recursive convolutional code, one input and `n` outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nrcc {
    generators: Vec<GeneratorPolynomial>,
    masks: Vec<usize>,
    memory: usize,
}

impl Nrcc {
    pub fn new(generators: Vec<GeneratorPolynomial>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::invalid("nrcc needs at least one generator"));
        }
        let memory = memory_of(&generators.iter().collect::<Vec<_>>())?;
        let masks = generators.iter().map(GeneratorPolynomial::mask).collect();
        Ok(Self {
            generators,
            masks,
            memory,
        })
    }

    pub fn generators(&self) -> &[GeneratorPolynomial] {
        &self.generators
    }
}

/// Binary recursive systematic convolutional code. The first output is the
/// systematic input; the remaining outputs use the feedforward polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rscc {
    feedback: GeneratorPolynomial,
    feedforward: Vec<GeneratorPolynomial>,
    feedback_mask: usize,
    masks: Vec<usize>,
    memory: usize,
}

impl Rscc {
    pub fn new(
        feedback: GeneratorPolynomial,
        feedforward: Vec<GeneratorPolynomial>,
    ) -> Result<Self> {
        if !feedback.coefficients()[0] {
            return Err(Error::invalid(
                "feedback polynomial must have a unit z^0 coefficient",
            ));
        }
        let mut all = vec![&feedback];
        all.extend(feedforward.iter());
        let memory = memory_of(&all)?;
        Ok(Self {
            feedback_mask: feedback.mask(),
            masks: feedforward.iter().map(GeneratorPolynomial::mask).collect(),
            feedback,
            feedforward,
            memory,
        })
    }

    pub fn feedback(&self) -> &GeneratorPolynomial {
        &self.feedback
    }

    pub fn feedforward(&self) -> &[GeneratorPolynomial] {
        &self.feedforward
    }

    /// Register input `w_t` for input `x` from `state`.
    fn recursion(&self, state: usize, x: usize) -> usize {
        x ^ parity((state << 1) & self.feedback_mask)
    }
}

/// Zero-state machine: repeats each `q`-ary input `r` times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zsm {
    q: usize,
    r: usize,
}

impl Zsm {
    pub fn new(q: usize, r: usize) -> Result<Self> {
        if q < 2 || r == 0 {
            return Err(Error::invalid(format!(
                "zsm needs q >= 2 and r >= 1, got q={q} r={r}"
            )));
        }
        Ok(Self { q, r })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fsm {
    Nrcc(Nrcc),
    Rscc(Rscc),
    Zsm(Zsm),
}

/// Precomputed transitions of a machine, indexed by `(state, input)`.
#[derive(Clone, Debug)]
pub struct IoTable {
    num_inputs: usize,
    next: Vec<usize>,
    output: Vec<usize>,
}

impl IoTable {
    pub fn num_states(&self) -> usize {
        self.next.len() / self.num_inputs
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: usize) -> usize {
        self.next[state * self.num_inputs + input]
    }

    /// Packed output word; see [`Fsm::unpack_output`].
    #[inline]
    pub fn output(&self, state: usize, input: usize) -> usize {
        self.output[state * self.num_inputs + input]
    }
}

impl Fsm {
    pub fn name(&self) -> &'static str {
        match self {
            Fsm::Nrcc(_) => "nrcc",
            Fsm::Rscc(_) => "rscc",
            Fsm::Zsm(_) => "zsm",
        }
    }

    /// Symbol alphabet of inputs and outputs.
    pub fn q(&self) -> usize {
        match self {
            Fsm::Zsm(z) => z.q,
            _ => 2,
        }
    }

    /// Input symbols consumed per step (k).
    pub fn inputs(&self) -> usize {
        1
    }

    /// Output symbols produced per step (n).
    pub fn outputs(&self) -> usize {
        match self {
            Fsm::Nrcc(m) => m.generators.len(),
            Fsm::Rscc(m) => 1 + m.feedforward.len(),
            Fsm::Zsm(z) => z.r,
        }
    }

    /// Memory order (register length).
    pub fn memory(&self) -> usize {
        match self {
            Fsm::Nrcc(m) => m.memory,
            Fsm::Rscc(m) => m.memory,
            Fsm::Zsm(_) => 0,
        }
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }

    /// Distinct input words per step.
    pub fn num_input_words(&self) -> usize {
        self.q().pow(self.inputs() as u32)
    }

    /// Distinct output words per step.
    pub fn num_output_words(&self) -> usize {
        self.q().pow(self.outputs() as u32)
    }

    fn pack_input(&self, input: &[usize]) -> Result<usize> {
        if input.len() != self.inputs() {
            return Err(Error::invalid(format!(
                "{} expects {} input symbol(s), got {}",
                self.name(),
                self.inputs(),
                input.len()
            )));
        }
        let q = self.q();
        input.iter().try_fold(0, |acc, &s| {
            if s >= q {
                Err(Error::invalid(format!(
                    "input symbol {s} outside alphabet of size {q}"
                )))
            } else {
                Ok(acc * q + s)
            }
        })
    }

    /// Splits a packed output word into per-output symbols, first output first.
    pub fn unpack_output(&self, word: usize) -> Vec<usize> {
        let (q, n) = (self.q(), self.outputs());
        let mut out = vec![0; n];
        let mut w = word;
        for slot in out.iter_mut().rev() {
            *slot = w % q;
            w /= q;
        }
        out
    }

    /// Transition on a packed input word, returning `(packed output, next state)`.
    pub(crate) fn step_word(&self, state: usize, input: usize) -> (usize, usize) {
        match self {
            Fsm::Nrcc(m) => {
                let reg = (state << 1) | input;
                let out = m.masks.iter().fold(0, |w, &g| (w << 1) | parity(reg & g));
                (out, reg & ((1 << m.memory) - 1))
            }
            Fsm::Rscc(m) => {
                let w = m.recursion(state, input);
                let reg = (state << 1) | w;
                let out = m
                    .masks
                    .iter()
                    .fold(input, |acc, &g| (acc << 1) | parity(reg & g));
                (out, reg & ((1 << m.memory) - 1))
            }
            Fsm::Zsm(z) => {
                let out = (0..z.r).fold(0, |w, _| w * z.q + input);
                (out, 0)
            }
        }
    }

    fn check_state(&self, state: usize) -> Result<()> {
        if state >= self.num_states() {
            return Err(Error::invalid(format!(
                "state {state} outside 0..{}",
                self.num_states()
            )));
        }
        Ok(())
    }

    /// One encoder step: returns the output symbols and the next state.
    pub fn step(&self, state: usize, input: &[usize]) -> Result<(Vec<usize>, usize)> {
        self.check_state(state)?;
        let word = self.pack_input(input)?;
        let (out, next) = self.step_word(state, word);
        Ok((self.unpack_output(out), next))
    }

    pub(crate) fn tail_word(&self, state: usize) -> usize {
        match self {
            Fsm::Rscc(m) => m.recursion(state, 0),
            _ => 0,
        }
    }

    /// The input that moves `state` one step closer to the zero state.
    pub fn tail_input(&self, state: usize) -> Result<Vec<usize>> {
        self.check_state(state)?;
        Ok(vec![self.tail_word(state)])
    }

    pub fn io_table(&self) -> Result<IoTable> {
        self.io_table_with_limit(DEFAULT_TABLE_LIMIT)
    }

    pub fn io_table_with_limit(&self, limit: usize) -> Result<IoTable> {
        let states = self.num_states();
        let inputs = self.num_input_words();
        let size = states
            .checked_mul(inputs)
            .filter(|&s| s <= limit)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "{states} states x {inputs} inputs exceeds table limit {limit}"
                ))
            })?;
        let mut next = Vec::with_capacity(size);
        let mut output = Vec::with_capacity(size);
        for s in 0..states {
            for x in 0..inputs {
                let (o, n) = self.step_word(s, x);
                output.push(o);
                next.push(n);
            }
        }
        Ok(IoTable {
            num_inputs: inputs,
            next,
            output,
        })
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1);
        match self {
            Fsm::Nrcc(m) => {
                w.field("Inputs", 1).field("Outputs", m.generators.len());
                w.comment("Generators (z^0 coefficient first)");
                for g in &m.generators {
                    w.value(g);
                }
            }
            Fsm::Rscc(m) => {
                w.field("Inputs", 1).field("Outputs", 1 + m.feedforward.len());
                w.comment("Feedback generator, then feedforward generators (z^0 first)");
                w.value(&m.feedback);
                for g in &m.feedforward {
                    w.value(g);
                }
            }
            Fsm::Zsm(z) => {
                w.field("Alphabet size", z.q).field("Repetition count", z.r);
            }
        }
    }

    fn read_generators(ts: &mut TokenStream, name: &str) -> Result<Vec<GeneratorPolynomial>> {
        let line = ts.line();
        let k: usize = ts.read("input count")?;
        if k != 1 {
            return Err(Error::parse(
                line,
                format!("{name}: only single-input machines are supported, got k={k}"),
            ));
        }
        let n: usize = ts.read_checked("output count", |&n| n >= 1)?;
        (0..n)
            .map(|_| {
                let tok = ts.expect("generator polynomial")?;
                tok.text
                    .parse()
                    .map_err(|e: Error| Error::parse(tok.line, e.to_string()))
            })
            .collect()
    }

    pub(crate) fn read_nrcc(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("nrcc", 1)?;
        let line = ts.line();
        let gens = Self::read_generators(ts, "nrcc")?;
        Nrcc::new(gens)
            .map(Fsm::Nrcc)
            .map_err(|e| Error::parse(line, e.to_string()))
    }

    pub(crate) fn read_rscc(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("rscc", 1)?;
        let line = ts.line();
        let mut gens = Self::read_generators(ts, "rscc")?;
        let feedback = gens.remove(0);
        Rscc::new(feedback, gens)
            .map(Fsm::Rscc)
            .map_err(|e| Error::parse(line, e.to_string()))
    }

    pub(crate) fn read_zsm(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("zsm", 1)?;
        let q = ts.read_checked("alphabet size", |&q: &usize| q >= 2)?;
        let r = ts.read_checked("repetition count", |&r: &usize| r >= 1)?;
        Ok(Fsm::Zsm(Zsm::new(q, r)?))
    }
}
