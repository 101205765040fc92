//! Monte Carlo estimation of error rates.

mod accumulator;
mod collector;
mod engine;
mod state;
mod sweep;

use rand::RngCore;
use sha2::{Digest, Sha256};

pub use accumulator::{
    BinomialAccumulator, Floor, MeasureState, StopMode, StopRule, DEFAULT_CONFIDENCE,
    DEFAULT_ERROR_EVENTS, DEFAULT_MIN_SAMPLES, DEFAULT_RELATIVE_ERROR,
};
pub use collector::{
    collect_hamming, collect_hist_symerr, collect_levenshtein, Collector, SampleResult,
};
pub use engine::{run_for, run_local, LocalOptions, QuickReport};
pub use state::{write_atomic, CompletedPoint, SweepState};
pub use sweep::{round_parameter, StepMode, SweepSpec};

use crate::base::{RandomSource, SymbolBlock};
use crate::commsys::CommSystem;
use crate::config::{self, ConfigWriter, TokenStream};
use crate::error::{Error, Result};

/// Where the information symbols of each frame come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourceSpec {
    Zero,
    Random,
    User(Vec<usize>),
}

impl SourceSpec {
    fn code(&self) -> u8 {
        match self {
            SourceSpec::Zero => 0,
            SourceSpec::Random => 1,
            SourceSpec::User(_) => 2,
        }
    }
}

/// A system together with its source and results collector.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulator {
    source: SourceSpec,
    collector: Collector,
    system: CommSystem,
}

impl Simulator {
    pub fn new(source: SourceSpec, collector: Collector, system: CommSystem) -> Result<Self> {
        if let SourceSpec::User(seq) = &source {
            let (q, n) = (system.input_alphabet(), system.input_size());
            if seq.len() != n {
                return Err(Error::invalid(format!(
                    "user sequence has {} symbols, frame needs {n}",
                    seq.len()
                )));
            }
            if let Some(s) = seq.iter().find(|&&s| s >= q) {
                return Err(Error::invalid(format!("user symbol {s} outside alphabet {q}")));
            }
        }
        Ok(Self {
            source,
            collector,
            system,
        })
    }

    pub fn name(&self) -> &'static str {
        "commsys_simulator"
    }

    pub fn source(&self) -> &SourceSpec {
        &self.source
    }

    pub fn collector(&self) -> Collector {
        self.collector
    }

    pub fn system(&self) -> &CommSystem {
        &self.system
    }

    pub fn system_mut(&mut self) -> &mut CommSystem {
        &mut self.system
    }

    pub fn measures(&self) -> usize {
        self.collector.measures(self.system.input_size())
    }

    pub fn labels(&self) -> Vec<String> {
        self.collector.labels(self.system.input_size())
    }

    /// Information bits per frame.
    pub fn frame_bits(&self) -> f64 {
        self.system.codec_info().input_bits()
    }

    pub fn set_parameter(&mut self, parameter: f64) -> Result<()> {
        self.system.set_parameter(parameter)
    }

    /// Hex SHA-256 of the canonical serialized form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(config::to_text(self).as_bytes()))
    }

    pub fn make_source(&self, rng: &mut RandomSource) -> SymbolBlock {
        let (q, n) = (self.system.input_alphabet(), self.system.input_size());
        let data = match &self.source {
            SourceSpec::Zero => vec![0; n],
            SourceSpec::User(seq) => seq.clone(),
            SourceSpec::Random if q.is_power_of_two() => {
                let bits = q.trailing_zeros();
                let per_word = (64 / bits) as usize;
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let mut word = rng.next_u64();
                    for _ in 0..per_word.min(n - out.len()) {
                        out.push((word & (q as u64 - 1)) as usize);
                        word >>= bits;
                    }
                }
                out
            }
            SourceSpec::Random => (0..n).map(|_| rng.uniform_int(q)).collect(),
        };
        SymbolBlock::new(q, data).expect("source symbols lie in the alphabet")
    }

    /// Runs one frame and collects its error counts.
    pub fn sample(&mut self, rng: &mut RandomSource) -> Result<SampleResult> {
        let src = self.make_source(rng);
        let dec = self.system.cycle(&src, rng)?;
        self.collector.collect(&src, &dec)
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1).field(
            "Input mode (0 = all-zero, 1 = random, 2 = user sequence)",
            self.source.code(),
        );
        if let SourceSpec::User(seq) = &self.source {
            w.comment("User sequence");
            let text: Vec<String> = seq.iter().map(usize::to_string).collect();
            w.value(text.join(" "));
        }
        w.comment("Results collector");
        config::write_nested(w, &self.collector);
        w.comment("Communication system");
        config::write_nested(w, &self.system);
    }

    pub(crate) fn read_payload(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("commsys_simulator", 1)?;
        let mode: u8 = ts.read_checked("input mode", |&m| m <= 2)?;
        // the sequence precedes the system, so its length is checked afterwards
        let mut user = Vec::new();
        let user_line = ts.line();
        if mode == 2 {
            while let Some(tok) = ts.peek() {
                match tok.text.parse::<usize>() {
                    Ok(v) => {
                        user.push(v);
                        ts.next();
                    }
                    Err(_) => break,
                }
            }
        }
        let collector: Collector = config::read_nested(ts)?;
        let system: CommSystem = config::read_nested(ts)?;
        let source = match mode {
            0 => SourceSpec::Zero,
            1 => SourceSpec::Random,
            _ => SourceSpec::User(user),
        };
        Self::new(source, collector, system).map_err(|e| Error::parse(user_line, e.to_string()))
    }
}
