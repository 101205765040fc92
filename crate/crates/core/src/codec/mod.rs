//! Encoder/decoder pairs with soft-in, soft-out decoding.

mod mapcc;
mod repetition;
mod uncoded;

pub use mapcc::MapCc;
pub use repetition::Repetition;
pub use uncoded::Uncoded;

use crate::base::{ProbTable, SymbolBlock};
use crate::config::{ConfigWriter, TokenStream};
use crate::error::{Error, Result};

/// Block sizes and alphabets of a codec.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodecInfo {
    /// Information symbols per frame.
    pub input_block_size: usize,
    /// Encoded symbols per frame.
    pub output_block_size: usize,
    pub q_in: usize,
    pub q_out: usize,
    pub iterations: usize,
}

impl CodecInfo {
    pub fn input_bits(&self) -> f64 {
        self.input_block_size as f64 * (self.q_in as f64).log2()
    }

    pub fn output_bits(&self) -> f64 {
        self.output_block_size as f64 * (self.q_out as f64).log2()
    }

    pub fn rate(&self) -> f64 {
        self.input_bits() / self.output_bits()
    }
}

/// The soft-in, soft-out codec contract.
///
/// Decoding is two-phase: [`init_decoder`](Self::init_decoder) loads the
/// channel statistics (and optional priors on the information symbols), then
/// [`softdecode`](Self::softdecode) may be called one or more times.
pub trait SoftOutCodec {
    fn info(&self) -> CodecInfo;

    fn encode(&self, src: &SymbolBlock) -> Result<SymbolBlock>;

    fn init_decoder(&mut self, ptable: &ProbTable, app: Option<&ProbTable>) -> Result<()>;

    /// Posterior probabilities of the information symbols.
    fn softdecode(&mut self) -> Result<ProbTable>;

    /// Posteriors of both the information and the encoded symbols.
    fn softdecode_full(&mut self) -> Result<(ProbTable, ProbTable)>;

    fn decode_hard(&mut self) -> Result<SymbolBlock> {
        Ok(self.softdecode()?.hard_decision())
    }

    /// Zero-mass rows seen since construction; each was decoded as uniform.
    fn degenerate_rows(&self) -> u64;
}

/// Channel statistics loaded by `init_decoder`.
#[derive(Clone, Debug, Default)]
pub(crate) struct DecoderInput {
    pub r: Option<ProbTable>,
    pub app: Option<ProbTable>,
    pub degenerate: u64,
}

impl DecoderInput {
    pub fn load(
        &mut self,
        info: &CodecInfo,
        ptable: &ProbTable,
        app: Option<&ProbTable>,
    ) -> Result<()> {
        ptable.check_shape(info.output_block_size, info.q_out)?;
        if let Some(app) = app {
            app.check_shape(info.input_block_size, info.q_in)?;
        }
        let mut r = ptable.clone();
        self.degenerate += sanitize(&mut r);
        self.app = app.cloned().map(|mut a| {
            self.degenerate += sanitize(&mut a);
            a
        });
        self.r = Some(r);
        Ok(())
    }

    pub fn channel(&self) -> Result<&ProbTable> {
        self.r
            .as_ref()
            .ok_or_else(|| Error::State("decoder used before init_decoder".into()))
    }
}

/// Replaces rows without mass by uniform rows, returning how many there were.
fn sanitize(table: &mut ProbTable) -> u64 {
    let q = table.q() as f64;
    let mut count = 0;
    for row in table.rows_mut() {
        if !(row.iter().sum::<f64>() > 0.0) {
            count += 1;
            row.iter_mut().for_each(|v| *v = 1.0 / q);
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq)]
pub enum Codec {
    Uncoded(Uncoded),
    Repetition(Repetition),
    MapCc(MapCc),
}

macro_rules! dispatch {
    ($self:ident, $c:ident => $e:expr) => {
        match $self {
            Codec::Uncoded($c) => $e,
            Codec::Repetition($c) => $e,
            Codec::MapCc($c) => $e,
        }
    };
}

impl SoftOutCodec for Codec {
    fn info(&self) -> CodecInfo {
        dispatch!(self, c => c.info())
    }

    fn encode(&self, src: &SymbolBlock) -> Result<SymbolBlock> {
        dispatch!(self, c => c.encode(src))
    }

    fn init_decoder(&mut self, ptable: &ProbTable, app: Option<&ProbTable>) -> Result<()> {
        dispatch!(self, c => c.init_decoder(ptable, app))
    }

    fn softdecode(&mut self) -> Result<ProbTable> {
        dispatch!(self, c => c.softdecode())
    }

    fn softdecode_full(&mut self) -> Result<(ProbTable, ProbTable)> {
        dispatch!(self, c => c.softdecode_full())
    }

    fn degenerate_rows(&self) -> u64 {
        dispatch!(self, c => c.degenerate_rows())
    }
}

impl Codec {
    pub fn name(&self) -> &'static str {
        match self {
            Codec::Uncoded(_) => "uncoded<double>",
            Codec::Repetition(_) => "repetition<double>",
            Codec::MapCc(_) => "mapcc<double>",
        }
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        dispatch!(self, c => c.write_payload(w))
    }

    pub(crate) fn read_uncoded(ts: &mut TokenStream) -> Result<Self> {
        Uncoded::read_payload(ts).map(Codec::Uncoded)
    }

    pub(crate) fn read_repetition(ts: &mut TokenStream) -> Result<Self> {
        Repetition::read_payload(ts).map(Codec::Repetition)
    }

    pub(crate) fn read_mapcc(ts: &mut TokenStream) -> Result<Self> {
        MapCc::read_payload(ts).map(Codec::MapCc)
    }
}
