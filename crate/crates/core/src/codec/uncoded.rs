use super::{CodecInfo, DecoderInput, SoftOutCodec};
use crate::base::{ProbTable, SymbolBlock};
use crate::config::{ConfigWriter, TokenStream};
use crate::error::{Error, Result};

/// Uncoded transmission: the encoder output is a copy of its input.
#[derive(Clone, Debug)]
pub struct Uncoded {
    q: usize,
    n: usize,
    decoder: DecoderInput,
}

impl PartialEq for Uncoded {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.n == other.n
    }
}

impl Uncoded {
    pub fn new(q: usize, n: usize) -> Result<Self> {
        if q < 2 || n == 0 {
            return Err(Error::invalid(format!(
                "uncoded needs q >= 2 and N >= 1, got q={q} N={n}"
            )));
        }
        Ok(Self {
            q,
            n,
            decoder: DecoderInput::default(),
        })
    }

    /// Stored statistics (channel times priors) after `init_decoder`.
    pub fn stored_statistics(&self) -> Option<&ProbTable> {
        self.decoder.r.as_ref()
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1)
            .field("Alphabet size", self.q)
            .field("Block length", self.n);
    }

    pub(crate) fn read_payload(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("uncoded", 1)?;
        let q = ts.read_checked("alphabet size", |&q: &usize| q >= 2)?;
        let n = ts.read_checked("block length", |&n: &usize| n >= 1)?;
        Self::new(q, n)
    }
}

impl SoftOutCodec for Uncoded {
    fn info(&self) -> CodecInfo {
        CodecInfo {
            input_block_size: self.n,
            output_block_size: self.n,
            q_in: self.q,
            q_out: self.q,
            iterations: 1,
        }
    }

    fn encode(&self, src: &SymbolBlock) -> Result<SymbolBlock> {
        src.check_shape(self.q, self.n)?;
        Ok(src.clone())
    }

    fn init_decoder(&mut self, ptable: &ProbTable, app: Option<&ProbTable>) -> Result<()> {
        let info = self.info();
        self.decoder.load(&info, ptable, app)?;
        if let (Some(r), Some(app)) = (self.decoder.r.as_mut(), self.decoder.app.as_ref()) {
            r.mul_assign(app)?;
        }
        Ok(())
    }

    fn softdecode(&mut self) -> Result<ProbTable> {
        let mut ri = self.decoder.channel()?.clone();
        self.decoder.degenerate += ri.normalize_rows() as u64;
        Ok(ri)
    }

    fn softdecode_full(&mut self) -> Result<(ProbTable, ProbTable)> {
        let ri = self.softdecode()?;
        Ok((ri.clone(), ri))
    }

    fn degenerate_rows(&self) -> u64 {
        self.decoder.degenerate
    }
}
