use super::{CodecInfo, DecoderInput, SoftOutCodec};
use crate::base::{ProbTable, SymbolBlock};
use crate::config::{ConfigWriter, TokenStream};
use crate::error::{Error, Result};

/// Memoryless repetition code: each symbol is sent `r` times in place.
#[derive(Clone, Debug)]
pub struct Repetition {
    q: usize,
    n: usize,
    r: usize,
    decoder: DecoderInput,
}

impl PartialEq for Repetition {
    fn eq(&self, other: &Self) -> bool {
        (self.q, self.n, self.r) == (other.q, other.n, other.r)
    }
}

impl Repetition {
    pub fn new(q: usize, n: usize, r: usize) -> Result<Self> {
        if q < 2 || n == 0 || r == 0 {
            return Err(Error::invalid(format!(
                "repetition needs q >= 2, N >= 1, r >= 1, got q={q} N={n} r={r}"
            )));
        }
        Ok(Self {
            q,
            n,
            r,
            decoder: DecoderInput::default(),
        })
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1)
            .field("Alphabet size", self.q)
            .field("Block length", self.n)
            .field("Repetition count", self.r);
    }

    pub(crate) fn read_payload(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("repetition", 1)?;
        let q = ts.read_checked("alphabet size", |&q: &usize| q >= 2)?;
        let n = ts.read_checked("block length", |&n: &usize| n >= 1)?;
        let r = ts.read_checked("repetition count", |&r: &usize| r >= 1)?;
        Self::new(q, n, r)
    }
}

impl SoftOutCodec for Repetition {
    fn info(&self) -> CodecInfo {
        CodecInfo {
            input_block_size: self.n,
            output_block_size: self.n * self.r,
            q_in: self.q,
            q_out: self.q,
            iterations: 1,
        }
    }

    fn encode(&self, src: &SymbolBlock) -> Result<SymbolBlock> {
        src.check_shape(self.q, self.n)?;
        let data = src
            .as_slice()
            .iter()
            .flat_map(|&s| std::iter::repeat_n(s, self.r))
            .collect();
        Ok(SymbolBlock::from_trusted(self.q, data))
    }

    fn init_decoder(&mut self, ptable: &ProbTable, app: Option<&ProbTable>) -> Result<()> {
        let info = self.info();
        self.decoder.load(&info, ptable, app)
    }

    fn softdecode(&mut self) -> Result<ProbTable> {
        let r = self.decoder.channel()?;
        let mut ri = match &self.decoder.app {
            Some(app) => app.clone(),
            None => ProbTable::uniform(self.n, self.q),
        };
        for (i, row) in ri.rows_mut().enumerate() {
            for k in 0..self.r {
                for (v, l) in row.iter_mut().zip(r.row(i * self.r + k)) {
                    *v *= l;
                }
            }
        }
        self.decoder.degenerate += ri.normalize_rows() as u64;
        Ok(ri)
    }

    fn softdecode_full(&mut self) -> Result<(ProbTable, ProbTable)> {
        let ri = self.softdecode()?;
        let mut ro = ProbTable::zeros(self.n * self.r, self.q);
        for i in 0..self.n {
            for k in 0..self.r {
                ro.row_mut(i * self.r + k).copy_from_slice(ri.row(i));
            }
        }
        Ok((ri, ro))
    }

    fn degenerate_rows(&self) -> u64 {
        self.decoder.degenerate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::RandomSource;
    use crate::codec::test_support::random_table;

    #[test]
    fn encode_repeats_in_place() {
        let c = Repetition::new(2, 2, 3).unwrap();
        let src = SymbolBlock::new(2, vec![1, 0]).unwrap();
        assert_eq!(c.encode(&src).unwrap().as_slice(), &[1, 1, 1, 0, 0, 0]);
    }

    /// Posterior by enumerating every value of each symbol and multiplying the
    /// likelihoods of all its copies.
    fn oracle(r: &ProbTable, n: usize, reps: usize, q: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let w: Vec<f64> = (0..q)
                    .map(|s| (0..reps).map(|k| r.row(i * reps + k)[s]).product())
                    .collect();
                let total: f64 = w.iter().sum();
                w.iter().map(|x| x / total).collect()
            })
            .collect()
    }

    #[test]
    fn soft_combining_matches_product() {
        let mut rng = RandomSource::from_seed(11);
        for (q, n, reps) in [(2, 4, 2), (3, 5, 3), (4, 1, 5)] {
            let mut c = Repetition::new(q, n, reps).unwrap();
            let table = random_table(&mut rng, n * reps, q);
            c.init_decoder(&table, None).unwrap();
            let (ri, ro) = c.softdecode_full().unwrap();
            let expected = oracle(&table, n, reps, q);
            for i in 0..n {
                for s in 0..q {
                    assert!((ri.row(i)[s] - expected[i][s]).abs() < 1e-12);
                }
                assert_eq!(ro.row(i * reps), ri.row(i));
            }
            assert!(ri.is_normalized());
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = RandomSource::from_seed(12);
        let mut c = Repetition::new(4, 10, 3).unwrap();
        for _ in 0..100 {
            let src = SymbolBlock::new(4, (0..10).map(|_| rng.uniform_int(4)).collect()).unwrap();
            let enc = c.encode(&src).unwrap();
            c.init_decoder(&ProbTable::point_mass(&enc), None).unwrap();
            assert_eq!(c.decode_hard().unwrap(), src);
        }
    }
}
