use crate::base::{hamming, levenshtein, SymbolBlock};
use crate::config::{ConfigWriter, TokenStream};
use crate::error::{Error, Result};

/// Error counts from one frame: `values[k]` out of `trials[k]` for each measure.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleResult {
    pub values: Vec<u64>,
    pub trials: Vec<u64>,
}

impl SampleResult {
    pub fn new(values: Vec<u64>, trials: Vec<u64>) -> Result<Self> {
        if values.len() != trials.len() {
            return Err(Error::invalid("values and trials differ in length"));
        }
        if let Some(k) = (0..values.len()).find(|&k| values[k] > trials[k]) {
            return Err(Error::invalid(format!(
                "measure {k}: {} errors in {} trials",
                values[k], trials[k]
            )));
        }
        Ok(Self { values, trials })
    }

    pub fn measures(&self) -> usize {
        self.values.len()
    }
}

/// Compares source and decoded frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Collector {
    /// Symbol errors and frame errors by Hamming distance.
    Hamming,
    /// Adds a Levenshtein-distance symbol error count.
    Levenshtein,
    /// One-hot histogram of the per-frame symbol error count.
    HistSymerr,
}

impl Collector {
    pub fn name(&self) -> &'static str {
        match self {
            Collector::Hamming => "errors_hamming",
            Collector::Levenshtein => "errors_levenshtein",
            Collector::HistSymerr => "hist_symerr",
        }
    }

    /// Number of measures for frames of `n` symbols.
    pub fn measures(&self, n: usize) -> usize {
        match self {
            Collector::Hamming => 2,
            Collector::Levenshtein => 3,
            Collector::HistSymerr => n + 1,
        }
    }

    pub fn labels(&self, n: usize) -> Vec<String> {
        match self {
            Collector::Hamming => vec!["SER".into(), "FER".into()],
            Collector::Levenshtein => vec!["SER".into(), "SER_Levenshtein".into(), "FER".into()],
            Collector::HistSymerr => (0..=n).map(|k| format!("P_{k}")).collect(),
        }
    }

    pub fn collect(&self, src: &SymbolBlock, dec: &SymbolBlock) -> Result<SampleResult> {
        match self {
            Collector::Hamming => collect_hamming(src, dec),
            Collector::Levenshtein => collect_levenshtein(src, dec),
            Collector::HistSymerr => collect_hist_symerr(src, dec),
        }
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1);
    }

    pub(crate) fn read_hamming(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("errors_hamming", 1)?;
        Ok(Collector::Hamming)
    }

    pub(crate) fn read_levenshtein(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("errors_levenshtein", 1)?;
        Ok(Collector::Levenshtein)
    }

    pub(crate) fn read_hist_symerr(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("hist_symerr", 1)?;
        Ok(Collector::HistSymerr)
    }
}

pub fn collect_hamming(src: &SymbolBlock, dec: &SymbolBlock) -> Result<SampleResult> {
    let d = hamming(src, dec)? as u64;
    Ok(SampleResult {
        values: vec![d, u64::from(d > 0)],
        trials: vec![src.len() as u64, 1],
    })
}

pub fn collect_levenshtein(src: &SymbolBlock, dec: &SymbolBlock) -> Result<SampleResult> {
    let n = src.len();
    let common = n.min(dec.len());
    let overlap = src.as_slice()[..common]
        .iter()
        .zip(&dec.as_slice()[..common])
        .filter(|(a, b)| a != b)
        .count();
    let capped = (overlap + n.abs_diff(dec.len())).min(n);
    let lev = levenshtein(src, dec)?.min(n);
    Ok(SampleResult {
        values: vec![capped as u64, lev as u64, u64::from(lev > 0 || src != dec)],
        trials: vec![n as u64, n as u64, 1],
    })
}

pub fn collect_hist_symerr(src: &SymbolBlock, dec: &SymbolBlock) -> Result<SampleResult> {
    let d = hamming(src, dec)?;
    let n = src.len();
    let mut values = vec![0; n + 1];
    values[d] = 1;
    Ok(SampleResult {
        values,
        trials: vec![1; n + 1],
    })
}
