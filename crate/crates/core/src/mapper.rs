//! Translation between the codec alphabet and the modem alphabet.

use rand::seq::SliceRandom;

use crate::base::{ProbTable, RandomSource, SymbolBlock};
use crate::config::{ConfigWriter, TokenStream};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapperKind {
    /// One modem symbol per codec symbol.
    Straight,
    /// Random permutation of the symbols within each block.
    Interleaved,
    /// Each codec symbol becomes several modem symbols (most significant first).
    Dividing { q_in: usize, q_out: usize },
    /// Several codec symbols are packed into one modem symbol.
    Aggregating { q_in: usize, q_out: usize },
}

/// Block sizes fixed when a mapper is wired into a system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapperLayout {
    pub q_in: usize,
    pub q_out: usize,
    pub n_in: usize,
    pub n_out: usize,
    /// Modem symbols per codec symbol (dividing) or codec symbols per modem
    /// symbol (aggregating); 1 otherwise.
    pub factor: usize,
}

#[derive(Clone, Debug)]
pub struct Mapper {
    kind: MapperKind,
    layout: Option<MapperLayout>,
    permutation: Vec<usize>,
}

impl PartialEq for Mapper {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// `f` with `base^f == value`, if any.
fn exact_log(value: usize, base: usize) -> Option<usize> {
    if base < 2 {
        return None;
    }
    let (mut f, mut acc) = (0, 1usize);
    while acc < value {
        acc = acc.checked_mul(base)?;
        f += 1;
    }
    (acc == value).then_some(f)
}

fn check_power(kind: &str, big: usize, small: usize) -> Result<usize> {
    match exact_log(big, small) {
        Some(f) if f >= 2 => Ok(f),
        _ => Err(Error::invalid(format!(
            "{kind} mapper needs {big} to be a power (at least 2) of {small}"
        ))),
    }
}

impl Mapper {
    pub fn new(kind: MapperKind) -> Result<Self> {
        match kind {
            MapperKind::Dividing { q_in, q_out } => {
                check_power("dividing", q_in, q_out)?;
            }
            MapperKind::Aggregating { q_in, q_out } => {
                check_power("aggregating", q_out, q_in)?;
            }
            _ => {}
        }
        Ok(Self {
            kind,
            layout: None,
            permutation: Vec::new(),
        })
    }

    pub fn straight() -> Self {
        Self::new(MapperKind::Straight).expect("straight mapper is always valid")
    }

    pub fn interleaved() -> Self {
        Self::new(MapperKind::Interleaved).expect("interleaved mapper is always valid")
    }

    pub fn kind(&self) -> &MapperKind {
        &self.kind
    }

    pub fn layout(&self) -> Option<MapperLayout> {
        self.layout
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MapperKind::Straight => "map_straight",
            MapperKind::Interleaved => "map_interleaved",
            MapperKind::Dividing { .. } => "map_dividing",
            MapperKind::Aggregating { .. } => "map_aggregating",
        }
    }

    /// Fixes the alphabets and codec-side block length.
    pub fn configure(&mut self, q_in: usize, q_out: usize, n_in: usize) -> Result<MapperLayout> {
        let mismatch = |want_in: usize, want_out: usize| {
            Error::invalid(format!(
                "{} declared for {want_in} -> {want_out} but wired as {q_in} -> {q_out}",
                self.name()
            ))
        };
        let (factor, n_out) = match self.kind {
            MapperKind::Straight | MapperKind::Interleaved => {
                if q_in != q_out {
                    return Err(Error::invalid(format!(
                        "{} cannot translate alphabet {q_in} to {q_out}",
                        self.name()
                    )));
                }
                (1, n_in)
            }
            MapperKind::Dividing { q_in: a, q_out: b } => {
                if (a, b) != (q_in, q_out) {
                    return Err(mismatch(a, b));
                }
                let f = check_power("dividing", a, b)?;
                (f, n_in * f)
            }
            MapperKind::Aggregating { q_in: a, q_out: b } => {
                if (a, b) != (q_in, q_out) {
                    return Err(mismatch(a, b));
                }
                let f = check_power("aggregating", b, a)?;
                if n_in % f != 0 {
                    return Err(Error::invalid(format!(
                        "aggregating {f} symbols needs a block length divisible by {f}, got {n_in}"
                    )));
                }
                (f, n_in / f)
            }
        };
        let layout = MapperLayout {
            q_in,
            q_out,
            n_in,
            n_out,
            factor,
        };
        self.layout = Some(layout);
        self.permutation = (0..n_in).collect();
        Ok(layout)
    }

    fn layout_or_err(&self) -> Result<MapperLayout> {
        self.layout
            .ok_or_else(|| Error::State(format!("{} used before configuration", self.name())))
    }

    /// Current interleaver permutation (identity for other mappers).
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Refreshes per-frame state; only the interleaver draws anything.
    pub fn advance(&mut self, rng: &mut RandomSource) {
        if self.kind == MapperKind::Interleaved {
            self.permutation.shuffle(rng);
        }
    }

    pub fn transform(&self, input: &SymbolBlock) -> Result<SymbolBlock> {
        let l = self.layout_or_err()?;
        input.check_shape(l.q_in, l.n_in)?;
        let src = input.as_slice();
        let out = match self.kind {
            MapperKind::Straight => src.to_vec(),
            MapperKind::Interleaved => {
                let mut out = vec![0; l.n_in];
                for (i, &s) in src.iter().enumerate() {
                    out[self.permutation[i]] = s;
                }
                out
            }
            MapperKind::Dividing { .. } => {
                let mut out = Vec::with_capacity(l.n_out);
                for &s in src {
                    let mut digits = vec![0; l.factor];
                    let mut v = s;
                    for d in digits.iter_mut().rev() {
                        *d = v % l.q_out;
                        v /= l.q_out;
                    }
                    out.extend(digits);
                }
                out
            }
            MapperKind::Aggregating { .. } => src
                .chunks_exact(l.factor)
                .map(|chunk| chunk.iter().fold(0, |acc, &s| acc * l.q_in + s))
                .collect(),
        };
        Ok(SymbolBlock::from_trusted(l.q_out, out))
    }

    /// Maps modem-side statistics back to the codec alphabet.
    pub fn inverse(&self, pin: &ProbTable) -> Result<ProbTable> {
        let l = self.layout_or_err()?;
        pin.check_shape(l.n_out, l.q_out)?;
        match self.kind {
            MapperKind::Straight => Ok(pin.clone()),
            MapperKind::Interleaved => {
                let mut out = ProbTable::zeros(l.n_in, l.q_in);
                for i in 0..l.n_in {
                    out.row_mut(i).copy_from_slice(pin.row(self.permutation[i]));
                }
                Ok(out)
            }
            MapperKind::Dividing { .. } => {
                let mut out = ProbTable::zeros(l.n_in, l.q_in);
                for i in 0..l.n_in {
                    let row = out.row_mut(i);
                    for (s, v) in row.iter_mut().enumerate() {
                        let mut p = 1.0;
                        let mut x = s;
                        for d in (0..l.factor).rev() {
                            p *= pin.row(i * l.factor + d)[x % l.q_out];
                            x /= l.q_out;
                        }
                        *v = p;
                    }
                }
                Ok(out)
            }
            MapperKind::Aggregating { .. } => {
                let mut out = ProbTable::zeros(l.n_in, l.q_in);
                for i in 0..l.n_out {
                    for (s, &p) in pin.row(i).iter().enumerate() {
                        let mut x = s;
                        for d in (0..l.factor).rev() {
                            out.row_mut(i * l.factor + d)[x % l.q_in] += p;
                            x /= l.q_in;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1);
        if let MapperKind::Dividing { q_in, q_out } | MapperKind::Aggregating { q_in, q_out } =
            self.kind
        {
            w.field("Input alphabet size", q_in)
                .field("Output alphabet size", q_out);
        }
    }

    pub(crate) fn read_straight(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("map_straight", 1)?;
        Ok(Self::straight())
    }

    pub(crate) fn read_interleaved(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("map_interleaved", 1)?;
        Ok(Self::interleaved())
    }

    fn read_alphabets(ts: &mut TokenStream, name: &str) -> Result<(usize, usize, usize)> {
        ts.read_version(name, 1)?;
        let line = ts.line();
        let q_in = ts.read_checked("input alphabet size", |&q: &usize| q >= 2)?;
        let q_out = ts.read_checked("output alphabet size", |&q: &usize| q >= 2)?;
        Ok((q_in, q_out, line))
    }

    pub(crate) fn read_dividing(ts: &mut TokenStream) -> Result<Self> {
        let (q_in, q_out, line) = Self::read_alphabets(ts, "map_dividing")?;
        Self::new(MapperKind::Dividing { q_in, q_out }).map_err(|e| Error::parse(line, e.to_string()))
    }

    pub(crate) fn read_aggregating(ts: &mut TokenStream) -> Result<Self> {
        let (q_in, q_out, line) = Self::read_alphabets(ts, "map_aggregating")?;
        Self::new(MapperKind::Aggregating { q_in, q_out })
            .map_err(|e| Error::parse(line, e.to_string()))
    }
}
