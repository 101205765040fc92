//! Symbol-to-channel modulation and soft demodulation.

use std::f64::consts::PI;

use crate::base::{gray_decode, ProbTable, SignalPoint, SymbolBlock};
use crate::channel::{Channel, Transmission};
use crate::config::{ConfigWriter, TokenStream};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModemKind {
    /// M-ary phase shift keying, Gray labelled around the ring.
    Mpsk { m: usize },
    /// Square QAM with independent Gray labelling of each axis.
    Qam { m: usize },
    /// Abstract q-ary channel: symbols pass through unchanged.
    Direct { q: usize },
}

/// Unit-energy signal set, indexed by symbol label.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    points: Vec<SignalPoint>,
}

impl Constellation {
    pub fn psk(m: usize) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::invalid(format!("PSK order {m} is not a power of two >= 2")));
        }
        let snap = |x: f64| if x.abs() < 1e-15 { 0.0 } else { x };
        let points = (0..m)
            .map(|s| {
                // the point at ring position k carries label gray(k)
                let k = gray_decode(s, m)?;
                let phase = 2.0 * PI * k as f64 / m as f64;
                Ok(SignalPoint::new(snap(phase.cos()), snap(phase.sin())))
            })
            .collect::<Result<_>>()?;
        Ok(Self { points })
    }

    pub fn qam(m: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        if m < 4 || side * side != m || !side.is_power_of_two() {
            return Err(Error::invalid(format!(
                "QAM order {m} is not a square power of two"
            )));
        }
        let bits = side.trailing_zeros();
        let level = |label: usize| -> Result<f64> {
            Ok(2.0 * gray_decode(label, side)? as f64 - (side - 1) as f64)
        };
        let raw: Vec<SignalPoint> = (0..m)
            .map(|s| Ok(SignalPoint::new(level(s >> bits)?, level(s & (side - 1))?)))
            .collect::<Result<_>>()?;
        let energy = raw.iter().map(|p| p.energy()).sum::<f64>() / m as f64;
        let scale = energy.sqrt().recip();
        let points = raw
            .into_iter()
            .map(|p| SignalPoint::new(p.i * scale, p.q * scale))
            .collect();
        Ok(Self { points })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn point(&self, symbol: usize) -> SignalPoint {
        self.points[symbol]
    }

    pub fn points(&self) -> &[SignalPoint] {
        &self.points
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.energy()).sum::<f64>() / self.order() as f64
    }
}

#[derive(Clone, Debug)]
pub struct Modem {
    kind: ModemKind,
    constellation: Option<Constellation>,
}

impl PartialEq for Modem {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Modem {
    pub fn new(kind: ModemKind) -> Result<Self> {
        let constellation = match kind {
            ModemKind::Mpsk { m } => Some(Constellation::psk(m)?),
            ModemKind::Qam { m } => Some(Constellation::qam(m)?),
            ModemKind::Direct { q } => {
                if q < 2 {
                    return Err(Error::invalid(format!("alphabet size {q} is below 2")));
                }
                None
            }
        };
        Ok(Self {
            kind,
            constellation,
        })
    }

    pub fn kind(&self) -> ModemKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModemKind::Mpsk { .. } => "mpsk",
            ModemKind::Qam { .. } => "qam",
            ModemKind::Direct { .. } => "direct_blockmodem",
        }
    }

    /// Alphabet size.
    pub fn order(&self) -> usize {
        match self.kind {
            ModemKind::Mpsk { m } | ModemKind::Qam { m } => m,
            ModemKind::Direct { q } => q,
        }
    }

    pub fn is_signal_space(&self) -> bool {
        self.constellation.is_some()
    }

    pub fn constellation(&self) -> Option<&Constellation> {
        self.constellation.as_ref()
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.order() as f64).log2()
    }

    pub fn modulate(&self, s: &SymbolBlock) -> Result<Transmission> {
        if s.q() != self.order() {
            return Err(Error::invalid(format!(
                "{} of order {} given alphabet {}",
                self.name(),
                self.order(),
                s.q()
            )));
        }
        Ok(match &self.constellation {
            Some(c) => Transmission::Signal(s.as_slice().iter().map(|&x| c.point(x)).collect()),
            None => Transmission::Symbols(s.as_slice().to_vec()),
        })
    }

    /// Per-position symbol probabilities given the received block, using the
    /// kernel of `rxchan`.
    pub fn demodulate(&self, rx: &Transmission, rxchan: &Channel) -> Result<ProbTable> {
        let m = self.order();
        let mut table = ProbTable::zeros(rx.len(), m);
        match (&self.constellation, rx) {
            (Some(c), Transmission::Signal(points)) => {
                let mut ll = vec![0.0; m];
                for (i, &r) in points.iter().enumerate() {
                    for (s, l) in ll.iter_mut().enumerate() {
                        *l = rxchan.signal_log_likelihood(c.point(s), r)?;
                    }
                    let max = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if max == f64::NEG_INFINITY {
                        continue;
                    }
                    for (v, &l) in table.row_mut(i).iter_mut().zip(&ll) {
                        *v = (l - max).exp();
                    }
                }
            }
            (None, Transmission::Symbols(symbols)) => {
                for (i, &r) in symbols.iter().enumerate() {
                    for (s, v) in table.row_mut(i).iter_mut().enumerate() {
                        *v = rxchan.symbol_likelihood(s, r)?;
                    }
                }
            }
            _ => {
                return Err(Error::invalid(format!(
                    "{} cannot demodulate this representation",
                    self.name()
                )))
            }
        }
        table.normalize_rows();
        Ok(table)
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1).field("Alphabet size", self.order());
    }

    fn read_order(ts: &mut TokenStream, name: &str) -> Result<(usize, usize)> {
        ts.read_version(name, 1)?;
        let line = ts.line();
        let m = ts.read_checked("alphabet size", |&m: &usize| m >= 2)?;
        Ok((m, line))
    }

    pub(crate) fn read_mpsk(ts: &mut TokenStream) -> Result<Self> {
        let (m, line) = Self::read_order(ts, "mpsk")?;
        Self::new(ModemKind::Mpsk { m }).map_err(|e| Error::parse(line, e.to_string()))
    }

    pub(crate) fn read_qam(ts: &mut TokenStream) -> Result<Self> {
        let (m, line) = Self::read_order(ts, "qam")?;
        Self::new(ModemKind::Qam { m }).map_err(|e| Error::parse(line, e.to_string()))
    }

    pub(crate) fn read_direct(ts: &mut TokenStream) -> Result<Self> {
        let (q, line) = Self::read_order(ts, "direct_blockmodem")?;
        Self::new(ModemKind::Direct { q }).map_err(|e| Error::parse(line, e.to_string()))
    }
}
