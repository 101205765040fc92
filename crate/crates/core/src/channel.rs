//! Noise and corruption models.
//!
//! Each channel samples corrupted output in [`Channel::transmit`] and supplies
//! the (unnormalized) likelihood kernel used by demodulation.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rand_distr::Exp1;

use crate::base::{RandomSource, SignalPoint};
use crate::config::{ConfigWriter, TokenStream};
use crate::error::{Error, Result};

/// Block of channel symbols: signal-space points or abstract symbols.
#[derive(Clone, Debug, PartialEq)]
pub enum Transmission {
    Signal(Vec<SignalPoint>),
    /// For erasure channels the value `q` marks an erased position.
    Symbols(Vec<usize>),
}

impl Transmission {
    pub fn len(&self) -> usize {
        match self {
            Transmission::Signal(v) => v.len(),
            Transmission::Symbols(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How the swept parameter is interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParameterKind {
    /// Eb/N0 in dB.
    SnrDb,
    /// Substitution or erasure probability.
    Probability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    Awgn,
    Laplacian,
    Qsc { q: usize },
    Qec { q: usize },
}

#[derive(Clone, Debug)]
pub struct Channel {
    kind: ChannelKind,
    /// Noise standard deviation per dimension, or symbol corruption
    /// probability, depending on the kind.
    level: Option<f64>,
}

impl PartialEq for Channel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Per-dimension noise variance for unit-energy symbols carrying `rate` information bits.
pub fn awgn_variance(ebn0_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))
}

impl Channel {
    pub fn new(kind: ChannelKind) -> Result<Self> {
        if let ChannelKind::Qsc { q } | ChannelKind::Qec { q } = kind {
            if q < 2 {
                return Err(Error::invalid(format!("alphabet size {q} is below 2")));
            }
        }
        Ok(Self { kind, level: None })
    }

    pub fn awgn() -> Self {
        Self::new(ChannelKind::Awgn).expect("valid")
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Laplacian => "laplacian",
            ChannelKind::Qsc { .. } => "qsc",
            ChannelKind::Qec { .. } => "qec",
        }
    }

    pub fn parameter_kind(&self) -> ParameterKind {
        match self.kind {
            ChannelKind::Awgn | ChannelKind::Laplacian => ParameterKind::SnrDb,
            _ => ParameterKind::Probability,
        }
    }

    pub fn is_signal_space(&self) -> bool {
        self.parameter_kind() == ParameterKind::SnrDb
    }

    /// Alphabet of abstract channels.
    pub fn alphabet(&self) -> Option<usize> {
        match self.kind {
            ChannelKind::Qsc { q } | ChannelKind::Qec { q } => Some(q),
            _ => None,
        }
    }

    /// Sets the channel condition. Signal-space channels read `parameter` as
    /// Eb/N0 in dB given `rate` information bits per channel symbol; abstract
    /// channels read it as the corruption probability.
    pub fn set_parameter(&mut self, parameter: f64, rate: f64) -> Result<()> {
        match self.parameter_kind() {
            ParameterKind::SnrDb => {
                if !parameter.is_finite() {
                    return Err(Error::invalid(format!("SNR {parameter} is not finite")));
                }
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid(format!("information rate {rate} must be positive")));
                }
                self.level = Some(awgn_variance(parameter, rate).sqrt());
            }
            ParameterKind::Probability => {
                if !(0.0..=1.0).contains(&parameter) {
                    return Err(Error::invalid(format!(
                        "{} probability {parameter} outside [0, 1]",
                        self.name()
                    )));
                }
                self.level = Some(parameter);
            }
        }
        Ok(())
    }

    /// Sets the per-dimension noise deviation directly; zero gives a
    /// noiseless channel.
    pub fn set_sigma(&mut self, sigma: f64) -> Result<()> {
        if !self.is_signal_space() || !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "cannot set sigma {sigma} on {}",
                self.name()
            )));
        }
        self.level = Some(sigma);
        Ok(())
    }

    /// Noise deviation (signal channels) or corruption probability.
    pub fn level(&self) -> Option<f64> {
        self.level
    }

    fn level_or_err(&self) -> Result<f64> {
        self.level
            .ok_or_else(|| Error::State(format!("{} parameter not set", self.name())))
    }

    pub fn transmit(&self, tx: &Transmission, rng: &mut RandomSource) -> Result<Transmission> {
        let level = self.level_or_err()?;
        match (self.kind, tx) {
            (ChannelKind::Awgn, Transmission::Signal(points)) => Ok(Transmission::Signal(
                points
                    .iter()
                    .map(|p| {
                        let ni = rng.standard_normal();
                        let nq = rng.standard_normal();
                        SignalPoint::new(p.i + level * ni, p.q + level * nq)
                    })
                    .collect(),
            )),
            (ChannelKind::Laplacian, Transmission::Signal(points)) => {
                let b = level / SQRT_2;
                let mut laplace = || {
                    let e: f64 = rng.sample(Exp1);
                    if rng.random::<bool>() {
                        b * e
                    } else {
                        -b * e
                    }
                };
                Ok(Transmission::Signal(
                    points
                        .iter()
                        .map(|p| SignalPoint::new(p.i + laplace(), p.q + laplace()))
                        .collect(),
                ))
            }
            (ChannelKind::Qsc { q }, Transmission::Symbols(symbols)) => {
                check_symbols(symbols, q)?;
                Ok(Transmission::Symbols(
                    symbols
                        .iter()
                        .map(|&s| {
                            if rng.uniform_real() < level {
                                (s + 1 + rng.uniform_int(q - 1)) % q
                            } else {
                                s
                            }
                        })
                        .collect(),
                ))
            }
            (ChannelKind::Qec { q }, Transmission::Symbols(symbols)) => {
                check_symbols(symbols, q)?;
                Ok(Transmission::Symbols(
                    symbols
                        .iter()
                        .map(|&s| if rng.uniform_real() < level { q } else { s })
                        .collect(),
                ))
            }
            _ => Err(Error::invalid(format!(
                "{} cannot carry this transmission representation",
                self.name()
            ))),
        }
    }

    /// Natural log of the signal-space kernel.
    pub fn signal_log_likelihood(&self, tx: SignalPoint, rx: SignalPoint) -> Result<f64> {
        let sigma = self.level_or_err()?;
        let ll = match self.kind {
            ChannelKind::Awgn => {
                let d2 = tx.distance_sq(rx);
                if sigma == 0.0 {
                    if d2 == 0.0 { 0.0 } else { f64::NEG_INFINITY }
                } else {
                    -d2 / (2.0 * sigma * sigma)
                }
            }
            ChannelKind::Laplacian => {
                let d1 = (tx.i - rx.i).abs() + (tx.q - rx.q).abs();
                if sigma == 0.0 {
                    if d1 == 0.0 { 0.0 } else { f64::NEG_INFINITY }
                } else {
                    -d1 * SQRT_2 / sigma
                }
            }
            _ => {
                return Err(Error::invalid(format!(
                    "{} has no signal-space kernel",
                    self.name()
                )))
            }
        };
        Ok(ll)
    }

    pub fn signal_likelihood(&self, tx: SignalPoint, rx: SignalPoint) -> Result<f64> {
        Ok(self.signal_log_likelihood(tx, rx)?.exp())
    }

    /// Kernel of the abstract channels. For erasure channels an erased `rx`
    /// (equal to `q`) gives the same value for every `tx`.
    pub fn symbol_likelihood(&self, tx: usize, rx: usize) -> Result<f64> {
        let p = self.level_or_err()?;
        match self.kind {
            ChannelKind::Qsc { q } => Ok(if rx == tx { 1.0 - p } else { p / (q - 1) as f64 }),
            ChannelKind::Qec { q } => Ok(if rx == q {
                p
            } else if rx == tx {
                1.0 - p
            } else {
                0.0
            }),
            _ => Err(Error::invalid(format!(
                "{} has no abstract-symbol kernel",
                self.name()
            ))),
        }
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1);
        if let Some(q) = self.alphabet() {
            w.field("Alphabet size", q);
        }
    }

    pub(crate) fn read_awgn(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("awgn", 1)?;
        Self::new(ChannelKind::Awgn)
    }

    pub(crate) fn read_laplacian(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("laplacian", 1)?;
        Self::new(ChannelKind::Laplacian)
    }

    pub(crate) fn read_qsc(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("qsc", 1)?;
        let q = ts.read_checked("alphabet size", |&q: &usize| q >= 2)?;
        Self::new(ChannelKind::Qsc { q })
    }

    pub(crate) fn read_qec(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("qec", 1)?;
        let q = ts.read_checked("alphabet size", |&q: &usize| q >= 2)?;
        Self::new(ChannelKind::Qec { q })
    }
}

fn check_symbols(symbols: &[usize], q: usize) -> Result<()> {
    match symbols.iter().find(|&&s| s >= q) {
        Some(s) => Err(Error::invalid(format!("symbol {s} outside alphabet {q}"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awgn_variance_formula() {
        let v = awgn_variance(6.8, 1.0);
        assert!((v - 1.0 / (2.0 * 10f64.powf(0.68))).abs() < 1e-15);
        assert!((v - 0.10447).abs() < 1e-5);
        assert_eq!(awgn_variance(0.0, 1.0), 0.5);
        let mut ch = Channel::awgn();
        ch.set_parameter(0.0, 1.0).unwrap();
        assert!((ch.level().unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(ch.set_parameter(3.0, 0.0).is_err());
    }

    #[test]
    fn probability_parameters() {
        let mut ch = Channel::new(ChannelKind::Qsc { q: 2 }).unwrap();
        ch.set_parameter(0.1, 1.0).unwrap();
        assert_eq!(ch.level(), Some(0.1));
        assert!(ch.set_parameter(1.5, 1.0).is_err());
        assert!(ch.set_parameter(-0.1, 1.0).is_err());
    }

    #[test]
    fn unset_parameter_is_state_error() {
        let ch = Channel::awgn();
        let tx = Transmission::Signal(vec![SignalPoint::new(1.0, 0.0)]);
        assert!(matches!(
            ch.transmit(&tx, &mut RandomSource::from_seed(0)),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn noiseless_limit() {
        let mut ch = Channel::awgn();
        ch.set_sigma(0.0).unwrap();
        let tx = Transmission::Signal(vec![SignalPoint::new(1.0, 0.0), SignalPoint::new(-1.0, 0.5)]);
        assert_eq!(ch.transmit(&tx, &mut RandomSource::from_seed(1)).unwrap(), tx);
    }

    #[test]
    fn qsc_forced_flips() {
        let mut ch = Channel::new(ChannelKind::Qsc { q: 2 }).unwrap();
        ch.set_parameter(1.0, 1.0).unwrap();
        let tx = Transmission::Symbols(vec![0, 1, 1, 0]);
        let rx = ch.transmit(&tx, &mut RandomSource::from_seed(1)).unwrap();
        assert_eq!(rx, Transmission::Symbols(vec![1, 0, 0, 1]));
    }

    #[test]
    fn qsc_substitution_rate() {
        let mut ch = Channel::new(ChannelKind::Qsc { q: 4 }).unwrap();
        ch.set_parameter(0.1, 1.0).unwrap();
        let n = 1_000_000;
        let tx: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let Transmission::Symbols(rx) = ch
            .transmit(&Transmission::Symbols(tx.clone()), &mut RandomSource::from_seed(3))
            .unwrap()
        else {
            unreachable!()
        };
        let changed = tx.iter().zip(&rx).filter(|(a, b)| a != b).count();
        let frac = changed as f64 / n as f64;
        assert!((frac - 0.1).abs() < 0.001, "{frac}");
        assert!(rx.iter().all(|&s| s < 4));
    }

    #[test]
    fn awgn_moments() {
        let mut ch = Channel::awgn();
        ch.set_sigma(0.7).unwrap();
        let n = 1_000_000;
        let tx = Transmission::Signal(vec![SignalPoint::default(); n]);
        let Transmission::Signal(rx) = ch.transmit(&tx, &mut RandomSource::from_seed(4)).unwrap()
        else {
            unreachable!()
        };
        for dim in [|p: &SignalPoint| p.i, |p: &SignalPoint| p.q] {
            let xs: Vec<f64> = rx.iter().map(dim).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.004 * 0.7, "{mean}");
            assert!((var / 0.49 - 1.0).abs() < 0.01, "{var}");
        }
    }

    #[test]
    fn laplacian_variance() {
        let mut ch = Channel::new(ChannelKind::Laplacian).unwrap();
        ch.set_sigma(0.5).unwrap();
        let n = 500_000;
        let tx = Transmission::Signal(vec![SignalPoint::default(); n]);
        let Transmission::Signal(rx) = ch.transmit(&tx, &mut RandomSource::from_seed(5)).unwrap()
        else {
            unreachable!()
        };
        let var = rx.iter().map(|p| p.i * p.i).sum::<f64>() / n as f64;
        assert!((var / 0.25 - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn kernels() {
        let mut awgn = Channel::awgn();
        awgn.set_sigma(0.3).unwrap();
        let p = SignalPoint::new(0.2, -0.4);
        assert_eq!(awgn.signal_likelihood(p, p).unwrap(), 1.0);

        let mut qsc = Channel::new(ChannelKind::Qsc { q: 4 }).unwrap();
        qsc.set_parameter(0.3, 1.0).unwrap();
        assert!((qsc.symbol_likelihood(1, 2).unwrap() - 0.1).abs() < 1e-15);
        assert!((qsc.symbol_likelihood(2, 2).unwrap() - 0.7).abs() < 1e-15);

        let mut qec = Channel::new(ChannelKind::Qec { q: 3 }).unwrap();
        qec.set_parameter(0.2, 1.0).unwrap();
        let erased: Vec<f64> = (0..3).map(|s| qec.symbol_likelihood(s, 3).unwrap()).collect();
        assert!(erased.iter().all(|&v| v == erased[0]));
        assert_eq!(qec.symbol_likelihood(0, 1).unwrap(), 0.0);
        assert!(awgn.symbol_likelihood(0, 0).is_err());
    }

    #[test]
    fn representation_mismatch() {
        let mut ch = Channel::new(ChannelKind::Qsc { q: 2 }).unwrap();
        ch.set_parameter(0.1, 1.0).unwrap();
        let tx = Transmission::Signal(vec![SignalPoint::default()]);
        assert!(ch.transmit(&tx, &mut RandomSource::from_seed(0)).is_err());
    }
}
