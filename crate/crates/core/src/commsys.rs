//! The complete transmit/receive chain for one frame.

use crate::base::{RandomSource, SymbolBlock};
use crate::channel::Channel;
use crate::codec::{Codec, CodecInfo, SoftOutCodec};
use crate::config::{self, ConfigWriter, TokenStream};
use crate::error::{Error, Result};
use crate::mapper::{Mapper, MapperLayout};
use crate::modem::Modem;

#[derive(Clone, Debug)]
pub struct CommSystem {
    codec: Codec,
    mapper: Mapper,
    modem: Modem,
    tx_channel: Channel,
    rx_channel: Channel,
    separate_rx: bool,
    layout: MapperLayout,
}

impl PartialEq for CommSystem {
    fn eq(&self, other: &Self) -> bool {
        self.codec == other.codec
            && self.mapper == other.mapper
            && self.modem == other.modem
            && self.tx_channel == other.tx_channel
            && self.separate_rx == other.separate_rx
            && (!self.separate_rx || self.rx_channel == other.rx_channel)
    }
}

fn check_channel(modem: &Modem, channel: &Channel, role: &str) -> Result<()> {
    if modem.is_signal_space() != channel.is_signal_space() {
        return Err(Error::invalid(format!(
            "{role} channel {} does not match modem {}",
            channel.name(),
            modem.name()
        )));
    }
    if let Some(q) = channel.alphabet() {
        if q != modem.order() {
            return Err(Error::invalid(format!(
                "{role} channel alphabet {q} differs from modem alphabet {}",
                modem.order()
            )));
        }
    }
    Ok(())
}

impl CommSystem {
    /// Wires the chain, checking alphabets and block sizes end to end. Without
    /// `rx_channel` the receiver assumes the transmit channel.
    pub fn new(
        codec: Codec,
        mut mapper: Mapper,
        modem: Modem,
        tx_channel: Channel,
        rx_channel: Option<Channel>,
    ) -> Result<Self> {
        let info = codec.info();
        let layout = mapper.configure(info.q_out, modem.order(), info.output_block_size)?;
        check_channel(&modem, &tx_channel, "transmit")?;
        let separate_rx = rx_channel.is_some();
        let rx_channel = rx_channel.unwrap_or_else(|| tx_channel.clone());
        check_channel(&modem, &rx_channel, "receive")?;
        Ok(Self {
            codec,
            mapper,
            modem,
            tx_channel,
            rx_channel,
            separate_rx,
            layout,
        })
    }

    pub fn name(&self) -> &'static str {
        "commsys"
    }

    pub fn codec(&self) -> &Codec {
        &self.codec
    }

    pub fn mapper(&self) -> &Mapper {
        &self.mapper
    }

    pub fn modem(&self) -> &Modem {
        &self.modem
    }

    pub fn tx_channel(&self) -> &Channel {
        &self.tx_channel
    }

    pub fn rx_channel(&self) -> &Channel {
        &self.rx_channel
    }

    pub fn codec_info(&self) -> CodecInfo {
        self.codec.info()
    }

    /// Information symbols per frame.
    pub fn input_size(&self) -> usize {
        self.codec.info().input_block_size
    }

    pub fn input_alphabet(&self) -> usize {
        self.codec.info().q_in
    }

    /// Channel symbols per frame.
    pub fn channel_symbols(&self) -> usize {
        self.layout.n_out
    }

    /// Information bits per channel symbol.
    pub fn info_rate(&self) -> f64 {
        self.codec.info().input_bits() / self.channel_symbols() as f64
    }

    pub fn set_parameter(&mut self, parameter: f64) -> Result<()> {
        let rate = self.info_rate();
        self.tx_channel.set_parameter(parameter, rate)?;
        self.rx_channel.set_parameter(parameter, rate)
    }

    /// Direct access for tests that need exact noise levels.
    pub fn channels_mut(&mut self) -> (&mut Channel, &mut Channel) {
        (&mut self.tx_channel, &mut self.rx_channel)
    }

    /// Encodes, transmits and decodes one frame.
    pub fn cycle(&mut self, src: &SymbolBlock, rng: &mut RandomSource) -> Result<SymbolBlock> {
        let encoded = self.codec.encode(src).map_err(Error::in_stage("encode"))?;
        self.mapper.advance(rng);
        let mapped = self
            .mapper
            .transform(&encoded)
            .map_err(Error::in_stage("map"))?;
        let tx = self
            .modem
            .modulate(&mapped)
            .map_err(Error::in_stage("modulate"))?;
        let rx = self
            .tx_channel
            .transmit(&tx, rng)
            .map_err(Error::in_stage("transmit"))?;
        let ptable = self
            .modem
            .demodulate(&rx, &self.rx_channel)
            .map_err(Error::in_stage("demodulate"))?;
        let ptable = self
            .mapper
            .inverse(&ptable)
            .map_err(Error::in_stage("unmap"))?;
        self.codec
            .init_decoder(&ptable, None)
            .and_then(|_| self.codec.decode_hard())
            .map_err(Error::in_stage("decode"))
    }

    pub(crate) fn write_payload(&self, w: &mut ConfigWriter) {
        w.version(1)
            .field("Separate receive channel (0 = no, 1 = yes)", u8::from(self.separate_rx));
        w.comment("Codec");
        config::write_nested(w, &self.codec);
        w.comment("Mapper");
        config::write_nested(w, &self.mapper);
        w.comment("Modem");
        config::write_nested(w, &self.modem);
        w.comment("Channel");
        config::write_nested(w, &self.tx_channel);
        if self.separate_rx {
            w.comment("Receive channel");
            config::write_nested(w, &self.rx_channel);
        }
    }

    pub(crate) fn read_payload(ts: &mut TokenStream) -> Result<Self> {
        ts.read_version("commsys", 1)?;
        let line = ts.line();
        let separate: u8 = ts.read_checked("separate receive channel flag", |&f| f <= 1)?;
        let codec: Codec = config::read_nested(ts)?;
        let mapper: Mapper = config::read_nested(ts)?;
        let modem: Modem = config::read_nested(ts)?;
        let tx: Channel = config::read_nested(ts)?;
        let rx = if separate == 1 {
            Some(config::read_nested::<Channel>(ts)?)
        } else {
            None
        };
        Self::new(codec, mapper, modem, tx, rx)
            .map_err(|e| Error::parse(line, format!("inconsistent system: {e}")))
    }
}
