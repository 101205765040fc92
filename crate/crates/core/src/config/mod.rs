//! Text serialization of components and complete systems.

mod tokens;
mod writer;

use std::collections::BTreeMap;
use std::sync::LazyLock;

pub use tokens::{eat_comments, Token, TokenStream};
pub use writer::ConfigWriter;

use crate::channel::Channel;
use crate::codec::Codec;
use crate::commsys::CommSystem;
use crate::error::{Error, Result};
use crate::fsm::Fsm;
use crate::mapper::Mapper;
use crate::modem::Modem;
use crate::simulator::{Collector, Simulator};

/// Any registered component.
#[derive(Clone, Debug, PartialEq)]
pub enum Component {
    Simulator(Box<Simulator>),
    Collector(Collector),
    System(Box<CommSystem>),
    Codec(Codec),
    Fsm(Fsm),
    Mapper(Mapper),
    Modem(Modem),
    Channel(Channel),
}

macro_rules! each_component {
    ($self:ident, $c:ident => $e:expr) => {
        match $self {
            Component::Simulator($c) => $e,
            Component::Collector($c) => $e,
            Component::System($c) => $e,
            Component::Codec($c) => $e,
            Component::Fsm($c) => $e,
            Component::Mapper($c) => $e,
            Component::Modem($c) => $e,
            Component::Channel($c) => $e,
        }
    };
}

impl Component {
    pub fn category(&self) -> &'static str {
        match self {
            Component::Simulator(_) => Simulator::CATEGORY,
            Component::Collector(_) => Collector::CATEGORY,
            Component::System(_) => CommSystem::CATEGORY,
            Component::Codec(_) => Codec::CATEGORY,
            Component::Fsm(_) => Fsm::CATEGORY,
            Component::Mapper(_) => Mapper::CATEGORY,
            Component::Modem(_) => Modem::CATEGORY,
            Component::Channel(_) => Channel::CATEGORY,
        }
    }

    pub fn name(&self) -> &'static str {
        each_component!(self, c => c.name())
    }

    fn write_payload(&self, w: &mut ConfigWriter) {
        each_component!(self, c => c.write_payload(w))
    }
}

/// A component type with a registry category.
pub trait Serializable: Sized {
    const CATEGORY: &'static str;

    fn name(&self) -> &'static str;

    /// Version and parameters, without the leading name.
    fn write_payload(&self, w: &mut ConfigWriter);

    fn into_component(self) -> Component;

    fn from_component(c: Component) -> Option<Self>;
}

macro_rules! serializable {
    ($t:ty, $category:literal, $variant:ident, boxed) => {
        impl Serializable for $t {
            const CATEGORY: &'static str = $category;
            fn name(&self) -> &'static str {
                <$t>::name(self)
            }
            fn write_payload(&self, w: &mut ConfigWriter) {
                <$t>::write_payload(self, w)
            }
            fn into_component(self) -> Component {
                Component::$variant(Box::new(self))
            }
            fn from_component(c: Component) -> Option<Self> {
                match c {
                    Component::$variant(x) => Some(*x),
                    _ => None,
                }
            }
        }
    };
    ($t:ty, $category:literal, $variant:ident) => {
        impl Serializable for $t {
            const CATEGORY: &'static str = $category;
            fn name(&self) -> &'static str {
                <$t>::name(self)
            }
            fn write_payload(&self, w: &mut ConfigWriter) {
                <$t>::write_payload(self, w)
            }
            fn into_component(self) -> Component {
                Component::$variant(self)
            }
            fn from_component(c: Component) -> Option<Self> {
                match c {
                    Component::$variant(x) => Some(x),
                    _ => None,
                }
            }
        }
    };
}

serializable!(Simulator, "simulator", Simulator, boxed);
serializable!(CommSystem, "commsys", System, boxed);
serializable!(Collector, "collector", Collector);
serializable!(Codec, "codec", Codec);
serializable!(Fsm, "fsm", Fsm);
serializable!(Mapper, "mapper", Mapper);
serializable!(Modem, "modem", Modem);
serializable!(Channel, "channel", Channel);

type Factory = fn(&mut TokenStream) -> Result<Component>;

/// Factories keyed by (category, name).
pub struct ComponentRegistry {
    entries: BTreeMap<(&'static str, &'static str), Factory>,
}

static REGISTRY: LazyLock<ComponentRegistry> = LazyLock::new(ComponentRegistry::build);

fn wrap<T: Serializable>(read: fn(&mut TokenStream) -> Result<T>, ts: &mut TokenStream) -> Result<Component> {
    read(ts).map(T::into_component)
}

macro_rules! register {
    ($reg:ident, $t:ty, $name:literal, $read:path) => {
        $reg.insert::<$t>($name, |ts| wrap::<$t>($read, ts));
    };
}

impl ComponentRegistry {
    pub fn global() -> &'static ComponentRegistry {
        &REGISTRY
    }

    fn insert<T: Serializable>(&mut self, name: &'static str, factory: Factory) {
        let previous = self.entries.insert((T::CATEGORY, name), factory);
        assert!(previous.is_none(), "duplicate registration {}/{name}", T::CATEGORY);
    }

    fn build() -> Self {
        let mut reg = Self {
            entries: BTreeMap::new(),
        };
        register!(reg, Simulator, "commsys_simulator", Simulator::read_payload);
        register!(reg, Collector, "errors_hamming", Collector::read_hamming);
        register!(reg, Collector, "errors_levenshtein", Collector::read_levenshtein);
        register!(reg, Collector, "hist_symerr", Collector::read_hist_symerr);
        register!(reg, CommSystem, "commsys", CommSystem::read_payload);
        register!(reg, Codec, "uncoded<double>", Codec::read_uncoded);
        register!(reg, Codec, "repetition<double>", Codec::read_repetition);
        register!(reg, Codec, "mapcc<double>", Codec::read_mapcc);
        register!(reg, Fsm, "nrcc", Fsm::read_nrcc);
        register!(reg, Fsm, "rscc", Fsm::read_rscc);
        register!(reg, Fsm, "zsm", Fsm::read_zsm);
        register!(reg, Mapper, "map_straight", Mapper::read_straight);
        register!(reg, Mapper, "map_interleaved", Mapper::read_interleaved);
        register!(reg, Mapper, "map_dividing", Mapper::read_dividing);
        register!(reg, Mapper, "map_aggregating", Mapper::read_aggregating);
        register!(reg, Modem, "mpsk", Modem::read_mpsk);
        register!(reg, Modem, "qam", Modem::read_qam);
        register!(reg, Modem, "direct_blockmodem", Modem::read_direct);
        register!(reg, Channel, "awgn", Channel::read_awgn);
        register!(reg, Channel, "laplacian", Channel::read_laplacian);
        register!(reg, Channel, "qsc", Channel::read_qsc);
        register!(reg, Channel, "qec", Channel::read_qec);
        reg
    }

    pub fn contains(&self, category: &str, name: &str) -> bool {
        self.lookup(category, name).is_some()
    }

    fn lookup(&self, category: &str, name: &str) -> Option<Factory> {
        self.entries
            .iter()
            .find(|((c, n), _)| *c == category && *n == name)
            .map(|(_, f)| *f)
    }

    /// Registered names within `category`, sorted.
    pub fn names(&self, category: &str) -> Vec<&'static str> {
        self.entries
            .keys()
            .filter(|(c, _)| *c == category)
            .map(|(_, n)| *n)
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.keys().copied()
    }
}

/// Name line followed by the payload.
pub fn serialize_component(c: &Component) -> String {
    let mut w = ConfigWriter::new();
    w.value(c.name());
    c.write_payload(&mut w);
    w.finish()
}

/// Reads one component of `category` from the stream.
pub fn deserialize_component(ts: &mut TokenStream, category: &str) -> Result<Component> {
    let token = ts.expect(&format!("{category} name"))?;
    let factory = REGISTRY
        .lookup(category, &token.text)
        .ok_or_else(|| Error::UnknownComponent {
            category: category.to_owned(),
            name: token.text.clone(),
            line: token.line,
        })?;
    factory(ts).map_err(|e| match e {
        Error::Parse { line, message } => Error::parse(line, format!("{}: {message}", token.text)),
        other => other,
    })
}

pub fn write_nested<T: Serializable>(w: &mut ConfigWriter, c: &T) {
    w.value(c.name());
    c.write_payload(w);
}

pub fn read_nested<T: Serializable>(ts: &mut TokenStream) -> Result<T> {
    let component = deserialize_component(ts, T::CATEGORY)?;
    Ok(T::from_component(component).expect("registry category matches its type"))
}

/// Serialized text of a single component.
pub fn to_text<T: Serializable>(c: &T) -> String {
    let mut w = ConfigWriter::new();
    write_nested(&mut w, c);
    w.finish()
}

/// Parses a document holding exactly one component of type `T`.
pub fn from_text<T: Serializable>(text: &str) -> Result<T> {
    let mut ts = TokenStream::new(text);
    let c = read_nested(&mut ts)?;
    if let Some(extra) = ts.peek() {
        return Err(Error::parse(
            extra.line,
            format!("unexpected trailing token `{}`", extra.text),
        ));
    }
    Ok(c)
}
