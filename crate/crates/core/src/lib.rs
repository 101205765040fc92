//! Modular Monte Carlo simulation of digital communication systems.
//!
//! A frame passes through codec, mapper, modem and channel and back; the
//! simulator repeats this until the requested confidence in the estimated
//! error rates is reached, optionally sweeping the channel parameter and
//! distributing the work over TCP clients.

pub mod base;
pub mod channel;
pub mod cli;
pub mod codec;
pub mod commsys;
pub mod config;
pub mod distributed;
pub mod error;
pub mod fsm;
pub mod mapper;
pub mod modem;
pub mod simulator;

pub use commsys::CommSystem;
pub use error::{Error, Result};
pub use simulator::Simulator;
