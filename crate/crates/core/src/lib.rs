//! Buffer-aided physical-layer network coding for a cooperative DS-CDMA uplink.
//!
//! `K` users spread their BPSK symbols with random codes of length `N` and
//! send packets over block Rayleigh fading to a destination and to `L`
//! relays. Users and relays form groups of `m`. Each slot either one relay
//! group receives a packet from its users (source hop) or forwards a
//! network-coded version of a buffered packet (relay hop), whichever has
//! the highest SINR among the feasible choices. The destination combines
//! the coded streams, optionally with its own direct-link decisions.
//!
//! Modules, bottom up:
//!
//! * [`signal`]: codebooks, channel draws, received vectors
//! * [`receivers`]: RAKE and MMSE filters, slicer
//! * [`coding`]: XOR and linear network coding, random/ML/MMSE matrix designs
//! * [`selection`]: relay-set SINR and max-SINR selection
//! * [`buffer`]: relay FIFOs and the slot state machine
//! * [`sim`]: trials and SNR sweeps; [`report`]: CSV output

pub mod buffer;
pub mod coding;
pub mod config;
pub mod error;
pub mod receivers;
pub mod report;
pub mod rng;
pub mod selection;
pub mod signal;
pub mod sim;

pub use config::{DecoderKind, NcDesign, PabForm, PairMode, ReceiverKind, SystemConfig};
pub use error::{Error, Result};
pub use sim::{run_sweep, run_trial, Protocol, RunReport, SweepOptions, SweepPlan};
