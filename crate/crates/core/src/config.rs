//! Scenario parameters and the flat `key = value` configuration format.
//!
//! ```text
//! # default scenario
//! K = 6
//! L = 6
//! N = 16
//! J = 4
//! m = 2
//! P = 1000
//! receiver = mmse
//! schemes = xor,random,ml,mmse
//! seed = 1
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once and unknown keys are rejected.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Linear filter used at relays and at the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    Rake,
    Mmse,
}

/// Network-coding scheme applied by a relay pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NcDesign {
    Xor,
    Random,
    Ml,
    /// ML-chosen binary encoder with the MMSE decoding matrix at the destination.
    Mmse,
}

/// Which relay sets compete in the selection step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// The fixed disjoint groups: relays `g*m .. g*m+m` serve users `g*m .. g*m+m`.
    Fixed,
    /// Every unordered pair of relays (requires `m = 2`).
    All,
}

/// How the destination recovers user symbols from the network-coded streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    /// Solve the m coded equations jointly.
    Joint,
    /// Cancel the other users with stored direct-link estimates.
    Direct,
}

/// Form of the cross-correlation used by the MMSE decoding matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PabForm {
    /// `E[a_k a_j] = sum_i g_ik g_ij var_i`.
    CrossRow,
    /// `sum_i g_ik g_ik var_i`, independent of the second relay's column.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_users: usize,
    pub num_relays: usize,
    pub spreading_gain: usize,
    pub buffer_size: usize,
    pub group_size: usize,
    pub packet_length: usize,
    /// Known symbols prepended to every packet for the ML design.
    pub training_length: usize,
    pub snr_db: f64,
    pub receiver: ReceiverKind,
    pub schemes: Vec<NcDesign>,
    pub buffers_enabled: bool,
    pub pair_mode: PairMode,
    pub decoder: DecoderKind,
    pub pab_form: PabForm,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            num_users: 6,
            num_relays: 6,
            spreading_gain: 16,
            buffer_size: 4,
            group_size: 2,
            packet_length: 1000,
            training_length: 100,
            snr_db: 10.0,
            receiver: ReceiverKind::Mmse,
            schemes: vec![NcDesign::Xor, NcDesign::Random, NcDesign::Ml, NcDesign::Mmse],
            buffers_enabled: true,
            pair_mode: PairMode::Fixed,
            decoder: DecoderKind::Joint,
            pab_form: PabForm::CrossRow,
            rng_seed: 1,
        }
    }
}

/// Largest group size for which the ML design enumerates every candidate.
pub const MAX_ML_GROUP: usize = 4;

const KEYS: &[&str] = &[
    "K", "L", "N", "J", "m", "P", "training", "snr_db", "receiver", "schemes", "buffers", "pairs", "decoder", "pab",
    "seed",
];

impl SystemConfig {
    /// Total complex noise variance for unit-energy symbols.
    pub fn noise_var(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }

    pub fn num_groups(&self) -> usize {
        self.num_users / self.group_size
    }

    /// Users of group `g`.
    pub fn group_users(&self, g: usize) -> std::ops::Range<usize> {
        g * self.group_size..(g + 1) * self.group_size
    }

    pub fn symbols_per_packet(&self) -> usize {
        self.training_length + self.packet_length
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("K", self.num_users),
            ("L", self.num_relays),
            ("N", self.spreading_gain),
            ("J", self.buffer_size),
            ("m", self.group_size),
            ("P", self.packet_length),
        ] {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        let m = self.group_size;
        if !self.num_users.is_multiple_of(m) {
            return fail(format!("K = {} is not a multiple of m = {m}", self.num_users));
        }
        if !self.num_relays.is_multiple_of(m) {
            return fail(format!("L = {} is not a multiple of m = {m}", self.num_relays));
        }
        if !self.snr_db.is_finite() {
            return fail("snr_db must be finite".into());
        }
        let sigma2 = self.noise_var();
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return fail(format!(
                "snr_db = {} gives a noise variance outside (0, inf)",
                self.snr_db
            ));
        }
        if self.schemes.is_empty() {
            return fail("schemes must list at least one design".into());
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return fail(format!("scheme {s} listed twice"));
            }
        }
        match self.pair_mode {
            PairMode::Fixed => {
                if self.num_relays != self.num_users {
                    return fail(format!(
                        "fixed groups pair user group g with relay group g, so L must equal K (got K = {}, L = {})",
                        self.num_users, self.num_relays
                    ));
                }
            }
            PairMode::All => {
                if m != 2 {
                    return fail("pairs = all requires m = 2".into());
                }
            }
        }
        let searches = self.schemes.iter().any(|s| matches!(s, NcDesign::Ml | NcDesign::Mmse));
        if searches && self.training_length == 0 {
            return fail("the ml and mmse schemes need training > 0".into());
        }
        if searches && m > MAX_ML_GROUP {
            return fail(format!("exhaustive matrix search is limited to m <= {MAX_ML_GROUP}"));
        }
        Ok(())
    }

    /// Parses a configuration file, starting from the defaults.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, found `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(at(format!("unknown key `{key}`")));
            };
            if seen.contains(&known) {
                return Err(at(format!("duplicate key `{key}`")));
            }
            seen.push(known);
            cfg.set(known, value).map_err(|e| match e {
                Error::Config(msg) => at(msg),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("`{key}` expects a number, found `{value}`")))
        }
        match key {
            "K" => self.num_users = num(key, value)?,
            "L" => self.num_relays = num(key, value)?,
            "N" => self.spreading_gain = num(key, value)?,
            "J" => self.buffer_size = num(key, value)?,
            "m" => self.group_size = num(key, value)?,
            "P" => self.packet_length = num(key, value)?,
            "training" => self.training_length = num(key, value)?,
            "snr_db" => self.snr_db = num(key, value)?,
            "seed" => self.rng_seed = num(key, value)?,
            "receiver" => self.receiver = value.parse()?,
            "schemes" => self.schemes = parse_schemes(value)?,
            "buffers" => {
                self.buffers_enabled = match value {
                    "true" | "on" | "yes" => true,
                    "false" | "off" | "no" => false,
                    _ => {
                        return Err(Error::Config(format!(
                            "`buffers` expects true or false, found `{value}`"
                        )))
                    }
                }
            }
            "pairs" => {
                self.pair_mode = match value {
                    "fixed" => PairMode::Fixed,
                    "all" => PairMode::All,
                    _ => return Err(Error::Config(format!("`pairs` expects fixed or all, found `{value}`"))),
                }
            }
            "decoder" => {
                self.decoder = match value {
                    "joint" => DecoderKind::Joint,
                    "direct" => DecoderKind::Direct,
                    _ => {
                        return Err(Error::Config(format!(
                            "`decoder` expects joint or direct, found `{value}`"
                        )))
                    }
                }
            }
            "pab" => {
                self.pab_form = match value {
                    "cross" => PabForm::CrossRow,
                    "literal" => PabForm::Literal,
                    _ => {
                        return Err(Error::Config(format!(
                            "`pab` expects cross or literal, found `{value}`"
                        )))
                    }
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Renders every key so that `parse_kv(&cfg.to_kv())` returns `cfg`.
    pub fn to_kv(&self) -> String {
        let schemes: Vec<String> = self.schemes.iter().map(|s| s.to_string()).collect();
        format!(
            "K = {}\nL = {}\nN = {}\nJ = {}\nm = {}\nP = {}\ntraining = {}\nsnr_db = {}\nreceiver = {}\nschemes = {}\nbuffers = {}\npairs = {}\ndecoder = {}\npab = {}\nseed = {}\n",
            self.num_users,
            self.num_relays,
            self.spreading_gain,
            self.buffer_size,
            self.group_size,
            self.packet_length,
            self.training_length,
            self.snr_db,
            self.receiver,
            schemes.join(","),
            self.buffers_enabled,
            match self.pair_mode {
                PairMode::Fixed => "fixed",
                PairMode::All => "all",
            },
            match self.decoder {
                DecoderKind::Joint => "joint",
                DecoderKind::Direct => "direct",
            },
            match self.pab_form {
                PabForm::CrossRow => "cross",
                PabForm::Literal => "literal",
            },
            self.rng_seed,
        )
    }
}

/// Parses a comma-separated scheme list such as `xor,ml`.
pub fn parse_schemes(value: &str) -> Result<Vec<NcDesign>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

impl FromStr for ReceiverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rake" => Ok(ReceiverKind::Rake),
            "mmse" => Ok(ReceiverKind::Mmse),
            _ => Err(Error::Config(format!("unknown receiver `{s}` (expected rake or mmse)"))),
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReceiverKind::Rake => "rake",
            ReceiverKind::Mmse => "mmse",
        })
    }
}

impl FromStr for NcDesign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xor" => Ok(NcDesign::Xor),
            "random" => Ok(NcDesign::Random),
            "ml" => Ok(NcDesign::Ml),
            "mmse" | "mmse_design" => Ok(NcDesign::Mmse),
            _ => Err(Error::Config(format!(
                "unknown scheme `{s}` (expected xor, random, ml or mmse)"
            ))),
        }
    }
}

impl fmt::Display for NcDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NcDesign::Xor => "xor",
            NcDesign::Random => "random",
            NcDesign::Ml => "ml",
            NcDesign::Mmse => "mmse",
        })
    }
}
