//! Monte-Carlo trials and SNR sweeps.
//!
//! One trial runs the slot machine until a target number of packets has been
//! decoded at the destination. Every configured scheme is evaluated on the
//! same packets: the same channels, user symbols, relay decisions and noise.
//! Only the coded symbols differ between schemes.
//!
//! A sweep splits each (SNR, protocol) point into fixed-size chunks. Each
//! chunk is an independent trial seeded from `(seed, snr, protocol, chunk)`,
//! so results do not depend on how many threads run the chunks.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::buffer::{DestinationBuffer, SlotAction, SlotHandler, SlotMachine, Tagged};
use crate::coding::{
    decode_with_direct, design_ml, design_mmse, design_random, CodingMatrix, JointDecoder, MatrixDesign,
};
use crate::config::{DecoderKind, NcDesign, PairMode, ReceiverKind, SystemConfig};
use crate::error::{Error, Result};
use crate::receivers::{slice, FilterBank};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::selection::{build_table, candidate_pairs, CandidatePair, LinkHop};
use crate::signal::{complex_noise_block, draw_channel, generate_codebook, synthesize_block, ChannelState, CodeBook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Buffered,
    Unbuffered,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Buffered => "buffered",
            Protocol::Unbuffered => "unbuffered",
        }
    }

    fn seed_label(&self) -> u64 {
        match self {
            Protocol::Buffered => 1,
            Protocol::Unbuffered => 2,
        }
    }
}

/// Scheme, protocol and receiver of one BER curve, printed as `ml/buffered/mmse`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeLabel {
    pub design: NcDesign,
    pub protocol: Protocol,
    pub receiver: ReceiverKind,
}

impl fmt::Display for SchemeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.design, self.protocol.as_str(), self.receiver)
    }
}

impl FromStr for SchemeLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('/').collect();
        let [design, protocol, receiver] = parts[..] else {
            return Err(Error::Config(format!(
                "scheme label `{s}` is not design/protocol/receiver"
            )));
        };
        let protocol = match protocol {
            "buffered" => Protocol::Buffered,
            "unbuffered" => Protocol::Unbuffered,
            _ => return Err(Error::Config(format!("unknown protocol `{protocol}`"))),
        };
        Ok(SchemeLabel {
            design: design.parse()?,
            protocol,
            receiver: receiver.parse()?,
        })
    }
}

/// Integer error counts plus what is needed for a per-packet standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorTally {
    pub errors: u64,
    pub bits: u64,
    pub packets: u64,
    pub sum_sq_packet_errors: u64,
}

impl ErrorTally {
    pub fn add_packet(&mut self, errors: u64, bits: u64) {
        self.errors += errors;
        self.bits += bits;
        self.packets += 1;
        self.sum_sq_packet_errors += errors * errors;
    }

    pub fn merge(&mut self, other: &ErrorTally) {
        self.errors += other.errors;
        self.bits += other.bits;
        self.packets += other.packets;
        self.sum_sq_packet_errors += other.sum_sq_packet_errors;
    }

    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// Standard error of the BER from the spread of per-packet error rates.
    /// Errors inside one block-fading packet are correlated, so packets
    /// rather than bits are the independent samples.
    pub fn std_error(&self) -> f64 {
        let n = self.packets as f64;
        if self.packets < 2 {
            return f64::NAN;
        }
        let bpp = self.bits as f64 / n;
        let mean = self.ber();
        let mean_sq = self.sum_sq_packet_errors as f64 / (bpp * bpp) / n;
        let var = (mean_sq - mean * mean).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotStats {
    pub receive: u64,
    pub transmit: u64,
    pub idle: u64,
    pub reselections: u64,
}

impl SlotStats {
    pub fn total(&self) -> u64 {
        self.receive + self.transmit + self.idle
    }

    pub fn idle_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.idle as f64 / self.total() as f64
        }
    }

    fn merge(&mut self, o: &SlotStats) {
        self.receive += o.receive;
        self.transmit += o.transmit;
        self.idle += o.idle;
        self.reselections += o.reselections;
    }
}

/// One slot of a trial as written to the trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: u64,
    pub action: SlotAction,
    pub hop: Option<LinkHop>,
    pub sinr: Option<f64>,
    pub occupancy_before: Vec<usize>,
    pub occupancy_after: Vec<usize>,
    pub reselections: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TrialOutcome {
    /// One tally per configured scheme, in configuration order.
    pub tallies: Vec<(NcDesign, ErrorTally)>,
    pub slots: SlotStats,
    /// Packets where the MMSE decoder fell back to per-stream equalisation.
    pub mmse_fallbacks: u64,
    /// How often each ML candidate won, indexed like `invertible_binary_matrices`.
    pub ml_choices: Vec<u64>,
    /// Set if the slot budget ran out before enough packets were decoded.
    pub stalled: bool,
    pub trace: Vec<SlotRecord>,
}

impl TrialOutcome {
    pub fn tally(&self, design: NcDesign) -> Option<&ErrorTally> {
        self.tallies.iter().find(|(d, _)| *d == design).map(|(_, t)| t)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrialOptions {
    pub protocol: Protocol,
    pub record_trace: bool,
}

/// A relay's hard decisions on its group's users for one packet, training included.
#[derive(Debug, Clone)]
struct RelayPacket {
    id: u64,
    group: usize,
    /// `m x S`, row `i` is the group's `i`-th user.
    detected: DMatrix<f64>,
}

impl Tagged for RelayPacket {
    fn packet_id(&self) -> u64 {
        self.id
    }
}

struct DirectEntry {
    truth: DMatrix<f64>,
    direct: DMatrix<f64>,
}

struct Trial<'a> {
    config: &'a SystemConfig,
    codebook: &'a CodeBook,
    noise_var: f64,
    state: Option<ChannelState>,
    relay_banks: Vec<FilterBank>,
    data_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    design_rng: ChaCha8Rng,
    destination: DestinationBuffer<DirectEntry>,
    next_id: u64,
    next_group: usize,
    decoded: usize,
    outcome: TrialOutcome,
}

impl Trial<'_> {
    fn reception_group(&self, pair: &CandidatePair) -> usize {
        match self.config.pair_mode {
            PairMode::Fixed => pair.index,
            PairMode::All => self.next_group,
        }
    }
}

fn hard(soft: &DMatrix<Complex64>) -> DMatrix<f64> {
    soft.map(slice)
}

impl SlotHandler<RelayPacket> for Trial<'_> {
    fn receive(&mut self, pair: &CandidatePair) -> Result<Vec<RelayPacket>> {
        let cfg = self.config;
        let group = self.reception_group(pair);
        let users: Vec<usize> = cfg.group_users(group).collect();
        let s = cfg.symbols_per_packet();
        let rng = &mut self.data_rng;
        let b = DMatrix::from_fn(cfg.num_users, s, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });

        let state = self.state.as_ref().expect("channel drawn before use");
        let mut items = Vec::with_capacity(pair.relays.len());
        for &l in &pair.relays {
            let y = synthesize_block(&state.relay_matrix(l), &b, self.noise_var, &mut self.noise_rng);
            items.push(RelayPacket {
                id: self.next_id,
                group,
                detected: hard(&self.relay_banks[l].outputs(&users, &y)),
            });
        }
        let h_sd = state.direct_matrix();
        let y_sd = synthesize_block(&h_sd, &b, self.noise_var, &mut self.noise_rng);
        let direct_bank = FilterBank::build(h_sd, cfg.receiver, self.noise_var)?;
        let direct = hard(&direct_bank.outputs(&users, &y_sd));
        self.destination.insert(
            self.next_id,
            DirectEntry {
                truth: b.select_rows(&users),
                direct,
            },
        );
        self.next_id += 1;
        if cfg.pair_mode == PairMode::All {
            self.next_group = (self.next_group + 1) % cfg.num_groups();
        }
        Ok(items)
    }

    fn transmit(&mut self, pair: &CandidatePair, items: Vec<RelayPacket>) -> Result<()> {
        let cfg = self.config;
        let m = cfg.group_size;
        let (t_len, s) = (cfg.training_length, cfg.symbols_per_packet());
        let id = items[0].id;
        let entry = self.destination.take(id).ok_or_else(|| Error::Buffer {
            relay: pair.relays[0],
            state: "missing its direct-link entry",
        })?;
        let code = &self.codebook.ncs_codes[items[0].group];

        // one sub-slot per relay on the group code
        let state = self.state.as_ref().expect("channel drawn before use");
        let mut gains = Vec::with_capacity(m);
        let mut noise_powers = Vec::with_capacity(m);
        let mut filtered_noise: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        for &l in &pair.relays {
            let h = state.rd_vector(l, code);
            let bank = FilterBank::build(DMatrix::from_columns(&[h]), cfg.receiver, self.noise_var)?;
            let n = complex_noise_block(code.len(), s, self.noise_var, &mut self.noise_rng);
            let w = bank.weights.column(0);
            gains.push(bank.gain(0));
            noise_powers.push(self.noise_var * w.norm_squared());
            filtered_noise.push((w.adjoint() * n).iter().copied().collect());
        }
        let real_gains: Vec<f64> = gains.iter().map(|c| c.re).collect();
        // filter output of relay i when it sends a[t]: gains[i] a[t] + filtered noise
        let outputs = |a: &[Vec<f64>], range: std::ops::Range<usize>| -> Vec<Vec<Complex64>> {
            (0..m)
                .map(|i| {
                    range
                        .clone()
                        .map(|t| gains[i] * a[i][t] + filtered_noise[i][t])
                        .collect()
                })
                .collect()
        };
        let encode = |g: &CodingMatrix, len: usize| -> Vec<Vec<f64>> {
            (0..m)
                .map(|i| {
                    let det = &items[i].detected;
                    (0..len)
                        .map(|t| (0..m).map(|k| g.get(k, i) * det[(k, t)]).sum())
                        .collect()
                })
                .collect()
        };

        let random_g = design_random(m, &mut self.design_rng);
        let needs_ml = cfg.schemes.iter().any(|d| matches!(d, NcDesign::Ml | NcDesign::Mmse));
        let ml_g = if needs_ml {
            let training: Vec<Vec<f64>> = (0..m)
                .map(|k| (0..t_len).map(|t| entry.truth[(k, t)]).collect())
                .collect();
            let d = design_ml(m, &training, |g| {
                let z = outputs(&encode(g, t_len), 0..t_len);
                z.into_iter()
                    .zip(&gains)
                    .map(|(row, c)| row.into_iter().map(|v| v / c).collect())
                    .collect()
            })?;
            if self.outcome.ml_choices.len() < d.candidates_evaluated {
                self.outcome.ml_choices.resize(d.candidates_evaluated, 0);
            }
            self.outcome.ml_choices[d.index] += 1;
            Some(d.matrix)
        } else {
            None
        };

        let bits = (m * cfg.packet_length) as u64;
        let mut decided = vec![0.0; m];
        let mut z = vec![Complex64::new(0.0, 0.0); m];
        for idx in 0..cfg.schemes.len() {
            let design = cfg.schemes[idx];
            let mut errors = 0u64;
            match design {
                NcDesign::Xor => {
                    let x: Vec<Vec<f64>> = items
                        .iter()
                        .map(|p| (0..s).map(|t| (0..m).map(|k| p.detected[(k, t)]).product()).collect())
                        .collect();
                    let zx = outputs(&x, 0..s);
                    for t in t_len..s {
                        let soft: f64 = (0..m).map(|i| zx[i][t].re * real_gains[i] / noise_powers[i]).sum();
                        let xh = slice(Complex64::new(soft, 0.0));
                        for k in 0..m {
                            let others: f64 = (0..m).filter(|&j| j != k).map(|j| entry.direct[(j, t)]).product();
                            if xh * others != entry.truth[(k, t)] {
                                errors += 1;
                            }
                        }
                    }
                }
                NcDesign::Random | NcDesign::Ml | NcDesign::Mmse => {
                    let (g, decoder) = match design {
                        NcDesign::Random => (
                            random_g.clone(),
                            CodingMatrix::equalizer(&real_gains, MatrixDesign::Random)?,
                        ),
                        NcDesign::Ml => {
                            let g = ml_g.clone().expect("ml design computed");
                            (g, CodingMatrix::equalizer(&real_gains, MatrixDesign::Ml)?)
                        }
                        _ => {
                            let g = ml_g.clone().expect("ml design computed");
                            let sym_var = vec![1.0; m];
                            let d = design_mmse(&g, &real_gains, &noise_powers, &sym_var, cfg.pab_form)?;
                            if d.fallback {
                                self.outcome.mmse_fallbacks += 1;
                            }
                            (g, d.decoder)
                        }
                    };
                    let a = encode(&g, s);
                    let za = outputs(&a, 0..s);
                    match cfg.decoder {
                        DecoderKind::Joint => {
                            let dec = JointDecoder::new(&g, &decoder)?;
                            for t in t_len..s {
                                for i in 0..m {
                                    z[i] = za[i][t];
                                }
                                dec.decode_into(&z, &mut decided);
                                errors += (0..m).filter(|&k| decided[k] != entry.truth[(k, t)]).count() as u64;
                            }
                        }
                        DecoderKind::Direct => {
                            let dm = decoder.to_dmatrix();
                            let snr: Vec<f64> = (0..m).map(|i| gains[i].norm_sqr() / noise_powers[i]).collect();
                            let preferred: Vec<usize> = (0..m)
                                .map(|k| {
                                    (0..m)
                                        .filter(|&l| g.get(k, l) != 0.0)
                                        .max_by(|&a, &b| snr[a].total_cmp(&snr[b]).then(b.cmp(&a)))
                                        .unwrap_or(0)
                                })
                                .collect();
                            let mut ahat = vec![Complex64::new(0.0, 0.0); m];
                            let mut direct = vec![0.0; m];
                            for t in t_len..s {
                                for (j, a) in ahat.iter_mut().enumerate() {
                                    *a = (0..m).map(|i| za[i][t] * dm[(j, i)]).sum();
                                }
                                for (k, d) in direct.iter_mut().enumerate() {
                                    *d = entry.direct[(k, t)];
                                }
                                for k in 0..m {
                                    let b = decode_with_direct(&g, &ahat, &direct, k, preferred[k])?;
                                    if b != entry.truth[(k, t)] {
                                        errors += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let counted = (s - t_len) as u64 * m as u64;
            debug_assert_eq!(counted, bits);
            self.outcome.tallies[idx].1.add_packet(errors, counted);
        }
        self.decoded += 1;
        Ok(())
    }
}

/// Runs one trial with the run's codebook.
pub fn run_trial_with(
    config: &SystemConfig,
    codebook: &CodeBook,
    seed: u64,
    n_packets: usize,
    options: TrialOptions,
) -> Result<TrialOutcome> {
    config.validate()?;
    let noise_var = config.noise_var();
    let pairs = candidate_pairs(config);
    let buffered = options.protocol == Protocol::Buffered;
    let mut machine: SlotMachine<RelayPacket> =
        SlotMachine::new(pairs.clone(), config.num_relays, config.buffer_size, buffered);
    let mut channel_rng = stream_rng(seed, Stream::Channel);
    let mut trial = Trial {
        config,
        codebook,
        noise_var,
        state: None,
        relay_banks: Vec::new(),
        data_rng: stream_rng(seed, Stream::Data),
        noise_rng: stream_rng(seed, Stream::Noise),
        design_rng: stream_rng(seed, Stream::Design),
        destination: DestinationBuffer::new(),
        next_id: 0,
        next_group: 0,
        decoded: 0,
        outcome: TrialOutcome {
            tallies: config.schemes.iter().map(|&d| (d, ErrorTally::default())).collect(),
            ..TrialOutcome::default()
        },
    };

    let max_slots = 64 * n_packets as u64 + 1024;
    while trial.decoded < n_packets {
        if machine.slot() >= max_slots {
            trial.outcome.stalled = true;
            break;
        }
        let state = draw_channel(config, codebook, &mut channel_rng);
        trial.relay_banks = (0..config.num_relays)
            .map(|l| FilterBank::build(state.relay_matrix(l), config.receiver, noise_var))
            .collect::<Result<_>>()?;
        let rd_banks = (0..config.num_relays)
            .map(|l| {
                FilterBank::build(
                    DMatrix::from_columns(&[state.h_eff_rd[l].clone()]),
                    config.receiver,
                    noise_var,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        trial.state = Some(state);
        let table = {
            let t = &trial;
            build_table(
                &pairs,
                |p| config.group_users(t.reception_group(p)).collect(),
                &t.relay_banks,
                &rd_banks,
                noise_var,
            )
        };
        let out = machine.advance_slot(&table, &mut trial)?;
        let stats = &mut trial.outcome.slots;
        stats.reselections += out.decision.reselections as u64;
        match out.decision.action {
            SlotAction::Receive { .. } => stats.receive += 1,
            SlotAction::Transmit { .. } => stats.transmit += 1,
            SlotAction::Idle => stats.idle += 1,
        }
        if options.record_trace {
            trial.outcome.trace.push(SlotRecord {
                slot: out.slot,
                action: out.decision.action,
                hop: out.decision.entry.map(|e| e.hop),
                sinr: out.decision.entry.map(|e| e.sinr),
                occupancy_before: out.occupancy_before,
                occupancy_after: out.occupancy_after,
                reselections: out.decision.reselections,
            });
        }
    }
    Ok(trial.outcome)
}

/// Runs `n_packets` through the full chain at `config.snr_db`, with the
/// protocol selected by `config.buffers_enabled`.
pub fn run_trial(config: &SystemConfig, seed: u64, n_packets: usize) -> Result<TrialOutcome> {
    config.validate()?;
    let codebook = generate_codebook(config);
    let protocol = if config.buffers_enabled {
        Protocol::Buffered
    } else {
        Protocol::Unbuffered
    };
    run_trial_with(
        config,
        &codebook,
        seed,
        n_packets,
        TrialOptions {
            protocol,
            record_trace: false,
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub snr_db: Vec<f64>,
    pub bits_per_point: u64,
    pub protocols: Vec<Protocol>,
}

impl SweepPlan {
    /// Packets needed for `bits_per_point` information bits.
    pub fn packets_per_point(&self, config: &SystemConfig) -> usize {
        let per_packet = (config.group_size * config.packet_length) as u64;
        self.bits_per_point.div_ceil(per_packet) as usize
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
    /// Packets decoded per independent chunk.
    pub chunk_packets: usize,
    pub record_trace: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            threads: None,
            chunk_packets: 50,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub scheme: SchemeLabel,
    pub snr_db: f64,
    pub tally: ErrorTally,
}

impl BerPoint {
    pub fn bit_errors(&self) -> u64 {
        self.tally.errors
    }

    pub fn bits_total(&self) -> u64 {
        self.tally.bits
    }

    pub fn ber(&self) -> f64 {
        self.tally.ber()
    }

    pub fn std_error(&self) -> f64 {
        self.tally.std_error()
    }
}

/// Slot mix for one (SNR, protocol) point.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotSummary {
    pub snr_db: f64,
    pub protocol: Protocol,
    pub stats: SlotStats,
    pub stalled_chunks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub snr_db: f64,
    pub protocol: Protocol,
    pub chunk: u64,
    pub record: SlotRecord,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: SystemConfig,
    pub plan: SweepPlan,
    pub points: Vec<BerPoint>,
    pub slot_summaries: Vec<SlotSummary>,
    pub mmse_fallbacks: u64,
    /// ML winners over the whole sweep, indexed like `invertible_binary_matrices`.
    pub ml_choices: Vec<u64>,
    pub trace: Vec<TraceRow>,
    pub wall_clock: Duration,
    pub seed: u64,
}

impl RunReport {
    pub fn point(&self, design: NcDesign, protocol: Protocol, snr_db: f64) -> Option<&BerPoint> {
        self.points
            .iter()
            .find(|p| p.scheme.design == design && p.scheme.protocol == protocol && p.snr_db == snr_db)
    }
}

struct Job {
    point: usize,
    protocol: Protocol,
    chunk: u64,
    packets: usize,
}

/// Runs every (SNR, protocol) point of `plan` for all configured schemes.
pub fn run_sweep(config: &SystemConfig, plan: &SweepPlan, options: &SweepOptions) -> Result<RunReport> {
    config.validate()?;
    if options.chunk_packets == 0 {
        return Err(Error::Config("chunk size must be at least one packet".into()));
    }
    if let Some(s) = plan.snr_db.iter().find(|s| !s.is_finite()) {
        return Err(Error::Config(format!("SNR {s} is not finite")));
    }
    let started = Instant::now();
    let codebook = generate_codebook(config);
    let total = plan.packets_per_point(config);

    let mut jobs = Vec::new();
    for point in 0..plan.snr_db.len() {
        for &protocol in &plan.protocols {
            let mut left = total;
            let mut chunk = 0;
            while left > 0 {
                let packets = left.min(options.chunk_packets);
                jobs.push(Job {
                    point,
                    protocol,
                    chunk,
                    packets,
                });
                left -= packets;
                chunk += 1;
            }
        }
    }

    let run_job = |job: &Job| -> Result<TrialOutcome> {
        let snr = plan.snr_db[job.point];
        let cfg = SystemConfig {
            snr_db: snr,
            ..config.clone()
        };
        cfg.validate()?;
        let seed = derive_seed(config.rng_seed, &[snr.to_bits(), job.protocol.seed_label(), job.chunk]);
        run_trial_with(
            &cfg,
            &codebook,
            seed,
            job.packets,
            TrialOptions {
                protocol: job.protocol,
                record_trace: options.record_trace,
            },
        )
    };
    let results: Vec<Result<TrialOutcome>> = match options.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            pool.install(|| jobs.par_iter().map(run_job).collect())
        }
        None => jobs.par_iter().map(run_job).collect(),
    };

    let mut points = Vec::new();
    let mut slot_summaries = Vec::new();
    let mut trace = Vec::new();
    let mut mmse_fallbacks = 0;
    let mut ml_choices: Vec<u64> = Vec::new();
    let mut results = results.into_iter();
    let mut jobs_iter = jobs.iter().peekable();
    for (point, &snr) in plan.snr_db.iter().enumerate() {
        for &protocol in &plan.protocols {
            let mut tallies: Vec<ErrorTally> = vec![ErrorTally::default(); config.schemes.len()];
            let mut stats = SlotStats::default();
            let mut stalled_chunks = 0;
            while let Some(job) = jobs_iter.next_if(|j| j.point == point && j.protocol == protocol) {
                let outcome = results.next().expect("one result per job")?;
                for (acc, (_, t)) in tallies.iter_mut().zip(&outcome.tallies) {
                    acc.merge(t);
                }
                stats.merge(&outcome.slots);
                stalled_chunks += outcome.stalled as u64;
                mmse_fallbacks += outcome.mmse_fallbacks;
                if ml_choices.len() < outcome.ml_choices.len() {
                    ml_choices.resize(outcome.ml_choices.len(), 0);
                }
                for (acc, c) in ml_choices.iter_mut().zip(&outcome.ml_choices) {
                    *acc += c;
                }
                trace.extend(outcome.trace.into_iter().map(|record| TraceRow {
                    snr_db: snr,
                    protocol,
                    chunk: job.chunk,
                    record,
                }));
            }
            for (&design, tally) in config.schemes.iter().zip(tallies) {
                points.push(BerPoint {
                    scheme: SchemeLabel {
                        design,
                        protocol,
                        receiver: config.receiver,
                    },
                    snr_db: snr,
                    tally,
                });
            }
            slot_summaries.push(SlotSummary {
                snr_db: snr,
                protocol,
                stats,
                stalled_chunks,
            });
        }
    }

    Ok(RunReport {
        config: config.clone(),
        plan: plan.clone(),
        points,
        slot_summaries,
        mmse_fallbacks,
        ml_choices,
        trace,
        wall_clock: started.elapsed(),
        seed: config.rng_seed,
    })
}
