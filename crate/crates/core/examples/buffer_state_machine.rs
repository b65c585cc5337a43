//! The slot state machine on random SINR tables, then a real trial with a
//! slot trace.
//!
//! ```text
//! cargo run --release --example buffer_state_machine
//! ```

use rand::Rng;

use plnc::buffer::{SlotAction, SlotHandler, SlotMachine, Tagged};
use plnc::rng::{stream_rng, Stream};
use plnc::selection::{candidate_pairs, CandidatePair, LinkHop, SinrEntry, SinrTable};
use plnc::signal::generate_codebook;
use plnc::sim::{run_trial_with, TrialOptions};
use plnc::{Protocol, SystemConfig};

struct Packet(u64);

impl Tagged for Packet {
    fn packet_id(&self) -> u64 {
        self.0
    }
}

#[derive(Default)]
struct Counter {
    next: u64,
    delivered: u64,
}

impl SlotHandler<Packet> for Counter {
    fn receive(&mut self, pair: &CandidatePair) -> plnc::Result<Vec<Packet>> {
        self.next += 1;
        Ok(pair.relays.iter().map(|_| Packet(self.next)).collect())
    }

    fn transmit(&mut self, _pair: &CandidatePair, _items: Vec<Packet>) -> plnc::Result<()> {
        self.delivered += 1;
        Ok(())
    }
}

fn main() -> plnc::Result<()> {
    let config = SystemConfig::default();
    let pairs = candidate_pairs(&config);
    let mut rng = stream_rng(5, Stream::Channel);

    println!(
        "{:>10} {:>9} {:>9} {:>9} {:>10}",
        "buffer", "receive", "transmit", "idle", "mean sinr"
    );
    for (label, capacity, buffered) in [
        ("none", 1, false),
        ("J=1", 1, true),
        ("J=2", 2, true),
        ("J=4", 4, true),
        ("J=8", 8, true),
    ] {
        let mut machine: SlotMachine<Packet> = SlotMachine::new(pairs.clone(), config.num_relays, capacity, buffered);
        let mut handler = Counter::default();
        let mut counts = [0u64; 3];
        let mut sinr = 0.0;
        let slots = 20_000;
        for _ in 0..slots {
            let entries = pairs
                .iter()
                .flat_map(|p| {
                    [LinkHop::SourceRelay, LinkHop::RelayDest].map(|hop| SinrEntry {
                        pair: p.index,
                        hop,
                        sinr: -rng.random::<f64>().ln(),
                    })
                })
                .collect();
            let outcome = machine.advance_slot(&SinrTable::new(entries), &mut handler)?;
            let i = match outcome.decision.action {
                SlotAction::Receive { .. } => 0,
                SlotAction::Transmit { .. } => 1,
                SlotAction::Idle => 2,
            };
            counts[i] += 1;
            sinr += outcome.decision.entry.map_or(0.0, |e| e.sinr);
        }
        println!(
            "{label:>10} {:>9} {:>9} {:>9} {:>10.3}",
            counts[0],
            counts[1],
            counts[2],
            sinr / slots as f64
        );
    }

    let codebook = generate_codebook(&config);
    let options = TrialOptions {
        protocol: Protocol::Buffered,
        record_trace: true,
    };
    let outcome = run_trial_with(&config, &codebook, 9, 4, options)?;
    println!("\nfirst slots of a buffered trial:");
    for r in outcome.trace.iter().take(12) {
        println!(
            "  slot {:>2} {:<8} {:>3} sinr {:>8.3} occupancy {:?} -> {:?}",
            r.slot,
            r.action.as_str(),
            r.hop.map_or("", |h| h.as_str()),
            r.sinr.unwrap_or(0.0),
            r.occupancy_before,
            r.occupancy_after
        );
    }
    Ok(())
}
