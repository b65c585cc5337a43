//! Relay FIFOs and the per-slot reception/transmission state machine.
//!
//! Each slot the machine takes the SINR table, walks it from the best entry
//! down and commits the first feasible action: a source-hop entry needs
//! every relay of the set to have room, a relay-hop entry needs every relay
//! to hold a packet (and, when relay sets overlap, the same packet at the
//! head). If nothing is feasible the slot idles. Without buffers the machine
//! forces the relay hop right after every reception.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::selection::{select_best, CandidatePair, LinkHop, SinrEntry, SinrTable};

/// Items that carry a packet identifier.
pub trait Tagged {
    fn packet_id(&self) -> u64;
}

#[derive(Debug, Clone)]
pub struct RelayBuffer<T> {
    queue: VecDeque<T>,
    capacity: usize,
}

impl<T> RelayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        RelayBuffer {
            queue: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn occupancy(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.capacity
    }

    pub fn head(&self) -> Option<&T> {
        self.queue.front()
    }

    /// Appends at the tail; hands the item back if the buffer is full.
    pub fn push(&mut self, item: T) -> std::result::Result<(), T> {
        if self.is_full() {
            return Err(item);
        }
        self.queue.push_back(item);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<T> {
        self.queue.pop_front()
    }
}

/// Direct-link estimates held at the destination until their coded packet arrives.
#[derive(Debug, Clone)]
pub struct DestinationBuffer<T> {
    entries: BTreeMap<u64, T>,
}

impl<T> Default for DestinationBuffer<T> {
    fn default() -> Self {
        DestinationBuffer {
            entries: BTreeMap::new(),
        }
    }
}

impl<T> DestinationBuffer<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, packet: u64, item: T) {
        self.entries.insert(packet, item);
    }

    pub fn contains(&self, packet: u64) -> bool {
        self.entries.contains_key(&packet)
    }

    /// Removes and returns the entry for `packet`.
    pub fn take(&mut self, packet: u64) -> Option<T> {
        self.entries.remove(&packet)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Every relay of the set holds at least one packet.
pub fn can_transmit(occupancies: &[usize]) -> bool {
    occupancies.iter().all(|&o| o > 0)
}

/// Every relay of the set has room for one more packet.
pub fn can_receive(occupancies: &[usize], capacity: usize) -> bool {
    occupancies.iter().all(|&o| o < capacity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotAction {
    Receive { pair: usize },
    Transmit { pair: usize },
    Idle,
}

impl SlotAction {
    pub fn as_str(&self) -> &'static str {
        match self {
            SlotAction::Receive { .. } => "receive",
            SlotAction::Transmit { .. } => "transmit",
            SlotAction::Idle => "idle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    pub action: SlotAction,
    /// The table entry behind the action.
    pub entry: Option<SinrEntry>,
    /// Entries skipped as infeasible before the action was found.
    pub reselections: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub slot: u64,
    pub decision: SlotDecision,
    pub occupancy_before: Vec<usize>,
    pub occupancy_after: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SlotMachine<T> {
    relays: Vec<RelayBuffer<T>>,
    pairs: Vec<CandidatePair>,
    buffered: bool,
    pending: Option<usize>,
    slot: u64,
}

impl<T: Tagged> SlotMachine<T> {
    /// `capacity` is ignored without buffers, where every relay holds at most one packet.
    pub fn new(pairs: Vec<CandidatePair>, num_relays: usize, capacity: usize, buffered: bool) -> Self {
        let cap = if buffered { capacity } else { 1 };
        SlotMachine {
            relays: (0..num_relays).map(|_| RelayBuffer::new(cap)).collect(),
            pairs,
            buffered,
            pending: None,
            slot: 0,
        }
    }

    pub fn pairs(&self) -> &[CandidatePair] {
        &self.pairs
    }

    pub fn relay(&self, l: usize) -> &RelayBuffer<T> {
        &self.relays[l]
    }

    pub fn occupancies(&self) -> Vec<usize> {
        self.relays.iter().map(|b| b.occupancy()).collect()
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Pair that must transmit next when buffers are disabled.
    pub fn pending(&self) -> Option<usize> {
        self.pending
    }

    fn pair(&self, pair: usize) -> &CandidatePair {
        &self.pairs[pair]
    }

    fn pair_occupancy(&self, pair: usize) -> Vec<usize> {
        self.pair(pair)
            .relays
            .iter()
            .map(|&l| self.relays[l].occupancy())
            .collect()
    }

    pub fn can_transmit(&self, pair: usize) -> bool {
        if !can_transmit(&self.pair_occupancy(pair)) {
            return false;
        }
        let mut heads = self
            .pair(pair)
            .relays
            .iter()
            .filter_map(|&l| self.relays[l].head().map(|h| h.packet_id()));
        let first = heads.next();
        heads.all(|id| Some(id) == first)
    }

    pub fn can_receive(&self, pair: usize) -> bool {
        let cap = self.relays.first().map_or(0, |b| b.capacity());
        can_receive(&self.pair_occupancy(pair), cap)
    }

    fn feasible(&self, e: &SinrEntry) -> bool {
        match e.hop {
            LinkHop::SourceRelay => self.can_receive(e.pair),
            LinkHop::RelayDest => self.can_transmit(e.pair),
        }
    }

    /// Chooses this slot's action without changing any state.
    pub fn decide(&self, table: &SinrTable) -> SlotDecision {
        if let Some(p) = self.pending {
            return SlotDecision {
                action: SlotAction::Transmit { pair: p },
                entry: table.get(p, LinkHop::RelayDest).copied(),
                reselections: 0,
            };
        }
        let mut excluded: HashSet<(usize, LinkHop)> = HashSet::new();
        if !self.buffered {
            excluded.extend(
                table
                    .entries()
                    .iter()
                    .filter(|e| e.hop == LinkHop::RelayDest)
                    .map(|e| (e.pair, e.hop)),
            );
        }
        let mut reselections = 0;
        while let Some(e) = select_best(table, &excluded) {
            if e.pair < self.pairs.len() && self.feasible(&e) {
                let action = match e.hop {
                    LinkHop::SourceRelay => SlotAction::Receive { pair: e.pair },
                    LinkHop::RelayDest => SlotAction::Transmit { pair: e.pair },
                };
                return SlotDecision {
                    action,
                    entry: Some(e),
                    reselections,
                };
            }
            excluded.insert((e.pair, e.hop));
            reselections += 1;
        }
        SlotDecision {
            action: SlotAction::Idle,
            entry: None,
            reselections,
        }
    }

    /// Stores one item per relay of `pair`, in the pair's relay order.
    pub fn receive(&mut self, pair: usize, items: Vec<T>) -> Result<()> {
        let relays = self.pairs[pair].relays.clone();
        if items.len() != relays.len() {
            return Err(Error::DimensionMismatch {
                expected: relays.len(),
                actual: items.len(),
            });
        }
        if !self.can_receive(pair) {
            let relay = relays.into_iter().find(|&l| self.relays[l].is_full()).unwrap_or(0);
            return Err(Error::Buffer { relay, state: "full" });
        }
        for (l, item) in relays.into_iter().zip(items) {
            if self.relays[l].push(item).is_err() {
                return Err(Error::Buffer {
                    relay: l,
                    state: "full",
                });
            }
        }
        if !self.buffered {
            self.pending = Some(pair);
        }
        Ok(())
    }

    /// Removes the head item of every relay of `pair`.
    pub fn transmit(&mut self, pair: usize) -> Result<Vec<T>> {
        let relays = self.pairs[pair].relays.clone();
        if !self.can_transmit(pair) {
            let relay = relays
                .iter()
                .copied()
                .find(|&l| self.relays[l].is_empty())
                .unwrap_or(relays[0]);
            return Err(Error::Buffer {
                relay,
                state: "empty or misaligned",
            });
        }
        let items = relays
            .iter()
            .map(|&l| self.relays[l].pop().expect("checked non-empty"))
            .collect();
        if self.pending == Some(pair) {
            self.pending = None;
        }
        Ok(items)
    }

    /// Runs one slot: decide, then let `handler` produce the items for a
    /// reception or consume the items released by a transmission.
    pub fn advance_slot<H: SlotHandler<T>>(&mut self, table: &SinrTable, handler: &mut H) -> Result<SlotOutcome> {
        let occupancy_before = self.occupancies();
        let decision = self.decide(table);
        match decision.action {
            SlotAction::Receive { pair } => {
                let items = handler.receive(&self.pairs[pair])?;
                self.receive(pair, items)?;
            }
            SlotAction::Transmit { pair } => {
                let items = self.transmit(pair)?;
                handler.transmit(&self.pairs[pair], items)?;
            }
            SlotAction::Idle => {}
        }
        let outcome = SlotOutcome {
            slot: self.slot,
            decision,
            occupancy_before,
            occupancy_after: self.occupancies(),
        };
        self.slot += 1;
        Ok(outcome)
    }
}

/// Physical-layer work behind a slot decision.
pub trait SlotHandler<T> {
    /// Items to store, one per relay of `pair` in its relay order.
    fn receive(&mut self, pair: &CandidatePair) -> Result<Vec<T>>;
    /// Items just removed from the heads of `pair`'s buffers.
    fn transmit(&mut self, pair: &CandidatePair, items: Vec<T>) -> Result<()>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Pkt(u64);
    impl Tagged for Pkt {
        fn packet_id(&self) -> u64 {
            self.0
        }
    }

    struct Counter(u64);
    impl SlotHandler<Pkt> for Counter {
        fn receive(&mut self, _: &CandidatePair) -> Result<Vec<Pkt>> {
            self.0 += 1;
            Ok(vec![Pkt(self.0), Pkt(self.0)])
        }
        fn transmit(&mut self, _: &CandidatePair, _: Vec<Pkt>) -> Result<()> {
            Ok(())
        }
    }

    fn one_pair() -> Vec<CandidatePair> {
        vec![CandidatePair {
            index: 0,
            relays: vec![0, 1],
        }]
    }

    fn table(sr: f64, rd: f64) -> SinrTable {
        SinrTable::new(vec![
            SinrEntry {
                pair: 0,
                hop: LinkHop::SourceRelay,
                sinr: sr,
            },
            SinrEntry {
                pair: 0,
                hop: LinkHop::RelayDest,
                sinr: rd,
            },
        ])
    }

    #[test]
    fn feasibility_examples() {
        assert!(!can_transmit(&[0, 3]));
        assert!(can_transmit(&[1, 1]));
        assert!(!can_transmit(&[4, 0]));
        assert!(!can_receive(&[4, 2], 4));
        assert!(can_receive(&[3, 3], 4));
        assert!(can_receive(&[0, 0], 1));
    }

    #[test]
    fn fifo_order() {
        let mut b = RelayBuffer::new(2);
        b.push(1).unwrap();
        b.push(2).unwrap();
        assert_eq!(b.push(3), Err(3));
        assert_eq!(b.pop(), Some(1));
        assert_eq!(b.pop(), Some(2));
        assert_eq!(b.pop(), None);
    }

    #[test]
    fn empty_buffers_force_reception() {
        let sm: SlotMachine<Pkt> = SlotMachine::new(one_pair(), 2, 4, true);
        let d = sm.decide(&table(1.0, 9.0));
        assert_eq!(d.action, SlotAction::Receive { pair: 0 });
        assert_eq!(d.reselections, 1);
    }

    #[test]
    fn full_buffers_force_transmission() {
        let mut sm: SlotMachine<Pkt> = SlotMachine::new(one_pair(), 2, 2, true);
        for id in 0..2 {
            sm.receive(0, vec![Pkt(id), Pkt(id)]).unwrap();
        }
        let d = sm.decide(&table(9.0, 1.0));
        assert_eq!(d.action, SlotAction::Transmit { pair: 0 });
        assert_eq!(sm.transmit(0).unwrap(), vec![Pkt(0), Pkt(0)]);
    }

    #[test]
    fn single_slot_buffer_alternates() {
        let mut sm: SlotMachine<Pkt> = SlotMachine::new(one_pair(), 2, 1, true);
        let mut trace = Vec::new();
        let mut h = Counter(0);
        for s in 0..8 {
            // scripted: the hop that is currently blocked always looks best
            let t = if s % 2 == 0 { table(1.0, 5.0) } else { table(5.0, 1.0) };
            let out = sm.advance_slot(&t, &mut h).unwrap();
            trace.push(out.decision.action.as_str());
        }
        assert_eq!(trace, ["receive", "transmit"].repeat(4));
    }

    #[test]
    fn unbuffered_forces_transmission_after_reception() {
        let pairs = vec![
            CandidatePair {
                index: 0,
                relays: vec![0, 1],
            },
            CandidatePair {
                index: 1,
                relays: vec![2, 3],
            },
        ];
        let mut sm: SlotMachine<Pkt> = SlotMachine::new(pairs, 4, 4, false);
        let t = SinrTable::new(vec![
            SinrEntry {
                pair: 0,
                hop: LinkHop::SourceRelay,
                sinr: 1.0,
            },
            SinrEntry {
                pair: 0,
                hop: LinkHop::RelayDest,
                sinr: 0.1,
            },
            SinrEntry {
                pair: 1,
                hop: LinkHop::SourceRelay,
                sinr: 2.0,
            },
            SinrEntry {
                pair: 1,
                hop: LinkHop::RelayDest,
                sinr: 50.0,
            },
        ]);
        let d = sm.decide(&t);
        assert_eq!(d.action, SlotAction::Receive { pair: 1 });
        sm.receive(1, vec![Pkt(0), Pkt(0)]).unwrap();
        assert_eq!(sm.pending(), Some(1));
        let d = sm.decide(&t);
        assert_eq!(d.action, SlotAction::Transmit { pair: 1 });
        sm.transmit(1).unwrap();
        assert_eq!(sm.pending(), None);
    }

    #[test]
    fn idles_when_blocked_both_ways() {
        let pairs = vec![
            CandidatePair {
                index: 0,
                relays: vec![0, 1],
            },
            CandidatePair {
                index: 1,
                relays: vec![1, 2],
            },
        ];
        let mut sm: SlotMachine<Pkt> = SlotMachine::new(pairs, 3, 1, true);
        // relay 1 full through pair 0, relay 0 full; pair 1 has relay 2 empty
        sm.receive(0, vec![Pkt(0), Pkt(0)]).unwrap();
        let t = SinrTable::new(vec![
            SinrEntry {
                pair: 1,
                hop: LinkHop::SourceRelay,
                sinr: 1.0,
            },
            SinrEntry {
                pair: 1,
                hop: LinkHop::RelayDest,
                sinr: 1.0,
            },
        ]);
        let d = sm.decide(&t);
        assert_eq!(d.action, SlotAction::Idle);
        assert_eq!(d.reselections, 2);
    }

    #[test]
    fn misaligned_heads_block_transmission() {
        let pairs = vec![
            CandidatePair {
                index: 0,
                relays: vec![0, 1],
            },
            CandidatePair {
                index: 1,
                relays: vec![1, 2],
            },
            CandidatePair {
                index: 2,
                relays: vec![0, 2],
            },
        ];
        let mut sm: SlotMachine<Pkt> = SlotMachine::new(pairs, 3, 4, true);
        sm.receive(0, vec![Pkt(1), Pkt(1)]).unwrap();
        sm.receive(1, vec![Pkt(2), Pkt(2)]).unwrap();
        assert!(sm.can_transmit(0));
        assert!(!sm.can_transmit(1));
        assert!(!sm.can_transmit(2));
        assert!(sm.transmit(2).is_err());
    }

    #[test]
    fn destination_buffer() {
        let mut d = DestinationBuffer::new();
        d.insert(3, "x");
        assert!(d.contains(3));
        assert_eq!(d.take(3), Some("x"));
        assert!(d.is_empty());
    }
}
