//! Relay-set SINR for both hops and max-SINR selection with exclusions.
//!
//! A relay set's SINR on a hop combines its desired links (user `k` at
//! relay `l` on the source hop, relay `l`'s coded stream on the relay hop).
//! Each link filter is normalised to unit gain on its own stream, so the set
//! SINR is the ratio of summed signal to summed interference-plus-noise,
//! which works out to `n / sum_i 1/SINR_i`.

use std::collections::HashSet;

use crate::config::{PairMode, SystemConfig};
use crate::receivers::FilterBank;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkHop {
    SourceRelay,
    RelayDest,
}

impl LinkHop {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkHop::SourceRelay => "sr",
            LinkHop::RelayDest => "rd",
        }
    }
}

/// A relay set that can be scheduled as a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePair {
    pub index: usize,
    pub relays: Vec<usize>,
}

/// Fixed disjoint groups, or every unordered relay pair.
pub fn candidate_pairs(config: &SystemConfig) -> Vec<CandidatePair> {
    let m = config.group_size;
    match config.pair_mode {
        PairMode::Fixed => (0..config.num_relays / m)
            .map(|g| CandidatePair {
                index: g,
                relays: (g * m..(g + 1) * m).collect(),
            })
            .collect(),
        PairMode::All => {
            let l = config.num_relays;
            let mut out = Vec::new();
            for a in 0..l {
                for b in a + 1..l {
                    out.push(CandidatePair {
                        index: out.len(),
                        relays: vec![a, b],
                    });
                }
            }
            out
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrEntry {
    pub pair: usize,
    pub hop: LinkHop,
    pub sinr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SinrTable {
    entries: Vec<SinrEntry>,
}

impl SinrTable {
    /// Builds a table; non-finite or negative SINRs are clamped to zero.
    pub fn new(entries: Vec<SinrEntry>) -> Self {
        let entries = entries
            .into_iter()
            .map(|mut e| {
                if !e.sinr.is_finite() || e.sinr < 0.0 {
                    e.sinr = if e.sinr == f64::INFINITY { f64::MAX } else { 0.0 };
                }
                e
            })
            .collect();
        SinrTable { entries }
    }

    pub fn entries(&self) -> &[SinrEntry] {
        &self.entries
    }

    pub fn get(&self, pair: usize, hop: LinkHop) -> Option<&SinrEntry> {
        self.entries.iter().find(|e| e.pair == pair && e.hop == hop)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `n / sum 1/s_i`; zero if any link has zero SINR.
pub fn combine_link_sinrs(links: &[f64]) -> f64 {
    if links.is_empty() {
        return 0.0;
    }
    let mut inv = 0.0;
    for &s in links {
        if s <= 0.0 {
            return 0.0;
        }
        inv += 1.0 / s;
    }
    links.len() as f64 / inv
}

/// Source-hop SINR of the set `relays` for the users in `users`.
///
/// `relay_banks[l]` holds relay `l`'s filters with one stream per user.
pub fn sinr_source_relay(users: &[usize], relays: &[usize], relay_banks: &[FilterBank], noise_var: f64) -> f64 {
    let mut links = Vec::with_capacity(users.len() * relays.len());
    for &l in relays {
        for &k in users {
            links.push(relay_banks[l].sinr(k, noise_var));
        }
    }
    combine_link_sinrs(&links)
}

/// Relay-hop SINR of the set `relays`; `rd_banks[l]` holds relay `l`'s
/// single coded stream at the destination.
pub fn sinr_relay_destination(relays: &[usize], rd_banks: &[FilterBank], noise_var: f64) -> f64 {
    let links: Vec<f64> = relays.iter().map(|&l| rd_banks[l].sinr(0, noise_var)).collect();
    combine_link_sinrs(&links)
}

/// SINR table for every candidate on both hops. `users_for` gives the
/// users whose packets a candidate would receive.
pub fn build_table<F>(
    pairs: &[CandidatePair],
    users_for: F,
    relay_banks: &[FilterBank],
    rd_banks: &[FilterBank],
    noise_var: f64,
) -> SinrTable
where
    F: Fn(&CandidatePair) -> Vec<usize>,
{
    let mut entries = Vec::with_capacity(2 * pairs.len());
    for p in pairs {
        let users = users_for(p);
        entries.push(SinrEntry {
            pair: p.index,
            hop: LinkHop::SourceRelay,
            sinr: sinr_source_relay(&users, &p.relays, relay_banks, noise_var),
        });
        entries.push(SinrEntry {
            pair: p.index,
            hop: LinkHop::RelayDest,
            sinr: sinr_relay_destination(&p.relays, rd_banks, noise_var),
        });
    }
    SinrTable::new(entries)
}

/// Highest-SINR entry not in `excluded`. Ties go to the lower pair index,
/// then to the source hop. `None` once every entry is excluded.
pub fn select_best(table: &SinrTable, excluded: &HashSet<(usize, LinkHop)>) -> Option<SinrEntry> {
    let mut best: Option<SinrEntry> = None;
    for e in table.entries() {
        if excluded.contains(&(e.pair, e.hop)) {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => e.sinr > b.sinr || (e.sinr == b.sinr && (e.pair, e.hop) < (b.pair, b.hop)),
        };
        if better {
            best = Some(*e);
        }
    }
    best
}
