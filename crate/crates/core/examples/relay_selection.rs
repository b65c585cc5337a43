//! SINR table for one channel draw and the max-SINR choice with exclusions.
//!
//! ```text
//! cargo run --release --example relay_selection
//! ```

use std::collections::HashSet;

use nalgebra::DMatrix;
use plnc::receivers::FilterBank;
use plnc::rng::{stream_rng, Stream};
use plnc::selection::{build_table, candidate_pairs, select_best};
use plnc::signal::{draw_channel, generate_codebook};
use plnc::{PairMode, SystemConfig};

fn main() -> plnc::Result<()> {
    for pair_mode in [PairMode::Fixed, PairMode::All] {
        let config = SystemConfig {
            num_relays: if pair_mode == PairMode::All { 4 } else { 6 },
            pair_mode,
            ..SystemConfig::default()
        };
        let codebook = generate_codebook(&config);
        let mut rng = stream_rng(11, Stream::Channel);
        let state = draw_channel(&config, &codebook, &mut rng);
        let noise_var = config.noise_var();

        let relay_banks = (0..config.num_relays)
            .map(|l| FilterBank::build(state.relay_matrix(l), config.receiver, noise_var))
            .collect::<plnc::Result<Vec<_>>>()?;
        let rd_banks = (0..config.num_relays)
            .map(|l| {
                FilterBank::build(
                    DMatrix::from_columns(&[state.h_eff_rd[l].clone()]),
                    config.receiver,
                    noise_var,
                )
            })
            .collect::<plnc::Result<Vec<_>>>()?;
        let pairs = candidate_pairs(&config);
        let users_for = |p: &plnc::selection::CandidatePair| -> Vec<usize> {
            match pair_mode {
                PairMode::Fixed => config.group_users(p.index).collect(),
                PairMode::All => config.group_users(0).collect(),
            }
        };
        let table = build_table(&pairs, users_for, &relay_banks, &rd_banks, noise_var);

        println!("{pair_mode:?} pairs at {} dB", config.snr_db);
        for e in table.entries() {
            println!(
                "  pair {:?} {}: sinr {:.3}",
                pairs[e.pair].relays,
                e.hop.as_str(),
                e.sinr
            );
        }
        let mut excluded = HashSet::new();
        let mut order = Vec::new();
        while let Some(e) = select_best(&table, &excluded) {
            order.push(format!("{}/{}", e.pair, e.hop.as_str()));
            excluded.insert((e.pair, e.hop));
        }
        println!("  selection order as entries are excluded: {}\n", order.join(" "));
    }
    Ok(())
}
