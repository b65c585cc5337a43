//! RAKE versus linear MMSE at one relay: analytic SINR and measured BER.
//!
//! ```text
//! cargo run --release --example receive_filters
//! ```

use nalgebra::DMatrix;
use plnc::receivers::{slice, FilterBank};
use plnc::rng::{stream_rng, Stream};
use plnc::signal::{draw_channel, generate_codebook, synthesize_block};
use plnc::{ReceiverKind, SystemConfig};
use rand::Rng;

fn main() -> plnc::Result<()> {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);
    let mut rng = stream_rng(7, Stream::Channel);
    let mut data = stream_rng(7, Stream::Data);
    let mut noise = stream_rng(7, Stream::Noise);

    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "snr", "sinr rake", "sinr mmse", "ber rake", "ber mmse"
    );
    for snr_db in [0.0, 5.0, 10.0, 15.0, 20.0] {
        let noise_var = 10f64.powf(-snr_db / 10.0);
        let mut sinr = [0.0; 2];
        let mut errors = [0u64; 2];
        let mut bits = 0u64;
        let draws = 200;
        let n = 500;
        for _ in 0..draws {
            let state = draw_channel(&config, &codebook, &mut rng);
            let h = state.relay_matrix(0);
            let b = DMatrix::from_fn(
                config.num_users,
                n,
                |_, _| if data.random::<bool>() { 1.0 } else { -1.0 },
            );
            let y = synthesize_block(&h, &b, noise_var, &mut noise);
            let targets: Vec<usize> = (0..config.num_users).collect();
            for (i, kind) in [ReceiverKind::Rake, ReceiverKind::Mmse].into_iter().enumerate() {
                let bank = FilterBank::build(h.clone(), kind, noise_var)?;
                sinr[i] += targets.iter().map(|&k| bank.sinr(k, noise_var)).sum::<f64>() / targets.len() as f64;
                let z = bank.outputs(&targets, &y);
                errors[i] += z.iter().zip(b.iter()).filter(|(z, b)| slice(**z) != **b).count() as u64;
            }
            bits += (config.num_users * n) as u64;
        }
        println!(
            "{snr_db:>6} {:>12.3} {:>12.3} {:>12.3e} {:>12.3e}",
            sinr[0] / draws as f64,
            sinr[1] / draws as f64,
            errors[0] as f64 / bits as f64,
            errors[1] as f64 / bits as f64
        );
    }
    Ok(())
}
