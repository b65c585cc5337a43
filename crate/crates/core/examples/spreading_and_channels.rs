//! Spreading codes, a fading draw and one noiseless source-phase interval.
//!
//! ```text
//! cargo run --release --example spreading_and_channels
//! ```

use nalgebra::DVector;
use num_complex::Complex64;

use plnc::rng::{stream_rng, Stream};
use plnc::signal::{draw_channel, generate_codebook, synthesize_first_phase};
use plnc::SystemConfig;

fn main() -> plnc::Result<()> {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);

    println!(
        "{} user codes, {} group codes, N = {}",
        codebook.codes.len(),
        codebook.ncs_codes.len(),
        codebook.spreading_gain()
    );
    println!("cross-correlations between user codes:");
    for a in &codebook.codes {
        let row: Vec<String> = codebook.codes.iter().map(|b| format!("{:+.3}", a.dot(b))).collect();
        println!("  {}", row.join(" "));
    }

    let mut rng = stream_rng(config.rng_seed, Stream::Channel);
    let state = draw_channel(&config, &codebook, &mut rng);
    println!("\ndirect-link gains |h_sd|:");
    for (k, h) in state.h_sd.iter().enumerate() {
        println!("  user {k}: {:.3}", h.norm());
    }

    // Noiseless reception equals the superposition of the effective vectors.
    let symbols = [1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
    let phase = synthesize_first_phase(&symbols, &state, 0.0, &mut rng)?;
    let b = DVector::from_iterator(symbols.len(), symbols.iter().map(|&x| Complex64::new(x, 0.0)));
    let expected = state.direct_matrix() * b;
    println!(
        "\nnoiseless synthesis error: {:.2e}",
        (&phase.direct.samples - expected).norm()
    );

    // Average channel power over many draws.
    let draws = 20_000;
    let mut power = 0.0;
    for _ in 0..draws {
        let s = draw_channel(&config, &codebook, &mut rng);
        power += s.h_sd.iter().map(|h| h.norm_sqr()).sum::<f64>() / s.h_sd.len() as f64;
    }
    println!("E|h|^2 over {draws} draws: {:.4}", power / draws as f64);

    let mut noise_rng = stream_rng(config.rng_seed, Stream::Noise);
    let noise_var = config.noise_var();
    let trials = 5_000;
    let mut energy = 0.0;
    for _ in 0..trials {
        let y = synthesize_first_phase(&symbols, &state, noise_var, &mut noise_rng)?;
        energy += (&y.direct.samples - &phase.direct.samples).norm_squared();
    }
    println!(
        "per-chip noise variance at {} dB: {:.4} (target {:.4})",
        config.snr_db,
        energy / (trials * config.spreading_gain) as f64,
        noise_var
    );
    Ok(())
}
