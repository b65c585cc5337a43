//! XOR coding, the invertible binary matrices, and the ML and MMSE designs
//! on a two-relay group.
//!
//! ```text
//! cargo run --release --example network_coding
//! ```

use num_complex::Complex64;
use rand::Rng;

use plnc::coding::{
    decode_joint, decode_with_direct, design_ml, design_mmse, design_random, invertible_binary_matrices, linear_encode,
    xor_decode, xor_encode, CodingMatrix, MatrixDesign,
};
use plnc::rng::{stream_rng, Stream};
use plnc::signal::complex_gaussian;
use plnc::PabForm;

fn show(g: &CodingMatrix) -> String {
    let m = g.size();
    (0..m)
        .map(|k| (0..m).map(|l| format!("{}", g.get(k, l))).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(" | ")
}

fn main() -> plnc::Result<()> {
    let bits = [1u8, 0];
    let ncs = xor_encode(&bits)?;
    println!(
        "xor of {bits:?} -> symbol {ncs:+}; user 0 recovered as {:+}",
        xor_decode(ncs, &bits, 0)?
    );

    println!("\ninvertible binary 2x2 matrices (rows separated by |):");
    for (i, g) in invertible_binary_matrices(2).iter().enumerate() {
        println!("  {i}: {}  det {:+}", show(g), g.determinant());
    }
    let mut rng = stream_rng(3, Stream::Design);
    println!("random draw: {}", show(&design_random(2, &mut rng)));

    // Noiseless round trip through every candidate.
    let b = [1.0, -1.0];
    for g in invertible_binary_matrices(2) {
        let a: Vec<Complex64> = (0..2)
            .map(|l| Complex64::new(linear_encode(&g, &b, l).unwrap(), 0.0))
            .collect();
        let joint = decode_joint(&g, &CodingMatrix::identity(2), &a)?;
        let direct = decode_with_direct(&g, &a, &b, 0, 0)?;
        assert_eq!(joint, b);
        assert_eq!(direct, b[0]);
    }
    println!("every candidate decodes b = {b:?} exactly without noise");

    // ML calibration: relay 1 detects user 0 with errors, relay 0 is clean.
    let t = 100;
    let gains = [0.9, 0.4];
    let sigma = 0.3;
    let training: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..t).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
        .collect();
    // User 0 as detected by each relay; relay 1 flips a fifth of the symbols.
    let detected: Vec<Vec<f64>> = (0..2)
        .map(|l| {
            (0..t)
                .map(|i| {
                    if l == 1 && rng.random::<f64>() < 0.2 {
                        -training[0][i]
                    } else {
                        training[0][i]
                    }
                })
                .collect()
        })
        .collect();
    let noise: Vec<Vec<Complex64>> = (0..2)
        .map(|_| (0..t).map(|_| complex_gaussian(&mut rng) * sigma).collect())
        .collect();
    let ml = design_ml(2, &training, |g| {
        (0..2)
            .map(|l| {
                (0..t)
                    .map(|i| {
                        let d = [detected[l][i], training[1][i]];
                        let a = linear_encode(g, &d, l).expect("valid symbols");
                        Complex64::new(a, 0.0) + noise[l][i] / gains[l]
                    })
                    .collect()
            })
            .collect()
    })?;
    println!(
        "\nml choice: candidate {} ({}) with cost {:.2}",
        ml.index,
        show(&ml.matrix),
        ml.cost
    );

    let noise_powers: Vec<f64> = gains.iter().map(|g| sigma * sigma * g).collect();
    let mmse = design_mmse(&ml.matrix, &gains, &noise_powers, &[1.0, 1.0], PabForm::CrossRow)?;
    println!(
        "mmse decoder for it: {} (fallback {})",
        show(&mmse.decoder),
        mmse.fallback
    );
    let explicit = CodingMatrix::encoder(2, vec![1.0, 1.0, 0.0, 1.0], MatrixDesign::Explicit)?;
    let mmse = design_mmse(&explicit, &gains, &noise_powers, &[1.0, 1.0], PabForm::CrossRow)?;
    println!("mmse decoder for {}: {}", show(&explicit), show(&mmse.decoder));
    Ok(())
}
