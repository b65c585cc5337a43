//! Statistical and closed-form checks against independent reference computations.

mod common;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use plnc::coding::{design_ml, design_mmse, invertible_binary_matrices, CodingMatrix, MatrixDesign};
use plnc::receivers::{mmse_filter_bank, FilterBank};
use plnc::report::{emit_report, parse_report, sidecar_path, ReportRow};
use plnc::rng::{derive_seed, stream_rng, Stream};
use plnc::selection::{sinr_relay_destination, sinr_source_relay};
use plnc::signal::{complex_noise, draw_channel, first_phase_with_noise, generate_codebook, synthesize_first_phase};
use plnc::sim::{run_trial, Protocol, SweepOptions, SweepPlan};
use plnc::{DecoderKind, NcDesign, PabForm, ReceiverKind, SystemConfig};

use common::*;

fn rng(tag: u64) -> ChaCha8Rng {
    stream_rng(derive_seed(0x0a11, &[tag]), Stream::Data)
}

#[test]
fn fading_gains_have_unit_power_and_zero_mean() {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);
    let mut r = rng(1);
    let draws = 100_000;
    let mut power = 0.0;
    let mut mean = Complex64::new(0.0, 0.0);
    for _ in 0..draws {
        let s = draw_channel(&config, &codebook, &mut r);
        power += s.h_sd[0].norm_sqr();
        mean += s.h_sr[1][2];
    }
    let power = power / draws as f64;
    let mean = mean / draws as f64;
    assert!((power - 1.0).abs() < 0.02, "E|h|^2 = {power}");
    assert!(mean.norm() < 0.01, "E h = {mean}");
}

#[test]
fn received_noise_has_the_configured_variance() {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);
    let mut r = rng(2);
    let state = draw_channel(&config, &codebook, &mut r);
    let symbols = vec![1.0; config.num_users];
    let clean = synthesize_first_phase(&symbols, &state, 0.0, &mut r).unwrap();
    let sigma2 = config.noise_var();
    let trials = 100_000 / config.spreading_gain;
    let mut energy = 0.0;
    for _ in 0..trials {
        let y = synthesize_first_phase(&symbols, &state, sigma2, &mut r).unwrap();
        energy += (&y.relays[0].samples - &clean.relays[0].samples).norm_squared();
    }
    let per_chip = energy / (trials * config.spreading_gain) as f64;
    assert!(
        (per_chip / sigma2 - 1.0).abs() < 0.02,
        "per-chip variance {per_chip} vs {sigma2}"
    );
}

#[test]
fn signal_energy_matches_link_gains() {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);
    let mut r = rng(3);
    let state = draw_channel(&config, &codebook, &mut r);
    let n = config.spreading_gain;
    let zero = DVector::<Complex64>::zeros(n);
    let zeros: Vec<_> = (0..config.num_relays).map(|_| zero.clone()).collect();
    let trials = 100_000;
    let mut energy = 0.0;
    for _ in 0..trials {
        let b: Vec<f64> = (0..config.num_users).map(|_| bpsk(&mut r)).collect();
        let y = first_phase_with_noise(&b, &state, &zero, &zeros).unwrap();
        energy += y.direct.samples.norm_squared();
    }
    let expected: f64 = state.h_sd.iter().map(|h| h.norm_sqr()).sum();
    let measured = energy / trials as f64;
    assert!((measured / expected - 1.0).abs() < 0.02, "{measured} vs {expected}");
}

#[test]
fn mmse_filter_solves_the_full_covariance_system() {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);
    let mut r = rng(4);
    for snr in [0.0, 10.0, 30.0] {
        let sigma2 = 10f64.powf(-snr / 10.0);
        let state = draw_channel(&config, &codebook, &mut r);
        let h = state.relay_matrix(0);
        let w = mmse_filter_bank(&h, sigma2).unwrap();
        let mut cov = &h * h.adjoint();
        for i in 0..cov.nrows() {
            cov[(i, i)] += sigma2;
        }
        let reference = cov.lu().solve(&h).unwrap();
        let err = (&w - &reference).norm() / reference.norm();
        assert!(err < 1e-9, "relative error {err} at {snr} dB");
    }
}

#[test]
fn mmse_receivers_beat_rake_on_average() {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);
    let mut r = rng(5);
    let sigma2 = config.noise_var();
    let (mut rake, mut mmse) = (0.0, 0.0);
    for _ in 0..1000 {
        let state = draw_channel(&config, &codebook, &mut r);
        let h = state.relay_matrix(1);
        rake += FilterBank::build(h.clone(), ReceiverKind::Rake, sigma2)
            .unwrap()
            .sinr(0, sigma2);
        mmse += FilterBank::build(h, ReceiverKind::Mmse, sigma2)
            .unwrap()
            .sinr(0, sigma2);
    }
    assert!(mmse > rake, "mmse {mmse} rake {rake}");
}

fn decoder_and_reference(g: &CodingMatrix, form: PabForm, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);
    let mut r = rng(seed);
    let sigma2 = 10f64.powf(-0.8);
    let state = draw_channel(&config, &codebook, &mut r);
    let rd: Vec<_> = (0..2).map(|l| state.rd_vector(l, &codebook.ncs_codes[0])).collect();
    let banks: Vec<_> = rd
        .iter()
        .map(|h| {
            FilterBank::build(
                DMatrix::from_columns(std::slice::from_ref(h)),
                ReceiverKind::Mmse,
                sigma2,
            )
            .unwrap()
        })
        .collect();
    let gains: Vec<f64> = banks.iter().map(|b| b.gain(0).re).collect();
    let noise: Vec<f64> = banks
        .iter()
        .map(|b| sigma2 * b.weights.column(0).norm_squared())
        .collect();
    let design = design_mmse(g, &gains, &noise, &[1.0, 1.0], form).unwrap();
    let w: Vec<_> = banks.iter().map(|b| b.weights.column(0).into_owned()).collect();
    let rows: Vec<Vec<f64>> = (0..2).map(|k| (0..2).map(|l| g.get(k, l)).collect()).collect();
    let (re, _) = ls_coded_symbol_estimator(&rows, &rd, &w, sigma2, 100_000, &mut r);
    (design.decoder.to_dmatrix(), re)
}

#[test]
fn mmse_decoder_matches_least_squares_fit() {
    for (i, g) in invertible_binary_matrices(2).iter().enumerate() {
        let (d, ls) = decoder_and_reference(g, PabForm::CrossRow, 10 + i as u64);
        let dist = rel_frobenius(&ls, &d);
        assert!(dist < 1e-2, "candidate {i}: distance {dist}");
    }
}

#[test]
fn literal_cross_correlation_is_not_the_least_squares_fit() {
    let g = CodingMatrix::encoder(2, vec![1.0, 1.0, 0.0, 1.0], MatrixDesign::Explicit).unwrap();
    let (d, ls) = decoder_and_reference(&g, PabForm::Literal, 20);
    assert!(rel_frobenius(&ls, &d) > 0.1);
}

#[test]
fn ml_search_matches_brute_force() {
    let mut r = rng(6);
    let t = 60;
    for _ in 0..30 {
        let training: Vec<Vec<f64>> = (0..2).map(|_| (0..t).map(|_| bpsk(&mut r)).collect()).collect();
        let flip = r.random::<f64>() * 0.4;
        let detected: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|_| {
                training
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|&b| if r.random::<f64>() < flip { -b } else { b })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let noise: Vec<Vec<Complex64>> = (0..2).map(|_| (0..t).map(|_| cgauss(&mut r, 0.5)).collect()).collect();
        let z = |col: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<Complex64>> {
            (0..2)
                .map(|l| {
                    (0..t)
                        .map(|i| {
                            let a: f64 = (0..2).map(|k| col(k, l) * detected[l][k][i]).sum();
                            Complex64::new(a, 0.0) + noise[l][i]
                        })
                        .collect()
                })
                .collect()
        };
        let lib = design_ml(2, &training, |g| z(&|k, l| g.get(k, l))).unwrap();
        let (bf, cost) = brute_force_ml_2x2(&training, |g| z(&|k, l| g[k][l]));
        assert_eq!(lib.matrix.entries(), [bf[0][0], bf[0][1], bf[1][0], bf[1][1]]);
        assert!((lib.cost - cost).abs() < 1e-9 * cost.max(1.0));
        assert_eq!(lib.candidates_evaluated, 6);
    }
}

#[test]
fn relay_set_sinr_matches_monte_carlo() {
    let config = SystemConfig::default();
    let codebook = generate_codebook(&config);
    let mut r = rng(7);
    for (snr, kind) in [(5.0, ReceiverKind::Rake), (15.0, ReceiverKind::Mmse)] {
        let sigma2 = 10f64.powf(-snr / 10.0);
        let state = draw_channel(&config, &codebook, &mut r);
        let relay_banks: Vec<_> = (0..2)
            .map(|l| FilterBank::build(state.relay_matrix(l), kind, sigma2).unwrap())
            .collect();
        let rd_banks: Vec<_> = (0..2)
            .map(|l| FilterBank::build(DMatrix::from_columns(&[state.h_eff_rd[l].clone()]), kind, sigma2).unwrap())
            .collect();
        let mut sr = Vec::new();
        let mut rd = Vec::new();
        for l in 0..2 {
            for k in 0..2 {
                let w = relay_banks[l].weights.column(k).into_owned();
                sr.push(empirical_sinr(&w, &relay_banks[l].streams, k, sigma2, 30_000, &mut r));
            }
            let w = rd_banks[l].weights.column(0).into_owned();
            rd.push(empirical_sinr(&w, &rd_banks[l].streams, 0, sigma2, 30_000, &mut r));
        }
        let analytic_sr = sinr_source_relay(&[0, 1], &[0, 1], &relay_banks, sigma2);
        let analytic_rd = sinr_relay_destination(&[0, 1], &rd_banks, sigma2);
        assert!((analytic_sr / harmonic_combination(&sr) - 1.0).abs() < 0.05);
        assert!((analytic_rd / harmonic_combination(&rd) - 1.0).abs() < 0.05);
    }
}

#[test]
fn very_low_snr_gives_coin_flip_ber() {
    let config = SystemConfig {
        snr_db: -20.0,
        ..SystemConfig::default()
    };
    let out = run_trial(&config, 1, 50).unwrap();
    for (d, t) in &out.tallies {
        assert_eq!(t.bits, 100_000);
        assert!((0.4..=0.6).contains(&t.ber()), "{d}: {}", t.ber());
    }
}

#[test]
fn noiseless_single_group_is_error_free_with_mmse_receivers() {
    for decoder in [DecoderKind::Joint, DecoderKind::Direct] {
        let config = SystemConfig {
            num_users: 2,
            num_relays: 2,
            snr_db: 120.0,
            decoder,
            ..SystemConfig::default()
        };
        let out = run_trial(&config, 3, 5).unwrap();
        for (d, t) in &out.tallies {
            assert_eq!(t.errors, 0, "{d} {decoder:?}");
            assert_eq!(t.bits, 10_000);
        }
    }
}

#[test]
fn rake_stays_limited_by_intra_group_interference_without_noise() {
    // matched filters do not cancel the partner user, so some packets err even at 120 dB
    let config = SystemConfig {
        num_users: 2,
        num_relays: 2,
        snr_db: 120.0,
        receiver: ReceiverKind::Rake,
        ..SystemConfig::default()
    };
    let out = run_trial(&config, 3, 40).unwrap();
    let xor = out.tally(NcDesign::Xor).unwrap();
    assert!(xor.errors > 0);
    assert!(xor.ber() < 0.2);
}

#[test]
fn trials_are_reproducible_from_the_seed() {
    let config = SystemConfig::default();
    let a = run_trial(&config, 42, 6).unwrap();
    let b = run_trial(&config, 42, 6).unwrap();
    let c = run_trial(&config, 43, 6).unwrap();
    assert_eq!(a.tallies, b.tallies);
    assert_eq!(a.slots, b.slots);
    assert_ne!(a.tallies, c.tallies);
}

#[test]
fn ber_falls_with_snr() {
    let config = SystemConfig {
        schemes: vec![NcDesign::Ml],
        ..SystemConfig::default()
    };
    let plan = SweepPlan {
        snr_db: (0..8).map(|i| 2.0 * i as f64).collect(),
        bits_per_point: 200_000,
        protocols: vec![Protocol::Buffered],
    };
    let report = plnc::run_sweep(&config, &plan, &SweepOptions::default()).unwrap();
    let mut inversions = 0;
    for w in report.points.windows(2) {
        if w[1].ber() > w[0].ber() {
            inversions += 1;
            let se = (w[0].std_error().powi(2) + w[1].std_error().powi(2)).sqrt();
            assert!(w[1].ber() - w[0].ber() < 2.0 * se);
        }
    }
    assert!(inversions <= 1);
    assert!(report.points[0].ber() > 10.0 * report.points[7].ber());
}

#[test]
fn results_and_sidecar_round_trip() {
    let config = SystemConfig {
        schemes: vec![NcDesign::Xor, NcDesign::Ml],
        ..SystemConfig::default()
    };
    let plan = SweepPlan {
        snr_db: vec![0.0, 5.5],
        bits_per_point: 8_000,
        protocols: vec![Protocol::Buffered, Protocol::Unbuffered],
    };
    let report = plnc::run_sweep(&config, &plan, &SweepOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    emit_report(&report, &path).unwrap();

    let rows = parse_report(&path).unwrap();
    assert_eq!(rows.len(), 8);
    for (row, point) in rows.iter().zip(&report.points) {
        let expected = ReportRow::from(point);
        assert_eq!(
            (row.scheme, row.snr_db, row.bits, row.errors),
            (expected.scheme, expected.snr_db, expected.bits, expected.errors)
        );
        let exact = row.errors as f64 / row.bits as f64;
        assert!((row.ber - exact).abs() <= 1e-11 * exact.max(1e-300));
    }
    let echo = std::fs::read_to_string(sidecar_path(&path)).unwrap();
    assert_eq!(SystemConfig::parse_kv(&echo).unwrap(), config);
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let plan = SweepPlan {
        snr_db: Vec::new(),
        bits_per_point: 1000,
        protocols: vec![Protocol::Buffered],
    };
    let report = plnc::run_sweep(&SystemConfig::default(), &plan, &SweepOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_report(&report, &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "scheme,snr_db,bits,errors,ber\n"
    );
}

#[test]
fn noise_samples_are_circular() {
    let mut r = rng(8);
    let n = complex_noise(200_000, 2.0, &mut r);
    let re: f64 = n.iter().map(|x| x.re * x.re).sum::<f64>() / n.len() as f64;
    let im: f64 = n.iter().map(|x| x.im * x.im).sum::<f64>() / n.len() as f64;
    let cross: f64 = n.iter().map(|x| x.re * x.im).sum::<f64>() / n.len() as f64;
    assert!((re - 1.0).abs() < 0.02 && (im - 1.0).abs() < 0.02 && cross.abs() < 0.02);
}
