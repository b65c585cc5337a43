//! Spreading codes, block-fading channels and chip-rate received signals.
//!
//! All amplitudes are 1 (equal power allocation) and the SNR is set purely
//! through the noise variance. Noise is circularly-symmetric complex
//! Gaussian with total variance `sigma2` per chip, `sigma2 / 2` per real
//! dimension.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Spreading codes for the users and for the network-coded streams.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeBook {
    /// One code per user.
    pub codes: Vec<DVector<f64>>,
    /// One code per user group, shared by every relay forwarding that group.
    pub ncs_codes: Vec<DVector<f64>>,
}

impl CodeBook {
    pub fn spreading_gain(&self) -> usize {
        self.codes.first().map_or(0, |c| c.len())
    }
}

fn random_code<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    let chip = 1.0 / (n as f64).sqrt();
    DVector::from_fn(n, |_, _| if rng.random::<bool>() { chip } else { -chip })
}

/// Draws the run's codebook from the master seed.
pub fn generate_codebook(config: &SystemConfig) -> CodeBook {
    let mut rng = stream_rng(config.rng_seed, Stream::Codebook);
    let n = config.spreading_gain;
    let codes = (0..config.num_users).map(|_| random_code(n, &mut rng)).collect();
    let ncs_codes = (0..config.num_groups()).map(|_| random_code(n, &mut rng)).collect();
    CodeBook { codes, ncs_codes }
}

/// Which link a received vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hop {
    SourceRelay,
    SourceDest,
    RelayDest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedVector {
    pub samples: DVector<Complex64>,
    pub hop: Hop,
}

/// Fading coefficients for one coherence block plus the effective
/// signature vectors they induce.
#[derive(Debug, Clone)]
pub struct ChannelState {
    pub h_sd: Vec<Complex64>,
    /// Indexed `[user][relay]`.
    pub h_sr: Vec<Vec<Complex64>>,
    pub h_rd: Vec<Complex64>,
    pub a_sd: Vec<f64>,
    pub a_sr: Vec<Vec<f64>>,
    pub a_rd: Vec<f64>,
    pub h_eff_sd: Vec<DVector<Complex64>>,
    /// Indexed `[user][relay]`.
    pub h_eff_sr: Vec<Vec<DVector<Complex64>>>,
    /// Built with the code of the group each relay belongs to under the fixed grouping.
    pub h_eff_rd: Vec<DVector<Complex64>>,
}

/// One standard circularly-symmetric complex Gaussian sample.
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `n` i.i.d. noise chips with total variance `noise_var` each.
pub fn complex_noise<R: Rng>(n: usize, noise_var: f64, rng: &mut R) -> DVector<Complex64> {
    let s = noise_var.sqrt();
    DVector::from_fn(n, |_, _| complex_gaussian(rng) * s)
}

/// An `rows x cols` block of noise chips.
pub fn complex_noise_block<R: Rng>(rows: usize, cols: usize, noise_var: f64, rng: &mut R) -> DMatrix<Complex64> {
    let s = noise_var.sqrt();
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng) * s)
}

fn spread(code: &DVector<f64>, gain: Complex64) -> DVector<Complex64> {
    code.map(|c| gain * c)
}

/// Draws a fresh block-fading realisation for every link.
pub fn draw_channel<R: Rng>(config: &SystemConfig, codebook: &CodeBook, rng: &mut R) -> ChannelState {
    let (k_users, l_relays, m) = (config.num_users, config.num_relays, config.group_size);
    let h_sd: Vec<Complex64> = (0..k_users).map(|_| complex_gaussian(rng)).collect();
    let h_sr: Vec<Vec<Complex64>> = (0..k_users)
        .map(|_| (0..l_relays).map(|_| complex_gaussian(rng)).collect())
        .collect();
    let h_rd: Vec<Complex64> = (0..l_relays).map(|_| complex_gaussian(rng)).collect();

    let a_sd = vec![1.0; k_users];
    let a_sr = vec![vec![1.0; l_relays]; k_users];
    let a_rd = vec![1.0; l_relays];

    let h_eff_sd = (0..k_users)
        .map(|k| spread(&codebook.codes[k], h_sd[k] * a_sd[k]))
        .collect();
    let h_eff_sr = (0..k_users)
        .map(|k| {
            (0..l_relays)
                .map(|l| spread(&codebook.codes[k], h_sr[k][l] * a_sr[k][l]))
                .collect()
        })
        .collect();
    let groups = codebook.ncs_codes.len().max(1);
    let h_eff_rd = (0..l_relays)
        .map(|l| {
            let code = &codebook.ncs_codes[(l / m) % groups];
            spread(code, h_rd[l] * a_rd[l])
        })
        .collect();

    ChannelState {
        h_sd,
        h_sr,
        h_rd,
        a_sd,
        a_sr,
        a_rd,
        h_eff_sd,
        h_eff_sr,
        h_eff_rd,
    }
}

impl ChannelState {
    pub fn num_users(&self) -> usize {
        self.h_sd.len()
    }

    pub fn num_relays(&self) -> usize {
        self.h_rd.len()
    }

    /// Effective relay-to-destination vector when relay `l` spreads with `code`.
    pub fn rd_vector(&self, l: usize, code: &DVector<f64>) -> DVector<Complex64> {
        spread(code, self.h_rd[l] * self.a_rd[l])
    }

    /// The `N x K` matrix of every user's effective vector at relay `l`.
    pub fn relay_matrix(&self, l: usize) -> DMatrix<Complex64> {
        let cols: Vec<_> = self.h_eff_sr.iter().map(|row| row[l].clone()).collect();
        DMatrix::from_columns(&cols)
    }

    /// The `N x K` matrix of every user's effective vector at the destination.
    pub fn direct_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_columns(&self.h_eff_sd)
    }
}

fn check_symbols(symbols: &[f64], expected: usize) -> Result<()> {
    if symbols.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: symbols.len(),
        });
    }
    match symbols.iter().find(|b| **b != 1.0 && **b != -1.0) {
        Some(&b) => Err(Error::InvalidSymbol(b)),
        None => Ok(()),
    }
}

fn superpose<'a>(
    vectors: impl Iterator<Item = &'a DVector<Complex64>>,
    weights: &[f64],
    noise: &DVector<Complex64>,
) -> DVector<Complex64> {
    let mut y = noise.clone();
    for (h, &b) in vectors.zip(weights) {
        y.axpy(Complex64::new(b, 0.0), h, Complex64::new(1.0, 0.0));
    }
    y
}

/// Received vectors of the source phase: the direct link and every relay.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPhase {
    pub direct: ReceivedVector,
    pub relays: Vec<ReceivedVector>,
}

/// Source phase for one symbol interval with caller-supplied noise.
///
/// `noise_relays` holds one noise vector per relay.
pub fn first_phase_with_noise(
    symbols: &[f64],
    state: &ChannelState,
    noise_direct: &DVector<Complex64>,
    noise_relays: &[DVector<Complex64>],
) -> Result<FirstPhase> {
    check_symbols(symbols, state.num_users())?;
    if noise_relays.len() != state.num_relays() {
        return Err(Error::DimensionMismatch {
            expected: state.num_relays(),
            actual: noise_relays.len(),
        });
    }
    let direct = ReceivedVector {
        samples: superpose(state.h_eff_sd.iter(), symbols, noise_direct),
        hop: Hop::SourceDest,
    };
    let relays = noise_relays
        .iter()
        .enumerate()
        .map(|(l, n)| ReceivedVector {
            samples: superpose(state.h_eff_sr.iter().map(|row| &row[l]), symbols, n),
            hop: Hop::SourceRelay,
        })
        .collect();
    Ok(FirstPhase { direct, relays })
}

/// Source phase for one symbol interval: `y = sum_k h_k b_k + n` at the
/// destination and at every relay.
pub fn synthesize_first_phase<R: Rng>(
    symbols: &[f64],
    state: &ChannelState,
    noise_var: f64,
    rng: &mut R,
) -> Result<FirstPhase> {
    let n = state.h_eff_sd.first().map_or(0, |h| h.len());
    let noise_direct = complex_noise(n, noise_var, rng);
    let noise_relays: Vec<_> = (0..state.num_relays())
        .map(|_| complex_noise(n, noise_var, rng))
        .collect();
    first_phase_with_noise(symbols, state, &noise_direct, &noise_relays)
}

/// Relay phase with caller-supplied noise.
///
/// Relay `pair[i]` sends `ncs[i]` in its own sub-slot on the group code, so
/// the destination observes one vector per relay: `y_i = h_rd[pair[i]] ncs[i] + n_i`.
pub fn second_phase_with_noise(
    ncs: &[f64],
    rd_vectors: &[DVector<Complex64>],
    noise: &[DVector<Complex64>],
) -> Result<Vec<ReceivedVector>> {
    if ncs.len() != rd_vectors.len() || noise.len() != rd_vectors.len() {
        return Err(Error::DimensionMismatch {
            expected: rd_vectors.len(),
            actual: if ncs.len() != rd_vectors.len() {
                ncs.len()
            } else {
                noise.len()
            },
        });
    }
    Ok(ncs
        .iter()
        .zip(rd_vectors)
        .zip(noise)
        .map(|((&a, h), n)| ReceivedVector {
            samples: superpose(std::iter::once(h), &[a], n),
            hop: Hop::RelayDest,
        })
        .collect())
}

/// Relay phase for the relays in `pair`, each spreading with `code`.
pub fn synthesize_second_phase<R: Rng>(
    ncs: &[f64],
    state: &ChannelState,
    pair: &[usize],
    code: &DVector<f64>,
    noise_var: f64,
    rng: &mut R,
) -> Result<Vec<ReceivedVector>> {
    let vectors: Vec<_> = pair.iter().map(|&l| state.rd_vector(l, code)).collect();
    let noise: Vec<_> = pair.iter().map(|_| complex_noise(code.len(), noise_var, rng)).collect();
    second_phase_with_noise(ncs, &vectors, &noise)
}

/// A whole block of symbol intervals at once: `Y = H B + noise`, where `H`
/// is `N x K` and `B` is `K x n` with one column per symbol interval.
pub fn synthesize_block<R: Rng>(
    h: &DMatrix<Complex64>,
    symbols: &DMatrix<f64>,
    noise_var: f64,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let mut y = complex_noise_block(h.nrows(), symbols.ncols(), noise_var, rng);
    let b = symbols.map(|x| Complex64::new(x, 0.0));
    y.gemm(Complex64::new(1.0, 0.0), h, &b, Complex64::new(1.0, 0.0));
    y
}
