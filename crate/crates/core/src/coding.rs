//! XOR and linear network coding over the reals.
//!
//! Relay `l` of a group forwards `a_l = sum_k g_kl b_k`, so column `l` of the
//! coding matrix `G` weights relay `l` and the vector of coded symbols is
//! `a = G^T b`. Decoding inverts that map.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::config::PabForm;
use crate::error::{Error, Result};
use crate::receivers::slice;

/// `c -> 1 - 2c`.
pub fn bit_to_symbol(c: u8) -> Result<f64> {
    match c {
        0 => Ok(1.0),
        1 => Ok(-1.0),
        _ => Err(Error::InvalidBit(c)),
    }
}

/// `b -> (1 - b) / 2`.
pub fn symbol_to_bit(b: f64) -> Result<u8> {
    if b == 1.0 {
        Ok(0)
    } else if b == -1.0 {
        Ok(1)
    } else {
        Err(Error::InvalidSymbol(b))
    }
}

/// Users and relays that form one group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    pub users: Vec<usize>,
    pub relays: Vec<usize>,
}

impl GroupAssignment {
    pub fn new(users: Vec<usize>, relays: Vec<usize>, num_users: usize, num_relays: usize) -> Result<Self> {
        let distinct = |v: &[usize]| v.iter().enumerate().all(|(i, x)| !v[..i].contains(x));
        if users.len() != relays.len() {
            return Err(Error::DimensionMismatch {
                expected: users.len(),
                actual: relays.len(),
            });
        }
        if !distinct(&users) || !distinct(&relays) {
            return Err(Error::Config("group indices repeat".into()));
        }
        if users.iter().any(|&k| k >= num_users) || relays.iter().any(|&l| l >= num_relays) {
            return Err(Error::Config("group index out of range".into()));
        }
        Ok(GroupAssignment { users, relays })
    }

    /// The disjoint groups `g*m .. g*m+m` for users and relays alike.
    pub fn fixed(num_users: usize, m: usize) -> Vec<GroupAssignment> {
        (0..num_users / m)
            .map(|g| GroupAssignment {
                users: (g * m..(g + 1) * m).collect(),
                relays: (g * m..(g + 1) * m).collect(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixDesign {
    Random,
    Ml,
    Mmse,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixRole {
    Encoder,
    Decoder,
}

/// Square real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingMatrix {
    m: usize,
    entries: Vec<f64>,
    pub design: MatrixDesign,
    pub role: MatrixRole,
}

impl CodingMatrix {
    /// A binary, invertible encoding matrix.
    pub fn encoder(m: usize, entries: Vec<f64>, design: MatrixDesign) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                actual: entries.len(),
            });
        }
        if let Some(x) = entries.iter().find(|&&x| x != 0.0 && x != 1.0) {
            return Err(Error::InvalidCodingMatrix(format!("encoder entry {x} is not binary")));
        }
        let g = CodingMatrix {
            m,
            entries,
            design,
            role: MatrixRole::Encoder,
        };
        if g.determinant().abs() <= 1e-9 {
            return Err(Error::InvalidCodingMatrix("encoder is singular".into()));
        }
        Ok(g)
    }

    /// A finite real decoding matrix.
    pub fn decoder(m: usize, entries: Vec<f64>, design: MatrixDesign) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                actual: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCodingMatrix("decoder has non-finite entries".into()));
        }
        Ok(CodingMatrix {
            m,
            entries,
            design,
            role: MatrixRole::Decoder,
        })
    }

    pub fn identity(m: usize) -> Self {
        let entries = (0..m * m).map(|i| if i / m == i % m { 1.0 } else { 0.0 }).collect();
        CodingMatrix {
            m,
            entries,
            design: MatrixDesign::Explicit,
            role: MatrixRole::Encoder,
        }
    }

    /// Per-stream equaliser `diag(1 / gains)`.
    pub fn equalizer(gains: &[f64], design: MatrixDesign) -> Result<Self> {
        if let Some(g) = gains.iter().find(|g| !g.is_finite() || **g == 0.0) {
            return Err(Error::DegenerateChannel(format!("filter gain {g}")));
        }
        let m = gains.len();
        let mut e = vec![0.0; m * m];
        for (i, g) in gains.iter().enumerate() {
            e[i * m + i] = 1.0 / g;
        }
        CodingMatrix::decoder(m, e, design)
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `g_kl`: weight of user `k` in relay `l`'s combination.
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[k * self.m + l]
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        (0..self.m).map(|k| self.get(k, l)).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.m, self.m, &self.entries)
    }

    pub fn determinant(&self) -> f64 {
        self.to_dmatrix().determinant()
    }

    /// `(G^T)^-1`, the map from coded symbols back to user symbols.
    pub fn transpose_inverse(&self) -> Result<DMatrix<f64>> {
        self.to_dmatrix()
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::InvalidCodingMatrix("matrix is singular".into()))
    }
}

/// `1 - 2 (c_1 xor ... xor c_m)`.
pub fn xor_encode(bits: &[u8]) -> Result<f64> {
    let mut acc = 0u8;
    for &c in bits {
        if c > 1 {
            return Err(Error::InvalidBit(c));
        }
        acc ^= c;
    }
    bit_to_symbol(acc)
}

/// Recovers user `target` from the XOR symbol and the other users' direct-link bits.
/// `direct_bits[target]` is ignored.
pub fn xor_decode(ncs: f64, direct_bits: &[u8], target: usize) -> Result<f64> {
    let mut acc = symbol_to_bit(ncs)?;
    for (j, &c) in direct_bits.iter().enumerate() {
        if c > 1 {
            return Err(Error::InvalidBit(c));
        }
        if j != target {
            acc ^= c;
        }
    }
    bit_to_symbol(acc)
}

/// Relay `l`'s combination of its detected symbols, `sum_k g_kl b_k`.
pub fn linear_encode(g: &CodingMatrix, detected: &[f64], l: usize) -> Result<f64> {
    if detected.len() != g.size() {
        return Err(Error::DimensionMismatch {
            expected: g.size(),
            actual: detected.len(),
        });
    }
    if let Some(&b) = detected.iter().find(|b| **b != 1.0 && **b != -1.0) {
        return Err(Error::InvalidSymbol(b));
    }
    Ok(detected.iter().enumerate().map(|(k, b)| g.get(k, l) * b).sum())
}

fn from_mask(m: usize, mask: u64) -> Vec<f64> {
    let n = m * m;
    (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as f64).collect()
}

/// Every invertible binary `m x m` matrix, ordered by the row-major bit
/// pattern read as a binary number.
pub fn invertible_binary_matrices(m: usize) -> Vec<CodingMatrix> {
    let n = m * m;
    assert!(n < 64, "m too large to enumerate");
    (0..1u64 << n)
        .filter_map(|mask| CodingMatrix::encoder(m, from_mask(m, mask), MatrixDesign::Ml).ok())
        .collect()
}

/// Uniform draw from the invertible binary matrices by rejection sampling.
pub fn design_random<R: Rng>(m: usize, rng: &mut R) -> CodingMatrix {
    loop {
        let e: Vec<f64> = (0..m * m)
            .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
            .collect();
        if let Ok(g) = CodingMatrix::encoder(m, e, MatrixDesign::Random) {
            return g;
        }
    }
}

/// Squared distance between the known training symbols and `(G^T)^-1`
/// applied to equalised relay outputs.
///
/// `training[k][t]` is user `k`'s symbol at time `t`; `outputs[l][t]` is the
/// equalised output of relay `l`'s stream.
pub fn ml_cost(g: &CodingMatrix, training: &[Vec<f64>], outputs: &[Vec<Complex64>]) -> Result<f64> {
    let m = g.size();
    if training.len() != m || outputs.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: if training.len() != m {
                training.len()
            } else {
                outputs.len()
            },
        });
    }
    let len = training[0].len();
    if len == 0 {
        return Err(Error::EmptyCalibration);
    }
    if let Some(bad) = training.iter().find(|r| r.len() != len) {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: bad.len(),
        });
    }
    if let Some(bad) = outputs.iter().find(|r| r.len() != len) {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: bad.len(),
        });
    }
    let inv = g.transpose_inverse()?;
    let mut cost = 0.0;
    for t in 0..len {
        for k in 0..m {
            let mut est = Complex64::new(0.0, 0.0);
            for l in 0..m {
                est += outputs[l][t] * inv[(k, l)];
            }
            cost += (Complex64::new(training[k][t], 0.0) - est).norm_sqr();
        }
    }
    Ok(cost)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlDesign {
    pub matrix: CodingMatrix,
    pub cost: f64,
    /// Position of the winner in [`invertible_binary_matrices`].
    pub index: usize,
    pub candidates_evaluated: usize,
}

/// Exhaustive search over the invertible binary matrices.
///
/// `equalized` returns the equalised relay outputs over the calibration
/// block when the relays encode with the given candidate. The lowest cost
/// wins; ties go to the earliest candidate.
pub fn design_ml<F>(m: usize, training: &[Vec<f64>], mut equalized: F) -> Result<MlDesign>
where
    F: FnMut(&CodingMatrix) -> Vec<Vec<Complex64>>,
{
    if training.first().is_none_or(|r| r.is_empty()) {
        return Err(Error::EmptyCalibration);
    }
    let candidates = invertible_binary_matrices(m);
    let mut best: Option<(f64, usize)> = None;
    for (i, g) in candidates.iter().enumerate() {
        let cost = ml_cost(g, training, &equalized(g))?;
        if best.is_none_or(|(c, _)| cost < c) {
            best = Some((cost, i));
        }
    }
    let (cost, index) = best.ok_or_else(|| Error::InvalidCodingMatrix("no invertible candidate".into()))?;
    Ok(MlDesign {
        matrix: candidates[index].clone(),
        cost,
        index,
        candidates_evaluated: candidates.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmseDesign {
    pub decoder: CodingMatrix,
    pub p_ab: DMatrix<f64>,
    pub r_b: DMatrix<f64>,
    /// Set when `R_b` could not be inverted and the per-stream equaliser was used instead.
    pub fallback: bool,
}

/// Cross-correlation between coded symbols and filter outputs.
pub fn mmse_p_ab(encoder: &CodingMatrix, gains: &[f64], symbol_variances: &[f64], form: PabForm) -> DMatrix<f64> {
    let m = encoder.size();
    DMatrix::from_fn(m, m, |k, j| {
        let corr: f64 = (0..m)
            .map(|i| {
                let second = match form {
                    PabForm::CrossRow => encoder.get(i, j),
                    PabForm::Literal => encoder.get(i, k),
                };
                encoder.get(i, k) * second * symbol_variances[i]
            })
            .sum();
        corr * gains[j]
    })
}

/// Covariance of the filter outputs `z_j = gains_j a_j + noise_j`.
pub fn mmse_r_b(encoder: &CodingMatrix, gains: &[f64], noise_powers: &[f64], symbol_variances: &[f64]) -> DMatrix<f64> {
    let m = encoder.size();
    DMatrix::from_fn(m, m, |j, i| {
        let ra: f64 = (0..m)
            .map(|u| encoder.get(u, j) * encoder.get(u, i) * symbol_variances[u])
            .sum();
        gains[j] * ra * gains[i] + if i == j { noise_powers[j] } else { 0.0 }
    })
}

/// MMSE estimate of the coded symbols from the relay filter outputs:
/// `P_ab R_b^-1`.
///
/// `gains[l]` is `w_l^H h_l` (real for single-stream filters) and
/// `noise_powers[l]` is `sigma2 ||w_l||^2`.
pub fn design_mmse(
    encoder: &CodingMatrix,
    gains: &[f64],
    noise_powers: &[f64],
    symbol_variances: &[f64],
    form: PabForm,
) -> Result<MmseDesign> {
    let m = encoder.size();
    for v in [gains.len(), noise_powers.len(), symbol_variances.len()] {
        if v != m {
            return Err(Error::DimensionMismatch { expected: m, actual: v });
        }
    }
    let p_ab = mmse_p_ab(encoder, gains, symbol_variances, form);
    let r_b = mmse_r_b(encoder, gains, noise_powers, symbol_variances);
    let solved = r_b
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .map(|inv| &p_ab * inv)
        .filter(|g| g.iter().all(|x| x.is_finite()));
    match solved {
        Some(g) => {
            let entries = g.transpose().as_slice().to_vec();
            Ok(MmseDesign {
                decoder: CodingMatrix::decoder(m, entries, MatrixDesign::Mmse)?,
                p_ab,
                r_b,
                fallback: false,
            })
        }
        None => Ok(MmseDesign {
            decoder: CodingMatrix::equalizer(gains, MatrixDesign::Mmse)?,
            p_ab,
            r_b,
            fallback: true,
        }),
    }
}

/// Precomputed `(G^T)^-1 D` for decoding many symbol intervals.
#[derive(Debug, Clone)]
pub struct JointDecoder {
    map: DMatrix<f64>,
}

impl JointDecoder {
    pub fn new(encoder: &CodingMatrix, decoder: &CodingMatrix) -> Result<Self> {
        if encoder.size() != decoder.size() {
            return Err(Error::DimensionMismatch {
                expected: encoder.size(),
                actual: decoder.size(),
            });
        }
        Ok(JointDecoder {
            map: encoder.transpose_inverse()? * decoder.to_dmatrix(),
        })
    }

    /// Hard decisions for one symbol interval.
    pub fn decode_into(&self, z: &[Complex64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for (l, zl) in z.iter().enumerate() {
                s += zl * self.map[(k, l)];
            }
            *o = slice(s);
        }
    }
}

/// Applies the decoder to the relay outputs, then solves `G^T b = a` and slices.
pub fn decode_joint(encoder: &CodingMatrix, decoder: &CodingMatrix, z: &[Complex64]) -> Result<Vec<f64>> {
    if z.len() != encoder.size() {
        return Err(Error::DimensionMismatch {
            expected: encoder.size(),
            actual: z.len(),
        });
    }
    let dec = JointDecoder::new(encoder, decoder)?;
    let mut out = vec![0.0; z.len()];
    dec.decode_into(z, &mut out);
    Ok(out)
}

/// Relay whose stream is used for user `target`: `preferred` if its
/// coefficient is nonzero, otherwise the lowest relay that carries the user.
pub fn carrier_relay(g: &CodingMatrix, target: usize, preferred: usize) -> Result<usize> {
    if g.get(target, preferred) != 0.0 {
        return Ok(preferred);
    }
    (0..g.size())
        .find(|&s| g.get(target, s) != 0.0)
        .ok_or(Error::NoCarrier(target))
}

/// Direct-aided decoding of user `target` from relay `preferred`'s coded
/// estimate, cancelling the other users with their direct-link decisions.
///
/// `ncs_estimates[l]` is the estimated coded symbol of relay `l`;
/// `direct[target]` is ignored.
pub fn decode_with_direct(
    g: &CodingMatrix,
    ncs_estimates: &[Complex64],
    direct: &[f64],
    target: usize,
    preferred: usize,
) -> Result<f64> {
    let m = g.size();
    if ncs_estimates.len() != m || direct.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: if ncs_estimates.len() != m {
                ncs_estimates.len()
            } else {
                direct.len()
            },
        });
    }
    let l = carrier_relay(g, target, preferred)?;
    let mut r = ncs_estimates[l];
    for (j, b) in direct.iter().enumerate() {
        if j != target {
            r -= g.get(j, l) * b;
        }
    }
    Ok(slice(r / g.get(target, l)))
}
