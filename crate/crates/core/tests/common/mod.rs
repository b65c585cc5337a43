//! Independent reference computations shared by the oracle and acceptance tests.
//!
//! Nothing here calls the library's design, decoding or SINR routines; the
//! library is only used for channel draws and filter weights.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn cgauss(rng: &mut ChaCha8Rng, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn bpsk(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Relative Frobenius distance `||a - b|| / ||b||`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Least-squares linear estimator of the coded symbols from the filter
/// outputs, fitted on `samples` simulated pairs.
///
/// `g` is row-major `m x m`; relay `l` sends `a_l = sum_k g[k][l] b_k` in its
/// own sub-slot over `rd[l]`, and the destination applies `w[l]`. Returns
/// the real and imaginary parts of `E[a z^H] E[z z^H]^-1`.
pub fn ls_coded_symbol_estimator(
    g: &[Vec<f64>],
    rd: &[DVector<Complex64>],
    w: &[DVector<Complex64>],
    noise_var: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = g.len();
    let n = rd[0].len();
    let mut raz = DMatrix::<Complex64>::zeros(m, m);
    let mut rzz = DMatrix::<Complex64>::zeros(m, m);
    let mut z = vec![Complex64::new(0.0, 0.0); m];
    for _ in 0..samples {
        let b: Vec<f64> = (0..m).map(|_| bpsk(rng)).collect();
        let a: Vec<f64> = (0..m).map(|l| (0..m).map(|k| g[k][l] * b[k]).sum()).collect();
        for l in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..n {
                let y = rd[l][c] * a[l] + cgauss(rng, noise_var);
                acc += w[l][c].conj() * y;
            }
            z[l] = acc;
        }
        for i in 0..m {
            for j in 0..m {
                raz[(i, j)] += z[j].conj() * a[i];
                rzz[(i, j)] += z[i] * z[j].conj();
            }
        }
    }
    let est = raz * rzz.try_inverse().expect("output covariance is invertible");
    (est.map(|x| x.re), est.map(|x| x.im))
}

/// Every invertible binary 2x2 matrix as `[[g00, g01], [g10, g11]]`, in the
/// order of the 4-bit row-major pattern `g00 g01 g10 g11`.
pub fn binary_2x2_by_mask() -> Vec<[[f64; 2]; 2]> {
    let mut out = Vec::new();
    for mask in 0u8..16 {
        let bit = |i: u8| ((mask >> i) & 1) as f64;
        let g = [[bit(3), bit(2)], [bit(1), bit(0)]];
        if g[0][0] * g[1][1] - g[0][1] * g[1][0] != 0.0 {
            out.push(g);
        }
    }
    out
}

/// ML cost of one candidate: `sum_t ||b_t - (G^T)^-1 z_t||^2`, using the
/// closed-form inverse of a 2x2 matrix.
pub fn ml_cost_2x2(g: &[[f64; 2]; 2], training: &[Vec<f64>], z: &[Vec<Complex64>]) -> f64 {
    // G^T = [[g00, g10], [g01, g11]]
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = [[g[1][1] / det, -g[1][0] / det], [-g[0][1] / det, g[0][0] / det]];
    let mut cost = 0.0;
    for t in 0..training[0].len() {
        for k in 0..2 {
            let est = z[0][t] * inv[k][0] + z[1][t] * inv[k][1];
            cost += (Complex64::new(training[k][t], 0.0) - est).norm_sqr();
        }
    }
    cost
}

/// Brute-force argmin over the 2x2 candidates; the first minimum wins.
pub fn brute_force_ml_2x2<F>(training: &[Vec<f64>], mut outputs: F) -> ([[f64; 2]; 2], f64)
where
    F: FnMut(&[[f64; 2]; 2]) -> Vec<Vec<Complex64>>,
{
    let mut best: Option<([[f64; 2]; 2], f64)> = None;
    for g in binary_2x2_by_mask() {
        let c = ml_cost_2x2(&g, training, &outputs(&g));
        if best.is_none_or(|(_, b)| c < b) {
            best = Some((g, c));
        }
    }
    best.expect("six candidates")
}

/// Empirical SINR of `w` for stream `target` of `streams` over `symbols`
/// independent intervals: captured signal power over the power of everything else.
pub fn empirical_sinr(
    w: &DVector<Complex64>,
    streams: &DMatrix<Complex64>,
    target: usize,
    noise_var: f64,
    symbols: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let (n, k) = streams.shape();
    let gains: Vec<Complex64> = (0..k).map(|j| w.dotc(&streams.column(j))).collect();
    let mut signal = 0.0;
    let mut rest = 0.0;
    let mut y = DVector::<Complex64>::zeros(n);
    for _ in 0..symbols {
        let b: Vec<f64> = (0..k).map(|_| bpsk(rng)).collect();
        for c in 0..n {
            let mut v = cgauss(rng, noise_var);
            for j in 0..k {
                v += streams[(c, j)] * b[j];
            }
            y[c] = v;
        }
        let z = w.dotc(&y);
        let s = gains[target] * b[target];
        signal += s.norm_sqr();
        rest += (z - s).norm_sqr();
    }
    signal / rest
}

/// `n / sum 1/s_i`, the relay-set combination of per-link SINRs.
pub fn harmonic_combination(links: &[f64]) -> f64 {
    links.len() as f64 / links.iter().map(|s| 1.0 / s).sum::<f64>()
}
