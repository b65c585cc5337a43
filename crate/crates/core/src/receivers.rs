//! RAKE and linear MMSE receive filters, filter outputs and the BPSK slicer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::ReceiverKind;
use crate::error::{Error, Result};
use crate::signal::ReceivedVector;

/// The stream a filter is matched to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkTarget {
    UserAtRelay { user: usize, relay: usize },
    UserAtDestination { user: usize },
    NcsAtDestination { relay: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveFilter {
    pub weights: DVector<Complex64>,
    pub target: LinkTarget,
    pub kind: ReceiverKind,
}

/// Matched filter: the weights are the effective channel vector itself.
pub fn rake_filter(h_eff: &DVector<Complex64>, target: LinkTarget) -> Result<ReceiveFilter> {
    if h_eff.iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
        return Err(Error::DegenerateChannel("effective channel vector is zero".into()));
    }
    Ok(ReceiveFilter {
        weights: h_eff.clone(),
        target,
        kind: ReceiverKind::Rake,
    })
}

/// MMSE weights for every column of `streams` at once.
///
/// Returns `W = H (H^H H + sigma2 I)^-1`, which equals
/// `(H H^H + sigma2 I)^-1 H` but only factors a `K x K` matrix. The Gram
/// matrix has every eigenvalue at least `sigma2`, so the Cholesky
/// factorisation failing means the inputs are not usable.
pub fn mmse_filter_bank(streams: &DMatrix<Complex64>, noise_var: f64) -> Result<DMatrix<Complex64>> {
    if !noise_var.is_finite() || noise_var <= 0.0 {
        return Err(Error::Config(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    let hh = streams.adjoint();
    let mut gram = &hh * streams;
    for i in 0..gram.nrows() {
        gram[(i, i)] += noise_var;
    }
    let chol = gram.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let x = chol.solve(&hh);
    let w = x.adjoint();
    if w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(w)
}

/// Linear MMSE filter for `streams[target_index]` against the other streams and noise.
pub fn mmse_filter(
    streams: &[DVector<Complex64>],
    target_index: usize,
    noise_var: f64,
    target: LinkTarget,
) -> Result<ReceiveFilter> {
    if target_index >= streams.len() {
        return Err(Error::DimensionMismatch {
            expected: streams.len(),
            actual: target_index,
        });
    }
    let h = DMatrix::from_columns(streams);
    let w = mmse_filter_bank(&h, noise_var)?;
    Ok(ReceiveFilter {
        weights: w.column(target_index).into_owned(),
        target,
        kind: ReceiverKind::Mmse,
    })
}

/// `w^H y`.
pub fn filter_output(w: &ReceiveFilter, y: &ReceivedVector) -> Result<Complex64> {
    if w.weights.len() != y.samples.len() {
        return Err(Error::DimensionMismatch {
            expected: w.weights.len(),
            actual: y.samples.len(),
        });
    }
    Ok(w.weights.dotc(&y.samples))
}

/// BPSK decision on the real part; exact zero maps to `+1`.
#[inline]
pub fn slice(soft: Complex64) -> f64 {
    if soft.re >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Signal, interference and noise powers at the output of `w` when every
/// column of `streams` carries an independent unit-power symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputPowers {
    pub signal: f64,
    pub interference: f64,
    pub noise: f64,
}

impl OutputPowers {
    pub fn sinr(&self) -> f64 {
        self.signal / (self.interference + self.noise)
    }
}

pub fn output_powers<'a>(
    w: impl Into<nalgebra::DVectorView<'a, Complex64>>,
    streams: &DMatrix<Complex64>,
    target_index: usize,
    noise_var: f64,
) -> OutputPowers {
    let w = w.into();
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (j, h) in streams.column_iter().enumerate() {
        let p = w.dotc(&h).norm_sqr();
        if j == target_index {
            signal = p;
        } else {
            interference += p;
        }
    }
    OutputPowers {
        signal,
        interference,
        noise: noise_var * w.norm_squared(),
    }
}

/// Filters for every stream observed at one receiver.
#[derive(Debug, Clone)]
pub struct FilterBank {
    /// `N x S`, one effective vector per stream.
    pub streams: DMatrix<Complex64>,
    /// `N x S`, column `s` is the filter for stream `s`.
    pub weights: DMatrix<Complex64>,
    pub kind: ReceiverKind,
}

impl FilterBank {
    pub fn build(streams: DMatrix<Complex64>, kind: ReceiverKind, noise_var: f64) -> Result<Self> {
        let weights = match kind {
            ReceiverKind::Rake => {
                if let Some(j) = streams
                    .column_iter()
                    .position(|c| c.iter().all(|x| x.norm_sqr() == 0.0))
                {
                    return Err(Error::DegenerateChannel(format!(
                        "stream {j} has a zero channel vector"
                    )));
                }
                streams.clone()
            }
            ReceiverKind::Mmse => mmse_filter_bank(&streams, noise_var)?,
        };
        Ok(FilterBank { streams, weights, kind })
    }

    pub fn len(&self) -> usize {
        self.streams.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.ncols() == 0
    }

    pub fn powers(&self, s: usize, noise_var: f64) -> OutputPowers {
        output_powers(self.weights.column(s), &self.streams, s, noise_var)
    }

    pub fn sinr(&self, s: usize, noise_var: f64) -> f64 {
        self.powers(s, noise_var).sinr()
    }

    /// `w_s^H h_s`.
    pub fn gain(&self, s: usize) -> Complex64 {
        self.weights.column(s).dotc(&self.streams.column(s))
    }

    /// Soft outputs of the filters for `targets` over a block of received
    /// columns: row `i` of the result belongs to `targets[i]`.
    pub fn outputs(&self, targets: &[usize], y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let w = self.weights.select_columns(targets);
        w.ad_mul(y)
    }
}
