//! DFT kernels with the `t = 1..N` phase convention used by the
//! frequency-domain power iteration, together with their "time-reversed"
//! variants and conjugate-symmetry utilities for real signals.
//!
//! The four transforms are, for `t = 1..N` and `m = 0..N-1`:
//!
//! ```text
//! idft_standard:      x[t] = (1/N) sum_m X[m] e^{ i 2 pi m t / N}
//! dft_standard:       X[m] =       sum_t x[t] e^{-i 2 pi m t / N}
//! idft_time_reversed: x[t] = (1/N) sum_m X[m] e^{ i 2 pi m (1-t) / N}
//! dft_time_reversed:  X[m] =       sum_t x[t] e^{ i 2 pi m (t-1) / N}
//! ```
//!
//! They are computed via an FFT plus index shifts; `cargo test` checks the
//! fast path against a direct summation reference.

use ndarray::Array2;
use num_complex::Complex64 as c64;
use rustfft::FftPlanner;
use std::cell::RefCell;

use crate::error::{MuError, Result};

/// N frequency bins, each a complex n-vector. Bin `m` corresponds to the
/// frequency `2 pi m / N`. Stored row-major: `data[[m, channel]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSignal {
    pub data: Array2<c64>,
}

/// N time samples `t = 1..N`, each an n-vector; `data[[t - 1, channel]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub data: Array2<c64>,
}

impl SpectralSignal {
    pub fn new(data: Array2<c64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(MuError::InvalidArgument("need at least 2 bins".into()));
        }
        Ok(SpectralSignal { data })
    }

    pub fn bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    /// Total spectral energy `sum_m |X[m]|^2`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Maximum deviation from the conjugate-symmetry condition
    /// `X[(N-m) mod N] = conj(X[m])`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.bins();
        let mut worst = 0.0f64;
        for m in 0..n {
            let mirror = (n - m) % n;
            for ch in 0..self.channels() {
                worst = worst.max((self.data[[mirror, ch]] - self.data[[m, ch]].conj()).norm());
            }
        }
        worst
    }
}

impl TimeSignal {
    pub fn samples(&self) -> usize {
        self.data.nrows()
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    /// Largest imaginary magnitude across samples and channels.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Real part, as a plain T x n array suitable for plant experiments.
    pub fn real_part(&self) -> Array2<f64> {
        self.data.mapv(|v| v.re)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_columns(data: &Array2<c64>, inverse: bool) -> Array2<c64> {
    let n = data.nrows();
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let mut out = Array2::<c64>::zeros(data.raw_dim());
    let mut buf = vec![c64::new(0.0, 0.0); n];
    for ch in 0..data.ncols() {
        for m in 0..n {
            buf[m] = data[[m, ch]];
        }
        fft.process(&mut buf);
        for m in 0..n {
            out[[m, ch]] = buf[m];
        }
    }
    out
}

/// `x[t] = (1/N) sum_m X[m] e^{i 2 pi m t / N}`, `t = 1..N`.
pub fn idft_standard(x: &SpectralSignal) -> TimeSignal {
    let n = x.bins();
    let raw = fft_columns(&x.data, true); // raw[u] = sum_m X[m] e^{i2pi m u/N}
    let mut out = Array2::<c64>::zeros(x.data.raw_dim());
    let scale = 1.0 / n as f64;
    for t_idx in 0..n {
        let u = (t_idx + 1) % n; // t = t_idx + 1
        for ch in 0..x.channels() {
            out[[t_idx, ch]] = raw[[u, ch]] * scale;
        }
    }
    TimeSignal { data: out }
}

/// `X[m] = sum_{t=1}^{N} x[t] e^{-i 2 pi m t / N}`.
pub fn dft_standard(x: &TimeSignal) -> SpectralSignal {
    let n = x.samples();
    // reorder so sample t sits at index t mod N, then a plain forward FFT
    let mut shifted = Array2::<c64>::zeros(x.data.raw_dim());
    for u in 0..n {
        let t_idx = (u + n - 1) % n; // t = u for u >= 1, t = N at u = 0
        for ch in 0..x.channels() {
            shifted[[u, ch]] = x.data[[t_idx, ch]];
        }
    }
    SpectralSignal {
        data: fft_columns(&shifted, false),
    }
}

/// `x[t] = (1/N) sum_m X[m] e^{i 2 pi m (1 - t) / N}`, `t = 1..N`.
pub fn idft_time_reversed(x: &SpectralSignal) -> TimeSignal {
    let n = x.bins();
    let raw = fft_columns(&x.data, true);
    let mut out = Array2::<c64>::zeros(x.data.raw_dim());
    let scale = 1.0 / n as f64;
    for t_idx in 0..n {
        // exponent index (1 - t) mod N with t = t_idx + 1
        let u = (n - t_idx) % n;
        for ch in 0..x.channels() {
            out[[t_idx, ch]] = raw[[u, ch]] * scale;
        }
    }
    TimeSignal { data: out }
}

/// `X[m] = sum_{t=1}^{N} x[t] e^{i 2 pi m (t - 1) / N}`.
pub fn dft_time_reversed(x: &TimeSignal) -> SpectralSignal {
    // with u = t - 1 this is an unscaled inverse FFT of the samples in
    // storage order
    SpectralSignal {
        data: fft_columns(&x.data, true),
    }
}

/// Project onto the conjugate-symmetric subspace:
/// `X'[m] = (X[m] + conj(X[(N-m) mod N])) / 2`. The result satisfies
/// `X'[(N-m) mod N] = conj(X'[m])`, so both inverse transforms map it to a
/// real time signal.
pub fn enforce_conjugate_symmetry(x: &SpectralSignal) -> SpectralSignal {
    let n = x.bins();
    let mut out = Array2::<c64>::zeros(x.data.raw_dim());
    for m in 0..n {
        let mirror = (n - m) % n;
        for ch in 0..x.channels() {
            out[[m, ch]] = (x.data[[m, ch]] + x.data[[mirror, ch]].conj()) * 0.5;
        }
    }
    SpectralSignal { data: out }
}
