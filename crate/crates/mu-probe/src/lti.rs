//! Discrete-time MIMO LTI state-space plants: simulation (the experiment
//! oracle behind the data-driven engine), frequency response, transposition
//! and random stable system generation.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{EigVals, Inverse, QR};
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{MuError, Result};

/// Additive output disturbance: i.i.d. zero-mean Gaussian per channel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec { variance: 0.0, seed: 0 }
    }

    pub fn new(variance: f64, seed: u64) -> Result<Self> {
        if variance < 0.0 || !variance.is_finite() {
            return Err(MuError::InvalidArgument(format!(
                "noise variance must be finite and >= 0, got {variance}"
            )));
        }
        Ok(NoiseSpec { variance, seed })
    }
}

/// Square (`n` inputs, `n` outputs) discrete-time state-space plant
///
/// ```text
/// x_{k+1} = A x_k + B u_k
/// y_k     = C x_k + D u_k
/// ```
///
/// Construction enforces stability: the spectral radius of `A` must be
/// strictly below one.
#[derive(Debug, Clone, Serialize)]
#[serde(into = "MatrixRepr")]
pub struct StateSpaceModel {
    a: Array2<f64>,
    b: Array2<f64>,
    c: Array2<f64>,
    d: Array2<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRepr {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
}

fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: &[Vec<f64>], name: &str) -> Result<Array2<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != nc) {
        return Err(MuError::Config(format!("ragged rows in matrix {name}")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((nr, nc), flat)
        .map_err(|e| MuError::Config(format!("matrix {name}: {e}")))
}

impl From<StateSpaceModel> for MatrixRepr {
    fn from(m: StateSpaceModel) -> Self {
        MatrixRepr {
            a: to_rows(&m.a),
            b: to_rows(&m.b),
            c: to_rows(&m.c),
            d: to_rows(&m.d),
        }
    }
}

impl<'de> Deserialize<'de> for StateSpaceModel {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(de)?;
        let a = from_rows(&repr.a, "A").map_err(serde::de::Error::custom)?;
        let b = from_rows(&repr.b, "B").map_err(serde::de::Error::custom)?;
        let c = from_rows(&repr.c, "C").map_err(serde::de::Error::custom)?;
        let d = from_rows(&repr.d, "D").map_err(serde::de::Error::custom)?;
        StateSpaceModel::new(a, b, c, d).map_err(serde::de::Error::custom)
    }
}

impl StateSpaceModel {
    pub fn new(a: Array2<f64>, b: Array2<f64>, c: Array2<f64>, d: Array2<f64>) -> Result<Self> {
        let n_x = a.nrows();
        if a.ncols() != n_x {
            return Err(MuError::DimensionMismatch("A must be square".into()));
        }
        let n = b.ncols();
        if n == 0 || n_x == 0 {
            return Err(MuError::InvalidArgument("n and n_x must be >= 1".into()));
        }
        if b.nrows() != n_x {
            return Err(MuError::DimensionMismatch("B rows must match A".into()));
        }
        if c.ncols() != n_x || c.nrows() != n {
            return Err(MuError::DimensionMismatch(format!(
                "C must be {n}x{n_x} for a square {n}-channel plant"
            )));
        }
        if d.nrows() != n || d.ncols() != n {
            return Err(MuError::DimensionMismatch(format!("D must be {n}x{n}")));
        }
        let model = StateSpaceModel { a, b, c, d };
        let rho = model.spectral_radius_a()?;
        if rho >= 1.0 {
            return Err(MuError::InvalidArgument(format!(
                "unstable plant: spectral radius of A is {rho} >= 1"
            )));
        }
        Ok(model)
    }

    /// Channel count (square plant).
    pub fn n(&self) -> usize {
        self.b.ncols()
    }

    /// State dimension.
    pub fn n_x(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }
    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }
    pub fn c(&self) -> &Array2<f64> {
        &self.c
    }
    pub fn d(&self) -> &Array2<f64> {
        &self.d
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0)
    }

    pub fn spectral_radius_a(&self) -> Result<f64> {
        let eigs = self.a.eigvals()?;
        Ok(eigs.iter().map(|e| e.norm()).fold(0.0, f64::max))
    }

    /// Frequency response `D + C (e^{iw} I - A)^{-1} B`.
    pub fn freq_response(&self, omega: f64) -> Result<Array2<c64>> {
        let n_x = self.n_x();
        let z = c64::from_polar(1.0, omega);
        let mut resolvent = Array2::<c64>::zeros((n_x, n_x));
        for i in 0..n_x {
            for j in 0..n_x {
                resolvent[[i, j]] = -c64::new(self.a[[i, j]], 0.0);
            }
            resolvent[[i, i]] += z;
        }
        let inv = resolvent.inv()?;
        let bc = self.b.mapv(|v| c64::new(v, 0.0));
        let cc = self.c.mapv(|v| c64::new(v, 0.0));
        let mut g = cc.dot(&inv).dot(&bc);
        for i in 0..self.n() {
            for j in 0..self.n() {
                g[[i, j]] += self.d[[i, j]];
            }
        }
        Ok(g)
    }

    /// Transposed plant `(A^T, C^T, B^T, D^T)`, whose transfer function is
    /// `G(z)^T`. Reference oracle for the adjoint experiments; the
    /// data-driven path never calls it.
    pub fn transpose_model(&self) -> StateSpaceModel {
        StateSpaceModel {
            a: self.a.t().to_owned(),
            b: self.c.t().to_owned(),
            c: self.b.t().to_owned(),
            d: self.d.t().to_owned(),
        }
    }
}

/// Simulate from zero initial state. `input` is T x n, one row per sample;
/// the output has the same shape. Noise is drawn i.i.d. per sample and
/// channel with the given variance.
pub fn simulate(
    model: &StateSpaceModel,
    input: &Array2<f64>,
    noise: &NoiseSpec,
) -> Result<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    simulate_with_rng(model, input, noise.variance, &mut rng)
}

/// Simulation core taking an externally owned RNG, so repeated experiments
/// draw fresh noise.
pub fn simulate_with_rng(
    model: &StateSpaceModel,
    input: &Array2<f64>,
    variance: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<f64>> {
    let n = model.n();
    if input.ncols() != n {
        return Err(MuError::DimensionMismatch(format!(
            "input has {} channels, plant expects {n}",
            input.ncols()
        )));
    }
    let t_len = input.nrows();
    if t_len == 0 {
        return Err(MuError::InvalidArgument("input length must be >= 1".into()));
    }
    let std = variance.sqrt();
    let mut x = Array1::<f64>::zeros(model.n_x());
    let mut out = Array2::<f64>::zeros((t_len, n));
    for k in 0..t_len {
        let u = input.row(k);
        let mut y = model.c.dot(&x) + model.d.dot(&u);
        if std > 0.0 {
            for v in y.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *v += std * e;
            }
        }
        out.row_mut(k).assign(&y);
        x = model.a.dot(&x) + model.b.dot(&u);
    }
    Ok(out)
}

/// Apply the N-sample signal repeated `warm_periods + 1` times from zero
/// initial state and return the last period only. For a stable plant this
/// approximates the periodic steady-state response, with transient residue
/// decaying like `rho(A)^(warm_periods * N)`.
pub fn simulate_periodic(
    model: &StateSpaceModel,
    period_signal: &Array2<f64>,
    warm_periods: usize,
    noise: &NoiseSpec,
) -> Result<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    simulate_periodic_with_rng(model, period_signal, warm_periods, noise.variance, &mut rng)
}

pub fn simulate_periodic_with_rng(
    model: &StateSpaceModel,
    period_signal: &Array2<f64>,
    warm_periods: usize,
    variance: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<f64>> {
    let n_period = period_signal.nrows();
    let reps = warm_periods + 1;
    let mut tiled = Array2::<f64>::zeros((n_period * reps, period_signal.ncols()));
    for r in 0..reps {
        tiled
            .slice_mut(s![r * n_period..(r + 1) * n_period, ..])
            .assign(period_signal);
    }
    let full = simulate_with_rng(model, &tiled, variance, rng)?;
    Ok(full.slice(s![warm_periods * n_period.., ..]).to_owned())
}

/// Random strictly proper stable plant: `A` is a random orthogonal matrix
/// scaled so its spectral radius is a uniform draw in
/// `[min(0.3, rho_max), rho_max]`; `B`, `C` have standard Gaussian entries.
/// Deterministic under `seed`.
pub fn random_stable(n: usize, n_x: usize, pole_radius_max: f64, seed: u64) -> Result<StateSpaceModel> {
    if !(0.0 < pole_radius_max && pole_radius_max < 1.0) {
        return Err(MuError::InvalidArgument(format!(
            "pole_radius_max must be in (0, 1), got {pole_radius_max}"
        )));
    }
    if n == 0 || n_x == 0 {
        return Err(MuError::InvalidArgument("n and n_x must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fn gauss(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
    }
    let g = gauss(&mut rng, n_x, n_x);
    let (mut q, r) = g.qr()?;
    // Fix signs so the factorization (and hence the draw) is unique.
    for j in 0..n_x {
        if r[[j, j]] < 0.0 {
            q.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    let lo = pole_radius_max.min(0.3);
    let rho: f64 = rng.gen_range(lo..=pole_radius_max);
    let a = q.mapv(|v| rho * v);
    let b = gauss(&mut rng, n_x, n);
    let c = gauss(&mut rng, n, n_x);
    let d = Array2::<f64>::zeros((n, n));
    StateSpaceModel::new(a, b, c, d)
}
