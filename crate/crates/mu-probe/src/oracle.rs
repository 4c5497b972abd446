//! Independent ground-truth and bracketing computations: exact values for
//! single-block structures, randomized structured-unitary lower-bound
//! search, a diagonal-scaling upper bound, and an H-infinity grid sweep.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigVals, QR, SVD};
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::blocks::{Block, BlockStructure};
use crate::error::{MuError, Result};
use crate::lti::StateSpaceModel;

/// Bracketing report for one matrix / structure pair.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub lower_method: String,
    pub upper_method: String,
}

/// Largest singular value.
pub fn sigma_max(m: &Array2<c64>) -> Result<f64> {
    let (_, s, _) = m.svd(false, false)?;
    Ok(s.iter().copied().fold(0.0, f64::max))
}

/// Spectral radius.
pub fn spectral_radius(m: &Array2<c64>) -> Result<f64> {
    let eigs = m.eigvals()?;
    Ok(eigs.iter().map(|e| e.norm()).fold(0.0, f64::max))
}

/// Exact structured singular value for a single full block: the largest
/// singular value.
pub fn exact_single_full(m: &Array2<c64>) -> Result<f64> {
    sigma_max(m)
}

/// Exact structured singular value for a single repeated-scalar block: the
/// spectral radius (0 for nilpotent matrices).
pub fn exact_single_repeated_scalar(m: &Array2<c64>) -> Result<f64> {
    spectral_radius(m)
}

fn haar_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Result<Array2<c64>> {
    let g = Array2::from_shape_fn((dim, dim), |_| {
        c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let (mut q, r) = g.qr()?;
    // normalize the phase of each column so the draw is Haar distributed
    for j in 0..dim {
        let d = r[[j, j]];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..dim {
                q[[i, j]] *= phase.conj();
            }
        }
    }
    Ok(q)
}

/// One random structured unitary: unit-modulus phases on scalar blocks,
/// Haar unitaries on full blocks.
pub fn random_structured_unitary(
    structure: &BlockStructure,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<c64>> {
    let n = structure.n();
    let mut q = Array2::<c64>::zeros((n, n));
    for blk in structure.blocks() {
        let r = blk.range();
        match blk {
            Block::Scalar(_) => {
                let theta: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                let phase = c64::from_polar(1.0, theta);
                for i in r {
                    q[[i, i]] = phase;
                }
            }
            Block::Full(_) => {
                let u = haar_unitary(rng, r.len())?;
                for (bi, i) in r.clone().enumerate() {
                    for (bj, j) in r.clone().enumerate() {
                        q[[i, j]] = u[[bi, bj]];
                    }
                }
            }
        }
    }
    Ok(q)
}

/// Randomized lower bound `max_Q rho(Q M)` over structured unitaries. The
/// identity is always among the candidates, so the result is at least
/// `rho(M)`.
pub fn random_search_lower_bound(
    m: &Array2<c64>,
    structure: &BlockStructure,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = structure.n();
    if m.nrows() != n || m.ncols() != n {
        return Err(MuError::DimensionMismatch(format!(
            "matrix is {}x{}, structure dimension is {n}",
            m.nrows(),
            m.ncols()
        )));
    }
    if samples == 0 {
        return Err(MuError::InvalidArgument("samples must be >= 1".into()));
    }
    let mut best = spectral_radius(m)?; // Q = I candidate
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let q = random_structured_unitary(structure, &mut rng)?;
        best = best.max(spectral_radius(&q.dot(m))?);
    }
    Ok(best)
}

fn scaling_from_params(structure: &BlockStructure, log_params: &Array1<f64>) -> Array1<f64> {
    // expand per-parameter log scalings into a full diagonal
    let n = structure.n();
    let mut d = Array1::<f64>::zeros(n);
    let mut p = 0;
    for blk in structure.blocks() {
        let r = blk.range();
        match blk {
            Block::Scalar(_) => {
                for i in r {
                    d[i] = log_params[p].exp();
                    p += 1;
                }
            }
            Block::Full(_) => {
                let v = log_params[p].exp();
                p += 1;
                for i in r {
                    d[i] = v;
                }
            }
        }
    }
    d
}

fn num_scaling_params(structure: &BlockStructure) -> usize {
    structure.scalar_sizes().iter().sum::<usize>() + structure.num_fulls()
}

fn scaled_sigma(m: &Array2<c64>, d: &Array1<f64>) -> Result<f64> {
    let n = d.len();
    let mut scaled = Array2::<c64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            scaled[[i, j]] = m[[i, j]] * (d[i] / d[j]);
        }
    }
    sigma_max(&scaled)
}

/// Upper bound `inf_D sigma_max(D M D^-1)` by coordinate descent on the
/// log-scalings. `D` is restricted to positive diagonal entries within
/// scalar blocks (a subset of the full Hermitian family, so still a valid
/// upper bound, possibly looser) and a positive scalar per full block.
/// Monotone: the result never increases with more iterations; `iters = 0`
/// returns `sigma_max(M)`.
pub fn diag_scaling_upper_bound(
    m: &Array2<c64>,
    structure: &BlockStructure,
    iters: usize,
) -> Result<f64> {
    let n = structure.n();
    if m.nrows() != n || m.ncols() != n {
        return Err(MuError::DimensionMismatch(format!(
            "matrix is {}x{}, structure dimension is {n}",
            m.nrows(),
            m.ncols()
        )));
    }
    let params = num_scaling_params(structure);
    let mut logp = Array1::<f64>::zeros(params);
    let mut best = scaled_sigma(m, &scaling_from_params(structure, &logp))?;
    let mut step = 0.5f64;
    for _ in 0..iters {
        let mut improved = false;
        for p in 0..params {
            for dir in [step, -step] {
                let mut trial = logp.clone();
                trial[p] += dir;
                let val = scaled_sigma(m, &scaling_from_params(structure, &trial))?;
                if val < best {
                    best = val;
                    logp = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-10 {
                break;
            }
        }
    }
    Ok(best)
}

/// `max_m sigma_max(G(e^{i 2 pi m / grid_size}))`.
pub fn hinf_grid(model: &StateSpaceModel, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(MuError::InvalidArgument("grid_size must be >= 2".into()));
    }
    let mut best = 0.0f64;
    for m in 0..grid_size {
        let omega = 2.0 * std::f64::consts::PI * m as f64 / grid_size as f64;
        best = best.max(sigma_max(&model.freq_response(omega)?)?);
    }
    Ok(best)
}

/// Bracket `mu'` for a static matrix: randomized structured-unitary search
/// below, diagonal scaling above.
pub fn bounds_for_matrix(
    m: &Array2<c64>,
    structure: &BlockStructure,
    samples: usize,
    scaling_iters: usize,
    seed: u64,
) -> Result<BoundsReport> {
    let lower = random_search_lower_bound(m, structure, samples, seed)?;
    let upper = diag_scaling_upper_bound(m, structure, scaling_iters)?;
    Ok(BoundsReport {
        lower,
        upper,
        lower_method: format!("random structured-unitary search ({samples} samples)"),
        upper_method: format!("diagonal-scaling descent ({scaling_iters} sweeps)"),
    })
}
