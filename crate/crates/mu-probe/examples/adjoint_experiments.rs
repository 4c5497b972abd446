//! The adjoint without a backwards-running plant.
//!
//! A forward experiment realizes P[m] = G(e^{i w_m}) B[m]. The adjoint
//! M^H Z[m] is realized with n^2 masked forward experiments (the
//! transposition identity G^T = sum e_a e_b^T G e_a e_b^T) combined with
//! the time-reversed transform pair. This example checks both passes
//! against the frequency response computed from the state-space model.

use mu_probe::datadriven::{adjoint_pass, forward_pass, SimulatedOracle};
use mu_probe::lti::random_stable;
use mu_probe::spectral::{enforce_conjugate_symmetry, SpectralSignal};
use ndarray::Array2;
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let n = 2;
    let big_n = 64;
    let model = random_stable(n, 5, 0.8, 13).unwrap();
    let oracle = SimulatedOracle::noiseless(model.clone(), 20);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spectrum = |rng: &mut ChaCha8Rng| {
        enforce_conjugate_symmetry(&SpectralSignal {
            data: Array2::from_shape_fn((big_n, n), |_| {
                c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            }),
        })
    };
    let b = spectrum(&mut rng);
    let z = spectrum(&mut rng);

    let mut experiments = 0usize;
    let mut imag = 0.0f64;
    let p = forward_pass(&oracle, &b, true, &mut experiments, &mut imag).unwrap();
    let r = adjoint_pass(&oracle, &z, true, &mut experiments, &mut imag).unwrap();
    println!("{experiments} experiments ({} forward + {} masked adjoint)", 1, n * n);

    let mut worst_fwd = 0.0f64;
    let mut worst_adj = 0.0f64;
    for m in 0..big_n {
        let omega = 2.0 * std::f64::consts::PI * m as f64 / big_n as f64;
        let g = model.freq_response(omega).unwrap();
        let gh = g.t().mapv(|v: c64| v.conj());
        let pf = g.dot(&b.data.row(m).to_owned());
        let ra = gh.dot(&z.data.row(m).to_owned());
        for ch in 0..n {
            worst_fwd = worst_fwd.max((p.data[[m, ch]] - pf[ch]).norm());
            worst_adj = worst_adj.max((r.data[[m, ch]] - ra[ch]).norm());
        }
    }
    println!("worst forward deviation from G(e^iw) B:   {worst_fwd:.3e}");
    println!("worst adjoint deviation from G^H(e^iw) Z: {worst_adj:.3e}");
    println!("largest imaginary part fed to the plant:  {imag:.3e}");
}
