//! Model-based power iteration on a static complex matrix, checked against
//! the two closed-form cases: a single full block gives the largest
//! singular value, a single repeated-scalar block gives the spectral
//! radius.

use mu_probe::blocks::BlockStructure;
use mu_probe::oracle;
use mu_probe::power::model_power_iteration;
use ndarray::Array2;
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let m = Array2::from_shape_fn((3, 3), |_| {
        c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });

    for (name, structure, exact) in [
        (
            "full block      ",
            BlockStructure::single_full(3),
            oracle::exact_single_full(&m).unwrap(),
        ),
        (
            "repeated scalar ",
            BlockStructure::single_repeated_scalar(3),
            oracle::exact_single_repeated_scalar(&m).unwrap(),
        ),
    ] {
        let r = model_power_iteration(&m, &structure, 7, 1e-10, 2000, 5).unwrap();
        println!(
            "{name} mu = {:.10}  exact = {:.10}  ({} iterations, converged = {})",
            r.mu(),
            exact,
            r.iterations,
            r.converged
        );
    }

    // a mixed structure sits between rho and sigma_max
    let mixed = BlockStructure::from_rm(&[1, 1], &[1, 2]).unwrap();
    let r = model_power_iteration(&m, &mixed, 7, 1e-10, 2000, 5).unwrap();
    println!(
        "mixed r=[1,1] m=[1,2]: mu = {:.10} in [rho, sigma] = [{:.10}, {:.10}]",
        r.mu(),
        oracle::spectral_radius(&m).unwrap(),
        oracle::sigma_max(&m).unwrap()
    );
}
