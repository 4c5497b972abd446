//! Bracket the structured singular value of a static matrix from both
//! sides: randomized structured-unitary search below, diagonal-scaling
//! descent above. The gap tells how trustworthy a power-iteration result
//! is for that structure.

use mu_probe::blocks::BlockStructure;
use mu_probe::oracle::bounds_for_matrix;
use ndarray::Array2;
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = Array2::from_shape_fn((3, 3), |_| {
        c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });

    let structures = [
        ("m=[1,3] (one full)", BlockStructure::from_rm(&[0, 0], &[1, 3]).unwrap()),
        ("r=[1,3] (one scalar)", BlockStructure::from_rm(&[1, 3], &[0, 0]).unwrap()),
        ("r=[1,1] m=[1,2]", BlockStructure::from_rm(&[1, 1], &[1, 2]).unwrap()),
        ("r=[3,1,1,1]", BlockStructure::from_rm(&[3, 1, 1, 1], &[0, 0]).unwrap()),
    ];

    println!("{:<22} {:>10} {:>10} {:>8}", "structure", "lower", "upper", "gap %");
    for (name, s) in structures {
        let b = bounds_for_matrix(&m, &s, 20_000, 40, 1).unwrap();
        println!(
            "{name:<22} {:>10.5} {:>10.5} {:>7.2}%",
            b.lower,
            b.upper,
            100.0 * (b.upper - b.lower) / b.upper
        );
    }
}
