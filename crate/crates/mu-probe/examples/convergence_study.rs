//! Randomized convergence study: how often does the data-driven estimate
//! converge and match the model-based engine, as a function of plant
//! dimension and block-structure family?
//!
//! Configuration 1 is a single full block, 2 is all scalar blocks, 3 is a
//! parity-split mix. Full blocks excite richer subspaces, so configuration
//! 1 should dominate.

use mu_probe::bench::{run_convergence_study, study_structure, BenchCampaign};

fn main() {
    let campaign = BenchCampaign {
        seed: 1,
        ..BenchCampaign::default()
    };
    let rows = run_convergence_study(&campaign, &[2, 3], 10, 64, 0.02).unwrap();

    println!("{:>2} {:>8} {:>24} {:>8}", "n", "config", "structure", "% ok");
    for r in &rows {
        let (rr, mm) = study_structure(r.config, r.n).unwrap().to_rm();
        println!(
            "{:>2} {:>8} {:>24} {:>7.1}%",
            r.n,
            r.config,
            format!("r={rr:?} m={mm:?}"),
            r.pct_converged
        );
    }
}
