//! Structure sweep on the default 3x3 benchmark plant: eight block
//! structures, two excitation lengths, data-driven estimate vs the
//! model-based engine on the same grid.

use mu_probe::bench::{default_sweep_plant, run_sweep, sweep_structures, BenchCampaign};

fn main() {
    let plant = default_sweep_plant(0).unwrap();
    let campaign = BenchCampaign::default();
    let report = run_sweep(&campaign, &plant, &[128, 256]).unwrap();

    let descriptions: Vec<String> = sweep_structures()
        .iter()
        .map(|s| {
            let (r, m) = s.to_rm();
            format!("r={r:?} m={m:?}")
        })
        .collect();

    println!(
        "{:<28} {:>5} {:>10} {:>10} {:>10}  conv",
        "structure", "N", "mu~", "mu-", "model"
    );
    for row in &report.rows {
        println!(
            "{:<28} {:>5} {:>10.5} {:>10.5} {:>10.5}  {}",
            descriptions[row.case_index - 1],
            row.n_freq,
            row.mu_tilde,
            row.mu_bar,
            row.mu_model,
            row.converged
        );
    }

    // iteration trace of the best-behaved case (one full 3x3 block)
    println!("\ncase 2 trace at N=256:");
    for t in report.traces.iter().filter(|t| t.case_index == 2) {
        println!("  iteration {:>2}: mu = {:.6}", t.iteration, t.mu);
    }
}
