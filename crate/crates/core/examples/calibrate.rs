//! Prints benchmark, ablation and sweep summaries for a set of overrides.
//!
//! cargo run --release --example calibrate -- arena.tie_radius=3.0
//!
//! WHICH selects the experiments: any of b(enchmark), a(blation), s(weep).

use exes_lab::experiments::{run_ablation, run_benchmark, run_payoff_sweep, ExperimentRun};
use exes_lab::ExperimentConfig;

fn print(run: &ExperimentRun) {
    for c in &run.report.conditions {
        println!(
            "{:<22} eff {:.3}±{:.3}  fair {:.3}±{:.3}  stab {:.3}±{:.3}  ties {:.3}  rel {:.3}±{:.3}",
            c.label,
            c.efficiency.mean,
            c.efficiency.se,
            c.fairness.mean,
            c.fairness.se,
            c.stability.mean,
            c.stability.se,
            c.tie_fraction.mean,
            c.reliance.mean,
            c.reliance.se
        );
    }
    for t in &run.report.tests {
        if t.groups.len() == 2 || t.result.method.starts_with("spearman") {
            println!(
                "  {:?} {:?} stat {:.3} p {:.4}",
                t.metric, t.groups, t.result.statistic, t.result.p_value
            );
        }
    }
}

fn main() -> exes_lab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let which = std::env::var("WHICH").unwrap_or_else(|_| "bas".into());
    let config = ExperimentConfig::default().with_overrides(&args)?;
    if which.contains('b') {
        print(&run_benchmark(&config)?);
    }
    if which.contains('a') {
        print(&run_ablation(&config)?);
    }
    if which.contains('s') {
        print(&run_payoff_sweep(&config)?);
    }
    Ok(())
}
