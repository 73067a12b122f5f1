//! Runs the identity suite behind `crfade validate` with a small budget.

use crfade::cli::validate::{run, ValidateOptions};
use crfade::ChannelParams;

fn main() -> crfade::Result<()> {
    let ch = ChannelParams::new(1.0, 1.0, 2.5)?;
    let opts = ValidateOptions { draws: 1000, samples: 100_000, seed: 7, nodes: 64, tolerance_scale: 1.0 };
    let report = run(&ch, &opts)?;
    for c in &report.checks {
        let verdict = if c.passed { "ok" } else { "FAILED" };
        println!("{:<36} {:>6} cases  max error {:.2e}  tol {:.0e}  {verdict}", c.name, c.cases, c.max_error, c.tolerance);
    }
    Ok(())
}
