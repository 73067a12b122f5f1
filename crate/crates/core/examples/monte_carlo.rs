//! Seeded Monte-Carlo check of the distortion and rate at one point.

use crfade::oracle::mc_estimate;
use crfade::rate::rate_per_state;
use crfade::{ChannelParams, CodingParams};

fn main() -> crfade::Result<()> {
    let ch = ChannelParams::new(1.0, 1.0, 2.5)?;
    let (g, p) = (0.8, 3.0);
    let cp = CodingParams::new(0.5, 0.5, 0.4)?;
    for n in [10_000, 100_000, 1_000_000] {
        let est = mc_estimate(g, p, &cp, &ch, n, 42)?;
        println!(
            "n = {n:>8}  Var(S|U) = {:.5} (d = {})  rate = {:.5} bits",
            est.var_s_given_u, cp.d, est.rate_bits
        );
    }
    println!("closed-form rate = {:.5} bits", rate_per_state(g, p, &cp, &ch)?);
    Ok(())
}
