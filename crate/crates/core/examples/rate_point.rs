//! Per-state rate, feasibility and the best correlation pair at one fading
//! amplitude.
//!
//!     cargo run --example rate_point -- 1.0 2.5 0.9

use crfade::optimize::optimize_rho_per_state;
use crfade::rate::{cond_var_y_given_u, kappa_member, rate_per_state};
use crfade::{ChannelParams, CodingParams};

fn main() -> crfade::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let (g, p, d) = match args.as_slice() {
        [g, p, d] => (*g, *p, *d),
        _ => (1.0, 2.5, 0.9),
    };
    let ch = ChannelParams::new(1.0, 1.0, p)?;

    println!("g = {g}, P = {p}, d = {d}");
    for (rho1, rho2) in [(0.0, 0.0), (0.9, 0.0), (0.6, 0.6), (-0.5, 0.3)] {
        let cp = CodingParams::new(rho1, rho2, d)?;
        println!(
            "  rho = ({rho1:+.2}, {rho2:+.2})  R = {:+.6} bits  feasible = {:5}  Var(Y|U) = {:.4}",
            rate_per_state(g, p, &cp, &ch)?,
            kappa_member(g, p, &cp, &ch),
            cond_var_y_given_u(g, p, &cp, &ch)?,
        );
    }
    let best = optimize_rho_per_state(g, p, d, &ch)?;
    println!("  best rho = ({:.6}, {:.6})  R = {:.6} bits", best.rho1, best.rho2, best.rate);
    Ok(())
}
