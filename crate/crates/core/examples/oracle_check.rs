//! Reproduces the closed-form rate and conditional variances from the joint
//! covariance of `(U, T, S, X, Y)`.

use crfade::oracle::{build_covariance, gp_rate_oracle, Var};
use crfade::rate::{cond_var_y_given_u, rate_per_state};
use crfade::{ChannelParams, CodingParams, LogBase};

fn main() -> crfade::Result<()> {
    let ch = ChannelParams::new(1.0, 1.0, 2.5)?;
    let (g, p) = (1.3, 2.5);
    let cp = CodingParams::new(0.7, -0.4, 0.35)?;

    let jc = build_covariance(g, p, &cp, &ch)?;
    println!("joint covariance of (U, T, S, X, Y):\n{}", jc.matrix());

    let i_uy = jc.mutual_information(&[Var::U], &[Var::Y], LogBase::Bits)?;
    let i_us = jc.mutual_information(&[Var::U], &[Var::S], LogBase::Bits)?;
    println!("I(U;Y) - I(U;S) = {:.15}", i_uy - i_us);
    println!("oracle rate     = {:.15}", gp_rate_oracle(g, p, &cp, &ch)?);
    println!("closed form     = {:.15}", rate_per_state(g, p, &cp, &ch)?);
    println!("Var(S|U) = {:.15} (d = {})", jc.conditional_variance(Var::S, &[Var::U]).variance, cp.d);
    println!(
        "Var(Y|U) = {:.15} (closed form {:.15})",
        jc.conditional_variance(Var::Y, &[Var::U]).variance,
        cond_var_y_given_u(g, p, &cp, &ch)?
    );
    Ok(())
}
