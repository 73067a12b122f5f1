//! Rate-distortion frontier under Rayleigh fading next to the non-fading
//! channel with the same budget.

use crfade::optimize::{default_grid, rd_frontier, Mode};
use crfade::quadrature::make_rule;
use crfade::{ChannelParams, FadingModel};

fn main() -> crfade::Result<()> {
    let ch = ChannelParams::new(1.0, 1.0, 2.5)?;
    let grid = default_grid(ch.q, 50);
    let fading = rd_frontier(&ch, &make_rule(&FadingModel::Rayleigh, 64)?, &grid, Mode::FixedRho)?;
    let fixed = rd_frontier(&ch, &make_rule(&FadingModel::Degenerate { g0: 1.0 }, 1)?, &grid, Mode::FixedRho)?;

    println!("{:>10} {:>12} {:>12}", "D", "R rayleigh", "R static");
    for &d in grid.iter().step_by(5).chain(std::iter::once(&ch.q)) {
        let show = |r: Option<f64>| r.map_or("-".to_string(), |r| format!("{r:.6}"));
        println!("{d:>10.5} {:>12} {:>12}", show(fading.rate_at(d)), show(fixed.rate_at(d)));
    }
    println!("frontier vertices (D, R, d used):");
    for p in &fading.points {
        println!("  {:.6} {:.6} {:.6}", p.distortion, p.rate, p.d_used);
    }
    Ok(())
}
