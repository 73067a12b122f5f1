//! Minimum average power needed for a target rate across distortion levels.

use crfade::optimize::{power_curve, Mode};
use crfade::quadrature::make_rule;
use crfade::{ChannelParams, FadingModel};

fn main() -> crfade::Result<()> {
    let ch = ChannelParams::new(1.0, 1.0, 1.0)?;
    let rule = make_rule(&FadingModel::Rayleigh, 64)?;
    let grid: Vec<f64> = (1..=5).map(|k| 0.2 * k as f64).collect();
    for rate in [0.1, 0.3] {
        println!("R = {rate} bits");
        for (d, pt) in grid.iter().zip(power_curve(&ch, &rule, rate, &grid, Mode::FixedRho)?) {
            match pt {
                Some(pt) => println!("  D = {d:.2}  P_min = {:.6}  (d = {:.4})", pt.power, pt.solution.d),
                None => println!("  D = {d:.2}  unreachable"),
            }
        }
    }
    Ok(())
}
