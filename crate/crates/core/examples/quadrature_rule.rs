//! Gauss rule for Rayleigh fading and its moments.

use crfade::quadrature::{expect, make_rule};
use crfade::FadingModel;

fn main() -> crfade::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(64, |a| a.parse().expect("node count"));
    let rule = make_rule(&FadingModel::Rayleigh, n)?;
    println!("{n} nodes, first five:");
    for (g, w) in rule.nodes.iter().zip(&rule.weights).take(5) {
        println!("  g = {g:.12}  w = {w:.6e}");
    }
    let exact = [(0, 1.0), (1, std::f64::consts::PI.sqrt() / 2.0), (2, 1.0), (4, 2.0)];
    for (k, m) in exact {
        let q = expect(&rule, |g| g.powi(k))?;
        println!("E[G^{k}] = {q:.15}  exact {m:.15}  error {:.1e}", (q - m).abs());
    }
    Ok(())
}
