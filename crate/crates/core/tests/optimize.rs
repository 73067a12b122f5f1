use crfade::optimize::{default_grid, maximize_rate, min_power, min_power_at, rd_frontier, Mode};
use crfade::quadrature::{avg_power, make_rule};
use crfade::{ChannelParams, FadingModel};

fn reference() -> ChannelParams {
    ChannelParams::new(1.0, 1.0, 2.5).unwrap()
}

#[test]
fn doubling_nodes_barely_moves_the_frontier() {
    let ch = reference();
    let grid = default_grid(ch.q, 50);
    let frontier = |n| rd_frontier(&ch, &make_rule(&FadingModel::Rayleigh, n).unwrap(), &grid, Mode::FixedRho).unwrap();
    let (coarse, fine) = (frontier(64), frontier(128));
    for &d in &grid {
        match (coarse.rate_at(d), fine.rate_at(d)) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-6, "D = {d}: {a} vs {b}"),
            (None, None) => {}
            other => panic!("D = {d}: feasibility differs {other:?}"),
        }
    }
}

/// Rates far from full distortion converge fast in the node count; close to
/// it the optimal power switches off below a fading threshold and the
/// discretized optimum converges only algebraically.
#[test]
fn per_distortion_rates_converge_in_the_node_count() {
    let ch = reference();
    let at = |n, d| {
        maximize_rate(&ch, &make_rule(&FadingModel::Rayleigh, n).unwrap(), d, Mode::FixedRho)
            .unwrap()
            .into_solution()
            .rate
    };
    for d in [0.3, 0.6, 0.87] {
        assert!((at(64, d) - at(128, d)).abs() < 1e-6, "d = {d}");
    }
    assert!((at(128, 1.0) - at(256, 1.0)).abs() < 1e-5);
}

#[test]
fn policies_respect_the_budget() {
    let ch = reference();
    let rule = make_rule(&FadingModel::Rayleigh, 64).unwrap();
    for mode in [Mode::FixedRho, Mode::AdaptiveRho] {
        let s = maximize_rate(&ch, &rule, 0.5, mode).unwrap().into_solution();
        assert!(avg_power(&rule, &s.policy) <= ch.p_avg * (1.0 + 1e-12));
        assert!(s.policy.rho1.iter().zip(&s.policy.rho2).all(|(a, b)| a * a + b * b <= 1.0 + 1e-12));
    }
}

#[test]
fn more_power_never_hurts() {
    let rule = make_rule(&FadingModel::Rayleigh, 32).unwrap();
    let mut last = f64::NEG_INFINITY;
    for p in [0.5, 1.0, 2.5, 5.0] {
        let ch = ChannelParams::new(1.0, 1.0, p).unwrap();
        let r = maximize_rate(&ch, &rule, 0.5, Mode::FixedRho).unwrap().into_solution().rate;
        assert!(r >= last - 1e-9, "P = {p}: {r} < {last}");
        last = r;
    }
}

#[test]
fn static_channel_dominates_rayleigh() {
    let ch = reference();
    let grid = default_grid(ch.q, 20);
    let fading = rd_frontier(&ch, &make_rule(&FadingModel::Rayleigh, 64).unwrap(), &grid, Mode::FixedRho).unwrap();
    let fixed = rd_frontier(&ch, &make_rule(&FadingModel::Degenerate { g0: 1.0 }, 1).unwrap(), &grid, Mode::FixedRho)
        .unwrap();
    for &d in &grid {
        if let Some(r) = fading.rate_at(d) {
            assert!(fixed.rate_at(d).unwrap() >= r, "D = {d}");
        }
    }
    assert!(fixed.rate_at(ch.q).unwrap() > fading.rate_at(ch.q).unwrap());
    assert!(fading.points.iter().all(|p| p.d_used <= p.distortion));
}

#[test]
fn min_power_inverts_the_rate() {
    let ch = reference();
    let rule = make_rule(&FadingModel::Rayleigh, 32).unwrap();
    let target = 0.2;
    let pt = min_power_at(&ch, &rule, target, 0.5, Mode::FixedRho).unwrap();
    let at = |p: f64| maximize_rate(&ch.with_budget(p), &rule, 0.5, Mode::FixedRho).unwrap().into_solution().rate;
    assert!(at(pt.power) >= target - 1e-12);
    assert!(at(pt.power * (1.0 - 1e-6)) < target);
    let free = min_power(&ch, &rule, target, 0.5, Mode::FixedRho).unwrap();
    assert!(free.power <= pt.power);
    assert!(free.solution.d <= 0.5);
}

#[test]
fn zero_rate_at_full_distortion_needs_no_power() {
    let ch = reference();
    let rule = make_rule(&FadingModel::Rayleigh, 16).unwrap();
    assert_eq!(min_power(&ch, &rule, 0.0, 1.0, Mode::FixedRho).unwrap().power, 0.0);
}
