//! Ergodic rate maximization, the rate-distortion frontier and its inversion
//! into minimum power.
//!
//! For active states the rate is maximized on the right half of the unit
//! circle of correlations: raising `rho1 >= 0` with `rho2` held fixed never
//! lowers the rate, and flipping the sign of `rho1` never raises it. Both the
//! shared-pair search and the per-node search therefore run over a single
//! angle `theta`, with `(rho1, rho2) = (cos theta, sin theta)`.

mod allocate;
mod frontier;
mod objective;
mod per_state;
mod search;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use allocate::{power_grid, Allocation, FALLBACK_LAMBDAS, GAP_TOL, POWER_GRID, POWER_GRID_SPAN};
pub use frontier::{
    concave_envelope, default_grid, min_power, min_power_at, power_curve, rd_frontier, Frontier, FrontierPoint, PowerPoint,
    FRONTIER_GRID, MIN_POWER_CAP, MIN_POWER_REL_WIDTH, MIN_POWER_START,
};
pub use per_state::{optimize_rho_per_state, RhoOptimum, CIRCLE_SCAN, POLAR_GRID, TIE_TOL};
pub use search::{brent_max, nelder_mead_max};

use allocate::Allocator;
use objective::{best_angle, PerNode, SharedPair};
use per_state::{check_distortion, circle_max};

use crate::error::{Error, Result};
use crate::model::{ChannelParams, PerStatePolicy};
use crate::quadrature::{avg_power, ergodic_rate, QuadratureRule};
use crate::rate::rate_unchecked;

/// Angles scanned by the shared-pair search before refinement.
pub const SHARED_SCAN: usize = 33;

/// How correlations may depend on the fading state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One `(rho1, rho2)` pair for every state; only power adapts.
    #[default]
    FixedRho,
    /// Power and correlations adapt per state.
    AdaptiveRho,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FixedRho => "fixed-rho",
            Mode::AdaptiveRho => "adaptive-rho",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-rho" => Ok(Mode::FixedRho),
            "adaptive-rho" => Ok(Mode::AdaptiveRho),
            other => Err(Error::InvalidParameter(format!(
                "mode must be fixed-rho or adaptive-rho, got {other:?}"
            ))),
        }
    }
}

/// Best policy found for one distortion parameter and budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    /// Expected rate of `policy` in bits, recomputed from the policy.
    pub rate: f64,
    pub d: f64,
    pub budget: f64,
    pub mode: Mode,
    pub policy: PerStatePolicy,
    /// Power multiplier at the returned allocation.
    pub lambda: f64,
    /// States whose own rate is non-negative. The feasibility sign test is
    /// applied to the expected rate; this count is informational.
    pub nonnegative_states: usize,
    /// Unused budget when the multiplier search left a duality gap.
    pub duality_gap: Option<f64>,
}

/// Result of [`maximize_rate`].
#[derive(Debug, Clone, PartialEq)]
pub enum RatePoint {
    /// The best expected rate is non-negative.
    Achievable(Solution),
    /// Even the best policy has a negative expected rate; the distortion
    /// parameter is outside the feasible set at this budget.
    Infeasible(Solution),
}

impl RatePoint {
    pub fn solution(&self) -> &Solution {
        match self {
            RatePoint::Achievable(s) | RatePoint::Infeasible(s) => s,
        }
    }

    pub fn into_solution(self) -> Solution {
        match self {
            RatePoint::Achievable(s) | RatePoint::Infeasible(s) => s,
        }
    }

    pub fn is_achievable(&self) -> bool {
        matches!(self, RatePoint::Achievable(_))
    }

    /// The rate if achievable.
    pub fn rate(&self) -> Option<f64> {
        match self {
            RatePoint::Achievable(s) => Some(s.rate),
            RatePoint::Infeasible(_) => None,
        }
    }
}

/// Maximizes the expected rate at distortion parameter `d` under the average
/// power budget `ch.p_avg`.
pub fn maximize_rate(ch: &ChannelParams, rule: &QuadratureRule, d: f64, mode: Mode) -> Result<RatePoint> {
    check_distortion(d, ch)?;
    let fixed = maximize_fixed(ch, rule, d)?;
    let best = match mode {
        Mode::FixedRho => fixed,
        Mode::AdaptiveRho => {
            let adaptive = maximize_adaptive(ch, rule, d)?;
            // The shared pair is one admissible adaptive policy.
            if adaptive.rate >= fixed.rate {
                adaptive
            } else {
                Solution { mode: Mode::AdaptiveRho, ..fixed }
            }
        }
    };
    let best = if d == ch.q && best.rate < 0.0 { silent(ch, rule, d, mode)? } else { best };
    Ok(if best.rate >= 0.0 { RatePoint::Achievable(best) } else { RatePoint::Infeasible(best) })
}

fn finish(
    ch: &ChannelParams,
    rule: &QuadratureRule,
    d: f64,
    mode: Mode,
    policy: PerStatePolicy,
    lambda: f64,
    gap: Option<f64>,
) -> Result<Solution> {
    let rate = ergodic_rate(rule, &policy, d, ch)?;
    let nonnegative_states = (0..policy.len())
        .filter(|&i| rate_unchecked(policy.nodes[i], policy.power[i], policy.rho1[i], policy.rho2[i], d, ch) >= 0.0)
        .count();
    debug_assert!(avg_power(rule, &policy) <= ch.p_avg * (1.0 + 1e-9));
    Ok(Solution {
        rate,
        d,
        budget: ch.p_avg,
        mode,
        policy,
        lambda,
        nonnegative_states,
        duality_gap: gap,
    })
}

fn silent(ch: &ChannelParams, rule: &QuadratureRule, d: f64, mode: Mode) -> Result<Solution> {
    let policy = PerStatePolicy::silent(&rule.nodes, &rule.weights);
    finish(ch, rule, d, mode, policy, 0.0, None)
}

fn shared_allocation(ch: &ChannelParams, rule: &QuadratureRule, d: f64, theta: f64) -> Allocation {
    Allocator::new(&rule.weights, ch.p_avg, SharedPair::new(&rule.nodes, theta, d, ch)).solve()
}

fn maximize_fixed(ch: &ChannelParams, rule: &QuadratureRule, d: f64) -> Result<Solution> {
    if ch.p_avg == 0.0 {
        return silent(ch, rule, d, Mode::FixedRho);
    }
    let (theta, _) = circle_max(
        |t| shared_allocation(ch, rule, d, t).objective(&rule.weights),
        SHARED_SCAN,
        1e-9,
    );
    let alloc = shared_allocation(ch, rule, d, theta);
    let n = rule.len();
    let policy = PerStatePolicy {
        nodes: rule.nodes.clone(),
        weights: rule.weights.clone(),
        power: alloc.power,
        rho1: vec![theta.cos(); n],
        rho2: vec![theta.sin(); n],
    };
    finish(ch, rule, d, Mode::FixedRho, policy, alloc.lambda, alloc.gap)
}

fn maximize_adaptive(ch: &ChannelParams, rule: &QuadratureRule, d: f64) -> Result<Solution> {
    if ch.p_avg == 0.0 {
        return silent(ch, rule, d, Mode::AdaptiveRho);
    }
    let alloc = Allocator::new(&rule.weights, ch.p_avg, PerNode { nodes: &rule.nodes, d, ch }).solve();
    let n = rule.len();
    let mut policy = PerStatePolicy::silent(&rule.nodes, &rule.weights);
    for i in 0..n {
        let p = alloc.power[i];
        policy.power[i] = p;
        if p > 0.0 && rule.nodes[i] > 0.0 {
            let (t, _) = best_angle(rule.nodes[i], p, d, ch);
            policy.rho1[i] = t.cos();
            policy.rho2[i] = t.sin();
        }
    }
    finish(ch, rule, d, Mode::AdaptiveRho, policy, alloc.lambda, alloc.gap)
}
