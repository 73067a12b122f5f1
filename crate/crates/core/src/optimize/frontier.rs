use rayon::prelude::*;
use serde::Serialize;

use super::{maximize_rate, Mode, RatePoint, Solution};
use crate::error::{invalid, Error, Result};
use crate::model::{ChannelParams, PerStatePolicy};
use crate::quadrature::QuadratureRule;

/// Default number of distortion values on a frontier grid.
pub const FRONTIER_GRID: usize = 50;

/// First budget tried by [`min_power`].
pub const MIN_POWER_START: f64 = 1e-6;

/// Largest budget tried by [`min_power`].
pub const MIN_POWER_CAP: f64 = 65536.0;

/// Relative bracket width at which [`min_power`] stops bisecting.
pub const MIN_POWER_REL_WIDTH: f64 = 1e-9;

/// One vertex of a rate-distortion frontier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub distortion: f64,
    pub rate: f64,
    /// Distortion parameter of the achieving scheme; never above
    /// `distortion`.
    pub d_used: f64,
    pub mode: Mode,
    pub policy: PerStatePolicy,
}

/// Rate-distortion frontier, ascending in distortion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
    /// Whether `points` has been reduced to its upper concave envelope.
    pub envelope: bool,
    /// Grid values with no achievable scheme at or below them.
    pub infeasible: Vec<f64>,
}

impl Frontier {
    /// Envelope rate at distortion `dist`, interpolating linearly between
    /// vertices and flat beyond the last one; `None` below the first vertex.
    pub fn rate_at(&self, dist: f64) -> Option<f64> {
        let first = self.points.first()?;
        if dist < first.distortion {
            return None;
        }
        let k = self.points.partition_point(|p| p.distortion <= dist);
        if k == self.points.len() {
            return Some(self.points[k - 1].rate);
        }
        let (a, b) = (&self.points[k - 1], &self.points[k]);
        let t = (dist - a.distortion) / (b.distortion - a.distortion);
        Some(a.rate + t * (b.rate - a.rate))
    }
}

/// `n` log-spaced distortion values on `[1e-3 q, q]`, ending exactly at `q`.
pub fn default_grid(q: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![q],
        _ => (0..n)
            .map(|k| if k + 1 == n { q } else { q * 1e-3_f64.powf(1.0 - k as f64 / (n - 1) as f64) })
            .collect(),
    }
}

/// Indices of the upper concave envelope of points sorted by abscissa.
/// Collinear points stay; of equal abscissas only the highest survives.
fn envelope_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(points.len());
    for (k, &(x, y)) in points.iter().enumerate() {
        if let Some(&last) = hull.last() {
            if points[last].0 == x {
                if points[last].1 >= y {
                    continue;
                }
                hull.pop();
            }
        }
        while hull.len() >= 2 {
            let (a, b) = (points[hull[hull.len() - 2]], points[hull[hull.len() - 1]]);
            let cross = (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
            let scale = ((b.0 - a.0).hypot(b.1 - a.1)) * ((x - a.0).hypot(y - a.1));
            if cross > 1e-14 * scale {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// Upper concave envelope of `(D, R)` points given in ascending `D`.
pub fn concave_envelope(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    envelope_indices(points).into_iter().map(|k| points[k]).collect()
}

/// Traces the rate-distortion frontier at budget `ch.p_avg` over the
/// distortion grid.
///
/// Each grid value is first given the best rate of any scheme with distortion
/// parameter at or below it; the envelope then adds time sharing.
pub fn rd_frontier(ch: &ChannelParams, rule: &QuadratureRule, grid: &[f64], mode: Mode) -> Result<Frontier> {
    if grid.is_empty() {
        return invalid("distortion grid is empty");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("distortion grid must be strictly ascending");
    }
    let solved: Vec<RatePoint> = grid
        .par_iter()
        .map(|&d| maximize_rate(ch, rule, d, mode))
        .collect::<Result<_>>()?;

    let mut closed: Vec<Option<&Solution>> = Vec::with_capacity(grid.len());
    let mut running: Option<&Solution> = None;
    for pt in &solved {
        if let RatePoint::Achievable(s) = pt {
            if running.is_none_or(|r| s.rate > r.rate) {
                running = Some(s);
            }
        }
        closed.push(running);
    }

    let mut infeasible = Vec::new();
    let mut raw = Vec::new();
    for (&dist, sol) in grid.iter().zip(&closed) {
        match sol {
            Some(s) => raw.push(FrontierPoint {
                distortion: dist,
                rate: s.rate,
                d_used: s.d,
                mode,
                policy: s.policy.clone(),
            }),
            None => infeasible.push(dist),
        }
    }
    let coords: Vec<(f64, f64)> = raw.iter().map(|p| (p.distortion, p.rate)).collect();
    let keep = envelope_indices(&coords);
    let mut points = Vec::with_capacity(keep.len());
    let mut it = raw.into_iter().enumerate();
    for k in keep {
        let (_, p) = it.by_ref().find(|(j, _)| *j == k).expect("envelope indices ascend");
        points.push(p);
    }
    Ok(Frontier { points, envelope: true, infeasible })
}

/// Minimum-power answer for one `(R, D)` target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerPoint {
    pub power: f64,
    /// The scheme meeting the target at `power`; its `d` may be below the
    /// requested distortion.
    pub solution: Solution,
}

fn best_at(ch: &ChannelParams, rule: &QuadratureRule, p: f64, d: f64, mode: Mode) -> Result<Solution> {
    Ok(maximize_rate(&ch.with_budget(p), rule, d, mode)?.into_solution())
}

/// Smallest average power at which distortion parameter `d` supports rate
/// `r_target`.
///
/// The budget is bracketed by doubling from [`MIN_POWER_START`] up to
/// [`MIN_POWER_CAP`] and the bracket is then shrunk to relative width
/// [`MIN_POWER_REL_WIDTH`]. Shrinking uses regula falsi on the monotone rate
/// excess, with every fourth step a plain bisection.
pub fn min_power_at(
    ch: &ChannelParams,
    rule: &QuadratureRule,
    r_target: f64,
    d: f64,
    mode: Mode,
) -> Result<PowerPoint> {
    if !(r_target.is_finite() && r_target >= 0.0) {
        return invalid(format!("target rate {r_target} must be non-negative"));
    }
    let zero = best_at(ch, rule, 0.0, d, mode)?;
    if zero.rate >= r_target {
        return Ok(PowerPoint { power: 0.0, solution: zero });
    }
    let (mut lo, mut ex_lo) = (0.0, zero.rate - r_target);
    let mut hi = MIN_POWER_START;
    let (mut best, mut ex_hi) = loop {
        let s = best_at(ch, rule, hi, d, mode)?;
        if s.rate >= r_target {
            let ex = s.rate - r_target;
            break (s, ex);
        }
        if hi >= MIN_POWER_CAP {
            return Err(Error::Unreachable { rate: r_target, distortion: d, cap: MIN_POWER_CAP });
        }
        (lo, ex_lo) = (hi, s.rate - r_target);
        hi = (2.0 * hi).min(MIN_POWER_CAP);
    };

    let mut side = 0i8;
    let mut it = 0;
    while hi - lo > MIN_POWER_REL_WIDTH * hi {
        let mut mid = (lo * ex_hi - hi * ex_lo) / (ex_hi - ex_lo);
        if it % 4 == 3 || !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        it += 1;
        let s = best_at(ch, rule, mid, d, mode)?;
        let ex = s.rate - r_target;
        if ex >= 0.0 {
            (hi, ex_hi, best) = (mid, ex, s);
            if side == -1 {
                ex_lo *= 0.5;
            }
            side = -1;
        } else {
            (lo, ex_lo) = (mid, ex);
            if side == 1 {
                ex_hi *= 0.5;
            }
            side = 1;
        }
    }
    Ok(PowerPoint { power: hi, solution: best })
}

fn power_or_inf(
    ch: &ChannelParams,
    rule: &QuadratureRule,
    r: f64,
    d: f64,
    mode: Mode,
) -> Result<Option<PowerPoint>> {
    match min_power_at(ch, rule, r, d, mode) {
        Ok(p) => Ok(Some(p)),
        Err(Error::Unreachable { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cheaper(a: Option<PowerPoint>, b: Option<PowerPoint>) -> Option<PowerPoint> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.power < a.power { b } else { a }),
        (a, b) => a.or(b),
    }
}

/// Golden-section search for the distortion parameter in `[lo, hi]` that
/// needs the least power, assuming a single minimum.
fn cheapest_parameter(
    ch: &ChannelParams,
    rule: &QuadratureRule,
    r: f64,
    lo: f64,
    hi: f64,
    mode: Mode,
) -> Result<Option<PowerPoint>> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let cost = |p: &Option<PowerPoint>| p.as_ref().map_or(f64::INFINITY, |p| p.power);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut p1 = power_or_inf(ch, rule, r, x1, mode)?;
    let mut p2 = power_or_inf(ch, rule, r, x2, mode)?;
    while b - a > 1e-4 * b {
        if cost(&p1) <= cost(&p2) {
            (b, x2, p2) = (x2, x1, p1);
            x1 = b - INV_PHI * (b - a);
            p1 = power_or_inf(ch, rule, r, x1, mode)?;
        } else {
            (a, x1, p1) = (x1, x2, p2);
            x2 = a + INV_PHI * (b - a);
            p2 = power_or_inf(ch, rule, r, x2, mode)?;
        }
    }
    Ok(cheaper(p1, p2))
}

/// Smallest average power at which rate `r_target` is achievable with
/// distortion at most `d_target`.
///
/// Besides the parameter `d = d_target` itself, smaller parameters are
/// searched when the required power is still falling as `d` decreases, since
/// the best rate is not monotone in `d` near `Q`.
pub fn min_power(
    ch: &ChannelParams,
    rule: &QuadratureRule,
    r_target: f64,
    d_target: f64,
    mode: Mode,
) -> Result<PowerPoint> {
    if !(d_target > 0.0 && d_target <= ch.q) {
        return invalid(format!("distortion {d_target} must lie in (0, {}]", ch.q));
    }
    let unreachable = Error::Unreachable { rate: r_target, distortion: d_target, cap: MIN_POWER_CAP };
    let at = power_or_inf(ch, rule, r_target, d_target, mode)?;
    if at.as_ref().is_some_and(|p| p.power == 0.0) {
        return Ok(at.expect("checked"));
    }
    let step = 0.98;
    let below = d_target * step;
    if below < ch.d_min() {
        return at.ok_or(unreachable);
    }
    let next = power_or_inf(ch, rule, r_target, below, mode)?;
    let falling = match (&at, &next) {
        (Some(a), Some(n)) => n.power < a.power,
        (None, Some(_)) => true,
        _ => false,
    };
    if !falling {
        return at.ok_or(unreachable);
    }
    // Walk down geometrically until the power turns back up, then refine.
    let (mut hi, mut mid, mut mid_p) = (d_target, below, next);
    loop {
        let lo = (mid * step * step).max(ch.d_min());
        let lo_p = power_or_inf(ch, rule, r_target, lo, mode)?;
        let lo_cost = lo_p.as_ref().map_or(f64::INFINITY, |p| p.power);
        let mid_cost = mid_p.as_ref().map_or(f64::INFINITY, |p| p.power);
        if lo_cost >= mid_cost || lo == ch.d_min() {
            let refined = cheapest_parameter(ch, rule, r_target, lo, hi, mode)?;
            let best = cheaper(cheaper(at, mid_p), cheaper(lo_p, refined));
            return best.ok_or(unreachable);
        }
        (hi, mid, mid_p) = (mid, lo, lo_p);
    }
}

/// Minimum power over an ascending distortion grid; `None` marks
/// unreachable targets. The result is a running minimum, since any scheme
/// meeting a distortion also meets every larger one.
pub fn power_curve(
    ch: &ChannelParams,
    rule: &QuadratureRule,
    r_target: f64,
    grid: &[f64],
    mode: Mode,
) -> Result<Vec<Option<PowerPoint>>> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("distortion grid must be strictly ascending");
    }
    let raw: Vec<Option<PowerPoint>> = grid
        .par_iter()
        .map(|&d| match min_power(ch, rule, r_target, d, mode) {
            Ok(p) => Ok(Some(p)),
            Err(Error::Unreachable { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<Option<PowerPoint>> = Vec::with_capacity(raw.len());
    for p in raw {
        let prev = out.last().cloned().flatten();
        out.push(cheaper(prev, p));
    }
    Ok(out)
}
