use std::f64::consts::{FRAC_PI_2, PI};

use super::search::{brent_max, nelder_mead_max};
use crate::error::{invalid, Result};
use crate::model::ChannelParams;
use crate::rate::rate_unchecked;

/// Resolution of the polar seed grid (radii and angles).
pub const POLAR_GRID: usize = 64;

/// Angles scanned along the half circle before refinement; odd so that
/// `theta = 0` is on the grid.
pub const CIRCLE_SCAN: usize = 65;

/// Objective values closer than this are treated as ties.
pub const TIE_TOL: f64 = 1e-10;

/// Best correlation pair for one fading state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoOptimum {
    pub rho1: f64,
    pub rho2: f64,
    /// Signed rate in bits; negative when no pair reaches zero.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    r: f64,
    theta: f64,
    rate: f64,
}

impl Candidate {
    fn polar(r: f64, theta: f64, rate: f64) -> Self {
        let theta = if r == 0.0 { 0.0 } else { theta.rem_euclid(2.0 * PI) };
        Self { r, theta, rate }
    }

    /// Preference order: higher rate beyond the tie tolerance, then smaller
    /// radius, then smaller angle.
    fn beats(&self, other: &Self) -> bool {
        if self.rate > other.rate + TIE_TOL {
            return true;
        }
        if self.rate < other.rate - TIE_TOL {
            return false;
        }
        (self.r, self.theta) < (other.r, other.theta)
    }
}

pub(crate) fn check_distortion(d: f64, ch: &ChannelParams) -> Result<()> {
    ch.validate()?;
    if !(d >= ch.d_min() && d <= ch.q) {
        return invalid(format!("distortion d = {d} must lie in [{}, {}]", ch.d_min(), ch.q));
    }
    Ok(())
}

/// Maximizes the per-state rate over the closed unit disk of correlations.
///
/// A polar grid seeds a simplex search; a one-dimensional search along the
/// right half of the unit circle, where the maximum always lies when the input
/// is active, polishes the result.
pub fn optimize_rho_per_state(g: f64, p: f64, d: f64, ch: &ChannelParams) -> Result<RhoOptimum> {
    if !(g.is_finite() && g >= 0.0 && p.is_finite() && p >= 0.0) {
        return invalid(format!("need g >= 0 and P >= 0, got g = {g}, P = {p}"));
    }
    check_distortion(d, ch)?;
    let f = |r: f64, theta: f64| rate_unchecked(g, p, r * theta.cos(), r * theta.sin(), d, ch);

    if g * g * p == 0.0 {
        return Ok(RhoOptimum { rho1: 0.0, rho2: 0.0, rate: f(0.0, 0.0) });
    }

    let m = POLAR_GRID;
    let mut values = Vec::with_capacity(m * m);
    for k in 0..m {
        let r = k as f64 / (m - 1) as f64;
        for j in 0..m {
            let theta = 2.0 * PI * j as f64 / m as f64;
            values.push(Candidate::polar(r, theta, f(r, theta)));
        }
    }
    let top = values.iter().map(|c| c.rate).fold(f64::NEG_INFINITY, f64::max);
    let seed = *values
        .iter()
        .find(|c| c.rate >= top - TIE_TOL)
        .expect("grid is non-empty");

    let project = |x: &[f64; 2]| (x[0].clamp(0.0, 1.0), x[1]);
    let (x, _) = nelder_mead_max(
        |x: &[f64; 2]| {
            let (r, t) = project(x);
            f(r, t)
        },
        [seed.r, seed.theta],
        1.0 / (m - 1) as f64,
        1e-15,
        2000,
    );
    let (r, t) = project(&x);
    let simplex = Candidate::polar(r, t, f(r, t));

    let (t, rate) = circle_max(|t| f(1.0, t), CIRCLE_SCAN, 1e-10);
    let circle = Candidate::polar(1.0, t, rate);

    let mut best = seed;
    for c in [simplex, circle] {
        if c.beats(&best) {
            best = c;
        }
    }
    Ok(RhoOptimum {
        rho1: best.r * best.theta.cos(),
        rho2: best.r * best.theta.sin(),
        rate: best.rate,
    })
}

/// Maximum of `f(theta)` on `[-pi/2, pi/2]` by a coarse scan and Brent
/// refinement of the best bracket; ties go to the smaller angle.
pub(crate) fn circle_max(mut f: impl FnMut(f64) -> f64, scan: usize, xtol: f64) -> (f64, f64) {
    let h = PI / (scan - 1) as f64;
    let at = |j: usize| -FRAC_PI_2 + h * j as f64;
    let vals: Vec<f64> = (0..scan).map(|j| f(at(j))).collect();
    let mut jb = 0;
    for j in 1..scan {
        if vals[j] > vals[jb] + TIE_TOL {
            jb = j;
        }
    }
    let lo = at(jb.saturating_sub(1));
    let hi = at((jb + 1).min(scan - 1));
    let (t, v) = brent_max(&mut f, lo, hi, xtol);
    if v > vals[jb] {
        (t, v)
    } else {
        (at(jb), vals[jb])
    }
}
