//! Lagrangian power allocation across quadrature nodes.
//!
//! For a multiplier `lambda` every node independently maximizes
//! `value_i(s) - lambda s^2` over its amplitude `s = sqrt(P)`; `lambda` is
//! then tuned so that the expected power meets the budget.

use super::per_state::TIE_TOL;

/// Points in the per-node power grid (including zero).
pub const POWER_GRID: usize = 64;

/// The power grid spans `[0, POWER_GRID_SPAN * budget]`.
pub const POWER_GRID_SPAN: f64 = 8.0;

/// Leftover budget (relative) above which a duality gap is reported.
pub const GAP_TOL: f64 = 1e-3;

/// Size of the fallback multiplier grid used when a gap is detected.
pub const FALLBACK_LAMBDAS: usize = 200;

/// Relative budget mismatch at which the multiplier search stops.
const BUDGET_TOL: f64 = 1e-13;

/// Per-node payoff as a function of the amplitude `s = sqrt(P)`.
pub(crate) trait NodeObjective {
    fn value(&self, i: usize, s: f64) -> f64;

    /// `d value / ds` and, when cheaply available, the second derivative
    /// (NaN otherwise).
    fn slope(&self, i: usize, s: f64) -> (f64, f64);
}

/// Outcome of an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub power: Vec<f64>,
    pub value: Vec<f64>,
    pub lambda: f64,
    /// Unused budget when it exceeded the gap tolerance at the multiplier
    /// fixed point.
    pub gap: Option<f64>,
}

impl Allocation {
    pub fn objective(&self, weights: &[f64]) -> f64 {
        weights.iter().zip(&self.value).map(|(w, v)| w * v).sum()
    }

    pub fn avg_power(&self, weights: &[f64]) -> f64 {
        weights.iter().zip(&self.power).map(|(w, p)| w * p).sum()
    }
}

pub(crate) struct Allocator<'a, F> {
    weights: &'a [f64],
    budget: f64,
    s_grid: Vec<f64>,
    table: Vec<Vec<f64>>,
    caps: Vec<f64>,
    objective: F,
}

/// `{0}` followed by a geometric grid on `[span 1e-6 budget, span budget]`.
pub fn power_grid(budget: f64) -> Vec<f64> {
    let top = POWER_GRID_SPAN * budget;
    let bottom = top * 1e-6;
    let k = POWER_GRID - 1;
    std::iter::once(0.0)
        .chain((0..k).map(|j| bottom * (top / bottom).powf(j as f64 / (k - 1) as f64)))
        .collect()
}

/// Root of `f` on `[lo, hi]` given `f(lo) > 0 > f(hi)`. Uses Newton steps
/// when the derivative is available and falls back to Illinois regula falsi
/// or bisection to stay inside the bracket.
fn bracketed_root(mut f: impl FnMut(f64) -> (f64, f64), mut lo: f64, mut hi: f64) -> f64 {
    let (mut flo, _) = f(lo);
    let (mut fhi, _) = f(hi);
    let mut x = 0.5 * (lo + hi);
    let mut side = 0i8;
    for it in 0..100 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let newton = x - fx / dfx;
        x = if dfx.is_finite() && dfx < 0.0 && newton > lo && newton < hi {
            newton
        } else if it % 4 == 3 {
            0.5 * (lo + hi)
        } else {
            let t = (lo * fhi - hi * flo) / (fhi - flo);
            if t > lo && t < hi { t } else { 0.5 * (lo + hi) }
        };
    }
    x
}

impl<'a, F: NodeObjective> Allocator<'a, F> {
    /// The budget must be positive.
    pub fn new(weights: &'a [f64], budget: f64, objective: F) -> Self {
        let s_grid: Vec<f64> = power_grid(budget).into_iter().map(f64::sqrt).collect();
        let table = (0..weights.len())
            .map(|i| s_grid.iter().map(|&s| objective.value(i, s)).collect())
            .collect();
        // A node can never use more than the whole budget on its own.
        let caps = weights
            .iter()
            .map(|&w| {
                let cap = (budget / w).min(1e6 * budget).sqrt();
                cap.max(*s_grid.last().expect("grid is non-empty"))
            })
            .collect();
        Self { weights, budget, s_grid, table, caps, objective }
    }

    /// Best amplitude of node `i` at multiplier `lambda`: the grid maximizer
    /// (ties to smaller power) polished to a stationary point in the
    /// neighbouring grid cells.
    fn node(&self, i: usize, lambda: f64) -> (f64, f64) {
        let row = &self.table[i];
        let score = |j: usize| row[j] - lambda * self.s_grid[j] * self.s_grid[j];
        let mut jb = 0;
        for j in 1..row.len() {
            if score(j) > score(jb) + TIE_TOL {
                jb = j;
            }
        }
        let sb = self.s_grid[jb];
        let lo = if jb == 0 { 0.0 } else { self.s_grid[jb - 1] };
        let hi = if jb + 1 < self.s_grid.len() { self.s_grid[jb + 1] } else { self.caps[i] };

        let dphi = |s: f64| {
            let (d1, d2) = self.objective.slope(i, s);
            (d1 - 2.0 * lambda * s, d2 - 2.0 * lambda)
        };
        let (gb, _) = dphi(sb);
        let cand = if gb > 0.0 {
            if dphi(hi).0 >= 0.0 { hi } else { bracketed_root(dphi, sb, hi) }
        } else if gb < 0.0 && lo < sb {
            if dphi(lo).0 <= 0.0 { lo } else { bracketed_root(dphi, lo, sb) }
        } else {
            sb
        };
        let v = self.objective.value(i, cand);
        if cand != sb && v - lambda * cand * cand >= score(jb) {
            (cand * cand, v)
        } else {
            (sb * sb, row[jb])
        }
    }

    fn at(&self, lambda: f64) -> Allocation {
        let (power, value) = (0..self.weights.len()).map(|i| self.node(i, lambda)).unzip();
        Allocation { power, value, lambda, gap: None }
    }

    pub fn solve(&self) -> Allocation {
        let used = |a: &Allocation| a.avg_power(self.weights);
        let free = self.at(0.0);
        if used(&free) <= self.budget {
            return free;
        }

        let mut lo = 0.0;
        let mut lo_alloc = free;
        let mut hi = 1.0;
        let mut hi_alloc = self.at(hi);
        while used(&hi_alloc) > self.budget && hi < 1e300 {
            lo = hi;
            lo_alloc = hi_alloc;
            hi *= 2.0;
            hi_alloc = self.at(hi);
        }

        // Regula falsi on the budget excess, with a bisection step every
        // fourth iteration to guarantee shrinkage across power jumps.
        let mut side = 0i8;
        let mut ex_lo = used(&lo_alloc) - self.budget;
        let mut ex_hi = used(&hi_alloc) - self.budget;
        for it in 0..200 {
            if hi - lo <= 1e-15 * hi || -ex_hi <= BUDGET_TOL * self.budget {
                break;
            }
            let mut mid = (lo * ex_hi - hi * ex_lo) / (ex_hi - ex_lo);
            if it % 4 == 3 || !(mid > lo && mid < hi) {
                mid = 0.5 * (lo + hi);
            }
            let a = self.at(mid);
            let ex = used(&a) - self.budget;
            if ex > 0.0 {
                lo = mid;
                lo_alloc = a;
                ex_lo = ex;
                if side == 1 {
                    ex_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = mid;
                hi_alloc = a;
                ex_hi = ex;
                if side == -1 {
                    ex_lo *= 0.5;
                }
                side = -1;
            }
        }

        let mut best = self.repair(hi_alloc, &lo_alloc);
        let left = self.budget - used(&best);
        if left > GAP_TOL * self.budget {
            best = self.fallback(best, lo, hi);
            best.gap = Some(self.budget - used(&best));
        }
        best
    }

    /// Moves nodes that jumped between the bracketing multipliers back to
    /// their higher-power choice while the budget allows and it helps.
    fn repair(&self, mut alloc: Allocation, richer: &Allocation) -> Allocation {
        let mut used = alloc.avg_power(self.weights);
        for i in 0..self.weights.len() {
            let extra = self.weights[i] * (richer.power[i] - alloc.power[i]);
            if extra > 0.0 && used + extra <= self.budget && richer.value[i] > alloc.value[i] {
                alloc.power[i] = richer.power[i];
                alloc.value[i] = richer.value[i];
                used += extra;
            }
        }
        alloc
    }

    fn fallback(&self, mut best: Allocation, lo: f64, hi: f64) -> Allocation {
        let top = 2.0 * hi.max(lo).max(1e-12);
        for k in 0..FALLBACK_LAMBDAS {
            let lambda = top * k as f64 / (FALLBACK_LAMBDAS - 1) as f64;
            let a = self.at(lambda);
            if a.avg_power(self.weights) <= self.budget
                && a.objective(self.weights) > best.objective(self.weights)
            {
                best = a;
            }
        }
        best
    }
}
