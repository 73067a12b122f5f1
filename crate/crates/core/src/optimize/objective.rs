//! Per-node payoffs fed to the power allocator.

use std::f64::consts::LN_2;

use super::allocate::NodeObjective;
use super::per_state::circle_max;
use crate::model::ChannelParams;
use crate::rate::{rate_unchecked, sqrt_clamped};

/// Angles scanned per state by the adaptive search.
pub(crate) const ADAPTIVE_SCAN: usize = 17;

/// The per-state rate at fixed correlations, written over the amplitude
/// `s = sqrt(P)` as `1/2 log2(d N(s) / (Q D(s)))` with quadratic `N`, `D`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadForm {
    n: [f64; 3],
    e: [f64; 3],
    scale: f64,
}

impl QuadForm {
    pub fn new(g: f64, rho1: f64, rho2: f64, d: f64, ch: &ChannelParams) -> Self {
        let a0 = sqrt_clamped(ch.q - d);
        let b0 = sqrt_clamped(d);
        Self {
            n: [ch.q + ch.sigma_z2, 2.0 * g * (rho1 * a0 + rho2 * b0), g * g],
            e: [d + ch.sigma_z2, 2.0 * g * rho2 * b0, (1.0 - rho1 * rho1) * g * g],
            scale: d / ch.q,
        }
    }

    #[inline]
    fn poly(c: &[f64; 3], s: f64) -> (f64, f64, f64) {
        (c[0] + s * (c[1] + s * c[2]), c[1] + 2.0 * c[2] * s, 2.0 * c[2])
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        let (n, _, _) = Self::poly(&self.n, s);
        let (e, _, _) = Self::poly(&self.e, s);
        0.5 * (self.scale * n / e).log2()
    }

    /// First and second derivatives in `s`.
    #[inline]
    pub fn slope(&self, s: f64) -> (f64, f64) {
        let (n, n1, n2) = Self::poly(&self.n, s);
        let (e, e1, e2) = Self::poly(&self.e, s);
        let k = 0.5 / LN_2;
        let (a, b) = (n1 / n, e1 / e);
        (k * (a - b), k * (n2 / n - a * a - e2 / e + b * b))
    }
}

/// Every node uses the same correlation pair.
pub(crate) struct SharedPair {
    forms: Vec<QuadForm>,
}

impl SharedPair {
    pub fn new(nodes: &[f64], theta: f64, d: f64, ch: &ChannelParams) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        Self { forms: nodes.iter().map(|&g| QuadForm::new(g, c, s, d, ch)).collect() }
    }
}

impl NodeObjective for SharedPair {
    fn value(&self, i: usize, s: f64) -> f64 {
        self.forms[i].value(s)
    }

    fn slope(&self, i: usize, s: f64) -> (f64, f64) {
        self.forms[i].slope(s)
    }
}

/// Best angle on the right half circle for one state and its rate.
pub(crate) fn best_angle(g: f64, p: f64, d: f64, ch: &ChannelParams) -> (f64, f64) {
    circle_max(|t| rate_unchecked(g, p, t.cos(), t.sin(), d, ch), ADAPTIVE_SCAN, 1e-10)
}

/// Each node picks its own correlation pair.
pub(crate) struct PerNode<'a> {
    pub nodes: &'a [f64],
    pub d: f64,
    pub ch: &'a ChannelParams,
}

impl NodeObjective for PerNode<'_> {
    fn value(&self, i: usize, s: f64) -> f64 {
        best_angle(self.nodes[i], s * s, self.d, self.ch).1
    }

    /// By the envelope theorem the slope is that of the optimal angle.
    fn slope(&self, i: usize, s: f64) -> (f64, f64) {
        let g = self.nodes[i];
        let (t, _) = best_angle(g, s * s, self.d, self.ch);
        (QuadForm::new(g, t.cos(), t.sin(), self.d, self.ch).slope(s).0, f64::NAN)
    }
}
