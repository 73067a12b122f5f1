//! Expectations over the fading law.
//!
//! Finite laws use their exact support. For Rayleigh fading the rule is the
//! Gauss rule of the weight `2g exp(-g^2)` on `[0, inf)` in the amplitude
//! itself, so odd powers of `g` (and hence `sqrt(P)` terms of the rate) are
//! integrated as accurately as even ones. Its Jacobi matrix is obtained by a
//! Lanczos process on a fine composite Gauss–Legendre discretization of the
//! weight, and nodes/weights follow from the Golub–Welsch eigenproblem.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::model::{ChannelParams, CodingParams, FadingModel, PerStatePolicy};
use crate::rate::rate_per_state;

pub const MAX_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Exact support of a finite law.
    AnalyticDiscrete,
    /// Gauss rule for the Rayleigh amplitude density.
    RayleighGauss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Builds the quadrature rule of `fading`. `n` is ignored for finite laws.
pub fn make_rule(fading: &FadingModel, n: usize) -> Result<QuadratureRule> {
    fading.validate()?;
    match fading {
        FadingModel::Degenerate { g0 } => Ok(QuadratureRule {
            nodes: vec![*g0],
            weights: vec![1.0],
            provenance: Provenance::AnalyticDiscrete,
        }),
        FadingModel::Discrete { points, probs } => {
            let mut pairs: Vec<(f64, f64)> = points
                .iter()
                .copied()
                .zip(probs.iter().copied())
                .filter(|&(_, p)| p > 0.0)
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Ok(QuadratureRule {
                nodes: pairs.iter().map(|p| p.0).collect(),
                weights: pairs.iter().map(|p| p.1).collect(),
                provenance: Provenance::AnalyticDiscrete,
            })
        }
        FadingModel::Rayleigh => {
            if n == 0 {
                return invalid("Rayleigh quadrature needs at least one node");
            }
            if n > MAX_NODES {
                return Err(Error::TooManyNodes(n));
            }
            let rule = rayleigh_cached(n);
            let (nodes, weights) = &*rule;
            Ok(QuadratureRule {
                nodes: nodes.to_vec(),
                weights: weights.to_vec(),
                provenance: Provenance::RayleighGauss,
            })
        }
    }
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn rayleigh_cached(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(rayleigh_gauss(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[m - 1 - i] = w[i];
    }
    (x, w)
}

fn rayleigh_gauss(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Discretize 2g exp(-g^2) on [0, L]; the orthonormal polynomials of
    // degree <= n are negligible beyond 2 sqrt(n) + 10. Panels are graded
    // geometrically towards g = 0, where the smallest nodes crowd together
    // as n grows.
    const PANEL: f64 = 0.125;
    const GRADED: i32 = 30;
    const PER_PANEL: usize = 32;
    let (gx, gw) = gauss_legendre(PER_PANEL);
    let upper = 2.0 * (n as f64).sqrt() + 10.0;
    let panels = (upper / PANEL).ceil() as usize;
    let mut edges = vec![0.0];
    edges.extend((0..=GRADED).rev().map(|j| PANEL * 0.5f64.powi(j)));
    edges.extend((2..=panels).map(|k| k as f64 * PANEL));

    let mut pts = Vec::with_capacity(edges.len() * PER_PANEL);
    let mut mass = Vec::with_capacity(edges.len() * PER_PANEL);
    for e in edges.windows(2) {
        let (mid, half) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for (x, w) in gx.iter().zip(&gw) {
            let g = mid + half * x;
            pts.push(g);
            mass.push(2.0 * g * (-g * g).exp() * half * w);
        }
    }
    let m = pts.len();
    let x = DVector::from_vec(pts);

    // Lanczos on diag(x) started from sqrt(mass), fully reorthogonalized.
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut q = DVector::from_iterator(m, mass.iter().map(|v| v.sqrt()));
    q /= q.norm();
    for k in 0..n {
        let mut w = x.component_mul(&q);
        if k > 0 {
            w.axpy(-beta[k], &basis[k - 1], 1.0);
        }
        alpha[k] = q.dot(&w);
        w.axpy(-alpha[k], &q, 1.0);
        basis.push(q.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        if k + 1 < n {
            beta[k + 1] = w.norm();
            q = w / beta[k + 1];
        }
    }

    let mut jacobi = DMatrix::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = alpha[k];
        if k + 1 < n {
            jacobi[(k, k + 1)] = beta[k + 1];
            jacobi[(k + 1, k)] = beta[k + 1];
        }
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    (pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
}

/// `sum_i w_i h(g_i)`, accumulated in ascending-node order.
pub fn expect(rule: &QuadratureRule, mut h: impl FnMut(f64) -> f64) -> Result<f64> {
    let mut acc = 0.0;
    for (&g, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = h(g);
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "integrand", at: g });
        }
        acc += w * v;
    }
    Ok(acc)
}

fn check_policy(rule: &QuadratureRule, policy: &PerStatePolicy) -> Result<()> {
    if policy.nodes != rule.nodes || policy.weights != rule.weights {
        return invalid("policy is not tabulated on this quadrature rule");
    }
    policy.validate()
}

/// Expected rate (bits) of a tabulated policy.
pub fn ergodic_rate(
    rule: &QuadratureRule,
    policy: &PerStatePolicy,
    d: f64,
    ch: &ChannelParams,
) -> Result<f64> {
    check_policy(rule, policy)?;
    let mut acc = 0.0;
    for i in 0..rule.len() {
        let cp = CodingParams { rho1: policy.rho1[i], rho2: policy.rho2[i], d };
        acc += rule.weights[i] * rate_per_state(rule.nodes[i], policy.power[i], &cp, ch)?;
    }
    Ok(acc)
}

/// Expected power of a tabulated policy.
pub fn avg_power(rule: &QuadratureRule, policy: &PerStatePolicy) -> f64 {
    rule.weights
        .iter()
        .zip(&policy.power)
        .map(|(w, p)| w * p)
        .sum()
}
