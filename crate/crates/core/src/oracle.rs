//! Covariance-algebra verification of the closed forms in [`crate::rate`].
//!
//! The achievable scheme splits the state as `S = U + T` with independent
//! Gaussian parts of variances `Q - d` and `d`, and builds the input
//!
//! ```text
//! X = rho1 sqrt(P / (Q - d)) U + rho2 sqrt(P / d) T + sqrt((1 - rho1^2 - rho2^2) P) W
//! ```
//!
//! where `W` is a unit Gaussian independent of everything else, so that
//! `E[X^2] = P` and `Cov(X, U) / sqrt(P Var U) = rho1`, `Cov(X, T) / sqrt(P d) = rho2`.
//! Everything here is computed from the joint covariance of
//! `(U, T, S, X, Y)` by Schur complements and log-determinants, never from the
//! closed forms themselves.

use nalgebra::{DMatrix, DVector, SMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::{ChannelParams, CodingParams, LogBase};
use crate::rate::ConverseCovariance;

/// Variables with variance below this fraction of `Q` are dropped from
/// conditioning sets and determinants.
pub const DEGENERATE_FRACTION: f64 = 1e-14;

/// Relative singular-value cutoff for the pseudo-inverse fallback.
pub const PINV_TOL: f64 = 1e-12;

/// Generator used by [`mc_estimate`].
pub const MC_GENERATOR: &str = "ChaCha20";

/// Fixed number of Monte-Carlo substreams; results do not depend on how many
/// threads execute them.
pub const MC_SHARDS: usize = 16;

pub type Matrix5 = SMatrix<f64, 5, 5>;

/// Coordinates of the joint law, in matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    U = 0,
    T = 1,
    S = 2,
    X = 3,
    Y = 4,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::U, Var::T, Var::S, Var::X, Var::Y];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Parameters a joint covariance was assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    pub g: f64,
    pub p: f64,
    pub coding: CodingParams,
    pub channel: ChannelParams,
}

/// Result of a Schur-complement conditioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditioned {
    pub variance: f64,
    /// The conditioning block was singular and a pseudo-inverse was used.
    pub pseudo_inverse: bool,
}

/// Coefficients of `X` on `(U, T, W)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct InputMap {
    pub u: f64,
    pub t: f64,
    pub w: f64,
    pub var_u: f64,
}

impl InputMap {
    pub(crate) fn new(p: f64, cp: &CodingParams, ch: &ChannelParams) -> Self {
        let floor = DEGENERATE_FRACTION * ch.q;
        let var_u = (ch.q - cp.d).max(0.0);
        let u = if var_u < floor { 0.0 } else { cp.rho1 * (p / var_u).sqrt() };
        let t = if cp.d < floor { 0.0 } else { cp.rho2 * (p / cp.d).sqrt() };
        let w = (cp.slack() * p).sqrt();
        Self { u, t, w, var_u }
    }
}

/// Joint covariance of `(U, T, S, X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCovariance {
    matrix: Matrix5,
    q: f64,
    source: Option<Generator>,
}

/// Assembles the joint law of the achievable scheme at one fading state.
pub fn build_covariance(
    g: f64,
    p: f64,
    cp: &CodingParams,
    ch: &ChannelParams,
) -> Result<JointCovariance> {
    if !(g.is_finite() && g >= 0.0 && p.is_finite() && p >= 0.0) {
        return invalid(format!("need g >= 0 and P >= 0, got g = {g}, P = {p}"));
    }
    cp.validate_for(ch)?;
    let map = InputMap::new(p, cp, ch);

    // Independent sources (U, T, W, Z) and the linear map onto (U, T, S, X, Y).
    let base = [map.var_u, cp.d, 1.0, ch.sigma_z2];
    let rows: [[f64; 4]; 5] = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [map.u, map.t, map.w, 0.0],
        [g * map.u + 1.0, g * map.t + 1.0, g * map.w, 1.0],
    ];
    let mut m = Matrix5::zeros();
    for i in 0..5 {
        for j in 0..=i {
            let v: f64 = (0..4).map(|k| rows[i][k] * base[k] * rows[j][k]).sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }

    let jc = JointCovariance {
        matrix: m,
        q: ch.q,
        source: Some(Generator { g, p, coding: *cp, channel: *ch }),
    };
    if !jc.is_psd() {
        return Err(Error::Numerical(format!(
            "assembled covariance is not positive semi-definite for g = {g}, P = {p}, {cp:?}"
        )));
    }
    Ok(jc)
}

impl JointCovariance {
    /// Wraps an arbitrary covariance (e.g. an empirical one). `q` sets the
    /// scale for the degeneracy floor.
    pub fn from_matrix(matrix: Matrix5, q: f64) -> Self {
        Self { matrix, q, source: None }
    }

    pub fn matrix(&self) -> &Matrix5 {
        &self.matrix
    }

    pub fn source(&self) -> Option<&Generator> {
        self.source.as_ref()
    }

    pub fn var(&self, v: Var) -> f64 {
        self.matrix[(v.index(), v.index())]
    }

    pub fn cov(&self, a: Var, b: Var) -> f64 {
        self.matrix[(a.index(), b.index())]
    }

    fn floor(&self) -> f64 {
        DEGENERATE_FRACTION * self.q
    }

    fn is_psd(&self) -> bool {
        let trace = self.matrix.trace();
        self.matrix
            .symmetric_eigenvalues()
            .iter()
            .all(|&l| l >= -1e-12 * trace)
    }

    fn dynamic(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(5, 5, self.matrix.iter().copied())
    }

    /// `Var(target | given)` by Schur complement.
    pub fn conditional_variance(&self, target: Var, given: &[Var]) -> Conditioned {
        let idx: Vec<usize> = given.iter().map(|v| v.index()).collect();
        schur_conditional_variance(&self.dynamic(), target.index(), &idx, self.floor())
    }

    /// Gaussian mutual information between two disjoint coordinate sets.
    pub fn mutual_information(&self, a: &[Var], b: &[Var], base: LogBase) -> Result<f64> {
        let ia: Vec<usize> = a.iter().map(|v| v.index()).collect();
        let ib: Vec<usize> = b.iter().map(|v| v.index()).collect();
        mutual_information(&self.dynamic(), &ia, &ib, self.floor(), base)
    }
}

/// `Var(target) - c Sigma^{-1} c^T` over the non-degenerate members of `given`.
pub fn schur_conditional_variance(
    cov: &DMatrix<f64>,
    target: usize,
    given: &[usize],
    floor: f64,
) -> Conditioned {
    let keep: Vec<usize> = given
        .iter()
        .copied()
        .filter(|&i| cov[(i, i)] >= floor)
        .collect();
    let own = cov[(target, target)];
    if keep.is_empty() {
        return Conditioned { variance: own, pseudo_inverse: false };
    }
    let k = keep.len();
    let sigma = DMatrix::from_fn(k, k, |i, j| cov[(keep[i], keep[j])]);
    let c = DVector::from_fn(k, |i, _| cov[(keep[i], target)]);

    let eps = PINV_TOL * sigma.trace().abs().max(f64::MIN_POSITIVE);
    if let Some(chol) = sigma.clone().cholesky() {
        // A pivot at rounding level means the block is numerically singular.
        if chol.l_dirty().diagonal().iter().all(|l| l * l > eps) {
            let x = chol.solve(&c);
            return Conditioned { variance: own - c.dot(&x), pseudo_inverse: false };
        }
    }
    let pinv = sigma
        .svd(true, true)
        .pseudo_inverse(eps)
        .expect("SVD computed with both factors");
    Conditioned { variance: own - c.dot(&(pinv * &c)), pseudo_inverse: true }
}

fn log_det(cov: &DMatrix<f64>, idx: &[usize]) -> Option<f64> {
    if idx.is_empty() {
        return Some(0.0);
    }
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| cov[(idx[i], idx[j])]);
    let chol = sub.cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// `1/2 log( det(S_A) det(S_B) / det(S_AB) )` with degenerate coordinates
/// dropped first.
pub fn mutual_information(
    cov: &DMatrix<f64>,
    a: &[usize],
    b: &[usize],
    floor: f64,
    base: LogBase,
) -> Result<f64> {
    if a.iter().any(|i| b.contains(i)) {
        return invalid("mutual information needs disjoint variable sets");
    }
    let live = |s: &[usize]| -> Vec<usize> { s.iter().copied().filter(|&i| cov[(i, i)] >= floor).collect() };
    let a = live(a);
    let b = live(b);
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    let ab: Vec<usize> = a.iter().chain(&b).copied().collect();
    let (Some(la), Some(lb)) = (log_det(cov, &a), log_det(cov, &b)) else {
        return Err(Error::Numerical("marginal covariance is not positive definite".into()));
    };
    let nats = match log_det(cov, &ab) {
        Some(lab) => 0.5 * (la + lb - lab),
        None => f64::INFINITY,
    };
    if nats < -1e-10 {
        return Err(Error::Numerical(format!("negative mutual information {nats}")));
    }
    Ok(base.from_bits(nats / std::f64::consts::LN_2))
}

/// `I(U; Y) - I(U; S)` in bits for the achievable scheme.
pub fn gp_rate_oracle(g: f64, p: f64, cp: &CodingParams, ch: &ChannelParams) -> Result<f64> {
    let jc = build_covariance(g, p, cp, ch)?;
    let iuy = jc.mutual_information(&[Var::U], &[Var::Y], LogBase::Bits)?;
    let ius = jc.mutual_information(&[Var::U], &[Var::S], LogBase::Bits)?;
    Ok(iuy - ius)
}

/// Coordinates of [`converse_joint`], in matrix order.
pub mod converse_index {
    pub const X: usize = 0;
    pub const S_HAT: usize = 1;
    pub const RESIDUAL: usize = 2;
    pub const S: usize = 3;
    pub const Y: usize = 4;
}

/// Joint covariance of `(X, S_hat, S - S_hat, S, Y)` obtained by pushing the
/// converse covariance and independent noise through `S = S_hat + (S - S_hat)`
/// and `Y = g X + S + Z`.
pub fn converse_joint(g: f64, k: &ConverseCovariance, ch: &ChannelParams) -> DMatrix<f64> {
    let mut base = DMatrix::zeros(4, 4);
    base.view_mut((0, 0), (3, 3)).copy_from(&k.matrix());
    base[(3, 3)] = ch.sigma_z2;
    let map = DMatrix::from_row_slice(
        5,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 1.0, 0.0, //
            g, 1.0, 1.0, 1.0,
        ],
    );
    &map * base * map.transpose()
}

/// Monte-Carlo estimates for the achievable scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub samples: usize,
    pub seed: u64,
    pub generator: &'static str,
    /// Unbiased sample covariance of `(U, T, S, X, Y)`.
    pub covariance: Matrix5,
    /// Residual variance of `S` after linear regression on `U`.
    pub var_s_given_u: f64,
    /// `I(U; Y) - I(U; S)` (bits) evaluated on the sample covariance.
    pub rate_bits: f64,
}

#[derive(Clone, Copy)]
struct Moments {
    n: usize,
    sum: [f64; 5],
    cross: [[f64; 5]; 5],
}

impl Moments {
    fn zero() -> Self {
        Self { n: 0, sum: [0.0; 5], cross: [[0.0; 5]; 5] }
    }

    fn push(&mut self, v: &[f64; 5]) {
        self.n += 1;
        for i in 0..5 {
            self.sum[i] += v[i];
            for j in 0..=i {
                self.cross[i][j] += v[i] * v[j];
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        for i in 0..5 {
            self.sum[i] += other.sum[i];
            for j in 0..=i {
                self.cross[i][j] += other.cross[i][j];
            }
        }
    }

    fn covariance(&self) -> Matrix5 {
        let n = self.n as f64;
        let mut m = Matrix5::zeros();
        for i in 0..5 {
            for j in 0..=i {
                let c = (self.cross[i][j] - self.sum[i] * self.sum[j] / n) / (n - 1.0);
                m[(i, j)] = c;
                m[(j, i)] = c;
            }
        }
        m
    }
}

/// Draws `n` i.i.d. realizations of the achievable scheme and summarizes
/// them. Deterministic in `(seed, n)`.
pub fn mc_estimate(
    g: f64,
    p: f64,
    cp: &CodingParams,
    ch: &ChannelParams,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n < 1000 {
        return invalid(format!("Monte-Carlo needs at least 1000 samples, got {n}"));
    }
    if !(g.is_finite() && g >= 0.0 && p.is_finite() && p >= 0.0) {
        return invalid(format!("need g >= 0 and P >= 0, got g = {g}, P = {p}"));
    }
    cp.validate_for(ch)?;
    let map = InputMap::new(p, cp, ch);
    let sd_u = map.var_u.sqrt();
    let sd_t = cp.d.sqrt();
    let sd_z = ch.sigma_z2.sqrt();

    let shards: Vec<Moments> = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let count = n / MC_SHARDS + usize::from(shard < n % MC_SHARDS);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let mut acc = Moments::zero();
            for _ in 0..count {
                let e: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let u = sd_u * e[0];
                let t = sd_t * e[1];
                let w = e[2];
                let z = sd_z * e[3];
                let s = u + t;
                let x = map.u * u + map.t * t + map.w * w;
                let y = g * x + s + z;
                acc.push(&[u, t, s, x, y]);
            }
            acc
        })
        .collect();

    let mut total = Moments::zero();
    for m in &shards {
        total.merge(m);
    }
    let covariance = total.covariance();
    let jc = JointCovariance::from_matrix(covariance, ch.q);
    let var_s_given_u = jc.conditional_variance(Var::S, &[Var::U]).variance;
    let rate_bits = jc.mutual_information(&[Var::U], &[Var::Y], LogBase::Bits)?
        - jc.mutual_information(&[Var::U], &[Var::S], LogBase::Bits)?;

    Ok(McEstimate {
        samples: n,
        seed,
        generator: MC_GENERATOR,
        covariance,
        var_s_given_u,
        rate_bits,
    })
}
