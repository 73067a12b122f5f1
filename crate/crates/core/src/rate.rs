//! Closed-form quantities for a single fading state.
//!
//! The achievable rate for amplitude `g`, power `P` and coding triple
//! `(rho1, rho2, d)` is
//!
//! ```text
//! R = 1/2 log2( d (g^2 P + Q + s2 + 2 g rho1 sqrt(P (Q - d)) + 2 g rho2 sqrt(P d))
//!             / (Q ((1 - rho1^2) g^2 P + d + s2 + 2 g rho2 sqrt(P d))) )
//! ```
//!
//! with `s2` the noise variance. The outer bound is written over the
//! covariance `K` of `(X, S_hat, S - S_hat)` and reduces to the same
//! expression under `(K00, K11, K22) = (P, Q - d, d)`.
//!
//! Rates are in bits and may be negative; membership in the feasible set is
//! a separate predicate ([`kappa_member`]).

use nalgebra::Matrix3;

use crate::error::{invalid, Error, Result};
use crate::model::{ChannelParams, CodingParams};

/// Relative eigenvalue floor used by [`psd_feasible`].
pub const PSD_TOL: f64 = 1e-12;

/// `sqrt(x)` with floating-point dust below zero mapped to 0.
#[inline]
pub(crate) fn sqrt_clamped(x: f64) -> f64 {
    if x < 0.0 && x > -1e-15 {
        0.0
    } else {
        x.sqrt()
    }
}

#[inline]
pub(crate) fn half_log2(ratio: f64) -> f64 {
    0.5 * ratio.log2()
}

fn check_state(g: f64, p: f64) -> Result<()> {
    if !(g.is_finite() && g >= 0.0) {
        return invalid(format!("fading amplitude g = {g} must be non-negative"));
    }
    if !(p.is_finite() && p >= 0.0) {
        return invalid(format!("power P = {p} must be non-negative"));
    }
    Ok(())
}

/// Achievable rate (bits per channel use) of one fading state.
pub fn rate_per_state(g: f64, p: f64, cp: &CodingParams, ch: &ChannelParams) -> Result<f64> {
    check_state(g, p)?;
    cp.validate_for(ch)?;
    let r = rate_unchecked(g, p, cp.rho1, cp.rho2, cp.d, ch);
    if !r.is_finite() {
        return Err(Error::NonFinite { what: "rate", at: g });
    }
    Ok(r)
}

/// [`rate_per_state`] without argument checks, for inner optimization loops.
/// Returns NaN if the denominator is not positive.
#[inline]
pub(crate) fn rate_unchecked(g: f64, p: f64, rho1: f64, rho2: f64, d: f64, ch: &ChannelParams) -> f64 {
    let q = ch.q;
    let s2 = ch.sigma_z2;
    let cross_u = sqrt_clamped(p * (q - d));
    let cross_t = sqrt_clamped(p * d);
    let num = d * (g * g * p + q + s2 + 2.0 * g * rho1 * cross_u + 2.0 * g * rho2 * cross_t);
    let den = q * ((1.0 - rho1 * rho1) * g * g * p + d + s2 + 2.0 * g * rho2 * cross_t);
    if den <= 0.0 {
        return f64::NAN;
    }
    half_log2(num / den)
}

/// Whether `cp` lies in the feasible set at this state: valid parameters and
/// a non-negative rate.
pub fn kappa_member(g: f64, p: f64, cp: &CodingParams, ch: &ChannelParams) -> bool {
    matches!(rate_per_state(g, p, cp, ch), Ok(r) if r >= 0.0)
}

/// Conditional variance of the output given the auxiliary variable,
/// `(1 - rho1^2) g^2 P + d + s2 + 2 g rho2 sqrt(P d)`.
pub fn cond_var_y_given_u(g: f64, p: f64, cp: &CodingParams, ch: &ChannelParams) -> Result<f64> {
    check_state(g, p)?;
    cp.validate_for(ch)?;
    let CodingParams { rho1, rho2, d } = *cp;
    Ok((1.0 - rho1 * rho1) * g * g * p + d + ch.sigma_z2 + 2.0 * g * rho2 * sqrt_clamped(p * d))
}

/// Second-moment matrix of `(X, S_hat, S - S_hat)` as used by the outer
/// bound.
///
/// The correlations are stored alongside the cross-covariances so that a
/// correlation attached to a zero-variance coordinate is not lost. When built
/// from cross-covariances, `0/0` correlations are read as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverseCovariance {
    k00: f64,
    k11: f64,
    k22: f64,
    k01: f64,
    k02: f64,
    rho1: f64,
    rho2: f64,
}

fn correlation(cross: f64, a: f64, b: f64) -> f64 {
    let scale = (a * b).sqrt();
    if scale == 0.0 {
        if cross == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(cross)
        }
    } else {
        cross / scale
    }
}

impl ConverseCovariance {
    fn check_diag(k00: f64, k11: f64, k22: f64) -> Result<()> {
        for (name, v) in [("K00", k00), ("K11", k11), ("K22", k22)] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("{name} = {v} must be a non-negative variance"));
            }
        }
        Ok(())
    }

    pub fn from_cross_covariances(k00: f64, k11: f64, k22: f64, k01: f64, k02: f64) -> Result<Self> {
        Self::check_diag(k00, k11, k22)?;
        if !(k01.is_finite() && k02.is_finite()) {
            return invalid("cross-covariances must be finite");
        }
        Ok(Self {
            k00,
            k11,
            k22,
            k01,
            k02,
            rho1: correlation(k01, k00, k11),
            rho2: correlation(k02, k00, k22),
        })
    }

    pub fn from_correlations(k00: f64, k11: f64, k22: f64, rho1: f64, rho2: f64) -> Result<Self> {
        Self::check_diag(k00, k11, k22)?;
        if !(rho1.is_finite() && rho2.is_finite()) {
            return invalid("correlations must be finite");
        }
        Ok(Self {
            k00,
            k11,
            k22,
            k01: rho1 * (k00 * k11).sqrt(),
            k02: rho2 * (k00 * k22).sqrt(),
            rho1,
            rho2,
        })
    }

    /// The covariance induced by the achievable scheme:
    /// `(K00, K11, K22) = (P, Q - d, d)` with the same correlations.
    pub fn achievability(p: f64, cp: &CodingParams, ch: &ChannelParams) -> Result<Self> {
        cp.validate_for(ch)?;
        Self::from_correlations(p, ch.q - cp.d, cp.d, cp.rho1, cp.rho2)
    }

    pub fn k00(&self) -> f64 {
        self.k00
    }
    pub fn k11(&self) -> f64 {
        self.k11
    }
    pub fn k22(&self) -> f64 {
        self.k22
    }
    pub fn k01(&self) -> f64 {
        self.k01
    }
    pub fn k02(&self) -> f64 {
        self.k02
    }
    pub fn rho1(&self) -> f64 {
        self.rho1
    }
    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    /// `K11 + K22 = Q` within a relative tolerance.
    pub fn splits_state(&self, q: f64, rel_tol: f64) -> bool {
        (self.k11 + self.k22 - q).abs() <= rel_tol * q
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.k00, self.k01, self.k02, //
            self.k01, self.k11, 0.0, //
            self.k02, 0.0, self.k22,
        )
    }
}

/// Output variance `g^2 K00 + K11 + K22 + s2 + 2 g rho1 sqrt(K00 K11)
/// + 2 g rho2 sqrt(K00 K22)`.
pub fn var_y(g: f64, k: &ConverseCovariance, ch: &ChannelParams) -> f64 {
    g * g * k.k00
        + k.k11
        + k.k22
        + ch.sigma_z2
        + 2.0 * g * k.rho1 * (k.k00 * k.k11).sqrt()
        + 2.0 * g * k.rho2 * (k.k00 * k.k22).sqrt()
}

/// Closed-form residual variance of the state given the reconstruction and
/// the output, `K22 s2 / (g^2 (1 - rho1^2) K00 + K22 + s2 + 2 g rho2 sqrt(K00 K22))`.
///
/// This coincides with the linear MMSE exactly when `rho1^2 + rho2^2 = 1`
/// (or `g K00 = 0`). Inside the disk the true LMMSE exceeds it by
/// `g^2 K00 K22 (1 - rho1^2 - rho2^2)` over the same denominator.
pub fn cond_var_s_given_shat_y(g: f64, k: &ConverseCovariance, ch: &ChannelParams) -> f64 {
    let den = g * g * (1.0 - k.rho1 * k.rho1) * k.k00
        + k.k22
        + ch.sigma_z2
        + 2.0 * g * k.rho2 * (k.k00 * k.k22).sqrt();
    k.k22 * ch.sigma_z2 / den
}

/// Outer-bound rate (bits) written over the converse covariance.
pub fn converse_rate(g: f64, k: &ConverseCovariance, ch: &ChannelParams) -> f64 {
    let s2 = ch.sigma_z2;
    let (k00, k11, k22) = (k.k00, k.k11, k.k22);
    let num = k22
        * (g * g * k00
            + k11
            + k22
            + s2
            + 2.0 * g * k.rho1 * (k00 * k11).sqrt()
            + 2.0 * g * k.rho2 * (k00 * k22).sqrt());
    let den = (k11 + k22)
        * (g * g * (1.0 - k.rho1 * k.rho1) * k00 + k22 + s2 + 2.0 * g * k.rho2 * (k00 * k22).sqrt());
    half_log2(num / den)
}

/// Positive semi-definiteness of the converse covariance, with eigenvalues
/// allowed down to `-1e-12 * trace`.
pub fn psd_feasible(k: &ConverseCovariance) -> bool {
    let m = k.matrix();
    if m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let trace = m.trace();
    let eig = m.symmetric_eigenvalues();
    eig.iter().all(|&l| l >= -PSD_TOL * trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> ChannelParams {
        ChannelParams { q: 1.0, sigma_z2: 1.0, p_avg: 2.5 }
    }

    #[test]
    fn silent_at_full_distortion_is_zero() {
        let cp = CodingParams::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(rate_per_state(1.0, 2.5, &cp, &unit()).unwrap(), 0.0);
        for &(g, p) in &[(0.0, 0.0), (0.3, 7.0), (3.9, 0.01), (2.0, 100.0)] {
            assert_eq!(rate_per_state(g, p, &cp, &unit()).unwrap(), 0.0);
        }
    }

    #[test]
    fn worked_points() {
        let ch = unit();
        let good = CodingParams::new(0.9, 0.0, 0.9).unwrap();
        let r = rate_per_state(1.0, 2.5, &good, &ch).unwrap();
        assert!((r - 0.5 * (4.86f64 / 2.375).log2()).abs() < 1e-14);
        assert!((r - 0.5165).abs() < 5e-5);
        assert!(kappa_member(1.0, 2.5, &good, &ch));

        let bad = CodingParams::new(0.8, 0.0, 0.25).unwrap();
        let r = rate_per_state(1.0, 2.5, &bad, &ch).unwrap();
        assert!((r + 0.181).abs() < 5e-4, "{r}");
        assert!(!kappa_member(1.0, 2.5, &bad, &ch));

        let outside = CodingParams { rho1: 0.9, rho2: 0.9, d: 0.5 };
        assert!(!kappa_member(1.0, 2.5, &outside, &ch));
    }

    #[test]
    fn rejects_bad_arguments() {
        let cp = CodingParams::new(0.1, 0.1, 0.5).unwrap();
        assert!(rate_per_state(-1.0, 1.0, &cp, &unit()).is_err());
        assert!(rate_per_state(1.0, f64::NAN, &cp, &unit()).is_err());
        let big_d = CodingParams::new(0.1, 0.1, 1.5).unwrap();
        assert!(rate_per_state(1.0, 1.0, &big_d, &unit()).is_err());
    }

    #[test]
    fn output_variances() {
        let ch = unit();
        let silent = ConverseCovariance::from_correlations(0.0, 0.3, 0.7, 0.5, 0.5).unwrap();
        assert_eq!(var_y(2.0, &silent, &ch), 2.0);
        let k = ConverseCovariance::from_correlations(2.5, 0.1, 0.9, 0.9, 0.0).unwrap();
        assert!((var_y(1.0, &k, &ch) - 5.4).abs() < 1e-12);
        assert_eq!(var_y(0.0, &k, &ch), 0.1 + 0.9 + 1.0);

        let u_explains = CodingParams::new(1.0, 0.0, 0.4).unwrap();
        assert!((cond_var_y_given_u(1.7, 3.0, &u_explains, &ch).unwrap() - 1.4).abs() < 1e-12);
        let no_input = CodingParams::new(0.3, -0.5, 0.4).unwrap();
        assert_eq!(cond_var_y_given_u(1.7, 0.0, &no_input, &ch).unwrap(), 1.4);
        let hand = CodingParams::new(0.9, 0.0, 0.9).unwrap();
        assert!((cond_var_y_given_u(1.0, 2.5, &hand, &ch).unwrap() - 2.375).abs() < 1e-12);
    }

    #[test]
    fn residual_state_variance_limits() {
        let ch = unit();
        let k = ConverseCovariance::from_correlations(0.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(cond_var_s_given_shat_y(1.3, &k, &ch), 0.5);
        let k = ConverseCovariance::from_correlations(3.0, 1.0, 0.0, 0.4, 0.0).unwrap();
        assert_eq!(cond_var_s_given_shat_y(1.3, &k, &ch), 0.0);
    }

    #[test]
    fn converse_matches_achievable_form() {
        let ch = unit();
        let k = ConverseCovariance::from_correlations(0.0, 0.0, 1.0, 0.7, 0.0).unwrap();
        assert_eq!(converse_rate(1.0, &k, &ch), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let ch = ChannelParams {
                q: rng.random_range(0.1..5.0),
                sigma_z2: rng.random_range(0.1..5.0),
                p_avg: 1.0,
            };
            let g = rng.random_range(0.0..4.0);
            let p = rng.random_range(0.0..10.0);
            let r = rng.random_range(0.0..1.0f64).sqrt();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            let d = rng.random_range(ch.d_min()..=ch.q);
            let cp = CodingParams::new(r * th.cos(), r * th.sin(), d).unwrap();
            let a = rate_per_state(g, p, &cp, &ch).unwrap();
            let k = ConverseCovariance::achievability(p, &cp, &ch).unwrap();
            let b = converse_rate(g, &k, &ch);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn full_distortion_keeps_reconstruction_correlation() {
        // K11 = 0 at d = Q; the stored rho1 still enters (1 - rho1^2).
        let ch = unit();
        let cp = CodingParams::new(0.8, -0.6, 1.0).unwrap();
        let k = ConverseCovariance::achievability(2.0, &cp, &ch).unwrap();
        assert_eq!(k.k01(), 0.0);
        assert_eq!(k.rho1(), 0.8);
        let a = rate_per_state(1.5, 2.0, &cp, &ch).unwrap();
        assert!((a - converse_rate(1.5, &k, &ch)).abs() < 1e-14);
        assert!(a > 0.0);
    }

    #[test]
    fn zero_over_zero_correlation_is_zero() {
        let k = ConverseCovariance::from_cross_covariances(0.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!((k.rho1(), k.rho2()), (0.0, 0.0));
        let k = ConverseCovariance::from_cross_covariances(2.0, 0.5, 0.5, 0.5, -0.5).unwrap();
        assert!((k.rho1() - 0.5).abs() < 1e-15 && (k.rho2() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn psd_examples() {
        let diag = ConverseCovariance::from_cross_covariances(2.0, 0.4, 0.6, 0.0, 0.0).unwrap();
        assert!(psd_feasible(&diag));
        let outside = ConverseCovariance::from_correlations(2.0, 0.4, 0.6, 0.8, 0.7).unwrap();
        assert!(!psd_feasible(&outside));
        let boundary = ConverseCovariance::from_correlations(2.0, 0.4, 0.6, 0.6, 0.8).unwrap();
        assert!(psd_feasible(&boundary));
        let impossible = ConverseCovariance::from_cross_covariances(0.0, 1.0, 0.0, 0.1, 0.0).unwrap();
        assert!(!psd_feasible(&impossible));
    }

    #[test]
    fn psd_implies_disk() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5000 {
            let k00 = rng.random_range(0.0..5.0);
            let k11 = rng.random_range(0.0..1.0);
            let k22 = 1.0 - k11;
            let k = ConverseCovariance::from_correlations(
                k00,
                k11,
                k22,
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .unwrap();
            if psd_feasible(&k) {
                assert!(k.rho1().powi(2) + k.rho2().powi(2) <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn rate_nondecreasing_in_power_at_full_reconstruction_correlation() {
        let ch = unit();
        for &d in &[0.01, 0.3, 0.9, 1.0] {
            for &g in &[0.2, 1.0, 3.0] {
                let cp = CodingParams::new(1.0, 0.0, d).unwrap();
                let mut prev = f64::NEG_INFINITY;
                for i in 0..200 {
                    let r = rate_per_state(g, i as f64 * 0.1, &cp, &ch).unwrap();
                    assert!(r >= prev - 1e-15);
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn rate_can_fall_with_power_for_partial_correlation() {
        // With rho2 = 0 and rho1 < 1 the rate peaks once g rho1 sqrt(P) stops
        // outgrowing the uncorrelated part of the input power.
        let ch = unit();
        let cp = CodingParams::new(0.05, 0.0, 0.01).unwrap();
        let low = rate_per_state(1.0, 0.001, &cp, &ch).unwrap();
        let high = rate_per_state(1.0, 100.0, &cp, &ch).unwrap();
        assert!(high < low);
    }
}
