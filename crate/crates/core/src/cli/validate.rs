//! Identity checks behind the `validate` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::Result;
use crate::model::{ChannelParams, CodingParams, FadingModel, PerStatePolicy};
use crate::oracle::{
    build_covariance, converse_index as ci, gp_rate_oracle, mc_estimate, schur_conditional_variance, Var,
    DEGENERATE_FRACTION, MC_GENERATOR,
};
use crate::quadrature::{ergodic_rate, expect, make_rule};
use crate::rate::{
    cond_var_s_given_shat_y, cond_var_y_given_u, converse_rate, rate_per_state, var_y, ConverseCovariance,
};

/// Parameter sets used by the Monte-Carlo suite.
pub const MC_SETS: usize = 20;

/// Sample count at which the Monte-Carlo tolerances are stated; smaller runs
/// widen them by `sqrt(MC_REFERENCE_SAMPLES / n)`.
pub const MC_REFERENCE_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub draws: usize,
    pub samples: usize,
    pub seed: u64,
    pub nodes: usize,
    /// Multiplies every tolerance; values below 1 make the run stricter.
    pub tolerance_scale: f64,
}

/// One identity and the worst deviation seen over its cases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub draws: usize,
    pub samples: usize,
    pub generator: &'static str,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// `|a - b| / max(|b|, 1)`: absolute near zero, relative for large values.
pub fn mixed_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

struct Tracker {
    name: &'static str,
    cases: usize,
    max_error: f64,
    tolerance: f64,
    note: &'static str,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64, note: &'static str) -> Self {
        Self { name, cases: 0, max_error: 0.0, tolerance, note }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN must not hide behind max().
        self.max_error = if err.is_nan() || self.max_error.is_nan() { f64::NAN } else { self.max_error.max(err) };
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            cases: self.cases,
            max_error: self.max_error,
            tolerance: self.tolerance,
            passed: self.max_error <= self.tolerance,
            note: self.note,
        }
    }
}

/// A uniformly random valid achievability draw.
pub fn random_point(rng: &mut impl Rng, ch: &ChannelParams) -> (f64, f64, CodingParams) {
    let g = rng.random_range(0.0..=4.0);
    let p = rng.random_range(0.0..=10.0);
    let r = rng.random::<f64>().sqrt();
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    let d = rng.random_range(1e-6 * ch.q..=ch.q);
    (g, p, CodingParams { rho1: r * t.cos(), rho2: r * t.sin(), d })
}

/// A random converse covariance with correlations on the unit circle when
/// `boundary` is set and anywhere in the disk otherwise.
pub fn random_converse(rng: &mut impl Rng, ch: &ChannelParams, boundary: bool) -> (f64, ConverseCovariance) {
    let g = rng.random_range(0.0..=4.0);
    let k00 = rng.random_range(0.0..=10.0);
    let k22 = rng.random_range(0.0..=ch.q);
    let r = if boundary { 1.0 } else { rng.random::<f64>().sqrt() };
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    let k = ConverseCovariance::from_correlations(k00, ch.q - k22, k22, r * t.cos(), r * t.sin())
        .expect("draw is valid by construction");
    (g, k)
}

fn schur_s_given_shat_y(g: f64, k: &ConverseCovariance, ch: &ChannelParams) -> f64 {
    let joint = crate::oracle::converse_joint(g, k, ch);
    schur_conditional_variance(&joint, ci::S, &[ci::S_HAT, ci::Y], DEGENERATE_FRACTION * ch.q).variance
}

pub fn run(ch: &ChannelParams, opts: &ValidateOptions) -> Result<ValidationReport> {
    let scale = opts.tolerance_scale;
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();

    let mut oracle = Tracker::new("rate_vs_oracle", 1e-9 * scale, "closed-form rate against I(U;Y) - I(U;S), bits");
    let mut converse = Tracker::new(
        "converse_identity",
        1e-12 * scale,
        "outer-bound rate with K = (P, Q - d, d) against the achievable rate, mixed relative",
    );
    let mut distortion = Tracker::new("distortion_identity", 1e-12 * scale, "Var(S|U) against d");
    let mut y_given_u = Tracker::new("var_y_given_u", 1e-10 * scale, "closed form against Schur complement, mixed");
    for _ in 0..opts.draws {
        let (g, p, cp) = random_point(&mut rng, ch);
        let r = rate_per_state(g, p, &cp, ch)?;
        if cp.d < ch.q {
            oracle.record((r - gp_rate_oracle(g, p, &cp, ch)?).abs());
        }
        let k = ConverseCovariance::achievability(p, &cp, ch)?;
        converse.record(mixed_error(converse_rate(g, &k, ch), r));
        let jc = build_covariance(g, p, &cp, ch)?;
        distortion.record((jc.conditional_variance(Var::S, &[Var::U]).variance - cp.d).abs());
        let schur = jc.conditional_variance(Var::Y, &[Var::U]).variance;
        y_given_u.record(mixed_error(cond_var_y_given_u(g, p, &cp, ch)?, schur));
    }
    checks.extend([oracle.finish(), converse.finish(), distortion.finish(), y_given_u.finish()]);

    let mut vy = Tracker::new("var_y", 1e-10 * scale, "closed form against the assembled covariance, mixed");
    let mut boundary = Tracker::new(
        "var_s_given_shat_y_boundary",
        1e-10 * scale,
        "closed form against Schur complement for rho1^2 + rho2^2 = 1, mixed",
    );
    let mut interior = Tracker::new(
        "var_s_given_shat_y_interior_bound",
        1e-12 * scale,
        "closed form never exceeds the Schur complement inside the disk; excess reported",
    );
    for _ in 0..opts.draws {
        let (g, k) = random_converse(&mut rng, ch, true);
        let assembled = crate::oracle::converse_joint(g, &k, ch)[(ci::Y, ci::Y)];
        vy.record(mixed_error(var_y(g, &k, ch), assembled));
        boundary.record(mixed_error(cond_var_s_given_shat_y(g, &k, ch), schur_s_given_shat_y(g, &k, ch)));

        let (g, k) = random_converse(&mut rng, ch, false);
        let assembled = crate::oracle::converse_joint(g, &k, ch)[(ci::Y, ci::Y)];
        vy.record(mixed_error(var_y(g, &k, ch), assembled));
        let excess = cond_var_s_given_shat_y(g, &k, ch) - schur_s_given_shat_y(g, &k, ch);
        interior.record(excess.max(0.0));
    }
    checks.extend([vy.finish(), boundary.finish(), interior.finish()]);

    let widen = (MC_REFERENCE_SAMPLES as f64 / opts.samples as f64).sqrt().max(1.0);
    let mut mc_var = Tracker::new("mc_var_s_given_u", 0.01 * widen * scale, "relative error of the sample residual variance");
    let mut mc_rate = Tracker::new("mc_rate", 0.01 * widen * scale, "plug-in rate against the closed form, bits");
    for k in 0..MC_SETS {
        let (g, p, cp) = random_point(&mut rng, ch);
        let est = mc_estimate(g, p, &cp, ch, opts.samples, opts.seed.wrapping_add(k as u64))?;
        mc_var.record((est.var_s_given_u - cp.d).abs() / cp.d);
        mc_rate.record((est.rate_bits - rate_per_state(g, p, &cp, ch)?).abs());
    }
    checks.extend([mc_var.finish(), mc_rate.finish()]);

    let rule = make_rule(&FadingModel::Rayleigh, opts.nodes)?;
    type Moment = (&'static str, f64, f64, fn(f64) -> f64);
    let moments: [Moment; 4] = [
        ("quadrature_mass", 1.0, 1e-10, |_| 1.0),
        ("quadrature_second_moment", 1.0, 1e-10, |g| g * g),
        ("quadrature_mean", std::f64::consts::PI.sqrt() / 2.0, 1e-8, |g| g),
        ("quadrature_fourth_moment", 2.0, 1e-8, |g| g.powi(4)),
    ];
    for (name, exact, tol, h) in moments {
        let mut t = Tracker::new(name, tol * scale, "Rayleigh rule at the configured node count");
        t.record((expect(&rule, h)? - exact).abs());
        checks.push(t.finish());
    }
    let fine = make_rule(&FadingModel::Rayleigh, (2 * opts.nodes).min(crate::quadrature::MAX_NODES))?;
    let mut refine = Tracker::new("quadrature_refinement", 1e-7 * scale, "fixed smooth policy, n against 2n nodes, bits");
    let smooth = |r: &crate::quadrature::QuadratureRule| -> Result<f64> {
        let policy = PerStatePolicy {
            nodes: r.nodes.clone(),
            weights: r.weights.clone(),
            power: r.nodes.iter().map(|g| 2.5 * g * g / (1.0 + g * g)).collect(),
            rho1: vec![0.8; r.len()],
            rho2: vec![-0.3; r.len()],
        };
        ergodic_rate(r, &policy, 0.5 * ch.q, ch)
    };
    refine.record((smooth(&rule)? - smooth(&fine)?).abs());
    checks.push(refine.finish());

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        seed: opts.seed,
        draws: opts.draws,
        samples: opts.samples,
        generator: MC_GENERATOR,
        checks,
        passed,
    })
}
