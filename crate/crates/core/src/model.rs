//! Domain types shared by every other module: channel parameters, the fading
//! law, the coding triple `(rho1, rho2, d)` and tabulated per-state policies.
//!
//! Everything here is a plain immutable value. Validation is explicit through
//! [`validate_config`] and the `validate` methods so that hot numerical loops
//! never pay for it twice.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Smallest admissible distortion as a fraction of the state variance.
pub const D_MIN_FRACTION: f64 = 1e-9;

/// Tolerance on the correlation disk `rho1^2 + rho2^2 <= 1`.
pub const DISK_TOL: f64 = 1e-12;

pub const DEFAULT_QUADRATURE_NODES: usize = 64;

/// State variance `Q`, noise variance and average transmit power budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub q: f64,
    pub sigma_z2: f64,
    pub p_avg: f64,
}

impl ChannelParams {
    pub fn new(q: f64, sigma_z2: f64, p_avg: f64) -> Result<Self> {
        let ch = Self { q, sigma_z2, p_avg };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(Error::InvalidConfig("Q must be positive".into()));
        }
        if !(self.sigma_z2.is_finite() && self.sigma_z2 > 0.0) {
            return Err(Error::InvalidConfig("sigma_z2 must be positive".into()));
        }
        if !(self.p_avg.is_finite() && self.p_avg >= 0.0) {
            return Err(Error::InvalidConfig("P_avg must be non-negative".into()));
        }
        Ok(())
    }

    /// Smallest admissible `d` for this channel.
    pub fn d_min(&self) -> f64 {
        D_MIN_FRACTION * self.q
    }

    /// Same channel with a different power budget.
    pub fn with_budget(&self, p_avg: f64) -> Self {
        Self { p_avg, ..*self }
    }
}

/// Law of the fading amplitude `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FadingModel {
    /// Density `2g exp(-g^2)` on `g >= 0`, so `E[G^2] = 1`.
    Rayleigh,
    /// Point mass at `g0`.
    Degenerate {
        #[serde(rename = "g")]
        g0: f64,
    },
    /// Finite law over distinct amplitudes.
    Discrete { points: Vec<f64>, probs: Vec<f64> },
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            FadingModel::Rayleigh => Ok(()),
            FadingModel::Degenerate { g0 } => {
                if g0.is_finite() && *g0 >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(
                        "degenerate fading amplitude g must be non-negative".into(),
                    ))
                }
            }
            FadingModel::Discrete { points, probs } => {
                if points.is_empty() {
                    return Err(Error::InvalidConfig("discrete fading needs at least one point".into()));
                }
                if points.len() != probs.len() {
                    return Err(Error::InvalidConfig(format!(
                        "discrete fading has {} points but {} probabilities",
                        points.len(),
                        probs.len()
                    )));
                }
                if let Some(g) = points.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                    return Err(Error::InvalidConfig(format!(
                        "discrete fading amplitude {g} must be non-negative"
                    )));
                }
                if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(Error::InvalidConfig(format!(
                        "discrete fading probability {p} must be non-negative"
                    )));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "discrete fading probabilities sum to {total}, not 1"
                    )));
                }
                let mut sorted = points.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidConfig("discrete fading points must be distinct".into()));
                }
                Ok(())
            }
        }
    }
}

/// The triple `(rho1, rho2, d)` parameterizing the achievable region.
///
/// `rho1` correlates the input with the reconstructed part of the state,
/// `rho2` with the residual, and `d` is the per-letter reconstruction
/// distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingParams {
    pub rho1: f64,
    pub rho2: f64,
    pub d: f64,
}

impl CodingParams {
    pub fn new(rho1: f64, rho2: f64, d: f64) -> Result<Self> {
        let cp = Self { rho1, rho2, d };
        cp.validate()?;
        Ok(cp)
    }

    /// Checks the channel-independent invariants.
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("rho1", self.rho1), ("rho2", self.rho2)] {
            if !(r.is_finite() && (-1.0..=1.0).contains(&r)) {
                return Err(Error::InvalidParameter(format!("{name} = {r} must lie in [-1, 1]")));
            }
        }
        let r2 = self.rho1 * self.rho1 + self.rho2 * self.rho2;
        if r2 > 1.0 + DISK_TOL {
            return Err(Error::InvalidParameter(format!(
                "rho1^2 + rho2^2 = {r2} exceeds 1"
            )));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::InvalidParameter(format!("d = {} must be positive", self.d)));
        }
        Ok(())
    }

    /// Checks `d_min <= d <= Q` on top of [`CodingParams::validate`].
    pub fn validate_for(&self, ch: &ChannelParams) -> Result<()> {
        self.validate()?;
        if self.d < ch.d_min() {
            return Err(Error::InvalidParameter(format!(
                "d = {} is below the floor {}",
                self.d,
                ch.d_min()
            )));
        }
        if self.d > ch.q {
            return Err(Error::InvalidParameter(format!(
                "d = {} exceeds Q = {}",
                self.d, ch.q
            )));
        }
        Ok(())
    }

    /// `1 - rho1^2 - rho2^2`, clamped at zero.
    pub fn slack(&self) -> f64 {
        (1.0 - self.rho1 * self.rho1 - self.rho2 * self.rho2).max(0.0)
    }
}

/// Power and correlations tabulated over quadrature nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerStatePolicy {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub power: Vec<f64>,
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
}

impl PerStatePolicy {
    /// Zero power and zero correlations on every node.
    pub fn silent(nodes: &[f64], weights: &[f64]) -> Self {
        let n = nodes.len();
        Self {
            nodes: nodes.to_vec(),
            weights: weights.to_vec(),
            power: vec![0.0; n],
            rho1: vec![0.0; n],
            rho2: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if [self.weights.len(), self.power.len(), self.rho1.len(), self.rho2.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::InvalidParameter("policy columns differ in length".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("policy weights sum to {total}")));
        }
        if self.power.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter("policy power must be non-negative".into()));
        }
        for (a, b) in self.rho1.iter().zip(&self.rho2) {
            if a * a + b * b > 1.0 + DISK_TOL {
                return Err(Error::InvalidParameter(format!(
                    "policy correlations ({a}, {b}) leave the unit disk"
                )));
            }
        }
        Ok(())
    }
}

/// Logarithm base used when reporting rates.
///
/// All internal computations are carried out in bits; this only rescales
/// what is printed or written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Bits,
    Nats,
}

impl LogBase {
    /// Converts a rate expressed in bits into this unit.
    pub fn from_bits(self, bits: f64) -> f64 {
        match self {
            LogBase::Bits => bits,
            LogBase::Nats => bits * std::f64::consts::LN_2,
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            LogBase::Bits => "bits",
            LogBase::Nats => "nats",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" => Ok(LogBase::Bits),
            "e" => Ok(LogBase::Nats),
            other => Err(Error::InvalidConfig(format!(
                "log_base must be 2 or \"e\", got {other:?}"
            ))),
        }
    }
}

impl Serialize for LogBase {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LogBase::Bits => s.serialize_u64(2),
            LogBase::Nats => s.serialize_str("e"),
        }
    }
}

impl<'de> Deserialize<'de> for LogBase {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(2.0) => Ok(LogBase::Bits),
            Raw::Str(s) if s == "e" => Ok(LogBase::Nats),
            Raw::Str(s) if s == "2" => Ok(LogBase::Bits),
            _ => Err(serde::de::Error::custom("log_base must be 2 or \"e\"")),
        }
    }
}

fn default_nodes() -> usize {
    DEFAULT_QUADRATURE_NODES
}

/// On-disk run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "Q")]
    pub q: f64,
    pub sigma_z2: f64,
    #[serde(rename = "P_avg")]
    pub p_avg: f64,
    pub fading: FadingModel,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default)]
    pub log_base: LogBase,
}

impl Default for Config {
    /// Rayleigh fading with `P = 2.5`, `Q = 1`, `sigma_z^2 = 1`.
    fn default() -> Self {
        Self {
            q: 1.0,
            sigma_z2: 1.0,
            p_avg: 2.5,
            fading: FadingModel::Rayleigh,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            log_base: LogBase::Bits,
        }
    }
}

impl Config {
    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            q: self.q,
            sigma_z2: self.sigma_z2,
            p_avg: self.p_avg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_config(&self.channel(), &self.fading)?;
        if self.quadrature_nodes == 0 {
            return Err(Error::InvalidConfig("quadrature_nodes must be at least 1".into()));
        }
        if self.quadrature_nodes > crate::quadrature::MAX_NODES {
            return Err(Error::TooManyNodes(self.quadrature_nodes));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Succeeds iff the channel and fading invariants hold; otherwise names the
/// first violated one.
pub fn validate_config(channel: &ChannelParams, fading: &FadingModel) -> Result<()> {
    channel.validate()?;
    fading.validate()
}
