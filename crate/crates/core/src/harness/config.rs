//! Plain-text `key=value` run configuration.
//!
//! Tokens are separated by whitespace (or newlines); `#` starts a comment that
//! runs to the end of the line. Lists are comma separated. Unknown keys are
//! rejected.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Constraint, Dynamics, ModelParams};
use crate::pde::{stationary_profile, uniform_times, BoundaryCondition};

/// Every recognised key, in emission order.
pub const KEYS: &[&str] = &[
    "mode",
    "n",
    "theta",
    "m",
    "a",
    "alpha",
    "beta",
    "big_m",
    "dynamics",
    "kappa",
    "J",
    "T",
    "sample_times",
    "replicas",
    "seed",
    "width",
    "initial",
    "n_ladder",
    "average_from",
    "average_to",
    "output",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Solve,
    Stationary,
    Compare,
    Diagnose,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Solve => "solve",
            Mode::Stationary => "stationary",
            Mode::Compare => "compare",
            Mode::Diagnose => "diagnose",
        }
    }

    fn uses_replicas(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Compare | Mode::Diagnose)
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "simulate" => Mode::Simulate,
            "solve" => Mode::Solve,
            "stationary" => Mode::Stationary,
            "compare" => Mode::Compare,
            "diagnose" => Mode::Diagnose,
            _ => return Err(format!("unknown mode `{s}`")),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Initial density profile shared by the particle system and the PDE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile {
    Constant { value: f64 },
    /// Straight line from `left` at `u=0` to `right` at `u=1`.
    Linear { left: f64, right: f64 },
    /// `α + (β−α)u + amp·sin(πu)`.
    Sine { amp: f64 },
    /// Closed-form stationary profile of the run's boundary condition.
    Stationary,
}

impl InitialProfile {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let nums: std::result::Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let nums = nums.map_err(|e| format!("bad number in `{s}`: {e}"))?;
        match (head, nums.as_slice()) {
            ("constant", [v]) => Ok(InitialProfile::Constant { value: *v }),
            ("linear", [l, r]) => Ok(InitialProfile::Linear { left: *l, right: *r }),
            ("sine", [amp]) => Ok(InitialProfile::Sine { amp: *amp }),
            ("stationary", []) => Ok(InitialProfile::Stationary),
            _ => Err(format!(
                "expected constant:<v>, linear:<left>:<right>, sine:<amp> or stationary, got `{s}`"
            )),
        }
    }

    pub fn evaluate(&self, u: f64, bc: &BoundaryCondition) -> f64 {
        match *self {
            InitialProfile::Constant { value } => value,
            InitialProfile::Linear { left, right } => left + (right - left) * u,
            InitialProfile::Sine { amp } => {
                bc.alpha() + (bc.beta() - bc.alpha()) * u + amp * (std::f64::consts::PI * u).sin()
            }
            InitialProfile::Stationary => stationary_profile(bc, u).unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialProfile::Constant { value } => write!(f, "constant:{value}"),
            InitialProfile::Linear { left, right } => write!(f, "linear:{left}:{right}"),
            InitialProfile::Sine { amp } => write!(f, "sine:{amp}"),
            InitialProfile::Stationary => f.write_str("stationary"),
        }
    }
}

/// Boundary condition of the hydrodynamic limit: Dirichlet for `θ < 1`,
/// Robin with `κ = m` for `θ = 1`, Neumann (Robin with `κ = 0`) for `θ > 1`.
/// An explicit `kappa` always selects Robin with that value.
pub fn regime_boundary(
    theta: f64,
    m: f64,
    alpha: f64,
    beta: f64,
    kappa_override: Option<f64>,
) -> Result<BoundaryCondition> {
    if let Some(kappa) = kappa_override {
        return BoundaryCondition::robin(kappa, alpha, beta);
    }
    if theta < 1.0 {
        BoundaryCondition::dirichlet(alpha, beta)
    } else if theta == 1.0 {
        BoundaryCondition::robin(m, alpha, beta)
    } else {
        BoundaryCondition::neumann(alpha, beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: ModelParams,
    pub kappa_override: Option<f64>,
    pub bc: BoundaryCondition,
    pub j: usize,
    pub horizon: f64,
    pub sample_times: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub width: usize,
    pub initial: InitialProfile,
    pub n_ladder: Vec<usize>,
    pub average_window: Option<(f64, f64)>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Initial profile as a function of `u`.
    pub fn initial_profile(&self) -> impl Fn(f64) -> f64 + Copy + '_ {
        move |u| self.initial.evaluate(u, &self.bc)
    }

    /// Default coarse-graining width `⌊n/50⌋ ∨ 1`.
    pub fn default_width(n: usize) -> usize {
        (n / 50).max(1)
    }

    /// Same configuration at another system size (the width is rescaled only if it was the default).
    pub fn with_n(&self, n: usize) -> Result<Self> {
        let mut c = self.clone();
        let p = &self.params;
        c.params = ModelParams::new(n, p.theta, p.m, p.a, p.alpha, p.beta)?
            .with_constraint(p.big_m)
            .with_dynamics(p.dynamics);
        if self.width == Self::default_width(self.params.n) {
            c.width = Self::default_width(n);
        }
        Ok(c)
    }

    /// Canonical text form; `parse_config(&cfg.emit())` gives `cfg` back.
    pub fn emit(&self) -> String {
        let p = &self.params;
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("mode", self.mode.to_string());
        kv("n", p.n.to_string());
        kv("theta", p.theta.to_string());
        kv("m", p.m.to_string());
        kv("a", p.a.to_string());
        kv("alpha", p.alpha.to_string());
        kv("beta", p.beta.to_string());
        kv("big_m", p.big_m.exponent().to_string());
        kv(
            "dynamics",
            match p.dynamics {
                Dynamics::Full => "full",
                Dynamics::PurePmm => "pure_pmm",
            }
            .into(),
        );
        if let Some(k) = self.kappa_override {
            kv("kappa", k.to_string());
        }
        kv("J", self.j.to_string());
        kv("T", self.horizon.to_string());
        kv("sample_times", list(&self.sample_times));
        kv("replicas", self.replicas.to_string());
        kv("seed", self.seed.to_string());
        kv("width", self.width.to_string());
        kv("initial", self.initial.to_string());
        if !self.n_ladder.is_empty() {
            let ladder: Vec<String> = self.n_ladder.iter().map(|n| n.to_string()).collect();
            kv("n_ladder", ladder.join(","));
        }
        if let Some((from, to)) = self.average_window {
            kv("average_from", from.to_string());
            kv("average_to", to.to_string());
        }
        if let Some(path) = &self.output {
            kv("output", path.display().to_string());
        }
        out
    }
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::usage(key, format!("cannot parse `{v}`: {e}")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    v.split(',').filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
}

fn check(key: &str, ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::usage(key, message))
    }
}

/// Parses a configuration and applies the regime mapping.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut seen = std::collections::BTreeMap::new();
    for tok in tokens(text) {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::usage(tok, "expected key=value"))?;
        if !KEYS.contains(&k) {
            return Err(Error::usage(k, "unknown key"));
        }
        if seen.insert(k, v).is_some() {
            return Err(Error::usage(k, "given more than once"));
        }
    }
    let get = |k: &str| seen.get(k).copied();

    let mode = match get("mode") {
        Some(v) => v.parse::<Mode>().map_err(|e| Error::usage("mode", e))?,
        None => Mode::Simulate,
    };
    let n: usize = get("n").map_or(Ok(100), |v| num("n", v))?;
    check("n", n >= 4, "n must be at least 4")?;
    let theta: f64 = get("theta").map_or(Ok(0.0), |v| num("theta", v))?;
    check("theta", theta.is_finite() && theta >= 0.0, "theta must be >= 0")?;
    let m: f64 = get("m").map_or(Ok(1.0), |v| num("m", v))?;
    check("m", m.is_finite() && m > 0.0, "m must be > 0")?;
    let a: f64 = get("a").map_or(Ok(1.5), |v| num("a", v))?;
    check("a", a > 1.0 && a < 2.0, "a must lie in (1,2)")?;
    let alpha: f64 = get("alpha").map_or(Ok(0.2), |v| num("alpha", v))?;
    check("alpha", alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)")?;
    let beta: f64 = get("beta").map_or(Ok(0.8), |v| num("beta", v))?;
    check("beta", beta > 0.0 && beta < 1.0, "beta must lie in (0,1)")?;
    let big_m = match get("big_m") {
        Some(v) => Constraint::from_exponent(num("big_m", v)?)
            .map_err(|e| Error::usage("big_m", e.to_string()))?,
        None => Constraint::M2,
    };
    let dynamics = match get("dynamics") {
        None | Some("full") => Dynamics::Full,
        Some("pure_pmm") => Dynamics::PurePmm,
        Some(v) => return Err(Error::usage("dynamics", format!("expected full or pure_pmm, got `{v}`"))),
    };
    let params = ModelParams::new(n, theta, m, a, alpha, beta)
        .map_err(|e| Error::usage("n", e.to_string()))?
        .with_constraint(big_m)
        .with_dynamics(dynamics);

    let kappa_override: Option<f64> = get("kappa").map(|v| num("kappa", v)).transpose()?;
    if let Some(k) = kappa_override {
        check("kappa", k.is_finite() && k >= 0.0, "kappa must be >= 0")?;
    }
    let bc = regime_boundary(theta, m, alpha, beta, kappa_override)
        .map_err(|e| Error::usage("kappa", e.to_string()))?;

    let j: usize = get("J").map_or(Ok(256), |v| num("J", v))?;
    check("J", j >= 2, "J must be at least 2")?;
    let horizon: f64 = get("T").map_or(Ok(1.0), |v| num("T", v))?;
    check("T", horizon.is_finite() && horizon > 0.0, "T must be > 0")?;
    let sample_times = match get("sample_times") {
        Some(v) => list::<f64>("sample_times", v)?,
        None => uniform_times(horizon, 4),
    };
    check("sample_times", !sample_times.is_empty(), "at least one sample time is required")?;
    check(
        "sample_times",
        sample_times.iter().all(|t| (0.0..=horizon).contains(t)),
        "sample times must lie in [0, T]",
    )?;
    check(
        "sample_times",
        sample_times.windows(2).all(|w| w[1] > w[0]),
        "sample times must be strictly increasing",
    )?;
    let replicas: usize = get("replicas").map_or(Ok(1), |v| num("replicas", v))?;
    check(
        "replicas",
        replicas >= 1 || !mode.uses_replicas(),
        "at least one replica is required",
    )?;
    let seed: u64 = get("seed").map_or(Ok(0), |v| num("seed", v))?;
    let width: usize = get("width").map_or(Ok(RunConfig::default_width(n)), |v| num("width", v))?;
    check("width", width >= 1 && width < n, "width must lie in 1..n")?;
    let initial = match get("initial") {
        Some(v) => InitialProfile::parse(v).map_err(|e| Error::usage("initial", e))?,
        None => InitialProfile::Linear { left: alpha, right: beta },
    };
    for i in 0..=64 {
        let u = i as f64 / 64.0;
        let g = initial.evaluate(u, &bc);
        check("initial", (0.0..=1.0).contains(&g), "profile must take values in [0,1]")?;
    }
    let n_ladder: Vec<usize> = get("n_ladder").map_or(Ok(Vec::new()), |v| list("n_ladder", v))?;
    check("n_ladder", n_ladder.iter().all(|&k| k >= 4), "every n must be at least 4")?;
    let from: Option<f64> = get("average_from").map(|v| num("average_from", v)).transpose()?;
    let to: Option<f64> = get("average_to").map(|v| num("average_to", v)).transpose()?;
    let average_window = match (from, to) {
        (None, None) => None,
        (Some(f), Some(t)) => {
            check("average_from", f >= 0.0 && f < t, "need 0 <= average_from < average_to")?;
            Some((f, t))
        }
        (Some(_), None) => return Err(Error::usage("average_to", "missing")),
        (None, Some(_)) => return Err(Error::usage("average_from", "missing")),
    };
    let output = get("output").map(PathBuf::from);

    Ok(RunConfig {
        mode,
        params,
        kappa_override,
        bc,
        j,
        horizon,
        sample_times,
        replicas,
        seed,
        width,
        initial,
        n_ladder,
        average_window,
        output,
    })
}
