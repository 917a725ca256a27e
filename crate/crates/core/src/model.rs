//! Configurations, parameters and the microscopic transition rates.
//!
//! The bulk is `{1, …, n−1}`. Sites `0` and `n` are read-only cells holding the
//! reservoir densities (`α` on the left, `β` on the right), so the exchange
//! constraint `η(x−1)+η(x+2)` is one formula on every bond. Rates returned here
//! are unscaled: the `n²` diffusive factor is applied by the engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which generator terms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// `L_P + n^{a−2} L_S + L_B`.
    #[default]
    Full,
    /// `L_P` alone with empty virtual cells; only used to study blocked configurations.
    PurePmm,
}

/// Exponent of the porous medium equation; selects the exchange constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Constraint {
    /// `c = η(x−1) + η(x+2)`.
    #[default]
    M2,
    /// `c = η(x−2)η(x−1) + η(x−1)η(x+2) + η(x+2)η(x+3)`.
    M3,
}

impl Constraint {
    pub fn from_exponent(m: u32) -> Result<Self> {
        match m {
            2 => Ok(Constraint::M2),
            3 => Ok(Constraint::M3),
            other => Err(Error::input(format!(
                "PME exponent must be 2 or 3, got {other}"
            ))),
        }
    }

    pub fn exponent(self) -> u32 {
        match self {
            Constraint::M2 => 2,
            Constraint::M3 => 3,
        }
    }

    /// How far (in sites) the constraint of bond `{x,x+1}` reaches to the left of `x`.
    pub fn reach(self) -> usize {
        match self {
            Constraint::M2 => 1,
            Constraint::M3 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub theta: f64,
    pub m: f64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub big_m: Constraint,
    #[serde(default)]
    pub dynamics: Dynamics,
}

impl ModelParams {
    /// Builds validated parameters for the full dynamics with `M = 2`.
    pub fn new(n: usize, theta: f64, m: f64, a: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = ModelParams {
            n,
            theta,
            m,
            a,
            alpha,
            beta,
            big_m: Constraint::M2,
            dynamics: Dynamics::Full,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_constraint(mut self, big_m: Constraint) -> Self {
        self.big_m = big_m;
        self
    }

    pub fn with_dynamics(mut self, dynamics: Dynamics) -> Self {
        self.dynamics = dynamics;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::input(format!("n must be at least 4, got {}", self.n)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::input(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::input(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if !(self.m > 0.0) || !self.m.is_finite() {
            return Err(Error::input(format!("m must be positive, got {}", self.m)));
        }
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return Err(Error::input(format!("theta must be nonnegative, got {}", self.theta)));
        }
        if !(self.a > 1.0 && self.a < 2.0) {
            return Err(Error::input(format!("a must lie in (1,2), got {}", self.a)));
        }
        Ok(())
    }

    /// Weight `n^{a−2}` of the SSEP generator (zero in pure-PMM mode).
    pub fn ssep_weight(&self) -> f64 {
        match self.dynamics {
            Dynamics::Full => (self.n as f64).powf(self.a - 2.0),
            Dynamics::PurePmm => 0.0,
        }
    }

    /// Reservoir prefactor `m / n^θ` (zero in pure-PMM mode).
    pub fn reservoir_weight(&self) -> f64 {
        match self.dynamics {
            Dynamics::Full => self.m / (self.n as f64).powf(self.theta),
            Dynamics::PurePmm => 0.0,
        }
    }

    /// Diffusive speed-up `n²`.
    pub fn time_scale(&self) -> f64 {
        let n = self.n as f64;
        n * n
    }

    /// Values the virtual cells `η(0)` and `η(n)` read under these parameters.
    pub fn virtual_cells(&self) -> (f64, f64) {
        match self.dynamics {
            Dynamics::Full => (self.alpha, self.beta),
            Dynamics::PurePmm => (0.0, 0.0),
        }
    }

    /// Number of bulk sites, `n − 1`.
    pub fn sites(&self) -> usize {
        self.n - 1
    }
}

/// Occupation variables on `{1,…,n−1}` plus the two virtual boundary cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    occ: Vec<u8>,
    virtual_left: f64,
    virtual_right: f64,
}

impl Configuration {
    /// `occ[i]` is the occupation of site `i + 1`.
    pub fn new(occ: Vec<u8>, virtual_left: f64, virtual_right: f64) -> Result<Self> {
        if occ.len() < 3 {
            return Err(Error::input("a configuration needs at least 3 sites (n >= 4)"));
        }
        if let Some(bad) = occ.iter().position(|&v| v > 1) {
            return Err(Error::input(format!(
                "occupation at site {} is {}, expected 0 or 1",
                bad + 1,
                occ[bad]
            )));
        }
        Ok(Configuration {
            occ,
            virtual_left,
            virtual_right,
        })
    }

    /// Configuration whose virtual cells follow `params` (α, β, or 0 in pure-PMM mode).
    pub fn for_params(occ: Vec<u8>, params: &ModelParams) -> Result<Self> {
        if occ.len() != params.sites() {
            return Err(Error::contract(format!(
                "configuration has {} sites, parameters expect {}",
                occ.len(),
                params.sites()
            )));
        }
        let (l, r) = params.virtual_cells();
        Configuration::new(occ, l, r)
    }

    pub fn empty(params: &ModelParams) -> Self {
        Configuration::for_params(vec![0; params.sites()], params).expect("valid size")
    }

    pub fn full(params: &ModelParams) -> Self {
        Configuration::for_params(vec![1; params.sites()], params).expect("valid size")
    }

    /// Builds a configuration from the list of occupied sites.
    pub fn from_sites(sites: &[usize], params: &ModelParams) -> Result<Self> {
        let mut occ = vec![0u8; params.sites()];
        for &x in sites {
            if x == 0 || x >= params.n {
                return Err(Error::input(format!("site {x} outside the bulk 1..{}", params.n - 1)));
            }
            occ[x - 1] = 1;
        }
        Configuration::for_params(occ, params)
    }

    /// The configuration encoded by the low `n−1` bits of `bits` (bit `i` is site `i+1`).
    pub fn from_bits(bits: u64, params: &ModelParams) -> Self {
        let occ = (0..params.sites()).map(|i| ((bits >> i) & 1) as u8).collect();
        Configuration::for_params(occ, params).expect("valid size")
    }

    /// Lattice size `n` (the bulk has `n − 1` sites).
    pub fn n(&self) -> usize {
        self.occ.len() + 1
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occ
    }

    pub fn virtual_left(&self) -> f64 {
        self.virtual_left
    }

    pub fn virtual_right(&self) -> f64 {
        self.virtual_right
    }

    pub fn particle_count(&self) -> usize {
        self.occ.iter().map(|&v| v as usize).sum()
    }

    /// Occupation of bulk site `x ∈ {1,…,n−1}`.
    ///
    /// Panics if `x` is not a bulk site.
    #[inline]
    pub fn site(&self, x: usize) -> u8 {
        self.occ[x - 1]
    }

    /// Value of `η(x)` with the boundary convention: `x ≤ 0` reads the left
    /// reservoir cell and `x ≥ n` the right one.
    #[inline]
    pub fn read(&self, x: isize) -> f64 {
        if x <= 0 {
            self.virtual_left
        } else if x as usize >= self.n() {
            self.virtual_right
        } else {
            self.occ[x as usize - 1] as f64
        }
    }

    pub(crate) fn set_site(&mut self, x: usize, v: u8) {
        self.occ[x - 1] = v;
    }

    pub(crate) fn swap_bond(&mut self, x: usize) {
        self.occ.swap(x - 1, x);
    }

    pub(crate) fn toggle_site(&mut self, x: usize) {
        self.occ[x - 1] ^= 1;
    }

    /// Encodes the bulk as a bit pattern (only for `n ≤ 65`).
    pub fn to_bits(&self) -> u64 {
        self.occ
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &v)| acc | ((v as u64) << i))
    }

    fn check_bond(&self, x: usize) -> Result<()> {
        let n = self.n();
        if x < 1 || x > n - 2 {
            return Err(Error::contract(format!("bond index {x} outside 1..={}", n - 2)));
        }
        Ok(())
    }

    fn check_boundary_site(&self, z: usize) -> Result<()> {
        let n = self.n();
        if z != 1 && z != n - 1 {
            return Err(Error::contract(format!(
                "site {z} is not a boundary site (expected 1 or {})",
                n - 1
            )));
        }
        Ok(())
    }
}

/// A possible move out of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    /// Swap the contents of sites `x` and `x+1`.
    Exchange(usize),
    /// Complement the occupation of boundary site `z ∈ {1, n−1}`.
    Flip(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub kind: TransitionKind,
    /// Rate under the unscaled generator `L_n`.
    pub rate: f64,
}

fn check_sizes(config: &Configuration, params: &ModelParams) -> Result<()> {
    if config.n() != params.n {
        return Err(Error::contract(format!(
            "configuration is for n={}, parameters have n={}",
            config.n(),
            params.n
        )));
    }
    Ok(())
}

/// `a_{x,x+1} + a_{x+1,x}`, i.e. 1 iff exactly one of `x, x+1` is occupied.
#[inline]
pub(crate) fn mobile_pair(config: &Configuration, x: usize) -> bool {
    config.site(x) != config.site(x + 1)
}

/// The constraint `c_{x,x+1}(η)` evaluated with the boundary convention.
#[inline]
pub(crate) fn constraint(config: &Configuration, x: usize, big_m: Constraint) -> f64 {
    let x = x as isize;
    match big_m {
        Constraint::M2 => config.read(x - 1) + config.read(x + 2),
        Constraint::M3 => {
            let l1 = config.read(x - 1);
            let r1 = config.read(x + 2);
            config.read(x - 2) * l1 + l1 * r1 + r1 * config.read(x + 3)
        }
    }
}

/// Unscaled exchange rate of the constrained (porous medium) dynamics on bond `{x,x+1}`.
pub fn pmm_exchange_rate(config: &Configuration, x: usize, params: &ModelParams) -> Result<f64> {
    check_sizes(config, params)?;
    config.check_bond(x)?;
    Ok(pmm_rate_unchecked(config, x, params.big_m))
}

#[inline]
pub(crate) fn pmm_rate_unchecked(config: &Configuration, x: usize, big_m: Constraint) -> f64 {
    if mobile_pair(config, x) {
        constraint(config, x, big_m)
    } else {
        0.0
    }
}

/// Unscaled SSEP rate on bond `{x,x+1}`: 1 iff exactly one of the two sites is occupied.
pub fn ssep_exchange_rate(config: &Configuration, x: usize) -> Result<u8> {
    config.check_bond(x)?;
    Ok(mobile_pair(config, x) as u8)
}

/// Unscaled flip rate at a boundary site: `(m/n^θ)·(b(1−η(z)) + (1−b)η(z))`.
pub fn boundary_flip_rate(config: &Configuration, z: usize, params: &ModelParams) -> Result<f64> {
    check_sizes(config, params)?;
    config.check_boundary_site(z)?;
    Ok(flip_rate_unchecked(config, z, params))
}

#[inline]
pub(crate) fn flip_rate_unchecked(config: &Configuration, z: usize, params: &ModelParams) -> f64 {
    let b = if z == 1 { params.alpha } else { params.beta };
    let indicator = if config.site(z) == 0 { b } else { 1.0 - b };
    params.reservoir_weight() * indicator
}

/// Total unscaled rate of the exchange on bond `{x,x+1}`: `pmm + n^{a−2}·ssep`.
#[inline]
pub(crate) fn exchange_rate_unchecked(config: &Configuration, x: usize, params: &ModelParams) -> f64 {
    if mobile_pair(config, x) {
        constraint(config, x, params.big_m) + params.ssep_weight()
    } else {
        0.0
    }
}

/// `η^{x,x+1}`.
pub fn apply_exchange(config: &Configuration, x: usize) -> Result<Configuration> {
    config.check_bond(x)?;
    let mut out = config.clone();
    out.swap_bond(x);
    Ok(out)
}

/// `η^z` for a boundary site `z`.
pub fn apply_flip(config: &Configuration, z: usize) -> Result<Configuration> {
    config.check_boundary_site(z)?;
    let mut out = config.clone();
    out.toggle_site(z);
    Ok(out)
}

/// Applies a transition in place.
pub fn apply_transition(config: &mut Configuration, kind: TransitionKind) -> Result<()> {
    match kind {
        TransitionKind::Exchange(x) => {
            config.check_bond(x)?;
            config.swap_bond(x);
        }
        TransitionKind::Flip(z) => {
            config.check_boundary_site(z)?;
            config.toggle_site(z);
        }
    }
    Ok(())
}

/// Every transition with positive unscaled rate out of `config`.
pub fn transitions(config: &Configuration, params: &ModelParams) -> Result<Vec<Transition>> {
    check_sizes(config, params)?;
    let n = params.n;
    let mut out = Vec::with_capacity(n);
    for z in [1, n - 1] {
        let rate = flip_rate_unchecked(config, z, params);
        if rate > 0.0 {
            out.push(Transition {
                kind: TransitionKind::Flip(z),
                rate,
            });
        }
    }
    for x in 1..=n - 2 {
        let rate = exchange_rate_unchecked(config, x, params);
        if rate > 0.0 {
            out.push(Transition {
                kind: TransitionKind::Exchange(x),
                rate,
            });
        }
    }
    Ok(out)
}

/// `(L_n f)(η) = Σ rate(η→η′)·(f(η′) − f(η))` for the unscaled generator.
pub fn generator_apply<F>(config: &Configuration, f: F, params: &ModelParams) -> Result<f64>
where
    F: Fn(&Configuration) -> f64,
{
    let base = f(config);
    let mut total = 0.0;
    let mut next = config.clone();
    for t in transitions(config, params)? {
        apply_transition(&mut next, t.kind)?;
        total += t.rate * (f(&next) - base);
        apply_transition(&mut next, t.kind)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> ModelParams {
        ModelParams::new(n, 0.0, 1.0, 1.5, 0.3, 0.6).unwrap()
    }

    #[test]
    fn pmm_rate_two_neighbours() {
        let p = params(10);
        // η(x−1)=1, η(x)=1, η(x+1)=0, η(x+2)=1 at x=4
        let c = Configuration::from_sites(&[3, 4, 6], &p).unwrap();
        assert_eq!(pmm_exchange_rate(&c, 4, &p).unwrap(), 2.0);
    }

    #[test]
    fn pmm_rate_blocked_bond() {
        let p = params(10);
        let c = Configuration::from_sites(&[4], &p).unwrap();
        assert_eq!(pmm_exchange_rate(&c, 4, &p).unwrap(), 0.0);
    }

    #[test]
    fn pmm_rate_reads_left_reservoir_cell() {
        let p = params(10);
        let c = Configuration::from_sites(&[1], &p).unwrap();
        assert_eq!(pmm_exchange_rate(&c, 1, &p).unwrap(), 0.3);
    }

    #[test]
    fn pmm_rate_m3() {
        let p = params(12).with_constraint(Constraint::M3);
        // bond x=5: c = η3η4 + η4η7 + η7η8
        let c = Configuration::from_sites(&[3, 4, 5, 7, 8], &p).unwrap();
        assert_eq!(pmm_exchange_rate(&c, 5, &p).unwrap(), 3.0);
        let c = Configuration::from_sites(&[4, 5, 7], &p).unwrap();
        assert_eq!(pmm_exchange_rate(&c, 5, &p).unwrap(), 1.0);
    }

    #[test]
    fn pmm_rate_rejects_bad_bond() {
        let p = params(10);
        let c = Configuration::empty(&p);
        assert!(matches!(pmm_exchange_rate(&c, 0, &p), Err(Error::Contract(_))));
        assert!(matches!(pmm_exchange_rate(&c, 9, &p), Err(Error::Contract(_))));
        assert!(matches!(ssep_exchange_rate(&c, 9), Err(Error::Contract(_))));
    }

    #[test]
    fn ssep_rates() {
        let p = params(10);
        let c = Configuration::from_sites(&[2, 5, 6], &p).unwrap();
        assert_eq!(ssep_exchange_rate(&c, 2).unwrap(), 1);
        assert_eq!(ssep_exchange_rate(&c, 5).unwrap(), 0);
        assert_eq!(ssep_exchange_rate(&c, 3).unwrap(), 0);
    }

    #[test]
    fn boundary_rates() {
        let p = ModelParams::new(100, 0.0, 1.0, 1.5, 0.3, 0.5).unwrap();
        let empty = Configuration::empty(&p);
        let full = Configuration::full(&p);
        assert!((boundary_flip_rate(&empty, 1, &p).unwrap() - 0.3).abs() < 1e-15);
        assert!((boundary_flip_rate(&full, 1, &p).unwrap() - 0.7).abs() < 1e-15);
        let p = ModelParams::new(100, 1.0, 2.0, 1.5, 0.3, 0.5).unwrap();
        let full = Configuration::full(&p);
        assert!((boundary_flip_rate(&full, 99, &p).unwrap() - 0.01).abs() < 1e-15);
        assert!(matches!(boundary_flip_rate(&full, 50, &p), Err(Error::Contract(_))));
    }

    #[test]
    fn exchange_and_flip() {
        let p = params(8);
        let c = Configuration::from_sites(&[3], &p).unwrap();
        let d = apply_exchange(&c, 3).unwrap();
        assert_eq!(d, Configuration::from_sites(&[4], &p).unwrap());
        let same = Configuration::from_sites(&[3, 4], &p).unwrap();
        assert_eq!(apply_exchange(&same, 3).unwrap(), same);
        assert!(apply_exchange(&c, 7).is_err());

        let e = Configuration::empty(&p);
        let f = apply_flip(&e, 1).unwrap();
        assert_eq!(f.site(1), 1);
        let g = apply_flip(&Configuration::full(&p), 7).unwrap();
        assert_eq!(g.site(7), 0);
        assert!(apply_flip(&e, 3).is_err());
    }

    #[test]
    fn generator_kills_constants() {
        let p = params(7);
        for bits in 0..(1u64 << 6) {
            let c = Configuration::from_bits(bits, &p);
            assert_eq!(generator_apply(&c, |_| 3.5, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn generator_on_first_site_from_empty() {
        let p = ModelParams::new(5, 0.0, 1.0, 1.5, 0.4, 0.5).unwrap();
        let c = Configuration::empty(&p);
        let v = generator_apply(&c, |c| c.site(1) as f64, &p).unwrap();
        assert!((v - 0.4).abs() < 1e-15);
    }

    #[test]
    fn pure_pmm_blocked_generator_vanishes() {
        let p = params(8).with_dynamics(Dynamics::PurePmm);
        let c = Configuration::from_sites(&[2, 5], &p).unwrap();
        assert!(transitions(&c, &p).unwrap().is_empty());
        let v = generator_apply(&c, |c| c.to_bits() as f64, &p).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn validation() {
        assert!(ModelParams::new(3, 0.0, 1.0, 1.5, 0.3, 0.5).is_err());
        assert!(ModelParams::new(10, 0.0, 1.0, 2.0, 0.3, 0.5).is_err());
        assert!(ModelParams::new(10, 0.0, 0.0, 1.5, 0.3, 0.5).is_err());
        assert!(ModelParams::new(10, -1.0, 1.0, 1.5, 0.3, 0.5).is_err());
        assert!(ModelParams::new(10, 0.0, 1.0, 1.5, 1.2, 0.5).is_err());
        assert!(Constraint::from_exponent(4).is_err());
    }
}
