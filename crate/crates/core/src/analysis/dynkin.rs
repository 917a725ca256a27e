use serde::{Deserialize, Serialize};

use super::observables::{empirical_pairing, tau_h_unchecked};
use crate::engine::{replica_rng, sample_initial, Observer, SimState};
use crate::error::{Error, Result};
use crate::model::{Configuration, ModelParams, TransitionKind};

/// How the time integrals of a [`DynkinRecord`] were computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMode {
    /// Integrand held constant between consecutive events of the trajectory.
    EventExact,
    /// Trapezoidal rule on snapshots taken at the record times.
    SampledTrapezoid,
}

/// Terms of the Dynkin martingale for a time-independent test function `G`.
///
/// Index `k` refers to `times[k]`; every integral runs over `[0, times[k]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynkinRecord {
    pub n: usize,
    pub mode: IntegrationMode,
    pub times: Vec<f64>,
    /// `⟨π^n_t, G⟩`
    pub pairing: Vec<f64>,
    /// `∫ (1/n) Σ_x Δ_n G(x/n) τ_x h ds`
    pub bulk: Vec<f64>,
    /// `∫ {∇⁺_n G(0) τ_1 h − ∇⁻_n G(1) τ_{n−1} h} ds`
    pub boundary_gradient: Vec<f64>,
    /// `∫ m n^{1−θ} {G(1/n)(α − η(1)) + G((n−1)/n)(β − η(n−1))} ds`
    pub reservoir: Vec<f64>,
}

impl DynkinRecord {
    fn empty(n: usize, mode: IntegrationMode) -> Self {
        DynkinRecord {
            n,
            mode,
            times: Vec::new(),
            pairing: Vec::new(),
            bulk: Vec::new(),
            boundary_gradient: Vec::new(),
            reservoir: Vec::new(),
        }
    }

    /// Builds a record from snapshots `(t_k, η_{t_k})`, integrating by the trapezoidal rule.
    pub fn from_snapshots<G: Fn(f64) -> f64>(
        params: &ModelParams,
        g: G,
        snapshots: &[(f64, Configuration)],
    ) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::input("no snapshots"));
        }
        let w = Weights::new(params, &g);
        let mut rec = DynkinRecord::empty(params.n, IntegrationMode::SampledTrapezoid);
        let mut prev: Option<(f64, Terms)> = None;
        let mut acc = Terms::default();
        for (t, config) in snapshots {
            let terms = w.terms(config);
            if let Some((t0, before)) = prev {
                if *t <= t0 {
                    return Err(Error::input("snapshot times must be strictly increasing"));
                }
                let h = 0.5 * (t - t0);
                acc.bulk += h * (before.bulk + terms.bulk);
                acc.gradient += h * (before.gradient + terms.gradient);
                acc.reservoir += h * (before.reservoir + terms.reservoir);
            }
            rec.push(*t, empirical_pairing(config, &g), acc);
            prev = Some((*t, terms));
        }
        Ok(rec)
    }

    fn push(&mut self, t: f64, pairing: f64, acc: Terms) {
        self.times.push(t);
        self.pairing.push(pairing);
        self.bulk.push(acc.bulk);
        self.boundary_gradient.push(acc.gradient);
        self.reservoir.push(acc.reservoir);
    }
}

/// `M_t^n(G)` assembled from a record. `t` must be one of the record times and
/// the record must start at time 0.
pub fn dynkin_residual(record: &DynkinRecord, t: f64) -> Result<f64> {
    if record.times.first() != Some(&0.0) {
        return Err(Error::input("Dynkin record must start at t=0"));
    }
    if record.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("Dynkin record times are not increasing"));
    }
    let tol = 1e-12 * t.abs().max(1.0);
    let k = record
        .times
        .iter()
        .position(|&s| (s - t).abs() <= tol)
        .ok_or_else(|| Error::input(format!("Dynkin record has no entry at t={t}")))?;
    Ok(record.pairing[k]
        - record.pairing[0]
        - (record.bulk[k] + record.boundary_gradient[k] + record.reservoir[k]))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Terms {
    bulk: f64,
    gradient: f64,
    reservoir: f64,
}

impl Terms {
    fn sum(&self) -> f64 {
        self.bulk + self.gradient + self.reservoir
    }
}

#[derive(Debug, Clone)]
struct Weights {
    n: usize,
    /// `(1/n) Δ_n G(x/n)` at index `x`; index 0 unused.
    lap: Vec<f64>,
    grad_left: f64,
    grad_right: f64,
    res_prefactor: f64,
    g_first: f64,
    g_last: f64,
    eps: f64,
    alpha: f64,
    beta: f64,
}

impl Weights {
    fn new<G: Fn(f64) -> f64>(params: &ModelParams, g: &G) -> Self {
        let n = params.n;
        let nf = n as f64;
        let gv: Vec<f64> = (0..=n).map(|x| g(x as f64 / nf)).collect();
        let mut lap = vec![0.0; n];
        for x in 1..n {
            lap[x] = nf * (gv[x - 1] - 2.0 * gv[x] + gv[x + 1]);
        }
        Weights {
            n,
            lap,
            grad_left: nf * (gv[1] - gv[0]),
            grad_right: nf * (gv[n] - gv[n - 1]),
            res_prefactor: nf * params.reservoir_weight(),
            g_first: gv[1],
            g_last: gv[n - 1],
            eps: params.ssep_weight(),
            alpha: params.alpha,
            beta: params.beta,
        }
    }

    fn reservoir(&self, config: &Configuration) -> f64 {
        let n = self.n;
        self.res_prefactor
            * (self.g_first * (self.alpha - config.site(1) as f64)
                + self.g_last * (self.beta - config.site(n - 1) as f64))
    }

    fn gradient_from(&self, tau_first: f64, tau_last: f64) -> f64 {
        self.grad_left * tau_first - self.grad_right * tau_last
    }

    fn terms(&self, config: &Configuration) -> Terms {
        let n = self.n;
        let bulk = (1..n)
            .map(|x| self.lap[x] * tau_h_unchecked(config, x, self.eps))
            .sum();
        let gradient = self.gradient_from(
            tau_h_unchecked(config, 1, self.eps),
            tau_h_unchecked(config, n - 1, self.eps),
        );
        Terms {
            bulk,
            gradient,
            reservoir: self.reservoir(config),
        }
    }
}

/// `n² L_n ⟨π^n, G⟩` written through `τ_x h` and the reservoir terms.
pub fn dynkin_integrand<G: Fn(f64) -> f64>(
    config: &Configuration,
    g: G,
    params: &ModelParams,
) -> Result<f64> {
    if config.n() != params.n {
        return Err(Error::contract("configuration and parameters disagree on n"));
    }
    Ok(Weights::new(params, &g).terms(config).sum())
}

/// Event-exact integration of the Dynkin integrand along a trajectory.
///
/// `τ_x h` is cached per site and only refreshed around the sites a transition touched.
#[derive(Debug, Clone)]
pub struct DynkinObserver {
    w: Weights,
    tau: Vec<f64>,
    current: Terms,
    integral: Terms,
}

impl DynkinObserver {
    pub fn new<G: Fn(f64) -> f64>(params: &ModelParams, g: G, config: &Configuration) -> Self {
        let w = Weights::new(params, &g);
        let mut obs = DynkinObserver {
            tau: vec![0.0; params.n],
            w,
            current: Terms::default(),
            integral: Terms::default(),
        };
        obs.resync(config);
        obs
    }

    /// Recomputes the integrand from scratch, discarding accumulated rounding.
    pub fn resync(&mut self, config: &Configuration) {
        let n = self.w.n;
        for x in 1..n {
            self.tau[x] = tau_h_unchecked(config, x, self.w.eps);
        }
        self.current = self.w.terms(config);
    }

    pub fn integrand(&self) -> f64 {
        self.current.sum()
    }

    fn refresh(&mut self, config: &Configuration, lo: usize, hi: usize) {
        let n = self.w.n;
        let lo = lo.max(1);
        let hi = hi.min(n - 1);
        for x in lo..=hi {
            let new = tau_h_unchecked(config, x, self.w.eps);
            self.current.bulk += self.w.lap[x] * (new - self.tau[x]);
            self.tau[x] = new;
        }
        self.current.gradient = self.w.gradient_from(self.tau[1], self.tau[n - 1]);
        self.current.reservoir = self.w.reservoir(config);
    }
}

impl Observer for DynkinObserver {
    fn hold(&mut self, _config: &Configuration, from: f64, to: f64) {
        let dt = to - from;
        self.integral.bulk += self.current.bulk * dt;
        self.integral.gradient += self.current.gradient * dt;
        self.integral.reservoir += self.current.reservoir * dt;
    }

    fn event(&mut self, config: &Configuration, kind: TransitionKind, _time: f64) {
        match kind {
            TransitionKind::Exchange(x) => self.refresh(config, x.saturating_sub(1), x + 2),
            TransitionKind::Flip(z) => self.refresh(config, z.saturating_sub(1), z + 1),
        }
    }
}

/// Simulates one replica and records the Dynkin terms at `sample_times`
/// (time 0 is always included as the first entry).
pub fn record_dynkin<P, G>(
    params: &ModelParams,
    profile: P,
    g: G,
    sample_times: &[f64],
    seed: u64,
    replica: u64,
) -> Result<DynkinRecord>
where
    P: Fn(f64) -> f64,
    G: Fn(f64) -> f64 + Copy,
{
    params.validate()?;
    if sample_times.iter().any(|t| !t.is_finite() || *t < 0.0)
        || sample_times.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::input("sample times must be nonnegative and strictly increasing"));
    }
    let mut rng = replica_rng(seed, replica);
    let config = sample_initial(profile, params, &mut rng)?;
    let mut state = SimState::new(*params, config, rng)?;
    let mut obs = DynkinObserver::new(params, g, state.config());

    let mut rec = DynkinRecord::empty(params.n, IntegrationMode::EventExact);
    let mut times = vec![0.0];
    times.extend(sample_times.iter().copied().filter(|&t| t > 0.0));
    for t in times {
        state.advance_to(t, &mut obs);
        obs.resync(state.config());
        rec.push(t, empirical_pairing(state.config(), g), obs.integral);
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generator_apply, Dynamics};

    #[test]
    fn integrand_matches_generator() {
        let g = |u: f64| u * (1.0 - u) + 0.3 * u;
        for (theta, n) in [(0.0, 7usize), (1.0, 8), (2.5, 9)] {
            let params = ModelParams::new(n, theta, 1.7, 1.4, 0.35, 0.8).unwrap();
            for bits in 0..(1u64 << (n - 1)) {
                let c = Configuration::from_bits(bits, &params);
                let direct = params.time_scale()
                    * generator_apply(&c, |c| empirical_pairing(c, g), &params).unwrap();
                let via_tau = dynkin_integrand(&c, g, &params).unwrap();
                assert!(
                    (direct - via_tau).abs() < 1e-9 * (1.0 + direct.abs()),
                    "n={n} bits={bits:b}: {direct} vs {via_tau}"
                );
            }
        }
    }

    #[test]
    fn zero_at_time_zero() {
        let params = ModelParams::new(20, 1.0, 1.0, 1.5, 0.3, 0.7).unwrap();
        let rec = record_dynkin(&params, |_| 0.5, |u| u * (1.0 - u), &[0.1], 4, 0).unwrap();
        assert_eq!(dynkin_residual(&rec, 0.0).unwrap(), 0.0);
        assert!(dynkin_residual(&rec, 0.05).is_err());
    }

    #[test]
    fn frozen_dynamics_is_zero() {
        let params = ModelParams::new(8, 1.0, 1.0, 1.5, 0.3, 0.7)
            .unwrap()
            .with_dynamics(Dynamics::PurePmm);
        let blocked = Configuration::from_sites(&[2, 5], &params).unwrap();
        let snaps: Vec<_> = [0.0, 0.5, 1.0].iter().map(|&t| (t, blocked.clone())).collect();
        let rec = DynkinRecord::from_snapshots(&params, |u| u * (1.0 - u), &snaps).unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert!(dynkin_residual(&rec, t).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn incremental_integrand_tracks_full_recompute() {
        let params = ModelParams::new(30, 0.5, 1.0, 1.5, 0.2, 0.9).unwrap();
        let mut rng = replica_rng(11, 2);
        let config = sample_initial(|u| u, &params, &mut rng).unwrap();
        let mut state = SimState::new(params, config, rng).unwrap();
        let g = |u: f64| (3.0 * u).sin();
        let mut obs = DynkinObserver::new(&params, g, state.config());
        for k in 1..=50 {
            state.advance_to(k as f64 * 1e-3, &mut obs);
            let fresh = dynkin_integrand(state.config(), g, &params).unwrap();
            assert!((obs.integrand() - fresh).abs() < 1e-9 * (1.0 + fresh.abs()));
        }
    }
}
