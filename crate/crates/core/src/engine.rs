//! Exact continuous-time simulation of the process driven by `n² L_n`.
//!
//! Direct method: the waiting time is exponential with the total rate and the
//! next transition is drawn proportionally to its rate. Schedule entries
//! already include the `n²` factor, so the clock runs in macroscopic
//! (hydrodynamic) time.
//!
//! Bonds whose rate only reads bulk sites can take a handful of values
//! `n²(c + n^{a−2})`, one per constraint value `c`, so they are kept in one
//! bucket per value. Selection picks a bucket with probability proportional to
//! its weight and then a uniform member; updates move a bond between buckets.
//! Both are O(1). The few entries that read the virtual cells (boundary flips
//! and the outermost bonds) are weighted individually. The total is recomputed
//! from the bucket sizes after every event, so it never drifts and the
//! incremental schedule always agrees exactly with a rebuild.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64(seed)` and switched to stream `replica`. Streams of distinct
//! replicas are independent and the output is identical on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::analysis::{box_average, BoxSpec, Side};
use crate::error::{Error, Result};
use crate::model::{constraint, mobile_pair, Configuration, Constraint, ModelParams, TransitionKind};

const NO_BUCKET: u8 = u8::MAX;
/// Constraint values `0..=3` plus the idle bucket.
const MAX_BUCKETS: usize = 5;

/// Rates of every possible transition, scaled by `n²`.
///
/// Entry `0` is the flip at site 1, entries `1..=n−2` are the bond exchanges and
/// entry `n−1` is the flip at site `n−1`.
#[derive(Debug, Clone)]
pub struct EventSchedule {
    n: usize,
    big_m: Constraint,
    /// Bucket of each entry, `NO_BUCKET` for special entries.
    bucket: Vec<u8>,
    /// Position inside the bucket, or inside `specials` for special entries.
    slot: Vec<u32>,
    /// Bucket `k` lives in `members[k * stride..k * stride + len[k]]`.
    members: Vec<u32>,
    stride: usize,
    len: [usize; MAX_BUCKETS],
    bucket_rate: [f64; MAX_BUCKETS],
    inverse_rate: [f64; MAX_BUCKETS],
    /// Buckets `0..idle` are sampled; bucket `idle` holds the rate-zero bulk bonds.
    idle: usize,
    specials: Vec<usize>,
    special_rate: Vec<f64>,
    /// First and last bond whose rate reads only bulk sites.
    bulk: (usize, usize),
    consts: RateConstants,
    total: f64,
}

/// Parameter-dependent factors, computed once per schedule.
#[derive(Debug, Clone, Copy)]
struct RateConstants {
    eps: f64,
    reservoir: f64,
    scale: f64,
}

impl RateConstants {
    fn new(params: &ModelParams) -> Self {
        RateConstants {
            eps: params.ssep_weight(),
            reservoir: params.reservoir_weight(),
            scale: params.time_scale(),
        }
    }

    /// Same arithmetic as the model's rate functions, so results agree bit for bit.
    fn entry(&self, index: usize, config: &Configuration, params: &ModelParams) -> f64 {
        let n = params.n;
        let raw = if index == 0 || index == n - 1 {
            let (z, b) = if index == 0 { (1, params.alpha) } else { (n - 1, params.beta) };
            let indicator = if config.site(z) == 0 { b } else { 1.0 - b };
            self.reservoir * indicator
        } else if mobile_pair(config, index) {
            constraint(config, index, params.big_m) + self.eps
        } else {
            0.0
        };
        raw * self.scale
    }
}

impl PartialEq for EventSchedule {
    /// Entrywise equality of the scheduled rates and totals; bucket order is irrelevant.
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.entries() == other.entries() && self.total == other.total
    }
}

impl EventSchedule {
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Every scaled rate, indexed like the schedule.
    pub fn entries(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind_of(&self, index: usize) -> TransitionKind {
        if index == 0 {
            TransitionKind::Flip(1)
        } else if index == self.n - 1 {
            TransitionKind::Flip(self.n - 1)
        } else {
            TransitionKind::Exchange(index)
        }
    }

    pub fn index_of(&self, kind: TransitionKind) -> usize {
        match kind {
            TransitionKind::Exchange(x) => x,
            TransitionKind::Flip(1) => 0,
            TransitionKind::Flip(_) => self.n - 1,
        }
    }

    fn entry(&self, index: usize) -> f64 {
        match self.bucket[index] {
            NO_BUCKET => self.special_rate[self.slot[index] as usize],
            b => self.bucket_rate[b as usize],
        }
    }

    /// Scaled rate currently scheduled for `kind`.
    pub fn rate(&self, kind: TransitionKind) -> f64 {
        self.entry(self.index_of(kind))
    }

    /// Relative deviation of the cached total from a plain sum of the entries.
    pub fn total_drift(&self) -> f64 {
        let exact: f64 = self.entries().iter().sum();
        if exact == 0.0 {
            self.total.abs()
        } else {
            ((self.total - exact) / exact).abs()
        }
    }

    #[inline]
    fn is_bulk(&self, index: usize) -> bool {
        index >= self.bulk.0 && index <= self.bulk.1
    }

    /// Bucket of a bulk bond, read straight from the occupation bytes.
    #[inline]
    fn bulk_bucket(&self, occ: &[u8], x: usize) -> usize {
        // occ[i] holds site i+1
        let pair = occ[x - 1] ^ occ[x];
        let c = match self.big_m {
            Constraint::M2 => occ[x - 2] + occ[x + 1],
            Constraint::M3 => {
                let (l2, l1, r1, r2) = (occ[x - 3], occ[x - 2], occ[x + 1], occ[x + 2]);
                l2 * l1 + l1 * r1 + r1 * r2
            }
        };
        if pair == 1 {
            c as usize
        } else {
            self.idle
        }
    }

    /// Moves a bulk entry to bucket `b`, possibly the one it is already in.
    #[inline]
    fn set_bucket(&mut self, index: usize, b: usize) {
        let old = self.bucket[index] as usize;
        let s = self.slot[index] as usize;
        self.len[old] -= 1;
        let last = self.members[old * self.stride + self.len[old]];
        self.members[old * self.stride + s] = last;
        self.slot[last as usize] = s as u32;
        let end = self.len[b];
        self.members[b * self.stride + end] = index as u32;
        self.len[b] = end + 1;
        self.slot[index] = end as u32;
        self.bucket[index] = b as u8;
    }

    /// Recomputes entries `lo..=hi` except `skip`.
    fn refresh(&mut self, lo: usize, hi: usize, skip: usize, config: &Configuration, params: &ModelParams) {
        let occ = config.occupations();
        for i in lo..=hi {
            if i == skip {
                continue;
            }
            if self.is_bulk(i) {
                let b = self.bulk_bucket(occ, i);
                self.set_bucket(i, b);
            } else {
                self.special_rate[self.slot[i] as usize] = self.consts.entry(i, config, params);
            }
        }
        self.recompute_total();
    }

    /// Update after the exchange on bond `x`.
    #[inline]
    fn after_exchange(&mut self, x: usize, config: &Configuration, params: &ModelParams) {
        let reach = self.big_m.reach();
        let (lo, hi) = (x.saturating_sub(reach + 1), x + 1 + reach);
        if lo >= self.bulk.0 && hi <= self.bulk.1 {
            let occ = config.occupations();
            for i in (lo..x).chain(x + 1..=hi) {
                let b = self.bulk_bucket(occ, i);
                self.set_bucket(i, b);
            }
            self.recompute_total();
        } else {
            self.refresh(lo, hi.min(self.n - 1), x, config, params);
        }
    }

    #[inline]
    fn recompute_total(&mut self) {
        let mut total = 0.0;
        for k in 0..self.idle {
            total += self.len[k] as f64 * self.bucket_rate[k];
        }
        for &r in &self.special_rate {
            total += r;
        }
        self.total = total;
    }

    /// Entry selected by `u ∈ [0, total)`.
    #[inline]
    fn select(&self, mut u: f64) -> usize {
        for k in 0..self.idle {
            let w = self.len[k] as f64 * self.bucket_rate[k];
            if u < w {
                let j = ((u * self.inverse_rate[k]) as usize).min(self.len[k] - 1);
                return self.members[k * self.stride + j] as usize;
            }
            u -= w;
        }
        for (&s, &r) in self.specials.iter().zip(&self.special_rate) {
            if u < r {
                return s;
            }
            u -= r;
        }
        // rounding pushed u past the total: take the last positive entry
        if let Some((&s, _)) = self
            .specials
            .iter()
            .zip(&self.special_rate)
            .rev()
            .find(|(_, &r)| r > 0.0)
        {
            return s;
        }
        let k = (0..self.idle)
            .rev()
            .find(|&k| self.len[k] > 0 && self.bucket_rate[k] > 0.0)
            .expect("positive total");
        self.members[k * self.stride + self.len[k] - 1] as usize
    }
}

/// Recomputes every schedule entry from scratch.
pub fn rebuild_schedule(config: &Configuration, params: &ModelParams) -> Result<EventSchedule> {
    params.validate()?;
    let n = params.n;
    if config.n() != n {
        return Err(Error::contract(format!(
            "configuration is for n={}, parameters have n={n}",
            config.n()
        )));
    }
    let reach = params.big_m.reach();
    let bulk = (1 + reach, n - 2 - reach);
    let consts = RateConstants::new(params);
    let idle = params.big_m.exponent() as usize + 1;
    let mut bucket_rate = [0.0; MAX_BUCKETS];
    let mut inverse_rate = [0.0; MAX_BUCKETS];
    for c in 0..idle {
        bucket_rate[c] = (c as f64 + consts.eps) * consts.scale;
        inverse_rate[c] = 1.0 / bucket_rate[c];
    }
    let stride = n;
    let mut members = vec![0u32; (idle + 1) * stride];
    let mut len = [0usize; MAX_BUCKETS];
    let mut bucket = vec![NO_BUCKET; n];
    let mut slot = vec![0u32; n];
    let mut specials = Vec::new();
    for i in 0..n {
        if (bulk.0..=bulk.1).contains(&i) {
            bucket[i] = idle as u8;
            slot[i] = len[idle] as u32;
            members[idle * stride + len[idle]] = i as u32;
            len[idle] += 1;
        } else {
            slot[i] = specials.len() as u32;
            specials.push(i);
        }
    }
    let mut schedule = EventSchedule {
        n,
        big_m: params.big_m,
        bucket,
        slot,
        members,
        stride,
        len,
        bucket_rate,
        inverse_rate,
        idle,
        special_rate: vec![0.0; specials.len()],
        specials,
        bulk,
        consts,
        total: 0.0,
    };
    schedule.refresh(0, n - 1, usize::MAX, config, params);
    Ok(schedule)
}

/// Schedule entries whose rate can change after `kind` fires.
pub fn affected_entries(kind: TransitionKind, params: &ModelParams) -> (usize, usize) {
    let n = params.n;
    // A bond y reads sites y−reach ..= y+1+reach.
    let reach = params.big_m.reach();
    let (first, last) = match kind {
        TransitionKind::Exchange(x) => (x, x + 1),
        TransitionKind::Flip(z) => (z, z),
    };
    let lo = first.saturating_sub(reach + 1);
    let hi = (last + reach).min(n - 1);
    (lo, hi)
}

/// Hooks called while a trajectory advances.
pub trait Observer {
    /// The configuration is held constant on `[from, to)`.
    fn hold(&mut self, _config: &Configuration, _from: f64, _to: f64) {}
    /// `kind` fired at `time`; `config` is the configuration right after it.
    fn event(&mut self, _config: &Configuration, _kind: TransitionKind, _time: f64) {}
}

impl Observer for () {}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn hold(&mut self, config: &Configuration, from: f64, to: f64) {
        (**self).hold(config, from, to)
    }
    fn event(&mut self, config: &Configuration, kind: TransitionKind, time: f64) {
        (**self).event(config, kind, time)
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn hold(&mut self, config: &Configuration, from: f64, to: f64) {
        self.0.hold(config, from, to);
        self.1.hold(config, from, to);
    }
    fn event(&mut self, config: &Configuration, kind: TransitionKind, time: f64) {
        self.0.event(config, kind, time);
        self.1.event(config, kind, time);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Event { kind: TransitionKind, elapsed: f64 },
    /// Every rate is zero; the configuration can never change again.
    Absorbed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Reached,
    Absorbed { at: f64 },
}

/// Deterministic per-replica random stream.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// A single trajectory. Not meant to be shared between threads mid-run.
#[derive(Debug, Clone)]
pub struct SimState {
    params: ModelParams,
    config: Configuration,
    time: f64,
    schedule: EventSchedule,
    rng: ChaCha8Rng,
    events: u64,
}

impl SimState {
    pub fn new(params: ModelParams, config: Configuration, rng: ChaCha8Rng) -> Result<Self> {
        let schedule = rebuild_schedule(&config, &params)?;
        Ok(SimState {
            params,
            config,
            time: 0.0,
            schedule,
            rng,
            events: 0,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn schedule(&self) -> &EventSchedule {
        &self.schedule
    }

    /// Number of transitions performed so far.
    pub fn events(&self) -> u64 {
        self.events
    }

    #[inline]
    fn draw_wait(&mut self) -> Option<f64> {
        let total = self.schedule.total();
        if total <= 0.0 {
            return None;
        }
        let e: f64 = self.rng.sample(Exp1);
        Some(e / total)
    }

    #[inline]
    fn fire(&mut self) -> TransitionKind {
        let target = self.rng.random::<f64>() * self.schedule.total();
        let index = self.schedule.select(target);
        let kind = self.schedule.kind_of(index);
        match kind {
            TransitionKind::Exchange(x) => self.config.swap_bond(x),
            TransitionKind::Flip(z) => self.config.toggle_site(z),
        }
        // the fired bond keeps its pair and its constraint
        match kind {
            TransitionKind::Exchange(x) => self.schedule.after_exchange(x, &self.config, &self.params),
            TransitionKind::Flip(_) => {
                let (lo, hi) = affected_entries(kind, &self.params);
                self.schedule.refresh(lo, hi, usize::MAX, &self.config, &self.params);
            }
        }
        self.events += 1;
        kind
    }

    /// Performs one transition.
    pub fn step(&mut self) -> StepOutcome {
        match self.draw_wait() {
            None => StepOutcome::Absorbed,
            Some(elapsed) => {
                self.time += elapsed;
                let kind = self.fire();
                StepOutcome::Event { kind, elapsed }
            }
        }
    }

    /// Runs until time `t_end`. The pending event that would fire after
    /// `t_end` is discarded, which is exact because the clock is memoryless.
    pub fn advance_to<O: Observer>(&mut self, t_end: f64, mut obs: O) -> RunStatus {
        while self.time < t_end {
            let Some(wait) = self.draw_wait() else {
                obs.hold(&self.config, self.time, t_end);
                return RunStatus::Absorbed { at: self.time };
            };
            let next = self.time + wait;
            if next >= t_end {
                obs.hold(&self.config, self.time, t_end);
                self.time = t_end;
                break;
            }
            obs.hold(&self.config, self.time, next);
            self.time = next;
            let kind = self.fire();
            obs.event(&self.config, kind, next);
        }
        RunStatus::Reached
    }
}

/// Draws a configuration with independent sites, site `x` occupied with probability `g(x/n)`.
pub fn sample_initial<G, R>(g: G, params: &ModelParams, rng: &mut R) -> Result<Configuration>
where
    G: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    let n = params.n;
    let mut occ = Vec::with_capacity(n - 1);
    for x in 1..n {
        let p = g(x as f64 / n as f64);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::input(format!(
                "initial profile value {p} at u={} outside [0,1]",
                x as f64 / n as f64
            )));
        }
        occ.push((rng.random::<f64>() < p) as u8);
    }
    Configuration::for_params(occ, params)
}

/// Net number of particles that entered through each boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipCounter {
    pub left_in: u64,
    pub left_out: u64,
    pub right_in: u64,
    pub right_out: u64,
}

impl FlipCounter {
    pub fn net_left(&self) -> i64 {
        self.left_in as i64 - self.left_out as i64
    }

    pub fn net_right(&self) -> i64 {
        self.right_in as i64 - self.right_out as i64
    }

    pub fn net(&self) -> i64 {
        self.net_left() + self.net_right()
    }
}

impl Observer for FlipCounter {
    fn event(&mut self, config: &Configuration, kind: TransitionKind, _time: f64) {
        if let TransitionKind::Flip(z) = kind {
            let entered = config.site(z) == 1;
            match (z == 1, entered) {
                (true, true) => self.left_in += 1,
                (true, false) => self.left_out += 1,
                (false, true) => self.right_in += 1,
                (false, false) => self.right_out += 1,
            }
        }
    }
}

/// Event-exact time integral of every site's occupation over a window `[from, to]`.
///
/// Accumulation is lazy: a site is only touched when it changes.
#[derive(Debug, Clone)]
pub struct OccupationTime {
    from: f64,
    to: f64,
    value: Vec<u8>,
    since: Vec<f64>,
    integral: Vec<f64>,
}

impl OccupationTime {
    pub fn new(config: &Configuration, now: f64, from: f64, to: f64) -> Self {
        let sites = config.n() - 1;
        OccupationTime {
            from,
            to,
            value: config.occupations().to_vec(),
            since: vec![now; sites],
            integral: vec![0.0; sites],
        }
    }

    fn overlap(&self, a: f64, b: f64) -> f64 {
        (b.min(self.to) - a.max(self.from)).max(0.0)
    }

    fn touch(&mut self, x: usize, new_value: u8, time: f64) {
        let i = x - 1;
        if self.value[i] == 1 {
            self.integral[i] += self.overlap(self.since[i], time);
        }
        self.value[i] = new_value;
        self.since[i] = time;
    }

    /// Integrals `∫ η_s(x) ds` over the window, closing all open intervals at `now`.
    pub fn integrals(&self, now: f64) -> Vec<f64> {
        self.integral
            .iter()
            .zip(self.value.iter().zip(&self.since))
            .map(|(&acc, (&v, &since))| {
                if v == 1 {
                    acc + self.overlap(since, now)
                } else {
                    acc
                }
            })
            .collect()
    }

    /// Time-averaged occupation of every site over the part of the window elapsed by `now`.
    pub fn averages(&self, now: f64) -> Vec<f64> {
        let span = self.overlap(self.from.min(now), now).max(0.0);
        let span = if span > 0.0 { span } else { f64::NAN };
        self.integrals(now).into_iter().map(|v| v / span).collect()
    }
}

impl Observer for OccupationTime {
    fn event(&mut self, config: &Configuration, kind: TransitionKind, time: f64) {
        match kind {
            TransitionKind::Exchange(x) => {
                if config.site(x) != config.site(x + 1) {
                    self.touch(x, config.site(x), time);
                    self.touch(x + 1, config.site(x + 1), time);
                }
            }
            TransitionKind::Flip(z) => self.touch(z, config.site(z), time),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Observable {
    /// Every site's occupation.
    Profile,
    /// Averages over consecutive right boxes of width `ell` starting at site 1.
    BoxAverages { ell: usize },
    /// `η(1)` and `η(n−1)`.
    BoundaryOccupations,
    /// Event-exact time average of each site over `[from, to]`, reported once.
    TimeAveragedProfile { from: f64, to: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverSpec {
    pub sample_times: Vec<f64>,
    pub observables: Vec<Observable>,
}

impl ObserverSpec {
    pub fn new(sample_times: Vec<f64>, observables: Vec<Observable>) -> Result<Self> {
        let spec = ObserverSpec {
            sample_times,
            observables,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn horizon(&self) -> f64 {
        let last_sample = self.sample_times.last().copied().unwrap_or(0.0);
        self.observables
            .iter()
            .filter_map(|o| match o {
                Observable::TimeAveragedProfile { to, .. } => Some(*to),
                _ => None,
            })
            .fold(last_sample, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_times.is_empty() {
            return Err(Error::input("at least one sample time is required"));
        }
        if self.sample_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::input("sample times must be finite and nonnegative"));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("sample times must be strictly increasing"));
        }
        for o in &self.observables {
            match o {
                Observable::BoxAverages { ell } if *ell == 0 => {
                    return Err(Error::input("box width must be at least 1"));
                }
                Observable::TimeAveragedProfile { from, to } if !(from < to) || *from < 0.0 => {
                    return Err(Error::input("time-average window must satisfy 0 <= from < to"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn wants(&self, f: impl Fn(&Observable) -> bool) -> bool {
        self.observables.iter().any(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: f64,
    pub particles: usize,
    /// Net particles gained through site 1 since time 0.
    pub net_flips_left: i64,
    /// Net particles gained through site `n−1` since time 0.
    pub net_flips_right: i64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boxes: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boundary: Option<[u8; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAverageRecord {
    pub from: f64,
    pub to: f64,
    /// Average occupation of sites `1..n−1`.
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub params: ModelParams,
    pub seed: u64,
    pub replica: u64,
    pub spec: ObserverSpec,
    pub samples: Vec<SampleRecord>,
    pub time_average: Option<TimeAverageRecord>,
    /// Time at which the trajectory got stuck, if it did.
    pub absorbed_at: Option<f64>,
    pub events: u64,
}

/// Consecutive non-overlapping right boxes of width `ell` covering `1..n−1` from the left.
pub fn box_starts(n: usize, ell: usize) -> impl Iterator<Item = usize> {
    let sites = n - 1;
    let count = if ell == 0 { 0 } else { sites / ell };
    (0..count).map(move |k| 1 + k * ell)
}

fn record_sample(
    spec: &ObserverSpec,
    t: f64,
    config: &Configuration,
    flips: &FlipCounter,
) -> SampleRecord {
    let n = config.n();
    let mut rec = SampleRecord {
        t,
        particles: config.particle_count(),
        net_flips_left: flips.net_left(),
        net_flips_right: flips.net_right(),
        profile: None,
        boxes: None,
        boundary: None,
    };
    for o in &spec.observables {
        match o {
            Observable::Profile => rec.profile = Some(config.occupations().to_vec()),
            Observable::BoxAverages { ell } => {
                let boxes = box_starts(n, *ell)
                    .map(|x| {
                        box_average(
                            config,
                            &BoxSpec {
                                x,
                                ell: *ell,
                                side: Side::Right,
                            },
                        )
                        .expect("boxes lie inside the bulk")
                    })
                    .collect();
                rec.boxes = Some(boxes);
            }
            Observable::BoundaryOccupations => {
                rec.boundary = Some([config.site(1), config.site(n - 1)])
            }
            Observable::TimeAveragedProfile { .. } => {}
        }
    }
    rec
}

/// Runs replica 0 of a trajectory; see [`simulate_replica`].
pub fn simulate<G>(
    params: &ModelParams,
    g: G,
    spec: &ObserverSpec,
    seed: u64,
) -> Result<ObservationRecord>
where
    G: Fn(f64) -> f64,
{
    simulate_replica(params, g, spec, seed, 0)
}

/// Samples an initial configuration from `g`, runs to the last requested time
/// and records the observables. The result depends only on the arguments.
pub fn simulate_replica<G>(
    params: &ModelParams,
    g: G,
    spec: &ObserverSpec,
    seed: u64,
    replica: u64,
) -> Result<ObservationRecord>
where
    G: Fn(f64) -> f64,
{
    params.validate()?;
    spec.validate()?;
    let mut rng = replica_rng(seed, replica);
    let config = sample_initial(g, params, &mut rng)?;
    let mut state = SimState::new(*params, config, rng)?;

    let window = spec.observables.iter().find_map(|o| match o {
        Observable::TimeAveragedProfile { from, to } => Some((*from, *to)),
        _ => None,
    });
    let mut occupation = window.map(|(from, to)| OccupationTime::new(state.config(), 0.0, from, to));
    let mut flips = FlipCounter::default();

    let mut samples = Vec::with_capacity(spec.sample_times.len());
    let mut absorbed_at = None;
    let mut checkpoints: Vec<f64> = spec.sample_times.clone();
    checkpoints.push(spec.horizon());
    for (k, &t) in checkpoints.iter().enumerate() {
        if absorbed_at.is_none() && t > state.time() {
            let status = match occupation.as_mut() {
                Some(occ) => state.advance_to(t, (&mut flips, occ)),
                None => state.advance_to(t, &mut flips),
            };
            if let RunStatus::Absorbed { at } = status {
                absorbed_at = Some(at);
            }
        }
        if k < spec.sample_times.len() {
            if absorbed_at.is_some_and(|at| at < t) {
                break;
            }
            samples.push(record_sample(spec, t, state.config(), &flips));
        }
    }

    let time_average = match (window, occupation) {
        (Some((from, to)), Some(occ)) if absorbed_at.is_none() => Some(TimeAverageRecord {
            from,
            to,
            profile: occ.averages(to),
        }),
        _ => None,
    };
    debug_assert!(!spec.wants(|o| matches!(o, Observable::TimeAveragedProfile { .. })) || time_average.is_some() || absorbed_at.is_some());

    Ok(ObservationRecord {
        params: *params,
        seed,
        replica,
        spec: spec.clone(),
        samples,
        time_average,
        absorbed_at,
        events: state.events(),
    })
}
