//! Particle system against the PDE: distances at sample times, stationary
//! time averages, boundary flux and the n-ladder trend.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::engine::{box_starts, replica_rng, sample_initial, FlipCounter, OccupationTime, RunStatus, SimState};
use crate::error::{Error, Result};
use crate::pde::{interpolate, solve, stationary_profile, SpaceTimeField};

/// What one replica contributes to a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replica: u64,
    /// Box averages at each sample time.
    pub boxes: Vec<Vec<f64>>,
    /// Box averages of the time-averaged profile, when a window is configured.
    pub time_average_boxes: Option<Vec<f64>>,
    /// Net particles gained through both boundaries over `[0, T]`.
    pub net_flips: i64,
    /// `(1/T) ∫ m n^{1−θ} {(α − η(1)) + (β − η(n−1))} ds`.
    pub boundary_current: f64,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDistance {
    pub t: f64,
    /// Mean absolute box error (discrete L1 norm on `[0,1]`).
    pub l1: f64,
    pub linf: f64,
    /// Monte Carlo standard error of the replica mean, averaged over boxes.
    pub mc_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistance {
    pub from: f64,
    pub to: f64,
    pub l1: f64,
    pub linf: f64,
    pub mc_stderr: f64,
    /// Replica-averaged box values and the closed form at the box centres.
    pub centres: Vec<f64>,
    pub measured: Vec<f64>,
    pub predicted: Vec<f64>,
}

/// Net boundary mass flux per unit macroscopic time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxEstimate {
    pub n: usize,
    /// From counted flips: `net / (n T)`.
    pub counted: f64,
    pub counted_stderr: f64,
    /// From the time-integrated flip intensity.
    pub current: f64,
    pub current_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub n: usize,
    pub width: usize,
    pub final_l1: f64,
    pub final_linf: f64,
    pub stationary_linf: Option<f64>,
    pub flux: FluxEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub width: usize,
    pub replicas: usize,
    pub seed: u64,
    pub times: Vec<TimeDistance>,
    pub stationary: Option<StationaryDistance>,
    pub flux: FluxEstimate,
    /// Reported only; never asserted.
    pub ladder: Vec<LadderEntry>,
    /// Ratios of consecutive ladder fluxes (current estimator).
    pub ladder_flux_ratios: Vec<f64>,
    pub ladder_l1_nonincreasing: Option<bool>,
    pub events: u64,
}

fn box_centres(n: usize, width: usize) -> Vec<f64> {
    box_starts(n, width)
        .map(|x| (x as f64 + (width as f64 - 1.0) / 2.0) / n as f64)
        .collect()
}

fn box_means(values: &[f64], n: usize, width: usize) -> Vec<f64> {
    box_starts(n, width)
        .map(|x| values[x - 1..x - 1 + width].iter().sum::<f64>() / width as f64)
        .collect()
}

/// Mean and standard error of the mean.
fn mean_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let k = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / k;
    if k < 2.0 {
        return (mean, f64::NAN);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Replica-averaged boxes against a predicted profile: `(l1, linf, mean stderr, means)`.
fn distance(rows: &[&Vec<f64>], predicted: &[f64]) -> (f64, f64, f64, Vec<f64>) {
    let boxes = predicted.len();
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    let mut se = 0.0;
    let mut means = Vec::with_capacity(boxes);
    for (b, &p) in predicted.iter().enumerate() {
        let (mean, stderr) = mean_stderr(rows.iter().map(|r| r[b]));
        let d = (mean - p).abs();
        l1 += d;
        linf = linf.max(d);
        se += stderr;
        means.push(mean);
    }
    let k = boxes.max(1) as f64;
    (l1 / k, linf, se / k, means)
}

/// Runs one replica of the comparison protocol at the configuration's `n`.
pub fn run_replica(cfg: &RunConfig, replica: u64) -> Result<ReplicaSummary> {
    let params = cfg.params;
    let n = params.n;
    let g = cfg.initial_profile();
    let mut rng = replica_rng(cfg.seed, replica);
    let config = sample_initial(g, &params, &mut rng)?;
    let mut state = SimState::new(params, config, rng)?;

    let horizon = cfg
        .average_window
        .map_or(cfg.horizon, |(_, to)| cfg.horizon.max(to));
    let mut flips = FlipCounter::default();
    let mut flux_window = OccupationTime::new(state.config(), 0.0, 0.0, cfg.horizon);
    let mut window = cfg
        .average_window
        .map(|(from, to)| OccupationTime::new(state.config(), 0.0, from, to));

    let mut checkpoints: Vec<f64> = cfg.sample_times.iter().copied().chain([cfg.horizon, horizon]).collect();
    checkpoints.sort_by(f64::total_cmp);
    checkpoints.dedup();
    let mut boxes = Vec::with_capacity(cfg.sample_times.len());
    let mut net_flips = 0;
    for &t in &checkpoints {
        let status = match window.as_mut() {
            Some(w) => state.advance_to(t, ((&mut flips, &mut flux_window), w)),
            None => state.advance_to(t, (&mut flips, &mut flux_window)),
        };
        if let RunStatus::Absorbed { at } = status {
            return Err(Error::Absorbed { time: at });
        }
        if t == cfg.horizon {
            net_flips = flips.net();
        }
        if cfg.sample_times.contains(&t) {
            let occ: Vec<f64> = state.config().occupations().iter().map(|&v| v as f64).collect();
            boxes.push(box_means(&occ, n, cfg.width));
        }
    }

    let integrals = flux_window.integrals(cfg.horizon);
    let (alpha, beta) = (params.alpha, params.beta);
    let scale = params.m * (n as f64).powf(1.0 - params.theta);
    let t = cfg.horizon;
    let boundary_current = scale * ((alpha * t - integrals[0]) + (beta * t - integrals[n - 2])) / t;

    let time_average_boxes = window.map(|w| box_means(&w.averages(horizon), n, cfg.width));
    Ok(ReplicaSummary {
        replica,
        boxes,
        time_average_boxes,
        net_flips,
        boundary_current,
        events: state.events(),
    })
}

/// Runs all replicas (concurrently; the result does not depend on scheduling).
pub fn run_replicas(cfg: &RunConfig) -> Result<Vec<ReplicaSummary>> {
    (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(cfg, r))
        .collect()
}

/// Combines replica summaries with the PDE solution into a report for one `n`.
pub fn merge(cfg: &RunConfig, field: &SpaceTimeField, summaries: &[ReplicaSummary]) -> Result<ComparisonReport> {
    if summaries.is_empty() {
        return Err(Error::input("no replicas to merge"));
    }
    let n = cfg.params.n;
    let centres = box_centres(n, cfg.width);

    let mut times = Vec::with_capacity(cfg.sample_times.len());
    for (k, &t) in cfg.sample_times.iter().enumerate() {
        let profile = field
            .at(t)
            .ok_or_else(|| Error::input(format!("no solver sample at t={t}")))?;
        let predicted: Vec<f64> = centres.iter().map(|&u| interpolate(profile, u)).collect();
        let rows: Vec<&Vec<f64>> = summaries.iter().map(|s| &s.boxes[k]).collect();
        let (l1, linf, mc_stderr, _) = distance(&rows, &predicted);
        times.push(TimeDistance { t, l1, linf, mc_stderr });
    }

    let stationary = match cfg.average_window {
        Some((from, to)) => {
            let predicted = centres
                .iter()
                .map(|&u| stationary_profile(&cfg.bc, u))
                .collect::<Result<Vec<f64>>>()?;
            let rows: Vec<&Vec<f64>> = summaries
                .iter()
                .map(|s| s.time_average_boxes.as_ref().ok_or_else(|| Error::input("missing time average")))
                .collect::<Result<_>>()?;
            let (l1, linf, mc_stderr, measured) = distance(&rows, &predicted);
            Some(StationaryDistance {
                from,
                to,
                l1,
                linf,
                mc_stderr,
                centres: centres.clone(),
                measured,
                predicted,
            })
        }
        None => None,
    };

    let (counted, counted_stderr) =
        mean_stderr(summaries.iter().map(|s| s.net_flips as f64 / (n as f64 * cfg.horizon)));
    let (current, current_stderr) = mean_stderr(summaries.iter().map(|s| s.boundary_current));

    Ok(ComparisonReport {
        n,
        width: cfg.width,
        replicas: summaries.len(),
        seed: cfg.seed,
        times,
        stationary,
        flux: FluxEstimate {
            n,
            counted,
            counted_stderr,
            current,
            current_stderr,
        },
        ladder: Vec::new(),
        ladder_flux_ratios: Vec::new(),
        ladder_l1_nonincreasing: None,
        events: summaries.iter().map(|s| s.events).sum(),
    })
}

fn compare_single(cfg: &RunConfig) -> Result<ComparisonReport> {
    let field = solve(cfg.initial_profile(), &cfg.bc, cfg.horizon, cfg.j, &cfg.sample_times)?;
    let summaries = run_replicas(cfg)?;
    merge(cfg, &field, &summaries)
}

/// Full comparison at the configured `n`, plus the ladder if one is configured.
pub fn compare(cfg: &RunConfig) -> Result<ComparisonReport> {
    let mut report = compare_single(cfg)?;
    for &n in &cfg.n_ladder {
        let sub = if n == cfg.params.n {
            report.clone()
        } else {
            compare_single(&cfg.with_n(n)?)?
        };
        let last = sub.times.last().expect("at least one sample time");
        report.ladder.push(LadderEntry {
            n,
            width: sub.width,
            final_l1: last.l1,
            final_linf: last.linf,
            stationary_linf: sub.stationary.as_ref().map(|s| s.linf),
            flux: sub.flux.clone(),
        });
        report.events += if n == cfg.params.n { 0 } else { sub.events };
    }
    report.ladder_flux_ratios = report
        .ladder
        .windows(2)
        .map(|w| w[1].flux.current / w[0].flux.current)
        .collect();
    if report.ladder.len() >= 2 {
        report.ladder_l1_nonincreasing = Some(report.ladder.windows(2).all(|w| w[1].final_l1 <= w[0].final_l1));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::parse_config;

    #[test]
    fn merge_of_single_runs() {
        let cfg = parse_config("mode=compare n=30 T=0.05 sample_times=0.02,0.05 replicas=3 seed=9 J=32").unwrap();
        let all = compare(&cfg).unwrap();
        let singles: Vec<_> = (0..3).map(|r| run_replica(&cfg, r).unwrap()).collect();
        let field = solve(cfg.initial_profile(), &cfg.bc, cfg.horizon, cfg.j, &cfg.sample_times).unwrap();
        assert_eq!(merge(&cfg, &field, &singles).unwrap(), all);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, s) = mean_stderr([2.0, 2.0, 2.0].into_iter());
        assert_eq!((m, s), (2.0, 0.0));
        assert!(mean_stderr([1.0].into_iter()).1.is_nan());
    }

    #[test]
    fn centres() {
        assert_eq!(box_centres(9, 4), vec![2.5 / 9.0, 6.5 / 9.0]);
        assert_eq!(box_means(&[1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0], 9, 4), vec![0.75, 0.25]);
    }
}
