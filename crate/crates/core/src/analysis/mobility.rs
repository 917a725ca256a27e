//! Blocked configurations and mobile-cluster transport paths.
//!
//! A transport path moves the content of `source` to `target` (and back) using
//! a pair of adjacent particles as escort. Two helper particles from the window
//! are joined into the pair with SSEP jumps; every other move is a constrained
//! exchange whose rate is certified by a particle of the pair.
//!
//! Walking the pair one step right from `(q, q+1)` either moves it with the
//! exchanges `{q+1,q+2}` then `{q,q+1}` (when `q+2` is empty) or just relabels it
//! to `(q+1, q+2)` (when `q+2` is occupied). Every walk move is certified by a
//! pair site and touches only sites the walk has covered, so undoing the walk in
//! reverse order is always legal and restores those sites even after the bond
//! just right of the pair has been exchanged. The swap of `source` and `target`
//! is then performed as the usual chain of adjacent exchanges across the segment,
//! each one certified by the pair parked right behind it.

use serde::{Deserialize, Serialize};

use super::observables::BoxSpec;
use crate::error::{Error, Result};
use crate::model::{pmm_rate_unchecked, Configuration, Constraint, Dynamics, ModelParams};

/// `true` iff no constrained exchange has positive rate. Only meaningful for
/// the pure porous medium dynamics; any other mode is refused.
pub fn detect_blocked(config: &Configuration, params: &ModelParams) -> Result<bool> {
    if params.dynamics != Dynamics::PurePmm {
        return Err(Error::contract(
            "blocked configurations only exist for the pure PMM dynamics",
        ));
    }
    if config.n() != params.n {
        return Err(Error::contract("configuration and parameters disagree on n"));
    }
    Ok((1..=params.n - 2).all(|x| pmm_rate_unchecked(config, x, params.big_m) == 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    SsepAssemble,
    PmmTransport,
    SsepRestore,
}

impl Phase {
    pub fn is_ssep(self) -> bool {
        !matches!(self, Phase::PmmTransport)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedMove {
    /// Exchange across `{bond, bond+1}`.
    pub bond: usize,
    pub phase: Phase,
    /// Constrained (porous medium) rate before the move.
    pub pmm_rate: f64,
    /// Rate under `L_P + n^{a−2} L_S` before the move.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovePlan {
    pub source: usize,
    pub target: usize,
    pub window: BoxSpec,
    pub helpers: [usize; 2],
    pub moves: Vec<PlannedMove>,
}

impl MovePlan {
    pub fn ssep_moves(&self) -> usize {
        self.moves.iter().filter(|m| m.phase.is_ssep()).count()
    }

    pub fn pmm_moves(&self) -> usize {
        self.moves.len() - self.ssep_moves()
    }

    pub fn distance(&self) -> usize {
        self.source.abs_diff(self.target)
    }

    /// `|ssep| ≤ 4ℓ` and `|pmm| ≤ 6(ℓ + distance)`.
    pub fn within_budget(&self) -> bool {
        let ell = self.window.ell;
        self.ssep_moves() <= 4 * ell && self.pmm_moves() <= 6 * (ell + self.distance())
    }

    /// Applies the moves in order.
    pub fn replay(&self, config: &Configuration) -> Result<Configuration> {
        let mut c = config.clone();
        for m in &self.moves {
            if m.bond < 1 || m.bond + 2 > c.n() {
                return Err(Error::contract(format!("plan uses invalid bond {}", m.bond)));
            }
            c.swap_bond(m.bond);
        }
        Ok(c)
    }

    /// Replays the plan from `config`, recomputing every certificate, and checks
    /// that each move is a genuine jump of its phase and that the net effect is
    /// exactly the `source → target` transfer.
    pub fn verify(&self, config: &Configuration, params: &ModelParams) -> Result<()> {
        let mut c = config.clone();
        let eps = full_ssep_weight(params);
        for (i, m) in self.moves.iter().enumerate() {
            if m.bond < 1 || m.bond + 2 > c.n() {
                return Err(Error::contract(format!("move {i}: invalid bond {}", m.bond)));
            }
            let jump = c.site(m.bond) != c.site(m.bond + 1);
            let pmm = pmm_rate_unchecked(&c, m.bond, params.big_m);
            let rate = pmm + eps * jump as u8 as f64;
            if !jump || rate <= 0.0 {
                return Err(Error::contract(format!("move {i} on bond {} has zero rate", m.bond)));
            }
            if m.phase == Phase::PmmTransport && pmm <= 0.0 {
                return Err(Error::contract(format!(
                    "move {i} on bond {} is tagged PMM but its constrained rate is zero",
                    m.bond
                )));
            }
            if m.pmm_rate != pmm || m.rate != rate {
                return Err(Error::contract(format!("move {i}: stale certificate")));
            }
            c.swap_bond(m.bond);
        }
        let mut expected = config.clone();
        let (s, t) = (self.source, self.target);
        let (vs, vt) = (expected.site(s), expected.site(t));
        expected.set_site(s, vt);
        expected.set_site(t, vs);
        if c != expected {
            return Err(Error::contract("replayed plan does not realise the transfer"));
        }
        Ok(())
    }
}

fn full_ssep_weight(params: &ModelParams) -> f64 {
    (params.n as f64).powf(params.a - 2.0)
}

/// Sequence of jumps that carries the particle at `source` to the empty site
/// `target`, leaving every other site as it was.
///
/// The window must be a box of the bulk lying immediately left of
/// `min(source, target)` or immediately right of `max(source, target)`. The two
/// window particles nearest to `source` (ties to the smaller index) are the helpers.
pub fn mobile_cluster_path(
    config: &Configuration,
    source: usize,
    target: usize,
    window: &BoxSpec,
    params: &ModelParams,
) -> Result<MovePlan> {
    let n = config.n();
    if n != params.n {
        return Err(Error::contract("configuration and parameters disagree on n"));
    }
    if params.big_m != Constraint::M2 {
        return Err(Error::contract("transport paths are only built for M = 2"));
    }
    for (name, s) in [("source", source), ("target", target)] {
        if s < 1 || s > n - 1 {
            return Err(Error::contract(format!("{name} {s} outside the bulk")));
        }
    }
    if config.site(source) != 1 {
        return Err(Error::contract(format!("source {source} is empty")));
    }
    if config.site(target) != 0 {
        return Err(Error::contract(format!("target {target} is occupied")));
    }
    let (lo, hi) = window.checked_bounds(n)?;
    let seg_lo = source.min(target);
    let seg_hi = source.max(target);
    let window_left = hi + 1 == seg_lo;
    let window_right = lo == seg_hi + 1;
    if !window_left && !window_right {
        return Err(Error::contract(format!(
            "window {lo}..={hi} must sit immediately left of {seg_lo} or right of {seg_hi}"
        )));
    }

    let mut helpers: Vec<usize> = (lo..=hi).filter(|&x| config.site(x) == 1).collect();
    if helpers.len() < 2 {
        return Err(Error::InsufficientDensity { found: helpers.len() });
    }
    helpers.sort_by_key(|&x| (x.abs_diff(source), x));
    helpers.truncate(2);
    helpers.sort_unstable();
    let helpers = [helpers[0], helpers[1]];

    // Work in a frame where the window is on the left.
    let mirror = |x: usize| if window_left { x } else { n - x };
    let mut occ = vec![0u8; n + 1];
    for x in 1..n {
        occ[mirror(x)] = config.site(x);
    }
    let (h1, h2) = if window_left {
        (helpers[0], helpers[1])
    } else {
        (mirror(helpers[1]), mirror(helpers[0]))
    };
    let (l, r) = if window_left {
        (seg_lo, seg_hi)
    } else {
        (mirror(seg_hi), mirror(seg_lo))
    };
    let raw = plan_left_window(&mut occ, l, r, h1, h2);

    let eps = full_ssep_weight(params);
    let mut c = config.clone();
    let mut moves = Vec::with_capacity(raw.len());
    for (bond, phase) in raw {
        let bond = if window_left { bond } else { n - 1 - bond };
        let jump = c.site(bond) != c.site(bond + 1);
        let pmm = pmm_rate_unchecked(&c, bond, params.big_m);
        moves.push(PlannedMove {
            bond,
            phase,
            pmm_rate: pmm,
            rate: pmm + eps * jump as u8 as f64,
        });
        c.swap_bond(bond);
    }
    Ok(MovePlan {
        source,
        target,
        window: *window,
        helpers,
        moves,
    })
}

/// Pair walker over a site-indexed occupation vector.
struct Walker<'a> {
    occ: &'a mut [u8],
    moves: Vec<(usize, Phase)>,
    /// Left site of the pair.
    pos: usize,
    /// Moves of each step taken so far, to undo them.
    steps: Vec<Option<usize>>,
}

impl Walker<'_> {
    fn swap(&mut self, bond: usize, phase: Phase) {
        self.occ.swap(bond, bond + 1);
        self.moves.push((bond, phase));
    }

    fn step_right(&mut self) {
        let q = self.pos;
        if self.occ[q + 2] == 0 {
            self.swap(q + 1, Phase::PmmTransport);
            self.swap(q, Phase::PmmTransport);
            self.steps.push(Some(q));
        } else {
            self.steps.push(None);
        }
        self.pos += 1;
    }

    fn step_back(&mut self) {
        if let Some(q) = self.steps.pop().expect("walk stack underflow") {
            self.swap(q, Phase::PmmTransport);
            self.swap(q + 1, Phase::PmmTransport);
        }
        self.pos -= 1;
    }

    fn park(&mut self, left_site: usize) {
        while self.pos < left_site {
            self.step_right();
        }
        while self.pos > left_site {
            self.step_back();
        }
    }

    /// Exchanges `{b, b+1}` with the pair parked at `(b−2, b−1)`; skipped when
    /// both sites hold the same value.
    fn exchange(&mut self, b: usize) {
        self.park(b - 2);
        if self.occ[b] != self.occ[b + 1] {
            self.swap(b, Phase::PmmTransport);
        }
    }
}

/// Window left of the segment `[l, r]`; helpers `h1 < h2 < l` with no particle between them.
fn plan_left_window(occ: &mut [u8], l: usize, r: usize, h1: usize, h2: usize) -> Vec<(usize, Phase)> {
    let assemble: Vec<usize> = (h1..h2 - 1).collect();
    let mut w = Walker {
        occ,
        moves: Vec::new(),
        pos: h2 - 1,
        steps: Vec::new(),
    };
    for &b in &assemble {
        w.swap(b, Phase::SsepAssemble);
    }
    let home = h2 - 1;
    // Carry the content of l to r, then the old content of r back to l.
    for b in l..r {
        w.exchange(b);
    }
    for b in (l..r.saturating_sub(1)).rev() {
        w.exchange(b);
    }
    w.park(home);
    for &b in assemble.iter().rev() {
        w.swap(b, Phase::SsepRestore);
    }
    w.moves
}
