#![allow(dead_code)]

use pmm_core::analysis::BoxSpec;
use pmm_core::model::{Configuration, Constraint, ModelParams, TransitionKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random feasible instance: source occupied, target empty, a window of
/// length `ell` abutting the segment with at least two particles.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (ModelParams, Configuration, usize, usize, BoxSpec) {
    loop {
        let n = rng.random_range(8..=30);
        let p = ModelParams::new(n, 0.0, 1.0, 1.5, 0.3, 0.7).unwrap();
        let density = rng.random_range(0.1..0.7);
        let occ: Vec<u8> = (1..n).map(|_| rng.random_bool(density) as u8).collect();
        let c = Configuration::for_params(occ, &p).unwrap();
        let s = rng.random_range(1..n);
        let t = rng.random_range(1..n);
        if c.site(s) != 1 || c.site(t) != 0 {
            continue;
        }
        let (lo, hi) = (s.min(t), s.max(t));
        let left = rng.random_bool(0.5);
        let room = if left { lo - 1 } else { n - 1 - hi };
        if room < 2 {
            continue;
        }
        let ell = rng.random_range(2..=room);
        let window = if left {
            BoxSpec::left(lo - 1, ell)
        } else {
            BoxSpec::right(hi + 1, ell)
        };
        let (a, b) = window.bounds().unwrap();
        if (a..=b).filter(|&x| c.site(x) == 1).count() < 2 {
            continue;
        }
        return (p, c, s, t, window);
    }
}

/// Site value with the reservoir cells, from raw bits (bit `x−1` is site `x`).
pub fn cell(bits: u64, n: usize, x: isize, alpha: f64, beta: f64) -> f64 {
    if x <= 0 {
        alpha
    } else if x >= n as isize {
        beta
    } else {
        ((bits >> (x - 1)) & 1) as f64
    }
}

/// Unscaled rates written out directly from the generator.
pub fn oracle_rate(bits: u64, kind: TransitionKind, p: &ModelParams) -> f64 {
    let n = p.n;
    let e = |x: isize| cell(bits, n, x, p.alpha, p.beta);
    match kind {
        TransitionKind::Exchange(x) => {
            let x = x as isize;
            if e(x) == e(x + 1) {
                return 0.0;
            }
            let c = match p.big_m {
                Constraint::M2 => e(x - 1) + e(x + 2),
                Constraint::M3 => e(x - 2) * e(x - 1) + e(x - 1) * e(x + 2) + e(x + 2) * e(x + 3),
            };
            c + (n as f64).powf(p.a - 2.0)
        }
        TransitionKind::Flip(z) => {
            let b = if z == 1 { p.alpha } else { p.beta };
            let occupied = e(z as isize) == 1.0;
            p.m / (n as f64).powf(p.theta) * if occupied { 1.0 - b } else { b }
        }
    }
}
