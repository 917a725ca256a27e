use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Configuration, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `{x−ℓ+1, …, x}`
    Left,
    /// `{x, …, x+ℓ−1}`
    Right,
}

/// A box of `ell` consecutive sites anchored at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub x: usize,
    pub ell: usize,
    pub side: Side,
}

impl BoxSpec {
    pub fn left(x: usize, ell: usize) -> Self {
        BoxSpec { x, ell, side: Side::Left }
    }

    pub fn right(x: usize, ell: usize) -> Self {
        BoxSpec { x, ell, side: Side::Right }
    }

    /// First and last site of the box, or `None` if it would start below site 1.
    pub fn bounds(&self) -> Option<(usize, usize)> {
        if self.ell == 0 {
            return None;
        }
        match self.side {
            Side::Left => (self.x + 1)
                .checked_sub(self.ell)
                .map(|lo| (lo, self.x)),
            Side::Right => Some((self.x, self.x + self.ell - 1)),
        }
    }

    /// Bounds, checked against the bulk `{1, …, n−1}`.
    pub fn checked_bounds(&self, n: usize) -> Result<(usize, usize)> {
        match self.bounds() {
            Some((lo, hi)) if lo >= 1 && hi <= n - 1 => Ok((lo, hi)),
            _ => Err(Error::input(format!(
                "box {:?} does not fit inside sites 1..={}",
                self,
                n - 1
            ))),
        }
    }

    pub fn contains(&self, site: usize) -> bool {
        self.bounds().is_some_and(|(lo, hi)| (lo..=hi).contains(&site))
    }
}

/// `⟨π^n, G⟩ = (1/n) Σ_x G(x/n) η(x)`.
pub fn empirical_pairing<G: Fn(f64) -> f64>(config: &Configuration, g: G) -> f64 {
    let n = config.n() as f64;
    config
        .occupations()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 1)
        .map(|(i, _)| g((i + 1) as f64 / n))
        .sum::<f64>()
        / n
}

/// Mean occupation over a box.
pub fn box_average(config: &Configuration, spec: &BoxSpec) -> Result<f64> {
    let (lo, hi) = spec.checked_bounds(config.n())?;
    let count: usize = config.occupations()[lo - 1..hi]
        .iter()
        .map(|&v| v as usize)
        .sum();
    Ok(count as f64 / spec.ell as f64)
}

/// Box size `⌊n^{a−1−δ}⌋` (at least 1) used by the replacement arguments.
pub fn replacement_box_size(n: usize, a: f64, delta: f64) -> Result<usize> {
    if !(delta > 0.0) || a - 1.0 - delta < 0.0 {
        return Err(Error::input(format!(
            "need delta > 0 and a - 1 - delta >= 0, got a={a}, delta={delta}"
        )));
    }
    Ok(((n as f64).powf(a - 1.0 - delta).floor() as usize).max(1))
}

/// The restricted bulk `{1+⌊εn⌋, …, n−1−⌊εn⌋}`; empty when `ε ≥ 1/2`.
pub fn restricted_bulk(n: usize, eps: f64) -> std::ops::RangeInclusive<usize> {
    let cut = (eps * n as f64).floor().max(0.0) as usize;
    (1 + cut)..=(n - 1).saturating_sub(cut)
}

/// `τ_x h(η) = η(x−1)η(x) + η(x)η(x+1) − η(x−1)η(x+1) + n^{a−2}η(x)`, reading the
/// virtual cells at `x = 1` and `x = n−1`.
pub fn tau_h(config: &Configuration, x: usize, params: &ModelParams) -> Result<f64> {
    let n = config.n();
    if x < 1 || x > n - 1 {
        return Err(Error::contract(format!("site {x} outside 1..={}", n - 1)));
    }
    Ok(tau_h_unchecked(config, x, params.ssep_weight()))
}

#[inline]
pub(crate) fn tau_h_unchecked(config: &Configuration, x: usize, ssep_weight: f64) -> f64 {
    let xi = x as isize;
    let l = config.read(xi - 1);
    let c = config.read(xi);
    let r = config.read(xi + 1);
    l * c + c * r - l * r + ssep_weight * c
}

/// Instantaneous current through bond `{bond, bond+1}`, `bond ∈ {0, …, n−1}`.
pub fn instantaneous_current(config: &Configuration, bond: usize, params: &ModelParams) -> Result<f64> {
    let n = config.n();
    if n != params.n {
        return Err(Error::contract("configuration and parameters disagree on n"));
    }
    if bond > n - 1 {
        return Err(Error::contract(format!("bond {bond} outside 0..={}", n - 1)));
    }
    let w = params.reservoir_weight();
    let eps = params.ssep_weight();
    Ok(if bond == 0 {
        w * (params.alpha - config.site(1) as f64)
    } else if bond == n - 1 {
        w * (config.site(n - 1) as f64 - params.beta)
    } else {
        tau_h_unchecked(config, bond, eps) - tau_h_unchecked(config, bond + 1, eps)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize) -> ModelParams {
        ModelParams::new(n, 0.0, 1.0, 1.5, 0.3, 0.6).unwrap()
    }

    #[test]
    fn pairing() {
        let params = p(4);
        assert_eq!(empirical_pairing(&Configuration::empty(&params), |u| u + 1.0), 0.0);
        let full = Configuration::full(&params);
        assert!((empirical_pairing(&full, |u| u) - 0.375).abs() < 1e-15);
        let c = Configuration::from_sites(&[1, 3], &p(10)).unwrap();
        assert!((empirical_pairing(&c, |_| 1.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn boxes() {
        let params = p(6);
        let c = Configuration::from_sites(&[1, 3, 4], &params).unwrap();
        assert!((box_average(&c, &BoxSpec::right(2, 3)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(box_average(&c, &BoxSpec::left(3, 1)).unwrap(), 1.0);
        assert_eq!(box_average(&c, &BoxSpec::left(2, 1)).unwrap(), 0.0);
        assert_eq!(box_average(&Configuration::full(&params), &BoxSpec::left(5, 5)).unwrap(), 1.0);
        assert!(box_average(&c, &BoxSpec::left(2, 3)).is_err());
        assert!(box_average(&c, &BoxSpec::right(4, 3)).is_err());
    }

    #[test]
    fn tau_h_values() {
        let params = p(16);
        let eps = params.ssep_weight();
        let empty = Configuration::empty(&params);
        assert_eq!(tau_h(&empty, 5, &params).unwrap(), 0.0);
        let full = Configuration::full(&params);
        assert!((tau_h(&full, 5, &params).unwrap() - (1.0 + eps)).abs() < 1e-15);
        let hole = Configuration::from_sites(&[4, 6], &params).unwrap();
        assert_eq!(tau_h(&hole, 5, &params).unwrap(), -1.0);
        assert!(tau_h(&hole, 0, &params).is_err());
    }

    #[test]
    fn currents() {
        let params = ModelParams::new(10, 0.0, 1.0, 1.5, 0.3, 0.6).unwrap();
        let c = Configuration::from_sites(&[1], &params).unwrap();
        assert!((instantaneous_current(&c, 0, &params).unwrap() + 0.7).abs() < 1e-15);
        let block = Configuration::from_sites(&[3, 4, 5, 6], &params).unwrap();
        assert!(instantaneous_current(&block, 4, &params).unwrap().abs() < 1e-15);
        assert!(instantaneous_current(&c, 10, &params).is_err());
    }

    #[test]
    fn helpers() {
        assert_eq!(replacement_box_size(10_000, 1.5, 0.1).unwrap(), 39);
        assert!(replacement_box_size(100, 1.5, 0.6).is_err());
        assert_eq!(restricted_bulk(100, 0.1), 11..=89);
        assert!(restricted_bulk(10, 0.6).is_empty());
    }
}
