//! Explicit conservative finite differences for `∂t ρ = Δ(ρ²)` on `[0, 1]`.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Safety factor applied to the explicit stability limit.
pub const CFL_SAFETY: f64 = 0.9;
/// Tolerance of the runtime maximum-principle check.
pub const RANGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet { alpha: f64, beta: f64 },
    /// `∂u(ρ²)(0) = κ(ρ(0) − α)`, `∂u(ρ²)(1) = κ(β − ρ(1))`. `κ = 0` is Neumann.
    Robin { kappa: f64, alpha: f64, beta: f64 },
}

impl BoundaryCondition {
    pub fn dirichlet(alpha: f64, beta: f64) -> Result<Self> {
        let bc = BoundaryCondition::Dirichlet { alpha, beta };
        bc.validate()?;
        Ok(bc)
    }

    pub fn robin(kappa: f64, alpha: f64, beta: f64) -> Result<Self> {
        let bc = BoundaryCondition::Robin { kappa, alpha, beta };
        bc.validate()?;
        Ok(bc)
    }

    pub fn neumann(alpha: f64, beta: f64) -> Result<Self> {
        Self::robin(0.0, alpha, beta)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        match *self {
            BoundaryCondition::Dirichlet { alpha, beta } => {
                if !in_unit(alpha) || !in_unit(beta) {
                    return Err(Error::input(format!(
                        "Dirichlet data must lie in (0,1), got alpha={alpha}, beta={beta}"
                    )));
                }
            }
            BoundaryCondition::Robin { kappa, alpha, beta } => {
                if !(kappa >= 0.0) || !kappa.is_finite() {
                    return Err(Error::input(format!("kappa must be finite and >= 0, got {kappa}")));
                }
                if kappa > 0.0 && (!in_unit(alpha) || !in_unit(beta)) {
                    return Err(Error::input(format!(
                        "Robin data must lie in (0,1), got alpha={alpha}, beta={beta}"
                    )));
                }
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(Error::input("boundary data must be finite"));
                }
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            BoundaryCondition::Dirichlet { alpha, .. } | BoundaryCondition::Robin { alpha, .. } => alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            BoundaryCondition::Dirichlet { beta, .. } | BoundaryCondition::Robin { beta, .. } => beta,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            BoundaryCondition::Robin { kappa, .. } => Some(kappa),
            BoundaryCondition::Dirichlet { .. } => None,
        }
    }
}

/// Closed-form stationary solution.
pub fn stationary_profile(bc: &BoundaryCondition, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::input(format!("u = {u} outside [0,1]")));
    }
    bc.validate()?;
    Ok(match *bc {
        BoundaryCondition::Dirichlet { alpha, beta } => {
            ((beta * beta - alpha * alpha) * u + alpha * alpha).sqrt()
        }
        BoundaryCondition::Robin { kappa, alpha, beta } if kappa == 0.0 => 0.5 * (alpha + beta),
        BoundaryCondition::Robin { kappa, alpha, beta } => {
            let (a, b) = robin_coefficients(kappa, alpha, beta);
            (a * u + b).sqrt()
        }
    })
}

/// `(a, b)` with `ρ̄² = a·u + b`.
pub fn robin_coefficients(kappa: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let s = alpha + beta;
    let root_b = (kappa * alpha + s * s) / (2.0 * s + kappa);
    (kappa * (root_b - alpha), root_b * root_b)
}

/// Nodal values `ρ_i ≈ ρ(t, i/J)`, `i = 0..=J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub values: Vec<f64>,
    pub du: f64,
    pub time: f64,
}

impl DensityGrid {
    pub fn new(values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::input("a grid needs at least 3 nodes"));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(*v))
        {
            return Err(Error::input(format!("node {i} has value {v} outside [0,1]")));
        }
        let du = 1.0 / (values.len() - 1) as f64;
        Ok(DensityGrid { values, du, time })
    }

    pub fn from_profile<G: Fn(f64) -> f64>(g: G, j: usize) -> Result<Self> {
        if j < 2 {
            return Err(Error::input(format!("J must be >= 2, got {j}")));
        }
        let values = (0..=j).map(|i| g(i as f64 / j as f64)).collect();
        Self::new(values, 0.0)
    }

    pub fn stationary(bc: &BoundaryCondition, j: usize) -> Result<Self> {
        bc.validate()?;
        Self::from_profile(|u| stationary_profile(bc, u).unwrap_or(f64::NAN), j)
    }

    pub fn j(&self) -> usize {
        self.values.len() - 1
    }

    pub fn u(&self, i: usize) -> f64 {
        i as f64 / self.j() as f64
    }

    /// Trapezoidal mass, the quantity conserved under zero-flux conditions.
    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.du)
    }

    /// Linear interpolation at `u ∈ [0, 1]`.
    pub fn interpolate(&self, u: f64) -> f64 {
        interpolate(&self.values, u)
    }
}

pub(crate) fn interpolate(values: &[f64], u: f64) -> f64 {
    let j = values.len() - 1;
    let s = (u.clamp(0.0, 1.0) * j as f64).min(j as f64);
    let i = (s.floor() as usize).min(j - 1);
    let w = s - i as f64;
    values[i] * (1.0 - w) + values[i + 1] * w
}

fn trapezoid(values: &[f64], du: f64) -> f64 {
    let last = values.len() - 1;
    let inner: f64 = values[1..last].iter().sum();
    du * (inner + 0.5 * (values[0] + values[last]))
}

/// Largest admissible time step for the given grid spacing.
pub fn max_stable_dt(du: f64, bc: &BoundaryCondition) -> f64 {
    let kappa = bc.kappa().unwrap_or(0.0);
    CFL_SAFETY * du * du / (4.0 + 2.0 * kappa * du)
}

fn check_dt(dt: f64, du: f64, bc: &BoundaryCondition) -> Result<()> {
    let limit = max_stable_dt(du, bc);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::input(format!("dt = {dt} violates the stability bound {limit}")));
    }
    Ok(())
}

/// One explicit step, writing into `next`.
fn step_into(cur: &[f64], next: &mut [f64], sq: &mut [f64], dt: f64, du: f64, bc: &BoundaryCondition) {
    let j = cur.len() - 1;
    for (s, &v) in sq.iter_mut().zip(cur) {
        *s = v * v;
    }
    let lam = dt / (du * du);
    for i in 1..j {
        next[i] = cur[i] + lam * (sq[i + 1] - 2.0 * sq[i] + sq[i - 1]);
    }
    match *bc {
        BoundaryCondition::Dirichlet { alpha, beta } => {
            next[0] = alpha;
            next[j] = beta;
        }
        BoundaryCondition::Robin { kappa, alpha, beta } => {
            next[0] = cur[0] + lam * (2.0 * sq[1] - 2.0 * sq[0] - 2.0 * du * kappa * (cur[0] - alpha));
            next[j] = cur[j] + lam * (2.0 * sq[j - 1] - 2.0 * sq[j] + 2.0 * du * kappa * (beta - cur[j]));
        }
    }
}

fn check_range(values: &[f64], time: f64) -> Result<()> {
    for (node, &value) in values.iter().enumerate() {
        if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&value) {
            return Err(Error::NumericalInstability { time, node, value });
        }
    }
    Ok(())
}

pub fn pde_step(grid: &DensityGrid, dt: f64, bc: &BoundaryCondition) -> Result<DensityGrid> {
    bc.validate()?;
    check_dt(dt, grid.du, bc)?;
    let mut next = vec![0.0; grid.values.len()];
    let mut sq = vec![0.0; grid.values.len()];
    step_into(&grid.values, &mut next, &mut sq, dt, grid.du, bc);
    let time = grid.time + dt;
    check_range(&next, time)?;
    Ok(DensityGrid {
        values: next,
        du: grid.du,
        time,
    })
}

/// Samples of `ρ` on the grid nodes at increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub j: usize,
    pub bc: BoundaryCondition,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub steps: u64,
}

impl SpaceTimeField {
    pub fn du(&self) -> f64 {
        1.0 / self.j as f64
    }

    /// Index of the stored sample at time `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn at(&self, t: f64) -> Option<&[f64]> {
        self.index_of(t).map(|k| self.values[k].as_slice())
    }

    pub fn last(&self) -> DensityGrid {
        DensityGrid {
            values: self.values.last().cloned().unwrap_or_default(),
            du: self.du(),
            time: self.times.last().copied().unwrap_or(0.0),
        }
    }

    /// `t,u,rho` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,u,rho\n");
        for (t, row) in self.times.iter().zip(&self.values) {
            for (i, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", t, i as f64 / self.j as f64, v);
            }
        }
        out
    }
}

/// Runs the scheme from `g` and records the grid at `sample_times` (which must
/// be increasing, non-negative, and end at `horizon`; `0` and `horizon` are
/// always recorded). Steps are shortened so every sample time is hit exactly.
pub fn solve<G: Fn(f64) -> f64>(
    g: G,
    bc: &BoundaryCondition,
    horizon: f64,
    j: usize,
    sample_times: &[f64],
) -> Result<SpaceTimeField> {
    bc.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::input(format!("horizon must be positive, got {horizon}")));
    }
    let init = DensityGrid::from_profile(&g, j)?;
    let mut times: Vec<f64> = sample_times.to_vec();
    if times.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
        return Err(Error::input("sample times must lie in [0, horizon]"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("sample times must be strictly increasing"));
    }
    if times.first() != Some(&0.0) {
        times.insert(0, 0.0);
    }
    if *times.last().unwrap() < horizon {
        times.push(horizon);
    }

    let du = init.du;
    let dt_max = max_stable_dt(du, bc);
    let mut cur = init.values;
    let mut next = vec![0.0; j + 1];
    let mut sq = vec![0.0; j + 1];
    let mut values = vec![cur.clone()];
    let mut steps = 0u64;
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let k = (span / dt_max).ceil().max(1.0) as u64;
        let dt = span / k as f64;
        for s in 0..k {
            step_into(&cur, &mut next, &mut sq, dt, du, bc);
            std::mem::swap(&mut cur, &mut next);
            check_range(&cur, w[0] + (s + 1) as f64 * dt)?;
        }
        steps += k;
        values.push(cur.clone());
    }
    Ok(SpaceTimeField {
        j,
        bc: *bc,
        times,
        values,
        steps,
    })
}

/// `n+1` equally spaced times `0, T/n, …, T`.
pub fn uniform_times(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| horizon * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestClass {
    /// `G_s(0) = G_s(1) = 0` for every `s`.
    Vanishing,
    Free,
}

type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A test function `G(t, u)` with its derivatives `∂t G`, `∂u G`, `∂uu G`.
#[derive(Clone)]
pub struct TestFunction {
    pub class: TestClass,
    value: Fn2,
    d_t: Fn2,
    d_u: Fn2,
    d_uu: Fn2,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("class", &self.class).finish_non_exhaustive()
    }
}

impl TestFunction {
    pub fn new<V, T, U, W>(class: TestClass, value: V, d_t: T, d_u: U, d_uu: W) -> Self
    where
        V: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        T: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        U: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        W: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        TestFunction {
            class,
            value: Arc::new(value),
            d_t: Arc::new(d_t),
            d_u: Arc::new(d_u),
            d_uu: Arc::new(d_uu),
        }
    }

    /// `sin(kπu)`, vanishing at both ends.
    pub fn sine(k: u32) -> Self {
        let w = k as f64 * std::f64::consts::PI;
        Self::new(
            TestClass::Vanishing,
            move |_, u| (w * u).sin(),
            |_, _| 0.0,
            move |_, u| w * (w * u).cos(),
            move |_, u| -w * w * (w * u).sin(),
        )
    }

    /// `e^{−λt} sin(kπu)`.
    pub fn decaying_sine(k: u32, lambda: f64) -> Self {
        let w = k as f64 * std::f64::consts::PI;
        Self::new(
            TestClass::Vanishing,
            move |t, u| (-lambda * t).exp() * (w * u).sin(),
            move |t, u| -lambda * (-lambda * t).exp() * (w * u).sin(),
            move |t, u| (-lambda * t).exp() * w * (w * u).cos(),
            move |t, u| -(-lambda * t).exp() * w * w * (w * u).sin(),
        )
    }

    /// `c0 + c1 u + c2 u² + c3 u³`, time independent.
    pub fn polynomial(c: [f64; 4]) -> Self {
        Self::new(
            TestClass::Free,
            move |_, u| c[0] + u * (c[1] + u * (c[2] + u * c[3])),
            |_, _| 0.0,
            move |_, u| c[1] + u * (2.0 * c[2] + 3.0 * c[3] * u),
            move |_, u| 2.0 * c[2] + 6.0 * c[3] * u,
        )
    }

    /// `cos(kπu)`, free at the boundary.
    pub fn cosine(k: u32) -> Self {
        let w = k as f64 * std::f64::consts::PI;
        Self::new(
            TestClass::Free,
            move |_, u| (w * u).cos(),
            |_, _| 0.0,
            move |_, u| -w * (w * u).sin(),
            move |_, u| -w * w * (w * u).cos(),
        )
    }

    pub fn value(&self, t: f64, u: f64) -> f64 {
        (self.value)(t, u)
    }

    pub fn d_t(&self, t: f64, u: f64) -> f64 {
        (self.d_t)(t, u)
    }

    pub fn d_u(&self, t: f64, u: f64) -> f64 {
        (self.d_u)(t, u)
    }

    pub fn d_uu(&self, t: f64, u: f64) -> f64 {
        (self.d_uu)(t, u)
    }
}

/// `F_Dir(G, t, ρ, g)` for Dirichlet conditions, `F_Rob(G, t, ρ, g)` for Robin
/// ones, with trapezoidal quadrature on the stored nodes and sample times.
/// `t` must be one of the stored sample times.
pub fn weak_form_residual<G: Fn(f64) -> f64>(
    field: &SpaceTimeField,
    g: G,
    test: &TestFunction,
    t: f64,
) -> Result<f64> {
    let k_end = field
        .index_of(t)
        .ok_or_else(|| Error::input(format!("t = {t} is not a stored sample time")))?;
    let j = field.j;
    let du = field.du();
    let us: Vec<f64> = (0..=j).map(|i| i as f64 / j as f64).collect();
    let pair = |f: &dyn Fn(usize) -> f64| -> f64 {
        let row: Vec<f64> = (0..=j).map(f).collect();
        trapezoid(&row, du)
    };

    if let BoundaryCondition::Dirichlet { .. } = field.bc {
        if test.class != TestClass::Vanishing {
            return Err(Error::input("Dirichlet residuals need a test function vanishing at the boundary"));
        }
    }
    if test.class == TestClass::Vanishing {
        for &s in &field.times[..=k_end] {
            for u in [0.0, 1.0] {
                let v = test.value(s, u);
                if v.abs() > 1e-12 {
                    return Err(Error::input(format!("test function is {v} at (t={s}, u={u})")));
                }
            }
        }
    }

    let t_end = field.times[k_end];
    let rho_t = &field.values[k_end];
    let end_term = pair(&|i| rho_t[i] * test.value(t_end, us[i]));
    let start_term = pair(&|i| g(us[i]) * test.value(0.0, us[i]));

    let (alpha, beta) = (field.bc.alpha(), field.bc.beta());
    let integrand = |k: usize| -> f64 {
        let s = field.times[k];
        let rho = &field.values[k];
        let bulk = pair(&|i| {
            rho[i] * (test.d_t(s, us[i]) + rho[i] * test.d_uu(s, us[i]))
        });
        let boundary = match field.bc {
            BoundaryCondition::Dirichlet { .. } => {
                beta * beta * test.d_u(s, 1.0) - alpha * alpha * test.d_u(s, 0.0)
            }
            BoundaryCondition::Robin { kappa, .. } => {
                let (r0, r1) = (rho[0], rho[j]);
                r1 * r1 * test.d_u(s, 1.0) - r0 * r0 * test.d_u(s, 0.0)
                    - kappa * (test.value(s, 0.0) * (alpha - r0) + test.value(s, 1.0) * (beta - r1))
            }
        };
        -bulk + boundary
    };
    let mut time_integral = 0.0;
    let mut prev = integrand(0);
    for k in 1..=k_end {
        let cur = integrand(k);
        time_integral += 0.5 * (field.times[k] - field.times[k - 1]) * (prev + cur);
        prev = cur;
    }
    Ok(end_term - start_term + time_integral)
}
