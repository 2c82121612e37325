//! Stationary law ζ of the cavity messages.
//!
//! The CDF `h` of ζ solves `h(t) = 1[t >= 0] φ̂(1 - E[h(W - t)])`. Three
//! solvers are provided: fixed-point iteration on a uniform grid, population
//! dynamics on a pool of particles, and the closed form available for
//! exponential weights.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FixedKernel;
use crate::laws::{DegreeLaw, WeightLaw};
use crate::rng::{derive_rng, Rng};

/// Anything ζ-distributed messages can be drawn from.
pub trait MessageLaw: Sync {
    /// Mass of the atom at zero.
    fn atom(&self) -> f64;
    fn sample(&self, rng: &mut Rng) -> f64;
}

/// Right-continuous step CDF on the grid `t_k = k * step`, `k = 0..=G`.
/// `h(t) = 0` for `t < 0` and `h(t) = values[G]` beyond `t_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfGrid {
    t_max: f64,
    step: f64,
    values: Vec<f64>,
}

impl CdfGrid {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::validation("grid.step", "step must be positive"));
        }
        if values.len() < 2 {
            return Err(Error::validation(
                "grid.values",
                "need at least two grid points",
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation(
                "grid.values",
                "values must lie in [0, 1]",
            ));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::validation(
                "grid.values",
                "values must be nondecreasing",
            ));
        }
        Ok(Self {
            t_max: step * (values.len() - 1) as f64,
            step,
            values,
        })
    }

    /// Samples `f` at the grid points, clamped to `[0, 1]` and made monotone.
    pub fn from_fn(t_max: f64, step: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let g = grid_points(t_max, step)?;
        let mut values: Vec<f64> = (0..=g)
            .map(|k| f(k as f64 * step).clamp(0.0, 1.0))
            .collect();
        monotone(&mut values);
        Self::new(step, values)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// `h(0)`, the atom of ζ at zero.
    pub fn h0(&self) -> f64 {
        self.values[0]
    }

    /// Step-function value.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let k = ((t / self.step).floor() as usize).min(self.values.len() - 1);
        self.values[k]
    }

    /// Atom at zero plus linear interpolation between grid points.
    pub fn eval_linear(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let x = t / self.step;
        let k = x.floor() as usize;
        if k + 1 >= self.values.len() {
            return *self.values.last().expect("nonempty");
        }
        let f = x - k as f64;
        self.values[k] + f * (self.values[k + 1] - self.values[k])
    }

    /// Inverse of [`eval_linear`](Self::eval_linear): 0 for `u <= h(0)`,
    /// `t_max` above the last grid value.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= self.values[0] {
            return 0.0;
        }
        let k = self.values.partition_point(|&v| v < u);
        if k >= self.values.len() {
            return self.t_max;
        }
        let (lo, hi) = (self.values[k - 1], self.values[k]);
        self.t(k - 1) + self.step * (u - lo) / (hi - lo)
    }

    /// `sup_k |self(t_k) - other(t_k)|` over the grid points of `self`.
    pub fn sup_distance(&self, other: &CdfGrid) -> f64 {
        if self.step == other.step && self.values.len() == other.values.len() {
            return self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        }
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| (v - other.eval(self.t(k))).abs())
            .fold(0.0, f64::max)
    }

    /// `sup_k |h(t_k) - f(t_k)|`.
    pub fn sup_distance_to(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| (v - f(self.t(k))).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_valid_cdf(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
            && self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Same law on another grid, via the step-function values.
    pub fn resample(&self, t_max: f64, step: f64) -> Result<CdfGrid> {
        CdfGrid::from_fn(t_max, step, |t| self.eval(t))
    }

    /// Mass of each half-open cell `(t_{k-1}, t_k]`, `k = 1..=G`.
    pub(crate) fn cell_masses(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

impl MessageLaw for CdfGrid {
    fn atom(&self) -> f64 {
        self.h0()
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

fn grid_points(t_max: f64, step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::validation("grid.step", "step must be positive"));
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::validation("grid.t_max", "t_max must be positive"));
    }
    let g = (t_max / step - 1e-9).ceil().max(1.0);
    if g > 5e7 {
        return Err(Error::Budget {
            what: "grid points".into(),
            limit: 50_000_000,
        });
    }
    Ok(g as usize)
}

fn monotone(values: &mut [f64]) {
    let mut run = 0.0_f64;
    for v in values {
        run = run.max(v.clamp(0.0, 1.0));
        *v = run;
    }
}

/// Grid extent and resolution. A missing `t_max` means 1.5 times the
/// 99.99% quantile of the weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub t_max: Option<f64>,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            t_max: None,
            step: 1e-3,
        }
    }
}

pub const COVERAGE_QUANTILE: f64 = 0.9999;

impl GridSpec {
    /// `(t_max, step, warning)`.
    pub fn resolve(&self, weights: &WeightLaw) -> Result<(f64, f64, Option<String>)> {
        let q = weights.quantile(COVERAGE_QUANTILE);
        let t_max = match self.t_max {
            Some(t) => t,
            None => (1.5 * q).max(self.step),
        };
        let g = grid_points(t_max, self.step)?;
        let t_max = g as f64 * self.step;
        let warning = (t_max < q)
            .then(|| format!("grid ends at {t_max} below the 99.99% weight quantile {q}"));
        Ok((t_max, self.step, warning))
    }
}

/// `φ̂(x)`.
pub fn offspring_pgf(law: &DegreeLaw, x: f64) -> f64 {
    law.offspring_pgf(x)
}

/// `inf { x in [0,1] : φ̂(x) >= y }`.
pub fn inv_phi_hat(law: &DegreeLaw, y: f64, tol: f64) -> f64 {
    law.inv_offspring_pgf(y, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterateOptions {
    pub grid: GridSpec,
    /// Stop once `sup |F(h) - h| < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight kept on the previous iterate, in `[0, 1)`.
    pub damping: f64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            tol: 1e-10,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IterateOutcome {
    pub h: CdfGrid,
    /// `sup |F(h) - h|` at the last step.
    pub residual: f64,
    pub iterations: usize,
    pub warning: Option<String>,
}

/// The map `F(h)(t_k) = φ̂(1 - E[h(W - t_k)])` on a fixed grid.
///
/// With `h` a right-continuous step function,
/// `E[h(W - t_k)] = Σ_{j<G} h_j P(t_{k+j} <= W < t_{k+j+1}) + h_G P(W >= t_{k+G})`,
/// a correlation evaluated by FFT against the cached cell masses.
struct RdeMap<'a> {
    law: &'a DegreeLaw,
    g: usize,
    kernel: FixedKernel,
    tail: Vec<f64>,
}

impl<'a> RdeMap<'a> {
    fn new(law: &'a DegreeLaw, weights: &WeightLaw, g: usize, step: f64) -> Self {
        let t = |i: usize| i as f64 * step;
        let masses: Vec<f64> = (0..2 * g).map(|i| weights.mass(t(i), t(i + 1))).collect();
        let tail = (0..=g).map(|k| weights.survival(t(k + g))).collect();
        Self {
            law,
            g,
            kernel: FixedKernel::new(&masses, g),
            tail,
        }
    }

    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let g = self.g;
        let reversed: Vec<f64> = values[..g].iter().rev().copied().collect();
        let corr = self.kernel.convolve(&reversed);
        let mut out: Vec<f64> = (0..=g)
            .map(|k| {
                let e = corr[k + g - 1] + values[g] * self.tail[k];
                self.law.offspring_pgf((1.0 - e).clamp(0.0, 1.0))
            })
            .collect();
        monotone(&mut out);
        out
    }
}

/// Damped fixed-point iteration of `h ← F(h)` from `init` (default
/// `h = 1[t >= 0]`).
pub fn iterate_h(
    law: &DegreeLaw,
    weights: &WeightLaw,
    opts: &IterateOptions,
    init: Option<&CdfGrid>,
) -> Result<IterateOutcome> {
    if !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::validation("damping", "must lie in [0, 1)"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::validation("tol", "must be positive"));
    }
    let (t_max, step, warning) = opts.grid.resolve(weights)?;
    let g = grid_points(t_max, step)?;
    let mut values = match init {
        Some(h) => h.resample(t_max, step)?.values,
        None => vec![1.0; g + 1],
    };
    let map = RdeMap::new(law, weights, g, step);
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iter {
        let next = map.apply(&values);
        residual = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < opts.tol {
            return Ok(IterateOutcome {
                h: CdfGrid::new(step, next)?,
                residual,
                iterations: iteration,
                warning,
            });
        }
        for (v, n) in values.iter_mut().zip(&next) {
            *v = opts.damping * *v + (1.0 - opts.damping) * n;
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Particles approximately distributed as ζ.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePool {
    pub samples: Vec<f64>,
    pub sweep_count: usize,
}

impl SamplePool {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        s
    }
}

impl MessageLaw for SamplePool {
    fn atom(&self) -> f64 {
        self.samples.iter().filter(|&&z| z == 0.0).count() as f64 / self.samples.len() as f64
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        self.samples[rng.random_range(0..self.samples.len())]
    }
}

/// Particles per random stream; fixing it makes results independent of
/// the number of worker threads.
pub const POOL_CHUNK: usize = 4096;

pub const MIN_POOL: usize = 1000;

/// Synchronous population dynamics: every sweep rebuilds the pool from the
/// frozen previous one via `Z = max(0, max_{i <= N} (w_i - Z_i))`.
pub fn population_dynamics(
    law: &DegreeLaw,
    weights: &WeightLaw,
    pool_size: usize,
    sweeps: usize,
    seed: u64,
) -> Result<SamplePool> {
    if pool_size < MIN_POOL {
        return Err(Error::validation(
            "pool_size",
            format!("must be at least {MIN_POOL}"),
        ));
    }
    let mut pool = vec![0.0; pool_size];
    let mut next = vec![0.0; pool_size];
    for sweep in 0..sweeps {
        let prev = &pool;
        next.par_chunks_mut(POOL_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let mut rng = derive_rng(seed, ((sweep as u64) << 32) | chunk as u64);
                for z in out {
                    let children = law.sample_offspring(&mut rng);
                    let mut best = 0.0_f64;
                    for _ in 0..children {
                        let w = weights.sample(&mut rng);
                        let zi = prev[rng.random_range(0..prev.len())];
                        best = best.max(w - zi);
                    }
                    *z = best;
                }
            });
        std::mem::swap(&mut pool, &mut next);
    }
    Ok(SamplePool {
        samples: pool,
        sweep_count: sweeps,
    })
}

/// `∫_0^1 φ̂(1 - sK) ds`.
fn offspring_integral(law: &DegreeLaw, k: f64) -> f64 {
    if k <= 0.0 {
        return 1.0;
    }
    if let Some(c) = law.is_poisson() {
        let ck = c * k;
        return -(-ck).exp_m1() / ck;
    }
    let log1mk = (-k).ln_1p();
    (0..law.max_degree())
        .map(|j| {
            let p = law.offspring_pmf(j);
            if p == 0.0 {
                return 0.0;
            }
            let m = (j + 1) as f64;
            let integral = if k >= 1.0 {
                1.0 / m
            } else {
                -(m * log1mk).exp_m1() / (m * k)
            };
            p * integral
        })
        .sum()
}

#[derive(Clone, Debug)]
pub struct ExpFixedPoint {
    /// `K = ∫ h(u) e^{-u} du` in the rate-1 normalisation.
    pub k: f64,
    pub rate: f64,
    pub h: CdfGrid,
}

impl ExpFixedPoint {
    /// `h(t) = φ̂(1 - e^{-λt} K)` for `t >= 0`.
    pub fn eval(&self, law: &DegreeLaw, t: f64) -> f64 {
        exp_closed_form(law, self.rate, self.k, t)
    }
}

pub fn exp_closed_form(law: &DegreeLaw, rate: f64, k: f64, t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        law.offspring_pgf(1.0 - (-rate * t).exp() * k)
    }
}

/// Closed form for `Exp(rate)` weights on the default grid.
pub fn exp_fixed_point_k(law: &DegreeLaw, rate: f64, tol: f64) -> Result<ExpFixedPoint> {
    exp_fixed_point_on(law, rate, tol, GridSpec::default())
}

/// Solves `K = ∫_0^1 φ̂(1 - sK) ds` by bisection (the right side minus `K`
/// is strictly decreasing) and tabulates the closed-form `h` on `grid`.
pub fn exp_fixed_point_on(
    law: &DegreeLaw,
    rate: f64,
    tol: f64,
    grid: GridSpec,
) -> Result<ExpFixedPoint> {
    let weights = WeightLaw::exponential(rate)?;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if offspring_integral(law, 1.0) >= 1.0 {
        lo = 1.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if offspring_integral(law, mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let (t_max, step, _) = grid.resolve(&weights)?;
    let h = CdfGrid::from_fn(t_max, step, |t| exp_closed_form(law, rate, k, t))?;
    Ok(ExpFixedPoint { k, rate, h })
}

/// Inverse-CDF draws from `h`: the atom at zero with probability `h(0)`,
/// otherwise linear interpolation of the continuous part.
pub fn sample_from_cdf(h: &CdfGrid, count: usize, seed: u64) -> SamplePool {
    let mut samples = vec![0.0; count];
    samples
        .par_chunks_mut(POOL_CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = derive_rng(seed, chunk as u64);
            for z in out {
                *z = h.sample(&mut rng);
            }
        });
    SamplePool {
        samples,
        sweep_count: 0,
    }
}

/// Kolmogorov distance between the empirical law of `samples` and the
/// interpolated CDF `h`.
pub fn kolmogorov_distance(h: &CdfGrid, samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0_f64;
    let mut i = 0;
    while i < s.len() {
        let x = s[i];
        let mut j = i;
        while j < s.len() && s[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        let left = if x <= 0.0 { 0.0 } else { h.eval_linear(x) };
        d = d
            .max((below - left).abs())
            .max((upto - h.eval_linear(x)).abs());
        i = j;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offspring_integral_closed_forms() {
        let path = DegreeLaw::dirac(2).unwrap();
        for k in [0.1, 0.5, 2.0 / 3.0, 1.0] {
            assert!((offspring_integral(&path, k) - (1.0 - k / 2.0)).abs() < 1e-14);
        }
        let dimer = DegreeLaw::dirac(1).unwrap();
        assert_eq!(offspring_integral(&dimer, 0.4), 1.0);
    }

    #[test]
    fn path_constant() {
        let law = DegreeLaw::dirac(2).unwrap();
        let fp = exp_fixed_point_k(&law, 1.0, 1e-15).unwrap();
        assert!((fp.k - 2.0 / 3.0).abs() < 1e-12);
        assert!((fp.h.h0() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dimer_constant() {
        let law = DegreeLaw::dirac(1).unwrap();
        let fp = exp_fixed_point_k(&law, 1.0, 1e-15).unwrap();
        assert_eq!(fp.k, 1.0);
        assert!(fp.h.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dimer_iteration_is_immediate() {
        let law = DegreeLaw::dirac(1).unwrap();
        let w = WeightLaw::exponential(1.0).unwrap();
        let out = iterate_h(&law, &w, &IterateOptions::default(), None).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.h.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn grid_eval_and_quantile() {
        let h = CdfGrid::new(0.5, vec![0.2, 0.6, 1.0]).unwrap();
        assert_eq!(h.eval(-0.1), 0.0);
        assert_eq!(h.eval(0.0), 0.2);
        assert_eq!(h.eval(0.7), 0.6);
        assert_eq!(h.eval(9.0), 1.0);
        assert!((h.eval_linear(0.25) - 0.4).abs() < 1e-15);
        assert_eq!(h.quantile(0.1), 0.0);
        assert!((h.quantile(0.4) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_non_monotone_values() {
        assert!(CdfGrid::new(0.1, vec![0.5, 0.4]).is_err());
        assert!(CdfGrid::new(0.1, vec![0.5, 1.2]).is_err());
        assert!(CdfGrid::new(0.0, vec![0.5, 1.0]).is_err());
    }

    #[test]
    fn childless_pool_is_all_zero() {
        let law = DegreeLaw::dirac(1).unwrap();
        let w = WeightLaw::exponential(1.0).unwrap();
        let pool = population_dynamics(&law, &w, 2000, 1, 3).unwrap();
        assert!(pool.samples.iter().all(|&z| z == 0.0));
        assert!(population_dynamics(&law, &w, 10, 1, 3).is_err());
    }

    #[test]
    fn pure_atom_samples_zero() {
        let h = CdfGrid::new(0.01, vec![1.0; 10]).unwrap();
        let pool = sample_from_cdf(&h, 1000, 1);
        assert!(pool.samples.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn grid_resolution_and_warning() {
        let w = WeightLaw::exponential(1.0).unwrap();
        let (t_max, _, warn) = GridSpec::default().resolve(&w).unwrap();
        assert!((t_max - 1.5 * w.quantile(COVERAGE_QUANTILE)).abs() < 2e-3);
        assert!(warn.is_none());
        let short = GridSpec {
            t_max: Some(2.0),
            step: 1e-2,
        };
        assert!(short.resolve(&w).unwrap().2.is_some());
    }
}
