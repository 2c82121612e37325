//! Degree laws (π and its size-biased offspring law) and edge-weight laws (ω).

use rand::Rng as _;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Tail mass below which a Poisson law is cut off for sampling.
pub const POISSON_TAIL: f64 = 1e-12;

const PMF_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
enum DegreeKind {
    Pmf(Vec<f64>),
    Poisson(f64),
}

/// Degree distribution π of a unimodular Galton–Watson tree.
///
/// The offspring law of a non-root vertex counts children excluding the
/// parent: `π̂_k = (k+1) π_{k+1} / m`, whose generating function is
/// `φ̂(x) = φ'(x) / φ'(1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeLaw {
    kind: DegreeKind,
    mean: f64,
    // Cumulative tables used for sampling (truncated for Poisson).
    degree_cdf: Vec<f64>,
    offspring_cdf: Vec<f64>,
}

impl DegreeLaw {
    /// Finite pmf `(p_0, ..., p_D)`.
    pub fn pmf(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::validation("degree_law.pmf", "empty pmf"));
        }
        if let Some(k) = pmf.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::validation(
                "degree_law.pmf",
                format!("entry {k} is negative or not finite"),
            ));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::validation(
                "degree_law.pmf",
                format!("entries sum to {total}, expected 1"),
            ));
        }
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        if mean <= 0.0 {
            return Err(Error::validation(
                "degree_law.pmf",
                "mean degree must be positive",
            ));
        }
        let offspring: Vec<f64> = (1..pmf.len()).map(|k| k as f64 * pmf[k] / mean).collect();
        Ok(Self {
            degree_cdf: cumulative(&pmf),
            offspring_cdf: cumulative(&offspring),
            kind: DegreeKind::Pmf(pmf),
            mean,
        })
    }

    /// Every vertex has degree exactly `k`.
    pub fn dirac(k: usize) -> Result<Self> {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        Self::pmf(pmf)
    }

    /// Poisson(c); its offspring law is again Poisson(c).
    pub fn poisson(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::validation(
                "degree_law.mean",
                "Poisson mean must be positive",
            ));
        }
        let pmf = poisson_truncated(c);
        let cdf = cumulative(&pmf);
        Ok(Self {
            kind: DegreeKind::Poisson(c),
            mean: c,
            degree_cdf: cdf.clone(),
            offspring_cdf: cdf,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn is_poisson(&self) -> Option<f64> {
        match self.kind {
            DegreeKind::Poisson(c) => Some(c),
            DegreeKind::Pmf(_) => None,
        }
    }

    /// `π_k`. Poisson laws use the analytic pmf.
    pub fn degree_pmf(&self, k: usize) -> f64 {
        match &self.kind {
            DegreeKind::Pmf(p) => p.get(k).copied().unwrap_or(0.0),
            DegreeKind::Poisson(c) => poisson_pmf(*c, k),
        }
    }

    /// `π̂_k = (k+1) π_{k+1} / m`.
    pub fn offspring_pmf(&self, k: usize) -> f64 {
        match &self.kind {
            DegreeKind::Pmf(_) => (k + 1) as f64 * self.degree_pmf(k + 1) / self.mean,
            DegreeKind::Poisson(c) => poisson_pmf(*c, k),
        }
    }

    /// Largest degree with nonzero sampling probability.
    pub fn max_degree(&self) -> usize {
        self.degree_cdf.len() - 1
    }

    /// Generating function `φ(x)`.
    pub fn pgf(&self, x: f64) -> f64 {
        match &self.kind {
            DegreeKind::Pmf(p) => horner(p.iter().copied(), x),
            DegreeKind::Poisson(c) => (c * (x - 1.0)).exp(),
        }
    }

    /// `φ'(x)`.
    pub fn pgf_derivative(&self, x: f64) -> f64 {
        match &self.kind {
            DegreeKind::Pmf(p) => {
                horner(p.iter().enumerate().skip(1).map(|(k, pk)| k as f64 * pk), x)
            }
            DegreeKind::Poisson(c) => c * (c * (x - 1.0)).exp(),
        }
    }

    /// Offspring generating function `φ̂(x) = φ'(x)/φ'(1)`.
    pub fn offspring_pgf(&self, x: f64) -> f64 {
        match &self.kind {
            DegreeKind::Pmf(_) => self.pgf_derivative(x) / self.mean,
            DegreeKind::Poisson(c) => (c * (x - 1.0)).exp(),
        }
    }

    /// `inf { x in [0,1] : φ̂(x) >= y }` by monotone bisection.
    ///
    /// The infimum convention sends `y <= φ̂(0)` to 0, which is what makes the
    /// degenerate law δ_1 (φ̂ ≡ 1) come out right.
    pub fn inv_offspring_pgf(&self, y: f64, tol: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        if self.offspring_pgf(0.0) >= y {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.offspring_pgf(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn sample_degree(&self, rng: &mut Rng) -> usize {
        sample_cdf(&self.degree_cdf, rng)
    }

    /// Number of children of a non-root vertex.
    pub fn sample_offspring(&self, rng: &mut Rng) -> usize {
        sample_cdf(&self.offspring_cdf, rng)
    }
}

fn horner(coeffs: impl DoubleEndedIterator<Item = f64>, x: f64) -> f64 {
    coeffs.rev().fold(0.0, |acc, c| acc * x + c)
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = pmf
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // trailing zero-probability entries are never sampled
    while out.len() > 1 && pmf[out.len() - 1] == 0.0 {
        out.pop();
    }
    out
}

fn sample_cdf(cdf: &[f64], rng: &mut Rng) -> usize {
    let total = *cdf.last().expect("nonempty cdf");
    let u: f64 = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn poisson_pmf(c: f64, k: usize) -> f64 {
    let mut p = (-c).exp();
    for j in 1..=k {
        p *= c / j as f64;
    }
    p
}

/// Poisson pmf up to the smallest `D` whose tail mass is below [`POISSON_TAIL`].
fn poisson_truncated(c: f64) -> Vec<f64> {
    let mut pmf = vec![(-c).exp()];
    let mut acc = pmf[0];
    let mut k = 0usize;
    while 1.0 - acc >= POISSON_TAIL && k < 100_000 {
        k += 1;
        let next = pmf[k - 1] * c / k as f64;
        pmf.push(next);
        acc += next;
        // past the mode with a vanishing term: the remaining tail is below
        // machine precision of `acc`
        if k as f64 > c && next < POISSON_TAIL * 1e-3 {
            break;
        }
    }
    pmf
}

/// Law ω of the i.i.d. edge weights.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightLaw {
    Exponential {
        rate: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    /// Empirical law of the given samples, stored sorted.
    Empirical(Vec<f64>),
}

impl WeightLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::validation(
                "weight_law.rate",
                "rate must be positive",
            ));
        }
        Ok(WeightLaw::Exponential { rate })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::validation("weight_law.a", "need finite a < b"));
        }
        Ok(WeightLaw::Uniform { a, b })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation(
                "weight_law.samples",
                "need at least one finite sample",
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(WeightLaw::Empirical(samples))
    }

    pub fn is_atomless(&self) -> bool {
        !matches!(self, WeightLaw::Empirical(_))
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            WeightLaw::Exponential { rate } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-rate * t).exp_m1()
                }
            }
            WeightLaw::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            WeightLaw::Empirical(s) => s.partition_point(|&x| x <= t) as f64 / s.len() as f64,
        }
    }

    /// `P(W < t)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        match self {
            WeightLaw::Empirical(s) => s.partition_point(|&x| x < t) as f64 / s.len() as f64,
            _ => self.cdf(t),
        }
    }

    /// `P(W >= t)`.
    pub fn survival(&self, t: f64) -> f64 {
        match self {
            WeightLaw::Exponential { rate } => (-rate * t.max(0.0)).exp(),
            _ => 1.0 - self.cdf_left(t),
        }
    }

    /// `P(a <= W < b)`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        (self.survival(a) - self.survival(b)).max(0.0)
    }

    /// `inf { t : F(t) >= p }`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            WeightLaw::Exponential { rate } => -(-p).ln_1p() / rate,
            WeightLaw::Uniform { a, b } => a + p * (b - a),
            WeightLaw::Empirical(s) => {
                let idx = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1;
                s[idx]
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            WeightLaw::Exponential { rate } => 1.0 / rate,
            WeightLaw::Uniform { a, b } => 0.5 * (a + b),
            WeightLaw::Empirical(s) => s.iter().sum::<f64>() / s.len() as f64,
        }
    }

    /// `E[W · 1(W > s)]`.
    pub fn tail_first_moment(&self, s: f64) -> f64 {
        match self {
            WeightLaw::Exponential { rate } => {
                if s <= 0.0 {
                    1.0 / rate
                } else {
                    (s + 1.0 / rate) * (-rate * s).exp()
                }
            }
            WeightLaw::Uniform { a, b } => {
                let lo = s.max(*a);
                if lo >= *b {
                    0.0
                } else {
                    (b * b - lo * lo) / (2.0 * (b - a))
                }
            }
            WeightLaw::Empirical(v) => {
                let start = v.partition_point(|&x| x <= s);
                v[start..].iter().sum::<f64>() / v.len() as f64
            }
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            WeightLaw::Exponential { rate } => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
            WeightLaw::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            WeightLaw::Empirical(s) => s[rng.random_range(0..s.len())],
        }
    }
}
