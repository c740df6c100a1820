//! Seeded sampling from the unitarily invariant measure on pure states and
//! the fourth-moment operators
//! `M_kl = ∫dψ ⟨ψ|k⟩⟨l|ψ⟩ |ψ⟩⟨ψ| = (δ_kl·I + |k⟩⟨l|) / (d(d+1))`.
//!
//! The measure is normalized to total mass one. States are drawn by
//! normalizing a vector of i.i.d. complex Gaussians, which is exactly the
//! invariant measure.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{CMatrix, CVector, Operator, PureState};

/// Smallest sample count accepted by the Monte-Carlo estimators.
pub const MIN_MC_SAMPLES: usize = 1000;

/// A reproducible random stream identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh, independent stream derived from this one's identity (not its
    /// current position).
    pub fn substream(&self, index: u64) -> Self {
        Self::with_stream(self.seed, mix(self.stream, index))
    }
}

// splitmix64 finalizer over the pair
fn mix(stream: u64, index: u64) -> u64 {
    let mut z = stream
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index)
        .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Sample mean with its standard error (sample standard deviation / √n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate<T> {
    pub value: T,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Differences below this are floating-point rounding in the sample mean,
/// not sampling error. Matters when the integrand is constant in ψ and the
/// standard error collapses to ~1e-19.
pub const ROUNDING_FLOOR: f64 = 1e-12;

impl McEstimate<f64> {
    /// `|value - target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        z((self.value - target).abs(), self.std_error)
    }

    /// `|value - target| ≤ sigmas·std_error`, with differences under
    /// [`ROUNDING_FLOOR`] always accepted.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }
}

impl McEstimate<Complex64> {
    pub fn z_score(&self, target: Complex64) -> f64 {
        z((self.value - target).norm(), self.std_error)
    }

    pub fn within(&self, target: Complex64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }
}

fn z(diff: f64, se: f64) -> f64 {
    if diff <= ROUNDING_FLOOR {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        diff / se
    }
}

/// Welford accumulator; `merge` follows Chan et al. so chunked runs combine.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self) -> McEstimate<f64> {
        McEstimate {
            value: self.mean,
            std_error: (self.variance() / self.n.max(1) as f64).sqrt(),
            n_samples: self.n,
        }
    }
}

/// Real and imaginary parts tracked separately; the standard error is
/// `sqrt(Var re + Var im) / √n`, i.e. based on `E|z - mean|²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexStats {
    re: RunningStats,
    im: RunningStats,
}

impl ComplexStats {
    pub fn push(&mut self, z: Complex64) {
        self.re.push(z.re);
        self.im.push(z.im);
    }

    pub fn merge(&mut self, other: &ComplexStats) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn estimate(&self) -> McEstimate<Complex64> {
        let n = self.re.count();
        McEstimate {
            value: Complex64::new(self.re.mean(), self.im.mean()),
            std_error: ((self.re.variance() + self.im.variance()) / n.max(1) as f64).sqrt(),
            n_samples: n,
        }
    }
}

/// Splits `n` samples into `workers` contiguous chunks, runs chunk `i` on
/// substream `i` in parallel and returns the per-chunk results in chunk
/// order. Output depends on `(seed, stream, n, workers)` only.
pub(crate) fn run_chunked<A, F>(n: usize, workers: usize, rng: &SeededRng, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(usize, &mut SeededRng) -> A + Sync,
{
    let workers = workers.clamp(1, n.max(1));
    let base = n / workers;
    let extra = n % workers;
    (0..workers)
        .into_par_iter()
        .map(|i| {
            let count = base + usize::from(i < extra);
            let mut sub = rng.substream(i as u64);
            f(count, &mut sub)
        })
        .collect()
}

/// Mean of a real integrand over `n` invariant-measure states of dimension
/// `d`, evaluated in `workers` chunks.
pub(crate) fn integrate_states<F>(
    d: usize,
    n: usize,
    rng: &SeededRng,
    workers: usize,
    integrand: F,
) -> Result<McEstimate<f64>>
where
    F: Fn(&PureState) -> f64 + Sync,
{
    check_samples(n)?;
    check_dim(d)?;
    let parts = run_chunked(n, workers, rng, |count, r| {
        let mut acc = RunningStats::default();
        for _ in 0..count {
            let psi = draw_state(d, r);
            acc.push(integrand(&psi));
        }
        acc
    });
    let mut total = RunningStats::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.estimate())
}

pub(crate) fn check_samples(n: usize) -> Result<()> {
    if n < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            min: MIN_MC_SAMPLES,
        });
    }
    Ok(())
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    Ok(())
}

fn draw_state(d: usize, rng: &mut SeededRng) -> PureState {
    loop {
        let v = CVector::from_fn(d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        // a zero draw has probability zero; retry rather than divide by it
        if let Ok(psi) = PureState::normalize(v) {
            return psi;
        }
    }
}

/// A pure state drawn from the unitarily invariant measure.
pub fn sample_haar_state(d: usize, rng: &mut SeededRng) -> Result<PureState> {
    check_dim(d)?;
    Ok(draw_state(d, rng))
}

/// Closed form `(δ_kl·I + |k⟩⟨l|) / (d(d+1))`.
pub fn m_kl_exact(d: usize, k: usize, l: usize) -> Result<Operator> {
    check_dim(d)?;
    for index in [k, l] {
        if index >= d {
            return Err(Error::IndexOutOfRange { index, dim: d });
        }
    }
    let norm = 1.0 / (d * (d + 1)) as f64;
    let mut m = if k == l {
        CMatrix::identity(d, d)
    } else {
        CMatrix::zeros(d, d)
    };
    m[(k, l)] += Complex64::new(1.0, 0.0);
    Operator::new(m * Complex64::new(norm, 0.0))
}

/// Entrywise Monte-Carlo estimate of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct McMatrix {
    dim: usize,
    entries: Vec<McEstimate<Complex64>>,
}

impl McMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &McEstimate<Complex64> {
        &self.entries[i * self.dim + j]
    }

    pub fn values(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j).value)
    }

    /// Largest entrywise z-score against `target`, with its position.
    pub fn max_z_score(&self, target: &Operator) -> (f64, (usize, usize)) {
        let mut worst = (0.0, (0, 0));
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self.get(i, j).z_score(target.matrix()[(i, j)]);
                if z > worst.0 {
                    worst = (z, (i, j));
                }
            }
        }
        worst
    }
}

/// Estimates `∫dψ ⟨ψ|k⟩⟨l|ψ⟩ |ψ⟩⟨ψ|` entrywise from `n` samples.
pub fn m_kl_monte_carlo(
    d: usize,
    k: usize,
    l: usize,
    n: usize,
    rng: &SeededRng,
    workers: usize,
) -> Result<McMatrix> {
    m_kl_exact(d, k, l)?;
    check_samples(n)?;
    let parts = run_chunked(n, workers, rng, |count, r| {
        let mut acc = vec![ComplexStats::default(); d * d];
        for _ in 0..count {
            let psi = draw_state(d, r);
            let a = psi.amplitudes();
            let weight = a[k].conj() * a[l];
            for i in 0..d {
                for j in 0..d {
                    acc[i * d + j].push(weight * a[i] * a[j].conj());
                }
            }
        }
        acc
    });
    let mut total = vec![ComplexStats::default(); d * d];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(McMatrix {
        dim: d,
        entries: total.iter().map(ComplexStats::estimate).collect(),
    })
}
