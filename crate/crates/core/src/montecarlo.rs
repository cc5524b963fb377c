//! Direct simulation of the cascade, used as an independent oracle.
//!
//! Samples are split over a fixed number of ChaCha8 streams. Stream `k`
//! is seeded from `(seed, k)` alone and partial results are combined in
//! stream order, so estimates do not depend on the thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{CascadeChannel, EggLayer};
use crate::error::{Error, Result};
use crate::metrics::{Modulation, TAU};

/// Minimum sample count accepted by the estimators.
pub const MIN_SAMPLES: u64 = 1000;

/// Seed and stream partitioning; equal specs give bit-identical estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub streams: u32,
}

impl RngSpec {
    pub fn new(seed: u64, streams: u32) -> Result<Self> {
        if streams == 0 {
            return Err(Error::InvalidParams("stream count must be positive".into()));
        }
        Ok(Self { seed, streams })
    }

    /// Generator for stream `k`.
    pub fn stream(&self, k: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from(k));
        rng
    }

    fn counts(&self, samples: u64) -> Vec<(u32, u64)> {
        let s = u64::from(self.streams);
        (0..self.streams)
            .map(|k| (k, samples / s + u64::from(u64::from(k) < samples % s)))
            .collect()
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    /// `|value - reference|` in standard errors.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = (self.value - reference).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Self { n, mean: self.mean + d * w, m2: self.m2 + other.m2 + d * d * self.n as f64 * w }
    }

    fn estimate(self) -> Estimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        Estimate { value: self.mean, std_error: (var / self.n as f64).sqrt(), samples: self.n }
    }
}

/// One irradiance draw: `Exp(λ)` with probability `ω`, else `b G^{1/c}` with `G ~ Gamma(a, 1)`.
pub fn sample_layer<R: Rng + ?Sized>(layer: &EggLayer, rng: &mut R) -> f64 {
    if layer.omega > 0.0 && (layer.omega >= 1.0 || rng.gen::<f64>() < layer.omega) {
        let e: f64 = Exp1.sample(rng);
        layer.lambda * e
    } else {
        let g = Gamma::new(layer.a, 1.0).expect("a > 0 by invariant").sample(rng);
        layer.b * g.powf(1.0 / layer.c)
    }
}

/// Pre-built samplers for one cascade.
pub struct SnrSampler<'a> {
    channel: &'a CascadeChannel,
    gammas: Vec<Gamma<f64>>,
    mean: f64,
}

impl<'a> SnrSampler<'a> {
    pub fn new(channel: &'a CascadeChannel) -> Self {
        let gammas = channel
            .layers()
            .iter()
            .map(|l| Gamma::new(l.a, 1.0).expect("a > 0 by invariant"))
            .collect();
        Self { channel, gammas, mean: channel.mean_irradiance() }
    }

    /// End-to-end irradiance `Π I_n`.
    pub fn irradiance<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.channel
            .layers()
            .iter()
            .zip(&self.gammas)
            .map(|(layer, g)| {
                if layer.omega > 0.0 && (layer.omega >= 1.0 || rng.gen::<f64>() < layer.omega) {
                    let e: f64 = Exp1.sample(rng);
                    layer.lambda * e
                } else {
                    layer.b * g.sample(rng).powf(1.0 / layer.c)
                }
            })
            .product()
    }

    /// `γ = μ_r (Π I_n / E[I])^r`.
    pub fn snr<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.channel.mu_r() * (self.irradiance(rng) / self.mean).powf(self.channel.r())
    }
}

pub fn sample_irradiance<R: Rng + ?Sized>(channel: &CascadeChannel, rng: &mut R) -> f64 {
    SnrSampler::new(channel).irradiance(rng)
}

pub fn sample_snr<R: Rng + ?Sized>(channel: &CascadeChannel, rng: &mut R) -> f64 {
    SnrSampler::new(channel).snr(rng)
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParams(format!("{samples} samples; at least {MIN_SAMPLES} required")));
    }
    Ok(())
}

/// Mean of `kernel(γ)` over `samples` SNR draws.
pub fn estimate_kernel<F>(channel: &CascadeChannel, samples: u64, spec: &RngSpec, kernel: F) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_samples(samples)?;
    let sampler = SnrSampler::new(channel);
    let parts: Vec<Moments> = spec
        .counts(samples)
        .into_par_iter()
        .map(|(k, n)| {
            let mut rng = spec.stream(k);
            let mut m = Moments::default();
            for _ in 0..n {
                m.push(kernel(sampler.snr(&mut rng)));
            }
            m
        })
        .collect();
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge).estimate())
}

/// Kernel-averaged BER estimate.
pub fn estimate_ber(channel: &CascadeChannel, modulation: &Modulation, samples: u64, spec: &RngSpec) -> Result<Estimate> {
    modulation.validate()?;
    estimate_kernel(channel, samples, spec, |g| modulation.conditional_ber(g))
}

/// Estimate of `E[ln(1 + τγ)]` in nats.
pub fn estimate_capacity(channel: &CascadeChannel, samples: u64, spec: &RngSpec) -> Result<Estimate> {
    estimate_kernel(channel, samples, spec, |g| (TAU * g).ln_1p())
}

/// Frequency of `γ ≤ threshold`.
pub fn estimate_outage(channel: &CascadeChannel, threshold: f64, samples: u64, spec: &RngSpec) -> Result<Estimate> {
    if !(threshold > 0.0) {
        return Err(Error::domain("estimate_outage", format!("threshold {threshold} must be positive")));
    }
    let mut est = estimate_kernel(channel, samples, spec, |g| f64::from(u8::from(g <= threshold)))?;
    let p = est.value;
    est.std_error = (p * (1.0 - p) / est.samples as f64).sqrt();
    Ok(est)
}

/// Bin counts of simulated values against increasing `edges`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    /// `counts[i]` holds draws in `[edges[i], edges[i+1])`.
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

/// Histogram of `samples` end-to-end irradiance draws.
pub fn irradiance_histogram(channel: &CascadeChannel, edges: &[f64], samples: u64, spec: &RngSpec) -> Result<Histogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams("histogram edges must be strictly increasing".into()));
    }
    let sampler = SnrSampler::new(channel);
    let bins = edges.len() - 1;
    let parts: Vec<Histogram> = spec
        .counts(samples)
        .into_par_iter()
        .map(|(k, n)| {
            let mut rng = spec.stream(k);
            let mut h = Histogram { counts: vec![0; bins], below: 0, above: 0 };
            for _ in 0..n {
                let x = sampler.irradiance(&mut rng);
                match edges.partition_point(|e| *e <= x) {
                    0 => h.below += 1,
                    i if i > bins => h.above += 1,
                    i => h.counts[i - 1] += 1,
                }
            }
            h
        })
        .collect();
    Ok(parts.into_iter().fold(Histogram { counts: vec![0; bins], below: 0, above: 0 }, |mut acc, h| {
        acc.counts.iter_mut().zip(&h.counts).for_each(|(a, b)| *a += b);
        acc.below += h.below;
        acc.above += h.above;
        acc
    }))
}
