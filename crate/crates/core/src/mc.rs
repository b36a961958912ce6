//! Seeded, reproducible Monte Carlo expectations.
//!
//! The sampling layout is a function of `(seed, partitions, samples)` only.
//! Partition `p` receives an even share of the samples and walks them in
//! blocks of [`BLOCK_LEN`] draws. Block `b` of partition `p` reads from the
//! ChaCha8 stream keyed by `seed` with stream id `(p << 32) | b`, so every
//! block can be evaluated independently and in any order. Block statistics
//! are merged with a fixed-shape pairwise tree, which makes the result
//! bit-identical whether blocks run on one thread or many.

use std::fmt::Debug;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::ComplexGainSampler;

/// Draws per block. Part of the reproducibility contract.
pub const BLOCK_LEN: u64 = 4096;

/// Random stream handed to every draw closure.
pub type StreamRng = ChaCha8Rng;

/// How independent jobs (blocks, grid points) are scheduled. Results never
/// depend on this choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled and falls
    /// back to sequential execution otherwise.
    #[default]
    Parallel,
}

impl Execution {
    /// Maps `f` over `0..n`, preserving index order in the output.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    pub fn try_map<T, F>(self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub partitions: u32,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 42,
            partitions: 1,
            execution: Execution::default(),
        }
    }
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            ..Self::default()
        }
    }

    pub fn with_partitions(mut self, partitions: u32) -> Self {
        self.partitions = partitions;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = samples;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Domain("samples must be positive".into()));
        }
        if self.partitions == 0 {
            return Err(Error::Domain("partitions must be positive".into()));
        }
        Ok(())
    }

    /// `(partition, block index, draws in block, index of first draw)`.
    fn blocks(&self) -> Vec<(u32, u64, u64, u64)> {
        let parts = u64::from(self.partitions);
        let base = self.samples / parts;
        let extra = self.samples % parts;
        let mut out = Vec::new();
        let mut first = 0;
        for p in 0..parts {
            let count = base + u64::from(p < extra);
            let mut done = 0;
            let mut b = 0;
            while done < count {
                let len = BLOCK_LEN.min(count - done);
                out.push((p as u32, b, len, first + done));
                done += len;
                b += 1;
            }
            first += count;
        }
        out
    }
}

/// Mean of an expectation together with its CLT standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl EstimateResult {
    /// A value known without sampling error (closed form or quadrature).
    pub fn exact(mean: f64) -> Self {
        Self {
            mean,
            stderr: 0.0,
            samples: 0,
            seed: 0,
        }
    }

    pub fn shifted(self, offset: f64) -> Self {
        Self {
            mean: self.mean + offset,
            ..self
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            stderr: self.stderr * factor.abs(),
            ..self
        }
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Debug, Clone)]
struct Moments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn from_columns(columns: &[Vec<f64>], count: u64) -> Self {
        let n = count as f64;
        let mut mean = Vec::with_capacity(columns.len());
        let mut m2 = Vec::with_capacity(columns.len());
        let mut dev = Vec::with_capacity(count as usize);
        for col in columns {
            let mu = pairwise_sum(col) / n;
            dev.clear();
            dev.extend(col.iter().map(|x| (x - mu) * (x - mu)));
            mean.push(mu);
            m2.push(pairwise_sum(&dev));
        }
        Self { count, mean, m2 }
    }

    fn merge(a: &Self, b: &Self) -> Self {
        let n = (a.count + b.count) as f64;
        let (na, nb) = (a.count as f64, b.count as f64);
        let mut mean = Vec::with_capacity(a.mean.len());
        let mut m2 = Vec::with_capacity(a.mean.len());
        for i in 0..a.mean.len() {
            let delta = b.mean[i] - a.mean[i];
            mean.push(a.mean[i] + delta * (nb / n));
            m2.push(a.m2[i] + b.m2[i] + delta * delta * (na * nb / n));
        }
        Self {
            count: a.count + b.count,
            mean,
            m2,
        }
    }

    fn reduce(parts: &[Self]) -> Self {
        match parts.len() {
            1 => parts[0].clone(),
            len => {
                let mid = len / 2;
                Self::merge(&Self::reduce(&parts[..mid]), &Self::reduce(&parts[mid..]))
            }
        }
    }
}

/// Estimates `dim` expectations from one shared stream of draws.
///
/// `draw` produces one random object from the block's stream, `eval` writes
/// the `dim` integrand values for it. Any non-finite value aborts the run
/// and reports the offending draw.
pub fn estimate_vector<D, G, F>(
    cfg: &McConfig,
    dim: usize,
    draw: G,
    eval: F,
) -> Result<Vec<EstimateResult>>
where
    D: Debug,
    G: Fn(&mut StreamRng) -> D + Sync + Send,
    F: Fn(&D, &mut [f64]) + Sync + Send,
{
    cfg.validate()?;
    if dim == 0 {
        return Ok(Vec::new());
    }
    let base = StreamRng::seed_from_u64(cfg.seed);
    let blocks = cfg.blocks();
    let stats = cfg.execution.try_map(blocks.len(), |i| {
        let (partition, block, len, first) = blocks[i];
        let mut rng = base.clone();
        rng.set_stream((u64::from(partition) << 32) | block);
        let mut columns = vec![Vec::with_capacity(len as usize); dim];
        let mut row = vec![0.0; dim];
        for j in 0..len {
            let d = draw(&mut rng);
            eval(&d, &mut row);
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        value: v,
                        index: first + j,
                        partition,
                        draw: format!("{d:?}"),
                    });
                }
                columns[k].push(v);
            }
        }
        Ok(Moments::from_columns(&columns, len))
    })?;
    let total = Moments::reduce(&stats);
    let n = total.count as f64;
    Ok((0..dim)
        .map(|k| {
            let stderr = if total.count > 1 {
                (total.m2[k] / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            EstimateResult {
                mean: total.mean[k],
                stderr,
                samples: total.count,
                seed: cfg.seed,
            }
        })
        .collect())
}

/// Scalar version of [`estimate_vector`].
pub fn estimate_with<D, G, F>(cfg: &McConfig, draw: G, f: F) -> Result<EstimateResult>
where
    D: Debug,
    G: Fn(&mut StreamRng) -> D + Sync + Send,
    F: Fn(&D) -> f64 + Sync + Send,
{
    let mut out = estimate_vector(cfg, 1, draw, |d, row| row[0] = f(d))?;
    Ok(out.remove(0))
}

/// `E[f(g_1, ..., g_m)]` for `m` independent complex link gains.
pub fn estimate_expectation<F>(
    f: F,
    samplers: &[ComplexGainSampler],
    cfg: &McConfig,
) -> Result<EstimateResult>
where
    F: Fn(&[Complex64]) -> f64 + Sync + Send,
{
    if samplers.is_empty() || samplers.len() > 4 {
        return Err(Error::SamplerCount(samplers.len()));
    }
    estimate_with(
        cfg,
        |rng| {
            let mut g = [Complex64::new(0.0, 0.0); 4];
            for (slot, s) in g.iter_mut().zip(samplers) {
                *slot = s.sample(rng);
            }
            GainTuple {
                gains: g,
                len: samplers.len(),
            }
        },
        |t| f(&t.gains[..t.len]),
    )
}

#[derive(Debug, Clone, Copy)]
struct GainTuple {
    gains: [Complex64; 4],
    len: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{FadingModel, Shape};
    use rand::Rng;

    fn uniform(cfg: &McConfig) -> EstimateResult {
        estimate_with(cfg, |rng| rng.random::<f64>(), |&u| u).unwrap()
    }

    #[test]
    fn constant_integrand_has_zero_stderr() {
        let s = ComplexGainSampler::new(FadingModel::new(Shape::Rayleigh, 1.0).unwrap());
        let r = estimate_expectation(|_| 7.0, &[s], &McConfig::new(10_001, 3)).unwrap();
        assert_eq!(r.mean, 7.0);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.samples, 10_001);
    }

    #[test]
    fn rayleigh_power_mean() {
        let s = ComplexGainSampler::new(FadingModel::new(Shape::Rayleigh, 5.0).unwrap());
        let r = estimate_expectation(|g| g[0].norm_sqr(), &[s], &McConfig::default()).unwrap();
        assert!((r.mean - 5.0).abs() < 0.02, "{r:?}");
        // Exp(5) has std 5, so stderr = 5 / 1000.
        assert!((r.stderr - 0.005).abs() < 2e-4, "{r:?}");
    }

    #[test]
    fn sampler_count_is_checked() {
        let cfg = McConfig::new(10, 1);
        assert_eq!(
            estimate_expectation(|_| 0.0, &[], &cfg).unwrap_err(),
            Error::SamplerCount(0)
        );
        let s = ComplexGainSampler::new(FadingModel::new(Shape::Rayleigh, 1.0).unwrap());
        let five = vec![s; 5];
        assert_eq!(
            estimate_expectation(|_| 0.0, &five, &cfg).unwrap_err(),
            Error::SamplerCount(5)
        );
    }

    #[test]
    fn non_finite_reports_draw() {
        let cfg = McConfig::new(20_000, 9);
        let err = estimate_with(&cfg, |rng| rng.random::<f64>(), |&u| {
            if u < 1e-3 {
                f64::NAN
            } else {
                u
            }
        })
        .unwrap_err();
        match err {
            Error::NonFinite { value, draw, .. } => {
                assert!(value.is_nan());
                assert!(draw.parse::<f64>().unwrap() < 1e-3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bit_identical_across_executors() {
        let cfg = McConfig::new(100_003, 77).with_partitions(3);
        let a = uniform(&cfg.with_execution(Execution::Sequential));
        let b = uniform(&cfg.with_execution(Execution::Parallel));
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn partition_count_changes_layout_not_distribution() {
        let one = uniform(&McConfig::new(200_000, 5));
        let four = uniform(&McConfig::new(200_000, 5).with_partitions(4));
        assert_ne!(one.mean, four.mean);
        assert!((one.mean - four.mean).abs() <= 3.0 * (one.stderr + four.stderr));
    }

    #[test]
    fn block_layout_covers_all_samples() {
        let cfg = McConfig::new(3 * BLOCK_LEN + 17, 0).with_partitions(2);
        let blocks = cfg.blocks();
        let total: u64 = blocks.iter().map(|b| b.2).sum();
        assert_eq!(total, cfg.samples);
        let mut next = 0;
        for &(_, _, len, first) in &blocks {
            assert_eq!(first, next);
            next += len;
        }
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let xs = vec![0.1; 1 << 20];
        let s = pairwise_sum(&xs);
        assert!((s - 104_857.6).abs() < 1e-8);
    }
}
