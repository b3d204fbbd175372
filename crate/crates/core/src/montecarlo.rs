//! Seeded, parallel Monte Carlo over uniform random permutations.
//!
//! Trial `t` under seed `s` draws from its own ChaCha8 stream (key from `s`,
//! stream id `t`), so a trial's permutation is a pure function of `(s, t)`.
//! Trials are grouped into fixed-size blocks that workers pick up in any
//! order; block histograms merge by count addition, so results do not depend
//! on the worker count or on scheduling.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scan::{scan_summary, PermutationSample, Statistic};
use crate::theory;

/// Trials per work unit. Part of the reproducibility contract only through
/// the merge, which is order independent.
pub const BLOCK_TRIALS: u64 = 1024;

/// Random stream for a single trial.
#[derive(Debug, Clone)]
pub struct TrialRng(ChaCha8Rng);

impl TrialRng {
    pub fn new(seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Self(rng)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in `0..range` by multiply-and-reject, without
    /// modulo bias. `range` must be non-zero.
    #[inline]
    pub fn below(&mut self, range: u32) -> u32 {
        debug_assert!(range > 0);
        let mut m = u64::from(self.next_u32()) * u64::from(range);
        if (m as u32) < range {
            let threshold = range.wrapping_neg() % range;
            while (m as u32) < threshold {
                m = u64::from(self.next_u32()) * u64::from(range);
            }
        }
        (m >> 32) as u32
    }
}

/// Overwrites `buf` with a uniform permutation of `1..=n` (Fisher–Yates).
pub fn fill_permutation(buf: &mut Vec<u32>, n: usize, rng: &mut TrialRng) {
    buf.clear();
    buf.extend(1..=n as u32);
    for i in (1..n).rev() {
        let j = rng.below(i as u32 + 1) as usize;
        buf.swap(i, j);
    }
}

/// The permutation used by trial `trial` under `seed`.
pub fn generate_permutation(n: usize, seed: u64, trial: u64) -> Result<PermutationSample> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "n={n} exceeds the rank type"
        )));
    }
    let mut buf = Vec::with_capacity(n);
    fill_permutation(&mut buf, n, &mut TrialRng::new(seed, trial));
    Ok(PermutationSample::from_ranks_unchecked(buf))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialConfig {
    pub n: usize,
    pub ks: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyInput);
        }
        if self.n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "n={} exceeds the rank type",
                self.n
            )));
        }
        if self.trials == 0 {
            return Err(Error::ZeroTrials);
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        for &k in &self.ks {
            if k < 2 {
                return Err(Error::WindowTooShort { k });
            }
            if k >= self.n {
                return Err(Error::WindowExceedsSample {
                    n: self.n,
                    k: k + 1,
                });
            }
        }
        Ok(())
    }
}

/// Empirical law of one statistic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmpiricalDistribution {
    pub statistic: Statistic,
    pub n: usize,
    pub k: Option<usize>,
    pub trials: u64,
    pub seed: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl EmpiricalDistribution {
    /// Builds a distribution from raw counts; `trials` is their sum.
    pub fn from_counts(
        statistic: Statistic,
        n: usize,
        k: Option<usize>,
        seed: u64,
        counts: BTreeMap<u64, u64>,
    ) -> Self {
        let trials = counts.values().sum();
        Self {
            statistic,
            n,
            k,
            trials,
            seed,
            counts,
        }
    }

    pub fn probability(&self, v: u64) -> f64 {
        self.counts.get(&v).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    pub fn prob_at_most(&self, v: u64) -> f64 {
        self.counts.range(..=v).map(|(_, c)| c).sum::<u64>() as f64 / self.trials as f64
    }

    pub fn pmf(&self) -> Vec<(u64, f64)> {
        self.counts
            .iter()
            .map(|(&v, &c)| (v, c as f64 / self.trials as f64))
            .collect()
    }

    pub fn mean(&self) -> f64 {
        let sum: f64 = self.counts.iter().map(|(&v, &c)| v as f64 * c as f64).sum();
        sum / self.trials as f64
    }

    /// Smallest value whose cumulative count reaches half the trials.
    pub fn median(&self) -> u64 {
        let mut acc = 0;
        for (&v, &c) in &self.counts {
            acc += c;
            if 2 * acc >= self.trials {
                return v;
            }
        }
        0
    }

    /// Fraction of trials whose value lies in `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let hits: u64 = self
            .counts
            .iter()
            .filter(|(&v, _)| (v as f64) >= lo && (v as f64) <= hi)
            .map(|(_, &c)| c)
            .sum();
        hits as f64 / self.trials as f64
    }

    /// Half-sum total variation distance to another law on the same support
    /// type (`other` given as value/probability pairs).
    pub fn tv_to(&self, other: &[(u64, f64)]) -> f64 {
        let mut diff: BTreeMap<u64, f64> = self.pmf().into_iter().collect();
        for &(v, q) in other {
            *diff.entry(v).or_insert(0.0) -= q;
        }
        0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
    }
}

fn bump(map: &mut BTreeMap<u64, u64>, v: u64) {
    *map.entry(v).or_insert(0) += 1;
}

fn add_into(dst: &mut BTreeMap<u64, u64>, src: &BTreeMap<u64, u64>) {
    for (&v, &c) in src {
        *dst.entry(v).or_insert(0) += c;
    }
}

/// Raw histograms from a contiguous range of trials.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrialHistograms {
    pub trials: u64,
    pub longest: BTreeMap<u64, u64>,
    /// One histogram per configured `k`, in configuration order.
    pub windows: Vec<BTreeMap<u64, u64>>,
    pub strict: Vec<BTreeMap<u64, u64>>,
}

impl TrialHistograms {
    fn empty(num_ks: usize) -> Self {
        Self {
            trials: 0,
            longest: BTreeMap::new(),
            windows: vec![BTreeMap::new(); num_ks],
            strict: vec![BTreeMap::new(); num_ks],
        }
    }

    /// Adds the counts of `other`; commutative and associative.
    pub fn merge(mut self, other: &TrialHistograms) -> Self {
        if self.windows.len() < other.windows.len() {
            self.windows.resize(other.windows.len(), BTreeMap::new());
            self.strict.resize(other.strict.len(), BTreeMap::new());
        }
        self.trials += other.trials;
        add_into(&mut self.longest, &other.longest);
        for (a, b) in self.windows.iter_mut().zip(&other.windows) {
            add_into(a, b);
        }
        for (a, b) in self.strict.iter_mut().zip(&other.strict) {
            add_into(a, b);
        }
        self
    }
}

/// Runs trials `range` of `config` on the calling thread.
pub fn run_trial_range(config: &TrialConfig, range: Range<u64>) -> Result<TrialHistograms> {
    let mut hist = TrialHistograms::empty(config.ks.len());
    let mut buf = Vec::with_capacity(config.n);
    for trial in range {
        fill_permutation(&mut buf, config.n, &mut TrialRng::new(config.seed, trial));
        let s = scan_summary(&buf, &config.ks);
        bump(&mut hist.longest, s.longest as u64);
        for (i, c) in s.counts.iter().enumerate() {
            if (s.longest < c.k) != (c.windows == 0) {
                return Err(Error::InvariantViolation {
                    trial,
                    detail: format!("L={} but M(n,{})={}", s.longest, c.k, c.windows),
                });
            }
            if c.strict > c.windows {
                return Err(Error::InvariantViolation {
                    trial,
                    detail: format!(
                        "M'(n,{k})={} exceeds M(n,{k})={}",
                        c.strict,
                        c.windows,
                        k = c.k
                    ),
                });
            }
            bump(&mut hist.windows[i], c.windows);
            bump(&mut hist.strict[i], c.strict);
        }
        hist.trials += 1;
    }
    Ok(hist)
}

fn blocks(trials: u64) -> Vec<Range<u64>> {
    (0..trials.div_ceil(BLOCK_TRIALS))
        .map(|b| b * BLOCK_TRIALS..((b + 1) * BLOCK_TRIALS).min(trials))
        .collect()
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Empirical laws of `L` and, per configured `k`, of `M` and `M'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: TrialConfig,
    pub longest: EmpiricalDistribution,
    pub windows: Vec<EmpiricalDistribution>,
    pub strict: Vec<EmpiricalDistribution>,
}

impl SimulationReport {
    fn from_histograms(config: &TrialConfig, hist: TrialHistograms) -> Self {
        let dist = |statistic, k, counts| EmpiricalDistribution {
            statistic,
            n: config.n,
            k,
            trials: hist.trials,
            seed: config.seed,
            counts,
        };
        Self {
            config: config.clone(),
            longest: dist(Statistic::Longest, None, hist.longest.clone()),
            windows: config
                .ks
                .iter()
                .zip(&hist.windows)
                .map(|(&k, h)| dist(Statistic::Windows, Some(k), h.clone()))
                .collect(),
            strict: config
                .ks
                .iter()
                .zip(&hist.strict)
                .map(|(&k, h)| dist(Statistic::Strict, Some(k), h.clone()))
                .collect(),
        }
    }

    /// All distributions: `L` first, then `M`, `M'` for each `k`.
    pub fn distributions(&self) -> Vec<&EmpiricalDistribution> {
        std::iter::once(&self.longest)
            .chain(
                self.windows
                    .iter()
                    .zip(&self.strict)
                    .flat_map(|(m, s)| [m, s]),
            )
            .collect()
    }
}

pub fn run_trials(config: &TrialConfig) -> Result<SimulationReport> {
    config.validate()?;
    let hist = with_workers(config.workers, || {
        blocks(config.trials)
            .into_par_iter()
            .map(|r| run_trial_range(config, r))
            .try_reduce(
                || TrialHistograms::empty(config.ks.len()),
                |a, b| Ok(a.merge(&b)),
            )
    })??;
    Ok(SimulationReport::from_histograms(config, hist))
}

/// Total variation estimate with its Monte Carlo uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvEstimate {
    pub tv: f64,
    /// `½ Σ_v sqrt(p̂_v (1 - p̂_v) / N)`. Bounds both the standard deviation
    /// of the estimate and its upward bias from sampling noise.
    pub mc_stderr: f64,
}

pub fn empirical_tv_to_poisson(emp: &EmpiricalDistribution, lambda: f64) -> Result<TvEstimate> {
    if emp.trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let pmf = emp.pmf();
    let n = emp.trials as f64;
    let mc_stderr = 0.5
        * pmf
            .iter()
            .map(|&(_, p)| (p * (1.0 - p) / n).sqrt())
            .sum::<f64>();
    Ok(TvEstimate {
        tv: theory::tv_to_poisson(pmf, lambda),
        mc_stderr,
    })
}

/// Standard error of an empirical proportion.
pub fn proportion_stderr(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Longest head run in `n` tosses of a `p`-coin, per trial. Runs on the
/// current rayon pool.
pub fn coin_trials(n: usize, p: f64, trials: u64, seed: u64) -> Result<EmpiricalDistribution> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    // heads iff a uniform u64 falls below p·2^64
    let threshold = (p * 2f64.powi(64)) as u64;
    let counts = blocks(trials)
        .into_par_iter()
        .map(|range| {
            let mut counts = BTreeMap::new();
            let mut bits = Vec::with_capacity(n);
            for trial in range {
                let mut rng = TrialRng::new(seed, trial);
                bits.clear();
                bits.extend((0..n).map(|_| rng.next_u64() < threshold));
                bump(&mut counts, theory::coin_longest_run(&bits)? as u64);
            }
            Ok(counts)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            add_into(&mut a, &b);
            Ok(a)
        })?;
    Ok(EmpiricalDistribution::from_counts(
        Statistic::HeadRun,
        n,
        None,
        seed,
        counts,
    ))
}
