//! Finite-`n` diagnostics for the growth law `L_n ~ ln n / ln ln n`.
//!
//! An almost-sure limit cannot be observed at desk scale. What this module
//! reports instead is the trend of `mean(L_n) / t(n)` along an exponential
//! grid, the empirical coverage of the distributional window
//! `|L_n - t(n)| <= x` next to its closed-form prediction, the median
//! predicted by the void-probability approximation, and the coin-toss
//! baseline at the same `n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::{coin_trials, run_trials, TrialConfig};
use crate::theory::{self, FactorialMode, Schedule};

/// `⌈e^m⌉` for every integer `m` with `n_min <= e^m <= n_max`.
pub fn exp_grid(n_min: u64, n_max: u64) -> Result<Vec<u64>> {
    if n_min < 16 {
        return Err(Error::TargetUndefined { n: n_min });
    }
    if n_min > n_max {
        return Err(Error::EmptyGrid { n_min, n_max });
    }
    let (lo, hi) = (n_min as f64, n_max as f64);
    let mut grid: Vec<u64> = (lo.ln().floor() as i32..=hi.ln().ceil() as i32)
        .map(|m| f64::from(m).exp())
        .filter(|&u| u >= lo && u <= hi)
        .map(|u| u.ceil() as u64)
        .collect();
    grid.dedup();
    Ok(grid)
}

/// Trials per grid point for a fixed compute budget measured in
/// permutation entries: `clamp(budget / n, min_trials, max_trials)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialSchedule {
    pub budget: u64,
    pub min_trials: u64,
    pub max_trials: u64,
}

impl TrialSchedule {
    pub fn fixed(trials: u64) -> Self {
        Self {
            budget: 0,
            min_trials: trials,
            max_trials: trials,
        }
    }

    pub fn trials_for(&self, n: u64) -> u64 {
        (self.budget / n.max(1)).clamp(self.min_trials, self.max_trials)
    }
}

impl Default for TrialSchedule {
    fn default() -> Self {
        Self {
            budget: 2_000_000_000,
            min_trials: 10_000,
            max_trials: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryConfig {
    pub grid: Vec<u64>,
    pub schedule: TrialSchedule,
    pub seed: u64,
    pub workers: usize,
    /// Half-width of the window `|L - t(n)| <= x`.
    pub x: f64,
    pub delta_fn: Schedule,
    pub theta_fn: Schedule,
    pub mode: FactorialMode,
    /// Also simulate fair-coin longest head runs at each grid point.
    pub coin: bool,
}

impl TrajectoryConfig {
    pub fn new(grid: Vec<u64>, seed: u64) -> Self {
        Self {
            grid,
            schedule: TrialSchedule::default(),
            seed,
            workers: 1,
            x: 1.0,
            delta_fn: Schedule::LnLn,
            theta_fn: Schedule::LnLn,
            mode: FactorialMode::Gamma,
            coin: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoinPoint {
    pub target: f64,
    pub mean: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub target: f64,
    pub trials: u64,
    pub seed: u64,
    pub mean_l: f64,
    /// Standard error of `mean_l`.
    pub mean_l_stderr: f64,
    pub median_l: u64,
    pub ratio: f64,
    /// Integer `k` minimizing `|exp(-λ(n, k+1)) - 1/2|`.
    pub predicted_median: u64,
    pub window_hit_rate: f64,
    /// `alpha - beta`, absent when `t(n) ± x` leaves the domain.
    pub window_prediction: Option<f64>,
    pub window_in_gamma: Option<bool>,
    pub coin: Option<CoinPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub schedule: TrialSchedule,
    /// How `e^m` is rounded to an integer sample size.
    pub grid_rounding: &'static str,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }
}

/// Seed used at grid point `n`.
pub fn point_seed(seed: u64, n: u64) -> u64 {
    seed.wrapping_add(n.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Integer `k` minimizing `|exp(-λ(n, k+1)) - 1/2|`, i.e. the median of `L`
/// implied by `P(L <= k) = P(M(n,k+1) = 0) ≈ exp(-λ)`.
pub fn predicted_median(n: u64) -> Result<u64> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "median prediction needs n >= 4, got {n}"
        )));
    }
    let mut best = (f64::INFINITY, 2);
    for k in 2..=(n - 2).min(200) {
        let gap = ((-theory::lambda_strict(n, k + 1)?).exp() - 0.5).abs();
        if gap < best.0 {
            best = (gap, k);
        }
    }
    Ok(best.1)
}

pub fn trajectory(config: &TrajectoryConfig) -> Result<Trajectory> {
    let mut points = Vec::with_capacity(config.grid.len());
    for &n in &config.grid {
        let target = theory::target_length(n)?;
        let trials = config.schedule.trials_for(n);
        let seed = point_seed(config.seed, n);
        let report = run_trials(&TrialConfig {
            n: n as usize,
            ks: Vec::new(),
            trials,
            seed,
            workers: config.workers,
        })?;
        let law = &report.longest;
        let mean_l = law.mean();
        let var = law
            .counts
            .iter()
            .map(|(&v, &c)| (v as f64 - mean_l).powi(2) * c as f64)
            .sum::<f64>()
            / trials as f64;
        let window =
            theory::window_probability(n, config.x, config.delta_fn, config.theta_fn, config.mode)
                .ok();
        let coin = if config.coin {
            let emp = coin_trials(n as usize, 0.5, trials, seed ^ 0xC01D_C0FF_EE00_0001)?;
            let coin_target = theory::coin_target(n, 0.5)?;
            Some(CoinPoint {
                target: coin_target,
                mean: emp.mean(),
                ratio: emp.mean() / coin_target,
            })
        } else {
            None
        };
        points.push(TrajectoryPoint {
            n,
            target,
            trials,
            seed,
            mean_l,
            mean_l_stderr: (var / trials as f64).sqrt(),
            median_l: law.median(),
            ratio: mean_l / target,
            predicted_median: predicted_median(n)?,
            window_hit_rate: law.mass_between(target - config.x, target + config.x),
            window_prediction: window.map(|w| w.approx_prob),
            window_in_gamma: window.map(|w| w.in_window),
            coin,
        });
    }
    Ok(Trajectory {
        schedule: config.schedule,
        grid_rounding: "ceil",
        points,
    })
}
