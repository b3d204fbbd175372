//! Closed-form quantities for monotone blocks in random permutations.
//!
//! Everything involving factorials or binomials is evaluated through
//! `ln Γ`, so `k` well beyond 20 (where `k!` leaves `u64`) and `n` up to
//! `10^7` and beyond stay finite.

use std::f64::consts::{E, LN_2};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// `ln(x!)` via the gamma function; `x` may be non-integer.
pub fn ln_factorial(x: f64) -> f64 {
    libm::lgamma(x + 1.0)
}

/// `ln C(n, k)`, or `None` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> Option<f64> {
    (k <= n).then(|| ln_factorial(n as f64) - ln_factorial(k as f64) - ln_factorial((n - k) as f64))
}

fn check_strict_range(n: u64, k: u64) -> Result<()> {
    if k < 2 {
        Err(Error::WindowTooShort { k: k as usize })
    } else if k >= n {
        Err(Error::WindowExceedsSample {
            n: n as usize,
            k: k as usize + 1,
        })
    } else {
        Ok(())
    }
}

/// First-order growth of the longest block, `ln x / ln ln x`, at a real
/// argument `x >= e^e`.
pub fn target_length_at(x: f64) -> Result<f64> {
    let ln = x.ln();
    // tolerate the rounding in exp(e)
    if ln.is_nan() || ln < E * (1.0 - 1e-12) {
        return Err(Error::TargetUndefined {
            n: x.floor().max(0.0) as u64,
        });
    }
    Ok(ln / ln.ln())
}

/// `ln n / ln ln n`, defined for `n >= 16` (the first integer above `e^e`).
pub fn target_length(n: u64) -> Result<f64> {
    if n < 16 {
        return Err(Error::TargetUndefined { n });
    }
    target_length_at(n as f64)
}

/// Expected number of strict blocks, `λ = (n-k)·2k/(k+1)!`.
pub fn lambda_strict(n: u64, k: u64) -> Result<f64> {
    check_strict_range(n, k)?;
    let ln = LN_2 + ((n - k) as f64).ln() + (k as f64).ln() - ln_factorial((k + 1) as f64);
    Ok(ln.exp())
}

/// The large-`k`, `k = o(n)` form `2n/k!`.
pub fn lambda_asymptotic(n: u64, k: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::WindowTooShort { k: k as usize });
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    Ok((LN_2 + (n as f64).ln() - ln_factorial(k as f64)).exp())
}

/// `min((2k + 4k²)/(k+1)!, 6/(k-1)!)`: the part of the strict-block TV bound
/// that depends on `k` only. The first form is never larger for `k >= 1`.
pub fn tv_local_term(k: u64) -> f64 {
    let k_f = k as f64;
    let sharp = ((2.0 * k_f + 4.0 * k_f * k_f).ln() - ln_factorial(k_f + 1.0)).exp();
    let coarse = (6f64.ln() - ln_factorial(k_f - 1.0)).exp();
    sharp.min(coarse)
}

/// `2·C(n-k, k)/(n-k-1)!`, zero when `n - k < k`.
pub fn tail_term(n: u64, k: u64) -> f64 {
    match ln_binomial(n - k, k) {
        Some(ln_c) => (LN_2 + ln_c - ln_factorial((n - k - 1) as f64)).exp(),
        None => 0.0,
    }
}

/// Stein–Chen bound on `d_TV(L(M'(n,k)), Po(λ))`. Not capped at 1.
pub fn tv_bound_strict(n: u64, k: u64) -> Result<f64> {
    check_strict_range(n, k)?;
    Ok(tv_local_term(k) + tail_term(n, k))
}

/// `2/k!`, the probability that the first `k` positions are monotone. Bounds
/// `|P(M=0) - P(M'=0)|`.
pub fn switch_bound(k: u64) -> Result<f64> {
    if k < 2 {
        return Err(Error::WindowTooShort { k: k as usize });
    }
    Ok((LN_2 - ln_factorial(k as f64)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoidApprox {
    /// `exp(-λ)`.
    pub approx: f64,
    /// `8/(k-1)! + 2·C(n-k,k)/(n-k-1)!`.
    pub error_bound: f64,
}

/// Approximation of the void probability `P(M(n,k) = 0) = P(L <= k-1)`.
pub fn void_probability_approx(n: u64, k: u64) -> Result<VoidApprox> {
    let lambda = lambda_strict(n, k)?;
    let first = (8f64.ln() - ln_factorial((k - 1) as f64)).exp();
    Ok(VoidApprox {
        approx: (-lambda).exp(),
        error_bound: first + tail_term(n, k),
    })
}

/// The three Stein–Chen terms (divided by λ) for the *overlapping* count
/// `M(n,k)`. The third does not vanish, which is why the strict count is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NaiveBoundTerms {
    pub t1_over_lambda: f64,
    pub t2_over_lambda: f64,
    pub t3_over_lambda_bound: f64,
    /// The finite sum `4·Σ_{j=1}^{k-1} 1/j!` behind the third term; it
    /// increases to `4(e-1)`.
    pub t3_over_lambda_series: f64,
}

pub fn naive_terms(n: u64, k: u64) -> Result<NaiveBoundTerms> {
    if k < 2 {
        return Err(Error::WindowTooShort { k: k as usize });
    }
    if k > n {
        return Err(Error::WindowExceedsSample {
            n: n as usize,
            k: k as usize,
        });
    }
    let k_f = k as f64;
    let mut series = 0.0;
    let mut inv_fact = 1.0;
    for j in 1..k {
        inv_fact /= j as f64;
        series += inv_fact;
    }
    Ok(NaiveBoundTerms {
        t1_over_lambda: (LN_2 - ln_factorial(k_f)).exp(),
        t2_over_lambda: ((4.0 * k_f).ln() - ln_factorial(k_f)).exp(),
        t3_over_lambda_bound: 4.0 * (E - 1.0),
        t3_over_lambda_series: 4.0 * series,
    })
}

/// λ, its asymptotic form and every error bound for one `(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonApprox {
    pub n: u64,
    pub k: u64,
    pub lambda: f64,
    pub lambda_asym: f64,
    pub tv_bound: f64,
    pub void_prob: f64,
    pub void_error_bound: f64,
    pub switch_bound: f64,
}

impl PoissonApprox {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        let void = void_probability_approx(n, k)?;
        Ok(Self {
            n,
            k,
            lambda: lambda_strict(n, k)?,
            lambda_asym: lambda_asymptotic(n, k)?,
            tv_bound: tv_bound_strict(n, k)?,
            void_prob: void.approx,
            void_error_bound: void.error_bound,
            switch_bound: switch_bound(k)?,
        })
    }
}

/// A slowly divergent function of `n` used for the window endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `ln ln n`
    LnLn,
    /// `sqrt(ln n)`
    SqrtLn,
}

impl Schedule {
    pub fn eval(self, n: f64) -> f64 {
        match self {
            Schedule::LnLn => n.ln().ln(),
            Schedule::SqrtLn => n.ln().sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Schedule::LnLn => "ln_ln",
            Schedule::SqrtLn => "sqrt_ln",
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ln_ln" | "lnln" => Ok(Schedule::LnLn),
            "sqrt_ln" | "sqrtln" => Ok(Schedule::SqrtLn),
            _ => Err(Error::InvalidParameter(format!("unknown schedule '{s}'"))),
        }
    }
}

/// How `(t ± x)!` is evaluated for non-integer arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorialMode {
    /// `Γ(z + 1)`
    #[default]
    Gamma,
    /// Round `z` to the nearest integer first.
    Round,
}

impl FactorialMode {
    fn ln_factorial(self, z: f64) -> f64 {
        match self {
            FactorialMode::Gamma => ln_factorial(z),
            FactorialMode::Round => ln_factorial(z.round()),
        }
    }
}

impl FromStr for FactorialMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(FactorialMode::Gamma),
            "round" => Ok(FactorialMode::Round),
            _ => Err(Error::InvalidParameter(format!("unknown gamma mode '{s}'"))),
        }
    }
}

/// Distributional window for `|L_n - t(n)| <= x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowApprox {
    pub n: u64,
    pub x: f64,
    pub target: f64,
    pub alpha: f64,
    pub beta: f64,
    pub approx_prob: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    /// Whether `x` lies in `(gamma_lo, gamma_hi)`; outside it the
    /// approximation carries no guarantee.
    pub in_window: bool,
    pub delta_fn: Schedule,
    pub theta_fn: Schedule,
    pub mode: FactorialMode,
}

/// `alpha - beta` with `alpha = exp(-2n/(t+x)!)` and `beta = exp(-2n/(t-x)!)`,
/// `t = ln n / ln ln n`.
pub fn window_probability(
    n: u64,
    x: f64,
    delta_fn: Schedule,
    theta_fn: Schedule,
    mode: FactorialMode,
) -> Result<WindowApprox> {
    let target = target_length(n)?;
    let (k_plus, k_minus) = (target + x, target - x);
    if !(k_plus > 1.0 && k_minus > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window x={x} needs t(n) ± x > 1 (t(n) = {target:.4})"
        )));
    }
    let ln_2n = LN_2 + (n as f64).ln();
    let alpha = (-(ln_2n - mode.ln_factorial(k_plus)).exp()).exp();
    let beta = (-(ln_2n - mode.ln_factorial(k_minus)).exp()).exp();
    let gamma_lo = -target + delta_fn.eval(n as f64);
    let gamma_hi = target - theta_fn.eval(n as f64);
    Ok(WindowApprox {
        n,
        x,
        target,
        alpha,
        beta,
        approx_prob: alpha - beta,
        gamma_lo,
        gamma_hi,
        in_window: gamma_lo < x && x < gamma_hi,
        delta_fn,
        theta_fn,
        mode,
    })
}

/// `log_{1/p} n`, the longest-head-run growth rate for `p`-coins.
pub fn coin_target(n: u64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "coin target needs n >= 2, got {n}"
        )));
    }
    Ok((n as f64).ln() / (1.0 / p).ln())
}

/// Longest run of `true` (heads) in `bits`.
pub fn coin_longest_run(bits: &[bool]) -> Result<usize> {
    if bits.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut best, mut cur) = (0, 0);
    for &b in bits {
        cur = if b { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    Ok(best)
}

/// `P(Po(λ) = v)`, evaluated in log space.
pub fn poisson_pmf(lambda: f64, v: u64) -> f64 {
    if lambda == 0.0 {
        return if v == 0 { 1.0 } else { 0.0 };
    }
    let v_f = v as f64;
    (v_f * lambda.ln() - lambda - ln_factorial(v_f)).exp()
}

/// Half-sum total variation distance between a pmf on the non-negative
/// integers and `Po(λ)`. Values absent from `pmf` have probability zero;
/// Poisson mass beyond the largest listed value is folded in.
pub fn tv_to_poisson<I>(pmf: I, lambda: f64) -> f64
where
    I: IntoIterator<Item = (u64, f64)>,
{
    let mut dense: Vec<f64> = Vec::new();
    for (v, p) in pmf {
        let v = v as usize;
        if v >= dense.len() {
            dense.resize(v + 1, 0.0);
        }
        dense[v] += p;
    }
    let mut sum = 0.0;
    for (v, &p) in dense.iter().enumerate() {
        sum += (p - poisson_pmf(lambda, v as u64)).abs();
    }
    // upper Poisson tail, summed directly to avoid cancellation in 1 - cdf
    let mut v = dense.len() as u64;
    loop {
        let q = poisson_pmf(lambda, v);
        sum += q;
        if (v as f64) > lambda && q < 1e-18 {
            break;
        }
        v += 1;
    }
    0.5 * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(k: u64) -> u64 {
        (1..=k).product()
    }

    fn binomial(n: u64, k: u64) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn log_factorial_matches_integers() {
        for k in 0..=20 {
            let exact = factorial(k) as f64;
            assert!(rel(ln_factorial(k as f64).exp(), exact) < 1e-12, "k={k}");
        }
    }

    #[test]
    fn target_examples() {
        assert!((target_length_at(E.exp()).unwrap() - E).abs() < 1e-12);
        assert!((target_length(10_000).unwrap() - 4.1482).abs() < 1e-4);
        assert!((target_length(10_000_000).unwrap() - 5.798).abs() < 1e-3);
        assert_eq!(target_length(15), Err(Error::TargetUndefined { n: 15 }));
        assert!(target_length(16).is_ok());
    }

    #[test]
    fn lambda_examples() {
        assert!(rel(lambda_strict(20, 4).unwrap(), 16.0 * 8.0 / 120.0) < 1e-14);
        for k in 2..=15u64 {
            let expect = 2.0 * k as f64 / factorial(k + 1) as f64;
            assert!(rel(lambda_strict(k + 1, k).unwrap(), expect) < 1e-13);
        }
        assert!(
            rel(
                lambda_strict(10_000, 9).unwrap(),
                9991.0 * 18.0 / 3_628_800.0
            ) < 1e-13
        );
        assert!((lambda_strict(10_000, 9).unwrap() - 0.049557).abs() < 2e-6);
        assert!(lambda_strict(5, 5).is_err());
        assert!(lambda_strict(5, 1).is_err());
        // large k does not overflow
        let l = lambda_strict(10_000_000, 40).unwrap();
        assert!(l.is_finite() && l > 0.0);
    }

    #[test]
    fn lambda_asymptotic_examples() {
        assert!((lambda_asymptotic(10_000, 9).unwrap() - 20_000.0 / 362_880.0).abs() < 1e-12);
        assert!((lambda_asymptotic(10, 2).unwrap() - 10.0).abs() < 1e-12);
        let ratio =
            lambda_strict(1_000_000, 15).unwrap() / lambda_asymptotic(1_000_000, 15).unwrap();
        assert!(ratio > 0.9 && ratio < 1.0);
        assert!(rel(ratio, (1.0 - 15.0 / 1e6) * 15.0 / 16.0) < 1e-12);
        // ratio approaches 1 when k grows slowly with n
        let mut last = 0.0;
        for (n, k) in [
            (1e3 as u64, 5),
            (1e5 as u64, 10),
            (1e7 as u64, 20),
            (1e9 as u64, 40),
        ] {
            let r = lambda_strict(n, k).unwrap() / lambda_asymptotic(n, k).unwrap();
            assert!(r > last);
            last = r;
        }
        assert!(last > 0.97);
    }

    #[test]
    fn tv_bound_examples() {
        assert!((tv_local_term(6) - 156.0 / 5040.0).abs() < 1e-15);
        assert!(tail_term(50, 6) < 1e-30);
        assert!((tv_bound_strict(50, 6).unwrap() - 0.03095).abs() < 1e-5);
        assert!((tv_local_term(3) - 1.75).abs() < 1e-14);
        let b = tv_bound_strict(7, 3).unwrap();
        assert!((b - (1.75 + 2.0 * 4.0 / 6.0)).abs() < 1e-12);
        assert_eq!(tail_term(8, 5), 0.0);
        for n in 3..60u64 {
            for k in 2..n {
                let expect = 2.0 * binomial(n - k, k) / factorial((n - k - 1).min(20)) as f64;
                if n - k - 1 <= 20 {
                    let got = tail_term(n, k);
                    assert!(
                        (got - expect).abs() <= 1e-12 * expect.max(1e-300),
                        "n={n} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn sharp_local_term_never_exceeds_coarse() {
        for k in 2..100u64 {
            let k_f = k as f64;
            let sharp = ((2.0 * k_f + 4.0 * k_f * k_f).ln() - ln_factorial(k_f + 1.0)).exp();
            let coarse = (6f64.ln() - ln_factorial(k_f - 1.0)).exp();
            assert!(sharp <= coarse);
            assert_eq!(tv_local_term(k), sharp);
        }
    }

    #[test]
    fn switch_bound_examples() {
        assert!((switch_bound(4).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!((switch_bound(2).unwrap() - 1.0).abs() < 1e-15);
        assert!((switch_bound(10).unwrap() - 2.0 / 3_628_800.0).abs() < 1e-20);
        assert!(switch_bound(1).is_err());
    }

    #[test]
    fn void_examples() {
        let v = void_probability_approx(10_000, 9).unwrap();
        assert!((v.approx - 0.95165).abs() < 1e-5);
        assert!((v.error_bound - 8.0 / 40_320.0).abs() < 1e-12);
        let v = void_probability_approx(8, 5).unwrap();
        assert!((v.approx - (-1.0f64 / 24.0).exp()).abs() < 1e-15);
        assert!((v.error_bound - 8.0 / 24.0).abs() < 1e-14);
    }

    #[test]
    fn first_void_error_term_dominates_when_n_at_least_3k() {
        for k in 2..40u64 {
            for n in [3 * k, 3 * k + 1, 4 * k, 10 * k, 100 * k, 100_000] {
                if n < 3 * k {
                    continue;
                }
                let first = (8f64.ln() - ln_factorial((k - 1) as f64)).exp();
                let second = tail_term(n, k) / 2.0;
                assert!(first >= second, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn naive_terms_examples() {
        let t = naive_terms(10, 5).unwrap();
        assert!((t.t1_over_lambda - 2.0 / 120.0).abs() < 1e-15);
        assert!((t.t2_over_lambda - 20.0 / 120.0).abs() < 1e-15);
        assert!((t.t3_over_lambda_bound - 6.873).abs() < 1e-3);
        let big = naive_terms(1000, 60).unwrap();
        assert!(big.t1_over_lambda < 1e-80 && big.t2_over_lambda < 1e-78);
        assert!((big.t3_over_lambda_series - 4.0 * (E - 1.0)).abs() < 1e-12);
        assert!(naive_terms(4, 5).is_err());
    }

    #[test]
    fn window_examples() {
        let w = window_probability(
            10_000,
            0.0,
            Schedule::LnLn,
            Schedule::LnLn,
            FactorialMode::Gamma,
        )
        .unwrap();
        assert_eq!(w.alpha, w.beta);
        assert_eq!(w.approx_prob, 0.0);
        let w = window_probability(
            10_000,
            2.0,
            Schedule::LnLn,
            Schedule::LnLn,
            FactorialMode::Gamma,
        )
        .unwrap();
        // beta = exp(-2n/Γ(3.15)) ≈ exp(-8700) underflows to zero
        assert!(w.alpha > 0.0 && w.alpha < 1.0 && w.beta >= 0.0 && w.beta < 1.0);
        assert!(w.alpha > w.beta);
        // t(10^4) - ln ln 10^4 ≈ 1.93, so x = 2 already lies outside the window
        assert!(!w.in_window);
        assert!(
            window_probability(
                10_000,
                1.0,
                Schedule::LnLn,
                Schedule::LnLn,
                FactorialMode::Gamma
            )
            .unwrap()
            .in_window
        );
        let w = window_probability(
            10_000,
            3.0,
            Schedule::LnLn,
            Schedule::LnLn,
            FactorialMode::Round,
        )
        .unwrap();
        assert!(!w.in_window);
        assert!(window_probability(
            10_000,
            3.5,
            Schedule::LnLn,
            Schedule::LnLn,
            FactorialMode::Gamma
        )
        .is_err());
        for n in [16u64, 100, 1_000_000] {
            for mode in [FactorialMode::Gamma, FactorialMode::Round] {
                let w = window_probability(n, 0.0, Schedule::SqrtLn, Schedule::LnLn, mode).unwrap();
                assert_eq!(w.approx_prob, 0.0);
            }
        }
    }

    #[test]
    fn poisson_tv_basics() {
        let lambda = 1.3;
        let exact: Vec<(u64, f64)> = (0..60).map(|v| (v, poisson_pmf(lambda, v))).collect();
        assert!(tv_to_poisson(exact, lambda) < 1e-12);
        // a point mass at 0 is exp(-λ) away from losing everything else
        let tv = tv_to_poisson([(0, 1.0)], lambda);
        assert!((tv - (1.0 - (-lambda).exp())).abs() < 1e-12);
        let total: f64 = (0..80).map(|v| poisson_pmf(7.5, v)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coin_examples() {
        assert!((coin_target(1024, 0.5).unwrap() - 10.0).abs() < 1e-12);
        let hhthhht = [true, true, false, true, true, true, false];
        assert_eq!(coin_longest_run(&hhthhht).unwrap(), 3);
        assert_eq!(coin_longest_run(&[false; 8]).unwrap(), 0);
        assert_eq!(coin_longest_run(&[]), Err(Error::EmptyInput));
        assert_eq!(coin_target(10, 1.0), Err(Error::InvalidProbability(1.0)));
        assert_eq!(coin_target(10, 0.0), Err(Error::InvalidProbability(0.0)));
    }
}
