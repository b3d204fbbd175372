//! Exhaustive enumeration of `S_n` for small `n`.
//!
//! Every permutation is scanned once and the laws of `L`, `M(n,k)` and
//! `M'(n,k)` (for every admissible `k`) are tallied together. The work is
//! sharded by the first element; shards merge by count addition.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scan::{scan_summary, Statistic};
use crate::theory;

/// Largest `n` enumerated unless the caller raises the cap.
pub const DEFAULT_ENUMERATION_CAP: usize = 10;

/// Counts are tallied in `u64`; `20!` is the last factorial that fits.
pub const MAX_ENUMERATION_CAP: usize = 20;

/// Exact law of one statistic over all `n!` permutations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPmf {
    pub n: usize,
    pub k: Option<usize>,
    pub statistic: Statistic,
    pub weights: BTreeMap<u64, BigUint>,
    pub total: BigUint,
}

impl ExactPmf {
    pub fn weight(&self, v: u64) -> BigUint {
        self.weights.get(&v).cloned().unwrap_or_default()
    }

    /// Total weight of values `<= v`.
    pub fn weight_at_most(&self, v: u64) -> BigUint {
        self.weights.range(..=v).map(|(_, w)| w).sum()
    }

    pub fn probability(&self, v: u64) -> BigRational {
        ratio(&self.weight(v), &self.total)
    }

    pub fn void_probability(&self) -> BigRational {
        self.probability(0)
    }

    pub fn mean(&self) -> BigRational {
        let num: BigUint = self
            .weights
            .iter()
            .map(|(&v, w)| w * BigUint::from(v))
            .sum();
        ratio(&num, &self.total)
    }

    /// Probabilities as floats, for comparison against real-valued laws.
    pub fn to_f64(&self) -> Vec<(u64, f64)> {
        self.weights
            .keys()
            .map(|&v| (v, to_f64(&self.probability(v))))
            .collect()
    }
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// Closest `f64` to an exact rational.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `λ = (n-k)·2k/(k+1)!` as an exact rational.
pub fn lambda_strict_exact(n: usize, k: usize) -> Result<BigRational> {
    if k < 2 {
        return Err(Error::WindowTooShort { k });
    }
    if k >= n {
        return Err(Error::WindowExceedsSample { n, k: k + 1 });
    }
    let fact: BigUint = (1..=k as u64 + 1).map(BigUint::from).product();
    let num = BigUint::from((n - k) as u64 * 2 * k as u64);
    Ok(ratio(&num, &fact))
}

/// Laws of `L` and, for every admissible `k`, of `M(n,k)` and `M'(n,k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactLaws {
    n: usize,
    total: u64,
    // dense histograms indexed by value
    longest: Vec<u64>,
    // k = 2..=n
    windows: Vec<Vec<u64>>,
    // k = 2..=n-1
    strict: Vec<Vec<u64>>,
}

impl ExactLaws {
    /// Enumerates `S_n` with the default cap.
    pub fn enumerate(n: usize) -> Result<Self> {
        Self::enumerate_capped(n, DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_capped(n: usize, cap: usize) -> Result<Self> {
        let cap = cap.min(MAX_ENUMERATION_CAP);
        if n > cap {
            return Err(Error::EnumerationCapExceeded { n, cap });
        }
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok((1..=n as u32)
            .into_par_iter()
            .map(|first| Self::shard(n, first))
            .reduce(|| Self::empty(n), Self::merge))
    }

    fn empty(n: usize) -> Self {
        Self {
            n,
            total: 0,
            longest: vec![0; n + 1],
            windows: (2..=n).map(|_| vec![0; n + 1]).collect(),
            strict: (2..n).map(|_| vec![0; n + 1]).collect(),
        }
    }

    /// All permutations starting with `first`, in lexicographic order.
    fn shard(n: usize, first: u32) -> Self {
        let mut laws = Self::empty(n);
        let ks: Vec<usize> = (2..=n).collect();
        let mut perm: Vec<u32> = std::iter::once(first)
            .chain((1..=n as u32).filter(|&v| v != first))
            .collect();
        loop {
            let s = scan_summary(&perm, &ks);
            laws.total += 1;
            laws.longest[s.longest] += 1;
            for c in &s.counts {
                laws.windows[c.k - 2][c.windows as usize] += 1;
                if c.k < n {
                    laws.strict[c.k - 2][c.strict as usize] += 1;
                }
            }
            if !next_permutation(&mut perm[1..]) {
                break;
            }
        }
        laws
    }

    fn merge(mut self, other: Self) -> Self {
        fn add(a: &mut [u64], b: &[u64]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.total += other.total;
        add(&mut self.longest, &other.longest);
        for (a, b) in self.windows.iter_mut().zip(&other.windows) {
            add(a, b);
        }
        for (a, b) in self.strict.iter_mut().zip(&other.strict) {
            add(a, b);
        }
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Law of `statistic`; `k` is ignored for `L`.
    pub fn pmf(&self, statistic: Statistic, k: usize) -> Result<ExactPmf> {
        let n = self.n;
        let (hist, k) = match statistic {
            Statistic::HeadRun => {
                return Err(Error::InvalidParameter(
                    "coin statistics are not enumerated".into(),
                ))
            }
            Statistic::Longest => (&self.longest, None),
            Statistic::Windows => {
                if k < 2 {
                    return Err(Error::WindowTooShort { k });
                }
                if k > n {
                    return Err(Error::WindowExceedsSample { n, k });
                }
                (&self.windows[k - 2], Some(k))
            }
            Statistic::Strict => {
                if k < 2 {
                    return Err(Error::WindowTooShort { k });
                }
                if k >= n {
                    return Err(Error::WindowExceedsSample { n, k: k + 1 });
                }
                (&self.strict[k - 2], Some(k))
            }
        };
        Ok(ExactPmf {
            n,
            k,
            statistic,
            weights: hist
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(v, &c)| (v as u64, BigUint::from(c)))
                .collect(),
            total: BigUint::from(self.total),
        })
    }
}

/// Rearranges `v` into its lexicographic successor; returns `false` (leaving
/// `v` sorted ascending) after the last permutation.
pub fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        v.reverse();
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[i] < v[j]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

pub fn enumerate_distribution(n: usize, k: usize, statistic: Statistic) -> Result<ExactPmf> {
    enumerate_distribution_capped(n, k, statistic, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_distribution_capped(
    n: usize,
    k: usize,
    statistic: Statistic,
    cap: usize,
) -> Result<ExactPmf> {
    ExactLaws::enumerate_capped(n, cap)?.pmf(statistic, k)
}

/// `P(M(n,k) = 0)` or `P(M'(n,k) = 0)` as an exact rational.
pub fn exact_void_probability(n: usize, k: usize, statistic: Statistic) -> Result<BigRational> {
    if !matches!(statistic, Statistic::Windows | Statistic::Strict) {
        return Err(Error::InvalidParameter(
            "void probability is defined for M and M_strict only".into(),
        ));
    }
    Ok(enumerate_distribution(n, k, statistic)?.void_probability())
}

/// `d_TV(L(M'(n,k)), Po(λ))` from an already enumerated law.
pub fn tv_to_poisson_strict(laws: &ExactLaws, k: usize) -> Result<f64> {
    let pmf = laws.pmf(Statistic::Strict, k)?;
    let lambda = theory::lambda_strict(laws.n() as u64, k as u64)?;
    Ok(theory::tv_to_poisson(pmf.to_f64(), lambda))
}

pub fn exact_tv_to_poisson(n: usize, k: usize) -> Result<f64> {
    // reject bad k before paying for the enumeration
    theory::lambda_strict(n as u64, k as u64)?;
    tv_to_poisson_strict(&ExactLaws::enumerate(n)?, k)
}
