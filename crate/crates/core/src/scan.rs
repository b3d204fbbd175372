//! Single-pass scanners over the ascent/descent stream of a permutation.
//!
//! A permutation decomposes into maximal monotone runs. Consecutive runs
//! alternate in direction and share their turning point, so every statistic
//! here (longest block `L`, overlapping window count `M(n,k)` and strict block
//! count `M'(n,k)`) is a fold over that run sequence:
//!
//! * `L` is the longest run,
//! * `M(n,k)` adds `len - k + 1` for every run of length at least `k`,
//! * `M'(n,k)` counts runs of length at least `k` that do not start at
//!   position 1. Such a run is preceded by the turning point that breaks
//!   its monotonicity, which is exactly the strict-block condition.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A permutation of `1..=n` stored as its rank sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PermutationSample {
    ranks: Vec<u32>,
}

impl PermutationSample {
    /// Validates that `ranks` is a bijection onto `1..=n`.
    pub fn new(ranks: Vec<u32>) -> Result<Self> {
        let n = ranks.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut seen = vec![false; n];
        for (i, &r) in ranks.iter().enumerate() {
            if r == 0 || r as usize > n {
                return Err(Error::InvalidPermutation {
                    n,
                    reason: format!("value {r} at position {} is outside 1..={n}", i + 1),
                });
            }
            let slot = &mut seen[r as usize - 1];
            if *slot {
                return Err(Error::InvalidPermutation {
                    n,
                    reason: format!("value {r} appears more than once"),
                });
            }
            *slot = true;
        }
        Ok(Self { ranks })
    }

    pub(crate) fn from_ranks_unchecked(ranks: Vec<u32>) -> Self {
        debug_assert!(Self::new(ranks.clone()).is_ok());
        Self { ranks }
    }

    /// The identity permutation `1, 2, ..., n`.
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            ranks: (1..=n as u32).collect(),
        })
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Maps every value `x` to `n + 1 - x`, which swaps ascents and descents.
    pub fn complement(&self) -> Self {
        let n = self.ranks.len() as u32;
        Self {
            ranks: self.ranks.iter().map(|&x| n + 1 - x).collect(),
        }
    }

    pub fn into_ranks(self) -> Vec<u32> {
        self.ranks
    }
}

impl AsRef<[u32]> for PermutationSample {
    fn as_ref(&self) -> &[u32] {
        &self.ranks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Increasing => Direction::Decreasing,
            Direction::Decreasing => Direction::Increasing,
        }
    }

    fn of_step<T: Ord>(a: &T, b: &T) -> Self {
        if a < b {
            Direction::Increasing
        } else {
            Direction::Decreasing
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Increasing => "inc",
            Direction::Decreasing => "dec",
        })
    }
}

/// Which block statistic a distribution describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Statistic {
    /// Longest monotone block `L`.
    #[serde(rename = "L")]
    Longest,
    /// Overlapping monotone windows `M(n,k)`.
    #[serde(rename = "M")]
    Windows,
    /// Strict blocks `M'(n,k)`.
    #[serde(rename = "M_strict")]
    Strict,
    /// Longest head run of a coin-toss sequence (comparison baseline).
    #[serde(rename = "H")]
    HeadRun,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Longest => "L",
            Statistic::Windows => "M",
            Statistic::Strict => "M_strict",
            Statistic::HeadRun => "H",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "longest" => Ok(Statistic::Longest),
            "M" | "windows" => Ok(Statistic::Windows),
            "M_strict" | "M'" | "strict" => Ok(Statistic::Strict),
            _ => Err(Error::InvalidParameter(format!(
                "unknown statistic '{s}' (expected L, M or M_strict)"
            ))),
        }
    }
}

/// A maximal monotone run. `start` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Run {
    pub start: usize,
    pub len: usize,
    pub direction: Direction,
}

impl Run {
    /// Last position covered by the run (1-based, inclusive).
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }

    /// Number of monotone windows of length `k` lying inside this run.
    #[inline]
    pub fn windows(&self, k: usize) -> usize {
        (self.len + 1).saturating_sub(k)
    }

    /// Whether this run contributes a strict block of length `k`.
    #[inline]
    pub fn is_strict(&self, k: usize) -> bool {
        self.start >= 2 && self.len >= k
    }
}

/// Iterator over the maximal monotone runs of a slice of distinct values.
///
/// Memory use is constant; the slice is read once from left to right.
#[derive(Debug, Clone)]
pub struct Runs<'a, T> {
    values: &'a [T],
    pos: usize,
}

impl<'a, T: Ord> Runs<'a, T> {
    pub fn new(values: &'a [T]) -> Self {
        Self { values, pos: 0 }
    }
}

impl<T: Ord> Iterator for Runs<'_, T> {
    type Item = Run;

    fn next(&mut self) -> Option<Run> {
        let v = self.values;
        let start = self.pos;
        if start + 1 >= v.len() {
            return None;
        }
        let direction = Direction::of_step(&v[start], &v[start + 1]);
        let mut end = start + 1;
        while end + 1 < v.len() && Direction::of_step(&v[end], &v[end + 1]) == direction {
            end += 1;
        }
        self.pos = end;
        Some(Run {
            start: start + 1,
            len: end - start + 1,
            direction,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunProfile {
    pub n: usize,
    pub runs: Vec<Run>,
}

impl RunProfile {
    pub fn longest(&self) -> usize {
        self.runs.iter().map(|r| r.len).max().unwrap_or(1)
    }
}

/// Window and strict-block counts for one window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowCounts {
    pub k: usize,
    pub windows: u64,
    pub strict: u64,
}

/// Everything one pass over a sample yields for a set of window lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanSummary {
    pub n: usize,
    pub longest: usize,
    pub counts: Vec<WindowCounts>,
}

/// Scans `values` once, computing `L` and, for every `k` in `ks`, both
/// `M(n,k)` and `M'(n,k)`.
///
/// Window lengths are not validated here; a `k` that does not fit simply
/// yields zero counts. The checked entry points below enforce ranges.
pub fn scan_summary<T: Ord>(values: &[T], ks: &[usize]) -> ScanSummary {
    let mut counts: Vec<WindowCounts> = ks
        .iter()
        .map(|&k| WindowCounts {
            k,
            windows: 0,
            strict: 0,
        })
        .collect();
    let mut longest = values.len().min(1);
    for run in Runs::new(values) {
        longest = longest.max(run.len);
        for c in counts.iter_mut() {
            c.windows += run.windows(c.k) as u64;
            c.strict += u64::from(run.is_strict(c.k));
        }
    }
    ScanSummary {
        n: values.len(),
        longest,
        counts,
    }
}

fn check_window(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::WindowTooShort { k })
    } else if k > n {
        Err(Error::WindowExceedsSample { n, k })
    } else {
        Ok(())
    }
}

fn check_strict_window(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::WindowTooShort { k })
    } else if k >= n {
        // a strict block spans k + 1 positions
        Err(Error::WindowExceedsSample { n, k: k + 1 })
    } else {
        Ok(())
    }
}

pub fn maximal_run_profile(sample: &PermutationSample) -> Result<RunProfile> {
    if sample.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(RunProfile {
        n: sample.len(),
        runs: Runs::new(sample.ranks()).collect(),
    })
}

/// Length of the longest consecutive monotone block; 1 when `n = 1`.
pub fn longest_monotone_block(sample: &PermutationSample) -> Result<usize> {
    if sample.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Runs::new(sample.ranks()).map(|r| r.len).max().unwrap_or(1))
}

/// `M(n,k)`: number of start positions `j` with `j..j+k-1` monotone.
pub fn count_monotone_windows(sample: &PermutationSample, k: usize) -> Result<usize> {
    check_window(sample.len(), k)?;
    Ok(Runs::new(sample.ranks()).map(|r| r.windows(k)).sum())
}

/// `M'(n,k)`: number of `j` in `1..=n-k` such that `j+1..j+k` is monotone and
/// `π_j` does not extend it.
pub fn count_strict_blocks(sample: &PermutationSample, k: usize) -> Result<usize> {
    check_strict_window(sample.len(), k)?;
    Ok(Runs::new(sample.ranks()).filter(|r| r.is_strict(k)).count())
}

/// A strict block occupying positions `start..=start+k` (1-based); the
/// monotone part is `start+1..=start+k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StrictBlock {
    pub start: usize,
    pub direction: Direction,
}

impl StrictBlock {
    /// Positions shared by the `k+1`-spans of two strict blocks.
    pub fn shared_positions(&self, other: &StrictBlock, k: usize) -> usize {
        let (a, b) = if self.start <= other.start {
            (self.start, other.start)
        } else {
            (other.start, self.start)
        };
        (a + k + 1).saturating_sub(b)
    }
}

pub fn strict_block_positions(sample: &PermutationSample, k: usize) -> Result<Vec<StrictBlock>> {
    check_strict_window(sample.len(), k)?;
    Ok(Runs::new(sample.ranks())
        .filter(|r| r.is_strict(k))
        .map(|r| StrictBlock {
            start: r.start - 1,
            direction: r.direction,
        })
        .collect())
}

/// `(n, k, M, M', L)` for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockCountReport {
    pub n: usize,
    pub k: usize,
    pub windows: u64,
    pub strict: u64,
    pub longest: usize,
}

/// Builds one report per `k` from a single pass. Every `k` must satisfy
/// `2 <= k <= n - 1`.
pub fn block_count_reports(
    sample: &PermutationSample,
    ks: &[usize],
) -> Result<Vec<BlockCountReport>> {
    for &k in ks {
        check_strict_window(sample.len(), k)?;
    }
    let summary = scan_summary(sample.ranks(), ks);
    Ok(summary
        .counts
        .iter()
        .map(|c| BlockCountReport {
            n: summary.n,
            k: c.k,
            windows: c.windows,
            strict: c.strict,
            longest: summary.longest,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TWENTY: [u32; 20] = [
        4, 7, 9, 11, 17, 20, 18, 16, 10, 12, 13, 15, 2, 3, 5, 6, 1, 19, 14, 8,
    ];

    fn perm(v: &[u32]) -> PermutationSample {
        PermutationSample::new(v.to_vec()).unwrap()
    }

    fn is_monotone(w: &[u32], d: Direction) -> bool {
        w.windows(2).all(|p| Direction::of_step(&p[0], &p[1]) == d)
    }

    // Direct window re-check, independent of the run decomposition.
    fn naive_windows(v: &[u32], k: usize) -> usize {
        (0..=v.len() - k)
            .filter(|&j| {
                let w = &v[j..j + k];
                is_monotone(w, Direction::Increasing) || is_monotone(w, Direction::Decreasing)
            })
            .count()
    }

    fn naive_strict(v: &[u32], k: usize) -> Vec<StrictBlock> {
        let mut out = Vec::new();
        for j in 0..v.len() - k {
            let body = &v[j + 1..j + 1 + k];
            for d in [Direction::Increasing, Direction::Decreasing] {
                if is_monotone(body, d) && Direction::of_step(&v[j], &v[j + 1]) != d {
                    out.push(StrictBlock {
                        start: j + 1,
                        direction: d,
                    });
                }
            }
        }
        out
    }

    fn naive_longest(v: &[u32]) -> usize {
        (1..=v.len())
            .rev()
            .find(|&k| k == 1 || naive_windows(v, k) > 0)
            .unwrap()
    }

    fn all_permutations(n: usize) -> Vec<Vec<u32>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n as u32);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn rejects_invalid_samples() {
        assert_eq!(PermutationSample::new(vec![]), Err(Error::EmptyInput));
        assert!(matches!(
            PermutationSample::new(vec![1, 1, 2]),
            Err(Error::InvalidPermutation { .. })
        ));
        assert!(matches!(
            PermutationSample::new(vec![0, 1]),
            Err(Error::InvalidPermutation { .. })
        ));
        assert!(matches!(
            PermutationSample::new(vec![1, 3]),
            Err(Error::InvalidPermutation { .. })
        ));
    }

    #[test]
    fn profile_small_cases() {
        let p = maximal_run_profile(&perm(&[1, 2, 3, 4])).unwrap();
        assert_eq!(
            p.runs,
            vec![Run {
                start: 1,
                len: 4,
                direction: Direction::Increasing
            }]
        );
        let p = maximal_run_profile(&perm(&[2, 1, 3])).unwrap();
        assert_eq!(
            p.runs,
            vec![
                Run {
                    start: 1,
                    len: 2,
                    direction: Direction::Decreasing
                },
                Run {
                    start: 2,
                    len: 2,
                    direction: Direction::Increasing
                },
            ]
        );
        assert!(maximal_run_profile(&perm(&[1])).unwrap().runs.is_empty());
    }

    #[test]
    fn profile_of_worked_example() {
        use Direction::*;
        let p = maximal_run_profile(&perm(&TWENTY)).unwrap();
        let got: Vec<_> = p
            .runs
            .iter()
            .map(|r| (r.start, r.len, r.direction))
            .collect();
        assert_eq!(
            got,
            vec![
                (1, 6, Increasing),
                (6, 4, Decreasing),
                (9, 4, Increasing),
                (12, 2, Decreasing),
                (13, 4, Increasing),
                (16, 2, Decreasing),
                (17, 2, Increasing),
                (18, 3, Decreasing),
            ]
        );
    }

    #[test]
    fn longest_block_examples() {
        assert_eq!(longest_monotone_block(&perm(&[5, 4, 3, 2, 1])).unwrap(), 5);
        assert_eq!(longest_monotone_block(&perm(&[2, 1, 3])).unwrap(), 2);
        assert_eq!(longest_monotone_block(&perm(&TWENTY)).unwrap(), 6);
        assert_eq!(longest_monotone_block(&perm(&[1])).unwrap(), 1);
    }

    #[test]
    fn window_counts_examples() {
        assert_eq!(count_monotone_windows(&perm(&TWENTY), 4).unwrap(), 6);
        let id = PermutationSample::identity(9).unwrap();
        for k in 2..=9 {
            assert_eq!(count_monotone_windows(&id, k).unwrap(), 9 - k + 1);
        }
        assert_eq!(count_monotone_windows(&perm(&[2, 4, 1, 3]), 3).unwrap(), 0);
        assert_eq!(
            count_monotone_windows(&perm(&[1, 2, 3]), 4),
            Err(Error::WindowExceedsSample { n: 3, k: 4 })
        );
        assert_eq!(
            count_monotone_windows(&perm(&[1, 2, 3]), 1),
            Err(Error::WindowTooShort { k: 1 })
        );
    }

    #[test]
    fn strict_counts_examples() {
        assert_eq!(count_strict_blocks(&perm(&TWENTY), 4).unwrap(), 3);
        let id = PermutationSample::identity(9).unwrap();
        for k in 2..=8 {
            assert_eq!(count_strict_blocks(&id, k).unwrap(), 0);
        }
        assert_eq!(count_strict_blocks(&perm(&[3, 1, 2, 4, 5]), 3).unwrap(), 1);
        assert!(count_strict_blocks(&perm(&[1, 2, 3]), 3).is_err());
        assert!(count_strict_blocks(&perm(&[1, 2, 3]), 1).is_err());
    }

    #[test]
    fn strict_positions_of_worked_example() {
        let blocks = strict_block_positions(&perm(&TWENTY), 4).unwrap();
        let spans: Vec<Vec<u32>> = blocks
            .iter()
            .map(|b| TWENTY[b.start - 1..b.start + 4].to_vec())
            .collect();
        assert_eq!(
            spans,
            vec![
                vec![17, 20, 18, 16, 10],
                vec![16, 10, 12, 13, 15],
                vec![15, 2, 3, 5, 6],
            ]
        );
        assert!(
            strict_block_positions(&PermutationSample::identity(10).unwrap(), 4)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn scanners_match_naive_windows_for_small_n() {
        for n in 1..=8 {
            for v in all_permutations(n) {
                let s = perm(&v);
                assert_eq!(longest_monotone_block(&s).unwrap(), naive_longest(&v));
                for k in 2..=n {
                    assert_eq!(count_monotone_windows(&s, k).unwrap(), naive_windows(&v, k));
                }
                for k in 2..n {
                    assert_eq!(
                        strict_block_positions(&s, k).unwrap(),
                        naive_strict(&v, k),
                        "{v:?} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn reports_share_one_pass() {
        let r = block_count_reports(&PermutationSample::identity(5).unwrap(), &[3]).unwrap();
        assert_eq!(
            r,
            vec![BlockCountReport {
                n: 5,
                k: 3,
                windows: 3,
                strict: 0,
                longest: 5
            }]
        );
    }

    fn arb_permutation(max_n: usize) -> impl Strategy<Value = PermutationSample> {
        (1..=max_n)
            .prop_flat_map(|n| Just((1..=n as u32).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|v| PermutationSample::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn duality_between_longest_and_windows(s in arb_permutation(60)) {
            let l = longest_monotone_block(&s).unwrap();
            for r in 2..=s.len() {
                let m = count_monotone_windows(&s, r).unwrap();
                prop_assert_eq!(l < r, m == 0);
            }
        }

        #[test]
        fn windows_dominate_strict(s in arb_permutation(60)) {
            for k in 2..s.len() {
                prop_assert!(count_monotone_windows(&s, k).unwrap() >= count_strict_blocks(&s, k).unwrap());
            }
        }

        #[test]
        fn profile_invariants(s in arb_permutation(60)) {
            let p = maximal_run_profile(&s).unwrap();
            let n = s.len();
            if n == 1 {
                prop_assert!(p.runs.is_empty());
            } else {
                prop_assert_eq!(p.runs[0].start, 1);
                prop_assert_eq!(p.runs.last().unwrap().end(), n);
            }
            let v = s.ranks();
            for w in p.runs.windows(2) {
                prop_assert_eq!(w[0].end(), w[1].start);
                prop_assert_eq!(w[0].direction.flipped(), w[1].direction);
            }
            for r in &p.runs {
                prop_assert!(r.len >= 2);
                prop_assert!(is_monotone(&v[r.start - 1..r.end()], r.direction));
            }
            for k in 2..=n {
                let total: usize = p.runs.iter().map(|r| r.windows(k)).sum();
                prop_assert_eq!(total, naive_windows(v, k));
            }
        }

        #[test]
        fn complement_swaps_directions(s in arb_permutation(60)) {
            let c = s.complement();
            let p = maximal_run_profile(&s).unwrap();
            let q = maximal_run_profile(&c).unwrap();
            prop_assert_eq!(p.runs.len(), q.runs.len());
            for (a, b) in p.runs.iter().zip(&q.runs) {
                prop_assert_eq!((a.start, a.len), (b.start, b.len));
                prop_assert_eq!(a.direction.flipped(), b.direction);
            }
            let ks: Vec<usize> = (2..s.len()).collect();
            let a = scan_summary(s.ranks(), &ks);
            let b = scan_summary(c.ranks(), &ks);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn strict_blocks_share_at_most_two_positions(s in arb_permutation(60), k in 4usize..8) {
            prop_assume!(k < s.len());
            let blocks = strict_block_positions(&s, k).unwrap();
            for (i, a) in blocks.iter().enumerate() {
                for b in &blocks[i + 1..] {
                    prop_assert!(a.shared_positions(b, k) <= 2);
                }
            }
        }
    }
}
