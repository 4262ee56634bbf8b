//! Exact checkers for list-decoding, average-radius list-decoding and
//! list-recovery from erasures.
//!
//! Center searches use translation invariance: the statistic at `z` equals the
//! statistic at `z + c` for every codeword `c`, so it is enough to visit the
//! `q^(n-k)` words supported off the pivot columns of the generator's RREF.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{hamming_distance, pack_binary, rng_for, CodeError, LinearCode};
use crate::gf::Elem;
use crate::linalg::vector_from_index;

/// Default cap on the number of centers visited.
pub const DEFAULT_CENTER_CAP: u128 = 1 << 24;
/// Default cap on `C(|C|, L)` for the list-recovery search.
pub const DEFAULT_SUBSET_CAP: u128 = 10_000_000_000;
/// Default cap on centers times codewords in a sweep.
pub const DEFAULT_WORK_CAP: u128 = 1 << 36;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("{what}: {count} exceeds the cap of {cap}; sampled centers give only a lower bound")]
    TooLarge { what: &'static str, count: u128, cap: u128 },
    #[error("list size {l} exceeds the code size {size}")]
    ListLargerThanCode { l: usize, size: u128 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Clone, Copy, Debug)]
pub struct Caps {
    pub codewords: u128,
    pub centers: u128,
    pub subsets: u128,
    pub work: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { codewords: crate::code::DEFAULT_CODEWORD_CAP, centers: DEFAULT_CENTER_CAP, subsets: DEFAULT_SUBSET_CAP, work: DEFAULT_WORK_CAP }
    }
}

/// Evidence that a property fails; each variant re-verifies on its own.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// At least `L` codewords within Hamming distance `radius` of `center`.
    Ball { center: Vec<Elem>, radius: usize, codewords: Vec<Vec<Elem>> },
    /// `L` codewords whose total distance to `center` is below `p L n`.
    AvgRadius { center: Vec<Elem>, total_distance: usize, codewords: Vec<Vec<Elem>> },
    /// At least `L` codewords inside lists `S_1..S_n`.
    Lists { lists: Vec<Vec<Elem>>, codewords: Vec<Vec<Elem>> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Statistic {
    MaxListSize(usize),
    /// As `numerator/denominator` of the fractional average distance.
    MinAvgRadius(String),
    MaxConsistent(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckVerdict {
    pub satisfied: bool,
    pub witness: Option<Witness>,
    pub statistic: Statistic,
}

/// Integer ball radius `floor(p n)`.
pub fn ball_radius(p: Ratio<i64>, n: usize) -> usize {
    (p * Ratio::from_integer(n as i64)).floor().to_integer().max(0) as usize
}

/// `ceil(alpha n)`.
pub fn required_small_lists(alpha: Ratio<i64>, n: usize) -> usize {
    (alpha * Ratio::from_integer(n as i64)).ceil().to_integer().max(0) as usize
}

enum Words {
    Binary(Vec<u64>),
    General(Vec<Vec<Elem>>),
}

struct Geometry {
    n: usize,
    q: usize,
    words: Words,
    list: Vec<Vec<Elem>>,
    free: Vec<usize>,
    centers: u128,
}

impl Geometry {
    fn new(code: &LinearCode, caps: &Caps) -> Result<Self, DecodeError> {
        let n = code.n();
        let q = code.field().order();
        let list = code.codeword_list(caps.codewords)?;
        let pivots = code.generator().rref().pivots;
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let centers = (q as u128).checked_pow(free.len() as u32).unwrap_or(u128::MAX);
        if centers > caps.centers {
            return Err(DecodeError::TooLarge { what: "center enumeration", count: centers, cap: caps.centers });
        }
        let work = centers.saturating_mul(list.len() as u128);
        if work > caps.work {
            return Err(DecodeError::TooLarge { what: "center sweep work", count: work, cap: caps.work });
        }
        let words = if q == 2 && n <= 64 {
            Words::Binary(list.iter().map(|w| pack_binary(w)).collect())
        } else {
            Words::General(list.clone())
        };
        Ok(Geometry { n, q, words, list, free, centers })
    }

    fn center(&self, idx: u128) -> Vec<Elem> {
        let mut z = vec![Elem::ZERO; self.n];
        for (&pos, d) in self.free.iter().zip(vector_from_index(self.q, self.free.len(), idx)) {
            z[pos] = d;
        }
        z
    }

    /// `hist[d]` = number of codewords at distance `d` from center `idx`.
    fn histogram(&self, idx: u128, hist: &mut [u32]) {
        hist.iter_mut().for_each(|h| *h = 0);
        let z = self.center(idx);
        match &self.words {
            Words::Binary(ws) => {
                let zm = pack_binary(&z);
                for &w in ws {
                    hist[(w ^ zm).count_ones() as usize] += 1;
                }
            }
            Words::General(ws) => {
                for w in ws {
                    hist[w.iter().zip(&z).filter(|(a, b)| a != b).count()] += 1;
                }
            }
        }
    }

    /// Codewords sorted by distance to `z`, ties by enumeration index.
    fn nearest(&self, z: &[Elem]) -> Vec<(usize, &Vec<Elem>)> {
        let mut v: Vec<(usize, &Vec<Elem>)> =
            self.list.iter().map(|w| (hamming_distance(w, z).expect("equal lengths"), w)).collect();
        v.sort_by_key(|(d, _)| *d);
        v
    }

    /// Minimizes `key(hist)` over all centers; ties go to the smallest center index.
    fn argmin<F>(&self, key: F) -> (u64, u128)
    where
        F: Fn(&[u32]) -> u64 + Sync,
    {
        const CHUNK: u128 = 1 << 12;
        let chunks = self.centers.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut hist = vec![0u32; self.n + 1];
                let mut best = (u64::MAX, u128::MAX);
                for idx in c * CHUNK..((c + 1) * CHUNK).min(self.centers) {
                    self.histogram(idx, &mut hist);
                    let k = key(&hist);
                    if k < best.0 {
                        best = (k, idx);
                    }
                }
                best
            })
            .reduce(|| (u64::MAX, u128::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ListSizeResult {
    pub max: usize,
    pub center: Vec<Elem>,
    pub radius: usize,
    /// Every codeword within `radius` of `center`.
    pub codewords: Vec<Vec<Elem>>,
}

/// Largest number of codewords in a ball of radius `floor(p n)`.
pub fn max_list_size(code: &LinearCode, p: Ratio<i64>, caps: &Caps) -> Result<ListSizeResult, DecodeError> {
    let geo = Geometry::new(code, caps)?;
    let radius = ball_radius(p, code.n()).min(code.n());
    let total = geo.list.len() as u64;
    let (k, idx) = geo.argmin(|h| total - h[..=radius].iter().map(|&x| x as u64).sum::<u64>());
    let center = geo.center(idx);
    let codewords: Vec<Vec<Elem>> =
        geo.nearest(&center).into_iter().take_while(|(d, _)| *d <= radius).map(|(_, w)| w.clone()).collect();
    debug_assert_eq!(codewords.len() as u64, total - k);
    Ok(ListSizeResult { max: codewords.len(), center, radius, codewords })
}

/// `(p, L)`-list-decodable iff every ball holds fewer than `L` codewords.
pub fn check_list_decoding(code: &LinearCode, p: Ratio<i64>, l: usize, caps: &Caps) -> Result<CheckVerdict, DecodeError> {
    let r = max_list_size(code, p, caps)?;
    let satisfied = r.max < l;
    let witness = (!satisfied).then(|| Witness::Ball {
        center: r.center.clone(),
        radius: r.radius,
        codewords: r.codewords.iter().take(l).cloned().collect(),
    });
    Ok(CheckVerdict { satisfied, witness, statistic: Statistic::MaxListSize(r.max) })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvgRadiusResult {
    /// Sum of the `L` smallest distances at the minimizing center.
    pub total_distance: usize,
    /// `total_distance / (L n)`.
    pub min: Ratio<usize>,
    pub center: Vec<Elem>,
    pub codewords: Vec<Vec<Elem>>,
}

/// Minimum over centers of the average fractional distance to the `L` nearest codewords.
pub fn min_avg_radius(code: &LinearCode, l: usize, caps: &Caps) -> Result<AvgRadiusResult, DecodeError> {
    if l == 0 {
        return Err(DecodeError::InvalidParameter("L must be positive".into()));
    }
    if (l as u128) > code.size() {
        return Err(DecodeError::ListLargerThanCode { l, size: code.size() });
    }
    let geo = Geometry::new(code, caps)?;
    let (total, idx) = geo.argmin(|h| sum_smallest(h, l));
    let center = geo.center(idx);
    let codewords: Vec<Vec<Elem>> = geo.nearest(&center).into_iter().take(l).map(|(_, w)| w.clone()).collect();
    let total = total as usize;
    Ok(AvgRadiusResult { total_distance: total, min: Ratio::new(total, l * code.n()), center, codewords })
}

/// Sum of the `l` smallest distances recorded in a histogram.
pub fn sum_smallest(hist: &[u32], l: usize) -> u64 {
    let mut left = l as u64;
    let mut s = 0u64;
    for (d, &c) in hist.iter().enumerate() {
        let take = left.min(c as u64);
        s += take * d as u64;
        left -= take;
        if left == 0 {
            break;
        }
    }
    s
}

/// `(p, L)`-average-radius list-decodable iff the minimum average radius is at least `p`.
pub fn check_avg_radius(code: &LinearCode, p: Ratio<i64>, l: usize, caps: &Caps) -> Result<CheckVerdict, DecodeError> {
    let r = min_avg_radius(code, l, caps)?;
    let satisfied = !avg_below(r.total_distance, p, l, code.n());
    let witness = (!satisfied).then(|| Witness::AvgRadius {
        center: r.center.clone(),
        total_distance: r.total_distance,
        codewords: r.codewords.clone(),
    });
    Ok(CheckVerdict { satisfied, witness, statistic: Statistic::MinAvgRadius(r.min.to_string()) })
}

/// Whether `total / (l n) < p`, exactly.
pub fn avg_below(total: usize, p: Ratio<i64>, l: usize, n: usize) -> bool {
    Ratio::from_integer(total as i64) < p * Ratio::from_integer((l * n) as i64)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

#[derive(Clone, Copy)]
struct ValueSet([u64; 4]);

impl ValueSet {
    fn insert(&mut self, e: Elem) -> bool {
        let (w, b) = (e.index() / 64, e.index() % 64);
        let fresh = self.0[w] & (1 << b) == 0;
        self.0[w] |= 1 << b;
        fresh
    }

    fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn elems(&self) -> Vec<Elem> {
        (0..256).filter(|&i| self.0[i / 64] & (1 << (i % 64)) != 0).map(|i| Elem(i as u8)).collect()
    }
}

struct LrSearch<'a> {
    words: &'a [Vec<Elem>],
    ell: usize,
    l: usize,
    need: usize,
    chosen: Vec<usize>,
}

impl LrSearch<'_> {
    /// Depth-first over index-increasing tuples; `small` counts coordinates whose
    /// value set still has at most `ell` elements, which can only shrink.
    fn go(&mut self, sets: &[ValueSet], small: usize, start: usize) -> Option<Vec<ValueSet>> {
        if self.chosen.len() == self.l {
            return Some(sets.to_vec());
        }
        let remaining = self.l - self.chosen.len();
        for i in start..=self.words.len() - remaining {
            let mut next = sets.to_vec();
            let mut s = small;
            for (set, &e) in next.iter_mut().zip(&self.words[i]) {
                if set.insert(e) && set.len() == self.ell + 1 {
                    s -= 1;
                }
            }
            if s < self.need {
                continue;
            }
            self.chosen.push(i);
            if let Some(found) = self.go(&next, s, i + 1) {
                return Some(found);
            }
            self.chosen.pop();
        }
        None
    }
}

/// Exhaustive erasure list-recovery check.
///
/// A set of `L` codewords violates iff at least `ceil(alpha n)` coordinates carry
/// at most `ell` distinct values. Violations are translation invariant, so the
/// search fixes the zero codeword as the first member.
pub fn check_list_recovery_erasures(
    code: &LinearCode,
    alpha: Ratio<i64>,
    ell: usize,
    l: usize,
    caps: &Caps,
) -> Result<CheckVerdict, DecodeError> {
    if l == 0 {
        return Err(DecodeError::InvalidParameter("L must be positive".into()));
    }
    let size = code.size();
    if (l as u128) > size {
        return Ok(CheckVerdict { satisfied: true, witness: None, statistic: Statistic::MaxConsistent(0) });
    }
    let subsets = binomial(size - 1, l as u128 - 1);
    if subsets > caps.subsets {
        return Err(DecodeError::TooLarge { what: "subset enumeration", count: subsets, cap: caps.subsets });
    }
    let words = code.codeword_list(caps.codewords)?;
    let n = code.n();
    let need = required_small_lists(alpha, n);
    let mut sets = vec![ValueSet([0; 4]); n];
    for (s, &e) in sets.iter_mut().zip(&words[0]) {
        s.insert(e);
    }
    let small = if ell >= 1 { n } else { 0 };
    if small < need {
        return Ok(CheckVerdict { satisfied: true, witness: None, statistic: Statistic::MaxConsistent(0) });
    }
    let mut search = LrSearch { words: &words, ell, l, need, chosen: vec![0] };
    match search.go(&sets, small, 1) {
        Some(found) => {
            let q = code.field().order();
            let lists = found.iter().map(|s| if s.len() <= ell { s.elems() } else { (0..q).map(|i| Elem(i as u8)).collect() }).collect();
            let codewords: Vec<Vec<Elem>> = search.chosen.iter().map(|&i| words[i].clone()).collect();
            Ok(CheckVerdict { satisfied: false, witness: Some(Witness::Lists { lists, codewords }), statistic: Statistic::MaxConsistent(l) })
        }
        None => Ok(CheckVerdict { satisfied: true, witness: None, statistic: Statistic::MaxConsistent(l - 1) }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ListsCheck {
    pub consistent_distinct: usize,
    pub small_lists: usize,
    pub required_small: usize,
    pub violates: bool,
}

/// Witness-mode list-recovery check: counts distinct words consistent with every
/// list and the number of lists of size at most `ell`.
pub fn verify_lists(words: &[Vec<Elem>], lists: &[Vec<Elem>], ell: usize, alpha: Ratio<i64>, l: usize) -> ListsCheck {
    let n = lists.len();
    let small_lists = lists.iter().filter(|s| dedup_len(s) <= ell).count();
    let mut consistent: Vec<&Vec<Elem>> =
        words.iter().filter(|w| w.len() == n && w.iter().zip(lists).all(|(e, s)| s.contains(e))).collect();
    consistent.sort();
    consistent.dedup();
    let required_small = required_small_lists(alpha, n);
    ListsCheck {
        consistent_distinct: consistent.len(),
        small_lists,
        required_small,
        violates: consistent.len() >= l && small_lists >= required_small,
    }
}

fn dedup_len(s: &[Elem]) -> usize {
    let mut v = s.to_vec();
    v.sort();
    v.dedup();
    v.len()
}

fn distinct(words: &[Vec<Elem>]) -> bool {
    let mut v: Vec<&Vec<Elem>> = words.iter().collect();
    v.sort();
    v.dedup();
    v.len() == words.len()
}

/// Property parameters a witness is checked against.
#[derive(Clone, Copy, Debug)]
pub enum Claim {
    ListDecoding { p: Ratio<i64>, l: usize },
    AvgRadius { p: Ratio<i64>, l: usize },
    ListRecovery { alpha: Ratio<i64>, ell: usize, l: usize },
}

/// Independent re-check of a witness; with `code` given, every word must also be a codeword.
pub fn verify_witness(code: Option<&LinearCode>, witness: &Witness, claim: Claim) -> Result<bool, DecodeError> {
    let words = match witness {
        Witness::Ball { codewords, .. } | Witness::AvgRadius { codewords, .. } | Witness::Lists { codewords, .. } => codewords,
    };
    if let Some(c) = code {
        for w in words {
            if !c.contains(w)? {
                return Ok(false);
            }
        }
    }
    if !distinct(words) {
        return Ok(false);
    }
    Ok(match (witness, claim) {
        (Witness::Ball { center, radius, codewords }, Claim::ListDecoding { p, l }) => {
            *radius <= ball_radius(p, center.len())
                && codewords.len() >= l
                && codewords.iter().all(|w| hamming_distance(w, center).is_ok_and(|d| d <= *radius))
        }
        (Witness::AvgRadius { center, total_distance, codewords }, Claim::AvgRadius { p, l }) => {
            let mut total = 0;
            for w in codewords {
                total += hamming_distance(w, center)?;
            }
            codewords.len() == l && total == *total_distance && avg_below(total, p, l, center.len())
        }
        (Witness::Lists { lists, codewords }, Claim::ListRecovery { alpha, ell, l }) => {
            verify_lists(codewords, lists, ell, alpha, l).violates
        }
        _ => false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampledBound {
    /// Always `LOWER BOUND`: sampled centers never certify the true maximum.
    pub label: &'static str,
    pub lower_bound: usize,
    pub center: Vec<Elem>,
    pub samples: u64,
}

/// Max list size over uniformly sampled centers, for codes too long to enumerate.
pub fn sampled_max_list_size(
    code: &LinearCode,
    p: Ratio<i64>,
    samples: u64,
    seed: u64,
    caps: &Caps,
) -> Result<SampledBound, DecodeError> {
    let words = code.codeword_list(caps.codewords)?;
    let radius = ball_radius(p, code.n());
    let mut rng = rng_for(seed, 0);
    let q = code.field().order() as u32;
    let mut best = (0usize, vec![Elem::ZERO; code.n()]);
    for _ in 0..samples {
        let z: Vec<Elem> = (0..code.n()).map(|_| Elem(rng.random_range(0..q) as u8)).collect();
        let count = words.iter().filter(|w| hamming_distance(w, &z).is_ok_and(|d| d <= radius)).count();
        if count > best.0 {
            best = (count, z);
        }
    }
    Ok(SampledBound { label: "LOWER BOUND", lower_bound: best.0, center: best.1, samples })
}

/// Fractional form of `min_avg_radius` for reporting.
pub fn ratio_f64(r: Ratio<usize>) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}
