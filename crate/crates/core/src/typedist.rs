//! Exact distributions over `F_q^L` ("types"), their entropies, pushforwards,
//! and the exhaustive implicit-rarity search.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::code::rng_for;
use crate::gf::{make_field, Elem, Field};
use crate::linalg::{enumerate_subspace_reps, gaussian_binomial, parse_u32s, pivot_patterns, span_dim, LinalgError, Mat, PatternReps};

/// Default slack for the strict rarity inequality.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("support of size {support} does not fit in {n} rows")]
    SupportLargerThanN { support: usize, n: usize },
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed type text: {0}")]
    Parse(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `h_q(x) = x log_q(q-1) - x log_q x - (1-x) log_q(1-x)`, with `0 log 0 = 0`.
pub fn h_q(q: f64, x: f64) -> f64 {
    let mut s = 0.0;
    if x > 0.0 {
        s += x * (q - 1.0).ln() - x * x.ln();
    }
    if x < 1.0 {
        s -= (1.0 - x) * (1.0 - x).ln();
    }
    s / q.ln()
}

/// Binary entropy.
pub fn h2(x: f64) -> f64 {
    h_q(2.0, x)
}

/// `-sum p log_base p` over the given weights.
pub fn entropy_of(probs: impl IntoIterator<Item = f64>, base: f64) -> f64 {
    -probs.into_iter().filter(|&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>() / base.ln()
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite probability")
}

pub fn big_ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDist {
    field: Field,
    len: usize,
    support: Vec<(Vec<Elem>, BigRational)>,
    dim: usize,
}

impl TypeDist {
    /// Probabilities must be positive, sum to one, and sit on distinct vectors.
    pub fn new(field: &Field, len: usize, entries: Vec<(Vec<Elem>, BigRational)>) -> Result<Self, TypeError> {
        let mut map = BTreeMap::new();
        let mut total = BigRational::zero();
        for (v, p) in entries {
            if v.len() != len {
                return Err(TypeError::DimensionMismatch(format!("vector of length {} in a type over F_q^{len}", v.len())));
            }
            if let Some(e) = v.iter().find(|e| e.index() >= field.order()) {
                return Err(TypeError::Invalid(format!("entry {e} outside F_{}", field.order())));
            }
            if !p.is_positive() {
                return Err(TypeError::Invalid(format!("non-positive probability {p}")));
            }
            total += &p;
            if map.insert(v, p).is_some() {
                return Err(TypeError::Invalid("repeated support vector".into()));
            }
        }
        if !total.is_one() {
            return Err(TypeError::Invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self::from_map(field, len, map))
    }

    /// Drops zero weights and merges nothing; the caller guarantees a total of one.
    pub(crate) fn from_map(field: &Field, len: usize, map: BTreeMap<Vec<Elem>, BigRational>) -> Self {
        let support: Vec<(Vec<Elem>, BigRational)> = map.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let vectors: Vec<Vec<Elem>> = support.iter().map(|(v, _)| v.clone()).collect();
        let dim = span_dim(field, len, &vectors);
        TypeDist { field: field.clone(), len, support, dim }
    }

    /// Law of a random variable given as weighted outcomes, aggregating repeats.
    pub fn from_weighted(field: &Field, len: usize, outcomes: impl IntoIterator<Item = (Vec<Elem>, BigRational)>) -> Result<Self, TypeError> {
        let mut map: BTreeMap<Vec<Elem>, BigRational> = BTreeMap::new();
        for (v, p) in outcomes {
            *map.entry(v).or_insert_with(BigRational::zero) += p;
        }
        Self::new(field, len, map.into_iter().collect())
    }

    pub fn point_mass(field: &Field, v: Vec<Elem>) -> Self {
        let len = v.len();
        Self::from_map(field, len, BTreeMap::from([(v, BigRational::one())]))
    }

    pub fn uniform(field: &Field, vectors: &[Vec<Elem>]) -> Result<Self, TypeError> {
        let len = vectors.first().map_or(0, Vec::len);
        let w = big_ratio(1, vectors.len() as i64);
        Self::new(field, len, vectors.iter().map(|v| (v.clone(), w.clone())).collect())
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Vector length `L`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn support(&self) -> &[(Vec<Elem>, BigRational)] {
        &self.support
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// `dim span(supp)`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prob(&self, v: &[Elem]) -> BigRational {
        self.support
            .binary_search_by(|(w, _)| w.as_slice().cmp(v))
            .map(|i| self.support[i].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    /// Entropy in base `q`.
    pub fn entropy_q(&self) -> f64 {
        entropy_of(self.support.iter().map(|(_, p)| ratio_to_f64(p)), self.field.order() as f64)
    }

    /// Law of `A v` for `v ~ self`.
    pub fn pushforward(&self, a: &Mat) -> Result<TypeDist, TypeError> {
        if a.cols() != self.len {
            return Err(TypeError::DimensionMismatch(format!("map has {} columns, type has length {}", a.cols(), self.len)));
        }
        let mut map: BTreeMap<Vec<Elem>, BigRational> = BTreeMap::new();
        for (v, p) in &self.support {
            *map.entry(a.matvec(v)?).or_insert_with(BigRational::zero) += p;
        }
        Ok(Self::from_map(&self.field, a.rows(), map))
    }

    /// Row counts for an `n`-row realization: each count is `floor(n p)` or
    /// `ceil(n p)`, largest remainders first, ties broken by `rng`.
    pub fn realize_counts<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>, TypeError> {
        if n < self.support.len() {
            return Err(TypeError::SupportLargerThanN { support: self.support.len(), n });
        }
        let probs: Vec<BigRational> = self.support.iter().map(|(_, p)| p.clone()).collect();
        Ok(round_counts(&probs, n, rng))
    }

    /// A matrix whose rows realize the type, in seeded random order.
    pub fn realize_matrix(&self, n: usize, seed: u64, stream: u64) -> Result<Mat, TypeError> {
        let mut rng = rng_for(seed, stream);
        let counts = self.realize_counts(n, &mut rng)?;
        let mut rows: Vec<Vec<Elem>> = Vec::with_capacity(n);
        for ((v, _), &c) in self.support.iter().zip(&counts) {
            rows.extend(std::iter::repeat_n(v.clone(), c));
        }
        rows.shuffle(&mut rng);
        Ok(Mat::from_rows(&self.field, self.len, &rows)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.field.order(), self.len, self.support.len());
        for (v, p) in &self.support {
            let entries: Vec<String> = v.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(s, "{} {}/{}", entries.join(" "), p.numer(), p.denom());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TypeDist, TypeError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| TypeError::Parse("empty input".into()))?;
        let [q, len, size] = parse_u32s(header)?[..] else {
            return Err(TypeError::Parse(format!("header must be `q L supportSize`, got `{header}`")));
        };
        let field = make_field(q).map_err(LinalgError::from)?;
        let mut entries = Vec::with_capacity(size as usize);
        for i in 0..size {
            let line = lines.next().ok_or_else(|| TypeError::Parse(format!("missing support line {i}")))?;
            let (vec_part, prob) = line.rsplit_once(char::is_whitespace).unwrap_or(("", line));
            let v = parse_u32s(vec_part)?
                .into_iter()
                .map(|x| field.elem(x).map_err(|e| TypeError::Parse(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            entries.push((v, parse_ratio(prob)?));
        }
        Self::new(&field, len as usize, entries)
    }
}

/// Parses `a/b` or an integer.
pub fn parse_ratio(s: &str) -> Result<BigRational, TypeError> {
    let bad = |_| TypeError::Parse(format!("bad rational `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let den: BigInt = b.trim().parse().map_err(bad)?;
            if den.is_zero() {
                return Err(TypeError::Parse(format!("zero denominator in `{s}`")));
            }
            Ok(BigRational::new(a.trim().parse().map_err(bad)?, den))
        }
        None => Ok(BigRational::from_integer(s.trim().parse().map_err(bad)?)),
    }
}

/// Largest-remainder rounding of `n * probs` to integers summing to `n`.
pub fn round_counts<R: Rng + ?Sized>(probs: &[BigRational], n: usize, rng: &mut R) -> Vec<usize> {
    let nn = BigRational::from_integer(BigInt::from(n));
    let mut counts = Vec::with_capacity(probs.len());
    let mut rems = Vec::with_capacity(probs.len());
    for p in probs {
        let x = p * &nn;
        let fl = x.floor();
        counts.push(fl.to_integer().to_usize().expect("count fits"));
        rems.push(x - fl);
    }
    let deficit = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]));
    for &i in order.iter().take(deficit) {
        counts[i] += 1;
    }
    counts
}

/// Exact empirical row distribution of `m`.
pub fn empirical_type(m: &Mat) -> Result<TypeDist, TypeError> {
    if m.rows() == 0 {
        return Err(TypeError::EmptyMatrix);
    }
    let mut counts: BTreeMap<Vec<Elem>, i64> = BTreeMap::new();
    for r in 0..m.rows() {
        *counts.entry(m.row(r).to_vec()).or_default() += 1;
    }
    let n = m.rows() as i64;
    let map = counts.into_iter().map(|(v, c)| (v, big_ratio(c, n))).collect();
    Ok(TypeDist::from_map(m.field(), m.cols(), map))
}

/// `(H_q(A tau), dim(A tau))` for one map.
pub fn pushed_entropy(tau: &TypeDist, a: &Mat) -> Result<(f64, usize), TypeError> {
    let pushed = tau.pushforward(a)?;
    Ok((pushed.entropy_q(), pushed.dim()))
}

#[derive(Clone, Debug)]
pub enum RarityVerdict {
    /// First map in enumeration order with `H_q(A tau) < gamma dim(A tau) - tol`.
    Rare { witness: Mat, entropy: f64, dim: usize },
    /// `min_ratio` is the minimum of `H_q(A tau) / dim(A tau)` over maps with `dim >= 1`;
    /// `near_threshold` counts maps with `H_q(A tau)` within `tol` above `gamma dim`.
    NotRare { min_ratio: f64, argmin: Mat, argmin_dim: usize, near_threshold: usize },
}

#[derive(Clone, Debug)]
pub struct RarityReport {
    pub verdict: RarityVerdict,
    pub examined: u128,
    /// Maps sending the whole support to zero.
    pub skipped: u128,
}

impl RarityReport {
    pub fn is_rare(&self) -> bool {
        matches!(self.verdict, RarityVerdict::Rare { .. })
    }

    pub fn min_ratio(&self) -> Option<f64> {
        match &self.verdict {
            RarityVerdict::NotRare { min_ratio, .. } => Some(*min_ratio),
            RarityVerdict::Rare { .. } => None,
        }
    }
}

#[derive(Default)]
struct PatternSummary {
    witness: Option<(Mat, f64, usize)>,
    best: Option<(f64, Mat, usize)>,
    near: usize,
    examined: u128,
    skipped: u128,
}

fn scan_pattern(tau: &TypeDist, pivots: &[usize], gamma: f64, tol: f64) -> Result<PatternSummary, TypeError> {
    let mut s = PatternSummary::default();
    for a in PatternReps::new(tau.field(), tau.len(), pivots) {
        s.examined += 1;
        let (h, d) = pushed_entropy(tau, &a)?;
        if d == 0 {
            s.skipped += 1;
            continue;
        }
        let target = gamma * d as f64;
        if h < target - tol {
            s.witness = Some((a, h, d));
            return Ok(s);
        }
        if h < target + tol {
            s.near += 1;
        }
        let ratio = h / d as f64;
        if s.best.as_ref().is_none_or(|(b, _, _)| ratio < *b) {
            s.best = Some((ratio, a, d));
        }
    }
    Ok(s)
}

/// Exhaustive search over one RREF representative per row space, for every `L' in 1..=L`.
///
/// Enumeration order is by `L'`, then pivot pattern, then free entries, so the
/// first witness and the argmin (ties to the earliest map) are deterministic.
pub fn implicit_rarity_search(tau: &TypeDist, gamma: f64, tol: f64, cap: u128) -> Result<RarityReport, TypeError> {
    let len = tau.len();
    let q = tau.field().order() as u128;
    let total: u128 = (1..=len).map(|k| gaussian_binomial(q, len as u32, k as u32)).sum();
    if total > cap {
        return Err(LinalgError::EnumerationTooLarge { count: total, cap }.into());
    }
    let patterns: Vec<Vec<usize>> = (1..=len).flat_map(|k| pivot_patterns(k, len)).collect();
    let summaries: Vec<PatternSummary> =
        patterns.par_iter().map(|p| scan_pattern(tau, p, gamma, tol)).collect::<Result<_, _>>()?;

    let mut examined = 0;
    let mut skipped = 0;
    let mut near = 0;
    let mut best: Option<(f64, Mat, usize)> = None;
    for s in summaries {
        examined += s.examined;
        skipped += s.skipped;
        near += s.near;
        if let Some((witness, entropy, dim)) = s.witness {
            return Ok(RarityReport { verdict: RarityVerdict::Rare { witness, entropy, dim }, examined, skipped });
        }
        if let Some(b) = s.best {
            if best.as_ref().is_none_or(|cur| b.0 < cur.0) {
                best = Some(b);
            }
        }
    }
    let (min_ratio, argmin, argmin_dim) = best.ok_or_else(|| TypeError::Invalid("every map sends the support to zero".into()))?;
    Ok(RarityReport { verdict: RarityVerdict::NotRare { min_ratio, argmin, argmin_dim, near_threshold: near }, examined, skipped })
}

/// Minimum normalized entropy over all maps; equivalent to a search at `gamma = 0`.
pub fn min_normalized_entropy(tau: &TypeDist, cap: u128) -> Result<(f64, Mat), TypeError> {
    match implicit_rarity_search(tau, 0.0, 0.0, cap)?.verdict {
        RarityVerdict::NotRare { min_ratio, argmin, .. } => Ok((min_ratio, argmin)),
        RarityVerdict::Rare { .. } => unreachable!("entropy is never negative"),
    }
}

/// Number of maps the search visits for a type of length `len` over `F_q`.
pub fn search_size(q: usize, len: usize) -> u128 {
    (1..=len).map(|k| gaussian_binomial(q as u128, len as u32, k as u32)).sum()
}

/// Every subspace representative of dimension `k`, for callers that want their own scan.
pub fn maps_of_rank(field: &Field, k: usize, len: usize, cap: u128) -> Result<Vec<Mat>, TypeError> {
    Ok(enumerate_subspace_reps(field, k, len, cap)?.collect())
}
