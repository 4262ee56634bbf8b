//! Monte Carlo estimates of how often a random linear code contains some matrix
//! of a given row type.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::code::{sample_random_linear, CodeError, LinearCode};
use crate::gf::Elem;
use crate::linalg::Mat;
use crate::typedist::TypeDist;

pub const DEFAULT_NODE_CAP: u128 = 1 << 26;
const PATTERN_CAP: usize = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("{what}: {count} exceeds the cap of {cap}")]
    TooLarge { what: &'static str, count: u128, cap: u128 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("type is over F_{tau_q} but the code is over F_{code_q}")]
    FieldMismatch { tau_q: usize, code_q: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Allowed count range of each support vector: `floor(n Pr(v))` to `ceil(n Pr(v))`.
pub fn count_bounds(tau: &TypeDist, n: usize) -> Vec<(usize, usize)> {
    tau.support()
        .iter()
        .map(|(_, p)| {
            let x = p * BigInt::from(n);
            let (fl, rem) = x.numer().div_rem(x.denom());
            let fl = fl.to_usize().expect("count fits in usize");
            (fl, if rem == BigInt::from(0) { fl } else { fl + 1 })
        })
        .collect()
}

/// Whether some count vector within [`count_bounds`] sums to `n`.
pub fn type_class_nonempty(tau: &TypeDist, n: usize) -> bool {
    let b = count_bounds(tau, n);
    let lo: usize = b.iter().map(|x| x.0).sum();
    let hi: usize = b.iter().map(|x| x.1).sum();
    lo <= n && n <= hi
}

struct Plan {
    q: usize,
    /// Information set: columns chosen by search, in order.
    free: Vec<usize>,
    /// Column `j` equals `sum_i coeff[j][i] * column free[i]`.
    coeff: Vec<Vec<Elem>>,
    /// Bounds per depth, indexed by the base-q prefix code over the free columns.
    bounds: Vec<Vec<(usize, usize)>>,
}

fn plan(tau: &TypeDist, n: usize) -> Result<Plan, McError> {
    let f = tau.field();
    let q = f.order();
    let len = tau.len();
    let rows: Vec<Vec<Elem>> = tau.support().iter().map(|(v, _)| v.clone()).collect();
    let span = Mat::from_rows(f, len, &rows).expect("support vectors have the type's length").rref();
    let d = span.rank;
    let free = span.pivots.clone();
    let coeff: Vec<Vec<Elem>> = (0..len).map(|j| (0..d).map(|i| span.mat.get(i, j)).collect()).collect();
    let size = q.checked_pow(d as u32).filter(|&s| s <= PATTERN_CAP).ok_or(McError::TooLarge {
        what: "prefix patterns",
        count: (q as u128).saturating_pow(d as u32),
        cap: PATTERN_CAP as u128,
    })?;
    let mut bounds: Vec<Vec<(usize, usize)>> = (0..=d).map(|j| vec![(0, 0); q.pow(j as u32)]).collect();
    for ((v, _), (lo, hi)) in tau.support().iter().zip(count_bounds(tau, n)) {
        let mut code = 0usize;
        for j in 0..=d {
            let b = &mut bounds[j][code];
            b.0 += lo;
            b.1 += hi;
            if j < d {
                code = code * q + v[free[j]].index();
            }
        }
    }
    debug_assert_eq!(bounds[d].len(), size);
    Ok(Plan { q, free, coeff, bounds })
}

struct Search<'a> {
    plan: &'a Plan,
    words: &'a [Vec<Elem>],
    n: usize,
    nodes: u128,
    cap: u128,
    chosen: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, prefix: &[usize]) -> Result<bool, McError> {
        let depth = self.chosen.len();
        if depth == self.plan.free.len() {
            return Ok(true);
        }
        let q = self.plan.q;
        let bounds = &self.plan.bounds[depth + 1];
        let mut counts = vec![0usize; bounds.len()];
        let mut next = vec![0usize; self.n];
        for (w, word) in self.words.iter().enumerate() {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(McError::TooLarge { what: "search nodes", count: self.nodes, cap: self.cap });
            }
            counts.iter_mut().for_each(|c| *c = 0);
            for r in 0..self.n {
                next[r] = prefix[r] * q + word[r].index();
                counts[next[r]] += 1;
            }
            if counts.iter().zip(bounds).all(|(&c, &(lo, hi))| lo <= c && c <= hi) {
                self.chosen.push(w);
                if self.run(&next)? {
                    return Ok(true);
                }
                self.chosen.pop();
            }
        }
        Ok(false)
    }
}

/// Searches for `M` with the row type of `tau` (up to per-vector floor/ceiling
/// rounding) whose columns all lie in `code`. Only an information set of columns
/// is searched; the rest follow linearly from the span of the support.
pub fn find_contained(tau: &TypeDist, code: &LinearCode, codeword_cap: u128, node_cap: u128) -> Result<Option<Mat>, McError> {
    let f = code.field();
    if f.order() != tau.field().order() {
        return Err(McError::FieldMismatch { tau_q: tau.field().order(), code_q: f.order() });
    }
    let n = code.n();
    if !type_class_nonempty(tau, n) {
        return Ok(None);
    }
    let plan = plan(tau, n)?;
    let words = code.codeword_list(codeword_cap)?;
    let mut search = Search { plan: &plan, words: &words, n, nodes: 0, cap: node_cap, chosen: Vec::new() };
    if !search.run(&vec![0usize; n])? {
        return Ok(None);
    }
    let cols: Vec<&Vec<Elem>> = search.chosen.iter().map(|&w| &words[w]).collect();
    let m = Mat::from_fn(f, n, tau.len(), |r, j| {
        plan.coeff[j].iter().zip(&cols).fold(Elem::ZERO, |acc, (&a, col)| f.add(acc, f.mul(a, col[r])))
    });
    Ok(Some(m))
}

/// Whether the rows of `m` have a type in the rounded class of `tau`.
pub fn in_type_class(tau: &TypeDist, m: &Mat) -> bool {
    let n = m.rows();
    if m.cols() != tau.len() || !type_class_nonempty(tau, n) {
        return false;
    }
    let mut counts = vec![0usize; tau.support().len()];
    for r in 0..n {
        match tau.support().binary_search_by(|(v, _)| v.as_slice().cmp(m.row(r))) {
            Ok(i) => counts[i] += 1,
            Err(_) => return false,
        }
    }
    counts.iter().zip(count_bounds(tau, n)).all(|(&c, (lo, hi))| lo <= c && c <= hi)
}

/// Two-sided Clopper-Pearson interval at level `1 - alpha`.
pub fn clopper_pearson(hits: u64, trials: u64, alpha: f64) -> (f64, f64) {
    let (k, t) = (hits as f64, trials as f64);
    let lo = if hits == 0 { 0.0 } else { Beta::new(k, t - k + 1.0).expect("positive shapes").inverse_cdf(alpha / 2.0) };
    let hi = if hits == trials { 1.0 } else { Beta::new(k + 1.0, t - k).expect("positive shapes").inverse_cdf(1.0 - alpha / 2.0) };
    (lo, hi)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let m = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / m, ry.iter().sum::<f64>() / m);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbundanceResult {
    pub n: usize,
    pub rate: String,
    pub seed: u64,
    pub trials: u64,
    pub hits: u64,
    pub frequency: f64,
    pub ci95: (f64, f64),
    pub outcomes: Vec<bool>,
}

/// Trial `i` samples its code from stream `i` of `seed`, so results do not depend
/// on the thread pool.
pub fn mc_abundance(
    tau: &TypeDist,
    rate: Ratio<i64>,
    n: usize,
    trials: u64,
    seed: u64,
    codeword_cap: u128,
    node_cap: u128,
) -> Result<AbundanceResult, McError> {
    if trials == 0 {
        return Err(McError::InvalidParameter("trials must be at least 1".into()));
    }
    let field = tau.field().clone();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let code = sample_random_linear(&field, n, rate, seed, i)?;
            Ok(find_contained(tau, &code, codeword_cap, node_cap)?.is_some())
        })
        .collect::<Result<Vec<bool>, McError>>()?;
    let hits = outcomes.iter().filter(|&&b| b).count() as u64;
    Ok(AbundanceResult {
        n,
        rate: rate.to_string(),
        seed,
        trials,
        hits,
        frequency: hits as f64 / trials as f64,
        ci95: clopper_pearson(hits, trials, 0.05),
        outcomes,
    })
}
