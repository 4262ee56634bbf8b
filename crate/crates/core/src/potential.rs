//! The average-radius potential function over `F_2` and the finite-n lemmas
//! around it: doubling, the Markov growth step, the entropy-sum bound, and the
//! inequality chain from a small potential to average-radius list-decodability.

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::badlists::ser_ratio;
use crate::code::{pack_binary, rng_for, unpack_binary, CodeError, LinearCode};
use crate::decodability::{min_avg_radius, Caps, DecodeError};
use crate::gf::make_field;
use crate::linalg::Mat;
use crate::typedist::h2;

/// Default cap on `2^n`.
pub const DEFAULT_SPACE_CAP: u128 = 1 << 24;
/// Relative slack for floating-point comparisons.
pub const TOL: f64 = 1e-9;
const LAMBDA_BITS: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("2^{n} points exceed the cap of {cap}")]
    TooLarge { n: usize, cap: u128 },
    #[error("no feasible lambda at this n; smallest feasible n is {smallest_n:?}")]
    NoFeasibleLambda { smallest_n: Option<usize> },
    #[error("word {y:#x} is not a codeword within distance lambda of the center")]
    SubsetOutOfBall { y: u64 },
    #[error("potential machinery is binary only")]
    NotBinary,
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `h*(a) = h(a)` for `a <= 1/2`, else 1.
pub fn h_star(a: f64) -> f64 {
    if a <= 0.5 {
        h2(a)
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialParams {
    pub n: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub p: Ratio<i64>,
    pub epsilon: f64,
    /// `R = 1 - h(p) - epsilon`.
    pub rate: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub lambda: Ratio<i64>,
    /// `eta = 1 - R - h(lambda)`.
    pub eta: f64,
    pub l: usize,
}

/// `floor(h(p) / epsilon) + 2`.
pub fn default_list_size(p: f64, epsilon: f64) -> usize {
    (h2(p) / epsilon).floor() as usize + 2
}

impl PotentialParams {
    pub fn new(n: usize, p: Ratio<i64>, epsilon: f64, lambda: Ratio<i64>, l: Option<usize>) -> Result<Self, PotentialError> {
        if !(1..=63).contains(&n) {
            return Err(PotentialError::InvalidParams(format!("n = {n} is outside 1..=63")));
        }
        let pf = ratio_f64(p);
        if !(pf > 0.0 && pf < 0.5) {
            return Err(PotentialError::InvalidParams(format!("p = {p} is not in (0, 1/2)")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0 - h2(pf)) {
            return Err(PotentialError::InvalidParams(format!("epsilon = {epsilon} is not in (0, 1 - h(p))")));
        }
        let lf = ratio_f64(lambda);
        if !(lambda > p && lf < 0.5) {
            return Err(PotentialError::InvalidParams(format!("lambda = {lambda} is not in (p, 1/2)")));
        }
        let rate = 1.0 - h2(pf) - epsilon;
        let eta = 1.0 - rate - h2(lf);
        if eta <= 0.0 {
            return Err(PotentialError::InvalidParams(format!("eta = {eta} is not positive; need h(lambda) < h(p) + epsilon")));
        }
        Ok(PotentialParams { n, p, epsilon, rate, lambda, eta, l: l.unwrap_or_else(|| default_list_size(pf, epsilon)) })
    }

    /// Rate fixed to exactly `k / n`, so `epsilon = 1 - h(p) - k / n`.
    pub fn with_dimension(n: usize, p: Ratio<i64>, k: usize, lambda: Ratio<i64>, l: Option<usize>) -> Result<Self, PotentialError> {
        let eps = 1.0 - h2(ratio_f64(p)) - k as f64 / n as f64;
        let mut s = Self::new(n, p, eps, lambda, l)?;
        s.rate = k as f64 / n as f64;
        Ok(s)
    }

    pub fn p_f64(&self) -> f64 {
        ratio_f64(self.p)
    }

    pub fn lambda_f64(&self) -> f64 {
        ratio_f64(self.lambda)
    }

    /// `floor(R n)` growth steps.
    pub fn steps(&self) -> usize {
        (self.rate * self.n as f64 + 1e-9).floor() as usize
    }

    /// Whether `d / n < lambda`, exactly.
    pub fn in_open_ball(&self, d: usize) -> bool {
        (d as i128) * (*self.lambda.denom() as i128) < (*self.lambda.numer() as i128) * self.n as i128
    }

    /// `M(d / n)`.
    pub fn m_of_distance(&self, d: usize) -> f64 {
        if self.in_open_ball(d) {
            1.0 - self.rate - h2(d as f64 / self.n as f64)
        } else {
            0.0
        }
    }

    /// `M(gamma) = 1 - R - h(gamma)` below lambda, else 0.
    pub fn m_fn(&self, gamma: Ratio<i64>) -> f64 {
        if gamma < self.lambda {
            1.0 - self.rate - h2(ratio_f64(gamma))
        } else {
            0.0
        }
    }

    fn m_table(&self) -> Vec<f64> {
        (0..=self.n).map(|d| self.m_of_distance(d)).collect()
    }

    /// `1 + lambda n 2^(-n (1 - h(lambda) - eta / (1 + eta)))`.
    pub fn s0_bound(&self) -> f64 {
        1.0 + self.delta0()
    }

    pub fn delta0(&self) -> f64 {
        let lf = self.lambda_f64();
        let n = self.n as f64;
        lf * n * (-n * (1.0 - h2(lf) - self.eta / (1.0 + self.eta))).exp2()
    }

    /// `L > (1 - R + eta + (1 + eta) / n) / (epsilon - eta)`.
    pub fn l_condition(&self) -> bool {
        l_condition(self.l, self.rate, self.epsilon, self.eta, self.n)
    }
}

pub fn l_condition(l: usize, rate: f64, epsilon: f64, eta: f64, n: usize) -> bool {
    epsilon > eta && (l as f64) > (1.0 - rate + eta + (1.0 + eta) / n as f64) / (epsilon - eta)
}

/// Largest `eta` allowed by the list-size condition: `(L eps - (1 - R) - 1/n) / (L + 1 + 1/n)`.
pub fn eta_max(l: usize, rate: f64, epsilon: f64, n: usize) -> f64 {
    let (lf, nf) = (l as f64, n as f64);
    (lf * epsilon - (1.0 - rate) - 1.0 / nf) / (lf + 1.0 + 1.0 / nf)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaChoice {
    #[serde(serialize_with = "ser_ratio")]
    pub lambda: Ratio<i64>,
    pub eta: f64,
    pub eta_max: f64,
}

fn dyadic(m: i64) -> Ratio<i64> {
    Ratio::new(m, 1i64 << LAMBDA_BITS)
}

/// Smallest `m` in `[lo, hi]` with `pred(m)`, for a monotone predicate true at `hi`.
fn first_true(mut lo: i64, mut hi: i64, pred: impl Fn(i64) -> bool) -> i64 {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    hi
}

/// Dyadic `lambda` in `(p, 1/2)` with `eta = 1 - R - h(lambda)` as large as the
/// list-size condition allows, i.e. the smallest feasible `lambda`.
pub fn choose_lambda(p: Ratio<i64>, epsilon: f64, n: usize, l: usize) -> Result<LambdaChoice, PotentialError> {
    let pf = ratio_f64(p);
    let rate = 1.0 - h2(pf) - epsilon;
    choose_lambda_at_rate(p, rate, epsilon, n, l)
}

pub fn choose_lambda_at_rate(p: Ratio<i64>, rate: f64, epsilon: f64, n: usize, l: usize) -> Result<LambdaChoice, PotentialError> {
    let em = eta_max(l, rate, epsilon, n);
    let eta_of = |m: i64| 1.0 - rate - h2(ratio_f64(dyadic(m)));
    let feasible = |m: i64| {
        let eta = eta_of(m);
        eta > 0.0 && l_condition(l, rate, epsilon, eta, n)
    };
    let scale = 1i64 << LAMBDA_BITS;
    let lo = (pf_floor(p, scale)) + 1;
    let half = scale / 2 - 1;
    if lo > half || eta_of(lo) <= 0.0 {
        return Err(PotentialError::InvalidParams("no lambda in (p, 1/2) has positive eta".into()));
    }
    // Largest m with eta > 0.
    let top = first_true(lo, half + 1, |m| m > half || eta_of(m) <= 0.0) - 1;
    if !feasible(top) {
        let smallest_n = (n + 1..=1_000_000).find(|&m| eta_max(l, rate, epsilon, m) > 0.0);
        return Err(PotentialError::NoFeasibleLambda { smallest_n });
    }
    let m = first_true(lo, top, feasible);
    Ok(LambdaChoice { lambda: dyadic(m), eta: eta_of(m), eta_max: em })
}

fn pf_floor(p: Ratio<i64>, scale: i64) -> i64 {
    ((*p.numer() as i128 * scale as i128) / *p.denom() as i128) as i64
}

/// Smallest dyadic `lambda` whose `eta` does not exceed `eta`, for deliberately slack settings.
pub fn lambda_for_eta(p: Ratio<i64>, rate: f64, eta: f64) -> Result<Ratio<i64>, PotentialError> {
    let scale = 1i64 << LAMBDA_BITS;
    let lo = pf_floor(p, scale) + 1;
    let half = scale / 2 - 1;
    let target = 1.0 - rate - eta;
    if h2(ratio_f64(dyadic(half))) < target {
        return Err(PotentialError::InvalidParams(format!("eta = {eta} needs lambda >= 1/2")));
    }
    Ok(dyadic(first_true(lo, half, |m| h2(ratio_f64(dyadic(m))) >= target)))
}

/// A binary linear code stored as packed words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinCode {
    n: usize,
    basis: Vec<u64>,
    words: Vec<u64>,
}

impl BinCode {
    pub fn zero(n: usize) -> Self {
        BinCode { n, basis: Vec::new(), words: vec![0] }
    }

    pub fn from_linear(code: &LinearCode) -> Result<Self, PotentialError> {
        if code.field().order() != 2 {
            return Err(PotentialError::NotBinary);
        }
        let mut c = Self::zero(code.n());
        for r in 0..code.dimension() {
            c = c.extend(pack_binary(code.generator().row(r)));
        }
        Ok(c)
    }

    pub fn from_basis(n: usize, basis: &[u64]) -> Self {
        basis.iter().fold(Self::zero(n), |c, &b| c.extend(b))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn contains(&self, x: u64) -> bool {
        self.words.binary_search(&x).is_ok()
    }

    /// `C + {0, b}`; unchanged when `b` is already a codeword.
    pub fn extend(&self, b: u64) -> BinCode {
        if self.contains(b) {
            return self.clone();
        }
        let mut words: Vec<u64> = self.words.iter().flat_map(|&w| [w, w ^ b]).collect();
        words.sort_unstable();
        let mut basis = self.basis.clone();
        basis.push(b);
        BinCode { n: self.n, basis, words }
    }

    pub fn to_linear(&self) -> LinearCode {
        let f2 = make_field(2).expect("F_2");
        let rows: Vec<_> = self.basis.iter().map(|&b| unpack_binary(b, self.n)).collect();
        if rows.is_empty() {
            LinearCode::from_parity_check(Mat::identity(&f2, self.n))
        } else {
            LinearCode::from_generator(&Mat::from_rows(&f2, self.n, &rows).expect("rows of length n"))
        }
    }

    fn histogram(&self, x: u64, hist: &mut [u32]) {
        hist.iter_mut().for_each(|h| *h = 0);
        for &w in &self.words {
            hist[(w ^ x).count_ones() as usize] += 1;
        }
    }
}

fn space_size(n: usize, cap: u128) -> Result<u64, PotentialError> {
    let size = 1u128 << n;
    if size > cap {
        return Err(PotentialError::TooLarge { n, cap });
    }
    Ok(size as u64)
}

/// Neumaier-compensated sum, in iteration order.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `L_C(x) = sum over codewords y of M(delta(x, y))`.
pub fn weighted_list(code: &BinCode, x: u64, params: &PotentialParams) -> f64 {
    let m = params.m_table();
    code.words.iter().map(|&w| m[(w ^ x).count_ones() as usize]).sum()
}

/// `L_C`, `A_C` and `S_C` over all of `F_2^n`.
#[derive(Clone, Debug)]
pub struct Landscape {
    pub l: Vec<f64>,
    pub a: Vec<f64>,
    pub s: f64,
    pub max_a: f64,
    pub argmax: u64,
}

impl Landscape {
    pub fn new(code: &BinCode, params: &PotentialParams, cap: u128) -> Result<Self, PotentialError> {
        let size = space_size(code.n, cap)?;
        let m = params.m_table();
        let scale = params.n as f64 / (1.0 + params.eta);
        let l: Vec<f64> = (0..size)
            .into_par_iter()
            .map(|x| code.words.iter().map(|&w| m[(w ^ x).count_ones() as usize]).sum())
            .collect();
        let a: Vec<f64> = l.iter().map(|&v| (scale * v).exp2()).collect();
        let s = compensated_sum(a.iter().copied()) / size as f64;
        let (argmax, max_a) = a.iter().enumerate().fold((0u64, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i as u64, v) } else { acc });
        Ok(Landscape { l, a, s, max_a, argmax })
    }

    pub fn t(&self) -> f64 {
        self.s - 1.0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialSummary {
    pub s: f64,
    pub max_a: f64,
    pub argmax: u64,
    pub dim: usize,
    /// `2^(-(n - dim)) max A`, which never exceeds `S`.
    pub coset_lower_bound: f64,
}

pub fn potential_s(code: &BinCode, params: &PotentialParams, cap: u128) -> Result<PotentialSummary, PotentialError> {
    let land = Landscape::new(code, params, cap)?;
    let coset_lower_bound = land.max_a * (-((code.n - code.dim()) as f64)).exp2();
    Ok(PotentialSummary { s: land.s, max_a: land.max_a, argmax: land.argmax, dim: code.dim(), coset_lower_bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingReport {
    pub b_in_code: bool,
    pub l_bound_holds: bool,
    pub a_bound_holds: bool,
    pub equality_everywhere: bool,
    pub first_violation: Option<u64>,
    pub first_strict: Option<u64>,
    /// Both bounds hold and equality everywhere exactly when `b` is not a codeword.
    pub passes: bool,
}

pub fn check_doubling(code: &BinCode, b: u64, params: &PotentialParams, cap: u128) -> Result<DoublingReport, PotentialError> {
    let size = space_size(code.n, cap)?;
    let base = Landscape::new(code, params, cap)?;
    let grown = Landscape::new(&code.extend(b), params, cap)?;
    let mut first_violation = None;
    let mut first_strict = None;
    let mut a_ok = true;
    for x in 0..size {
        let lhs = grown.l[x as usize];
        let rhs = base.l[x as usize] + base.l[(x ^ b) as usize];
        let slack = TOL * rhs.abs().max(1.0);
        if lhs > rhs + slack && first_violation.is_none() {
            first_violation = Some(x);
        }
        if lhs < rhs - slack && first_strict.is_none() {
            first_strict = Some(x);
        }
        let a_rhs = base.a[x as usize] * base.a[(x ^ b) as usize];
        if grown.a[x as usize] > a_rhs * (1.0 + TOL) {
            a_ok = false;
        }
    }
    let b_in_code = code.contains(b);
    let l_ok = first_violation.is_none();
    let equality = l_ok && first_strict.is_none();
    Ok(DoublingReport {
        b_in_code,
        l_bound_holds: l_ok,
        a_bound_holds: a_ok,
        equality_everywhere: equality,
        first_violation,
        first_strict,
        passes: l_ok && a_ok && equality != b_in_code,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovReport {
    pub t: f64,
    /// `1 + 2T + T^1.5`.
    pub threshold: f64,
    pub exceed_count: u64,
    pub total: u64,
    pub frequency: f64,
    /// `T^0.5`.
    pub bound: f64,
    pub holds: bool,
}

/// Exact `S_{C + {0, b}}` for every `b`. For `b` outside `C` doubling is an
/// equality, so the value is `E_x[A(x) A(x + b)] = 1 + 2T + E_x[a(x) a(x + b)]`
/// with `a = A - 1 >= 0`; the last term is accumulated from nonnegative products.
pub fn next_potentials(code: &BinCode, land: &Landscape) -> Vec<f64> {
    let size = land.a.len();
    let support: Vec<(u64, f64)> =
        land.a.iter().enumerate().filter(|(_, &v)| v > 1.0).map(|(x, &v)| (x as u64, v - 1.0)).collect();
    const CHUNK: usize = 256;
    let partial: Vec<Vec<f64>> = support
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0f64; size];
            for &(x, ax) in chunk {
                for &(y, ay) in &support {
                    acc[(x ^ y) as usize] += ax * ay;
                }
            }
            acc
        })
        .collect();
    let t = land.t();
    (0..size)
        .map(|b| {
            if code.contains(b as u64) {
                land.s
            } else {
                let corr = compensated_sum(partial.iter().map(|v| v[b])) / size as f64;
                1.0 + 2.0 * t + corr
            }
        })
        .collect()
}

pub fn markov_step(code: &BinCode, params: &PotentialParams, cap: u128) -> Result<MarkovReport, PotentialError> {
    let land = Landscape::new(code, params, cap)?;
    Ok(markov_from(code, &land))
}

fn markov_from(code: &BinCode, land: &Landscape) -> MarkovReport {
    let next = next_potentials(code, land);
    let t = land.t();
    let threshold = 1.0 + 2.0 * t + t.max(0.0).powf(1.5);
    let exceed_count = next.iter().filter(|&&s| s > threshold * (1.0 + TOL)).count() as u64;
    let total = next.len() as u64;
    let frequency = exceed_count as f64 / total as f64;
    let bound = t.max(0.0).sqrt();
    MarkovReport { t, threshold, exceed_count, total, frequency, bound, holds: frequency < bound || exceed_count == 0 }
}

#[derive(Clone, Debug, Serialize)]
pub struct Step {
    pub i: usize,
    pub b: Option<u64>,
    pub dim: usize,
    pub s: f64,
    pub t: f64,
    pub delta: f64,
    pub good: bool,
    /// Exceedance statistics for the transition out of this code.
    pub markov: Option<MarkovReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub params: PotentialParams,
    pub seed: u64,
    pub stream: u64,
    pub steps: Vec<Step>,
    pub final_s_le_2: bool,
    pub all_good: bool,
    #[serde(skip)]
    pub code: BinCode,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let p = &self.params;
        let mut s = format!(
            "# n={} p={} epsilon={} R={} lambda={} eta={} L={} seed={} stream={}\nstep,S,T,delta,good\n",
            p.n, p.p, p.epsilon, p.rate, p.lambda, p.eta, p.l, self.seed, self.stream
        );
        for st in &self.steps {
            s.push_str(&format!("{},{:.17e},{:.17e},{:.17e},{}\n", st.i, st.s, st.t, st.delta, st.good));
        }
        s
    }
}

/// Grows `C_0 = {0}` by `floor(R n)` i.i.d. uniform vectors, tracking `S`, `T = S - 1`
/// and the thresholds `delta_0 = lambda n 2^(-n(1 - h(lambda) - eta/(1+eta)))`,
/// `delta_i = 2 delta_{i-1} + delta_{i-1}^1.5`.
pub fn grow_code(params: &PotentialParams, seed: u64, stream: u64, with_markov: bool, cap: u128) -> Result<Trajectory, PotentialError> {
    space_size(params.n, cap)?;
    let mut rng = rng_for(seed, stream);
    let k = params.steps();
    let mask = if params.n == 64 { u64::MAX } else { (1u64 << params.n) - 1 };
    let mut code = BinCode::zero(params.n);
    let mut delta = params.delta0();
    let mut steps = Vec::with_capacity(k + 1);
    let mut b = None;
    for i in 0..=k {
        if i > 0 {
            let v: u64 = rng.random::<u64>() & mask;
            code = code.extend(v);
            b = Some(v);
            delta = 2.0 * delta + delta.powf(1.5);
        }
        let land = Landscape::new(&code, params, cap)?;
        let t = land.t();
        let markov = (with_markov && i < k).then(|| markov_from(&code, &land));
        steps.push(Step { i, b, dim: code.dim(), s: land.s, t, delta, good: t <= delta * (1.0 + TOL), markov });
    }
    let final_s_le_2 = steps.last().is_some_and(|s| s.s <= 2.0);
    let all_good = steps.iter().all(|s| s.good);
    Ok(Trajectory { params: params.clone(), seed, stream, steps, final_s_le_2, all_good, code })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropySumReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `sum_{y in D} h(delta(x, y)) >= (|D| - 1 - eta)(1 - R) - (1 + eta)/n` for `D`
/// inside the open ball of radius `lambda` around `x`.
pub fn check_entropy_sum(code: &BinCode, x: u64, d: &[u64], params: &PotentialParams) -> Result<EntropySumReport, PotentialError> {
    let n = params.n as f64;
    let mut dists = Vec::with_capacity(d.len());
    for &y in d {
        let dist = (x ^ y).count_ones() as usize;
        if !code.contains(y) || !params.in_open_ball(dist) {
            return Err(PotentialError::SubsetOutOfBall { y });
        }
        dists.push(dist);
    }
    Ok(entropy_sum_from_distances(&dists, params, n))
}

fn entropy_sum_from_distances(dists: &[usize], params: &PotentialParams, n: f64) -> EntropySumReport {
    let lhs: f64 = dists.iter().map(|&d| h2(d as f64 / n)).sum();
    let rhs = (dists.len() as f64 - 1.0 - params.eta) * (1.0 - params.rate) - (1.0 + params.eta) / n;
    EntropySumReport { lhs, rhs, holds: lhs >= rhs - TOL }
}

fn applicable(code: &BinCode, s: f64, params: &PotentialParams) -> bool {
    s <= 2.0 - TOL && code.dim() as f64 >= params.rate * params.n as f64 - 1e-9
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropySweepReport {
    /// `S_C <= 2` and `|C| >= 2^(Rn)`.
    pub applicable: bool,
    pub s: f64,
    pub x_checked: u64,
    pub violations: u64,
    pub worst_margin: f64,
    pub worst_x: u64,
}

/// Checks every `x` against its hardest subset: each codeword in the open ball adds
/// `h(delta) - (1 - R) < 0` to `lhs - rhs`, so the whole ball is the worst `D`.
pub fn check_entropy_sum_all(code: &BinCode, params: &PotentialParams, cap: u128) -> Result<EntropySweepReport, PotentialError> {
    let size = space_size(code.n, cap)?;
    let land = Landscape::new(code, params, cap)?;
    let n = params.n as f64;
    let mut hist = vec![0u32; params.n + 1];
    let mut violations = 0;
    let mut worst = (f64::INFINITY, 0u64);
    for x in 0..size {
        code.histogram(x, &mut hist);
        let dists: Vec<usize> =
            (0..=params.n).filter(|&d| params.in_open_ball(d)).flat_map(|d| std::iter::repeat_n(d, hist[d] as usize)).collect();
        let r = entropy_sum_from_distances(&dists, params, n);
        if !r.holds {
            violations += 1;
        }
        if r.lhs - r.rhs < worst.0 {
            worst = (r.lhs - r.rhs, x);
        }
    }
    Ok(EntropySweepReport { applicable: applicable(code, land.s, params), s: land.s, x_checked: size, violations, worst_margin: worst.0, worst_x: worst.1 })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub applicable: bool,
    pub s: f64,
    pub l: usize,
    pub l_condition: bool,
    pub x_checked: u64,
    /// Failures of steps (i) through (iv), in order.
    pub step_failures: [u64; 4],
    /// Centers whose `L` nearest codewords average at most `p`.
    pub conclusion_failures: u64,
    pub min_avg_radius: String,
    pub min_avg_above_p: bool,
    /// Whether "no conclusion failures" matches the exhaustive minimum average radius.
    pub agreement: bool,
}

/// Evaluates each link of the chain from `S_C <= 2` to average radius above `p`,
/// at every center with `Lambda` its `L` nearest codewords.
pub fn verify_theorem_chain(code: &BinCode, params: &PotentialParams, cap: u128) -> Result<ChainReport, PotentialError> {
    let size = space_size(code.n, cap)?;
    let land = Landscape::new(code, params, cap)?;
    let l = params.l;
    let n = params.n;
    let nf = n as f64;
    let (r1, eta, eps) = (1.0 - params.rate, params.eta, params.epsilon);
    let hp = h2(params.p_f64());
    let hl = h2(params.lambda_f64());
    let lf = l as f64;
    let mut failures = [0u64; 4];
    let mut conclusion_failures = 0;
    let mut hist = vec![0u32; n + 1];
    if code.words.len() < l {
        return Ok(ChainReport {
            applicable: false,
            s: land.s,
            l,
            l_condition: params.l_condition(),
            x_checked: 0,
            step_failures: failures,
            conclusion_failures: 0,
            min_avg_radius: "undefined".into(),
            min_avg_above_p: false,
            agreement: true,
        });
    }
    for x in 0..size {
        code.histogram(x, &mut hist);
        let mut nearest = Vec::with_capacity(l);
        for (d, &c) in hist.iter().enumerate() {
            nearest.extend(std::iter::repeat_n(d, (c as usize).min(l - nearest.len())));
            if nearest.len() == l {
                break;
            }
        }
        let in_d: Vec<usize> = nearest.iter().copied().filter(|&d| params.in_open_ball(d)).collect();
        let dsz = in_d.len() as f64;
        let sum_hstar: f64 = nearest.iter().map(|&d| h_star(d as f64 / nf)).sum();
        let rhs_i: f64 = in_d.iter().map(|&d| h2(d as f64 / nf)).sum::<f64>() + (lf - dsz) * hl;
        let rhs_ii = (dsz - 1.0 - eta) * r1 + (lf - dsz) * (r1 - eta) - (1.0 + eta) / nf;
        let rhs_iii = lf * hp - (r1 + eta) + lf * (eps - eta) - (1.0 + eta) / nf;
        let checks = [sum_hstar >= rhs_i - TOL, rhs_i >= rhs_ii - TOL, rhs_ii >= rhs_iii - TOL, rhs_iii > lf * hp];
        for (f, ok) in failures.iter_mut().zip(checks) {
            if !ok {
                *f += 1;
            }
        }
        let total: usize = nearest.iter().sum();
        if !(Ratio::from_integer(total as i64) > params.p * Ratio::from_integer((l * n) as i64)) {
            conclusion_failures += 1;
        }
    }
    let linear = code.to_linear();
    let caps = Caps { centers: cap, ..Caps::default() };
    let mar = min_avg_radius(&linear, l, &caps)?;
    let above = Ratio::new(mar.total_distance as i64, (l * n) as i64) > params.p;
    Ok(ChainReport {
        applicable: applicable(code, land.s, params),
        s: land.s,
        l,
        l_condition: params.l_condition(),
        x_checked: size,
        step_failures: failures,
        conclusion_failures,
        min_avg_radius: mar.min.to_string(),
        min_avg_above_p: above,
        agreement: above == (conclusion_failures == 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, k: usize) -> PotentialParams {
        let p = Ratio::new(1, 10);
        let rate = k as f64 / n as f64;
        let eps = 1.0 - h2(0.1) - rate;
        let lam = choose_lambda_at_rate(p, rate, eps, n, default_list_size(0.1, eps)).unwrap();
        PotentialParams::with_dimension(n, p, k, lam.lambda, None).unwrap()
    }

    #[test]
    fn m_function_values() {
        let pp = params(10, 3);
        assert_eq!(pp.m_fn(Ratio::new(1, 2)), 0.0);
        assert!((pp.m_fn(Ratio::new(0, 1)) - (1.0 - pp.rate)).abs() < 1e-12);
        assert!((pp.m_fn(pp.p) - pp.epsilon).abs() < 1e-12);
    }

    #[test]
    fn weighted_list_of_zero_code() {
        let pp = params(10, 3);
        let c = BinCode::zero(10);
        assert!((weighted_list(&c, 0, &pp) - (1.0 - pp.rate)).abs() < 1e-12);
        assert_eq!(weighted_list(&c, 0b1111, &pp), 0.0);
    }

    #[test]
    fn chosen_lambda_meets_condition() {
        let p = Ratio::new(1, 10);
        let eps = 0.05;
        let n = 14;
        let l = default_list_size(0.1, eps);
        let c = choose_lambda(p, eps, n, l).unwrap_err();
        assert!(matches!(c, PotentialError::NoFeasibleLambda { smallest_n: Some(_) }));
        let rate = 3.0 / 10.0;
        let eps = 1.0 - h2(0.1) - rate;
        let c = choose_lambda_at_rate(p, rate, eps, 10, default_list_size(0.1, eps)).unwrap();
        assert!(c.eta < eps && c.eta < c.eta_max + 1e-12);
        assert!(l_condition(default_list_size(0.1, eps), rate, eps, c.eta, 10));
        let below = dyadic(*c.lambda.numer() * ((1i64 << LAMBDA_BITS) / *c.lambda.denom()) - 1);
        assert!(!l_condition(default_list_size(0.1, eps), rate, eps, 1.0 - rate - h2(ratio_f64(below)), 10));
    }

    #[test]
    fn zero_code_potential_below_closed_form() {
        for (n, k) in [(10, 3), (12, 4), (14, 3)] {
            let pp = params(n, k);
            let s = potential_s(&BinCode::zero(n), &pp, DEFAULT_SPACE_CAP).unwrap();
            assert!(s.s >= 1.0);
            assert!(s.s <= pp.s0_bound());
        }
    }

    #[test]
    fn doubling_equality_characterization() {
        let pp = params(10, 3);
        let c = BinCode::from_basis(10, &[0b1011001110, 0b0110110001]);
        let r = check_doubling(&c, 0b1111000011, &pp, DEFAULT_SPACE_CAP).unwrap();
        assert!(!r.b_in_code && r.passes && r.equality_everywhere);
        let r = check_doubling(&c, c.words()[2], &pp, DEFAULT_SPACE_CAP).unwrap();
        assert!(r.b_in_code && r.passes && !r.equality_everywhere);
    }

    #[test]
    fn next_potentials_match_direct_growth() {
        let pp = params(10, 3);
        let c = BinCode::from_basis(10, &[0b1011001110]);
        let land = Landscape::new(&c, &pp, DEFAULT_SPACE_CAP).unwrap();
        let next = next_potentials(&c, &land);
        for b in [0u64, 0b1011001110, 1, 0b1100110011, 1023] {
            let direct = Landscape::new(&c.extend(b), &pp, DEFAULT_SPACE_CAP).unwrap().s;
            assert!((next[b as usize] - direct).abs() < 1e-9 * direct, "b = {b}");
        }
    }

    #[test]
    fn entropy_sum_edge_cases() {
        let pp = params(10, 3);
        let c = BinCode::from_basis(10, &[0b1011001110]);
        let r = check_entropy_sum(&c, 5, &[], &pp).unwrap();
        assert!(r.holds && r.lhs == 0.0 && r.rhs < 0.0);
        let r = check_entropy_sum(&c, 0, &[0], &pp).unwrap();
        assert!(r.holds && r.rhs < 0.0);
        assert!(matches!(check_entropy_sum(&c, 0, &[0b1011001110], &pp), Err(PotentialError::SubsetOutOfBall { .. })));
    }

    #[test]
    fn trajectory_is_reproducible() {
        let pp = params(12, 4);
        let a = grow_code(&pp, 7, 0, false, DEFAULT_SPACE_CAP).unwrap();
        let b = grow_code(&pp, 7, 0, false, DEFAULT_SPACE_CAP).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.steps.len(), 5);
        assert!(a.steps[0].good);
        assert!(a.to_csv().lines().nth(1) == Some("step,S,T,delta,good"));
    }

    #[test]
    fn h_star_is_concave_on_a_grid() {
        for i in 0..=50 {
            for j in 0..=50 {
                let (a, b) = (i as f64 / 50.0, j as f64 / 50.0);
                assert!(h_star((a + b) / 2.0) >= (h_star(a) + h_star(b)) / 2.0 - 1e-12);
            }
        }
        assert_eq!(h_star(0.3), h2(0.3));
    }
}
