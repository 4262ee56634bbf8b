//! The two bad row distributions, their witnesses, and finite checks of the
//! non-rarity lemmas attached to them.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use serde::Serialize;
use thiserror::Error;

use crate::code::{hamming_distance, rng_for};
use crate::decodability::{verify_lists, ListsCheck, Witness};
use crate::gf::{coset_representatives, make_field, prime_power, CosetReps, Elem, Field, GfError, SubfieldEmbedding};
use crate::linalg::{vector_from_index, LinalgError, Mat};
use crate::typedist::{big_ratio, entropy_of, h_q, min_normalized_entropy, ratio_to_f64, round_counts, TypeDist, TypeError};

/// Cap on `q^D` and `q^L` style enumerations inside this module.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BadError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("enumeration of {count} items exceeds the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error("not a construction matrix: {0}")]
    NotAConstructionMatrix(String),
    #[error("all counts are zero")]
    AllZero,
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

fn check_cap(count: u128, cap: u128) -> Result<(), BadError> {
    if count > cap {
        Err(BadError::EnumerationTooLarge { count, cap })
    } else {
        Ok(())
    }
}

fn checked_pow(base: usize, exp: usize) -> u128 {
    (base as u128).checked_pow(exp as u32).unwrap_or(u128::MAX)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LrParams {
    #[serde(serialize_with = "ser_ratio")]
    pub rho: Ratio<i64>,
    pub ell: u32,
    pub t: u32,
    pub d: usize,
}

pub(crate) fn ser_ratio<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl LrParams {
    pub fn new(rho: Ratio<i64>, ell: u32, t: u32, d: usize) -> Result<Self, BadError> {
        if rho.is_negative() || rho >= Ratio::one() {
            return Err(BadError::InvalidParams(format!("rho = {rho} is not in [0, 1)")));
        }
        if prime_power(ell).is_none() {
            return Err(BadError::InvalidParams(format!("ell = {ell} is not a prime power")));
        }
        if t < 2 {
            return Err(BadError::InvalidParams(format!("t = {t} must be at least 2")));
        }
        if d < t as usize {
            return Err(BadError::InvalidParams(format!("D = {d} must be at least t = {t}")));
        }
        if (ell as u64).checked_pow(t).is_none_or(|q| q > 256) {
            return Err(BadError::InvalidParams(format!("q = {ell}^{t} exceeds 256")));
        }
        Ok(LrParams { rho, ell, t, d })
    }

    pub fn q(&self) -> u32 {
        self.ell.pow(self.t)
    }

    /// `L = ell^D`.
    pub fn list_size(&self) -> u128 {
        checked_pow(self.ell as usize, self.d)
    }

    fn rho_f64(&self) -> f64 {
        *self.rho.numer() as f64 / *self.rho.denom() as f64
    }

    /// `rho + (1 - rho) log_q ell + (1 - rho) / (10 D)`.
    pub fn gamma(&self) -> f64 {
        let rho = self.rho_f64();
        let logq_ell = (self.ell as f64).ln() / (self.q() as f64).ln();
        rho + (1.0 - rho) * logq_ell + (1.0 - rho) / (10.0 * self.d as f64)
    }

    /// Whether `epsilon <= (1 - rho) / (20 t)`, the regime of the rate theorem.
    pub fn in_theorem_regime(&self, epsilon: f64) -> bool {
        epsilon > 0.0 && epsilon <= (1.0 - self.rho_f64()) / (20.0 * self.t as f64)
    }

    /// `ell^ceil((1 - rho) / (20 epsilon))`, the list size the rate theorem pairs with `epsilon`.
    pub fn theorem_list_size(&self, epsilon: f64) -> u128 {
        checked_pow(self.ell as usize, ((1.0 - self.rho_f64()) / (20.0 * epsilon)).ceil() as usize)
    }
}

/// Where a row of a realized list-recovery matrix came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrRow {
    /// `v = alpha_i u` with `u` in `F_ell^D` (entries given by their embedded values).
    Coset { i: usize, u: Vec<Elem> },
    /// `v` uniform in `F_q^D`.
    Erased { v: Vec<Elem> },
}

#[derive(Clone, Debug)]
pub struct LrRealization {
    pub m: Mat,
    pub provenance: Vec<LrRow>,
    /// `floor(rho n)`.
    pub erased_rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LrWitness {
    pub lists: Vec<Vec<Elem>>,
    /// Column indices of `M` consistent with the lists (all of them).
    pub columns: Vec<usize>,
    pub check: ListsCheck,
}

impl LrWitness {
    pub fn to_witness(&self, m: &Mat) -> Witness {
        Witness::Lists { lists: self.lists.clone(), codewords: self.columns.iter().map(|&c| m.col(c)).collect() }
    }
}

/// Fixed data of the list-recovery construction: the field, the subfield, coset
/// representatives and the matrix `G` whose rows list `F_ell^D`.
#[derive(Clone, Debug)]
pub struct LrConstruction {
    pub params: LrParams,
    pub field: Field,
    pub emb: SubfieldEmbedding,
    pub reps: CosetReps,
    pub g: Mat,
}

impl LrConstruction {
    pub fn new(params: &LrParams, cap: u128) -> Result<Self, BadError> {
        let field = make_field(params.q())?;
        let emb = field.subfield_embedding(params.ell)?;
        let reps = coset_representatives(&field, &emb)?;
        let g = make_g(&field, &emb, params.d, cap)?;
        Ok(LrConstruction { params: params.clone(), field, emb, reps, g })
    }

    pub fn list_size(&self) -> usize {
        self.g.rows()
    }

    fn subfield_vectors(&self) -> Vec<Vec<Elem>> {
        (0..self.list_size()).map(|r| self.g.row(r).to_vec()).collect()
    }

    fn coset_vector(&self, i: usize, u: &[Elem]) -> Vec<Elem> {
        u.iter().map(|&x| self.field.mul(self.reps.reps[i], x)).collect()
    }

    /// Exact law of `G v`, `v ~ sigma`.
    pub fn tau(&self, cap: u128) -> Result<TypeDist, BadError> {
        let f = &self.field;
        let d = self.params.d;
        let qd = checked_pow(f.order(), d);
        check_cap(qd, cap)?;
        let rho = BigRational::new(BigInt::from(*self.params.rho.numer()), BigInt::from(*self.params.rho.denom()));
        let pairs = (self.reps.len() * self.list_size()) as i64;
        let w_coset = (BigRational::one() - &rho) / BigRational::from_integer(pairs.into());
        let mut outcomes: Vec<(Vec<Elem>, BigRational)> = Vec::new();
        if !w_coset.is_zero() {
            for i in 0..self.reps.len() {
                for u in self.subfield_vectors() {
                    outcomes.push((self.g.matvec(&self.coset_vector(i, &u))?, w_coset.clone()));
                }
            }
        }
        if !rho.is_zero() {
            let w_uniform = rho / BigRational::from_integer(BigInt::from(qd));
            for idx in 0..qd {
                outcomes.push((self.g.matvec(&vector_from_index(f.order(), d, idx))?, w_uniform.clone()));
            }
        }
        Ok(TypeDist::from_weighted(f, self.list_size(), outcomes)?)
    }

    /// Rows drawn with `floor(rho n)` erased rows (rounded uniform over `F_q^D`) and
    /// the rest rounded uniform over pairs `(i, u)`, then shuffled.
    pub fn realize(&self, n: usize, seed: u64, stream: u64) -> Result<LrRealization, BadError> {
        let f = &self.field;
        let d = self.params.d;
        let mut rng = rng_for(seed, stream);
        let erased = (self.params.rho * Ratio::from_integer(n as i64)).floor().to_integer() as usize;
        let mut prov: Vec<LrRow> = Vec::with_capacity(n);

        let us = self.subfield_vectors();
        let pairs = self.reps.len() * us.len();
        let counts = round_counts(&vec![big_ratio(1, pairs as i64); pairs], n - erased, &mut rng);
        for (k, &c) in counts.iter().enumerate() {
            let row = LrRow::Coset { i: k / us.len(), u: us[k % us.len()].clone() };
            prov.extend(std::iter::repeat_n(row, c));
        }
        if erased > 0 {
            let qd = checked_pow(f.order(), d);
            check_cap(qd, DEFAULT_ENUM_CAP)?;
            let counts = round_counts(&vec![big_ratio(1, qd as i64); qd as usize], erased, &mut rng);
            for (idx, &c) in counts.iter().enumerate() {
                let row = LrRow::Erased { v: vector_from_index(f.order(), d, idx as u128) };
                prov.extend(std::iter::repeat_n(row, c));
            }
        }
        prov.shuffle(&mut rng);
        let rows: Vec<Vec<Elem>> = prov.iter().map(|r| self.g.matvec(&self.source_vector(r))).collect::<Result<_, _>>()?;
        Ok(LrRealization { m: Mat::from_rows(f, self.list_size(), &rows)?, provenance: prov, erased_rows: erased })
    }

    fn source_vector(&self, row: &LrRow) -> Vec<Elem> {
        match row {
            LrRow::Coset { i, u } => self.coset_vector(*i, u),
            LrRow::Erased { v } => v.clone(),
        }
    }

    /// Recovers `v` from `G v` (the unit vectors are rows of `G`) and decomposes it
    /// as `alpha_i u` when possible.
    pub fn reconstruct_row(&self, w: &[Elem]) -> Result<LrRow, BadError> {
        let d = self.params.d;
        let ell = self.params.ell as usize;
        let v: Vec<Elem> = (0..d).map(|k| w[ell.pow((d - 1 - k) as u32)]).collect();
        if self.g.matvec(&v)? != w {
            return Err(BadError::NotAConstructionMatrix("row is not of the form G v".into()));
        }
        let Some(&lead) = v.iter().find(|e| !e.is_zero()) else {
            return Ok(LrRow::Coset { i: 0, u: v });
        };
        let i = self.reps.coset_of(lead)?;
        let inv = self.field.inv(self.reps.reps[i])?;
        let u: Vec<Elem> = v.iter().map(|&x| self.field.mul(inv, x)).collect();
        let sub = self.emb.image();
        if u.iter().all(|x| sub.contains(x)) {
            Ok(LrRow::Coset { i, u })
        } else {
            Ok(LrRow::Erased { v })
        }
    }

    /// Lists `S_j = alpha_{i_j} F_ell` on coset rows and `F_q` on erased rows.
    pub fn witness(&self, m: &Mat, provenance: Option<&[LrRow]>) -> Result<LrWitness, BadError> {
        if m.cols() != self.list_size() || m.field() != &self.field {
            return Err(BadError::NotAConstructionMatrix(format!("expected {} columns over F_{}", self.list_size(), self.field.order())));
        }
        let rows: Vec<LrRow> = match provenance {
            Some(p) if p.len() == m.rows() => {
                for (r, row) in p.iter().enumerate() {
                    if self.g.matvec(&self.source_vector(row))? != m.row(r) {
                        return Err(BadError::NotAConstructionMatrix(format!("provenance of row {r} does not match")));
                    }
                }
                p.to_vec()
            }
            Some(_) => return Err(BadError::NotAConstructionMatrix("provenance length differs from row count".into())),
            None => (0..m.rows()).map(|r| self.reconstruct_row(m.row(r))).collect::<Result<_, _>>()?,
        };
        let full: Vec<Elem> = self.field.elements().collect();
        let lists: Vec<Vec<Elem>> = rows
            .iter()
            .map(|r| match r {
                LrRow::Coset { i, .. } => self.reps.scaled_subfield(&self.field, *i),
                LrRow::Erased { .. } => full.clone(),
            })
            .collect();
        let cols: Vec<Vec<Elem>> = (0..m.cols()).map(|c| m.col(c)).collect();
        let columns: Vec<usize> = (0..m.cols()).filter(|&c| cols[c].iter().zip(&lists).all(|(e, s)| s.contains(e))).collect();
        if columns.len() != m.cols() {
            return Err(BadError::NotAConstructionMatrix("a column leaves its lists".into()));
        }
        let alpha = Ratio::one() - self.params.rho;
        let check = verify_lists(&cols, &lists, self.params.ell as usize, alpha, self.list_size());
        Ok(LrWitness { lists, columns, check })
    }
}

/// Rows enumerate `F_ell^D` in lexicographic order, embedded in `F_q`.
pub fn make_g(field: &Field, emb: &SubfieldEmbedding, d: usize, cap: u128) -> Result<Mat, BadError> {
    let l = checked_pow(emb.ell, d);
    check_cap(l, cap)?;
    let rows: Vec<Vec<Elem>> =
        (0..l).map(|i| vector_from_index(emb.ell, d, i).into_iter().map(|x| emb.embed(x)).collect()).collect();
    Ok(Mat::from_rows(field, d, &rows)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LdParams {
    pub q: u32,
    #[serde(serialize_with = "ser_ratio")]
    pub p: Ratio<i64>,
    pub l: usize,
}

impl LdParams {
    /// `p = 0` is accepted as a degenerate case.
    pub fn new(q: u32, p: Ratio<i64>, l: usize) -> Result<Self, BadError> {
        if prime_power(q).is_none() {
            return Err(BadError::InvalidParams(format!("q = {q} is not a prime power")));
        }
        if p.is_negative() || p >= Ratio::one() - Ratio::new(1, q as i64) {
            return Err(BadError::InvalidParams(format!("p = {p} is not below 1 - 1/q")));
        }
        if l < 1 {
            return Err(BadError::InvalidParams("L must be positive".into()));
        }
        Ok(LdParams { q, p, l })
    }

    pub fn p_f64(&self) -> f64 {
        *self.p.numer() as f64 / *self.p.denom() as f64
    }

    pub fn hq_p(&self) -> f64 {
        h_q(self.q as f64, self.p_f64())
    }
}

fn big(r: Ratio<i64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Exact `Ber_q(p)^d`: zero with probability `1 - p`, each nonzero value with `p / (q - 1)`.
pub fn ber_product(field: &Field, p: Ratio<i64>, d: usize, cap: u128) -> Result<TypeDist, BadError> {
    let q = field.order();
    let count = checked_pow(q, d);
    check_cap(count, cap)?;
    let p = big(p);
    let zero_w = BigRational::one() - &p;
    let nz_w = &p / BigRational::from_integer(BigInt::from(q - 1));
    let outcomes = (0..count).filter_map(|i| {
        let v = vector_from_index(q, d, i);
        let nz = v.iter().filter(|e| !e.is_zero()).count();
        let w = num_traits::pow(zero_w.clone(), d - nz) * num_traits::pow(nz_w.clone(), nz);
        (!w.is_zero()).then_some((v, w))
    });
    Ok(TypeDist::from_weighted(field, d, outcomes)?)
}

/// Exact law of `u + alpha 1_L` with `u ~ Ber_q(p)^L` and `alpha` uniform.
pub fn tau_list_decoding(params: &LdParams, cap: u128) -> Result<TypeDist, BadError> {
    let field = make_field(params.q)?;
    check_cap(checked_pow(field.order(), params.l + 1), cap)?;
    let ber = ber_product(&field, params.p, params.l, cap)?;
    let q = BigRational::from_integer(BigInt::from(field.order()));
    let outcomes = field.elements().flat_map(|a| {
        let f = field.clone();
        let q = q.clone();
        ber.support().iter().map(move |(u, w)| (u.iter().map(|&x| f.add(x, a)).collect::<Vec<_>>(), w / &q)).collect::<Vec<_>>()
    });
    Ok(TypeDist::from_weighted(&field, params.l, outcomes)?)
}

/// `alpha_j` and `u^(j)` for one row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LdRow {
    pub u: Vec<Elem>,
    pub alpha: Elem,
}

#[derive(Clone, Debug)]
pub struct LdRealization {
    pub m: Mat,
    pub provenance: Vec<LdRow>,
}

/// Type-level realization; each row is split as `u + alpha 1` with `alpha` its
/// most frequent entry (ties to the smallest value).
pub fn realize_list_decoding(tau: &TypeDist, n: usize, seed: u64, stream: u64) -> Result<LdRealization, BadError> {
    let m = tau.realize_matrix(n, seed, stream)?;
    let provenance = (0..m.rows()).map(|r| decompose_ld_row(m.field(), m.row(r))).collect();
    Ok(LdRealization { m, provenance })
}

pub fn decompose_ld_row(field: &Field, row: &[Elem]) -> LdRow {
    let mut counts = vec![0usize; field.order()];
    for e in row {
        counts[e.index()] += 1;
    }
    let best = counts.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).map_or(0, |(i, _)| i);
    let alpha = Elem(best as u8);
    LdRow { u: row.iter().map(|&x| field.sub(x, alpha)).collect(), alpha }
}

#[derive(Clone, Debug, Serialize)]
pub struct LdWitness {
    pub center: Vec<Elem>,
    pub columns: Vec<usize>,
    pub distances: Vec<usize>,
    /// `ceil(p n)`.
    pub radius: usize,
}

impl LdWitness {
    pub fn to_witness(&self, m: &Mat) -> Witness {
        Witness::Ball { center: self.center.clone(), radius: self.radius, codewords: self.columns.iter().map(|&c| m.col(c)).collect() }
    }
}

/// Center `z = (alpha_1, ..., alpha_n)`; every column must lie within `ceil(p n)`.
pub fn witness_list_decoding(m: &Mat, provenance: Option<&[LdRow]>, p: Ratio<i64>) -> Result<LdWitness, BadError> {
    let f = m.field();
    let rows: Vec<LdRow> = match provenance {
        Some(pr) if pr.len() == m.rows() => {
            for (r, row) in pr.iter().enumerate() {
                let rebuilt: Vec<Elem> = row.u.iter().map(|&x| f.add(x, row.alpha)).collect();
                if rebuilt != m.row(r) {
                    return Err(BadError::NotAConstructionMatrix(format!("provenance of row {r} does not match")));
                }
            }
            pr.to_vec()
        }
        Some(_) => return Err(BadError::NotAConstructionMatrix("provenance length differs from row count".into())),
        None => (0..m.rows()).map(|r| decompose_ld_row(f, m.row(r))).collect(),
    };
    let center: Vec<Elem> = rows.iter().map(|r| r.alpha).collect();
    let radius = (p * Ratio::from_integer(m.rows() as i64)).ceil().to_integer() as usize;
    let distances: Vec<usize> =
        (0..m.cols()).map(|c| hamming_distance(&m.col(c), &center).expect("equal lengths")).collect();
    if let Some((c, d)) = distances.iter().enumerate().find(|(_, &d)| d > radius) {
        return Err(BadError::NotAConstructionMatrix(format!("column {c} is at distance {d} > {radius}")));
    }
    Ok(LdWitness { center, columns: (0..m.cols()).collect(), distances, radius })
}

/// `log2 N1 - log2(1 + 2 N2 / N1)` with `N2 = sum C(n_z, 2)`.
pub fn collision_bound(ns: &[u64]) -> Result<f64, BadError> {
    let n1: u64 = ns.iter().sum();
    if n1 == 0 {
        return Err(BadError::AllZero);
    }
    let n2: f64 = ns.iter().map(|&x| x as f64 * (x as f64 - 1.0) / 2.0).sum();
    let n1f = n1 as f64;
    Ok(n1f.log2() - (1.0 + 2.0 * n2 / n1f).log2())
}

/// Entropy in bits of `n_z / N1`.
pub fn count_entropy(ns: &[u64]) -> Result<f64, BadError> {
    let n1: u64 = ns.iter().sum();
    if n1 == 0 {
        return Err(BadError::AllZero);
    }
    Ok(entropy_of(ns.iter().map(|&x| x as f64 / n1 as f64), 2.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct LrLemmaReport {
    pub params: LrParams,
    pub gamma: f64,
    pub not_rare: bool,
    pub min_ratio: f64,
    pub argmin: String,
    pub margin: f64,
    pub identity_entropy: f64,
    /// `log_q(q ell^(D-1))`.
    pub identity_estimate: f64,
    pub support_size: usize,
}

/// Exhaustive rarity search at the lemma's threshold.
pub fn check_lemma_lr(params: &LrParams, tol: f64, cap: u128) -> Result<LrLemmaReport, BadError> {
    let con = LrConstruction::new(params, DEFAULT_ENUM_CAP)?;
    let tau = con.tau(DEFAULT_ENUM_CAP)?;
    let gamma = params.gamma();
    let (min_ratio, argmin) = min_normalized_entropy(&tau, cap)?;
    let q = params.q() as f64;
    Ok(LrLemmaReport {
        params: params.clone(),
        gamma,
        not_rare: min_ratio >= gamma - tol,
        min_ratio,
        argmin: argmin.to_text(),
        margin: min_ratio - gamma,
        identity_entropy: tau.entropy_q(),
        identity_estimate: (q * (params.ell as f64).powi(params.d as i32 - 1)).ln() / q.ln(),
        support_size: tau.support_size(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LdLemmaReport {
    pub params: LdParams,
    pub delta: f64,
    pub min_ratio: f64,
    pub argmin: String,
    /// `h_q(p)`.
    pub baseline: f64,
    /// `h_q(p) + h_q(p) / (L + delta)`.
    pub refined: f64,
    pub baseline_holds: bool,
    pub baseline_margin: f64,
    /// Informational only: the lemma promises this only for large enough `L`.
    pub refined_margin: f64,
    /// `H_q` of the sum of all coordinates.
    pub ones_row_entropy: f64,
    /// `H_q` of the first coordinate.
    pub first_coordinate_entropy: f64,
}

pub fn check_lemma_ld(params: &LdParams, delta: f64, tol: f64, cap: u128) -> Result<LdLemmaReport, BadError> {
    let tau = tau_list_decoding(params, DEFAULT_ENUM_CAP)?;
    let f = tau.field().clone();
    let (min_ratio, argmin) = min_normalized_entropy(&tau, cap)?;
    let baseline = params.hq_p();
    let refined = baseline + baseline / (params.l as f64 + delta);
    let ones = Mat::from_rows(&f, params.l, &[vec![Elem::ONE; params.l]])?;
    let mut e1 = vec![Elem::ZERO; params.l];
    e1[0] = Elem::ONE;
    let e1 = Mat::from_rows(&f, params.l, &[e1])?;
    Ok(LdLemmaReport {
        params: params.clone(),
        delta,
        min_ratio,
        argmin: argmin.to_text(),
        baseline,
        refined,
        baseline_holds: min_ratio >= baseline - tol,
        baseline_margin: min_ratio - baseline,
        refined_margin: min_ratio - refined,
        ones_row_entropy: tau.pushforward(&ones)?.entropy_q(),
        first_coordinate_entropy: tau.pushforward(&e1)?.entropy_q(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BerBoundReport {
    pub d: usize,
    pub entropy: f64,
    /// `d h_q(p)`.
    pub baseline: f64,
    /// `(d - 1) h_q(p) + h_q(p*)`, or zero when `d = 0`.
    pub chain_bound: f64,
    pub p_star: f64,
    /// `d (h_q(p) + h_q(p) / (L + delta))` when `(L, delta)` is supplied.
    pub target: Option<f64>,
    pub baseline_holds: bool,
}

/// `P[v_1 + alpha w_1 != 0] = (1-p')p + (1-p)p' + (q-2) p p' / (q-1)`.
pub fn p_star(q: f64, p: f64, p_prime: f64) -> f64 {
    (1.0 - p_prime) * p + (1.0 - p) * p_prime + (q - 2.0) * p * p_prime / (q - 1.0)
}

/// Exact entropy of `v + alpha w` for `v ~ Ber_q(p)^d`, `alpha ~ Ber_q(p')`.
pub fn check_ber_p_bound(
    q: u32,
    p: Ratio<i64>,
    p_prime: Ratio<i64>,
    w: &[Elem],
    list: Option<(usize, f64)>,
    tol: f64,
    cap: u128,
) -> Result<BerBoundReport, BadError> {
    let field = make_field(q)?;
    let top = Ratio::one() - Ratio::new(1, q as i64);
    if p.is_negative() || p > p_prime || p_prime > top {
        return Err(BadError::InvalidParams(format!("need 0 <= p <= p' <= 1 - 1/q, got p = {p}, p' = {p_prime}")));
    }
    if w.iter().any(|e| e.is_zero() || e.index() >= field.order()) {
        return Err(BadError::InvalidParams("w must have nonzero entries in F_q".into()));
    }
    let d = w.len();
    check_cap(checked_pow(field.order(), d + 1), cap)?;
    let v = ber_product(&field, p, d, cap)?;
    let a = ber_product(&field, p_prime, 1, cap)?;
    let mut law: BTreeMap<Vec<Elem>, BigRational> = BTreeMap::new();
    for (x, px) in v.support() {
        for (al, pa) in a.support() {
            let y: Vec<Elem> = x.iter().zip(w).map(|(&xi, &wi)| field.add(xi, field.mul(al[0], wi))).collect();
            *law.entry(y).or_insert_with(BigRational::zero) += px * pa;
        }
    }
    let entropy = entropy_of(law.values().map(ratio_to_f64), q as f64);
    let pf = p.to_f64().unwrap_or(f64::NAN);
    let ppf = p_prime.to_f64().unwrap_or(f64::NAN);
    let hq = h_q(q as f64, pf);
    let ps = p_star(q as f64, pf, ppf);
    let baseline = d as f64 * hq;
    Ok(BerBoundReport {
        d,
        entropy,
        baseline,
        chain_bound: if d == 0 { 0.0 } else { (d as f64 - 1.0) * hq + h_q(q as f64, ps) },
        p_star: ps,
        target: list.map(|(l, delta)| d as f64 * (hq + hq / (l as f64 + delta))),
        baseline_holds: entropy >= baseline - tol,
    })
}

/// `floor(h_q(p) / epsilon - delta)`, the list size in the list-decoding rate theorem.
pub fn ld_list_size_theorem(hq_p: f64, epsilon: f64, delta: f64) -> i64 {
    (hq_p / epsilon - delta).floor() as i64
}

/// `floor(h_q(p) / epsilon + 0.99)`, the variant quoted in the summary of results.
pub fn ld_list_size_summary(hq_p: f64, epsilon: f64) -> i64 {
    (hq_p / epsilon + 0.99).floor() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_SUBSPACE_CAP;
    use crate::typedist::{h2, DEFAULT_TOLERANCE};

    fn lr(rho: Ratio<i64>) -> LrConstruction {
        LrConstruction::new(&LrParams::new(rho, 2, 2, 2).unwrap(), DEFAULT_ENUM_CAP).unwrap()
    }

    #[test]
    fn g_matrices() {
        let f4 = make_field(4).unwrap();
        let emb = f4.subfield_embedding(2).unwrap();
        let g = make_g(&f4, &emb, 1, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(g.row_vecs(), vec![vec![Elem(0)], vec![Elem(1)]]);
        let g = make_g(&f4, &emb, 2, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!((g.rows(), g.rank()), (4, 2));

        let f9 = make_field(9).unwrap();
        let emb3 = f9.subfield_embedding(3).unwrap();
        let g = make_g(&f9, &emb3, 2, DEFAULT_ENUM_CAP).unwrap();
        let rows = g.row_vecs();
        assert_eq!(rows.len(), 9);
        assert!(rows.contains(&vec![Elem(1), Elem(0)]) && rows.contains(&vec![Elem(0), Elem(1)]));
    }

    #[test]
    fn lr_tau_support_and_zero_mass() {
        let c = lr(Ratio::new(0, 1));
        let tau = c.tau(DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(tau.support_size(), 10);
        assert_eq!(tau.prob(&[Elem(0); 4]), big_ratio(1, 4));

        let c = lr(Ratio::new(1, 2));
        let tau = c.tau(DEFAULT_ENUM_CAP).unwrap();
        assert!(tau.prob(&[Elem(0); 4]) >= big_ratio(1, 8) + big_ratio(1, 32));
    }

    #[test]
    fn lr_witness_rho_zero() {
        let c = lr(Ratio::new(0, 1));
        let r = c.realize(12, 5, 0).unwrap();
        assert_eq!(r.erased_rows, 0);
        let w = c.witness(&r.m, Some(&r.provenance)).unwrap();
        assert!(w.lists.iter().all(|s| s.len() == 2));
        assert_eq!(w.check.consistent_distinct, 4);
        assert!(w.check.violates);
        let w2 = c.witness(&r.m, None).unwrap();
        assert!(w2.check.violates);
    }

    #[test]
    fn lr_lemma_threshold_values() {
        let p0 = LrParams::new(Ratio::new(0, 1), 2, 2, 2).unwrap();
        assert!((p0.gamma() - 0.55).abs() < 1e-12);
        let p1 = LrParams::new(Ratio::new(1, 2), 2, 2, 2).unwrap();
        assert!((p1.gamma() - 0.775).abs() < 1e-12);
        assert!(LrParams::new(Ratio::new(0, 1), 2, 1, 2).is_err());
        assert!(LrParams::new(Ratio::new(0, 1), 2, 3, 2).is_err());
    }

    #[test]
    fn ld_tau_examples() {
        let t = tau_list_decoding(&LdParams::new(2, Ratio::new(1, 4), 2).unwrap(), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(t.prob(&[Elem(0), Elem(0)]), big_ratio(5, 16));
        assert_eq!(t.prob(&[Elem(1), Elem(1)]), big_ratio(5, 16));

        let t = tau_list_decoding(&LdParams::new(3, Ratio::new(0, 1), 3).unwrap(), DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(t.support_size(), 3);
        assert_eq!(t.prob(&[Elem(2); 3]), big_ratio(1, 3));
    }

    #[test]
    fn ld_witness_within_radius() {
        let params = LdParams::new(2, Ratio::new(1, 4), 3).unwrap();
        let tau = tau_list_decoding(&params, DEFAULT_ENUM_CAP).unwrap();
        let r = realize_list_decoding(&tau, 16, 11, 0).unwrap();
        let w = witness_list_decoding(&r.m, Some(&r.provenance), params.p).unwrap();
        assert_eq!(w.radius, 4);
        assert!(w.distances.iter().all(|&d| d <= 4));
        for (c, &d) in w.distances.iter().enumerate() {
            assert_eq!(d, r.provenance.iter().filter(|row| !row.u[c].is_zero()).count());
        }
    }

    #[test]
    fn collision_bound_examples() {
        assert!((collision_bound(&[1, 1, 1, 1]).unwrap() - 2.0).abs() < 1e-12);
        assert!(collision_bound(&[2]).unwrap().abs() < 1e-12);
        let b = collision_bound(&[2, 1, 1]).unwrap();
        assert!((b - (2.0 - 1.5f64.log2())).abs() < 1e-12);
        assert!((count_entropy(&[2, 1, 1]).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(collision_bound(&[0, 0]), Err(BadError::AllZero));
    }

    #[test]
    fn ber_bound_examples() {
        let r = check_ber_p_bound(3, Ratio::new(1, 4), Ratio::new(2, 3), &[Elem(1)], None, 1e-12, DEFAULT_ENUM_CAP).unwrap();
        assert!((r.entropy - 1.0).abs() < 1e-12);
        let r = check_ber_p_bound(2, Ratio::new(1, 4), Ratio::new(1, 4), &[], None, 1e-12, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!((r.entropy, r.baseline), (0.0, 0.0));
        let r = check_ber_p_bound(2, Ratio::new(1, 4), Ratio::new(1, 4), &[Elem(1); 3], Some((3, 0.5)), 1e-12, DEFAULT_ENUM_CAP).unwrap();
        assert!(r.entropy >= 3.0 * h2(0.25));
        assert!(r.entropy >= r.chain_bound - 1e-12);
    }

    #[test]
    fn lemma_ld_small_case() {
        let r = check_lemma_ld(&LdParams::new(2, Ratio::new(1, 4), 2).unwrap(), 0.5, DEFAULT_TOLERANCE, DEFAULT_SUBSPACE_CAP).unwrap();
        assert!(r.baseline_holds);
        assert!((r.first_coordinate_entropy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn list_size_formulas() {
        assert_eq!(ld_list_size_theorem(0.5, 0.1, 0.5), 4);
        assert_eq!(ld_list_size_summary(0.5, 0.1), 5);
        let p = LrParams::new(Ratio::new(0, 1), 2, 2, 2).unwrap();
        assert!(p.in_theorem_regime(0.025));
        assert_eq!(p.theorem_list_size(0.025), 4);
    }
}
