//! Arithmetic in small finite fields `F_q`, `q = p^t <= 256`.
//!
//! Elements are indices in `[0, q)`: the index of `c_0 + c_1 x + ... + c_{t-1} x^{t-1}`
//! is `c_0 + c_1 p + ... + c_{t-1} p^{t-1}`, so `0` is the additive identity and `1`
//! the multiplicative identity. Each field is built from the lexicographically
//! smallest monic irreducible of degree `t` over `F_p` and carries full addition and
//! multiplication tables together with log/antilog tables for a verified generator.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("field order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooLarge(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero has no multiplicative coset")]
    ZeroHasNoCoset,
    #[error("F_{ell} is not a subfield of F_{q}")]
    NotASubfield { q: usize, ell: usize },
    #[error("coset representatives need a proper extension (q = ell^t with t >= 2)")]
    DegenerateExtension,
    #[error("value {value} is not an element of F_{q}")]
    OutOfRange { value: u32, q: usize },
}

/// A field element, stored as its index in `[0, q)`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Elem(pub u8);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct Tables {
    p: u32,
    t: u32,
    q: usize,
    modulus: Vec<u8>,
    generator: Elem,
    log: Vec<u16>,
    antilog: Vec<u8>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

/// An immutable, cheaply clonable handle to a finite field.
#[derive(Clone)]
pub struct Field(Arc<Tables>);

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.q == other.0.q
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.0.q)
    }
}

/// Factor `q` as `p^t` with `p` prime.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut t = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        t += 1;
    }
    (rest == 1).then_some((p, t))
}

/// Build `F_q` with the canonical modulus for `(p, t)`.
pub fn make_field(q: u32) -> Result<Field, GfError> {
    let (p, t) = prime_power(q).ok_or(GfError::NotPrimePower(q))?;
    if q > MAX_ORDER {
        return Err(GfError::OrderTooLarge(q));
    }
    let modulus = smallest_irreducible(p, t);
    let q = q as usize;

    let mut add = vec![0u8; q * q];
    let mut mul = vec![0u8; q * q];
    for a in 0..q {
        let da = digits(a, p, t);
        for b in 0..q {
            let db = digits(b, p, t);
            let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
            add[a * q + b] = undigits(&sum, p) as u8;
            mul[a * q + b] = undigits(&poly_mul_mod(&da, &db, &modulus, p), p) as u8;
        }
    }

    let mut neg = vec![0u8; q];
    let mut inv = vec![0u8; q];
    for a in 0..q {
        neg[a] = (0..q).find(|&b| add[a * q + b] == 0).expect("additive inverse") as u8;
        if a != 0 {
            inv[a] = (1..q).find(|&b| mul[a * q + b] == 1).expect("field has inverses") as u8;
        }
    }

    // Smallest element of multiplicative order q - 1.
    let generator = (1..q)
        .find(|&g| {
            let mut x = g;
            let mut order = 1;
            while x != 1 {
                x = mul[x * q + g] as usize;
                order += 1;
            }
            order == q - 1
        })
        .expect("multiplicative group is cyclic") as u8;

    let mut log = vec![0u16; q];
    let mut antilog = vec![0u8; q];
    let mut x = 1usize;
    for (i, slot) in antilog.iter_mut().enumerate().take(q - 1) {
        *slot = x as u8;
        log[x] = i as u16;
        x = mul[x * q + generator as usize] as usize;
    }
    antilog[q - 1] = 1;
    for a in 1..q {
        assert_eq!(antilog[log[a] as usize] as usize, a, "log/antilog tables disagree");
    }

    Ok(Field(Arc::new(Tables {
        p,
        t,
        q,
        modulus: modulus.iter().map(|&c| c as u8).collect(),
        generator: Elem(generator),
        log,
        antilog,
        add,
        mul,
        neg,
        inv,
    })))
}

fn digits(mut a: usize, p: u32, t: u32) -> Vec<u32> {
    (0..t)
        .map(|_| {
            let d = (a % p as usize) as u32;
            a /= p as usize;
            d
        })
        .collect()
}

fn undigits(d: &[u32], p: u32) -> usize {
    d.iter().rev().fold(0usize, |acc, &c| acc * p as usize + c as usize)
}

/// `a * b mod modulus` over `F_p`; `modulus` is monic of degree `a.len()`.
fn poly_mul_mod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let t = a.len();
    let mut prod = vec![0u32; 2 * t];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for deg in (t..2 * t).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        // subtract c * x^{deg-t} * modulus
        for (k, &m) in modulus.iter().enumerate() {
            let idx = deg - t + k;
            prod[idx] = (prod[idx] + p * p - (c * m) % p) % p;
        }
    }
    prod.truncate(t);
    prod
}

/// Remainder of `a` modulo monic `m` over `F_p` (coefficients low to high).
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if c != 0 {
            for (k, &mk) in m.iter().enumerate() {
                r[shift + k] = (r[shift + k] + p * p - (c * mk) % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        for idx in 0..(p as usize).pow(d as u32) {
            let mut g = digits(idx, p, d as u32);
            g.push(1);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible of degree `t` over `F_p`,
/// ordered by the index of its lower coefficients. Returned low to high.
fn smallest_irreducible(p: u32, t: u32) -> Vec<u32> {
    if t == 1 {
        return vec![0, 1];
    }
    (0..(p as usize).pow(t))
        .map(|idx| {
            let mut f = digits(idx, p, t);
            f.push(1);
            f
        })
        .find(|f| is_irreducible(f, p))
        .expect("irreducible polynomials exist in every degree")
}

impl Field {
    #[inline]
    pub fn order(&self) -> usize {
        self.0.q
    }

    pub fn characteristic(&self) -> u32 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.t
    }

    /// Coefficients of the defining polynomial, lowest degree first.
    pub fn modulus(&self) -> &[u8] {
        &self.0.modulus
    }

    pub fn generator(&self) -> Elem {
        self.0.generator
    }

    pub fn log_table(&self) -> &[u16] {
        &self.0.log
    }

    pub fn antilog_table(&self) -> &[u8] {
        &self.0.antilog
    }

    pub fn elem(&self, value: u32) -> Result<Elem, GfError> {
        if (value as usize) < self.0.q {
            Ok(Elem(value as u8))
        } else {
            Err(GfError::OutOfRange { value, q: self.0.q })
        }
    }

    /// All elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..self.0.q).map(|v| Elem(v as u8))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Elem> + '_ {
        (1..self.0.q).map(|v| Elem(v as u8))
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.0.add[a.index() * self.0.q + b.index()])
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        Elem(self.0.neg[a.index()])
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.0.mul[a.index() * self.0.q + b.index()])
    }

    pub fn inv(&self, a: Elem) -> Result<Elem, GfError> {
        if a.is_zero() {
            Err(GfError::DivisionByZero)
        } else {
            Ok(Elem(self.0.inv[a.index()]))
        }
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return Elem::ONE;
        }
        if a.is_zero() {
            return Elem::ZERO;
        }
        let order = (self.0.q - 1) as u64;
        let l = self.0.log[a.index()] as u64;
        Elem(self.0.antilog[((l * (e % order)) % order) as usize])
    }

    /// Discrete log with respect to [`Field::generator`]; `None` for zero.
    pub fn log(&self, a: Elem) -> Option<u32> {
        (!a.is_zero()).then(|| self.0.log[a.index()] as u32)
    }

    pub fn antilog(&self, i: u32) -> Elem {
        Elem(self.0.antilog[(i as usize) % (self.0.q - 1)])
    }

    /// `a * b` by polynomial multiplication modulo the defining polynomial,
    /// bypassing the tables.
    pub fn mul_schoolbook(&self, a: Elem, b: Elem) -> Elem {
        let (p, t) = (self.0.p, self.0.t);
        let m: Vec<u32> = self.0.modulus.iter().map(|&c| c as u32).collect();
        let r = poly_mul_mod(&digits(a.index(), p, t), &digits(b.index(), p, t), &m, p);
        Elem(undigits(&r, p) as u8)
    }

    /// The embedding of `F_ell` into this field, if `F_ell` is a subfield.
    pub fn subfield_embedding(&self, ell: u32) -> Result<SubfieldEmbedding, GfError> {
        let not_sub = GfError::NotASubfield { q: self.0.q, ell: ell as usize };
        let (lp, lt) = prime_power(ell).ok_or(not_sub.clone())?;
        if lp != self.0.p || !self.0.t.is_multiple_of(lt) {
            return Err(not_sub);
        }
        let sub = make_field(ell)?;
        let p = self.0.p;
        let image: Vec<Elem> = if lt == 1 {
            // prime subfield: constants
            (0..ell).map(|c| Elem(c as u8)).collect()
        } else {
            let sub_mod: Vec<u32> = sub.modulus().iter().map(|&c| c as u32).collect();
            let eval = |x: Elem, coeffs: &[u32]| {
                coeffs.iter().rev().fold(Elem::ZERO, |acc, &c| self.add(self.mul(acc, x), Elem(c as u8)))
            };
            let root = self
                .elements()
                .find(|&x| eval(x, &sub_mod).is_zero())
                .expect("subfield modulus splits in the extension");
            (0..ell as usize).map(|idx| eval(root, &digits(idx, p, lt))).collect()
        };
        let emb = SubfieldEmbedding { ell: ell as usize, degree: self.0.t / lt, sub, image };
        debug_assert!(emb.is_homomorphism(self));
        Ok(emb)
    }
}

/// An injective field homomorphism `F_ell -> F_q`.
#[derive(Clone, Debug)]
pub struct SubfieldEmbedding {
    pub ell: usize,
    /// Extension degree `t` with `q = ell^t`.
    pub degree: u32,
    pub sub: Field,
    image: Vec<Elem>,
}

impl SubfieldEmbedding {
    #[inline]
    pub fn embed(&self, a: Elem) -> Elem {
        self.image[a.index()]
    }

    pub fn image(&self) -> &[Elem] {
        &self.image
    }

    /// Exhaustive additivity, multiplicativity and injectivity check.
    pub fn is_homomorphism(&self, big: &Field) -> bool {
        let sub = &self.sub;
        let mut seen = vec![false; big.order()];
        for a in sub.elements() {
            if std::mem::replace(&mut seen[self.embed(a).index()], true) {
                return false;
            }
            for b in sub.elements() {
                if self.embed(sub.add(a, b)) != big.add(self.embed(a), self.embed(b))
                    || self.embed(sub.mul(a, b)) != big.mul(self.embed(a), self.embed(b))
                {
                    return false;
                }
            }
        }
        self.embed(Elem::ZERO).is_zero() && self.embed(Elem::ONE) == Elem::ONE
    }
}

/// Representatives `alpha_i` whose cosets `alpha_i * F_ell^*` partition `F_q^*`.
#[derive(Clone, Debug)]
pub struct CosetReps {
    pub reps: Vec<Elem>,
    coset_index: Vec<u16>,
    subfield_nonzero: Vec<Elem>,
}

/// Greedy partition of `F_q^*` in index order: the smallest uncovered element
/// becomes the next representative.
pub fn coset_representatives(field: &Field, emb: &SubfieldEmbedding) -> Result<CosetReps, GfError> {
    if emb.degree < 2 {
        return Err(GfError::DegenerateExtension);
    }
    let subfield_nonzero: Vec<Elem> = emb.sub.nonzero().map(|a| emb.embed(a)).collect();
    let mut coset_index = vec![u16::MAX; field.order()];
    let mut reps = Vec::new();
    for x in field.nonzero() {
        if coset_index[x.index()] != u16::MAX {
            continue;
        }
        let i = reps.len() as u16;
        reps.push(x);
        for &g in &subfield_nonzero {
            coset_index[field.mul(x, g).index()] = i;
        }
    }
    Ok(CosetReps { reps, coset_index, subfield_nonzero })
}

impl CosetReps {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Index `i` with `x` in `alpha_i * F_ell^*`.
    pub fn coset_of(&self, x: Elem) -> Result<usize, GfError> {
        if x.is_zero() {
            return Err(GfError::ZeroHasNoCoset);
        }
        Ok(self.coset_index[x.index()] as usize)
    }

    /// The set `alpha_i * F_ell` (including zero), sorted by index.
    pub fn scaled_subfield(&self, field: &Field, i: usize) -> Vec<Elem> {
        let mut s: Vec<Elem> = std::iter::once(Elem::ZERO)
            .chain(self.subfield_nonzero.iter().map(|&g| field.mul(self.reps[i], g)))
            .collect();
        s.sort();
        s
    }

    /// Embedded `F_ell^*`.
    pub fn subfield_nonzero(&self) -> &[Elem] {
        &self.subfield_nonzero
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_prime_powers_and_large_orders() {
        assert_eq!(make_field(6).unwrap_err(), GfError::NotPrimePower(6));
        assert_eq!(make_field(1).unwrap_err(), GfError::NotPrimePower(1));
        assert_eq!(make_field(512).unwrap_err(), GfError::OrderTooLarge(512));
        assert!(make_field(257).is_err());
    }

    #[test]
    fn binary_field_is_xor() {
        let f = make_field(2).unwrap();
        for a in 0..2u8 {
            for b in 0..2u8 {
                assert_eq!(f.add(Elem(a), Elem(b)), Elem(a ^ b));
                assert_eq!(f.mul(Elem(a), Elem(b)), Elem(a & b));
            }
        }
    }

    #[test]
    fn f4_omega_squared_is_omega_plus_one() {
        let f = make_field(4).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        let omega = Elem(2);
        // omega + 1 has index 3
        assert_eq!(f.mul(omega, omega), Elem(3));
        assert_eq!(f.add(omega, Elem::ONE), Elem(3));
    }

    #[test]
    fn f9_uses_x2_plus_1() {
        let f = make_field(9).unwrap();
        assert_eq!(f.modulus(), &[1, 0, 1]);
        let x = Elem(3);
        assert_eq!(f.mul(x, x), Elem(2));
    }

    #[test]
    fn canonical_moduli() {
        assert_eq!(make_field(8).unwrap().modulus(), &[1, 1, 0, 1]);
        assert_eq!(make_field(16).unwrap().modulus(), &[1, 1, 0, 0, 1]);
        assert_eq!(make_field(256).unwrap().modulus(), &[1, 1, 0, 1, 1, 0, 0, 0, 1]);
    }

    #[test]
    fn inverse_and_char2_doubling() {
        for q in [2, 4, 8, 16, 32] {
            let f = make_field(q).unwrap();
            for a in f.elements() {
                assert!(f.add(a, a).is_zero());
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), Elem::ONE);
                }
            }
            assert_eq!(f.inv(Elem::ZERO), Err(GfError::DivisionByZero));
        }
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let f = make_field(27).unwrap();
        for a in f.elements() {
            let mut acc = Elem::ONE;
            for e in 0..60u64 {
                assert_eq!(f.pow(a, e), acc);
                acc = f.mul(acc, a);
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let a = make_field(64).unwrap();
        let b = make_field(64).unwrap();
        assert_eq!(a.log_table(), b.log_table());
        assert_eq!(a.antilog_table(), b.antilog_table());
        assert_eq!(a.generator(), b.generator());
    }

    #[test]
    fn f4_over_f2_cosets() {
        let f = make_field(4).unwrap();
        let emb = f.subfield_embedding(2).unwrap();
        let reps = coset_representatives(&f, &emb).unwrap();
        assert_eq!(reps.reps, vec![Elem(1), Elem(2), Elem(3)]);
        for x in f.nonzero() {
            assert_eq!(reps.reps[reps.coset_of(x).unwrap()], x);
        }
        assert_eq!(reps.coset_of(Elem::ZERO), Err(GfError::ZeroHasNoCoset));
    }

    #[test]
    fn trivial_extension_has_no_cosets() {
        let f = make_field(4).unwrap();
        let emb = f.subfield_embedding(4).unwrap();
        assert_eq!(coset_representatives(&f, &emb).unwrap_err(), GfError::DegenerateExtension);
    }

    #[test]
    fn f16_over_f4_has_five_cosets() {
        let f = make_field(16).unwrap();
        let emb = f.subfield_embedding(4).unwrap();
        assert!(emb.is_homomorphism(&f));
        let reps = coset_representatives(&f, &emb).unwrap();
        assert_eq!(reps.len(), 5);
        for &g in reps.subfield_nonzero() {
            let x = f.mul(reps.reps[2], g);
            assert_eq!(reps.coset_of(x).unwrap(), 2);
        }
    }

    #[test]
    fn non_subfields_are_rejected() {
        let f = make_field(8).unwrap();
        assert!(f.subfield_embedding(4).is_err());
        assert!(f.subfield_embedding(3).is_err());
        let f = make_field(16).unwrap();
        assert!(f.subfield_embedding(8).is_err());
    }
}
