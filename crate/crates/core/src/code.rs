//! Random linear codes as kernels of uniform parity-check matrices.

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf::{Elem, Field};
use crate::linalg::{LinalgError, Mat};

/// Default cap on `q^dim` for codeword enumeration.
pub const DEFAULT_CODEWORD_CAP: u128 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid rate: {0}")]
    InvalidRate(String),
    #[error("code has {count} codewords, above the cap of {cap}")]
    CodeTooLarge { count: u128, cap: u128 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Seeded generator for stream `stream` of experiment `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_vector<R: Rng + ?Sized>(field: &Field, len: usize, rng: &mut R) -> Vec<Elem> {
    let q = field.order() as u32;
    (0..len).map(|_| Elem(rng.random_range(0..q) as u8)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    n: usize,
    parity_check: Mat,
    generator: Mat,
}

impl LinearCode {
    pub fn from_parity_check(parity_check: Mat) -> Self {
        let generator = parity_check.kernel_basis();
        LinearCode { n: parity_check.cols(), parity_check, generator }
    }

    /// The row space of `generator`; rows need not be independent.
    pub fn from_generator(generator: &Mat) -> Self {
        let parity_check = generator.kernel_basis();
        Self::from_parity_check(parity_check)
    }

    pub fn field(&self) -> &Field {
        self.generator.field()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.generator.rows()
    }

    pub fn rate(&self) -> Ratio<usize> {
        Ratio::new(self.dimension(), self.n)
    }

    pub fn parity_check(&self) -> &Mat {
        &self.parity_check
    }

    /// Kernel basis of the parity check, one row per non-pivot column.
    pub fn generator(&self) -> &Mat {
        &self.generator
    }

    /// `q^dim`, saturating.
    pub fn size(&self) -> u128 {
        (self.field().order() as u128).checked_pow(self.dimension() as u32).unwrap_or(u128::MAX)
    }

    pub fn contains(&self, v: &[Elem]) -> Result<bool, CodeError> {
        if v.len() != self.n {
            return Err(CodeError::DimensionMismatch(format!("word of length {} for code of length {}", v.len(), self.n)));
        }
        Ok(self.parity_check.matvec(v)?.iter().all(|e| e.is_zero()))
    }

    /// Whether every column of `m` is a codeword.
    pub fn contains_matrix(&self, m: &Mat) -> Result<bool, CodeError> {
        if m.rows() != self.n || m.field() != self.field() {
            return Err(CodeError::DimensionMismatch(format!("matrix with {} rows for code of length {}", m.rows(), self.n)));
        }
        Ok(self.parity_check.matmul(m)?.is_zero())
    }

    /// Codeword number `index`: digit `j` of `index` in base `q` is the coefficient of generator row `j`.
    pub fn codeword(&self, mut index: u128) -> Vec<Elem> {
        let f = self.field();
        let q = f.order() as u128;
        let mut w = vec![Elem::ZERO; self.n];
        for j in 0..self.dimension() {
            let c = Elem((index % q) as u8);
            index /= q;
            if c.is_zero() {
                continue;
            }
            for (x, &g) in w.iter_mut().zip(self.generator.row(j)) {
                *x = f.add(*x, f.mul(c, g));
            }
        }
        w
    }

    /// All codewords in index order.
    pub fn codewords(&self, cap: u128) -> Result<Codewords<'_>, CodeError> {
        let count = self.size();
        if count > cap {
            return Err(CodeError::CodeTooLarge { count, cap });
        }
        Ok(Codewords { code: self, digits: vec![0; self.dimension()], word: vec![Elem::ZERO; self.n], remaining: count })
    }

    pub fn codeword_list(&self, cap: u128) -> Result<Vec<Vec<Elem>>, CodeError> {
        Ok(self.codewords(cap)?.collect())
    }
}

/// Odometer over coefficient vectors. Bumping a digit, including a wrap from
/// `q-1` to `0`, always adds the corresponding generator row once.
pub struct Codewords<'a> {
    code: &'a LinearCode,
    digits: Vec<usize>,
    word: Vec<Elem>,
    remaining: u128,
}

impl Iterator for Codewords<'_> {
    type Item = Vec<Elem>;

    fn next(&mut self) -> Option<Vec<Elem>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.word.clone();
        if self.remaining > 0 {
            let f = self.code.field();
            let q = f.order();
            for j in 0..self.digits.len() {
                for (x, &g) in self.word.iter_mut().zip(self.code.generator.row(j)) {
                    *x = f.add(*x, g);
                }
                self.digits[j] += 1;
                if self.digits[j] < q {
                    break;
                }
                self.digits[j] = 0;
            }
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (r, Some(r))
    }
}

/// Parity-check height `ceil((1-R)n)`.
pub fn parity_rows(n: usize, rate: Ratio<i64>) -> Result<usize, CodeError> {
    if rate <= Ratio::zero() || rate >= Ratio::one() {
        return Err(CodeError::InvalidRate(format!("R = {rate} is not in (0, 1)")));
    }
    let m = ((Ratio::one() - rate) * Ratio::from_integer(n as i64)).ceil().to_integer() as usize;
    if m < 1 {
        return Err(CodeError::InvalidRate(format!("ceil((1-R)n) = 0 for R = {rate}, n = {n}")));
    }
    Ok(m)
}

/// Kernel of a uniform `ceil((1-R)n) x n` matrix drawn from stream `stream` of `seed`.
pub fn sample_random_linear(
    field: &Field,
    n: usize,
    rate: Ratio<i64>,
    seed: u64,
    stream: u64,
) -> Result<LinearCode, CodeError> {
    let m = parity_rows(n, rate)?;
    let mut rng = rng_for(seed, stream);
    let q = field.order() as u32;
    let h = Mat::from_fn(field, m, n, |_, _| Elem(rng.random_range(0..q) as u8));
    Ok(LinearCode::from_parity_check(h))
}

/// Same model conditioned on containing the columns of `planted`: each parity
/// row is uniform over the annihilator of those columns.
pub fn sample_planted(
    planted: &Mat,
    rate: Ratio<i64>,
    seed: u64,
    stream: u64,
) -> Result<LinearCode, CodeError> {
    let field = planted.field();
    let n = planted.rows();
    let m = parity_rows(n, rate)?;
    let ann = planted.transpose().kernel_basis();
    let mut rng = rng_for(seed, stream);
    let q = field.order() as u32;
    let mut h = Mat::zeros(field, m, n);
    for r in 0..m {
        for b in 0..ann.rows() {
            let c = Elem(rng.random_range(0..q) as u8);
            if c.is_zero() {
                continue;
            }
            for col in 0..n {
                let v = field.add(h.get(r, col), field.mul(c, ann.get(b, col)));
                h.set(r, col, v);
            }
        }
    }
    Ok(LinearCode::from_parity_check(h))
}

pub fn hamming_distance(x: &[Elem], y: &[Elem]) -> Result<usize, CodeError> {
    if x.len() != y.len() {
        return Err(CodeError::DimensionMismatch(format!("lengths {} and {}", x.len(), y.len())));
    }
    Ok(x.iter().zip(y).filter(|(a, b)| a != b).count())
}

/// Fractional Hamming distance `|{i : x_i != y_i}| / n`.
pub fn hamming_delta(x: &[Elem], y: &[Elem]) -> Result<Ratio<usize>, CodeError> {
    let d = hamming_distance(x, y)?;
    if x.is_empty() {
        return Err(CodeError::DimensionMismatch("empty words".into()));
    }
    Ok(Ratio::new(d, x.len()))
}

/// Bit `i` of the result is coordinate `i` of a binary word.
pub fn pack_binary(v: &[Elem]) -> u64 {
    debug_assert!(v.len() <= 64);
    v.iter().enumerate().fold(0u64, |acc, (i, e)| acc | ((e.0 as u64 & 1) << i))
}

pub fn unpack_binary(mask: u64, n: usize) -> Vec<Elem> {
    (0..n).map(|i| Elem(((mask >> i) & 1) as u8)).collect()
}
