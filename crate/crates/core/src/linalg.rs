//! Dense matrices over `F_q`: row reduction, kernels, and canonical enumeration
//! of subspaces by their reduced row echelon representatives.

use std::fmt::Write as _;

use thiserror::Error;

use crate::gf::{make_field, Elem, Field, GfError};

/// Default cap on the number of subspace representatives one search may visit.
pub const DEFAULT_SUBSPACE_CAP: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("enumeration of {count} items exceeds the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },
    #[error("malformed matrix text: {0}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] GfError),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat over {:?} ({}x{})", self.field, self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|e| e.to_string()).collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Result of [`Mat::rref`].
#[derive(Clone, Debug)]
pub struct Rref {
    pub mat: Mat,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl Mat {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Self {
        Mat { field: field.clone(), rows, cols, data: vec![Elem::ZERO; rows * cols] }
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, Elem::ONE);
        }
        m
    }

    pub fn from_fn(field: &Field, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Elem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { field: field.clone(), rows, cols, data }
    }

    /// Build from row vectors. All rows must share one length and hold valid elements.
    pub fn from_rows(field: &Field, cols: usize, rows: &[Vec<Elem>]) -> Result<Self, LinalgError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!("row {i} has length {}, expected {cols}", r.len())));
            }
            for &e in r {
                field.elem(e.0 as u32)?;
            }
            data.extend_from_slice(r);
        }
        Ok(Mat { field: field.clone(), rows: rows.len(), cols, data })
    }

    pub fn from_cols(field: &Field, rows: usize, cols: &[Vec<Elem>]) -> Result<Self, LinalgError> {
        Ok(Self::from_rows(field, rows, cols)?.transpose())
    }

    #[inline]
    pub fn field(&self) -> &Field {
        &self.field
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<Elem>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn col(&self, c: usize) -> Vec<Elem> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn entries(&self) -> &[Elem] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(&self.field, self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Mat) -> Result<Mat, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch(format!("hstack {} vs {} rows", self.rows, other.rows)));
        }
        Ok(Mat::from_fn(&self.field, self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.get(r, c)
            } else {
                other.get(r, c - self.cols)
            }
        }))
    }

    pub fn select_cols(&self, cols: &[usize]) -> Mat {
        Mat::from_fn(&self.field, self.rows, cols.len(), |r, c| self.get(r, cols[c]))
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = Mat::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let cur = out.get(r, c);
                    out.set(r, c, f.add(cur, f.mul(a, other.get(k, c))));
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[Elem]) -> Result<Vec<Elem>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!("{} columns vs vector of length {}", self.cols, v.len())));
        }
        Ok((0..self.rows).map(|r| dot(&self.field, self.row(r), v)).collect())
    }

    /// Reduced row echelon form by Gauss-Jordan elimination.
    pub fn rref(&self) -> Rref {
        let f = &self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pr = 0;
        for c in 0..m.cols {
            if pr == m.rows {
                break;
            }
            let Some(sel) = (pr..m.rows).find(|&r| !m.get(r, c).is_zero()) else {
                continue;
            };
            m.swap_rows(pr, sel);
            let inv = f.inv(m.get(pr, c)).expect("pivot is nonzero");
            for k in c..m.cols {
                let v = m.get(pr, k);
                m.set(pr, k, f.mul(v, inv));
            }
            for r in 0..m.rows {
                if r == pr {
                    continue;
                }
                let factor = m.get(r, c);
                if factor.is_zero() {
                    continue;
                }
                for k in c..m.cols {
                    let v = f.sub(m.get(r, k), f.mul(factor, m.get(pr, k)));
                    m.set(r, k, v);
                }
            }
            pivots.push(c);
            pr += 1;
        }
        Rref { mat: m, rank: pr, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.rows.min(self.cols)
    }

    /// Rows spanning `{x : self * x = 0}`, one per non-pivot column.
    pub fn kernel_basis(&self) -> Mat {
        let f = &self.field;
        let Rref { mat, pivots, .. } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Mat::zeros(f, free.len(), self.cols);
        for (i, &fc) in free.iter().enumerate() {
            basis.set(i, fc, Elem::ONE);
            for (r, &pc) in pivots.iter().enumerate() {
                basis.set(i, pc, f.neg(mat.get(r, fc)));
            }
        }
        basis
    }

    /// Whether `v` lies in the row space of `self`.
    pub fn span_contains(&self, v: &[Elem]) -> Result<bool, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!("basis has {} columns, vector {}", self.cols, v.len())));
        }
        let Rref { mat, rank, pivots } = self.rref();
        let f = &self.field;
        let mut residual = v.to_vec();
        for (r, &pc) in pivots.iter().enumerate().take(rank) {
            let coef = residual[pc];
            if coef.is_zero() {
                continue;
            }
            for (k, x) in residual.iter_mut().enumerate() {
                *x = f.sub(*x, f.mul(coef, mat.get(r, k)));
            }
        }
        Ok(residual.iter().all(|e| e.is_zero()))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    /// Text form: header `q rows cols`, then one row per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.field.order(), self.rows, self.cols);
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|e| e.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mat, LinalgError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| LinalgError::Parse("empty input".into()))?;
        let nums = parse_u32s(header)?;
        let [q, rows, cols] = nums[..] else {
            return Err(LinalgError::Parse(format!("header must be `q rows cols`, got `{header}`")));
        };
        let field = make_field(q)?;
        let mut data = Vec::with_capacity((rows * cols) as usize);
        for r in 0..rows {
            let line = lines.next().ok_or_else(|| LinalgError::Parse(format!("missing row {r}")))?;
            let vals = parse_u32s(line)?;
            if vals.len() != cols as usize {
                return Err(LinalgError::Parse(format!("row {r} has {} entries, expected {cols}", vals.len())));
            }
            for v in vals {
                data.push(field.elem(v)?);
            }
        }
        Ok(Mat { field, rows: rows as usize, cols: cols as usize, data })
    }
}

pub(crate) fn parse_u32s(line: &str) -> Result<Vec<u32>, LinalgError> {
    line.split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|e| LinalgError::Parse(format!("`{t}`: {e}"))))
        .collect()
}

#[inline]
pub fn dot(f: &Field, a: &[Elem], b: &[Elem]) -> Elem {
    a.iter().zip(b).fold(Elem::ZERO, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
}

pub fn vec_add(f: &Field, a: &[Elem], b: &[Elem]) -> Vec<Elem> {
    a.iter().zip(b).map(|(&x, &y)| f.add(x, y)).collect()
}

pub fn vec_scale(f: &Field, s: Elem, a: &[Elem]) -> Vec<Elem> {
    a.iter().map(|&x| f.mul(s, x)).collect()
}

/// Dimension of the span of a set of vectors of length `len`.
pub fn span_dim(f: &Field, len: usize, vectors: &[Vec<Elem>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    Mat::from_rows(f, len, vectors).expect("equal-length vectors").rank()
}

/// Decode `index` as `len` base-`q` digits, most significant first.
pub fn vector_from_index(q: usize, len: usize, mut index: u128) -> Vec<Elem> {
    let mut v = vec![Elem::ZERO; len];
    for slot in v.iter_mut().rev() {
        *slot = Elem((index % q as u128) as u8);
        index /= q as u128;
    }
    v
}

/// Gaussian binomial coefficient `[n choose k]_q`.
pub fn gaussian_binomial(q: u128, n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num = num.saturating_mul(q.pow(n - i) - 1);
        den = den.saturating_mul(q.pow(i + 1) - 1);
    }
    num / den
}

/// All increasing `k`-subsets of `0..n` in lexicographic order.
pub fn pivot_patterns(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// The RREF matrices with the given pivot columns: one per subspace with that pattern.
pub struct PatternReps {
    field: Field,
    cols: usize,
    pivots: Vec<usize>,
    free: Vec<(usize, usize)>,
    next: u128,
    total: u128,
}

impl PatternReps {
    pub fn new(field: &Field, cols: usize, pivots: &[usize]) -> Self {
        let free: Vec<(usize, usize)> = pivots
            .iter()
            .enumerate()
            .flat_map(|(r, &pc)| ((pc + 1)..cols).filter(|c| !pivots.contains(c)).map(move |c| (r, c)))
            .collect();
        let total = (field.order() as u128).pow(free.len() as u32);
        PatternReps { field: field.clone(), cols, pivots: pivots.to_vec(), free, next: 0, total }
    }

    pub fn count(&self) -> u128 {
        self.total
    }
}

impl Iterator for PatternReps {
    type Item = Mat;

    fn next(&mut self) -> Option<Mat> {
        if self.next >= self.total {
            return None;
        }
        let q = self.field.order();
        let mut m = Mat::zeros(&self.field, self.pivots.len(), self.cols);
        for (r, &pc) in self.pivots.iter().enumerate() {
            m.set(r, pc, Elem::ONE);
        }
        let digits = vector_from_index(q, self.free.len(), self.next);
        for (&(r, c), d) in self.free.iter().zip(digits) {
            m.set(r, c, d);
        }
        self.next += 1;
        Some(m)
    }
}

/// One full-rank `k x n` RREF matrix per `k`-dimensional subspace of `F_q^n`,
/// grouped by pivot pattern in lexicographic order.
pub fn enumerate_subspace_reps(
    field: &Field,
    k: usize,
    n: usize,
    cap: u128,
) -> Result<impl Iterator<Item = Mat>, LinalgError> {
    if k == 0 || k > n {
        return Err(LinalgError::DimensionMismatch(format!("need 1 <= L' <= L, got L'={k}, L={n}")));
    }
    let count = gaussian_binomial(field.order() as u128, n as u32, k as u32);
    if count > cap {
        return Err(LinalgError::EnumerationTooLarge { count, cap });
    }
    let field = field.clone();
    Ok(pivot_patterns(k, n).into_iter().flat_map(move |p| PatternReps::new(&field, n, &p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u32) -> Field {
        make_field(q).unwrap()
    }

    fn m(field: &Field, rows: &[&[u8]]) -> Mat {
        let rows: Vec<Vec<Elem>> = rows.iter().map(|r| r.iter().map(|&x| Elem(x)).collect()).collect();
        Mat::from_rows(field, rows[0].len(), &rows).unwrap()
    }

    #[test]
    fn rref_of_identity_and_zero() {
        let f2 = f(2);
        let id = Mat::identity(&f2, 4);
        let r = id.rref();
        assert_eq!(r.mat, id);
        assert_eq!(r.rank, 4);
        assert_eq!(r.pivots, vec![0, 1, 2, 3]);

        let z = Mat::zeros(&f2, 3, 5);
        let r = z.rref();
        assert_eq!(r.mat, z);
        assert_eq!(r.rank, 0);
        assert!(r.pivots.is_empty());
    }

    #[test]
    fn equal_rows_have_rank_one() {
        let f2 = f(2);
        assert_eq!(m(&f2, &[&[1, 1], &[1, 1]]).rank(), 1);
    }

    #[test]
    fn kernel_examples() {
        let f2 = f(2);
        assert_eq!(Mat::identity(&f2, 3).kernel_basis().rows(), 0);
        assert_eq!(Mat::zeros(&f2, 1, 5).kernel_basis().rows(), 5);

        let k = m(&f2, &[&[1, 1, 0], &[0, 1, 1]]).kernel_basis();
        assert_eq!(k.rows(), 1);
        assert_eq!(k.row(0), &[Elem(1), Elem(1), Elem(1)]);
    }

    #[test]
    fn kernel_rows_are_annihilated() {
        let f9 = f(9);
        let a = m(&f9, &[&[1, 2, 3, 4, 5], &[0, 7, 8, 1, 2], &[1, 0, 5, 5, 5]]);
        let k = a.kernel_basis();
        assert_eq!(k.rows() + a.rank(), 5);
        for r in 0..k.rows() {
            assert!(a.matvec(k.row(r)).unwrap().iter().all(|e| e.is_zero()));
        }
        assert_eq!(k.rank(), k.rows());
    }

    #[test]
    fn span_contains_zero_and_rows() {
        let f3 = f(3);
        let b = m(&f3, &[&[1, 2, 0], &[0, 1, 1]]);
        assert!(b.span_contains(&[Elem(0); 3]).unwrap());
        assert!(b.span_contains(&[Elem(1), Elem(0), Elem(1)]).unwrap());
        assert!(!b.span_contains(&[Elem(0), Elem(0), Elem(1)]).unwrap());
        assert!(b.span_contains(&[Elem(0); 2]).is_err());
    }

    #[test]
    fn identity_matvec_and_linearity() {
        let f4 = f(4);
        let v = vec![Elem(1), Elem(3), Elem(2)];
        assert_eq!(Mat::identity(&f4, 3).matvec(&v).unwrap(), v);
        let g = m(&f4, &[&[1, 2, 3], &[3, 0, 1]]);
        let a = Elem(2);
        let lhs = g.matvec(&vec_scale(&f4, a, &v)).unwrap();
        let rhs = vec_scale(&f4, a, &g.matvec(&v).unwrap());
        assert_eq!(lhs, rhs);
        assert!(matches!(g.matvec(&v[..2]), Err(LinalgError::DimensionMismatch(_))));
    }

    #[test]
    fn gaussian_binomials() {
        assert_eq!(gaussian_binomial(2, 2, 1), 3);
        assert_eq!(gaussian_binomial(4, 4, 2), 357);
        assert_eq!(gaussian_binomial(4, 4, 1), 85);
        assert_eq!(gaussian_binomial(3, 5, 5), 1);
    }

    #[test]
    fn subspace_reps_small_cases() {
        let f2 = f(2);
        let reps: Vec<Mat> = enumerate_subspace_reps(&f2, 2, 2, DEFAULT_SUBSPACE_CAP).unwrap().collect();
        assert_eq!(reps, vec![Mat::identity(&f2, 2)]);

        let lines: Vec<Vec<Elem>> =
            enumerate_subspace_reps(&f2, 1, 2, DEFAULT_SUBSPACE_CAP).unwrap().map(|m| m.row(0).to_vec()).collect();
        assert_eq!(lines, vec![vec![Elem(1), Elem(0)], vec![Elem(1), Elem(1)], vec![Elem(0), Elem(1)]]);

        assert_eq!(enumerate_subspace_reps(&f(4), 2, 4, DEFAULT_SUBSPACE_CAP).unwrap().count(), 357);
    }

    #[test]
    fn subspace_cap_is_enforced() {
        let err = enumerate_subspace_reps(&f(4), 2, 4, 100).err().unwrap();
        assert_eq!(err, LinalgError::EnumerationTooLarge { count: 357, cap: 100 });
    }

    #[test]
    fn text_round_trip() {
        let f9 = f(9);
        let a = m(&f9, &[&[1, 2, 3], &[8, 0, 5]]);
        assert_eq!(a.to_text(), "9 2 3\n1 2 3\n8 0 5\n");
        assert_eq!(Mat::from_text(&a.to_text()).unwrap(), a);
        assert!(Mat::from_text("9 1 2\n1 9\n").is_err());
        assert!(Mat::from_text("6 1 1\n0\n").is_err());
    }
}
