//! Dense exact linear algebra: row reduction, kernels, subspaces.
//!
//! Subspaces are always stored as the reduced row echelon basis of their
//! row space, so two equal subspaces compare equal as plain data.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row vectors; all rows must share `cols` entries.
    pub fn from_rows(cols: usize, rows: Vec<Vec<T>>) -> Result<Self, ExactError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let nrows = rows.len();
        for row in rows {
            if row.len() != cols {
                return Err(ExactError::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Matrix {
            rows: nrows,
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, other: &Matrix<T>) -> Result<Matrix<T>, ExactError> {
        if self.cols != other.rows {
            return Err(ExactError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a.clone() * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>, ExactError> {
        if v.len() != self.cols {
            return Err(ExactError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect())
    }

    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b)
                .collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.clone() * s).collect(),
        }
    }

    /// Commutator `AB - BA` of square matrices.
    pub fn commutator(&self, other: &Matrix<T>) -> Matrix<T> {
        let ab = self.mul(other).expect("square matrices");
        let ba = other.mul(self).expect("square matrices");
        ab.add(&ba.scale(&-T::one()))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + &self[(i, i)])
    }

    /// Flattens row-major into a single vector.
    pub fn to_vec(&self) -> Vec<T> {
        self.data.clone()
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (Matrix<T>, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    /// Row-reduces in place and returns pivot columns. Within each column the
    /// pivot row is the candidate of least height, which keeps intermediate
    /// fractions small; the final form is canonical regardless.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let best = (r..rows)
                .filter(|&i| !self[(i, c)].is_zero())
                .min_by_key(|&i| self[(i, c)].height());
            let Some(p) = best else { continue };
            self.swap_rows(r, p);
            let inv = T::one() / self[(r, c)].clone();
            for j in c..cols {
                let v = self[(r, j)].clone() * &inv;
                self[(r, j)] = v;
            }
            let pivot_row: Vec<(usize, T)> = (c..cols)
                .filter(|&j| !self[(r, j)].is_zero())
                .map(|j| (j, self[(r, j)].clone()))
                .collect();
            for i in 0..rows {
                if i == r || self[(i, c)].is_zero() {
                    continue;
                }
                let f = self[(i, c)].clone();
                for (j, v) in &pivot_row {
                    let d = f.clone() * v;
                    self[(i, *j)] -= d;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Null space `{v : M v = 0}`.
    pub fn kernel(&self) -> Subspace<T> {
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![T::zero(); self.cols];
            v[free] = T::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r[(row, free)].clone();
            }
            basis.push(v);
        }
        Subspace::from_generators(self.cols, basis).expect("kernel vectors have matching length")
    }

    /// Left null space `{w : w M = 0}`, i.e. the linear relations among rows.
    pub fn left_kernel(&self) -> Subspace<T> {
        self.transpose().kernel()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Display> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| self.data[i * self.cols + j].to_string())
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x.clone() * y;
        }
    }
    acc
}

/// A linear subspace of `T^n` in canonical reduced-row-echelon form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace<T> {
    ambient_dim: usize,
    basis: Matrix<T>,
}

impl<T: fmt::Display> fmt::Debug for Subspace<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} in {}) {:?}", self.basis.rows, self.ambient_dim, self.basis)
    }
}

impl<T: Scalar> Subspace<T> {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: Matrix::zeros(0, ambient_dim),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: Matrix::identity(ambient_dim),
        }
    }

    /// Span of arbitrary (possibly dependent) generators.
    pub fn from_generators(ambient_dim: usize, gens: Vec<Vec<T>>) -> Result<Self, ExactError> {
        let m = Matrix::from_rows(ambient_dim, gens)?;
        Ok(Self::from_matrix_rows(&m))
    }

    pub fn from_matrix_rows(m: &Matrix<T>) -> Self {
        let (r, pivots) = m.rref();
        let rank = pivots.len();
        let rows: Vec<Vec<T>> = (0..rank).map(|i| r.row(i).to_vec()).collect();
        Subspace {
            ambient_dim: m.cols(),
            basis: Matrix::from_rows(m.cols(), rows).expect("rows have ambient length"),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<T>> {
        self.basis.row_vecs()
    }

    /// Pivot column of each basis row.
    pub fn pivots(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|i| {
                self.basis
                    .row(i)
                    .iter()
                    .position(|v| !v.is_zero())
                    .expect("echelon rows are nonzero")
            })
            .collect()
    }

    pub fn contains(&self, v: &[T]) -> bool {
        v.len() == self.ambient_dim && self.coordinates(v).is_some()
    }

    /// Coordinates of `v` with respect to the echelon basis.
    pub fn coordinates(&self, v: &[T]) -> Option<Vec<T>> {
        if v.len() != self.ambient_dim {
            return None;
        }
        let pivots = self.pivots();
        let coeffs: Vec<T> = pivots.iter().map(|&p| v[p].clone()).collect();
        let mut residual = v.to_vec();
        for (i, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (j, b) in self.basis.row(i).iter().enumerate() {
                if !b.is_zero() {
                    residual[j] -= c.clone() * b;
                }
            }
        }
        residual.iter().all(|x| x.is_zero()).then_some(coeffs)
    }

    pub fn is_subspace_of(&self, other: &Subspace<T>) -> bool {
        self.ambient_dim == other.ambient_dim
            && (0..self.dim()).all(|i| other.contains(self.basis.row(i)))
    }

    pub fn sum(&self, other: &Subspace<T>) -> Result<Subspace<T>, ExactError> {
        self.check_ambient(other)?;
        let mut gens = self.basis_vectors();
        gens.extend(other.basis_vectors());
        Subspace::from_generators(self.ambient_dim, gens)
    }

    /// Annihilator: functionals vanishing on the subspace, as row vectors.
    pub fn annihilator(&self) -> Subspace<T> {
        if self.dim() == 0 {
            return Subspace::full(self.ambient_dim);
        }
        self.basis.kernel()
    }

    pub fn intersect(&self, other: &Subspace<T>) -> Result<Subspace<T>, ExactError> {
        self.check_ambient(other)?;
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Subspace::zero(self.ambient_dim));
        }
        // v = c^T B lies in A iff ann(A) B^T c = 0.
        let ann = self.annihilator();
        if ann.dim() == 0 {
            return Ok(other.clone());
        }
        let constraint = ann
            .basis
            .mul(&other.basis.transpose())
            .expect("ambient dimensions agree");
        let coeffs = constraint.kernel();
        let gens: Vec<Vec<T>> = coeffs
            .basis_vectors()
            .into_iter()
            .map(|c| combine_rows(&other.basis, &c))
            .collect();
        Subspace::from_generators(self.ambient_dim, gens)
    }

    fn check_ambient(&self, other: &Subspace<T>) -> Result<(), ExactError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(ExactError::DimensionMismatch {
                expected: self.ambient_dim,
                found: other.ambient_dim,
            });
        }
        Ok(())
    }
}

/// `Σ c_i · row_i(m)`.
pub fn combine_rows<T: Scalar>(m: &Matrix<T>, c: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); m.cols()];
    for (i, ci) in c.iter().enumerate() {
        if ci.is_zero() {
            continue;
        }
        for (j, v) in m.row(i).iter().enumerate() {
            if !v.is_zero() {
                out[j] += ci.clone() * v;
            }
        }
    }
    out
}

/// Outcome of [`solve_in_span`]; absence from the span is a value, not an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpanSolution<T> {
    Coefficients(Vec<T>),
    NotInSpan,
}

impl<T> SpanSolution<T> {
    pub fn coefficients(self) -> Option<Vec<T>> {
        match self {
            SpanSolution::Coefficients(c) => Some(c),
            SpanSolution::NotInSpan => None,
        }
    }
}

/// Finds `c` with `Σ c_i · generator_i = target`, where generators are the
/// rows of `generators`. When the generators are dependent, free
/// coefficients are set to zero.
pub fn solve_in_span<T: Scalar>(
    target: &[T],
    generators: &Matrix<T>,
) -> Result<SpanSolution<T>, ExactError> {
    if target.len() != generators.cols() {
        return Err(ExactError::DimensionMismatch {
            expected: generators.cols(),
            found: target.len(),
        });
    }
    let g = generators.rows();
    // Augmented system [G^T | target].
    let aug = Matrix::from_fn(generators.cols(), g + 1, |i, j| {
        if j < g {
            generators[(j, i)].clone()
        } else {
            target[i].clone()
        }
    });
    let (r, pivots) = aug.rref();
    if pivots.last() == Some(&g) {
        return Ok(SpanSolution::NotInSpan);
    }
    let mut c = vec![T::zero(); g];
    for (row, &p) in pivots.iter().enumerate() {
        c[p] = r[(row, g)].clone();
    }
    Ok(SpanSolution::Coefficients(c))
}

/// Repeated coordinate solves against a fixed, linearly independent family.
#[derive(Clone)]
pub struct SpanBasis<T> {
    reduced: Matrix<T>,
    transform: Matrix<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> SpanBasis<T> {
    /// `None` when the rows of `generators` are linearly dependent.
    pub fn new(generators: &Matrix<T>) -> Option<Self> {
        let (n, k) = (generators.rows(), generators.cols());
        let mut aug = Matrix::from_fn(n, k + n, |i, j| {
            if j < k {
                generators[(i, j)].clone()
            } else if j - k == i {
                T::one()
            } else {
                T::zero()
            }
        });
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots[n - 1] >= k {
            return None;
        }
        let reduced = Matrix::from_fn(n, k, |i, j| aug[(i, j)].clone());
        let transform = Matrix::from_fn(n, n, |i, j| aug[(i, k + j)].clone());
        Some(SpanBasis {
            reduced,
            transform,
            pivots,
        })
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    /// Coefficients `c` with `Σ c_i · generator_i = target`, if any.
    pub fn solve(&self, target: &[T]) -> Option<Vec<T>> {
        assert_eq!(target.len(), self.reduced.cols(), "target length mismatch");
        let coeffs: Vec<T> = self.pivots.iter().map(|&p| target[p].clone()).collect();
        let back = combine_rows(&self.reduced, &coeffs);
        if back.as_slice() != target {
            return None;
        }
        Some(combine_rows(&self.transform, &coeffs))
    }
}

impl<T: Scalar> Matrix<T> {
    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<Matrix<T>> {
        if self.rows != self.cols {
            return None;
        }
        // T·M = I once M is row-reduced to the identity
        SpanBasis::new(self).map(|b| b.transform)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;
    use proptest::prelude::*;
    use num_traits::Zero;

    fn q(n: i64) -> Rat {
        Rat::from_int(n)
    }

    fn mat(rows: &[&[i64]]) -> Matrix<Rat> {
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(cols, rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn kernel_of_identity_is_zero() {
        assert_eq!(Matrix::<Rat>::identity(3).kernel().dim(), 0);
    }

    #[test]
    fn kernel_of_zero_matrix_is_everything() {
        let k = Matrix::<Rat>::zeros(2, 5).kernel();
        assert_eq!(k.dim(), 5);
        assert_eq!(k, Subspace::full(5));
    }

    #[test]
    fn kernel_of_rank_one_matrix() {
        let k = mat(&[&[1, 2], &[2, 4]]).kernel();
        assert_eq!(k.dim(), 1);
        assert_eq!(k.basis_vectors(), vec![vec![q(1), Rat::from_frac(-1, 2)]]);
    }

    #[test]
    fn intersect_is_idempotent_and_detects_complements() {
        let a = Subspace::from_generators(3, vec![vec![q(1), q(2), q(0)]]).unwrap();
        assert_eq!(a.intersect(&a).unwrap(), a);
        let l1 = Subspace::from_generators(2, vec![vec![q(1), q(0)]]).unwrap();
        let l2 = Subspace::from_generators(2, vec![vec![q(1), q(1)]]).unwrap();
        assert_eq!(l1.intersect(&l2).unwrap().dim(), 0);
    }

    #[test]
    fn two_planes_in_three_space_meet_in_a_line() {
        let p1 = Subspace::from_generators(3, vec![vec![q(1), q(0), q(1)], vec![q(0), q(1), q(1)]])
            .unwrap();
        let p2 = Subspace::from_generators(3, vec![vec![q(1), q(1), q(0)], vec![q(0), q(0), q(1)]])
            .unwrap();
        let line = p1.intersect(&p2).unwrap();
        assert_eq!(line.dim(), 1);
        // brute-force membership: the line's direction lies in both planes
        let v = line.basis_vectors().remove(0);
        assert!(p1.contains(&v) && p2.contains(&v));
        assert_eq!(
            line.dim(),
            p1.dim() + p2.dim() - p1.sum(&p2).unwrap().dim()
        );
    }

    #[test]
    fn intersect_rejects_mismatched_ambients() {
        let a = Subspace::<Rat>::full(2);
        let b = Subspace::<Rat>::full(3);
        assert!(matches!(
            a.intersect(&b),
            Err(ExactError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_in_span_cases() {
        let g = mat(&[&[1, 0, 2], &[0, 1, 1]]);
        assert_eq!(
            solve_in_span(&[q(1), q(0), q(2)], &g).unwrap(),
            SpanSolution::Coefficients(vec![q(1), q(0)])
        );
        assert_eq!(
            solve_in_span(&[q(0), q(0), q(0)], &g).unwrap(),
            SpanSolution::Coefficients(vec![q(0), q(0)])
        );
        let single = mat(&[&[1, 1]]);
        assert_eq!(
            solve_in_span(&[q(1), q(0)], &single).unwrap(),
            SpanSolution::NotInSpan
        );
    }

    fn small_matrix() -> impl Strategy<Value = (usize, usize, Vec<(i64, i64)>)> {
        (1usize..5, 1usize..6).prop_flat_map(|(r, c)| {
            (
                Just(r),
                Just(c),
                proptest::collection::vec((-4i64..5, 1i64..4), r * c),
            )
        })
    }

    fn build(r: usize, c: usize, e: &[(i64, i64)]) -> Matrix<Rat> {
        Matrix::from_fn(r, c, |i, j| {
            let (n, d) = e[i * c + j];
            Rat::from_frac(n, d)
        })
    }

    #[test]
    fn span_basis_and_inverse() {
        let g = Matrix::from_rows(3, vec![vec![q(1), q(2), q(0)], vec![q(0), q(1), q(1)]]).unwrap();
        let b = SpanBasis::new(&g).unwrap();
        assert_eq!(b.solve(&[q(2), q(7), q(3)]), Some(vec![q(2), q(3)]));
        assert_eq!(b.solve(&[q(0), q(0), q(1)]), None);
        let dep = Matrix::from_rows(2, vec![vec![q(1), q(2)], vec![q(2), q(4)]]).unwrap();
        assert!(SpanBasis::new(&dep).is_none());
        assert!(dep.inverse().is_none());
        let m = Matrix::from_rows(2, vec![vec![q(2), q(1)], vec![q(1), q(1)]]).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(2));
    }

    proptest! {
        #[test]
        fn rank_nullity((r, c, e) in small_matrix()) {
            let m = build(r, c, &e);
            let k = m.kernel();
            prop_assert_eq!(m.rank() + k.dim(), c);
            prop_assert_eq!(m.rank(), m.transpose().rank());
            for v in k.basis_vectors() {
                prop_assert!(m.mul_vec(&v).unwrap().iter().all(|x| x.is_zero()));
            }
        }

        #[test]
        fn canonical_form_ignores_generating_set((r, c, e) in small_matrix(), mix in -3i64..4) {
            let m = build(r, c, &e);
            let a = Subspace::from_matrix_rows(&m);
            // same span: add a multiple of row 0 to every other row and reverse
            let mut rows = m.row_vecs();
            let first = rows[0].clone();
            for row in rows.iter_mut().skip(1) {
                for (x, f) in row.iter_mut().zip(&first) {
                    *x += Rat::from_int(mix) * f;
                }
            }
            rows.reverse();
            let b = Subspace::from_generators(c, rows).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn solve_in_span_reproduces_target((r, c, e) in small_matrix(), w in proptest::collection::vec(-3i64..4, 5)) {
            let m = build(r, c, &e);
            let coeffs: Vec<Rat> = w.iter().take(r).map(|&v| Rat::from_int(v)).collect();
            let coeffs = if coeffs.len() < r { vec![Rat::from_int(1); r] } else { coeffs };
            let target = combine_rows(&m, &coeffs);
            let sol = solve_in_span(&target, &m).unwrap().coefficients().unwrap();
            prop_assert_eq!(combine_rows(&m, &sol), target);
        }

        #[test]
        fn fixed_width_rationals_agree_on_rank((r, c, e) in small_matrix()) {
            let big = build(r, c, &e);
            let small: Matrix<num_rational::Ratio<i128>> = Matrix::from_fn(r, c, |i, j| {
                let (n, d) = e[i * c + j];
                num_rational::Ratio::new(n as i128, d as i128)
            });
            prop_assert_eq!(big.rank(), small.rank());
        }
    }
}
