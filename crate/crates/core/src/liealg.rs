//! Lie algebras as exact structure constants, and the invariants used to
//! certify non-isomorphism.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{Matrix, SpanBasis, Subspace};
use crate::jet::{coefficient_matrix, VectorField};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LieError {
    #[error("bracket of basis elements {0} and {1} leaves the span")]
    NonClosure(usize, usize),
    #[error("basis elements are linearly dependent")]
    Dependent,
    #[error("structure constants are not antisymmetric at ({0}, {1})")]
    NotAntisymmetric(usize, usize),
    #[error("Jacobi identity fails on ({0}, {1}, {2})")]
    Jacobi(usize, usize, usize),
    #[error("bracket of {0} and {1} violates the grading")]
    Grading(usize, usize),
    #[error("structure constant table has the wrong shape")]
    Shape,
    #[error("vector fields live on different charts")]
    ChartMismatch,
}

/// Sparse vector: `(basis index, nonzero coefficient)` pairs in index order.
pub type Sparse<T> = Vec<(usize, T)>;

fn sparse_from_dense<T: Scalar>(v: &[T]) -> Sparse<T> {
    v.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| (i, c.clone()))
        .collect()
}

#[derive(Clone)]
pub struct LieAlgebra<T> {
    dim: usize,
    /// `table[a][b] = [e_a, e_b]`, stored for all ordered pairs.
    table: Vec<Vec<Sparse<T>>>,
    degrees: Option<Vec<i32>>,
    labels: Vec<String>,
}

impl<T: Scalar> fmt::Debug for LieAlgebra<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LieAlgebra(dim {})", self.dim)?;
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                if self.table[a][b].is_empty() {
                    continue;
                }
                write!(f, "  [e{a}, e{b}] =")?;
                for (e, c) in &self.table[a][b] {
                    write!(f, " {c}*e{e}")?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

impl<T: Scalar> LieAlgebra<T> {
    /// Builds from a dense table `c[a][b][e]`, checking antisymmetry,
    /// Jacobi, and the grading when one is given.
    pub fn from_structure_constants(
        c: Vec<Vec<Vec<T>>>,
        degrees: Option<Vec<i32>>,
        labels: Vec<String>,
    ) -> Result<Self, LieError> {
        let dim = c.len();
        if c.iter().any(|r| r.len() != dim || r.iter().any(|v| v.len() != dim)) {
            return Err(LieError::Shape);
        }
        let table = c
            .iter()
            .map(|row| row.iter().map(|v| sparse_from_dense(v)).collect())
            .collect();
        Self::from_sparse(dim, table, degrees, labels)
    }

    pub fn from_sparse(
        dim: usize,
        table: Vec<Vec<Sparse<T>>>,
        degrees: Option<Vec<i32>>,
        labels: Vec<String>,
    ) -> Result<Self, LieError> {
        if table.len() != dim
            || table.iter().any(|r| r.len() != dim)
            || degrees.as_ref().is_some_and(|d| d.len() != dim)
        {
            return Err(LieError::Shape);
        }
        let labels = if labels.len() == dim {
            labels
        } else {
            (0..dim).map(|i| format!("e{i}")).collect()
        };
        let alg = LieAlgebra {
            dim,
            table,
            degrees,
            labels,
        };
        alg.check()?;
        Ok(alg)
    }

    /// Structure constants of a family of vector fields; every pairwise
    /// bracket must lie in their span.
    pub fn from_vector_fields(fields: &[VectorField<T>]) -> Result<Self, LieError> {
        let n = fields.len();
        if fields.windows(2).any(|w| w[0].space() != w[1].space()) {
            return Err(LieError::ChartMismatch);
        }
        let mut brackets = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for a in 0..n {
            for b in (a + 1)..n {
                brackets.push(fields[a].bracket(&fields[b]).map_err(|_| LieError::ChartMismatch)?);
            }
        }
        let all: Vec<&VectorField<T>> = fields.iter().chain(brackets.iter()).collect();
        let (_, m) = coefficient_matrix(&all);
        let basis_rows = Matrix::from_fn(n, m.cols(), |i, j| m[(i, j)].clone());
        let solver = SpanBasis::new(&basis_rows).ok_or(LieError::Dependent)?;
        let mut table = vec![vec![Sparse::new(); n]; n];
        let mut k = n;
        for a in 0..n {
            for b in (a + 1)..n {
                let coeffs = solver.solve(m.row(k)).ok_or(LieError::NonClosure(a, b))?;
                let s = sparse_from_dense(&coeffs);
                table[b][a] = s.iter().map(|(e, c)| (*e, -c.clone())).collect();
                table[a][b] = s;
                k += 1;
            }
        }
        let labels = fields.iter().map(ToString::to_string).collect();
        Self::from_sparse(n, table, None, labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn degrees(&self) -> Option<&[i32]> {
        self.degrees.as_deref()
    }

    /// Attaches a grading, re-checking that brackets respect it.
    pub fn with_degrees(mut self, degrees: Vec<i32>) -> Result<Self, LieError> {
        if degrees.len() != self.dim {
            return Err(LieError::Shape);
        }
        self.degrees = Some(degrees);
        self.check_grading()?;
        Ok(self)
    }

    pub fn bracket_basis(&self, a: usize, b: usize) -> &Sparse<T> {
        &self.table[a][b]
    }

    pub fn structure_constant(&self, a: usize, b: usize, e: usize) -> T {
        self.table[a][b]
            .iter()
            .find(|(i, _)| *i == e)
            .map_or_else(T::zero, |(_, c)| c.clone())
    }

    /// Bracket of two dense vectors.
    pub fn bracket(&self, u: &[T], v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (a, ua) in u.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            for (b, vb) in v.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
                if a == b {
                    continue;
                }
                let s = ua.clone() * vb;
                for (e, c) in &self.table[a][b] {
                    out[*e] += s.clone() * c;
                }
            }
        }
        out
    }

    fn bracket_sparse(&self, u: &Sparse<T>, b: usize) -> Sparse<T> {
        let mut acc: BTreeMap<usize, T> = BTreeMap::new();
        for (a, ua) in u {
            for (e, c) in &self.table[*a][b] {
                *acc.entry(*e).or_insert_with(T::zero) += ua.clone() * c;
            }
        }
        acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    fn check(&self) -> Result<(), LieError> {
        for a in 0..self.dim {
            if !self.table[a][a].is_empty() {
                return Err(LieError::NotAntisymmetric(a, a));
            }
            for b in (a + 1)..self.dim {
                let neg: Sparse<T> = self.table[b][a]
                    .iter()
                    .map(|(e, c)| (*e, -c.clone()))
                    .collect();
                if neg != self.table[a][b] {
                    return Err(LieError::NotAntisymmetric(a, b));
                }
            }
        }
        self.check_jacobi()?;
        self.check_grading()
    }

    /// Exact Jacobi identity on every basis triple.
    pub fn check_jacobi(&self) -> Result<(), LieError> {
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                for c in (b + 1)..self.dim {
                    let mut acc: BTreeMap<usize, T> = BTreeMap::new();
                    for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                        for (e, v) in self.bracket_sparse(&self.table[x][y], z) {
                            *acc.entry(e).or_insert_with(T::zero) += v;
                        }
                    }
                    if acc.values().any(|v| !v.is_zero()) {
                        return Err(LieError::Jacobi(a, b, c));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_grading(&self) -> Result<(), LieError> {
        let Some(deg) = &self.degrees else {
            return Ok(());
        };
        for a in 0..self.dim {
            for b in 0..self.dim {
                if self.table[a][b]
                    .iter()
                    .any(|(e, _)| deg[*e] != deg[a] + deg[b])
                {
                    return Err(LieError::Grading(a, b));
                }
            }
        }
        Ok(())
    }

    /// Matrix of `ad_a` acting on coordinate columns: `ad_a[e][b] = c_{ab}^e`.
    pub fn ad(&self, a: usize) -> Matrix<T> {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for b in 0..self.dim {
            for (e, c) in &self.table[a][b] {
                m[(*e, b)] = c.clone();
            }
        }
        m
    }

    /// Span of all brackets `[u, v]` with `u ∈ A`, `v ∈ B`.
    pub fn bracket_span(&self, a: &Subspace<T>, b: &Subspace<T>) -> Subspace<T> {
        let mut gens = Vec::new();
        for u in a.basis_vectors() {
            for v in b.basis_vectors() {
                let w = self.bracket(&u, &v);
                if w.iter().any(|c| !c.is_zero()) {
                    gens.push(w);
                }
            }
        }
        Subspace::from_generators(self.dim, gens).expect("bracket vectors have ambient length")
    }

    pub fn derived_series(&self) -> Vec<usize> {
        let mut cur = Subspace::full(self.dim);
        let mut dims = vec![cur.dim()];
        loop {
            let next = self.bracket_span(&cur, &cur);
            if next.dim() == cur.dim() {
                return dims;
            }
            dims.push(next.dim());
            cur = next;
        }
    }

    pub fn lower_central_series(&self) -> Vec<usize> {
        let full = Subspace::full(self.dim);
        let mut cur = full.clone();
        let mut dims = vec![cur.dim()];
        loop {
            let next = self.bracket_span(&full, &cur);
            if next.dim() == cur.dim() {
                return dims;
            }
            dims.push(next.dim());
            cur = next;
        }
    }

    pub fn center(&self) -> Subspace<T> {
        // rows indexed by (b, e): Σ_a x_a c_{ab}^e = 0
        let n = self.dim;
        let mut m = Matrix::zeros(n * n, n);
        for a in 0..n {
            for b in 0..n {
                for (e, c) in &self.table[a][b] {
                    m[(b * n + e, a)] = c.clone();
                }
            }
        }
        m.kernel()
    }

    pub fn killing_form(&self) -> Matrix<T> {
        let n = self.dim;
        let ads: Vec<HashMap<(usize, usize), T>> = (0..n)
            .map(|a| {
                let mut h = HashMap::new();
                for b in 0..n {
                    for (e, c) in &self.table[a][b] {
                        h.insert((*e, b), c.clone());
                    }
                }
                h
            })
            .collect();
        Matrix::from_fn(n, n, |a, b| {
            let mut t = T::zero();
            for ((e, f), v) in &ads[a] {
                if let Some(w) = ads[b].get(&(*f, *e)) {
                    t += v.clone() * w;
                }
            }
            t
        })
    }

    pub fn graded_dims(&self) -> Option<BTreeMap<i32, usize>> {
        let deg = self.degrees.as_ref()?;
        let mut out = BTreeMap::new();
        for d in deg {
            *out.entry(*d).or_insert(0) += 1;
        }
        Some(out)
    }

    pub fn invariants(&self) -> InvariantTuple {
        InvariantTuple {
            dim: self.dim,
            derived_series: self.derived_series(),
            lower_central_series: self.lower_central_series(),
            center_dim: self.center().dim(),
            killing_rank: self.killing_form().rank(),
            graded_dims: self.graded_dims(),
        }
    }

    /// Structure constants in the basis `f_i = Σ_j p[i][j] e_j`.
    pub fn change_basis(&self, p: &Matrix<T>) -> Option<Self> {
        let n = self.dim;
        if p.rows() != n || p.cols() != n {
            return None;
        }
        let inv = p.inverse()?;
        let rows: Vec<Sparse<T>> = (0..n).map(|i| sparse_from_dense(p.row(i))).collect();
        // w = Σ_k w_k e_k = Σ_i (w·P⁻¹)_i f_i
        let inv_rows: Vec<Sparse<T>> = (0..n).map(|i| sparse_from_dense(inv.row(i))).collect();
        let mut table = vec![vec![Sparse::new(); n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let mut w: BTreeMap<usize, T> = BTreeMap::new();
                for (i, pa) in &rows[a] {
                    for (j, pb) in &rows[b] {
                        if i == j {
                            continue;
                        }
                        let s = pa.clone() * pb;
                        for (k, c) in &self.table[*i][*j] {
                            *w.entry(*k).or_insert_with(T::zero) += s.clone() * c;
                        }
                    }
                }
                let mut d: BTreeMap<usize, T> = BTreeMap::new();
                for (k, wk) in w.iter().filter(|(_, c)| !c.is_zero()) {
                    for (e, q) in &inv_rows[*k] {
                        *d.entry(*e).or_insert_with(T::zero) += wk.clone() * q;
                    }
                }
                let d: Sparse<T> = d.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                table[b][a] = d.iter().map(|(e, c)| (*e, -c.clone())).collect();
                table[a][b] = d;
            }
        }
        Self::from_sparse(n, table, None, Vec::new()).ok()
    }
}

/// Basis-independent data used to tell algebras apart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantTuple {
    pub dim: usize,
    pub derived_series: Vec<usize>,
    pub lower_central_series: Vec<usize>,
    pub center_dim: usize,
    pub killing_rank: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graded_dims: Option<BTreeMap<i32, usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedNonIsomorphic,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::CertifiedNonIsomorphic => "certified non-isomorphic",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub left: InvariantTuple,
    pub right: InvariantTuple,
    /// Names of the isomorphism invariants that differ.
    pub differing: Vec<String>,
    pub verdict: Verdict,
}

/// Side-by-side invariants. Gradings are reported but never used for the
/// verdict, since one algebra can carry several gradings.
pub fn compare<T: Scalar>(l1: &LieAlgebra<T>, l2: &LieAlgebra<T>) -> Comparison {
    let left = l1.invariants();
    let right = l2.invariants();
    let mut differing = Vec::new();
    if left.dim != right.dim {
        differing.push("dim".to_string());
    }
    if left.derived_series != right.derived_series {
        differing.push("derived_series".to_string());
    }
    if left.lower_central_series != right.lower_central_series {
        differing.push("lower_central_series".to_string());
    }
    if left.center_dim != right.center_dim {
        differing.push("center_dim".to_string());
    }
    if left.killing_rank != right.killing_rank {
        differing.push("killing_rank".to_string());
    }
    let verdict = if differing.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::CertifiedNonIsomorphic
    };
    Comparison {
        left,
        right,
        differing,
        verdict,
    }
}
