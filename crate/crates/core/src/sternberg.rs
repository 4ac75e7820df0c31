//! Linear symbols `X ∈ gl(V)`, their flag-symbol prolongations inside
//! `gl(V)`, and Sternberg prolongation to polynomial vector fields on `V`.
//!
//! Layer `i` of a Sternberg prolongation is stored as vector fields with
//! homogeneous coefficients of degree `i+1`. Each layer splits into weight
//! spaces of the diagonal torus of `a`, and the recursion is solved one
//! weight block at a time.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::eds::TableauSpec;
use crate::exact::{Matrix, SpanBasis, Subspace};
use crate::liealg::{LieAlgebra, LieError, Sparse};
use crate::poly::{Monomial, Poly, VarTable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SternbergError {
    #[error("matrices must be square of size {0}")]
    Shape(usize),
    #[error("layer {0} has linearly dependent elements")]
    Dependent(i32),
    #[error("bracket of elements {0} and {1} leaves the algebra")]
    NotClosed(usize, usize),
    #[error("no zero layer up to degree {cap}; layer dimensions so far {dims:?}")]
    Divergence { cap: usize, dims: Vec<usize> },
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// `V = ⟨e_0…e_{k-1}, f_0…f_{l-1}⟩` graded by tableau column, with the
/// shift operator `X`.
#[derive(Debug, Clone)]
pub struct GradedSymbol<T: Scalar> {
    pub spec: TableauSpec,
    pub degrees: Vec<i32>,
    /// Column `v` is `X(v)`.
    pub x: Matrix<T>,
    pub names: Vec<String>,
}

impl<T: Scalar> GradedSymbol<T> {
    pub fn dim(&self) -> usize {
        self.degrees.len()
    }
}

pub fn build_symbol<T: Scalar>(spec: TableauSpec) -> GradedSymbol<T> {
    let (k, l) = (spec.k, spec.l);
    let n = k + l;
    let mut x = Matrix::zeros(n, n);
    for i in 1..k {
        x[(i - 1, i)] = T::one();
    }
    for j in 1..l {
        x[(k + j - 1, k + j)] = T::one();
    }
    let degrees: Vec<i32> = (0..k)
        .map(|i| -(spec.col_e(i) as i32))
        .chain((0..l).map(|j| -(spec.col_f(j) as i32)))
        .collect();
    let names = (0..k)
        .map(|i| format!("e{i}"))
        .chain((0..l).map(|j| format!("f{j}")))
        .collect();
    for a in 0..n {
        for b in 0..n {
            if !x[(a, b)].is_zero() {
                assert_eq!(degrees[a], degrees[b] - 1, "X lowers degree by one");
            }
        }
    }
    GradedSymbol {
        spec,
        degrees,
        x,
        names,
    }
}

/// A graded subalgebra of `gl(V)`; each layer holds independent matrices.
#[derive(Debug, Clone)]
pub struct GradedMatrixAlgebra<T: Scalar> {
    n: usize,
    names: Vec<String>,
    layers: BTreeMap<i32, Vec<Matrix<T>>>,
}

fn flat<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    m.to_vec()
}

impl<T: Scalar> GradedMatrixAlgebra<T> {
    /// Checks shapes, independence within each layer and `[a_i, a_j] ⊆ a_{i+j}`.
    pub fn new(
        names: Vec<String>,
        layers: BTreeMap<i32, Vec<Matrix<T>>>,
    ) -> Result<Self, SternbergError> {
        let n = names.len();
        let mut clean = BTreeMap::new();
        for (d, ms) in layers {
            if ms.iter().any(|m| m.rows() != n || m.cols() != n) {
                return Err(SternbergError::Shape(n));
            }
            if ms.is_empty() {
                continue;
            }
            let s = Subspace::from_generators(n * n, ms.iter().map(flat).collect())
                .expect("square matrices");
            if s.dim() != ms.len() {
                return Err(SternbergError::Dependent(d));
            }
            clean.insert(d, ms);
        }
        let alg = GradedMatrixAlgebra {
            n,
            names,
            layers: clean,
        };
        alg.check_closure()?;
        Ok(alg)
    }

    /// Everything in degree 0.
    pub fn ungraded(names: Vec<String>, ms: Vec<Matrix<T>>) -> Result<Self, SternbergError> {
        let n = names.len();
        let gens: Vec<Vec<T>> = ms.iter().map(flat).collect();
        if ms.iter().any(|m| m.rows() != n || m.cols() != n) {
            return Err(SternbergError::Shape(n));
        }
        let basis = Subspace::from_generators(n * n, gens).expect("square matrices");
        let ms = basis
            .basis_vectors()
            .into_iter()
            .map(|v| Matrix::from_vec(n, n, v))
            .collect();
        Self::new(names, BTreeMap::from([(0, ms)]))
    }

    fn check_closure(&self) -> Result<(), SternbergError> {
        let spaces: BTreeMap<i32, Subspace<T>> = self
            .layers
            .iter()
            .map(|(d, ms)| {
                let s = Subspace::from_generators(self.n * self.n, ms.iter().map(flat).collect())
                    .expect("square matrices");
                (*d, s)
            })
            .collect();
        let elems = self.elements();
        for (i, (di, a)) in elems.iter().enumerate() {
            for (j, (dj, b)) in elems.iter().enumerate().skip(i + 1) {
                let c = a.commutator(b);
                let ok = match spaces.get(&(di + dj)) {
                    Some(s) => s.contains(&flat(&c)),
                    None => c.is_zero(),
                };
                if !ok {
                    return Err(SternbergError::NotClosed(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.layers.values().map(Vec::len).sum()
    }

    pub fn graded_dims(&self) -> BTreeMap<i32, usize> {
        self.layers.iter().map(|(d, ms)| (*d, ms.len())).collect()
    }

    pub fn layer(&self, d: i32) -> &[Matrix<T>] {
        self.layers.get(&d).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All basis matrices with their degrees, by increasing degree.
    pub fn elements(&self) -> Vec<(i32, &Matrix<T>)> {
        self.layers
            .iter()
            .flat_map(|(d, ms)| ms.iter().map(move |m| (*d, m)))
            .collect()
    }

    /// The underlying subspace of `gl(V)`, forgetting the grading.
    pub fn span(&self) -> Subspace<T> {
        let gens = self.elements().into_iter().map(|(_, m)| flat(m)).collect();
        Subspace::from_generators(self.n * self.n, gens).expect("square matrices")
    }

    pub fn contains(&self, m: &Matrix<T>) -> bool {
        m.rows() == self.n && m.cols() == self.n && self.span().contains(&flat(m))
    }

    /// Structure constants of the commutator bracket, graded by layer.
    pub fn to_lie_algebra(&self) -> Result<LieAlgebra<T>, SternbergError> {
        let elems = self.elements();
        let dim = elems.len();
        let mut offset = BTreeMap::new();
        let mut solvers = BTreeMap::new();
        let mut start = 0;
        for (d, ms) in &self.layers {
            let rows = Matrix::from_rows(self.n * self.n, ms.iter().map(flat).collect())
                .expect("square matrices");
            solvers.insert(*d, SpanBasis::new(&rows).expect("independent layer"));
            offset.insert(*d, start);
            start += ms.len();
        }
        let mut table = vec![vec![Sparse::new(); dim]; dim];
        for a in 0..dim {
            for b in (a + 1)..dim {
                let c = elems[a].1.commutator(elems[b].1);
                if c.is_zero() {
                    continue;
                }
                let d = elems[a].0 + elems[b].0;
                let coeffs = solvers
                    .get(&d)
                    .and_then(|s| s.solve(&flat(&c)))
                    .ok_or(SternbergError::NotClosed(a, b))?;
                let s: Sparse<T> = coeffs
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(e, v)| (offset[&d] + e, v))
                    .collect();
                table[b][a] = s.iter().map(|(e, v)| (*e, -v.clone())).collect();
                table[a][b] = s;
            }
        }
        let degrees = elems.iter().map(|(d, _)| *d).collect();
        Ok(LieAlgebra::from_sparse(dim, table, Some(degrees), Vec::new())?)
    }
}

fn unit_matrix<T: Scalar>(n: usize, a: usize, b: usize) -> Matrix<T> {
    let mut m = Matrix::zeros(n, n);
    m[(a, b)] = T::one();
    m
}

/// `a_{-1} = ⟨X⟩`, `a_i = {u ∈ gl_i(V) : [u, X] ∈ a_{i-1}}` for every degree
/// `i ≥ 0` that occurs in `gl(V)`.
pub fn flag_symbol_prolong<T: Scalar>(sym: &GradedSymbol<T>) -> GradedMatrixAlgebra<T> {
    let n = sym.dim();
    let deg = &sym.degrees;
    let top = deg.iter().max().unwrap() - deg.iter().min().unwrap();
    let mut layers = BTreeMap::from([(-1, vec![sym.x.clone()])]);
    let mut prev = Subspace::from_generators(n * n, vec![flat(&sym.x)]).expect("n×n");
    for i in 0..=top {
        let units: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| deg[a] - deg[b] == i)
            .collect();
        if units.is_empty() {
            prev = Subspace::zero(n * n);
            continue;
        }
        let images: Vec<Vec<T>> = units
            .iter()
            .map(|&(a, b)| flat(&unit_matrix(n, a, b).commutator(&sym.x)))
            .collect();
        let ann = prev.annihilator();
        let cons = Matrix::from_fn(ann.dim(), units.len(), |r, c| {
            crate::exact::dot(ann.basis().row(r), &images[c])
        });
        let sol: Vec<Matrix<T>> = cons
            .kernel()
            .basis_vectors()
            .into_iter()
            .map(|v| {
                let mut m = Matrix::zeros(n, n);
                for (t, &(a, b)) in v.iter().zip(&units) {
                    m[(a, b)] = t.clone();
                }
                m
            })
            .collect();
        prev = Subspace::from_generators(n * n, sol.iter().map(flat).collect()).expect("n×n");
        if !sol.is_empty() {
            layers.insert(i, sol);
        }
    }
    GradedMatrixAlgebra::new(sym.names.clone(), layers).expect("flag-symbol prolongation is a graded subalgebra")
}

/// Entrywise transpose with the grading negated.
pub fn transpose_algebra<T: Scalar>(a: &GradedMatrixAlgebra<T>) -> GradedMatrixAlgebra<T> {
    let layers = a
        .layers
        .iter()
        .map(|(d, ms)| (-d, ms.iter().map(Matrix::transpose).collect()))
        .collect();
    GradedMatrixAlgebra::new(a.names.clone(), layers).expect("transpose of a subalgebra is a subalgebra")
}

/// A polynomial vector field `Σ p_c ∂_c` on `V`.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyField<T: Scalar> {
    coeffs: Vec<Poly<T>>,
}

type Key = (usize, Monomial);
type SparseField<T> = BTreeMap<Key, T>;

impl<T: Scalar> PolyField<T> {
    fn from_sparse(vars: &Arc<VarTable>, s: &SparseField<T>) -> Self {
        let mut coeffs = vec![Poly::zero(vars); vars.len()];
        for ((c, m), v) in s {
            coeffs[*c] = &coeffs[*c] + &Poly::monomial(vars, m.clone(), v.clone());
        }
        PolyField { coeffs }
    }

    fn to_sparse(&self) -> SparseField<T> {
        let mut s = BTreeMap::new();
        for (c, p) in self.coeffs.iter().enumerate() {
            for (m, v) in p.terms() {
                s.insert((c, m.clone()), v.clone());
            }
        }
        s
    }

    pub fn coeffs(&self) -> &[Poly<T>] {
        &self.coeffs
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        self.coeffs[0].vars()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Poly::is_zero)
    }

    /// The field `Σ_{c,b} A[c][b] u_b ∂_c` of a matrix.
    pub fn linear(vars: &Arc<VarTable>, a: &Matrix<T>) -> Self {
        let coeffs = (0..vars.len())
            .map(|c| {
                let mut p = Poly::zero(vars);
                for b in 0..vars.len() {
                    if !a[(c, b)].is_zero() {
                        p.add_scaled(&Poly::var(vars, b), &a[(c, b)]);
                    }
                }
                p
            })
            .collect();
        PolyField { coeffs }
    }

    pub fn apply(&self, p: &Poly<T>) -> Poly<T> {
        let mut out = Poly::zero(self.vars());
        for (c, vc) in self.coeffs.iter().enumerate() {
            if !vc.is_zero() {
                out = &out + &(vc * &p.partial(c));
            }
        }
        out
    }

    pub fn bracket(&self, other: &Self) -> Self {
        let coeffs = (0..self.coeffs.len())
            .map(|c| &self.apply(&other.coeffs[c]) - &other.apply(&self.coeffs[c]))
            .collect();
        PolyField { coeffs }
    }
}

impl<T: Scalar> fmt::Display for PolyField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = self.vars().clone();
        let mut first = true;
        for (c, p) in self.coeffs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let name = vars.name(c);
            let text = p.to_string();
            let body = if p.len() > 1 {
                format!("({text})*∂{name}")
            } else if text == "1" {
                format!("∂{name}")
            } else if text == "-1" {
                format!("-∂{name}")
            } else {
                format!("{text}*∂{name}")
            };
            match (first, body.strip_prefix('-')) {
                (true, _) => write!(f, "{body}")?,
                (false, Some(rest)) => write!(f, " - {rest}")?,
                (false, None) => write!(f, " + {body}")?,
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Debug for PolyField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyField({self})")
    }
}

#[derive(Debug, Clone)]
pub struct SternbergProlongation<T: Scalar> {
    pub vars: Arc<VarTable>,
    /// Layer `i` holds fields with coefficients of degree `i+1`.
    pub layers: BTreeMap<i32, Vec<PolyField<T>>>,
    /// Structure constants over the concatenated layer bases, graded by layer.
    pub algebra: LieAlgebra<T>,
}

impl<T: Scalar> SternbergProlongation<T> {
    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn graded_dims(&self) -> BTreeMap<i32, usize> {
        self.layers.iter().map(|(d, v)| (*d, v.len())).collect()
    }

    pub fn basis(&self) -> Vec<&PolyField<T>> {
        self.layers.values().flatten().collect()
    }
}

/// Weight of `u^m ∂_c` under each diagonal torus element `d`: `m·d - d_c`.
fn weight<T: Scalar>(torus: &[Vec<T>], key: &Key) -> Vec<T> {
    let (c, m) = key;
    torus
        .iter()
        .map(|d| {
            let mut w = -d[*c].clone();
            for (b, &e) in m.exps().iter().enumerate() {
                if e != 0 {
                    w += d[b].clone() * T::from_int(e as i64);
                }
            }
            w
        })
        .collect()
}

fn shifted(m: &Monomial, b: usize, by: i32) -> Monomial {
    let mut e = m.0.clone();
    e[b] += by;
    Monomial(e)
}

/// `∂_b` of a sparse field.
fn partial<T: Scalar>(s: &SparseField<T>, b: usize) -> SparseField<T> {
    s.iter()
        .filter(|((_, m), _)| m.exps()[b] > 0)
        .map(|((c, m), v)| {
            let e = m.exps()[b];
            ((*c, shifted(m, b, -1)), v.clone() * T::from_int(e as i64))
        })
        .collect()
}

/// A layer split into torus weight spaces.
type Blocks<T> = HashMap<Vec<T>, Vec<SparseField<T>>>;

fn split_by_weight<T: Scalar>(torus: &[Vec<T>], fields: &[SparseField<T>]) -> Blocks<T> {
    let mut blocks: Blocks<T> = HashMap::new();
    for f in fields {
        let mut parts: HashMap<Vec<T>, SparseField<T>> = HashMap::new();
        for (k, v) in f {
            parts.entry(weight(torus, k)).or_default().insert(k.clone(), v.clone());
        }
        for (w, p) in parts {
            blocks.entry(w).or_default().push(p);
        }
    }
    // Projections of a torus-stable space span it; reduce each block to a basis.
    let total: usize = blocks
        .values_mut()
        .map(|fs| {
            *fs = independent(fs);
            fs.len()
        })
        .sum();
    assert_eq!(total, independent(fields).len(), "layer is torus-stable");
    blocks
}

/// An echelon basis of the span of sparse fields.
fn independent<T: Scalar>(fields: &[SparseField<T>]) -> Vec<SparseField<T>> {
    let keys: Vec<Key> = fields
        .iter()
        .flat_map(|f| f.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if keys.is_empty() {
        return Vec::new();
    }
    let pos: HashMap<&Key, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let rows = fields
        .iter()
        .map(|f| {
            let mut r = vec![T::zero(); keys.len()];
            for (k, v) in f {
                r[pos[k]] = v.clone();
            }
            r
        })
        .collect();
    Subspace::from_generators(keys.len(), rows)
        .expect("rows have key length")
        .basis_vectors()
        .into_iter()
        .map(|r| to_sparse(&keys, &r))
        .collect()
}

fn to_sparse<T: Scalar>(keys: &[Key], v: &[T]) -> SparseField<T> {
    keys.iter()
        .zip(v)
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k.clone(), c.clone()))
        .collect()
}

fn linear_sparse<T: Scalar>(n: usize, a: &Matrix<T>) -> SparseField<T> {
    let mut s = BTreeMap::new();
    for c in 0..n {
        for b in 0..n {
            if !a[(c, b)].is_zero() {
                let mut e = vec![0; n];
                e[b] = 1;
                s.insert((c, Monomial(e)), a[(c, b)].clone());
            }
        }
    }
    s
}

/// Diagonal matrices in `a`, as vectors of diagonal entries.
fn diagonal_torus<T: Scalar>(a: &GradedMatrixAlgebra<T>) -> Vec<Vec<T>> {
    let n = a.size();
    let diag = Subspace::from_generators(
        n * n,
        (0..n).map(|i| flat(&unit_matrix::<T>(n, i, i))).collect(),
    )
    .expect("n×n");
    a.span()
        .intersect(&diag)
        .expect("same ambient")
        .basis_vectors()
        .into_iter()
        .map(|v| (0..n).map(|i| v[i * n + i].clone()).collect())
        .collect()
}

/// Keeps the combinations of `cands` whose image under `map` lies in the span
/// of `target`.
fn restrict<T: Scalar>(
    cands: Vec<SparseField<T>>,
    images: &[SparseField<T>],
    target: &[SparseField<T>],
) -> Vec<SparseField<T>> {
    if images.iter().all(BTreeMap::is_empty) {
        return cands;
    }
    let keys: Vec<Key> = images
        .iter()
        .chain(target)
        .flat_map(|f| f.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos: HashMap<&Key, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let cols = cands.len() + target.len();
    let mut m = Matrix::zeros(keys.len(), cols);
    for (j, f) in images.iter().enumerate() {
        for (k, v) in f {
            m[(pos[k], j)] = v.clone();
        }
    }
    for (j, f) in target.iter().enumerate() {
        for (k, v) in f {
            m[(pos[k], cands.len() + j)] = -v.clone();
        }
    }
    let sol: Vec<SparseField<T>> = m
        .kernel()
        .basis_vectors()
        .into_iter()
        .map(|v| combine(&cands, &v[..cands.len()]))
        .filter(|f| !f.is_empty())
        .collect();
    independent(&sol)
}

fn combine<T: Scalar>(fields: &[SparseField<T>], coeffs: &[T]) -> SparseField<T> {
    let mut out: SparseField<T> = BTreeMap::new();
    for (f, c) in fields.iter().zip(coeffs) {
        if c.is_zero() {
            continue;
        }
        for (k, v) in f {
            let e = out.entry(k.clone()).or_insert_with(T::zero);
            *e += v.clone() * c;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// `{T of degree i+1 : ∂_b T ∈ prev for every b}`, block by block.
fn next_layer<T: Scalar>(n: usize, torus: &[Vec<T>], prev: &Blocks<T>) -> Blocks<T> {
    let support: HashMap<Key, ()> = prev
        .values()
        .flatten()
        .flat_map(|f| f.keys().map(|k| (k.clone(), ())))
        .collect();
    let mut cands: BTreeSet<Key> = BTreeSet::new();
    for (c, m) in support.keys() {
        for b in 0..n {
            let key = (*c, shifted(m, b, 1));
            let ok = (0..n)
                .filter(|&b2| key.1.exps()[b2] > 0)
                .all(|b2| support.contains_key(&(key.0, shifted(&key.1, b2, -1))));
            if ok {
                cands.insert(key);
            }
        }
    }
    let mut grouped: HashMap<Vec<T>, Vec<Key>> = HashMap::new();
    for k in cands {
        grouped.entry(weight(torus, &k)).or_default().push(k);
    }
    let empty = Vec::new();
    let mut out = HashMap::new();
    for (w, keys) in grouped {
        let mut sol: Vec<SparseField<T>> = keys
            .into_iter()
            .map(|k| BTreeMap::from([(k, T::one())]))
            .collect();
        for b in 0..n {
            if sol.is_empty() {
                break;
            }
            let images: Vec<SparseField<T>> = sol.iter().map(|f| partial(f, b)).collect();
            let tw: Vec<T> = w
                .iter()
                .zip(torus)
                .map(|(wi, d)| wi.clone() - d[b].clone())
                .collect();
            let target = prev.get(&tw).unwrap_or(&empty);
            sol = restrict(sol, &images, target);
        }
        if !sol.is_empty() {
            out.insert(w, sol);
        }
    }
    out
}

fn sorted_fields<T: Scalar>(blocks: &Blocks<T>) -> Vec<SparseField<T>> {
    let mut all: Vec<SparseField<T>> = blocks.values().flatten().cloned().collect();
    all.sort_by(|a, b| a.keys().next().cmp(&b.keys().next()));
    all
}

/// Sternberg prolongation of `a ⊂ gl(V)`; fails when none of the layers
/// `1..=cap` vanishes.
pub fn sternberg_prolong<T: Scalar>(
    a: &GradedMatrixAlgebra<T>,
    cap: usize,
) -> Result<SternbergProlongation<T>, SternbergError> {
    let n = a.size();
    let vars = VarTable::new(a.names().iter().cloned()).expect("distinct basis names");
    let torus = diagonal_torus(a);
    let mut layers: BTreeMap<i32, Vec<SparseField<T>>> = BTreeMap::new();
    layers.insert(
        -1,
        (0..n)
            .map(|c| BTreeMap::from([((c, Monomial::one(n)), T::one())]))
            .collect(),
    );
    let lin: Vec<SparseField<T>> = a
        .elements()
        .into_iter()
        .map(|(_, m)| linear_sparse(n, m))
        .collect();
    let mut blocks = split_by_weight(&torus, &lin);
    if !lin.is_empty() {
        layers.insert(0, sorted_fields(&blocks));
    }
    let mut i = 1;
    loop {
        if blocks.is_empty() {
            break;
        }
        if i > cap {
            return Err(SternbergError::Divergence {
                cap,
                dims: layers.values().map(Vec::len).collect(),
            });
        }
        blocks = next_layer(n, &torus, &blocks);
        if !blocks.is_empty() {
            layers.insert(i as i32, sorted_fields(&blocks));
        }
        i += 1;
    }
    assemble(vars, layers)
}

fn assemble<T: Scalar>(
    vars: Arc<VarTable>,
    sparse: BTreeMap<i32, Vec<SparseField<T>>>,
) -> Result<SternbergProlongation<T>, SternbergError> {
    let layers: BTreeMap<i32, Vec<PolyField<T>>> = sparse
        .iter()
        .map(|(d, fs)| (*d, fs.iter().map(|f| PolyField::from_sparse(&vars, f)).collect()))
        .collect();
    let mut solvers = BTreeMap::new();
    let mut start = 0;
    for (d, fs) in &sparse {
        let keys: Vec<Key> = fs
            .iter()
            .flat_map(|f| f.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos: HashMap<Key, usize> = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let rows = Matrix::from_fn(fs.len(), keys.len(), |r, c| {
            fs[r].get(&keys[c]).cloned().unwrap_or_else(T::zero)
        });
        let solver = SpanBasis::new(&rows).ok_or(SternbergError::Dependent(*d))?;
        solvers.insert(*d, (start, pos, solver));
        start += fs.len();
    }
    let elems: Vec<(i32, &PolyField<T>)> = layers
        .iter()
        .flat_map(|(d, fs)| fs.iter().map(move |f| (*d, f)))
        .collect();
    let dim = elems.len();
    let mut table = vec![vec![Sparse::new(); dim]; dim];
    for a in 0..dim {
        for b in (a + 1)..dim {
            let br = elems[a].1.bracket(elems[b].1);
            if br.is_zero() {
                continue;
            }
            let d = elems[a].0 + elems[b].0;
            let (off, pos, solver) = solvers.get(&d).ok_or(SternbergError::NotClosed(a, b))?;
            let mut v = vec![T::zero(); pos.len()];
            for (k, c) in br.to_sparse() {
                let &p = pos.get(&k).ok_or(SternbergError::NotClosed(a, b))?;
                v[p] = c;
            }
            let coeffs = solver.solve(&v).ok_or(SternbergError::NotClosed(a, b))?;
            let s: Sparse<T> = coeffs
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| (off + e, c))
                .collect();
            table[b][a] = s.iter().map(|(e, c)| (*e, -c.clone())).collect();
            table[a][b] = s;
        }
    }
    let degrees = elems.iter().map(|(d, _)| *d).collect();
    let labels = elems.iter().map(|(_, f)| f.to_string()).collect();
    let algebra = LieAlgebra::from_sparse(dim, table, Some(degrees), labels)?;
    Ok(SternbergProlongation {
        vars,
        layers,
        algebra,
    })
}

/// Default cap `k + l`.
pub fn sternberg_of_spec<T: Scalar>(
    spec: TableauSpec,
) -> Result<SternbergProlongation<T>, SternbergError> {
    let a = flag_symbol_prolong(&build_symbol::<T>(spec));
    sternberg_prolong(&a, spec.k + spec.l)
}

fn monomials(n: usize, deg: i32) -> Vec<Monomial> {
    if n == 0 {
        return if deg == 0 { vec![Monomial(Vec::new())] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for e in (0..=deg).rev() {
        for mut rest in monomials(n - 1, deg - e) {
            rest.0.insert(0, e);
            out.push(rest);
        }
    }
    out
}

/// Layer `i ≥ 1` computed directly as the fields of degree `i+1` all of whose
/// `i`-th order partial derivatives are linear fields in `a`.
pub fn intersection_layer<T: Scalar>(a: &GradedMatrixAlgebra<T>, i: usize) -> Vec<PolyField<T>> {
    let n = a.size();
    let vars = VarTable::new(a.names().iter().cloned()).expect("distinct basis names");
    let keys: Vec<Key> = (0..n)
        .flat_map(|c| monomials(n, i as i32 + 1).into_iter().map(move |m| (c, m)))
        .collect();
    let ann = a.span().annihilator();
    let mut result = Subspace::full(keys.len());
    for alpha in monomials(n, i as i32) {
        // column j: the matrix entries of ∂^α of the j-th unit field
        let cons = Matrix::from_fn(ann.dim(), keys.len(), |r, j| {
            let (c, m) = &keys[j];
            let mut coef = T::one();
            let mut rest = Vec::with_capacity(n);
            for (&e, &al) in m.exps().iter().zip(alpha.exps()) {
                if e < al {
                    return T::zero();
                }
                for t in 0..al {
                    coef *= T::from_int((e - t) as i64);
                }
                rest.push(e - al);
            }
            let b = rest.iter().position(|&e| e == 1).expect("linear remainder");
            coef * ann.basis()[(r, c * n + b)].clone()
        });
        result = result.intersect(&cons.kernel()).expect("same ambient");
        if result.dim() == 0 {
            break;
        }
    }
    result
        .basis_vectors()
        .into_iter()
        .map(|v| PolyField::from_sparse(&vars, &to_sparse(&keys, &v)))
        .collect()
}

/// Whether every layer `1..=max_layer` agrees with [`intersection_layer`].
pub fn matches_intersection_formula<T: Scalar>(
    a: &GradedMatrixAlgebra<T>,
    g: &SternbergProlongation<T>,
    max_layer: usize,
) -> bool {
    (1..=max_layer).all(|i| {
        let direct: Vec<SparseField<T>> = intersection_layer(a, i).iter().map(PolyField::to_sparse).collect();
        let ours: Vec<SparseField<T>> = g
            .layers
            .get(&(i as i32))
            .map(|fs| fs.iter().map(PolyField::to_sparse).collect())
            .unwrap_or_default();
        let both: Vec<SparseField<T>> = direct.iter().chain(&ours).cloned().collect();
        let r = independent(&both).len();
        r == direct.len() && r == ours.len()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{compare, Verdict};
    use crate::Rat;

    fn spec(k: i64, l: i64, d: i64) -> TableauSpec {
        TableauSpec::new(k, l, d).unwrap()
    }

    fn symbol_algebra(k: i64, l: i64, d: i64) -> GradedMatrixAlgebra<Rat> {
        flag_symbol_prolong(&build_symbol(spec(k, l, d)))
    }

    #[test]
    fn symbol_degrees() {
        let s = build_symbol::<Rat>(spec(2, 3, 0));
        assert_eq!(s.degrees, vec![-3, -2, -3, -2, -1]);
        let s = build_symbol::<Rat>(spec(2, 3, 1));
        assert_eq!(s.degrees, vec![-2, -1, -3, -2, -1]);
        let mut p = Matrix::identity(5);
        for _ in 0..5 {
            p = p.mul(&s.x).unwrap();
        }
        assert!(p.is_zero());
    }

    #[test]
    fn flag_symbol_dimensions() {
        assert_eq!(symbol_algebra(2, 3, 1).dim(), 7);
        assert_eq!(symbol_algebra(2, 3, 0).dim(), 7);
        assert_eq!(symbol_algebra(2, 2, 0).dim(), 7);
        let a = symbol_algebra(2, 3, 1);
        assert_eq!(a.graded_dims(), BTreeMap::from([(-1, 1), (0, 4), (1, 2)]));
    }

    #[test]
    fn transpose_round_trip() {
        let a = symbol_algebra(2, 3, 1);
        let t = transpose_algebra(&a);
        assert_eq!(t.dim(), a.dim());
        assert_eq!(t.layer(1), &[a.layer(-1)[0].transpose()]);
        let back = transpose_algebra(&t);
        assert_eq!(back.graded_dims(), a.graded_dims());
        assert_eq!(back.span(), a.span());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn transpose_is_an_involution(i in 0usize..100) {
            let specs = TableauSpec::grid(7);
            let a = flag_symbol_prolong(&build_symbol::<Rat>(specs[i % specs.len()]));
            let t = transpose_algebra(&a);
            let back = transpose_algebra(&t);
            proptest::prop_assert_eq!(back.span(), a.span());
            proptest::prop_assert_eq!(back.graded_dims(), a.graded_dims());
            let flipped: BTreeMap<i32, usize> = a.graded_dims().into_iter().map(|(d, n)| (-d, n)).collect();
            proptest::prop_assert_eq!(t.graded_dims(), flipped);
        }
    }

    #[test]
    fn zero_algebra_prolongs_to_translations() {
        let names = vec!["u0".to_string(), "u1".to_string()];
        let a = GradedMatrixAlgebra::<Rat>::ungraded(names, Vec::new()).unwrap();
        let g = sternberg_prolong(&a, 4).unwrap();
        assert_eq!(g.dim(), 2);
    }

    #[test]
    fn full_gl_diverges() {
        let names = vec!["u0".to_string(), "u1".to_string()];
        let ms = (0..2)
            .flat_map(|a| (0..2).map(move |b| unit_matrix::<Rat>(2, a, b)))
            .collect();
        let a = GradedMatrixAlgebra::ungraded(names, ms).unwrap();
        assert!(matches!(
            sternberg_prolong(&a, 3),
            Err(SternbergError::Divergence { cap: 3, .. })
        ));
    }

    #[test]
    fn first_kind_two_three() {
        let a = symbol_algebra(2, 3, 0);
        let g = sternberg_prolong(&a, 5).unwrap();
        assert_eq!(g.graded_dims(), BTreeMap::from([(-1, 5), (0, 7), (1, 3)]));
        assert!(matches_intersection_formula(&a, &g, 2));
        let t = sternberg_prolong(&transpose_algebra(&a), 5).unwrap();
        assert_eq!(t.dim(), 15);
        assert_eq!(compare(&g.algebra, &t.algebra).verdict, Verdict::CertifiedNonIsomorphic);
    }

    #[test]
    fn vanishing_for_k_two() {
        for l in 3..=5 {
            let g = sternberg_of_spec::<Rat>(spec(2, l, 0)).unwrap();
            let top = *g.graded_dims().keys().last().unwrap();
            assert_eq!(top, l as i32 - 2, "l = {l}");
        }
    }

    /// The scroll algebra for `(k, l) = (2, 3)`, written for the operator
    /// `e1 ↦ e0, f2 ↦ f1 ↦ 2 f0`; `f0 ↦ f0/2` turns it into our `X`.
    fn scroll_family() -> Vec<Matrix<Rat>> {
        let r = |v: i64| Rat::from_int(v);
        let param = |t: usize| {
            let mut v = [0i64; 7];
            v[t] = 1;
            let [a, b, c, e1, e2, p, q] = v;
            let rows = vec![
                vec![a + e1, c, p, q, 0],
                vec![b, -a + e1, 0, p, q],
                vec![0, 0, 2 * a + e2, 2 * c, 0],
                vec![0, 0, b, e2, c],
                vec![0, 0, 0, 2 * b, -2 * a + e2],
            ];
            Matrix::from_rows(5, rows.into_iter().map(|row| row.into_iter().map(r).collect()).collect())
                .unwrap()
        };
        let mut s = Matrix::identity(5);
        s[(2, 2)] = Rat::from_frac(1, 2);
        let s_inv = s.inverse().unwrap();
        (0..7)
            .map(|t| s.mul(&param(t)).unwrap().mul(&s_inv).unwrap())
            .collect()
    }

    #[test]
    fn second_kind_matches_scroll_family() {
        let a = symbol_algebra(2, 3, 1);
        let family = scroll_family();
        assert!(family.iter().all(|m| a.contains(m)));
        let span = Subspace::from_generators(25, family.iter().map(flat).collect()).unwrap();
        assert_eq!(span, a.span());
    }
}
