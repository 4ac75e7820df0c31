//! Graded nilpotent symbols `n^δ_{k,l}` and their Tanaka prolongations.
//!
//! Non-negative layers are stored as their action on all of `m` (not just
//! `m_{-1}`), so non-fundamental symbols are handled the same way as
//! fundamental ones.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::eds::TableauSpec;
use crate::exact::{Matrix, SpanBasis, Subspace};
use crate::liealg::{LieAlgebra, LieError, Sparse};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TanakaError {
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error("degree-0 map {0} is not a degree-preserving derivation of m")]
    NotDerivation(usize),
    #[error("no {depth} consecutive zero layers up to degree {cap}")]
    NoTermination { depth: usize, cap: i32 },
    #[error("bracket of prolongation elements {0} and {1} is not an element of the prolongation")]
    Reconstruction(usize, usize),
}

/// `m = ⟨D, Y_0…Y_{k-1}, Z_0…Z_{l-1}⟩` with `[Y_i, D] = Y_{i-1}`,
/// `[Z_j, D] = Z_{j-1}`, graded by tableau column.
#[derive(Debug, Clone)]
pub struct GradedNilpotent<T: Scalar> {
    pub spec: TableauSpec,
    pub algebra: LieAlgebra<T>,
    pub depth: usize,
}

impl<T: Scalar> GradedNilpotent<T> {
    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    /// Index of `D` in the basis.
    pub fn d_index(&self) -> usize {
        0
    }

    pub fn degree(&self, i: usize) -> i32 {
        self.algebra.degrees().expect("graded")[i]
    }

    pub fn labels(&self) -> &[String] {
        self.algebra.labels()
    }

    /// Whether `m_{-1}` generates `m`.
    pub fn is_fundamental(&self) -> bool {
        let n = self.dim();
        let gens: Vec<Vec<T>> = (0..n)
            .filter(|&i| self.degree(i) == -1)
            .map(|i| unit(n, i))
            .collect();
        let g = Subspace::from_generators(n, gens).expect("right length");
        let mut s = g.clone();
        loop {
            let next = s
                .sum(&self.algebra.bracket_span(&g, &s))
                .expect("same ambient");
            if next.dim() == s.dim() {
                return s.dim() == n;
            }
            s = next;
        }
    }
}

fn unit<T: Scalar>(n: usize, i: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    v[i] = T::one();
    v
}

pub fn build_gnla<T: Scalar>(spec: TableauSpec) -> Result<GradedNilpotent<T>, LieError> {
    let (k, l) = (spec.k, spec.l);
    let n = 1 + k + l;
    let y = |i: usize| 1 + i;
    let z = |j: usize| 1 + k + j;
    let mut table = vec![vec![Sparse::new(); n]; n];
    for i in 1..k {
        table[y(i)][0] = vec![(y(i - 1), T::one())];
        table[0][y(i)] = vec![(y(i - 1), -T::one())];
    }
    for j in 1..l {
        table[z(j)][0] = vec![(z(j - 1), T::one())];
        table[0][z(j)] = vec![(z(j - 1), -T::one())];
    }
    let mut degrees = vec![-1];
    let mut labels = vec!["D".to_string()];
    for i in 0..k {
        degrees.push(-(spec.col_e(i) as i32));
        labels.push(format!("Y{i}"));
    }
    for j in 0..l {
        degrees.push(-(spec.col_f(j) as i32));
        labels.push(format!("Z{j}"));
    }
    let algebra = LieAlgebra::from_sparse(n, table, Some(degrees), labels)?;
    assert_eq!(
        algebra.lower_central_series().last(),
        Some(&0),
        "m is nilpotent"
    );
    Ok(GradedNilpotent {
        spec,
        algebra,
        depth: spec.depth(),
    })
}

/// Degree-0 derivations of `m`, as matrices whose column `v` is the image of
/// basis element `v`.
pub fn der0<T: Scalar>(m: &GradedNilpotent<T>) -> Vec<Matrix<T>> {
    let mut b = Builder::new(m);
    let out: Vec<Matrix<T>> = b
        .derivations(0)
        .into_iter()
        .map(|cols| to_matrix(m.dim(), &cols))
        .collect();
    debug_assert!(closed_under_commutator(&out));
    out
}

fn to_matrix<T: Scalar>(n: usize, cols: &[Sparse<T>]) -> Matrix<T> {
    let mut mat = Matrix::zeros(n, n);
    for (v, col) in cols.iter().enumerate() {
        for (w, c) in col {
            mat[(*w, v)] = c.clone();
        }
    }
    mat
}

fn closed_under_commutator<T: Scalar>(maps: &[Matrix<T>]) -> bool {
    if maps.is_empty() {
        return true;
    }
    let flat: Vec<Vec<T>> = maps.iter().map(Matrix::to_vec).collect();
    let n = flat[0].len();
    let span = Subspace::from_generators(n, flat).expect("same size");
    maps.iter().all(|a| {
        maps.iter()
            .all(|b| span.contains(&a.commutator(b).to_vec()))
    })
}

/// The maps among `maps` (and their combinations) that send each listed
/// subspace of `m` into itself.
pub fn stab<T: Scalar>(maps: &[Matrix<T>], subspaces: &[Subspace<T>]) -> Vec<Matrix<T>> {
    if maps.is_empty() {
        return Vec::new();
    }
    let n = maps[0].rows();
    let mut rows: Vec<Vec<T>> = Vec::new();
    for e in subspaces {
        let ann = e.annihilator();
        for v in e.basis_vectors() {
            let images: Vec<Vec<T>> = maps
                .iter()
                .map(|a| a.mul_vec(&v).expect("square"))
                .collect();
            for w in ann.basis_vectors() {
                rows.push(
                    images
                        .iter()
                        .map(|img| crate::exact::dot(&w, img))
                        .collect(),
                );
            }
        }
    }
    if rows.is_empty() {
        return maps.to_vec();
    }
    let constraint = Matrix::from_rows(maps.len(), rows).expect("uniform rows");
    constraint
        .kernel()
        .basis_vectors()
        .into_iter()
        .map(|c| {
            let mut acc = Matrix::zeros(n, n);
            for (a, s) in maps.iter().zip(&c) {
                if !s.is_zero() {
                    acc = acc.add(&a.scale(s));
                }
            }
            acc
        })
        .collect()
}

/// `Stab(⟨D⟩) ∩ Der_0(m)`.
pub fn stab_d<T: Scalar>(m: &GradedNilpotent<T>) -> Vec<Matrix<T>> {
    let e = Subspace::from_generators(m.dim(), vec![unit(m.dim(), m.d_index())]).expect("length");
    stab(&der0(m), &[e])
}

#[derive(Debug, Clone)]
pub struct GradedProlongation<T: Scalar> {
    /// Dimension per degree, negative degrees included.
    pub graded_dims: BTreeMap<i32, usize>,
    /// The whole prolongation: `m` first, then the layers by degree.
    pub algebra: LieAlgebra<T>,
    /// For each non-negative basis element, its action on `m`
    /// (column `v` = coordinates of `[element, v]`).
    pub actions: Vec<Vec<Sparse<T>>>,
}

impl<T: Scalar> GradedProlongation<T> {
    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn dims_from(&self, lo: i32, hi: i32) -> Vec<usize> {
        (lo..=hi)
            .map(|d| self.graded_dims.get(&d).copied().unwrap_or(0))
            .collect()
    }
}

struct Layer<T> {
    offset: usize,
    len: usize,
    solver: Option<SpanBasis<T>>,
}

struct Builder<'a, T: Scalar> {
    m: &'a GradedNilpotent<T>,
    /// Degree of each global basis element.
    degree: Vec<i32>,
    /// Action on m of each non-negative element, indexed from `m.dim()`.
    action: Vec<Vec<Sparse<T>>>,
    layers: Vec<Layer<T>>,
    memo: HashMap<(usize, usize), Sparse<T>>,
}

fn axpy<T: Scalar>(acc: &mut BTreeMap<usize, T>, s: &T, v: &Sparse<T>) {
    for (i, c) in v {
        let e = acc.entry(*i).or_insert_with(T::zero);
        *e = e.clone() + s.clone() * c.clone();
    }
}

fn finish<T: Scalar>(acc: BTreeMap<usize, T>) -> Sparse<T> {
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

impl<'a, T: Scalar> Builder<'a, T> {
    fn new(m: &'a GradedNilpotent<T>) -> Self {
        Builder {
            m,
            degree: (0..m.dim()).map(|i| m.degree(i)).collect(),
            action: Vec::new(),
            layers: Vec::new(),
            memo: HashMap::new(),
        }
    }

    fn total(&self) -> usize {
        self.degree.len()
    }

    /// Global indices of degree `d`.
    fn indices_of(&self, d: i32) -> Vec<usize> {
        if d < 0 {
            (0..self.m.dim()).filter(|&i| self.degree[i] == d).collect()
        } else {
            match self.layers.get(d as usize) {
                Some(l) => (l.offset..l.offset + l.len).collect(),
                None => Vec::new(),
            }
        }
    }

    fn bracket_basis(&mut self, p: usize, q: usize) -> Sparse<T> {
        let n = self.m.dim();
        match (p < n, q < n) {
            (true, true) => self.m.algebra.bracket_basis(p, q).clone(),
            (false, true) => self.action[p - n][q].clone(),
            (true, false) => self.action[q - n][p]
                .iter()
                .map(|(i, c)| (*i, -c.clone()))
                .collect(),
            (false, false) => {
                if let Some(r) = self.memo.get(&(p, q)) {
                    return r.clone();
                }
                let r = self.reconstruct(p, q);
                self.memo.insert(
                    (q, p),
                    r.iter().map(|(i, c)| (*i, -c.clone())).collect(),
                );
                self.memo.insert((p, q), r.clone());
                r
            }
        }
    }

    fn bracket_with(&mut self, p: usize, v: &Sparse<T>) -> Sparse<T> {
        let mut acc = BTreeMap::new();
        for (r, c) in v {
            let b = self.bracket_basis(p, *r);
            axpy(&mut acc, c, &b);
        }
        finish(acc)
    }

    /// `[p, q]` for two non-negative elements: the element whose action on
    /// `m` is `v ↦ [p,[q,v]] − [q,[p,v]]`.
    fn reconstruct(&mut self, p: usize, q: usize) -> Sparse<T> {
        let n = self.m.dim();
        let d = self.degree[p] + self.degree[q];
        let mut psi = Vec::with_capacity(n);
        for v in 0..n {
            let qv = self.bracket_basis(q, v);
            let pv = self.bracket_basis(p, v);
            let mut acc = BTreeMap::new();
            axpy(&mut acc, &T::one(), &self.bracket_with(p, &qv));
            axpy(&mut acc, &-T::one(), &self.bracket_with(q, &pv));
            psi.push(finish(acc));
        }
        let Some(layer) = self.layers.get(d as usize) else {
            assert!(
                psi.iter().all(Vec::is_empty),
                "bracket lands in a vanishing layer"
            );
            return Vec::new();
        };
        let Some(solver) = &layer.solver else {
            assert!(psi.iter().all(Vec::is_empty), "bracket lands in a zero layer");
            return Vec::new();
        };
        let flat = flatten(&psi, layer.offset);
        let coords = solver
            .solve(&flat)
            .unwrap_or_else(|| panic!("{}", TanakaError::Reconstruction(p, q)));
        coords
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (layer.offset + i, c))
            .collect()
    }

    /// All degree-`i` maps `φ: m → g` satisfying
    /// `φ[u,v] = [φu, v] + [u, φv]`, each given by its columns.
    fn derivations(&mut self, i: i32) -> Vec<Vec<Sparse<T>>> {
        let n = self.m.dim();
        let mut unknowns: Vec<(usize, usize)> = Vec::new();
        for v in 0..n {
            for g in self.indices_of(i + self.degree[v]) {
                unknowns.push((v, g));
            }
        }
        if unknowns.is_empty() {
            return Vec::new();
        }
        let total = self.total();
        let mut rows: Vec<Vec<T>> = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let mut block = vec![vec![T::zero(); unknowns.len()]; total];
                let uv = self.m.algebra.bracket_basis(u, v).clone();
                for (col, &(w, g)) in unknowns.iter().enumerate() {
                    if let Some((_, c)) = uv.iter().find(|(e, _)| *e == w) {
                        block[g][col] = block[g][col].clone() + c.clone();
                    }
                    if w == u {
                        for (r, c) in self.bracket_basis(g, v) {
                            block[r][col] = block[r][col].clone() - c;
                        }
                    }
                    if w == v {
                        for (r, c) in self.bracket_basis(g, u) {
                            block[r][col] = block[r][col].clone() + c;
                        }
                    }
                }
                rows.extend(block.into_iter().filter(|r| r.iter().any(|c| !c.is_zero())));
            }
        }
        let kernel = if rows.is_empty() {
            Subspace::full(unknowns.len())
        } else {
            Matrix::from_rows(unknowns.len(), rows)
                .expect("uniform rows")
                .kernel()
        };
        kernel
            .basis_vectors()
            .into_iter()
            .map(|t| {
                let mut cols: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); n];
                for (c, &(v, g)) in t.iter().zip(&unknowns) {
                    if !c.is_zero() {
                        cols[v].insert(g, c.clone());
                    }
                }
                cols.into_iter().map(finish).collect()
            })
            .collect()
    }

    fn push_layer(&mut self, maps: Vec<Vec<Sparse<T>>>) {
        let offset = self.total();
        let d = self.layers.len() as i32;
        let flat: Vec<Vec<T>> = maps.iter().map(|m| flatten(m, offset)).collect();
        let solver = if maps.is_empty() {
            None
        } else {
            let width = flat[0].len();
            Some(
                SpanBasis::new(&Matrix::from_rows(width, flat).expect("uniform"))
                    .expect("layer maps are independent"),
            )
        };
        self.layers.push(Layer {
            offset,
            len: maps.len(),
            solver,
        });
        for m in maps {
            self.degree.push(d);
            self.action.push(m);
        }
    }
}

/// Columns over global indices `< width`, concatenated.
fn flatten<T: Scalar>(cols: &[Sparse<T>], width: usize) -> Vec<T> {
    let mut out = vec![T::zero(); cols.len() * width];
    for (v, col) in cols.iter().enumerate() {
        for (i, c) in col {
            assert!(*i < width, "action lands in a lower layer");
            out[v * width + i] = c.clone();
        }
    }
    out
}

/// Largest graded algebra with negative part `m`, degree-0 part `g0`, and no
/// non-negative element annihilating `m`. Stops after `depth` consecutive
/// zero layers; gives up past `cap`.
pub fn tanaka_prolong<T: Scalar>(
    m: &GradedNilpotent<T>,
    g0: &[Matrix<T>],
    cap: i32,
) -> Result<GradedProlongation<T>, TanakaError> {
    let n = m.dim();
    let mut b = Builder::new(m);
    let der = der0(m);
    let der_span = Subspace::from_generators(n * n, der.iter().map(Matrix::to_vec).collect())
        .expect("same size");
    let mut layer0 = Vec::with_capacity(g0.len());
    for (idx, a) in g0.iter().enumerate() {
        if !der_span.contains(&a.to_vec()) {
            return Err(TanakaError::NotDerivation(idx));
        }
        layer0.push(
            (0..n)
                .map(|v| {
                    (0..n)
                        .filter(|&w| !a[(w, v)].is_zero())
                        .map(|w| (w, a[(w, v)].clone()))
                        .collect()
                })
                .collect(),
        );
    }
    let mut zeros = usize::from(layer0.is_empty());
    b.push_layer(layer0);
    let mut d = 0;
    while zeros < m.depth {
        d += 1;
        if d > cap {
            return Err(TanakaError::NoTermination {
                depth: m.depth,
                cap,
            });
        }
        let layer = b.derivations(d);
        zeros = if layer.is_empty() { zeros + 1 } else { 0 };
        b.push_layer(layer);
    }
    // trailing zero layers carry no elements
    while b.layers.last().is_some_and(|l| l.len == 0) {
        b.layers.pop();
    }
    let total = b.total();
    let mut table = vec![vec![Sparse::new(); total]; total];
    for p in 0..total {
        for q in (p + 1)..total {
            let r = b.bracket_basis(p, q);
            table[q][p] = r.iter().map(|(i, c)| (*i, -c.clone())).collect();
            table[p][q] = r;
        }
    }
    let mut labels: Vec<String> = m.labels().to_vec();
    for (d, layer) in b.layers.iter().enumerate() {
        labels.extend((0..layer.len).map(|i| format!("g{d}_{i}")));
    }
    let mut graded_dims = BTreeMap::new();
    for d in &b.degree {
        *graded_dims.entry(*d).or_insert(0) += 1;
    }
    let algebra = LieAlgebra::from_sparse(total, table, Some(b.degree.clone()), labels)?;
    Ok(GradedProlongation {
        graded_dims,
        algebra,
        actions: b.action,
    })
}

/// `tanaka_prolong(build_gnla(spec), Stab⟨D⟩)`.
pub fn prolong_spec<T: Scalar>(spec: TableauSpec) -> Result<GradedProlongation<T>, TanakaError> {
    let m = build_gnla::<T>(spec)?;
    let g0 = stab_d(&m);
    tanaka_prolong(&m, &g0, 64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn spec(k: i64, l: i64, d: i64) -> TableauSpec {
        TableauSpec::new(k, l, d).unwrap()
    }

    #[test]
    fn gradings() {
        let m = build_gnla::<Rat>(spec(2, 3, 0)).unwrap();
        let deg: Vec<i32> = (0..m.dim()).map(|i| m.degree(i)).collect();
        // D, Y0, Y1, Z0, Z1, Z2
        assert_eq!(deg, vec![-1, -3, -2, -3, -2, -1]);
        assert!(!m.is_fundamental());
        let m = build_gnla::<Rat>(spec(2, 3, 1)).unwrap();
        let deg: Vec<i32> = (0..m.dim()).map(|i| m.degree(i)).collect();
        assert_eq!(deg, vec![-1, -2, -1, -3, -2, -1]);
        assert!(m.is_fundamental());
    }

    #[test]
    fn degree_zero_parts() {
        let m1 = build_gnla::<Rat>(spec(2, 3, 0)).unwrap();
        let m2 = build_gnla::<Rat>(spec(2, 3, 1)).unwrap();
        assert!(der0(&m2).len() > 4);
        assert_eq!(stab_d(&m1).len(), 4);
        assert_eq!(stab_d(&m2).len(), 4);
        assert_eq!(stab(&der0(&m1), &[]).len(), der0(&m1).len());
        // grading element
        let n = m1.dim();
        let grading = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                Rat::from_int(m1.degree(i) as i64)
            } else {
                Rat::from_int(0)
            }
        });
        let span = Subspace::from_generators(n * n, der0(&m1).iter().map(Matrix::to_vec).collect())
            .unwrap();
        assert!(span.contains(&grading.to_vec()));
    }

    #[test]
    fn prolongations_of_the_23_symbols() {
        let p1 = prolong_spec::<Rat>(spec(2, 3, 0)).unwrap();
        assert_eq!(p1.dims_from(-3, 3), vec![2, 2, 2, 4, 2, 1, 2]);
        let p2 = prolong_spec::<Rat>(spec(2, 3, 1)).unwrap();
        assert_eq!(p2.dims_from(-3, 3), vec![1, 2, 3, 4, 3, 1, 1]);
        assert_eq!(p2.dim(), 15);
        for a in &p1.actions {
            assert!(a.iter().any(|c| !c.is_empty()), "condition (2)");
        }
    }

    #[test]
    fn second_kind_24() {
        assert_eq!(prolong_spec::<Rat>(spec(2, 4, 2)).unwrap().dim(), 14);
    }

    #[test]
    fn rejects_non_derivations() {
        let m = build_gnla::<Rat>(spec(2, 3, 0)).unwrap();
        let n = m.dim();
        let bad = Matrix::from_fn(n, n, |i, j| {
            if (i, j) == (0, 1) {
                Rat::from_int(1)
            } else {
                Rat::from_int(0)
            }
        });
        assert!(matches!(
            tanaka_prolong(&m, &[bad], 10),
            Err(TanakaError::NotDerivation(0))
        ));
    }
}
