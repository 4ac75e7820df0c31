//! Determining equations as a finite linear ansatz.
//!
//! The coefficients `P_x`, `P_{y0}`, `P_{z0}` range over polynomials in the
//! non-F coordinates (F-invariance forces exactly that); every other
//! coefficient follows from `[S,X] = λX` through the contact recursion
//! `P_{u'} = X(P_u) − u'·X(P_x)`. What remains are linear conditions: the
//! derived non-F coefficients must not depend on F coordinates, and the two
//! top coefficients must satisfy `X(P_top) = 0`.
//!
//! The system is equivariant under the scaling torus `(x, y, z)`, so the
//! unknowns split into independent weight blocks, each reduced in stages.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{build_eds, is_symmetry, EdsError, ShiftEds, TableauSpec};
use crate::exact::Matrix;
use crate::jet::{JetSpace, VectorField};
use crate::poly::{Monomial, Poly};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct DeterminingSolution<T: Scalar> {
    pub spec: TableauSpec,
    /// Highest graded degree searched.
    pub degree_bound: usize,
    /// Nonzero graded pieces, keyed by degree.
    pub graded_dims: BTreeMap<i64, usize>,
    pub basis: Vec<VectorField<T>>,
}

impl<T: Scalar> DeterminingSolution<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

type Weight = (i64, i64, i64);

fn coord_weight(chart: &JetSpace, c: usize) -> Weight {
    match chart.tower(c) {
        None => (1, 0, 0),
        Some(('y', i)) => (-(i as i64), 1, 0),
        Some((_, j)) => (-(j as i64), 0, 1),
    }
}

fn monomial_weight(chart: &JetSpace, m: &Monomial) -> Weight {
    let mut w = (0, 0, 0);
    for (c, &e) in m.exps().iter().enumerate() {
        if e == 0 {
            continue;
        }
        let cw = coord_weight(chart, c);
        let e = e as i64;
        w = (w.0 + e * cw.0, w.1 + e * cw.1, w.2 + e * cw.2);
    }
    w
}

/// Exponent vectors on `vars` whose weighted degree is exactly `target`.
fn monomials_of_weight(n: usize, vars: &[(usize, i64)], target: i64) -> Vec<Monomial> {
    fn rec(vars: &[(usize, i64)], left: i64, cur: &mut Vec<i32>, out: &mut Vec<Monomial>) {
        let Some((&(v, w), rest)) = vars.split_first() else {
            if left == 0 {
                out.push(Monomial(cur.clone()));
            }
            return;
        };
        for e in 0..=left / w {
            cur[v] = e as i32;
            rec(rest, left - e * w, cur, out);
        }
        cur[v] = 0;
    }
    let mut out = Vec::new();
    if target >= 0 {
        rec(vars, target, &mut vec![0; n], &mut out);
    }
    out
}

#[derive(Clone)]
struct Candidate<T> {
    coeffs: Vec<Poly<T>>,
    /// `X(P_x)`, reused by every recursion step.
    dx: Poly<T>,
}

enum Step {
    Derive { target: usize, prev: usize },
    IndependentOf { coord: usize, of: Vec<usize> },
    Annihilated { coord: usize },
}

fn plan(eds: &ShiftEds<impl Scalar>) -> Vec<Step> {
    let spec = eds.spec;
    let chart = eds.chart();
    let f = eds.f_coordinates().to_vec();
    let mut steps = Vec::new();
    for j in 1..spec.l {
        let target = chart.z(j).expect("chart has z_j");
        steps.push(Step::Derive {
            target,
            prev: chart.z(j - 1).expect("chart has z_{j-1}"),
        });
        if spec.delta >= j as i64 {
            steps.push(Step::IndependentOf {
                coord: target,
                of: f.clone(),
            });
        }
    }
    for i in 1..spec.k {
        let target = chart.y(i).expect("chart has y_i");
        steps.push(Step::Derive {
            target,
            prev: chart.y(i - 1).expect("chart has y_{i-1}"),
        });
        if -spec.delta >= i as i64 {
            steps.push(Step::IndependentOf {
                coord: target,
                of: f.clone(),
            });
        }
    }
    steps.push(Step::Annihilated {
        coord: chart.z(spec.l - 1).expect("top z"),
    });
    steps.push(Step::Annihilated {
        coord: chart.y(spec.k - 1).expect("top y"),
    });
    steps
}

/// Replaces `cands` by a basis of the combinations on which every condition
/// polynomial vanishes.
fn impose<T: Scalar>(cands: Vec<Candidate<T>>, conds: &[Vec<Poly<T>>]) -> Vec<Candidate<T>> {
    let mut keys: BTreeMap<(usize, Monomial), usize> = BTreeMap::new();
    for cs in conds {
        for (e, p) in cs.iter().enumerate() {
            for (m, _) in p.terms() {
                let next = keys.len();
                keys.entry((e, m.clone())).or_insert(next);
            }
        }
    }
    if keys.is_empty() {
        return cands;
    }
    let mut m = Matrix::zeros(keys.len(), cands.len());
    for (col, cs) in conds.iter().enumerate() {
        for (e, p) in cs.iter().enumerate() {
            for (mono, c) in p.terms() {
                m[(keys[&(e, mono.clone())], col)] = c.clone();
            }
        }
    }
    let kernel = m.kernel();
    kernel
        .basis_vectors()
        .into_iter()
        .map(|v| {
            let n = cands[0].coeffs.len();
            let vars = cands[0].dx.vars().clone();
            let mut out = Candidate {
                coeffs: vec![Poly::zero(&vars); n],
                dx: Poly::zero(&vars),
            };
            for (c, s) in cands.iter().zip(&v) {
                if s.is_zero() {
                    continue;
                }
                for (o, p) in out.coeffs.iter_mut().zip(&c.coeffs) {
                    o.add_scaled(p, s);
                }
                out.dx.add_scaled(&c.dx, s);
            }
            out
        })
        .collect()
}

fn solve_block<T: Scalar>(
    chart: &JetSpace,
    steps: &[Step],
    unknowns: &[(usize, Monomial)],
) -> Vec<Vec<Poly<T>>> {
    let vars = chart.vars();
    let mut cands: Vec<Candidate<T>> = unknowns
        .iter()
        .map(|(c, m)| {
            let mut coeffs = vec![Poly::zero(vars); chart.dim()];
            coeffs[*c] = Poly::monomial(vars, m.clone(), T::one());
            let dx = chart.truncated_total_derivative(&coeffs[0]);
            Candidate { coeffs, dx }
        })
        .collect();
    for step in steps {
        if cands.is_empty() {
            break;
        }
        match step {
            Step::Derive { target, prev } => {
                let u = Poly::var(vars, *target);
                for cand in &mut cands {
                    let d = chart.truncated_total_derivative(&cand.coeffs[*prev]);
                    cand.coeffs[*target] = &d - &(&u * &cand.dx);
                }
            }
            Step::IndependentOf { coord, of } => {
                let conds: Vec<Vec<Poly<T>>> = cands
                    .iter()
                    .map(|c| of.iter().map(|&u| c.coeffs[*coord].partial(u)).collect())
                    .collect();
                cands = impose(cands, &conds);
            }
            Step::Annihilated { coord } => {
                let conds: Vec<Vec<Poly<T>>> = cands
                    .iter()
                    .map(|c| vec![chart.truncated_total_derivative(&c.coeffs[*coord])])
                    .collect();
                cands = impose(cands, &conds);
            }
        }
    }
    cands.into_iter().map(|c| c.coeffs).collect()
}

/// All solutions of graded degree `degree`.
fn solve_layer<T: Scalar>(eds: &ShiftEds<T>, steps: &[Step], degree: i64) -> Vec<VectorField<T>> {
    let chart = eds.chart();
    let weights = eds.spec.tanaka_weights(chart);
    let non_f: Vec<(usize, i64)> = eds
        .non_f_coordinates()
        .into_iter()
        .map(|c| (c, weights[c]))
        .collect();
    let bases = [chart.x(), chart.y(0).expect("y0"), chart.z(0).expect("z0")];
    let mut blocks: BTreeMap<Weight, Vec<(usize, Monomial)>> = BTreeMap::new();
    for &c in &bases {
        let cw = coord_weight(chart, c);
        for m in monomials_of_weight(chart.dim(), &non_f, degree + weights[c]) {
            let mw = monomial_weight(chart, &m);
            let w = (mw.0 - cw.0, mw.1 - cw.1, mw.2 - cw.2);
            blocks.entry(w).or_default().push((c, m));
        }
    }
    let blocks: Vec<Vec<(usize, Monomial)>> = blocks.into_values().collect();
    let solved: Vec<Vec<Vec<Poly<T>>>> = blocks
        .par_iter()
        .map(|unknowns| solve_block(chart, steps, unknowns))
        .collect();
    solved
        .into_iter()
        .flatten()
        .map(|coeffs| {
            VectorField::from_coeffs(chart, coeffs).expect("coefficients live on the chart")
        })
        .collect()
}

fn lowest_degree(spec: TableauSpec) -> i64 {
    -(spec.depth() as i64)
}

fn verify<T: Scalar>(eds: &ShiftEds<T>, basis: &[VectorField<T>]) -> Result<(), EdsError> {
    for v in basis {
        let cert = is_symmetry(v, eds)?;
        if !cert.holds {
            return Err(EdsError::Verification(format!(
                "{v}: {}",
                cert.violation.unwrap_or_default()
            )));
        }
    }
    Ok(())
}

/// Basis of the symmetry algebra in graded degrees `<= degree_bound`, the
/// grading being `deg x = 1`, `deg y_i = col(e_i)`, `deg z_j = col(f_j)`.
/// Degree `degree_bound + 1` must contribute nothing, and every basis field
/// is re-checked with [`is_symmetry`].
pub fn solve_determining<T: Scalar>(
    spec: TableauSpec,
    degree_bound: usize,
) -> Result<DeterminingSolution<T>, EdsError> {
    if degree_bound == 0 {
        return Err(EdsError::ZeroBound);
    }
    let eds = build_eds::<T>(spec);
    let steps = plan(&eds);
    let mut basis = Vec::new();
    let mut graded_dims = BTreeMap::new();
    for d in lowest_degree(spec)..=degree_bound as i64 {
        let layer = solve_layer(&eds, &steps, d);
        if !layer.is_empty() {
            graded_dims.insert(d, layer.len());
        }
        basis.extend(layer);
    }
    let next = solve_layer(&eds, &steps, degree_bound as i64 + 1).len();
    if next != 0 {
        return Err(EdsError::NotStabilized {
            bound: degree_bound,
            dim: basis.len(),
            next: basis.len() + next,
        });
    }
    verify(&eds, &basis)?;
    Ok(DeterminingSolution {
        spec,
        degree_bound,
        graded_dims,
        basis,
    })
}

/// Solves layer by layer until `depth` consecutive nonnegative degrees are
/// empty. Past that point every layer vanishes: a field of degree `d >= 0`
/// is determined by its brackets with the negative part, which land in
/// degrees `d-1 … d-depth`.
pub fn solve_determining_auto<T: Scalar>(
    spec: TableauSpec,
    max_bound: usize,
) -> Result<DeterminingSolution<T>, EdsError> {
    let eds = build_eds::<T>(spec);
    let steps = plan(&eds);
    let depth = spec.depth() as i64;
    let mut basis = Vec::new();
    let mut graded_dims = BTreeMap::new();
    let mut empty_run = 0;
    let mut d = lowest_degree(spec);
    loop {
        let layer = solve_layer(&eds, &steps, d);
        if d >= 0 {
            empty_run = if layer.is_empty() { empty_run + 1 } else { 0 };
        }
        if !layer.is_empty() {
            graded_dims.insert(d, layer.len());
        }
        basis.extend(layer);
        if empty_run >= depth {
            break;
        }
        if d >= max_bound as i64 {
            return Err(EdsError::NotStabilized {
                bound: max_bound,
                dim: basis.len(),
                next: basis.len() + solve_layer(&eds, &steps, d + 1).len(),
            });
        }
        d += 1;
    }
    verify(&eds, &basis)?;
    Ok(DeterminingSolution {
        spec,
        degree_bound: d.max(1) as usize,
        graded_dims,
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn dim(k: i64, l: i64, d: i64) -> usize {
        let spec = TableauSpec::new(k, l, d).unwrap();
        solve_determining_auto::<Rat>(spec, 40).unwrap().dim()
    }

    #[test]
    fn headline_dimensions() {
        assert_eq!(dim(2, 3, 0), 15);
        assert_eq!(dim(2, 3, 1), 15);
        assert_eq!(dim(2, 2, 0), 15);
    }

    #[test]
    fn monomial_enumeration() {
        // weights 1, 2: a + 2b = 4 has (4,0), (2,1), (0,2)
        assert_eq!(monomials_of_weight(3, &[(0, 1), (2, 2)], 4).len(), 3);
        assert!(monomials_of_weight(3, &[(0, 1)], -1).is_empty());
    }

    #[test]
    fn auto_matches_fixed_bound() {
        let spec = TableauSpec::new(2, 3, 1).unwrap();
        let auto = solve_determining_auto::<Rat>(spec, 40).unwrap();
        let fixed = solve_determining::<Rat>(spec, auto.degree_bound).unwrap();
        assert_eq!(auto.dim(), fixed.dim());
        assert_eq!(auto.graded_dims, fixed.graded_dims);
    }

    #[test]
    fn zero_bound_is_rejected() {
        let spec = TableauSpec::new(2, 3, 0).unwrap();
        assert!(matches!(
            solve_determining::<Rat>(spec, 0),
            Err(EdsError::ZeroBound)
        ));
    }
}
