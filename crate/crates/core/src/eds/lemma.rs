//! The functions `g_{i,j}` and the solution spaces of
//! `D^{p+1} f = 0, ∂f/∂z_{r+1-q} = … = ∂f/∂z_{r+1} = 0` on `J^{r+1}`.
//!
//! Solutions are searched on the ansatz `deg_x ≤ p(r+2)`, total `z`-degree
//! `≤ p`. `D` is homogeneous for `w(x) = -1, w(z_i) = i` and preserves the
//! `z`-degree, so the system splits into small blocks.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::EdsError;
use crate::exact::{Matrix, Subspace};
use crate::jet::{g_function, JetError, JetSpace};
use crate::poly::{Monomial, Poly};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaPart {
    A,
    B,
    C,
    D,
}

impl fmt::Display for LemmaPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaPart::A => "a",
            LemmaPart::B => "b",
            LemmaPart::C => "c",
            LemmaPart::D => "d",
        })
    }
}

impl std::str::FromStr for LemmaPart {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" => Ok(LemmaPart::A),
            "b" => Ok(LemmaPart::B),
            "c" => Ok(LemmaPart::C),
            "d" => Ok(LemmaPart::D),
            _ => Err(format!("unknown lemma part `{s}` (expected a, b, c or d)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub part: LemmaPart,
    pub r: usize,
    pub p: usize,
    pub q: usize,
    /// For part (a): number of `(i, j)` pairs checked.
    pub solution_dim: usize,
    /// For part (a): number of pairs where the identity holds.
    pub expected_dim: usize,
    pub holds: bool,
}

/// `g_{i,j} - (x/i) g^{(1)}_{i,j} + j g_{i-1,j+1}` on `J^i`.
pub fn identity_residual<T: Scalar>(i: usize, j: usize) -> Result<Poly<T>, EdsError> {
    if i == 0 || j == 0 {
        return Err(JetError::InvalidIndices(format!("identity needs i, j >= 1, got ({i}, {j})")).into());
    }
    let g = g_function::<T>(i, j, 0)?;
    let vars = g.vars().clone();
    let g1 = g_function::<T>(i, j, 1)?;
    let lower = g_function::<T>(i - 1, j + 1, 0)?
        .embed(&vars)
        .map_err(JetError::from)?;
    let x_over_i = Poly::var(&vars, 0).scale(&T::from_frac(1, i as i64));
    Ok(&(&g - &(&x_over_i * &g1)) + &lower.scale(&T::from_int(j as i64)))
}

fn validate(r: usize, p: usize, q: usize) -> Result<(), EdsError> {
    if p == 0 || q > r {
        return Err(JetError::InvalidIndices(format!(
            "need p >= 1 and q <= r, got r={r}, p={p}, q={q}"
        ))
        .into());
    }
    Ok(())
}

fn z_monomials(vars: usize, deg: usize) -> Vec<Vec<i32>> {
    if vars == 0 {
        return if deg == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    (0..=deg)
        .flat_map(|e| {
            z_monomials(vars - 1, deg - e).into_iter().map(move |mut rest| {
                rest.insert(0, e as i32);
                rest
            })
        })
        .collect()
}

/// A basis of the solutions inside the ansatz.
pub fn solution_space<T: Scalar>(r: usize, p: usize, q: usize) -> Result<Vec<Poly<T>>, EdsError> {
    validate(r, p, q)?;
    let chart = JetSpace::z_only(r + 1);
    let vars = chart.vars().clone();
    let nz = r + 2;
    let mut blocks: BTreeMap<(usize, i64), Vec<Monomial>> = BTreeMap::new();
    for d in 0..=p {
        for zs in z_monomials(nz, d) {
            let w: i64 = zs.iter().enumerate().map(|(i, &e)| i as i64 * e as i64).sum();
            for a in 0..=(p * (r + 2)) as i32 {
                let mut e = vec![a];
                e.extend(&zs);
                blocks.entry((d, w - a as i64)).or_default().push(Monomial(e));
            }
        }
    }
    let killed: Vec<usize> = ((r + 1 - q)..=(r + 1)).map(|j| chart.z(j).expect("in chart")).collect();
    let mut out = Vec::new();
    for monos in blocks.values() {
        let images: Vec<Vec<Poly<T>>> = monos
            .iter()
            .map(|m| {
                let f = Poly::monomial(&vars, m.clone(), T::one());
                let mut d = f.clone();
                for _ in 0..=p {
                    d = chart.truncated_total_derivative(&d);
                }
                std::iter::once(d).chain(killed.iter().map(|&c| f.partial(c))).collect()
            })
            .collect();
        for v in keyed_kernel(&images) {
            let terms = monos
                .iter()
                .zip(v)
                .filter(|(_, c)| !c.is_zero())
                .map(|(m, c)| (m.clone(), c));
            out.push(Poly::from_terms(&vars, terms).expect("chart monomials"));
        }
    }
    Ok(out)
}

/// Coefficient vectors `t` with `Σ t_j images[j][e] = 0` for every equation `e`.
fn keyed_kernel<T: Scalar>(images: &[Vec<Poly<T>>]) -> Vec<Vec<T>> {
    let mut keys: HashMap<(usize, Monomial), usize> = HashMap::new();
    for eqs in images {
        for (e, p) in eqs.iter().enumerate() {
            for (m, _) in p.terms() {
                let next = keys.len();
                keys.entry((e, m.clone())).or_insert(next);
            }
        }
    }
    let mut mat = Matrix::zeros(keys.len(), images.len());
    for (col, eqs) in images.iter().enumerate() {
        for (e, p) in eqs.iter().enumerate() {
            for (m, c) in p.terms() {
                mat[(keys[&(e, m.clone())], col)] = c.clone();
            }
        }
    }
    mat.kernel().basis_vectors()
}

fn multisets(values: usize, size: usize, from: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    (from..values)
        .flat_map(|v| {
            multisets(values, size - 1, v).into_iter().map(move |mut rest| {
                rest.insert(0, v);
                rest
            })
        })
        .collect()
}

/// `x^i g^{(s_1)}_{r-q,q+2} ⋯ g^{(s_j)}_{r-q,q+2}` with `i + (q+1)j ≤ p`, on `J^{r+1}`.
pub fn claimed_span<T: Scalar>(r: usize, p: usize, q: usize) -> Result<Vec<Poly<T>>, EdsError> {
    validate(r, p, q)?;
    let vars = JetSpace::z_only(r + 1).vars().clone();
    let gs = (0..=r - q)
        .map(|s| {
            g_function::<T>(r - q, q + 2, s)?
                .embed(&vars)
                .map_err(|e| EdsError::from(JetError::from(e)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let x = Poly::var(&vars, 0);
    let mut out = Vec::new();
    for j in 0..=p / (q + 1) {
        for ss in multisets(gs.len(), j, 0) {
            let prod = ss.iter().fold(Poly::one(&vars), |acc, &s| &acc * &gs[s]);
            for i in 0..=(p - (q + 1) * j) {
                out.push(&prod * &x.pow(i as u32));
            }
        }
    }
    Ok(out)
}

fn span<T: Scalar>(polys: &[&Poly<T>], keys: &HashMap<Monomial, usize>) -> Subspace<T> {
    let rows = polys
        .iter()
        .map(|p| {
            let mut v = vec![T::zero(); keys.len()];
            for (m, c) in p.terms() {
                v[keys[m]] = c.clone();
            }
            v
        })
        .collect();
    Subspace::from_generators(keys.len(), rows).expect("rows have key length")
}

fn same_polynomial_span<T: Scalar>(a: &[Poly<T>], b: &[Poly<T>]) -> (usize, usize, bool) {
    let mut keys: HashMap<Monomial, usize> = HashMap::new();
    for p in a.iter().chain(b) {
        for (m, _) in p.terms() {
            let next = keys.len();
            keys.entry(m.clone()).or_insert(next);
        }
    }
    let sa = span(&a.iter().collect::<Vec<_>>(), &keys);
    let sb = span(&b.iter().collect::<Vec<_>>(), &keys);
    (sa.dim(), sb.dim(), sa == sb)
}

/// Runs one part of the lemma. Part (a) checks the identity for all
/// `1 ≤ i, j ≤ r`; part (b) ignores `p`, `q`; part (c) ignores `q`.
pub fn check_lemma<T: Scalar>(
    part: LemmaPart,
    r: usize,
    p: usize,
    q: usize,
) -> Result<LemmaCheck, EdsError> {
    let (p, q) = match part {
        LemmaPart::A | LemmaPart::B => (1, 0),
        LemmaPart::C => (p, 0),
        LemmaPart::D => (p, q),
    };
    if part == LemmaPart::A {
        let mut good = 0;
        for i in 1..=r {
            for j in 1..=r {
                if identity_residual::<T>(i, j)?.is_zero() {
                    good += 1;
                }
            }
        }
        return Ok(LemmaCheck {
            part,
            r,
            p,
            q,
            solution_dim: r * r,
            expected_dim: good,
            holds: good == r * r,
        });
    }
    let sol = solution_space::<T>(r, p, q)?;
    let claimed = claimed_span::<T>(r, p, q)?;
    let (ds, dc, same) = same_polynomial_span(&sol, &claimed);
    let holds = same && (part != LemmaPart::B || ds == r + 3);
    Ok(LemmaCheck {
        part,
        r,
        p,
        q,
        solution_dim: ds,
        expected_dim: dc,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    #[test]
    fn identity_small_cases() {
        assert!(identity_residual::<Rat>(1, 1).unwrap().is_zero());
        assert!(identity_residual::<Rat>(3, 2).unwrap().is_zero());
        assert!(identity_residual::<Rat>(0, 2).is_err());
    }

    #[test]
    fn part_b_dimensions() {
        for r in 0..=3 {
            let c = check_lemma::<Rat>(LemmaPart::B, r, 1, 0).unwrap();
            assert_eq!(c.solution_dim, r + 3);
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn part_d_small() {
        let c = check_lemma::<Rat>(LemmaPart::D, 2, 2, 1).unwrap();
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn invalid_parameters() {
        assert!(check_lemma::<Rat>(LemmaPart::D, 1, 1, 2).is_err());
        assert!(check_lemma::<Rat>(LemmaPart::C, 1, 0, 0).is_err());
    }
}
