//! Shift-δ exterior differential systems on the equation manifold of
//! `y^(k) = z^(l) = 0`: tableau geometry, the pair (E, F), symmetry checks,
//! the determining-equation solver, known bases and derived flags.

mod flag;
mod known;
mod lemma;
mod solver;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::{field_rank, JetError, JetSpace, VectorField};
use crate::poly::Poly;
use crate::scalar::Scalar;

pub use flag::{derived_flag, DerivedFlag, NonlinearSystem};
pub use known::{known_basis, KnownCase};
pub use lemma::{
    check_lemma, claimed_span, identity_residual, solution_space, LemmaCheck, LemmaPart,
};
pub use solver::{solve_determining, solve_determining_auto, DeterminingSolution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EdsError {
    #[error("invalid spec (k={k}, l={l}, shift={delta}): need 2 <= k <= l and -k+2 <= shift <= l-2")]
    InvalidSpec { k: i64, l: i64, delta: i64 },
    #[error("no closed-form basis is known for (k={k}, l={l}, shift={delta})")]
    Uncovered { k: usize, l: usize, delta: i64 },
    #[error("dimension not stabilized at degree bound {bound}: {dim} vs {next} at bound {}", bound + 1)]
    NotStabilized { bound: usize, dim: usize, next: usize },
    #[error("solver output failed the symmetry check: {0}")]
    Verification(String),
    #[error("degree bound must be at least 1")]
    ZeroBound,
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// The triple (k, l, δ) and the skew tableau it determines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "SpecFields")]
pub struct TableauSpec {
    pub k: usize,
    pub l: usize,
    #[serde(rename = "shift")]
    pub delta: i64,
}

#[derive(Deserialize)]
struct SpecFields {
    k: i64,
    l: i64,
    shift: i64,
}

impl TryFrom<SpecFields> for TableauSpec {
    type Error = EdsError;

    fn try_from(f: SpecFields) -> Result<Self, EdsError> {
        TableauSpec::new(f.k, f.l, f.shift)
    }
}

impl fmt::Display for TableauSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.k, self.l, self.delta)
    }
}

impl TableauSpec {
    pub fn new(k: i64, l: i64, delta: i64) -> Result<Self, EdsError> {
        let bad = EdsError::InvalidSpec { k, l, delta };
        if k < 2 || l < k || delta < 2 - k || delta > l - 2 {
            return Err(bad);
        }
        Ok(TableauSpec {
            k: k as usize,
            l: l as usize,
            delta,
        })
    }

    /// Every valid spec with `k + l <= max_sum`, sorted.
    pub fn grid(max_sum: usize) -> Vec<TableauSpec> {
        let mut out = Vec::new();
        for k in 2..=max_sum {
            for l in k..=max_sum.saturating_sub(k) {
                for d in (2 - k as i64)..=(l as i64 - 2) {
                    out.push(TableauSpec::new(k as i64, l as i64, d).expect("in range"));
                }
            }
        }
        out.sort();
        out
    }

    fn shift(&self) -> i64 {
        // leftmost used column is 1 after this offset
        (self.delta - (self.l as i64 - self.k as i64)).max(0)
    }

    /// Column of the box `e_i` (k-row).
    pub fn col_e(&self, i: usize) -> usize {
        (self.l as i64 - self.delta - i as i64 + self.shift()) as usize
    }

    /// Column of the box `f_j` (l-row).
    pub fn col_f(&self, j: usize) -> usize {
        (self.l as i64 - j as i64 + self.shift()) as usize
    }

    /// Inclusive column range of the l-row.
    pub fn l_row(&self) -> (usize, usize) {
        (self.col_f(self.l - 1), self.col_f(0))
    }

    /// Inclusive column range of the k-row.
    pub fn k_row(&self) -> (usize, usize) {
        (self.col_e(self.k - 1), self.col_e(0))
    }

    /// Number of columns, i.e. the depth of the graded symbol.
    pub fn depth(&self) -> usize {
        self.col_e(0).max(self.col_f(0))
    }

    /// Both rows start in column 1 exactly for the second kind.
    pub fn is_fundamental(&self) -> bool {
        self.k_row().0 == 1 && self.l_row().0 == 1
    }

    /// Preserved jet projections `J^{k,l} → J^{a,a+δ} → …`.
    pub fn chain(&self) -> Vec<(usize, usize)> {
        let mut out = vec![(self.k, self.l)];
        let top = (self.k as i64 - 1).min(self.l as i64 - 1 - self.delta);
        let bottom = (-self.delta).max(0);
        let mut a = top;
        while a >= bottom {
            out.push((a as usize, (a + self.delta) as usize));
            a -= 1;
        }
        out
    }

    pub fn chain_string(&self) -> String {
        self.chain()
            .iter()
            .map(|(a, b)| format!("J^{{{a},{b}}}"))
            .collect::<Vec<_>>()
            .join("→")
    }

    /// Two rows of `[ ]` boxes, the l-row on top, each indented to its
    /// starting column.
    pub fn render_ascii(&self) -> String {
        let row = |(start, end): (usize, usize)| {
            format!("{}{}", "   ".repeat(start - 1), "[ ]".repeat(end - start + 1))
        };
        format!("{}\n{}", row(self.l_row()), row(self.k_row()))
    }

    /// The chart `J^{k-1,l-1}` on which the equation manifold is coordinatized.
    pub fn equation_chart(&self) -> Arc<JetSpace> {
        JetSpace::mixed(self.k - 1, self.l - 1)
    }

    /// Chart indices spanning F.
    pub fn f_coordinates(&self, chart: &JetSpace) -> Vec<usize> {
        let (y_from, z_from) = if self.delta >= 0 {
            (1, self.delta as usize + 1)
        } else {
            ((-self.delta) as usize + 1, 1)
        };
        let ys = (y_from..self.k).filter_map(|i| chart.y(i));
        let zs = (z_from..self.l).filter_map(|j| chart.z(j));
        ys.chain(zs).collect()
    }

    /// Degrees of `x`, `y_i`, `z_j` for which the symbol grading becomes the
    /// polynomial grading of fields: `w(x) = 1`, `w(y_i) = col(e_i)`,
    /// `w(z_j) = col(f_j)`.
    pub fn tanaka_weights(&self, chart: &JetSpace) -> Vec<i64> {
        (0..chart.dim())
            .map(|c| match chart.tower(c) {
                None => 1,
                Some(('y', i)) => self.col_e(i) as i64,
                Some((_, j)) => self.col_f(j) as i64,
            })
            .collect()
    }
}

/// A finite generating set of vector fields on a chart.
#[derive(Debug, Clone)]
pub struct Distribution<T: Scalar> {
    pub chart: Arc<JetSpace>,
    pub generators: Vec<VectorField<T>>,
}

/// The pair (E, F) of a shift-δ system.
#[derive(Debug, Clone)]
pub struct ShiftEds<T: Scalar> {
    pub spec: TableauSpec,
    pub e: Distribution<T>,
    pub f: Distribution<T>,
    f_coords: Vec<usize>,
}

impl<T: Scalar> ShiftEds<T> {
    pub fn chart(&self) -> &Arc<JetSpace> {
        &self.e.chart
    }

    /// The generator `∂x + y1∂y0 + … + z_{l-1}∂z_{l-2}` of E.
    pub fn e_generator(&self) -> &VectorField<T> {
        &self.e.generators[0]
    }

    pub fn f_coordinates(&self) -> &[usize] {
        &self.f_coords
    }

    /// Chart coordinates not in F, in chart order.
    pub fn non_f_coordinates(&self) -> Vec<usize> {
        (0..self.chart().dim())
            .filter(|c| !self.f_coords.contains(c))
            .collect()
    }
}

pub fn build_eds<T: Scalar>(spec: TableauSpec) -> ShiftEds<T> {
    let chart = spec.equation_chart();
    let f_coords = spec.f_coordinates(&chart);
    let f = f_coords
        .iter()
        .map(|&c| VectorField::coordinate(&chart, c))
        .collect();
    ShiftEds {
        spec,
        e: Distribution {
            chart: chart.clone(),
            generators: vec![chart.contact_field()],
        },
        f: Distribution {
            chart: chart.clone(),
            generators: f,
        },
        f_coords,
    }
}

/// Outcome of [`is_symmetry`]; `violation` names the first failing component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryCertificate {
    pub holds: bool,
    pub violation: Option<String>,
}

/// `[S,X] = λX` with `λ` the ∂x-component of `[S,X]`, and `[S,∂u]` has no
/// component outside F for every F generator `∂u`.
pub fn is_symmetry<T: Scalar>(
    s: &VectorField<T>,
    eds: &ShiftEds<T>,
) -> Result<SymmetryCertificate, EdsError> {
    let chart = eds.chart();
    if s.space() != chart {
        return Err(JetError::SpaceMismatch.into());
    }
    let x = eds.e_generator();
    let sx = s.bracket(x)?;
    let lambda = sx.coeff(0).clone();
    for c in 0..chart.dim() {
        let r = sx.coeff(c) - &(&lambda * x.coeff(c));
        if !r.is_zero() {
            return Ok(SymmetryCertificate {
                holds: false,
                violation: Some(format!("[S,E] has component {} along ∂{}", r, chart.name(c))),
            });
        }
    }
    let non_f = eds.non_f_coordinates();
    for &u in eds.f_coordinates() {
        for &c in &non_f {
            let d = s.coeff(c).partial(u);
            if !d.is_zero() {
                return Ok(SymmetryCertificate {
                    holds: false,
                    violation: Some(format!(
                        "[S,∂{}] has component {} along ∂{}",
                        chart.name(u),
                        -&d,
                        chart.name(c)
                    )),
                });
            }
        }
    }
    Ok(SymmetryCertificate {
        holds: true,
        violation: None,
    })
}

/// Degree of a field under per-coordinate weights, `None` if the field is
/// zero or not homogeneous.
pub fn field_degree<T: Scalar>(v: &VectorField<T>, weights: &[i64]) -> Option<i64> {
    let mut deg = None;
    for (c, p) in v.coeffs().iter().enumerate() {
        for (m, _) in p.terms() {
            let d: i64 = m
                .exps()
                .iter()
                .zip(weights)
                .map(|(&e, &w)| e as i64 * w)
                .sum::<i64>()
                - weights[c];
            match deg {
                None => deg = Some(d),
                Some(prev) if prev != d => return None,
                _ => {}
            }
        }
    }
    deg
}

/// Dimensions of the homogeneous components of the span of `fields`, or
/// `None` when the span is not graded by `weights`.
pub fn weighted_histogram<T: Scalar>(
    fields: &[VectorField<T>],
    weights: &[i64],
) -> Option<BTreeMap<i64, usize>> {
    let mut parts: BTreeMap<i64, Vec<VectorField<T>>> = BTreeMap::new();
    for v in fields {
        let mut split: BTreeMap<i64, VectorField<T>> = BTreeMap::new();
        for (c, p) in v.coeffs().iter().enumerate() {
            for (m, a) in p.terms() {
                let d = m
                    .exps()
                    .iter()
                    .zip(weights)
                    .map(|(&e, &w)| e as i64 * w)
                    .sum::<i64>()
                    - weights[c];
                let part = split.entry(d).or_insert_with(|| VectorField::zero(v.space()));
                let mut q = part.coeff(c).clone();
                q.add_scaled(&Poly::monomial(v.space().vars(), m.clone(), a.clone()), &T::one());
                part.set_coeff(c, q);
            }
        }
        for (d, part) in split {
            parts.entry(d).or_default().push(part);
        }
    }
    let hist: BTreeMap<i64, usize> = parts
        .into_iter()
        .map(|(d, fs)| (d, field_rank(&fs)))
        .filter(|(_, r)| *r > 0)
        .collect();
    (hist.values().sum::<usize>() == field_rank(fields)).then_some(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn spec(k: i64, l: i64, d: i64) -> TableauSpec {
        TableauSpec::new(k, l, d).unwrap()
    }

    fn names(eds: &ShiftEds<Rat>) -> Vec<String> {
        eds.f_coordinates()
            .iter()
            .map(|&c| eds.chart().name(c).to_string())
            .collect()
    }

    #[test]
    fn spec_validation() {
        assert!(TableauSpec::new(2, 3, 2).is_err());
        assert!(TableauSpec::new(3, 4, -2).is_err());
        assert!(TableauSpec::new(1, 3, 0).is_err());
        assert!(TableauSpec::new(4, 3, 0).is_err());
        assert_eq!(TableauSpec::grid(9).len(), 50);
    }

    #[test]
    fn f_distributions() {
        assert_eq!(names(&build_eds(spec(2, 3, 0))), ["y1", "z1", "z2"]);
        assert_eq!(names(&build_eds(spec(2, 3, 1))), ["y1", "z2"]);
        assert_eq!(names(&build_eds(spec(3, 4, -1))), ["y2", "z1", "z2", "z3"]);
    }

    #[test]
    fn columns_and_degrees() {
        let s = spec(2, 3, 0);
        assert_eq!((s.col_f(2), s.col_e(1), s.col_e(0), s.col_f(0)), (1, 2, 3, 3));
        assert!(!s.is_fundamental());
        let s = spec(2, 3, 1);
        assert_eq!((s.col_e(1), s.col_f(2)), (1, 1));
        assert!(s.is_fundamental());
        let s = spec(3, 4, 2);
        assert_eq!(s.l_row(), (2, 5));
        assert_eq!(s.k_row(), (1, 3));
        assert_eq!(s.depth(), 5);
    }

    #[test]
    fn chains_match_printed_examples() {
        let c = |k, l, d| spec(k, l, d).chain_string();
        assert_eq!(c(2, 3, 1), "J^{2,3}→J^{1,2}→J^{0,1}");
        assert_eq!(c(2, 3, 0), "J^{2,3}→J^{1,1}→J^{0,0}");
        assert_eq!(c(2, 4, 2), "J^{2,4}→J^{1,3}→J^{0,2}");
        assert_eq!(c(2, 4, 1), "J^{2,4}→J^{1,2}→J^{0,1}");
        assert_eq!(c(2, 4, 0), "J^{2,4}→J^{1,1}→J^{0,0}");
        assert_eq!(c(3, 4, 2), "J^{3,4}→J^{1,3}→J^{0,2}");
        assert_eq!(c(3, 4, 1), "J^{3,4}→J^{2,3}→J^{1,2}→J^{0,1}");
        assert_eq!(c(3, 4, 0), "J^{3,4}→J^{2,2}→J^{1,1}→J^{0,0}");
        assert_eq!(c(3, 4, -1), "J^{3,4}→J^{2,1}→J^{1,0}");
    }

    #[test]
    fn ascii_tableaux() {
        assert_eq!(spec(2, 3, 1).render_ascii(), "[ ][ ][ ]\n[ ][ ]");
        assert_eq!(spec(2, 3, 0).render_ascii(), "[ ][ ][ ]\n   [ ][ ]");
        assert_eq!(spec(3, 4, 2).render_ascii(), "   [ ][ ][ ][ ]\n[ ][ ][ ]");
        assert_eq!(spec(3, 4, -1).render_ascii(), "[ ][ ][ ][ ]\n      [ ][ ][ ]");
    }

    #[test]
    fn symmetry_checks() {
        let eds = build_eds::<Rat>(spec(2, 3, 0));
        let dx = VectorField::<Rat>::coordinate(eds.chart(), 0);
        assert!(is_symmetry(&dx, &eds).unwrap().holds);
        // X preserves E but moves F: [∂y1, X] = ∂y0
        let x = eds.e_generator().clone();
        assert!(!is_symmetry(&x, &eds).unwrap().holds);
        let s = VectorField::parse(eds.chart(), &[("x", "y0")]).unwrap();
        let cert = is_symmetry(&s, &eds).unwrap();
        assert!(!cert.holds);
        assert!(cert.violation.is_some());
        let other = VectorField::<Rat>::coordinate(&JetSpace::mixed(1, 1), 0);
        assert!(is_symmetry(&other, &eds).is_err());
    }
}
