//! Derived flag `F_1 ⊃ F_2 ⊃ …` of a nonlinear system
//! `y^(k) = f, z^(l) = g`, computed at a generic point.

use std::sync::Arc;

use super::EdsError;
use crate::jet::{JetError, JetSpace, VectorField};
use crate::poly::{ratfunc_kernel, Poly};
use crate::scalar::Scalar;

/// Right-hand sides `f`, `g` as polynomials on `J^{k-1,l-1}`.
#[derive(Debug, Clone)]
pub struct NonlinearSystem<T: Scalar> {
    pub k: usize,
    pub l: usize,
    chart: Arc<JetSpace>,
    f: Poly<T>,
    g: Poly<T>,
}

impl<T: Scalar> NonlinearSystem<T> {
    pub fn new(k: usize, l: usize, f: &Poly<T>, g: &Poly<T>) -> Result<Self, EdsError> {
        if k < 1 || l < 1 {
            return Err(EdsError::InvalidSpec {
                k: k as i64,
                l: l as i64,
                delta: 0,
            });
        }
        let chart = JetSpace::mixed(k - 1, l - 1);
        let f = f.embed(chart.vars()).map_err(JetError::from)?;
        let g = g.embed(chart.vars()).map_err(JetError::from)?;
        Ok(NonlinearSystem { k, l, chart, f, g })
    }

    pub fn parse(k: usize, l: usize, f: &str, g: &str) -> Result<Self, EdsError> {
        let chart = JetSpace::mixed(k.max(1) - 1, l.max(1) - 1);
        let f = Poly::parse(f, chart.vars()).map_err(JetError::from)?;
        let g = Poly::parse(g, chart.vars()).map_err(JetError::from)?;
        Self::new(k, l, &f, &g)
    }

    pub fn chart(&self) -> &Arc<JetSpace> {
        &self.chart
    }

    /// `∂x + Σ y_{i+1}∂y_i + f∂y_{k-1} + Σ z_{j+1}∂z_j + g∂z_{l-1}`.
    pub fn e_generator(&self) -> VectorField<T> {
        let c = &self.chart;
        let mut x = c.contact_field();
        let top_y = c.y(self.k - 1).expect("top y");
        let top_z = c.z(self.l - 1).expect("top z");
        x.set_coeff(top_y, self.f.clone());
        x.set_coeff(top_z, self.g.clone());
        x
    }
}

#[derive(Debug, Clone)]
pub struct DerivedFlag<T: Scalar> {
    /// Generic ranks of `F_1, F_2, …`.
    pub ranks: Vec<usize>,
    /// Polynomial generators of each `F_i`.
    pub generators: Vec<Vec<VectorField<T>>>,
}

/// `F_1` is spanned by `∂y_i, ∂z_j` (i, j ≥ 1) and
/// `F_{i+1} = { Y ∈ F_i : [Y, E] ⊂ F_i }`. Computes `F_1 … F_{l-1}`,
/// stopping early once a term vanishes.
pub fn derived_flag<T: Scalar>(sys: &NonlinearSystem<T>) -> Result<DerivedFlag<T>, EdsError> {
    let chart = sys.chart().clone();
    let x = sys.e_generator();
    let mut current: Vec<VectorField<T>> = (1..sys.k)
        .filter_map(|i| chart.y(i))
        .chain((1..sys.l).filter_map(|j| chart.z(j)))
        .map(|c| VectorField::coordinate(&chart, c))
        .collect();
    let mut flag = DerivedFlag {
        ranks: vec![current.len()],
        generators: vec![current.clone()],
    };
    while flag.ranks.len() + 1 < sys.l.max(2) && !current.is_empty() {
        current = next_term(&current, &x, &chart)?;
        flag.ranks.push(current.len());
        flag.generators.push(current.clone());
    }
    Ok(flag)
}

/// Solves `Σ h_a [Y_a, X] = Σ h'_b Y_b` over the fraction field and returns
/// the fields `Σ h_a Y_a`.
fn next_term<T: Scalar>(
    ys: &[VectorField<T>],
    x: &VectorField<T>,
    chart: &Arc<JetSpace>,
) -> Result<Vec<VectorField<T>>, EdsError> {
    let r = ys.len();
    let brackets = ys
        .iter()
        .map(|y| y.bracket(x))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<Poly<T>>> = (0..chart.dim())
        .map(|c| {
            brackets
                .iter()
                .map(|b| b.coeff(c).clone())
                .chain(ys.iter().map(|y| -y.coeff(c)))
                .collect()
        })
        .collect();
    let kernel = ratfunc_kernel(&rows, 2 * r, chart.vars()).map_err(JetError::from)?;
    Ok(kernel
        .iter()
        .map(|h| {
            let mut v = VectorField::zero(chart);
            for (y, ha) in ys.iter().zip(&h[..r]) {
                if !ha.is_zero() {
                    v = v.add(&y.mul_poly(ha)).expect("same chart");
                }
            }
            v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn ranks(f: &str, g: &str) -> Vec<usize> {
        let sys = NonlinearSystem::<Rat>::parse(2, 4, f, g).unwrap();
        derived_flag(&sys).unwrap().ranks
    }

    #[test]
    fn branching_on_fz3() {
        assert_eq!(ranks("0", "0"), vec![4, 2, 1]);
        assert_eq!(ranks("z3^2", "0"), vec![4, 2, 0]);
        assert_eq!(ranks("y1*z2", "0"), vec![4, 2, 1]);
    }

    #[test]
    fn generators_of_trivial_flag() {
        let sys = NonlinearSystem::<Rat>::parse(2, 4, "0", "0").unwrap();
        let flag = derived_flag(&sys).unwrap();
        let z3 = VectorField::coordinate(sys.chart(), sys.chart().z(3).unwrap());
        assert_eq!(flag.generators[2], vec![z3]);
    }

    #[test]
    fn foreign_variables_are_rejected() {
        assert!(NonlinearSystem::<Rat>::parse(2, 4, "z4", "0").is_err());
    }
}
