//! Jet charts, polynomial vector fields, total derivatives, prolongation and
//! the `g_{i,j}` family.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::exact::Matrix;
use crate::poly::{Monomial, Poly, PolyError, VarTable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("`{0}` has no successor coordinate in this chart")]
    NoSuccessor(String),
    #[error("vector fields live on different jet charts")]
    SpaceMismatch,
    #[error("target chart J^{target} does not extend J^{base}")]
    NotExtending { base: String, target: String },
    #[error("invalid indices: {0}")]
    InvalidIndices(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// The chart `J^{a,b}` with coordinates `x, y0..y_a, z0..z_b`. Either tower
/// may be absent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JetSpace {
    order_y: Option<usize>,
    order_z: Option<usize>,
    vars: Arc<VarTable>,
}

impl JetSpace {
    pub fn new(order_y: Option<usize>, order_z: Option<usize>) -> Arc<Self> {
        let mut names = vec!["x".to_string()];
        if let Some(a) = order_y {
            names.extend((0..=a).map(|i| format!("y{i}")));
        }
        if let Some(b) = order_z {
            names.extend((0..=b).map(|j| format!("z{j}")));
        }
        Arc::new(JetSpace {
            order_y,
            order_z,
            vars: VarTable::new(names).expect("canonical names are unique"),
        })
    }

    /// `J^{a,b}(R,R^2)`.
    pub fn mixed(a: usize, b: usize) -> Arc<Self> {
        Self::new(Some(a), Some(b))
    }

    /// `J^b(R,R)` in the `z` tower only.
    pub fn z_only(b: usize) -> Arc<Self> {
        Self::new(None, Some(b))
    }

    pub fn order_y(&self) -> Option<usize> {
        self.order_y
    }

    pub fn order_z(&self) -> Option<usize> {
        self.order_z
    }

    pub fn vars(&self) -> &Arc<VarTable> {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn label(&self) -> String {
        match (self.order_y, self.order_z) {
            (Some(a), Some(b)) => format!("{{{a},{b}}}"),
            (Some(a), None) => format!("{{{a},-}}"),
            (None, Some(b)) => format!("{{-,{b}}}"),
            (None, None) => "{-,-}".into(),
        }
    }

    pub fn x(&self) -> usize {
        0
    }

    pub fn y(&self, i: usize) -> Option<usize> {
        (self.order_y? >= i).then_some(1 + i)
    }

    pub fn z(&self, j: usize) -> Option<usize> {
        let off = 1 + self.order_y.map_or(0, |a| a + 1);
        (self.order_z? >= j).then_some(off + j)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.index_of(name)
    }

    pub fn name(&self, idx: usize) -> &str {
        self.vars.name(idx)
    }

    /// Tower letter and jet order of a coordinate, `None` for `x`.
    pub fn tower(&self, idx: usize) -> Option<(char, usize)> {
        if idx == 0 {
            return None;
        }
        let name = self.name(idx);
        let order = name[1..].parse().expect("canonical coordinate name");
        Some((name.as_bytes()[0] as char, order))
    }

    /// Next coordinate in the same tower, if the chart has it.
    pub fn successor(&self, idx: usize) -> Option<usize> {
        match self.tower(idx)? {
            ('y', i) => self.y(i + 1),
            (_, j) => self.z(j + 1),
        }
    }

    pub fn extends(&self, base: &JetSpace) -> bool {
        let covers = |t: Option<usize>, b: Option<usize>| match (t, b) {
            (_, None) => true,
            (Some(t), Some(b)) => t >= b,
            (None, Some(_)) => false,
        };
        covers(self.order_y, base.order_y) && covers(self.order_z, base.order_z)
    }

    /// The total derivative on this chart. Fails when `p` depends on a
    /// top-order coordinate, whose image would leave the chart.
    pub fn total_derivative<T: Scalar>(&self, p: &Poly<T>) -> Result<Poly<T>, JetError> {
        for c in 1..self.dim() {
            if self.successor(c).is_none() && p.depends_on(c) {
                return Err(JetError::NoSuccessor(self.name(c).to_string()));
            }
        }
        Ok(self.truncated_total_derivative(p))
    }

    /// Total derivative with the top-order terms dropped, i.e. the action of
    /// `∂x + Σ y_{i+1}∂y_i + Σ z_{j+1}∂z_j` restricted to this chart.
    pub fn truncated_total_derivative<T: Scalar>(&self, p: &Poly<T>) -> Poly<T> {
        let mut out = p.partial(0);
        for c in 1..self.dim() {
            if let Some(s) = self.successor(c) {
                let d = p.partial(c);
                if !d.is_zero() {
                    out = &out + &(&Poly::var(&self.vars, s) * &d);
                }
            }
        }
        out
    }

    /// The truncated total derivative as a vector field.
    pub fn contact_field<T: Scalar>(self: &Arc<Self>) -> VectorField<T> {
        let mut v = VectorField::coordinate(self, 0);
        for c in 1..self.dim() {
            if let Some(s) = self.successor(c) {
                v.coeffs[c] = Poly::var(&self.vars, s);
            }
        }
        v
    }
}

/// Polynomial vector field `Σ P_c ∂_c` on a jet chart.
#[derive(Clone)]
pub struct VectorField<T> {
    space: Arc<JetSpace>,
    coeffs: Vec<Poly<T>>,
}

impl<T: Scalar> PartialEq for VectorField<T> {
    fn eq(&self, other: &Self) -> bool {
        *self.space == *other.space && self.coeffs == other.coeffs
    }
}

impl<T: Scalar> Eq for VectorField<T> {}

impl<T: Scalar> VectorField<T> {
    pub fn zero(space: &Arc<JetSpace>) -> Self {
        VectorField {
            space: space.clone(),
            coeffs: vec![Poly::zero(space.vars()); space.dim()],
        }
    }

    /// `∂_c`.
    pub fn coordinate(space: &Arc<JetSpace>, c: usize) -> Self {
        let mut v = Self::zero(space);
        v.coeffs[c] = Poly::one(space.vars());
        v
    }

    pub fn from_coeffs(space: &Arc<JetSpace>, coeffs: Vec<Poly<T>>) -> Result<Self, JetError> {
        if coeffs.len() != space.dim() {
            return Err(JetError::SpaceMismatch);
        }
        let coeffs = coeffs
            .into_iter()
            .map(|p| p.embed(space.vars()))
            .collect::<Result<_, _>>()?;
        Ok(VectorField {
            space: space.clone(),
            coeffs,
        })
    }

    /// Builds `Σ p ∂_name` from `(coordinate name, coefficient)` pairs.
    pub fn from_pairs<'a>(
        space: &Arc<JetSpace>,
        pairs: impl IntoIterator<Item = (&'a str, Poly<T>)>,
    ) -> Result<Self, JetError> {
        let mut v = Self::zero(space);
        for (name, p) in pairs {
            let c = space
                .index_of(name)
                .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))?;
            let p = p.embed(space.vars())?;
            v.coeffs[c] = &v.coeffs[c] + &p;
        }
        Ok(v)
    }

    /// Parses `(coordinate, polynomial text)` pairs.
    pub fn parse(space: &Arc<JetSpace>, pairs: &[(&str, &str)]) -> Result<Self, JetError> {
        let polys = pairs
            .iter()
            .map(|(n, t)| Ok((*n, Poly::parse(t, space.vars())?)))
            .collect::<Result<Vec<_>, PolyError>>()?;
        Self::from_pairs(space, polys)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn coeff(&self, c: usize) -> &Poly<T> {
        &self.coeffs[c]
    }

    pub fn coeff_named(&self, name: &str) -> Option<&Poly<T>> {
        self.space.index_of(name).map(|c| &self.coeffs[c])
    }

    pub fn coeffs(&self) -> &[Poly<T>] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, c: usize, p: Poly<T>) {
        assert!(Arc::ptr_eq(p.vars(), self.space.vars()) || p.vars() == self.space.vars());
        self.coeffs[c] = p;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Poly::is_zero)
    }

    /// `v(p) = Σ v^c ∂_c p`.
    pub fn apply(&self, p: &Poly<T>) -> Poly<T> {
        let mut out = Poly::zero(self.space.vars());
        for (c, vc) in self.coeffs.iter().enumerate() {
            if vc.is_zero() {
                continue;
            }
            let d = p.partial(c);
            if !d.is_zero() {
                out = &out + &(vc * &d);
            }
        }
        out
    }

    pub fn bracket(&self, other: &Self) -> Result<Self, JetError> {
        if *self.space != *other.space {
            return Err(JetError::SpaceMismatch);
        }
        let coeffs = (0..self.space.dim())
            .map(|c| &self.apply(&other.coeffs[c]) - &other.apply(&self.coeffs[c]))
            .collect();
        Ok(VectorField {
            space: self.space.clone(),
            coeffs,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, JetError> {
        if *self.space != *other.space {
            return Err(JetError::SpaceMismatch);
        }
        Ok(VectorField {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, s: &T) -> Self {
        VectorField {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|p| p.scale(s)).collect(),
        }
    }

    pub fn mul_poly(&self, p: &Poly<T>) -> Self {
        VectorField {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| c * p).collect(),
        }
    }

    /// Moves the field to a chart containing every coordinate it uses.
    /// Coordinates of the target chart absent from the source get coefficient 0.
    pub fn embed(&self, target: &Arc<JetSpace>) -> Result<Self, JetError> {
        let mut v = Self::zero(target);
        for (c, p) in self.coeffs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let tc = target
                .index_of(self.space.name(c))
                .ok_or_else(|| PolyError::UnknownVariable(self.space.name(c).to_string()))?;
            v.coeffs[tc] = p.embed(target.vars())?;
        }
        Ok(v)
    }

    /// Drops the components along coordinates missing from `target`; the
    /// remaining coefficients must only use target coordinates.
    pub fn project(&self, target: &Arc<JetSpace>) -> Result<Self, JetError> {
        let mut v = Self::zero(target);
        for (tc, slot) in v.coeffs.iter_mut().enumerate() {
            if let Some(c) = self.space.index_of(target.name(tc)) {
                *slot = self.coeffs[c].embed(target.vars())?;
            }
        }
        Ok(v)
    }

    /// Contact prolongation to `target`. The recursion
    /// `P_{u_{n+1}} = D(P_{u_n}) − u_{n+1}·D(P_x)` runs separately in each
    /// tower, starting from the highest coordinate of the field's own chart.
    pub fn prolong(&self, target: &Arc<JetSpace>) -> Result<Self, JetError> {
        let base = &self.space;
        if !target.extends(base) {
            return Err(JetError::NotExtending {
                base: base.label(),
                target: target.label(),
            });
        }
        // Work on a chart large enough that D never needs a missing successor.
        let extra = base.order_y.unwrap_or(0).max(base.order_z.unwrap_or(0)) + 1;
        let grow = |t: Option<usize>| t.map(|t| t + extra);
        let work = JetSpace::new(grow(target.order_y), grow(target.order_z));
        let v = self.embed(&work)?;
        let dx = work.total_derivative(&v.coeffs[0])?;
        let mut coeffs = v.coeffs.clone();
        for (tower, base_ord, tgt_ord) in [
            ('y', base.order_y, target.order_y),
            ('z', base.order_z, target.order_z),
        ] {
            let Some(top) = tgt_ord else { continue };
            let start = base_ord.map_or(0, |b| b + 1);
            for n in start..=top {
                let idx = |o: usize| if tower == 'y' { work.y(o) } else { work.z(o) };
                let cur = idx(n).expect("working chart is large enough");
                coeffs[cur] = if n == 0 {
                    Poly::zero(work.vars())
                } else {
                    let prev = idx(n - 1).expect("working chart is large enough");
                    let d = work.total_derivative(&coeffs[prev])?;
                    &d - &(&Poly::var(work.vars(), cur) * &dx)
                };
            }
        }
        VectorField {
            space: work,
            coeffs,
        }
        .project(target)
    }
}

impl<T: Scalar> fmt::Display for VectorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, p) in self.coeffs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let name = self.space.name(c);
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
            if first {
                write!(f, "{body}")?;
            } else if let Some(rest) = body.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {body}")?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Debug for VectorField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({self})")
    }
}

/// Flattens fields into coefficient rows over a shared `(coordinate,
/// monomial)` index; rows are linear combinations exactly when the fields are.
pub fn coefficient_matrix<T: Scalar>(
    fields: &[&VectorField<T>],
) -> (Vec<(usize, Monomial)>, Matrix<T>) {
    let mut keys: BTreeMap<(usize, Monomial), usize> = BTreeMap::new();
    for v in fields {
        for (c, p) in v.coeffs.iter().enumerate() {
            for (m, _) in p.terms() {
                let next = keys.len();
                keys.entry((c, m.clone())).or_insert(next);
            }
        }
    }
    // Renumber in sorted order for deterministic layouts.
    let ordered: Vec<(usize, Monomial)> = keys.keys().cloned().collect();
    let pos: BTreeMap<&(usize, Monomial), usize> =
        ordered.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut m = Matrix::zeros(fields.len(), ordered.len());
    for (r, v) in fields.iter().enumerate() {
        for (c, p) in v.coeffs.iter().enumerate() {
            for (mono, coef) in p.terms() {
                m[(r, pos[&(c, mono.clone())])] = coef.clone();
            }
        }
    }
    (ordered, m)
}

/// Number of linearly independent fields.
pub fn field_rank<T: Scalar>(fields: &[VectorField<T>]) -> usize {
    let refs: Vec<&VectorField<T>> = fields.iter().collect();
    coefficient_matrix(&refs).1.rank()
}

/// Whether two families span the same real vector space of fields.
pub fn same_span<T: Scalar>(a: &[VectorField<T>], b: &[VectorField<T>]) -> bool {
    let ra = field_rank(a);
    let rb = field_rank(b);
    let both: Vec<VectorField<T>> = a.iter().chain(b).cloned().collect();
    ra == rb && field_rank(&both) == ra
}

fn factorial<T: Scalar>(n: usize) -> T {
    (1..=n as i64).fold(T::one(), |acc, v| acc * T::from_int(v))
}

/// `g^{(s)}_{i,j} = ∂_x^s [ x^{i+j}/(i+j)! · D^i(z0/x^j) ]`, as a polynomial
/// in `x, z0..z_i` on the `z`-only chart `J^i`.
pub fn g_function<T: Scalar>(i: usize, j: usize, s: usize) -> Result<Poly<T>, JetError> {
    if j == 0 {
        return Err(JetError::InvalidIndices(format!("g_{{{i},{j}}} needs j >= 1")));
    }
    let space = JetSpace::z_only(i);
    let vars = space.vars();
    let n = vars.len();
    let mut inv_xj = vec![0; n];
    inv_xj[0] = -(j as i32);
    let mut p = Poly::var(vars, space.z(0).expect("z0 exists"))
        .mul_monomial(&Monomial(inv_xj), &T::one());
    for _ in 0..i {
        p = space.total_derivative(&p)?;
    }
    let mut xij = vec![0; n];
    xij[0] = (i + j) as i32;
    let mut g = p.mul_monomial(&Monomial(xij), &(T::one() / factorial::<T>(i + j)));
    assert!(!g.has_negative_exponents(), "g_{{{i},{j}}} must be pole-free");
    for _ in 0..s {
        g = g.partial(0);
    }
    Ok(g)
}

/// The same polynomial with the `z` tower renamed to `y`, on `target`.
pub fn z_to_y<T: Scalar>(p: &Poly<T>, target: &Arc<VarTable>) -> Result<Poly<T>, PolyError> {
    let renamed: Vec<String> = p
        .vars()
        .names()
        .iter()
        .map(|n| match n.strip_prefix('z') {
            Some(rest) => format!("y{rest}"),
            None => n.clone(),
        })
        .collect();
    let table = VarTable::new(renamed)?;
    let moved = Poly::from_terms(&table, p.terms().map(|(m, c)| (m.clone(), c.clone())))?;
    moved.embed(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;
    use num_traits::One;
    use proptest::prelude::*;

    fn poly(space: &Arc<JetSpace>, s: &str) -> Poly<Rat> {
        Poly::parse(s, space.vars()).unwrap()
    }

    fn field(space: &Arc<JetSpace>, pairs: &[(&str, &str)]) -> VectorField<Rat> {
        VectorField::parse(space, pairs).unwrap()
    }

    #[test]
    fn chart_layout() {
        let j = JetSpace::mixed(1, 2);
        let names: Vec<&str> = j.vars().names().iter().map(String::as_str).collect();
        assert_eq!(names, ["x", "y0", "y1", "z0", "z1", "z2"]);
        assert_eq!(j.z(2), Some(5));
        assert_eq!(j.successor(2), None);
        assert_eq!(j.successor(3), Some(4));
        assert!(JetSpace::mixed(2, 2).extends(&j));
        assert!(!JetSpace::z_only(3).extends(&j));
    }

    #[test]
    fn total_derivative_basics() {
        let j = JetSpace::z_only(3);
        assert_eq!(j.total_derivative(&poly(&j, "x")).unwrap(), poly(&j, "1"));
        assert_eq!(j.total_derivative(&poly(&j, "z0")).unwrap(), poly(&j, "z1"));
        assert_eq!(
            j.total_derivative(&poly(&j, "z3")),
            Err(JetError::NoSuccessor("z3".into()))
        );
        assert_eq!(j.truncated_total_derivative(&poly(&j, "z3")), poly(&j, "0"));
    }

    #[test]
    fn g_function_examples() {
        let j = JetSpace::z_only(1);
        let g = |i, jj, s| g_function::<Rat>(i, jj, s).unwrap().embed(j.vars()).unwrap();
        assert_eq!(g(0, 3, 0), poly(&j, "1/6*z0"));
        assert_eq!(g(1, 2, 0), poly(&j, "(x*z1 - 2*z0)*1/6"));
        assert_eq!(g(1, 1, 0), poly(&j, "(x*z1 - z0)*1/2"));
        assert_eq!(g(1, 1, 1), poly(&j, "1/2*z1"));
        assert!(g(1, 1, 2).is_zero());
        let identity = &(&g(1, 1, 0) - &(&poly(&j, "x") * &g(1, 1, 1))) + &g(0, 2, 0);
        assert!(identity.is_zero());
        assert!(g_function::<Rat>(1, 0, 0).is_err());
    }

    #[test]
    fn g_function_top_coefficient() {
        // the top coefficient is x^i/(i+j)!, constant only for i = 0
        for i in 0..5 {
            for jj in 1..4 {
                let g = g_function::<Rat>(i, jj, 0).unwrap();
                let space = JetSpace::z_only(i);
                let top = g.partial(space.z(i).unwrap());
                let mut xi = Poly::var(space.vars(), 0).pow(i as u32);
                xi = xi.scale(&(Rat::one() / factorial::<Rat>(i + jj)));
                assert_eq!(top, xi);
            }
        }
    }

    #[test]
    fn bracket_examples() {
        let j = JetSpace::mixed(0, 0);
        let dx = field(&j, &[("x", "1")]);
        let xdx = field(&j, &[("x", "x")]);
        assert_eq!(dx.bracket(&xdx).unwrap(), dx);
        assert!(xdx.bracket(&xdx).unwrap().is_zero());
        let other = JetSpace::mixed(1, 0);
        assert_eq!(
            dx.bracket(&VectorField::coordinate(&other, 0)),
            Err(JetError::SpaceMismatch)
        );
    }

    #[test]
    fn bracket_with_nonlinear_equation_field() {
        // X = ∂x + y1∂y0 + f∂y1 + z1∂z0 + z2∂z1 + z3∂z2 + g∂z3 on J^{1,3}
        let j = JetSpace::mixed(1, 3);
        let f = poly(&j, "y1*z2^2 + x*z3");
        let g = poly(&j, "z2*z1 - y0");
        let mut x = j.contact_field::<Rat>();
        x.set_coeff(j.y(1).unwrap(), f.clone());
        x.set_coeff(j.z(3).unwrap(), g.clone());
        let dz2 = VectorField::coordinate(&j, j.z(2).unwrap());
        let mut expected = VectorField::coordinate(&j, j.z(1).unwrap());
        expected.set_coeff(j.y(1).unwrap(), f.partial(j.z(2).unwrap()));
        expected.set_coeff(j.z(3).unwrap(), g.partial(j.z(2).unwrap()));
        assert_eq!(dz2.bracket(&x).unwrap(), expected);
    }

    #[test]
    fn prolongation_examples() {
        let base = JetSpace::mixed(0, 0);
        let dy = field(&base, &[("y0", "1")]);
        let t = JetSpace::mixed(3, 3);
        assert_eq!(dy.prolong(&t).unwrap(), field(&t, &[("y0", "1")]));

        let xdx = field(&base, &[("x", "x")]);
        let t = JetSpace::mixed(0, 2);
        assert_eq!(
            xdx.prolong(&t).unwrap(),
            field(&t, &[("x", "x"), ("z1", "-z1"), ("z2", "-2*z2")])
        );

        let s = field(&base, &[("x", "x^2"), ("y0", "x*y0"), ("z0", "2*x*z0")]);
        let t = JetSpace::mixed(0, 1);
        let p = s.prolong(&t).unwrap();
        assert_eq!(p.coeff_named("z1").unwrap(), &poly(&t, "2*z0"));
        assert!(matches!(
            s.prolong(&JetSpace::z_only(2)),
            Err(JetError::NotExtending { .. })
        ));
    }

    #[test]
    fn prolongation_is_a_lie_morphism() {
        let base = JetSpace::mixed(0, 0);
        let t = JetSpace::mixed(3, 3);
        let fields = [
            field(&base, &[("x", "x^2"), ("y0", "x*y0"), ("z0", "x*z0")]),
            field(&base, &[("z0", "y0")]),
            field(&base, &[("x", "y0")]),
            field(&base, &[("y0", "x^2")]),
        ];
        for a in &fields {
            for b in &fields {
                let lhs = a.bracket(b).unwrap().prolong(&t).unwrap();
                let rhs = a
                    .prolong(&t)
                    .unwrap()
                    .bracket(&b.prolong(&t).unwrap())
                    .unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn display_is_readable() {
        let j = JetSpace::mixed(0, 1);
        let v = field(&j, &[("x", "x"), ("z1", "-z1"), ("y0", "x*y0 - z0")]);
        assert_eq!(v.to_string(), "x*∂x + (x*y0 - z0)*∂y0 - z1*∂z1");
    }

    #[test]
    fn z_to_y_renames() {
        let j = JetSpace::mixed(1, 1);
        let g = g_function::<Rat>(1, 1, 0).unwrap();
        assert_eq!(z_to_y(&g, j.vars()).unwrap(), poly(&j, "(x*y1 - y0)*1/2"));
    }

    fn arb_field() -> impl Strategy<Value = VectorField<Rat>> {
        let space = JetSpace::mixed(0, 1);
        proptest::collection::vec((0usize..4, 0i32..3, 0i32..2, 0i32..2, -3i64..4), 0..5).prop_map(
            move |terms| {
                let mut v = VectorField::zero(&space);
                for (c, a, b, d, coef) in terms {
                    let m = Monomial(vec![a, b, d, 0]);
                    let p = Poly::monomial(space.vars(), m, Rat::from_int(coef));
                    let sum = &v.coeffs[c] + &p;
                    v.set_coeff(c, sum);
                }
                v
            },
        )
    }

    proptest! {
        #[test]
        fn bracket_is_a_lie_bracket(a in arb_field(), b in arb_field(), c in arb_field()) {
            prop_assert!(a.bracket(&a).unwrap().is_zero());
            prop_assert_eq!(a.bracket(&b).unwrap(), b.bracket(&a).unwrap().scale(&-Rat::one()));
            let jacobi = a.bracket(&b.bracket(&c).unwrap()).unwrap()
                .add(&b.bracket(&c.bracket(&a).unwrap()).unwrap()).unwrap()
                .add(&c.bracket(&a.bracket(&b).unwrap()).unwrap()).unwrap();
            prop_assert!(jacobi.is_zero());
        }
    }

    #[test]
    fn lemma_identity_and_annihilation() {
        for i in 1..=6usize {
            for jj in 1..=6usize {
                let j = JetSpace::z_only(i);
                let g = |a, b, s| g_function::<Rat>(a, b, s).unwrap().embed(j.vars()).unwrap();
                let x_over_i = poly(&j, &format!("1/{i}*x"));
                let lhs = &(&g(i, jj, 0) - &(&x_over_i * &g(i, jj, 1)))
                    + &g(i - 1, jj + 1, 0).scale(&Rat::from_int(jj as i64));
                assert!(lhs.is_zero(), "identity fails at ({i},{jj})");
            }
        }
        for r in 1..=5usize {
            let j = JetSpace::z_only(r + 1);
            for s in 0..=r {
                let g = g_function::<Rat>(r, 2, s).unwrap().embed(j.vars()).unwrap();
                let d2 = j.truncated_total_derivative(&j.truncated_total_derivative(&g));
                assert!(d2.is_zero());
                assert!(!g.depends_on(j.z(r + 1).unwrap()));
            }
        }
    }
}
