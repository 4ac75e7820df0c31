//! Closed-form symmetry bases, written on a small base chart and prolonged
//! to the equation chart.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EdsError, TableauSpec};
use crate::jet::{g_function, z_to_y, JetSpace, VectorField};
use crate::poly::Poly;
use crate::scalar::Scalar;

/// Which closed form applies to a shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnownCase {
    /// δ = 0, k = 2 < l.
    FirstKindK2,
    /// δ = 0, 2 < k < l.
    FirstKind,
    /// δ = 1, (k,l) = (2,3).
    SecondKind23,
    /// δ = l − k > 0, (k,l) ≠ (2,3).
    SecondKind,
    /// 0 < δ < l − k: one row strictly inside the other.
    Nested,
    /// k = 3, δ = −1.
    CspShift,
    /// k = l = 3, δ = 1: the mirror image of `CspShift`.
    MirroredCspShift,
    /// 3 ≤ k, δ > l − k.
    Overhang,
    /// 4 ≤ k, δ < 0: the overhang case with the towers exchanged.
    MirroredOverhang,
}

impl KnownCase {
    pub fn classify(spec: TableauSpec) -> Result<Self, EdsError> {
        let (k, l, d) = (spec.k as i64, spec.l as i64, spec.delta);
        let case = if d == 0 {
            match k {
                _ if k == l => None,
                2 => Some(Self::FirstKindK2),
                _ => Some(Self::FirstKind),
            }
        } else if d == l - k {
            if (k, l) == (2, 3) {
                Some(Self::SecondKind23)
            } else {
                Some(Self::SecondKind)
            }
        } else if d > 0 && d < l - k {
            Some(Self::Nested)
        } else if (k, l, d) == (3, 3, 1) {
            Some(Self::MirroredCspShift)
        } else if d > l - k {
            (k >= 3).then_some(Self::Overhang)
        } else if k == 3 && d == -1 {
            Some(Self::CspShift)
        } else {
            (k >= 4).then_some(Self::MirroredOverhang)
        };
        case.ok_or(EdsError::Uncovered {
            k: spec.k,
            l: spec.l,
            delta: spec.delta,
        })
    }
}

/// Prolongs a field from a sub-chart of the equation chart. The truncated
/// total derivative is the restriction of `D` to the equation manifold, so
/// the recursion never leaves the chart.
fn prolong_on_equation<T: Scalar>(v: &VectorField<T>, chart: &Arc<JetSpace>) -> VectorField<T> {
    let base = v.space().clone();
    let mut w = v.embed(chart).expect("base chart lies inside the equation chart");
    let dx = chart.truncated_total_derivative(w.coeff(0));
    for (from, top, idx) in [
        (base.order_y(), chart.order_y(), JetSpace::y as fn(&JetSpace, usize) -> Option<usize>),
        (base.order_z(), chart.order_z(), JetSpace::z),
    ] {
        let Some(top) = top else { continue };
        let start = from.map_or(0, |b| b + 1).max(1);
        for n in start..=top {
            let cur = idx(chart, n).expect("within chart");
            let prev = idx(chart, n - 1).expect("within chart");
            let d = chart.truncated_total_derivative(w.coeff(prev));
            let p = &d - &(&Poly::var(chart.vars(), cur) * &dx);
            w.set_coeff(cur, p);
        }
    }
    w
}

fn parse<T: Scalar>(chart: &Arc<JetSpace>, pairs: &[(&str, String)]) -> VectorField<T> {
    let pairs: Vec<(&str, &str)> = pairs.iter().map(|(c, p)| (*c, p.as_str())).collect();
    VectorField::parse(chart, &pairs).expect("hard-coded field parses")
}

/// `∂x, x∂x, x²∂x + (k−1)x y0∂y0 + (l−1)x z0∂z0, y0∂y0, z0∂z0`.
fn scalars<T: Scalar>(chart: &Arc<JetSpace>, k: usize, l: usize) -> Vec<VectorField<T>> {
    vec![
        parse(chart, &[("x", "1".into())]),
        parse(chart, &[("x", "x".into())]),
        parse(
            chart,
            &[
                ("x", "x^2".into()),
                ("y0", format!("{}*x*y0", k - 1)),
                ("z0", format!("{}*x*z0", l - 1)),
            ],
        ),
        parse(chart, &[("y0", "y0".into())]),
        parse(chart, &[("z0", "z0".into())]),
    ]
}

fn x_powers<T: Scalar>(chart: &Arc<JetSpace>, coord: &str, n: usize) -> Vec<VectorField<T>> {
    (0..n)
        .map(|i| parse(chart, &[(coord, format!("x^{i}"))]))
        .collect()
}

/// Nondecreasing sequences of length `len` over `0..=max`.
fn multisets(max: usize, len: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in multisets(max, len - 1) {
        let lo = rest.last().copied().unwrap_or(0);
        for s in lo..=max {
            let mut v = rest.clone();
            v.push(s);
            out.push(v);
        }
    }
    out
}

/// `x^i · g^{(s1)}_{i0,j0} ⋯ g^{(sj)}_{i0,j0} ∂_coord` with `i + step·j ≤ cap`,
/// the g's living in `tower` on `chart`.
fn g_products<T: Scalar>(
    chart: &Arc<JetSpace>,
    (gi, gj): (usize, usize),
    tower: char,
    coord: usize,
    cap: usize,
) -> Vec<VectorField<T>> {
    let vars = chart.vars();
    let gs: Vec<Poly<T>> = (0..=gi)
        .map(|s| {
            let g = g_function::<T>(gi, gj, s).expect("g is defined for j >= 1");
            if tower == 'y' {
                z_to_y(&g, vars).expect("y tower long enough")
            } else {
                g.embed(vars).expect("z tower long enough")
            }
        })
        .collect();
    // gj >= 2 on every covered shift, so the loop terminates
    let step = gj - 1;
    let mut out = Vec::new();
    for j in 0.. {
        if step * j > cap {
            break;
        }
        for ms in multisets(gi, j) {
            let prod = ms
                .iter()
                .fold(Poly::one(vars), |acc, &s| &acc * &gs[s]);
            for i in 0..=cap - step * j {
                let p = &Poly::var(vars, 0).pow(i as u32) * &prod;
                let mut v = VectorField::zero(chart);
                v.set_coeff(coord, p);
                out.push(v);
            }
        }
    }
    out
}

fn first_kind_k2<T: Scalar>(l: usize) -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let c = JetSpace::mixed(0, 0);
    let mut v: Vec<VectorField<T>> = [
        &[("x", "1")][..],
        &[("y0", "1")],
        &[("x", "x")],
        &[("y0", "x")],
        &[("x", "y0")],
        &[("y0", "y0")],
        &[("z0", "z0")],
    ]
    .iter()
    .map(|p| VectorField::parse(&c, p).expect("hard-coded field parses"))
    .collect();
    v.push(parse(
        &c,
        &[
            ("x", "x^2".into()),
            ("y0", "x*y0".into()),
            ("z0", format!("{}*x*z0", l - 1)),
        ],
    ));
    v.push(parse(
        &c,
        &[
            ("x", "x*y0".into()),
            ("y0", "y0^2".into()),
            ("z0", format!("{}*y0*z0", l - 1)),
        ],
    ));
    for d in 0..l {
        for j in 0..=d {
            v.push(parse(&c, &[("z0", format!("x^{}*y0^{j}", d - j))]));
        }
    }
    (c, v)
}

fn first_kind<T: Scalar>(k: usize, l: usize) -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let c = JetSpace::mixed(0, 0);
    let mut v = scalars(&c, k, l);
    v.extend(x_powers(&c, "y0", k));
    for j in 0..=(l - 1) / (k - 1) {
        for i in 0..=(l - 1 - (k - 1) * j) {
            v.push(parse(&c, &[("z0", format!("x^{i}*y0^{j}"))]));
        }
    }
    (c, v)
}

fn second_kind_23<T: Scalar>() -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let c = JetSpace::mixed(0, 1);
    let rows: [&[(&str, &str)]; 15] = [
        &[
            ("x", "1/2*x^2*z1 - z0*x"),
            ("y0", "1/2*x*y0*z1 - y0*z0"),
            ("z0", "1/4*x^2*z1^2 - z0^2"),
            ("z1", "1/2*x*z1^2 - z0*z1"),
        ],
        &[
            ("x", "2*(x*z1 - z0)"),
            ("y0", "y0*z1"),
            ("z0", "x*z1^2"),
            ("z1", "z1^2"),
        ],
        &[("x", "z1"), ("z0", "1/2*z1^2")],
        &[("x", "x^2"), ("y0", "x*y0"), ("z0", "2*x*z0"), ("z1", "2*z0")],
        &[("x", "x"), ("z1", "-z1")],
        &[("z0", "z0"), ("z1", "z1")],
        &[("z0", "x^2"), ("z1", "2*x")],
        &[("z0", "x"), ("z1", "1")],
        &[("x", "1")],
        &[("z0", "1")],
        &[("y0", "y0")],
        &[("y0", "x*z1 - 2*z0")],
        &[("y0", "x")],
        &[("y0", "z1")],
        &[("y0", "1")],
    ];
    let v = rows
        .iter()
        .map(|p| VectorField::parse(&c, p).expect("hard-coded field parses"))
        .collect();
    (c, v)
}

fn second_kind<T: Scalar>(k: usize, l: usize) -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let base = JetSpace::mixed(0, 0);
    let c = JetSpace::mixed(0, l - k);
    let mut v: Vec<VectorField<T>> = scalars(&base, k, l)
        .into_iter()
        .chain(x_powers(&base, "z0", l))
        .map(|f| prolong_on_equation(&f, &c))
        .collect();
    v.extend(x_powers(&c, "y0", k));
    for s in 0..=l - k {
        let g = g_function::<T>(l - k, k, s)
            .expect("g is defined")
            .embed(c.vars())
            .expect("z tower long enough");
        let mut f = VectorField::zero(&c);
        f.set_coeff(c.y(0).expect("y0"), g);
        v.push(f);
    }
    (c, v)
}

fn nested<T: Scalar>(k: usize, l: usize) -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let c = JetSpace::mixed(0, 0);
    let mut v = scalars(&c, k, l);
    v.extend(x_powers(&c, "y0", k));
    v.extend(x_powers(&c, "z0", l));
    (c, v)
}

fn csp_shift<T: Scalar>(l: usize) -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let c = JetSpace::mixed(1, 0);
    let m = l - 1;
    let mut v = vec![
        parse(
            &c,
            &[
                ("x", "x*(2*y0 - x*y1)".into()),
                ("y0", "2*y0^2 - 1/2*x^2*y1^2".into()),
                ("y1", "y1*(2*y0 - x*y1)".into()),
                ("z0", format!("{m}*z0*(2*y0 - x*y1)")),
            ],
        ),
        parse(
            &c,
            &[
                ("x", "2*(y0 - x*y1)".into()),
                ("y0", "-x*y1^2".into()),
                ("y1", "-y1^2".into()),
                ("z0", format!("-{m}*z0*y1")),
            ],
        ),
        parse(
            &c,
            &[
                ("x", "x^2".into()),
                ("y0", "2*x*y0".into()),
                ("y1", "2*y0".into()),
                ("z0", format!("{m}*x*z0")),
            ],
        ),
    ];
    let simple: [&[(&str, &str)]; 8] = [
        &[("x", "x"), ("y1", "-y1")],
        &[("y0", "y0"), ("y1", "y1")],
        &[("z0", "z0")],
        &[("x", "y1"), ("y0", "1/2*y1^2")],
        &[("x", "1")],
        &[("y0", "1")],
        &[("y0", "x"), ("y1", "1")],
        &[("y0", "x^2"), ("y1", "2*x")],
    ];
    v.extend(
        simple
            .iter()
            .map(|p| VectorField::parse(&c, p).expect("hard-coded field parses")),
    );
    for i in 0..=m {
        for j0 in 0..=m - i {
            for j1 in 0..=m - i - j0 {
                v.push(parse(
                    &c,
                    &[("z0", format!("x^{i}*(x*y1 - 2*y0)^{j0}*y1^{j1}"))],
                ));
            }
        }
    }
    (c, v)
}

/// Exchanges the `y` and `z` towers, moving the field from `J^{a,b}` to
/// `J^{b,a}`.
fn swap_towers<T: Scalar>(v: &VectorField<T>) -> VectorField<T> {
    let src = v.space();
    let (a, b) = (
        src.order_y().expect("mixed chart"),
        src.order_z().expect("mixed chart"),
    );
    let dst = JetSpace::mixed(b, a);
    let swapped: Vec<String> = src
        .vars()
        .names()
        .iter()
        .map(|n| {
            if let Some(r) = n.strip_prefix('y') {
                format!("z{r}")
            } else if let Some(r) = n.strip_prefix('z') {
                format!("y{r}")
            } else {
                n.clone()
            }
        })
        .collect();
    let table = crate::poly::VarTable::new(swapped.clone()).expect("valid names");
    let mut out = VectorField::zero(&dst);
    for (c, p) in v.coeffs().iter().enumerate() {
        let moved = Poly::from_terms(&table, p.terms().map(|(m, x)| (m.clone(), x.clone())))
            .and_then(|q| q.embed(dst.vars()))
            .expect("renamed chart matches");
        out.set_coeff(dst.index_of(&swapped[c]).expect("renamed coordinate"), moved);
    }
    out
}

fn mirrored_csp_shift<T: Scalar>() -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let (_, v) = csp_shift::<T>(3);
    (JetSpace::mixed(0, 1), v.iter().map(swap_towers).collect())
}

fn overhang<T: Scalar>(k: usize, l: usize, d: usize) -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let base = JetSpace::mixed(0, 0);
    let c = JetSpace::mixed(0, d);
    let mut v: Vec<VectorField<T>> = scalars(&base, k, l)
        .into_iter()
        .chain(x_powers(&base, "z0", l))
        .map(|f| prolong_on_equation(&f, &c))
        .collect();
    v.extend(g_products(&c, (d, l - d), 'z', c.y(0).expect("y0"), k - 1));
    (c, v)
}

fn mirrored_overhang<T: Scalar>(
    k: usize,
    l: usize,
    d: usize,
) -> (Arc<JetSpace>, Vec<VectorField<T>>) {
    let base = JetSpace::mixed(0, 0);
    let c = JetSpace::mixed(d, 0);
    let mut v: Vec<VectorField<T>> = scalars(&base, k, l)
        .into_iter()
        .chain(x_powers(&base, "y0", k))
        .map(|f| prolong_on_equation(&f, &c))
        .collect();
    v.extend(g_products(&c, (d, k - d), 'y', c.z(0).expect("z0"), l - 1));
    (c, v)
}

/// The closed-form basis for `spec`, prolonged to the equation chart.
pub fn known_basis<T: Scalar>(
    spec: TableauSpec,
) -> Result<(KnownCase, Vec<VectorField<T>>), EdsError> {
    let case = KnownCase::classify(spec)?;
    let (k, l) = (spec.k, spec.l);
    let (_, fields) = match case {
        KnownCase::FirstKindK2 => first_kind_k2(l),
        KnownCase::FirstKind => first_kind(k, l),
        KnownCase::SecondKind23 => second_kind_23(),
        KnownCase::SecondKind => second_kind(k, l),
        KnownCase::Nested => nested(k, l),
        KnownCase::CspShift => csp_shift(l),
        KnownCase::MirroredCspShift => mirrored_csp_shift(),
        KnownCase::Overhang => overhang(k, l, spec.delta as usize),
        KnownCase::MirroredOverhang => mirrored_overhang(k, l, (-spec.delta) as usize),
    };
    let chart = spec.equation_chart();
    Ok((
        case,
        fields
            .iter()
            .map(|f| prolong_on_equation(f, &chart))
            .collect(),
    ))
}
