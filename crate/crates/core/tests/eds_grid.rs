use mixsym::eds::{
    known_basis, solve_determining_auto, weighted_histogram, EdsError, TableauSpec,
};
use mixsym::jet::same_span;
use mixsym::sternberg::{
    build_symbol, flag_symbol_prolong, matches_intersection_formula, sternberg_of_spec,
    sternberg_prolong,
};
use mixsym::tanaka::prolong_spec;
use mixsym::Rat;
use std::collections::BTreeMap;
use rayon::prelude::*;

#[test]
fn solver_matches_known_bases_on_grid() {
    let specs = TableauSpec::grid(9);
    let failures: Vec<String> = specs
        .par_iter()
        .filter_map(|&spec| {
            let known = match known_basis::<Rat>(spec) {
                Ok((_, b)) => b,
                Err(EdsError::Uncovered { .. }) => return None,
                Err(e) => return Some(format!("{spec}: {e}")),
            };
            let sol = match solve_determining_auto::<Rat>(spec, 64) {
                Ok(s) => s,
                Err(e) => return Some(format!("{spec}: {e}")),
            };
            if sol.dim() != known.len() || !same_span(&sol.basis, &known) {
                return Some(format!("{spec}: solver {} vs known {}", sol.dim(), known.len()));
            }
            None
        })
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn tanaka_matches_solver_layer_by_layer() {
    let failures: Vec<String> = TableauSpec::grid(9)
        .par_iter()
        .filter_map(|&spec| {
            let sol = solve_determining_auto::<Rat>(spec, 64).ok()?;
            let tan = match prolong_spec::<Rat>(spec) {
                Ok(t) => t,
                Err(e) => return Some(format!("{spec}: {e}")),
            };
            let solver_dims: BTreeMap<i32, usize> =
                sol.graded_dims.iter().map(|(d, n)| (*d as i32, *n)).collect();
            (tan.graded_dims != solver_dims)
                .then(|| format!("{spec}: tanaka {:?} vs solver {:?}", tan.graded_dims, solver_dims))
        })
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn sternberg_matches_tanaka_and_solver() {
    let failures: Vec<String> = TableauSpec::grid(9)
        .par_iter()
        .filter_map(|&spec| {
            let sol = solve_determining_auto::<Rat>(spec, 64).ok()?;
            let tan = prolong_spec::<Rat>(spec).ok()?;
            let st = match sternberg_of_spec::<Rat>(spec) {
                Ok(s) => s,
                Err(e) => return Some(format!("{spec}: {e}")),
            };
            if st.dim() != sol.dim() || st.dim() != tan.dim() {
                return Some(format!(
                    "{spec}: sternberg {} tanaka {} solver {}",
                    st.dim(),
                    tan.dim(),
                    sol.dim()
                ));
            }
            let (a, b) = (st.algebra.invariants(), tan.algebra.invariants());
            (a.derived_series != b.derived_series
                || a.lower_central_series != b.lower_central_series
                || a.center_dim != b.center_dim
                || a.killing_rank != b.killing_rank)
                .then(|| format!("{spec}: invariants {a:?} vs {b:?}"))
        })
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn sternberg_layers_match_intersection_formula() {
    for spec in TableauSpec::grid(6) {
        let a = flag_symbol_prolong(&build_symbol::<Rat>(spec));
        let g = sternberg_prolong(&a, spec.k + spec.l).unwrap();
        let top = *g.graded_dims().keys().last().unwrap();
        assert!(
            matches_intersection_formula(&a, &g, top as usize + 1),
            "{spec}"
        );
    }
}

/// Sternberg layers against the known bases graded by `deg x = 0`, all
/// dependent coordinates of degree 1.
#[test]
fn sternberg_grading_matches_known_bases() {
    let mut specs: Vec<TableauSpec> = TableauSpec::grid(9)
        .into_iter()
        .filter(|s| s.delta == 0 && s.k < s.l)
        .collect();
    specs.push(TableauSpec::new(2, 3, 1).unwrap());
    for spec in specs {
        let (_, known) = known_basis::<Rat>(spec).unwrap();
        let chart = spec.equation_chart();
        let weights: Vec<i64> = (0..chart.dim()).map(|c| i64::from(c != chart.x())).collect();
        let hist = weighted_histogram(&known, &weights).expect("graded span");
        let st = sternberg_of_spec::<Rat>(spec).unwrap();
        let layers: BTreeMap<i64, usize> =
            st.graded_dims().into_iter().map(|(d, n)| (d as i64, n)).collect();
        assert_eq!(hist, layers, "{spec}");
    }
}
