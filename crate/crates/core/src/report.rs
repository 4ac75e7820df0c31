//! Serializable summaries of one computation, plus the cross-method grid.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eds::{
    build_eds, is_symmetry, known_basis, solve_determining,
    solve_determining_auto, weighted_histogram, EdsError, KnownCase, TableauSpec,
};
use crate::jet::same_span;
use crate::liealg::{compare, Comparison, InvariantTuple, LieAlgebra, LieError};
use crate::scalar::Scalar;
use crate::sternberg::{
    build_symbol, flag_symbol_prolong, sternberg_prolong, transpose_algebra, SternbergError,
};
use crate::tanaka::{prolong_spec, TanakaError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error(transparent)]
    Eds(#[from] EdsError),
    #[error(transparent)]
    Tanaka(#[from] TanakaError),
    #[error(transparent)]
    Sternberg(#[from] SternbergError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

impl ReportError {
    /// Whether the input itself was unusable, as opposed to a failed check.
    pub fn is_bad_input(&self) -> bool {
        matches!(
            self,
            ReportError::Eds(
                EdsError::InvalidSpec { .. } | EdsError::Uncovered { .. } | EdsError::ZeroBound
            ) | ReportError::Eds(EdsError::Jet(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Determining,
    Tanaka,
    Sternberg,
    KnownBasis,
}

/// A named check and its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agreement {
    pub name: String,
    pub holds: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Agreement {
    fn new(name: &str, holds: bool, detail: impl Into<String>) -> Self {
        Agreement {
            name: name.to_string(),
            holds,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub spec: TableauSpec,
    pub method: Method,
    pub dimension: usize,
    /// Degree → dimension; JSON keys are the degrees as strings.
    pub graded_dims: BTreeMap<i64, usize>,
    pub basis: Vec<String>,
    pub invariants: InvariantTuple,
    pub agreements: Vec<Agreement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_case: Option<KnownCase>,
    #[serde(default)]
    pub transposed: bool,
    pub elapsed_us: u64,
}

impl Report {
    pub fn all_hold(&self) -> bool {
        self.agreements.iter().all(|a| a.holds)
    }

    /// The first failing agreement, if any.
    pub fn failure(&self) -> Option<&Agreement> {
        self.agreements.iter().find(|a| !a.holds)
    }
}

fn elapsed(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

/// Determining equations, optionally with a fixed graded-degree bound;
/// `with_known` adds the span comparison against the closed-form basis.
pub fn determining_report<T: Scalar>(
    spec: TableauSpec,
    bound: Option<usize>,
    with_known: bool,
) -> Result<(Report, LieAlgebra<T>), ReportError> {
    let t = Instant::now();
    let sol = match bound {
        Some(b) => solve_determining::<T>(spec, b)?,
        None => solve_determining_auto::<T>(spec, 64)?,
    };
    let eds = build_eds::<T>(spec);
    let mut bad = None;
    for v in &sol.basis {
        let cert = is_symmetry(v, &eds)?;
        if !cert.holds {
            bad = cert.violation;
            break;
        }
    }
    let algebra = LieAlgebra::from_vector_fields(&sol.basis)?;
    let mut agreements = vec![
        Agreement::new("stabilized", true, format!("graded degree bound {}", sol.degree_bound)),
        Agreement::new("is-symmetry", bad.is_none(), bad.unwrap_or_default()),
        Agreement::new("jacobi", algebra.check_jacobi().is_ok(), ""),
    ];
    let mut known_case = None;
    if with_known {
        let (case, known) = known_basis::<T>(spec)?;
        known_case = Some(case);
        agreements.push(Agreement::new(
            "span-equals-known-basis",
            same_span(&sol.basis, &known),
            format!("solver {} vs known {}", sol.dim(), known.len()),
        ));
    }
    let report = Report {
        spec,
        method: Method::Determining,
        dimension: sol.dim(),
        graded_dims: sol.graded_dims.clone(),
        basis: sol.basis.iter().map(ToString::to_string).collect(),
        invariants: algebra.invariants(),
        agreements,
        known_case,
        transposed: false,
        elapsed_us: elapsed(t),
    };
    Ok((report, algebra))
}

pub fn known_report<T: Scalar>(spec: TableauSpec) -> Result<(Report, LieAlgebra<T>), ReportError> {
    let t = Instant::now();
    let (case, basis) = known_basis::<T>(spec)?;
    let eds = build_eds::<T>(spec);
    let weights = spec.tanaka_weights(eds.chart());
    let graded = weighted_histogram(&basis, &weights);
    let mut bad = None;
    for v in &basis {
        let cert = is_symmetry(v, &eds)?;
        if !cert.holds {
            bad = cert.violation;
            break;
        }
    }
    let algebra = LieAlgebra::from_vector_fields(&basis)?;
    let report = Report {
        spec,
        method: Method::KnownBasis,
        dimension: basis.len(),
        graded_dims: graded.clone().unwrap_or_default(),
        basis: basis.iter().map(ToString::to_string).collect(),
        invariants: algebra.invariants(),
        agreements: vec![
            Agreement::new("is-symmetry", bad.is_none(), bad.unwrap_or_default()),
            Agreement::new("graded", graded.is_some(), ""),
            Agreement::new("jacobi", algebra.check_jacobi().is_ok(), ""),
        ],
        known_case: Some(case),
        transposed: false,
        elapsed_us: elapsed(t),
    };
    Ok((report, algebra))
}

pub fn tanaka_report<T: Scalar>(spec: TableauSpec) -> Result<(Report, LieAlgebra<T>), ReportError> {
    let t = Instant::now();
    let g = prolong_spec::<T>(spec)?;
    let report = Report {
        spec,
        method: Method::Tanaka,
        dimension: g.dim(),
        graded_dims: g.graded_dims.iter().map(|(d, n)| (*d as i64, *n)).collect(),
        basis: g.algebra.labels().to_vec(),
        invariants: g.algebra.invariants(),
        agreements: vec![Agreement::new("jacobi", g.algebra.check_jacobi().is_ok(), "")],
        known_case: None,
        transposed: false,
        elapsed_us: elapsed(t),
    };
    Ok((report, g.algebra))
}

/// Sternberg prolongation of the flag-symbol algebra of `spec` (or of its
/// transpose), with the default cap `k + l`.
pub fn sternberg_report<T: Scalar>(
    spec: TableauSpec,
    transpose: bool,
) -> Result<(Report, LieAlgebra<T>), ReportError> {
    let t = Instant::now();
    let mut a = flag_symbol_prolong(&build_symbol::<T>(spec));
    if transpose {
        a = transpose_algebra(&a);
    }
    let g = sternberg_prolong(&a, spec.k + spec.l)?;
    let report = Report {
        spec,
        method: Method::Sternberg,
        dimension: g.dim(),
        graded_dims: g.graded_dims().into_iter().map(|(d, n)| (d as i64, n)).collect(),
        basis: g.basis().iter().map(ToString::to_string).collect(),
        invariants: g.algebra.invariants(),
        agreements: vec![Agreement::new("jacobi", g.algebra.check_jacobi().is_ok(), "")],
        known_case: None,
        transposed: transpose,
        elapsed_us: elapsed(t),
    };
    Ok((report, g.algebra))
}

/// All methods on one spec, and optionally the comparison with another.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareReport {
    pub reports: Vec<Report>,
    pub agreements: Vec<Agreement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

impl CompareReport {
    pub fn all_hold(&self) -> bool {
        self.agreements.iter().all(|a| a.holds)
            && self.reports.iter().all(Report::all_hold)
            && self.other.as_ref().is_none_or(Report::all_hold)
    }
}

pub fn compare_report<T: Scalar>(
    spec: TableauSpec,
    other: Option<TableauSpec>,
) -> Result<CompareReport, ReportError> {
    let (det, alg) = determining_report::<T>(spec, None, false)?;
    let (tan, _) = tanaka_report::<T>(spec)?;
    let (st, _) = sternberg_report::<T>(spec, false)?;
    let known = match known_report::<T>(spec) {
        Ok((r, _)) => Some(r),
        Err(ReportError::Eds(EdsError::Uncovered { .. })) => None,
        Err(e) => return Err(e),
    };
    let mut agreements = vec![
        Agreement::new(
            "dimension-tanaka",
            tan.dimension == det.dimension,
            format!("{} vs {}", tan.dimension, det.dimension),
        ),
        Agreement::new(
            "dimension-sternberg",
            st.dimension == det.dimension,
            format!("{} vs {}", st.dimension, det.dimension),
        ),
        Agreement::new(
            "graded-dims-tanaka",
            tan.graded_dims == det.graded_dims,
            "",
        ),
    ];
    if let Some(k) = &known {
        agreements.push(Agreement::new(
            "dimension-known-basis",
            k.dimension == det.dimension,
            format!("{} vs {}", k.dimension, det.dimension),
        ));
    }
    let mut reports = vec![det, tan, st];
    reports.extend(known);
    let (other, comparison) = match other {
        Some(o) => {
            let (r, oalg) = determining_report::<T>(o, None, false)?;
            (Some(r), Some(compare(&alg, &oalg)))
        }
        None => (None, None),
    };
    Ok(CompareReport {
        reports,
        agreements,
        other,
        comparison,
    })
}

/// One line of the cross-method grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub spec: TableauSpec,
    pub determining: Option<usize>,
    pub tanaka: Option<usize>,
    pub sternberg: Option<usize>,
    pub known: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_case: Option<KnownCase>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    pub elapsed_us: u64,
}

pub fn suite_row<T: Scalar>(spec: TableauSpec) -> SuiteRow {
    let t = Instant::now();
    let mut errors = Vec::new();
    let mut record = |what: &str, r: Result<usize, String>| match r {
        Ok(n) => Some(n),
        Err(e) => {
            errors.push(format!("{what}: {e}"));
            None
        }
    };
    let determining = record(
        "determining",
        solve_determining_auto::<T>(spec, 64).map(|s| s.dim()).map_err(|e| e.to_string()),
    );
    let tanaka = record(
        "tanaka",
        prolong_spec::<T>(spec).map(|g| g.dim()).map_err(|e| e.to_string()),
    );
    let a = flag_symbol_prolong(&build_symbol::<T>(spec));
    let sternberg = record(
        "sternberg",
        sternberg_prolong(&a, spec.k + spec.l)
            .map(|g| g.dim())
            .map_err(|e| e.to_string()),
    );
    let (known_case, known) = match known_basis::<T>(spec) {
        Ok((c, b)) => (Some(c), Some(b.len())),
        Err(EdsError::Uncovered { .. }) => (None, None),
        Err(e) => {
            record("known", Err(e.to_string()));
            (None, None)
        }
    };
    let pass = errors.is_empty()
        && determining.is_some()
        && determining == tanaka
        && determining == sternberg
        && known.is_none_or(|n| Some(n) == determining);
    SuiteRow {
        spec,
        determining,
        tanaka,
        sternberg,
        known,
        known_case,
        pass,
        errors,
        elapsed_us: elapsed(t),
    }
}

/// Every valid spec with `k + l ≤ max_sum`, in grid order.
pub fn run_suite<T: Scalar>(max_sum: usize) -> Vec<SuiteRow> {
    TableauSpec::grid(max_sum)
        .par_iter()
        .map(|&s| suite_row::<T>(s))
        .collect()
}
