//! Point symmetries of mixed-order ODE systems `y^(k) = 0, z^(l) = 0`
//! and of their shifted exterior differential systems, computed exactly.

pub mod eds;
pub mod exact;
pub mod jet;
pub mod liealg;
pub mod poly;
pub mod report;
pub mod scalar;
pub mod sternberg;
pub mod tanaka;

pub use eds::{
    build_eds, derived_flag, is_symmetry, known_basis, solve_determining, solve_determining_auto,
    DerivedFlag, DeterminingSolution, EdsError, KnownCase, NonlinearSystem, ShiftEds,
    SymmetryCertificate, TableauSpec,
};
pub use report::{Method, Report, ReportError, SuiteRow};
pub use sternberg::{
    build_symbol, flag_symbol_prolong, sternberg_prolong, transpose_algebra, GradedMatrixAlgebra,
    GradedSymbol, PolyField, SternbergError, SternbergProlongation,
};
pub use tanaka::{build_gnla, prolong_spec, tanaka_prolong, GradedNilpotent, GradedProlongation, TanakaError};
pub use jet::{g_function, JetError, JetSpace, VectorField};
pub use exact::{solve_in_span, ExactError, Matrix, SpanBasis, SpanSolution, Subspace};
pub use liealg::{compare, Comparison, InvariantTuple, LieAlgebra, LieError, Verdict};
pub use poly::{ratfunc_kernel, Monomial, Poly, PolyError, RatFunc, VarTable};
pub use scalar::{parse_scalar, Scalar};

pub type Rat = num_rational::BigRational;
pub type RatMatrix = Matrix<Rat>;
pub type RatSubspace = Subspace<Rat>;
pub type RatPoly = Poly<Rat>;
pub type RatField = VectorField<Rat>;
pub type RatLieAlgebra = LieAlgebra<Rat>;
pub type RatEds = ShiftEds<Rat>;
