//! Runs the acceptance criteria in order and prints one line per criterion.
//! Exits non-zero if any of them fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use mixsym::eds::{
    build_eds, check_lemma, derived_flag, is_symmetry, known_basis, solve_determining_auto,
    LemmaPart, NonlinearSystem, TableauSpec,
};
use mixsym::jet::same_span;
use mixsym::report::run_suite;
use mixsym::sternberg::{
    build_symbol, flag_symbol_prolong, sternberg_of_spec, sternberg_prolong, transpose_algebra,
    GradedMatrixAlgebra,
};
use mixsym::tanaka::prolong_spec;
use mixsym::{compare, LieAlgebra, Matrix, Rat, Scalar, Verdict};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn spec(k: i64, l: i64, d: i64) -> TableauSpec {
    TableauSpec::new(k, l, d).expect("valid spec")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn headline() -> Outcome {
    let mut algebras = Vec::new();
    for d in [0, 1] {
        let s = spec(2, 3, d);
        let sol = solve_determining_auto::<Rat>(s, 64).map_err(|e| format!("{s}: {e}"))?;
        ensure(sol.dim() == 15, || format!("{s}: dim {}", sol.dim()))?;
        let (case, known) = known_basis::<Rat>(s).map_err(|e| e.to_string())?;
        ensure(same_span(&sol.basis, &known), || format!("{s}: span differs from {case:?} basis"))?;
        algebras.push(LieAlgebra::from_vector_fields(&sol.basis).map_err(|e| e.to_string())?);
    }
    let c = compare(&algebras[0], &algebras[1]);
    ensure(c.verdict == Verdict::CertifiedNonIsomorphic, || "invariants coincide".into())?;
    Ok(format!("dims 15, 15; spans match known bases; differing: {}", c.differing.join(", ")))
}

fn tanaka_gradings() -> Outcome {
    let mut shown = Vec::new();
    for (d, want) in [(0, [2, 2, 2, 4, 2, 1, 2]), (1, [1, 2, 3, 4, 3, 1, 1])] {
        let g = prolong_spec::<Rat>(spec(2, 3, d)).map_err(|e| e.to_string())?;
        let got = g.dims_from(-3, 3);
        ensure(got == want && g.dim() == 15, || format!("shift {d}: {:?}", g.graded_dims))?;
        shown.push(format!("{got:?}"));
    }
    Ok(shown.join(" and "))
}

/// The scroll algebra for `(k, l) = (2, 3)`, written for `e1 ↦ e0`,
/// `f2 ↦ f1 ↦ 2 f0`, conjugated so that `f1 ↦ f0`.
fn scroll_family() -> Vec<Matrix<Rat>> {
    let param = |t: usize| {
        let mut v = [0i64; 7];
        v[t] = 1;
        let [a, b, c, e1, e2, p, q] = v;
        let rows = [
            [a + e1, c, p, q, 0],
            [b, -a + e1, 0, p, q],
            [0, 0, 2 * a + e2, 2 * c, 0],
            [0, 0, b, e2, c],
            [0, 0, 0, 2 * b, -2 * a + e2],
        ];
        Matrix::from_rows(5, rows.iter().map(|r| r.iter().map(|&x| Rat::from_int(x)).collect()).collect())
            .expect("5x5")
    };
    let mut s = Matrix::identity(5);
    s[(2, 2)] = Rat::from_frac(1, 2);
    let s_inv = s.inverse().expect("invertible");
    (0..7)
        .map(|t| s.mul(&param(t)).unwrap().mul(&s_inv).unwrap())
        .collect()
}

fn sternberg_gradings() -> Outcome {
    let a2 = flag_symbol_prolong(&build_symbol::<Rat>(spec(2, 3, 1)));
    ensure(a2.dim() == 7, || format!("a(<X>) for shift 1 has dim {}", a2.dim()))?;
    let family = scroll_family();
    ensure(family.iter().all(|m| a2.contains(m)), || "scroll matrix outside a(<X>)".into())?;
    let fam = GradedMatrixAlgebra::ungraded(a2.names().to_vec(), family).map_err(|e| e.to_string())?;
    ensure(
        a2.elements().iter().all(|(_, m)| fam.contains(m)),
        || "a(<X>) element outside the scroll family".into(),
    )?;
    let a1 = flag_symbol_prolong(&build_symbol::<Rat>(spec(2, 3, 0)));
    let g = sternberg_prolong(&a1, 5).map_err(|e| e.to_string())?;
    let want = BTreeMap::from([(-1, 5), (0, 7), (1, 3)]);
    ensure(g.graded_dims() == want, || format!("layers {:?}", g.graded_dims()))?;
    Ok("scroll family = a(<X>) (dim 7); layers 5, 7, 3".into())
}

fn transpose_phenomenon() -> Outcome {
    let a = flag_symbol_prolong(&build_symbol::<Rat>(spec(2, 3, 0)));
    let g = sternberg_prolong(&a, 5).map_err(|e| e.to_string())?;
    let t = sternberg_prolong(&transpose_algebra(&a), 5).map_err(|e| e.to_string())?;
    ensure(g.dim() == 15 && t.dim() == 15, || format!("dims {} and {}", g.dim(), t.dim()))?;
    let c = compare(&g.algebra, &t.algebra);
    ensure(c.verdict == Verdict::CertifiedNonIsomorphic, || "invariants coincide".into())?;
    Ok(format!(
        "dims 15, 15; killing rank {} vs {}",
        c.left.killing_rank, c.right.killing_rank
    ))
}

fn triple_agreement() -> Outcome {
    let rows = run_suite::<Rat>(9);
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {}", r.spec, r.errors.join("; ")))
        .collect();
    ensure(failed.is_empty(), || failed.join(" | "))?;
    let covered = rows.iter().filter(|r| r.known.is_some()).count();
    Ok(format!("{} specs agree ({covered} with a known basis)", rows.len()))
}

fn vanishing() -> Outcome {
    for l in 3..=5 {
        let g = sternberg_of_spec::<Rat>(spec(2, l, 0)).map_err(|e| e.to_string())?;
        let dims = g.graded_dims();
        let at = |d: i64| dims.get(&(d as i32)).copied().unwrap_or(0);
        ensure(at(l - 2) > 0 && at(l - 1) == 0, || format!("l = {l}: {dims:?}"))?;
    }
    Ok("layer l-2 nonzero, layer l-1 zero for l = 3, 4, 5".into())
}

fn lemma_suite() -> Outcome {
    let mut cases = vec![(LemmaPart::A, 6, 1, 0)];
    cases.extend((0..=5).map(|r| (LemmaPart::B, r, 1, 0)));
    for r in 0..=4 {
        for p in 1..=3 {
            cases.push((LemmaPart::C, r, p, 0));
            cases.extend((1..=r.min(2)).map(|q| (LemmaPart::D, r, p, q)));
        }
    }
    let results: Vec<Result<(), String>> = cases
        .par_iter()
        .map(|&(part, r, p, q)| {
            let c = check_lemma::<Rat>(part, r, p, q).map_err(|e| e.to_string())?;
            ensure(c.holds, || format!("{c:?}"))?;
            ensure(part != LemmaPart::B || c.solution_dim == r + 3, || format!("{c:?}"))
        })
        .collect();
    let errors: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    ensure(errors.is_empty(), || errors.join(" | "))?;
    Ok(format!("{} checks", cases.len()))
}

fn branching() -> Outcome {
    for (f, want) in [("0", [4, 2, 1]), ("z3^2", [4, 2, 0]), ("y1*z2", [4, 2, 1])] {
        let sys = NonlinearSystem::<Rat>::parse(2, 4, f, "0").map_err(|e| e.to_string())?;
        let flag = derived_flag(&sys).map_err(|e| e.to_string())?;
        ensure(flag.ranks == want, || format!("f = {f}: ranks {:?}", flag.ranks))?;
    }
    Ok("ranks 4,2,1 / 4,2,0 / 4,2,1".into())
}

/// `n` random rational transvections, then random row scalings and a
/// random row order. Always invertible; keeps the tables sparse enough for
/// algebras of dimension ~80.
fn random_basis(n: usize, rng: &mut ChaCha8Rng) -> Matrix<Rat> {
    fn nonzero(rng: &mut ChaCha8Rng) -> Rat {
        let num = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
        Rat::from_frac(num, rng.gen_range(1..=3))
    }
    let mut rows: Vec<Vec<Rat>> = Matrix::<Rat>::identity(n).row_vecs();
    for _ in 0..n {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i == j {
            continue;
        }
        let c = nonzero(rng);
        let add: Vec<Rat> = rows[j].iter().map(|x| x * &c).collect();
        rows[i].iter_mut().zip(add).for_each(|(x, y)| *x += y);
    }
    for row in rows.iter_mut() {
        let c = nonzero(rng);
        row.iter_mut().for_each(|x| *x *= &c);
    }
    rows.shuffle(rng);
    Matrix::from_rows(n, rows).expect("square")
}

/// `change_basis` rebuilds through the checked constructor, so every new
/// table is also tested for antisymmetry and Jacobi.
fn basis_independent(l: &LieAlgebra<Rat>, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut want = l.invariants();
    want.graded_dims = None;
    for _ in 0..5 {
        let p = random_basis(l.dim(), rng);
        let m = l.change_basis(&p).ok_or("basis change failed")?;
        let mut got = m.invariants();
        got.graded_dims = None;
        ensure(got == want, || format!("{want:?} became {got:?}"))?;
    }
    Ok(())
}

fn soundness() -> Outcome {
    let specs = TableauSpec::grid(9);
    let errors: Vec<String> = specs
        .par_iter()
        .enumerate()
        .filter_map(|(i, &s)| {
            let run = || -> Result<(), String> {
                let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
                let sol = solve_determining_auto::<Rat>(s, 64).map_err(|e| e.to_string())?;
                let eds = build_eds::<Rat>(s);
                for v in &sol.basis {
                    let cert = is_symmetry(v, &eds).map_err(|e| e.to_string())?;
                    ensure(cert.holds, || format!("not a symmetry: {:?}", cert.violation))?;
                }
                let solver = LieAlgebra::from_vector_fields(&sol.basis).map_err(|e| e.to_string())?;
                let tanaka = prolong_spec::<Rat>(s).map_err(|e| e.to_string())?.algebra;
                let sternberg = sternberg_of_spec::<Rat>(s).map_err(|e| e.to_string())?.algebra;
                for (name, l) in [("solver", &solver), ("tanaka", &tanaka), ("sternberg", &sternberg)] {
                    l.check_jacobi().map_err(|e| format!("{name}: {e}"))?;
                }
                basis_independent(&solver, &mut rng)
            };
            run().err().map(|e| format!("{s}: {e}"))
        })
        .collect();
    ensure(errors.is_empty(), || errors.join(" | "))?;
    Ok(format!(
        "{} specs: jacobi on 3 algebras each, is_symmetry on every solver field, 5 basis changes per solver algebra",
        specs.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("(2,3) headline", headline),
        ("tanaka gradings", tanaka_gradings),
        ("sternberg gradings", sternberg_gradings),
        ("transpose phenomenon", transpose_phenomenon),
        ("triple agreement grid", triple_agreement),
        ("prolongation vanishing", vanishing),
        ("lemma suite", lemma_suite),
        ("nonlinear branching", branching),
        ("structural soundness", soundness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {}: pass  {name} [{secs:.1}s] {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{secs:.1}s] {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
