use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mixsym::eds::{check_lemma, derived_flag, LemmaPart, NonlinearSystem, TableauSpec};
use mixsym::report::{
    compare_report, determining_report, known_report, run_suite, sternberg_report,
    tanaka_report, CompareReport, Report, ReportError,
};
use mixsym::Rat;

#[derive(Parser)]
#[command(name = "mixsym", version, about = "Exact symmetry algebras of y^(k) = z^(l) = 0 and its shifted systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymMethod {
    Determining,
    Known,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Tanaka,
    Sternberg,
}

#[derive(clap::Args)]
struct SpecArgs {
    #[arg(long)]
    k: i64,
    #[arg(long)]
    l: i64,
    #[arg(long, allow_negative_numbers = true)]
    shift: i64,
}

impl SpecArgs {
    fn spec(&self) -> Result<TableauSpec, Failure> {
        TableauSpec::new(self.k, self.l, self.shift).map_err(|e| Failure::Input(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Symmetry algebra of a shift-δ system.
    Symmetries {
        #[command(flatten)]
        spec: SpecArgs,
        /// Fixed graded-degree bound; by default the solver stops on its own.
        #[arg(long)]
        degree_bound: Option<usize>,
        #[arg(long, value_enum, default_value = "determining")]
        method: SymMethod,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Tanaka or Sternberg prolongation of the symbol of a spec.
    Prolong {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value = "tanaka")]
        engine: Engine,
        /// Prolong the transposed matrix algebra (Sternberg only).
        #[arg(long)]
        transpose: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Runs every method on a spec and checks they agree.
    Compare {
        #[command(flatten)]
        spec: SpecArgs,
        /// Also compare invariants against this shift of the same (k, l).
        #[arg(long, allow_negative_numbers = true)]
        against: Option<i64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Skew tableau and jet projection chain.
    Tableau {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Checks one part of the lemma on the functions g_{i,j}.
    Lemma {
        #[arg(long)]
        part: LemmaPart,
        /// Defaults to 6 for part a (largest i, j) and 3 otherwise.
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        q: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Derived flag ranks of y^(k) = f, z^(l) = g.
    Flags {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Cross-checks all methods on every spec with k + l <= max-sum.
    Suite {
        #[arg(long, default_value_t = 9)]
        max_sum: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

enum Failure {
    /// Exit code 2.
    Input(String),
    /// Exit code 1, naming the violated check.
    Check(String),
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        if e.is_bad_input() {
            Failure::Input(e.to_string())
        } else {
            Failure::Check(e.to_string())
        }
    }
}

fn emit<S: Serialize>(format: Format, value: &S, text: impl FnOnce() -> String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("serializable")),
        Format::Text => print!("{}", text()),
    }
}

fn dims_line<K: std::fmt::Display, V: std::fmt::Display>(it: impl IntoIterator<Item = (K, V)>) -> String {
    it.into_iter()
        .map(|(d, n)| format!("{d}:{n}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn verdict(holds: bool) -> &'static str {
    if holds {
        "ok"
    } else {
        "FAILED"
    }
}

fn detail(d: &str) -> String {
    if d.is_empty() {
        String::new()
    } else {
        format!(" ({d})")
    }
}

fn report_text(r: &Report) -> String {
    let mut s = String::new();
    let method = serde_json::to_value(r.method).expect("serializable");
    let _ = writeln!(
        s,
        "spec {}  method {}{}  dim {}",
        r.spec,
        method.as_str().unwrap_or_default(),
        if r.transposed { " (transposed)" } else { "" },
        r.dimension
    );
    if let Some(c) = r.known_case {
        let c = serde_json::to_value(c).expect("serializable");
        let _ = writeln!(s, "known case: {}", c.as_str().unwrap_or_default());
    }
    let _ = writeln!(s, "graded dims: {}", dims_line(&r.graded_dims));
    let inv = &r.invariants;
    let _ = writeln!(
        s,
        "invariants: derived {:?}  lower central {:?}  center {}  killing rank {}",
        inv.derived_series, inv.lower_central_series, inv.center_dim, inv.killing_rank
    );
    let _ = writeln!(s, "basis:");
    for b in &r.basis {
        let _ = writeln!(s, "  {b}");
    }
    for a in &r.agreements {
        let _ = writeln!(s, "check {}: {}{}", a.name, verdict(a.holds), detail(&a.detail));
    }
    s
}

fn check_report(r: &Report) -> Result<(), Failure> {
    match r.failure() {
        Some(a) => Err(Failure::Check(format!("{} failed {}", a.name, a.detail))),
        None => Ok(()),
    }
}

fn compare_text(c: &CompareReport) -> String {
    let mut s = String::new();
    for r in &c.reports {
        let method = serde_json::to_value(r.method).expect("serializable");
        let _ = writeln!(
            s,
            "{:<12} {:<12} dim {:>3}  graded {}",
            r.spec.to_string(),
            method.as_str().unwrap_or_default(),
            r.dimension,
            dims_line(&r.graded_dims)
        );
    }
    for a in &c.agreements {
        let _ = writeln!(s, "check {}: {}{}", a.name, verdict(a.holds), detail(&a.detail));
    }
    if let (Some(o), Some(cmp)) = (&c.other, &c.comparison) {
        let _ = writeln!(s, "against {}: dim {}", o.spec, o.dimension);
        let _ = writeln!(s, "verdict: {}", cmp.verdict);
        if !cmp.differing.is_empty() {
            let _ = writeln!(s, "differing invariants: {}", cmp.differing.join(", "));
        }
        let _ = writeln!(
            s,
            "killing rank {} vs {}; center {} vs {}",
            cmp.left.killing_rank, cmp.right.killing_rank, cmp.left.center_dim, cmp.right.center_dim
        );
    }
    s
}

#[derive(Serialize)]
struct TableauOut {
    spec: TableauSpec,
    tableau: String,
    chain: String,
    fundamental: bool,
}

#[derive(Serialize)]
struct FlagsOut {
    k: usize,
    l: usize,
    f: String,
    g: String,
    ranks: Vec<usize>,
    generators: Vec<Vec<String>>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Symmetries {
            spec,
            degree_bound,
            method,
            format,
        } => {
            let spec = spec.spec()?;
            let (r, _) = match method {
                SymMethod::Determining => determining_report::<Rat>(spec, degree_bound, false)?,
                SymMethod::Both => determining_report::<Rat>(spec, degree_bound, true)?,
                SymMethod::Known => known_report::<Rat>(spec)?,
            };
            emit(format, &r, || report_text(&r));
            check_report(&r)
        }
        Command::Prolong {
            spec,
            engine,
            transpose,
            format,
        } => {
            let spec = spec.spec()?;
            let (r, _) = match engine {
                Engine::Tanaka if transpose => {
                    return Err(Failure::Input("--transpose needs --engine sternberg".into()))
                }
                Engine::Tanaka => tanaka_report::<Rat>(spec)?,
                Engine::Sternberg => sternberg_report::<Rat>(spec, transpose)?,
            };
            emit(format, &r, || report_text(&r));
            check_report(&r)
        }
        Command::Compare {
            spec,
            against,
            format,
        } => {
            let other = against
                .map(|d| TableauSpec::new(spec.k, spec.l, d))
                .transpose()
                .map_err(|e| Failure::Input(e.to_string()))?;
            let spec = spec.spec()?;
            let c = compare_report::<Rat>(spec, other)?;
            emit(format, &c, || compare_text(&c));
            if let Some(a) = c.agreements.iter().find(|a| !a.holds) {
                return Err(Failure::Check(format!("{} failed ({})", a.name, a.detail)));
            }
            c.reports.iter().chain(&c.other).try_for_each(check_report)
        }
        Command::Tableau { spec, format } => {
            let spec = spec.spec()?;
            let out = TableauOut {
                spec,
                tableau: spec.render_ascii(),
                chain: spec.chain_string(),
                fundamental: spec.is_fundamental(),
            };
            emit(format, &out, || format!("{}\n{}\n", out.tableau, out.chain));
            Ok(())
        }
        Command::Lemma {
            part,
            r,
            p,
            q,
            format,
        } => {
            let r = r.unwrap_or(if part == LemmaPart::A { 6 } else { 3 });
            let c = check_lemma::<Rat>(part, r, p, q).map_err(|e| Failure::Input(e.to_string()))?;
            emit(format, &c, || match part {
                LemmaPart::A => format!(
                    "part a: identity holds for {} of {} pairs (i, j ≤ {r}): {}\n",
                    c.expected_dim,
                    c.solution_dim,
                    verdict(c.holds)
                ),
                _ => format!(
                    "part {part} (r={}, p={}, q={}): solution space dim {}, claimed span dim {}: {}\n",
                    c.r,
                    c.p,
                    c.q,
                    c.solution_dim,
                    c.expected_dim,
                    verdict(c.holds)
                ),
            });
            if c.holds {
                Ok(())
            } else {
                Err(Failure::Check(format!("lemma part {part} failed")))
            }
        }
        Command::Flags { k, l, f, g, format } => {
            let sys = NonlinearSystem::<Rat>::parse(k, l, &f, &g).map_err(|e| Failure::Input(e.to_string()))?;
            let flag = derived_flag(&sys).map_err(|e| Failure::Check(e.to_string()))?;
            let out = FlagsOut {
                k,
                l,
                f,
                g,
                ranks: flag.ranks.clone(),
                generators: flag
                    .generators
                    .iter()
                    .map(|gs| gs.iter().map(ToString::to_string).collect())
                    .collect(),
            };
            emit(format, &out, || {
                let mut s = format!(
                    "ranks {}\n",
                    out.ranks.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
                );
                for (i, gs) in out.generators.iter().enumerate() {
                    let _ = writeln!(s, "F{}: {}", i + 1, if gs.is_empty() { "0".into() } else { gs.join(", ") });
                }
                s
            });
            Ok(())
        }
        Command::Suite { max_sum, format } => {
            let rows = run_suite::<Rat>(max_sum);
            emit(format, &rows, || {
                let show = |v: Option<usize>| v.map_or("-".to_string(), |n| n.to_string());
                let mut s = format!(
                    "{:<10} {:>11} {:>6} {:>9} {:>5}  result\n",
                    "spec", "determining", "tanaka", "sternberg", "known"
                );
                for r in &rows {
                    let _ = writeln!(
                        s,
                        "{:<10} {:>11} {:>6} {:>9} {:>5}  {}{}",
                        r.spec.to_string(),
                        show(r.determining),
                        show(r.tanaka),
                        show(r.sternberg),
                        show(r.known),
                        if r.pass { "pass" } else { "FAIL" },
                        if r.errors.is_empty() { String::new() } else { format!(" {}", r.errors.join("; ")) }
                    );
                }
                let passed = rows.iter().filter(|r| r.pass).count();
                let _ = writeln!(s, "{passed}/{} specs agree", rows.len());
                s
            });
            match rows.iter().find(|r| !r.pass) {
                Some(r) => Err(Failure::Check(format!("triple agreement failed at {}", r.spec))),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
