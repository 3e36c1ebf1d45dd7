//! `affine-polya` command-line front end.
//!
//! Exit status: 0 success, 1 failed inequality (strict verify) or
//! non-converged solve, 2 usage or domain error, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use affine_polya::convexgeom::{petty_functional_plus, Polytope, PolytopeData};
use affine_polya::energy::{affine_energy_inf_plus, energies};
use affine_polya::gridfn::{
    sample_function_with, symmetric_rearrangement_with, GridFunction, RearrangementScheme, SampleOptions,
};
use affine_polya::io::{format_g17, to_json_string, write_json};
use affine_polya::minkowski::{solve_normalized, SolverOptions};
use affine_polya::specfun::{sharp_constant, ConstantKind, ConstantQuery};
use affine_polya::sphere::{DirectionSet, DiscreteSphereMeasure};
use affine_polya::verify::{chain_passed, default_corpus, run_suite, CorpusEntry, Suite, SuiteOptions};
use affine_polya::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "affine-polya", version, about = "Asymmetric affine L^p energies, projection bodies and sharp inequality checks")]
struct Cli {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for procedurally generated inputs
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Treat warnings as errors
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
enum Command {
    /// Print a sharp constant
    Constants {
        /// c_np, e_np, a_sobolev, b_logsob, alpha_morrey, beta_nash, gamma_gn, theta_gn, r_gn or kappa
        #[arg(long)]
        kind: String,
        /// Dimension (for kappa: the real index of the unit ball)
        #[arg(long)]
        n: usize,
        /// Exponent p, for the kinds that take one
        #[arg(long)]
        p: Option<f64>,
        /// Second exponent q (gamma_gn, theta_gn, r_gn)
        #[arg(long)]
        q: Option<f64>,
    },
    /// Evaluate an energy of a grid function
    Energy {
        /// Grid header JSON, or {"function": ..., "grid": ...} to sample
        #[arg(long)]
        input: PathBuf,
        /// Exponent p > 1 (ignored for inf_plus)
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Number of sphere directions
        #[arg(long)]
        directions: Option<usize>,
        /// plus = E_p^+, sym = E_p, grad = gradient L^p norm, inf_plus = E_∞^+
        #[arg(long, value_enum, default_value_t = EnergyKind::Plus)]
        kind: EnergyKind,
    },
    /// Symmetric decreasing rearrangement of a grid function
    Rearrange {
        /// Grid header JSON, or {"function": ..., "grid": ...} to sample
        #[arg(long)]
        input: PathBuf,
        /// Output grid header (data goes next to it with extension .bin)
        #[arg(long)]
        out: PathBuf,
        /// Distribution function estimate used for the radii
        #[arg(long, value_enum, default_value_t = Scheme::Subcell)]
        scheme: Scheme,
    },
    /// Sample an analytic function onto a grid
    Sample {
        /// {"function": ..., "grid": ...}
        #[arg(long)]
        spec: PathBuf,
        /// Output grid header
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the discrete normalized L^p Minkowski problem
    Minkowski {
        /// Measure JSON {"dim", "directions", "weights"}
        #[arg(long)]
        measure: PathBuf,
        /// Exponent p > 1
        #[arg(long)]
        p: f64,
        /// Residual target
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Iteration cap
        #[arg(long, default_value_t = 10000)]
        max_iter: usize,
    },
    /// Petty projection inequality for a polytope
    Petty {
        /// Polytope JSON {"dim", "normals", "support"}
        #[arg(long)]
        body: PathBuf,
        /// Exponent p > 1
        #[arg(long)]
        p: f64,
        /// Number of sphere directions
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Run an inequality suite over a corpus
    Verify {
        /// Inequality family to check, or all of them
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Corpus JSON file, or `default` for the built-in 20-function corpus
        #[arg(long, default_value = "default")]
        corpus: String,
        /// Report file (JSON array)
        #[arg(long)]
        out: PathBuf,
        /// Moser–Trudinger constant m_n
        #[arg(long)]
        mn: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum EnergyKind {
    Plus,
    Sym,
    Grad,
    InfPlus,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum Scheme {
    Subcell,
    Staircase,
    LatticeOrder,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum SuiteArg {
    Chain,
    Sobolev,
    Logsob,
    Morrey,
    FaberKrahn,
    Nash,
    Gn,
    MoserTrudinger,
    Starequal,
    All,
}

impl SuiteArg {
    fn suite(self) -> Suite {
        let tag = self.to_possible_value().expect("no skipped variants").get_name().replace('-', "_");
        Suite::from_tag(&tag).expect("suite tags agree")
    }
}

enum Failure {
    Usage(String),
    Io(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Config<'a> {
    #[serde(flatten)]
    command: &'a Command,
    seed: u64,
    strict: bool,
    threads: usize,
}

fn directions(dim: usize, m: Option<usize>) -> Result<Arc<DirectionSet<f64>>, Failure> {
    let m = m.unwrap_or(if dim == 2 { 720 } else { 2000 });
    Ok(Arc::new(DirectionSet::new(dim, m)?))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_function(path: &Path, strict: bool) -> Result<GridFunction<f64>, Failure> {
    let value: Value = serde_json::from_str(&read_text(path)?).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    if value.get("data").is_some() {
        return Ok(GridFunction::read(path)?);
    }
    let entry: CorpusEntry = serde_json::from_value(value).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    sample(&entry, strict)
}

fn sample(entry: &CorpusEntry, strict: bool) -> Result<GridFunction<f64>, Failure> {
    let s = sample_function_with(&entry.function, &entry.grid, SampleOptions { strict })?;
    if let Some(w) = s.warning() {
        eprintln!("warning: {w}");
    }
    Ok(s.function)
}

fn emit(value: &impl Serialize) -> Result<(), Failure> {
    print!("{}", to_json_string(value)?);
    Ok(())
}

fn run(cli: &Cli, threads: usize) -> Result<(), Failure> {
    let config = serde_json::to_value(Config {
        command: &cli.command,
        seed: cli.seed,
        strict: cli.strict,
        threads,
    })
    .map_err(|e| Failure::Usage(e.to_string()))?;
    match &cli.command {
        Command::Constants { kind, n, p, q } => {
            let kind = ConstantKind::from_tag(kind).ok_or_else(|| Failure::Usage(format!("unknown constant kind {kind}")))?;
            let mut query = ConstantQuery::new(kind, *n);
            if let Some(p) = p {
                query = query.with_p(*p);
            }
            if let Some(q) = q {
                query = query.with_q(*q);
            }
            println!("{}", format_g17(sharp_constant(&query)?));
        }
        Command::Energy {
            input,
            p,
            directions: m,
            kind,
        } => {
            let f = load_function(input, cli.strict)?;
            let ds = directions(f.dim(), *m)?;
            let value = match kind {
                EnergyKind::InfPlus => affine_energy_inf_plus(&f, &ds)?,
                k => {
                    let e = energies(&f, &ds, *p)?;
                    match k {
                        EnergyKind::Plus => e.plus,
                        EnergyKind::Sym => e.sym,
                        _ => e.grad,
                    }
                }
            };
            let p = match kind {
                EnergyKind::InfPlus => Value::Null,
                _ => json!(p),
            };
            emit(&json!({"kind": kind, "n": f.dim(), "p": p, "m": ds.len(), "value": value, "config": config}))?;
        }
        Command::Rearrange { input, out, scheme } => {
            let f = load_function(input, cli.strict)?;
            let scheme = match scheme {
                Scheme::Subcell => RearrangementScheme::Subcell,
                Scheme::Staircase => RearrangementScheme::Staircase,
                Scheme::LatticeOrder => RearrangementScheme::LatticeOrder,
            };
            let g = symmetric_rearrangement_with(&f, scheme)?;
            g.write(out)?;
            emit(&json!({
                "out": out.display().to_string(),
                "sup": g.max_abs(),
                "sup_input": f.max_abs(),
                "config": config,
            }))?;
        }
        Command::Sample { spec, out } => {
            let entry: CorpusEntry =
                serde_json::from_str(&read_text(spec)?).map_err(|e| Failure::Usage(format!("{}: {e}", spec.display())))?;
            let s = sample_function_with::<f64>(&entry.function, &entry.grid, SampleOptions { strict: cli.strict })?;
            if let Some(w) = s.warning() {
                eprintln!("warning: {w}");
            }
            s.function.write(out)?;
            emit(&json!({
                "out": out.display().to_string(),
                "mass_captured": s.mass_captured,
                "shift": s.shift,
                "config": config,
            }))?;
        }
        Command::Minkowski {
            measure,
            p,
            tol,
            max_iter,
        } => {
            let mu = DiscreteSphereMeasure::<f64>::from_json(&read_text(measure)?)?;
            let opts = SolverOptions {
                tol: *tol,
                max_iter: *max_iter,
                ..SolverOptions::default()
            };
            let r = solve_normalized(&mu, *p, &opts)?;
            emit(&json!({
                "support": r.polytope.support(),
                "residual": r.residual,
                "iterations": r.iterations,
                "volume": r.polytope.volume(),
                "normalization_check": r.normalization_check,
                "converged": r.converged,
                "facet_areas": r.polytope.facet_areas(),
                "config": config,
            }))?;
            if !r.converged {
                return Err(Failure::Failed(format!("solver stopped at residual {}", format_g17(r.residual))));
            }
        }
        Command::Petty { body, p, directions: m } => {
            let data: PolytopeData<f64> =
                serde_json::from_str(&read_text(body)?).map_err(|e| Failure::Usage(format!("{}: {e}", body.display())))?;
            let poly = Polytope::from_data(data)?;
            let ds = directions(poly.dim(), *m)?;
            let mut r = petty_functional_plus(&poly, *p, ds)?;
            r.insert("config", config);
            emit(&r)?;
            if cli.strict && !r.passed() {
                return Err(Failure::Failed("Petty inequality failed".into()));
            }
        }
        Command::Verify { suite, corpus, out, mn } => {
            let entries: Vec<CorpusEntry> = if corpus == "default" {
                default_corpus(cli.seed)
            } else {
                let path = Path::new(corpus);
                serde_json::from_str(&read_text(path)?).map_err(|e| Failure::Usage(format!("{corpus}: {e}")))?
            };
            let opts = SuiteOptions {
                seed: cli.seed,
                mn: *mn,
                strict: cli.strict,
                ..SuiteOptions::default()
            };
            let mut reports = run_suite(suite.suite(), &entries, &opts)?;
            for r in &mut reports {
                r.insert("config", config.clone());
            }
            write_json(out, &reports)?;
            let failed = reports.iter().filter(|r| r.pass == Some(false) || !chain_passed(r)).count();
            let undecided = reports.iter().filter(|r| r.pass.is_none()).count();
            emit(&json!({
                "out": out.display().to_string(),
                "reports": reports.len(),
                "failed": failed,
                "indeterminate": undecided,
            }))?;
            if failed > 0 {
                if cli.strict {
                    return Err(Failure::Failed(format!("{failed} report(s) failed")));
                }
                eprintln!("warning: {failed} report(s) failed");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if threads == 0 {
        eprintln!("error: --threads must be positive");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
