use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use elts::algebra::{FeasibilityOptions, SystemCollection};
use elts::bisim::{self, DesiderataOptions};
use elts::json;
use elts::laws::{self, LawConfig, LawScope};
use elts::lts::Elts;
use elts::quantum::{self, DensityOperator};
use elts::Error;

const EXIT_CODES: &str = "Exit codes: 0 = related / valid / all laws hold, 1 = unrelated / invalid / a law failed, \
2 = usage, parse or validation error.";

#[derive(Parser, Debug)]
#[command(name = "elts", version, about = "Check and transform effect-labelled transition systems", after_help = EXIT_CODES)]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Config {
    /// Equality and positivity tolerance for quantum weights (default: as in the input, 1e-9)
    #[arg(long, global = true, value_parser = positive)]
    tol: Option<f64>,
    /// Residual tolerance of quantum coupling searches
    #[arg(long, global = true, default_value_t = 1e-6, value_parser = positive)]
    feas_tol: f64,
    /// Iteration budget of quantum coupling searches
    #[arg(long, global = true, default_value_t = 20000)]
    max_iters: usize,
    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random densities for desiderata1 (default 10) or samples per law (default 500)
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Write the result here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Human,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CheckKind {
    Kernel,
    Am,
    Desiderata1,
    Desiderata2,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Scope {
    Algebra,
    Monad,
    Quantum,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether two states are equivalent: `check KIND FILE X [FILE_B] Y`
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        file: PathBuf,
        x: String,
        /// Either `Y` (both states in FILE) or `FILE_B Y`
        #[arg(num_args = 1..=2, required = true)]
        rest: Vec<String>,
    },
    /// Apply an operator to systems and write the result
    Transform {
        #[command(subcommand)]
        op: Transform,
    },
    /// Run the randomized law suites
    Laws {
        #[arg(value_enum, default_value_t = Scope::All)]
        scope: Scope,
        /// Finite algebra table (JSON) to check instead of the built-in one
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, hide = true)]
        corrupt_sort: bool,
    },
    /// Find a density operator giving every listed effect a different Born value
    Distinguish { effects: PathBuf },
    /// Parse and validate a system
    Validate { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum Transform {
    /// Born rule at a density: a named matrix (`proj0`), `maximally_mixed`, or a density file
    Instantiate {
        file: PathBuf,
        #[arg(long)]
        rho: String,
    },
    /// Feed a density into some of the input systems
    Peval {
        file: PathBuf,
        #[arg(long)]
        rho: String,
        /// Systems the density covers, comma separated (needed for named densities)
        #[arg(long, value_delimiter = ',')]
        systems: Vec<String>,
    },
    /// Parallel composition with CCS synchronization
    Compose {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, default_value = "|")]
        separator: String,
    },
    /// Apply a weight morphism: Born at `--rho`, or a finite homomorphism `--hom`
    Remap {
        file: PathBuf,
        #[arg(long, conflicts_with = "hom", required_unless_present = "hom")]
        rho: Option<String>,
        #[arg(long)]
        hom: Option<PathBuf>,
    },
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not a positive number"))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path, config: &Config) -> Result<Elts> {
    let sys = json::parse_elts(&read(path)?).with_context(|| format!("{}", path.display()))?;
    Ok(match config.tol {
        Some(t) => sys.with_tol(t),
        None => sys,
    })
}

/// A density from a file, `maximally_mixed`, or a named matrix over `systems`.
fn density(arg: &str, systems: &SystemCollection, config: &Config) -> Result<DensityOperator> {
    let tol = config.tol.unwrap_or(quantum::DEFAULT_TOL);
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(json::parse_density(&read(path)?, systems.registry(), tol)?);
    }
    if arg == "maximally_mixed" {
        return Ok(DensityOperator::maximally_mixed(systems.clone()));
    }
    let m = quantum::named(arg).map_err(|_| anyhow!("`{arg}` is neither a file nor a named density"))?;
    Ok(DensityOperator::new(systems.clone(), m, tol)?)
}

fn emit(config: &Config, json: &Value, human: impl FnOnce() -> String) -> Result<()> {
    let text = match config.format {
        Format::Json => serde_json::to_string_pretty(json)? + "\n",
        Format::Human => human(),
    };
    match &config.out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn feasibility(config: &Config) -> FeasibilityOptions {
    FeasibilityOptions {
        feas_tol: config.feas_tol,
        max_iters: config.max_iters,
    }
}

fn check(kind: CheckKind, file: &Path, x: &str, rest: &[String], config: &Config) -> Result<u8> {
    let a = load(file, config)?;
    let (b, y) = match rest {
        [y] => (a.clone(), y.as_str()),
        [f, y] => (load(Path::new(f), config)?, y.as_str()),
        _ => bail!("expected `Y` or `FILE_B Y` after the first state"),
    };
    let desiderata = DesiderataOptions {
        seed: config.seed,
        n_random: config.samples.unwrap_or(10),
        ..DesiderataOptions::default()
    };
    let (ok, doc, human) = match kind {
        CheckKind::Kernel => {
            let v = bisim::kernel_bisim(&a, &b)?.verdict(x, y)?;
            (v.related, v.to_json(), v.to_human())
        }
        CheckKind::Am => {
            let v = bisim::am_bisim(&a, &b, feasibility(config))?.verdict(x, y)?;
            (v.related, v.to_json(), v.to_human())
        }
        CheckKind::Desiderata1 => {
            let r = bisim::check_desiderata1(&a, &b, x, y, &desiderata)?;
            (r.consistent(), r.to_json(), r.to_human())
        }
        CheckKind::Desiderata2 => {
            let r = bisim::check_desiderata2(&a, &b, x, y, &desiderata)?;
            (r.consistent(), r.to_json(), r.to_human())
        }
    };
    emit(config, &doc, || human)?;
    Ok(if ok { 0 } else { 1 })
}

fn transform(op: &Transform, config: &Config) -> Result<u8> {
    let out = match op {
        Transform::Instantiate { file, rho } => {
            let sys = load(file, config)?;
            sys.instantiate(&density(rho, sys.grade(), config)?)?
        }
        Transform::Peval { file, rho, systems } => {
            let sys = load(file, config)?;
            let registry = sys.context().registry();
            let covered = if systems.is_empty() { sys.grade().clone() } else { SystemCollection::new(&registry, systems.iter())? };
            sys.partial_eval(&density(rho, &covered, config)?)?
        }
        Transform::Compose { left, right, separator } => {
            let a = load(left, config)?;
            let b = load(right, config)?;
            a.parallel_with(&b, Default::default(), separator)?
        }
        Transform::Remap { file, rho, hom } => {
            let sys = load(file, config)?;
            match (rho, hom) {
                (Some(rho), _) => sys.remap_weights(&elts::distribution::EffectMorphism::born(density(rho, sys.grade(), config)?))?,
                (None, Some(hom)) => {
                    let table = sys
                        .context()
                        .table()
                        .ok_or_else(|| anyhow!("--hom needs a system over a finite table"))?
                        .clone();
                    let h = json::parse_finite_hom(&read(hom)?, &table)?;
                    sys.remap_weights(&elts::distribution::EffectMorphism::FiniteHom(h))?
                }
                (None, None) => bail!("remap needs --rho or --hom"),
            }
        }
    };
    let text = json::emit_elts(&out);
    let doc: Value = serde_json::from_str(&text)?;
    emit(config, &doc, || out.to_string())?;
    Ok(0)
}

fn run_laws(scope: Scope, table: Option<&Path>, corrupt_sort: bool, config: &Config) -> Result<u8> {
    let table = match table {
        None => None,
        Some(path) => match json::parse_table(&read(path)?) {
            Ok(t) => Some(t),
            Err(e @ Error::Axiom { .. }) => {
                let doc = json!({ "passed": false, "error": e.to_string() });
                emit(config, &doc, || format!("FAIL table: {e}\n"))?;
                return Ok(1);
            }
            Err(e) => return Err(e.into()),
        },
    };
    let cfg = LawConfig {
        seed: config.seed,
        samples: config.samples.unwrap_or(500),
        tol: config.tol.unwrap_or(quantum::DEFAULT_TOL),
        table,
        corrupt_sort,
    };
    let scope = match scope {
        Scope::Algebra => LawScope::Algebra,
        Scope::Monad => LawScope::Monad,
        Scope::Quantum => LawScope::Quantum,
        Scope::All => LawScope::All,
    };
    let report = laws::run_laws(scope, &cfg)?;
    emit(config, &report.to_json(), || report.to_human())?;
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn distinguish(path: &Path, config: &Config) -> Result<u8> {
    let (systems, effects) = json::parse_effect_set(&read(path)?)?;
    let tol = config.tol.unwrap_or(quantum::DEFAULT_TOL);
    let found = quantum::distinguishing_density(
        &effects,
        &systems,
        config.seed,
        quantum::DEFAULT_MAX_ATTEMPTS,
        quantum::DEFAULT_SEP_TOL,
        tol,
    )?;
    let mut gaps = Vec::new();
    for i in 0..found.traces.len() {
        for j in i + 1..found.traces.len() {
            gaps.push(json!({ "pair": [i, j], "gap": (found.traces[i] - found.traces[j]).abs() }));
        }
    }
    let doc = json!({
        "density": json::density_to_json(&found.rho),
        "seed": found.seed,
        "attempts": found.attempts,
        "traces": found.traces,
        "min_gap": if found.min_gap.is_finite() { json!(found.min_gap) } else { Value::Null },
        "gaps": gaps,
    });
    emit(config, &doc, || {
        let mut s = format!("distinguishing density after {} attempt(s), seed {}\n", found.attempts, found.seed);
        for (i, t) in found.traces.iter().enumerate() {
            s += &format!("  effect {i}: tr = {t:.12}\n");
        }
        s
    })?;
    Ok(0)
}

fn validate(path: &Path, config: &Config) -> Result<u8> {
    match json::parse_elts(&read(path)?) {
        Ok(sys) => {
            let doc = json!({
                "valid": true,
                "states": sys.states().len(),
                "transitions": sys.transition_count(),
                "algebra": sys.context().kind_name(),
                "grade": sys.grade().to_vec(),
            });
            emit(config, &doc, || format!("{} is valid\n", path.display()))?;
            Ok(0)
        }
        Err(Error::Validation(lines)) => {
            let doc = json!({ "valid": false, "violations": lines });
            emit(config, &doc, || {
                lines.iter().fold(format!("{} is invalid:\n", path.display()), |s, l| s + "  " + l + "\n")
            })?;
            Ok(1)
        }
        Err(e) => Err(anyhow::Error::from(e).context(path.display().to_string())),
    }
}

fn run(cli: Cli) -> Result<u8> {
    let config = &cli.config;
    match &cli.command {
        Command::Check { kind, file, x, rest } => check(*kind, file, x, rest, config),
        Command::Transform { op } => transform(op, config),
        Command::Laws {
            scope,
            table,
            corrupt_sort,
        } => run_laws(*scope, table.as_deref(), *corrupt_sort, config),
        Command::Distinguish { effects } => distinguish(effects, config),
        Command::Validate { file } => validate(file, config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
