//! The `guardedsat` command line. `run` takes the argument vector and the
//! output streams and returns the process exit code:
//! 0 success / SAT / true, 1 UNSAT / false, 2 usage or input error,
//! 3 budget exhausted.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use guardedsat::decision::DecisionError;
use guardedsat::model_builder::shrink_model;
use guardedsat::reductions::{
    atm_oracle, encode_atm_gf1_const, encode_atm_tgf1eq, encode_grid_tgf1_const,
    encode_tiling_ufgf1, parse_atm, parse_tiling, tiling_oracle, AtmVerdict, ReductionError,
};
use guardedsat::structures::{parse_structure, render_structure};
use guardedsat::syntax::render_file;
use guardedsat::{
    classify, decide, models, parse_formula, to_normal_form, Dialect, Engine, Formula, Options,
    SatStatus, Signature, SizeLimit,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

const ORACLE_STEPS: u64 = 10_000_000;

#[derive(Parser, Debug)]
#[command(
    name = "guardedsat",
    version,
    about = "Satisfiability for the one-dimensional guarded fragments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report fragment membership of a formula file.
    Classify { file: PathBuf },
    /// Print normal form candidates.
    Normalize {
        file: PathBuf,
        /// Print every candidate.
        #[arg(long, conflicts_with = "first")]
        all: bool,
        /// Print only the first candidate (default).
        #[arg(long)]
        first: bool,
        /// Fragment to normalize for; defaults to the narrowest one that fits.
        #[arg(long)]
        dialect: Option<Dialect>,
    },
    /// Decide satisfiability.
    Sat {
        file: PathBuf,
        #[arg(long)]
        dialect: Option<Dialect>,
        #[arg(long, default_value = "bounded")]
        engine: Engine,
        /// Largest model size to search, or `bound` for the small-model bound.
        #[arg(long, default_value = "4")]
        max_size: SizeLimit,
        #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        budget_nodes: u64,
        /// Where to write the model on SAT.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Model-check a structure against a formula.
    Check {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        structure: PathBuf,
    },
    /// Shrink a model to the size the small-model construction guarantees.
    Shrink {
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        dialect: Option<Dialect>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Emit a hardness encoding as a formula file.
    Encode {
        kind: EncodingKind,
        #[arg(long)]
        spec: PathBuf,
        /// Bit width (tilings only; machines use their input length).
        #[arg(short = 'n', value_parser = clap::value_parser!(u64).range(1..=8))]
        n: Option<u64>,
        #[arg(short = 'o', long)]
        output: PathBuf,
    },
    /// Run a tiling or machine oracle.
    Oracle {
        kind: OracleKind,
        #[arg(long)]
        spec: PathBuf,
        /// Torus side (tilings only).
        #[arg(short = 'm', value_parser = clap::value_parser!(u64).range(1..=64))]
        m: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EncodingKind {
    Atm,
    AtmConst,
    Tiling,
    Tiling2exp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleKind {
    Tiling,
    Atm,
}

/// A failure with its exit code and one-line diagnostic.
struct Failure(i32, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn load_formula(path: &Path) -> Result<(Signature, Formula), Failure> {
    parse_formula(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// The narrowest dialect containing `f`.
fn infer_dialect(f: &Formula) -> Result<Dialect, Failure> {
    let r = classify(f);
    if r.in_gf1 {
        Ok(Dialect::Gf1)
    } else if r.in_tgf1 {
        Ok(if r.uses_equality {
            Dialect::Tgf1
        } else {
            Dialect::Tgf1NoEq
        })
    } else if r.in_lgf1 {
        Ok(Dialect::Lgf1)
    } else {
        Err(usage(format!(
            "formula is in none of gf1, tgf1, lgf1 ({})",
            r.first_violation.map(|v| v.to_string()).unwrap_or_default()
        )))
    }
}

fn decision_failure(e: DecisionError) -> Failure {
    match e {
        DecisionError::GroundingCeiling { .. } | DecisionError::AtomCeiling { .. } => {
            Failure(EXIT_BUDGET, e.to_string())
        }
        _ => usage(e.to_string()),
    }
}

fn reduction_failure(e: ReductionError) -> Failure {
    match e {
        ReductionError::Ceiling(_) => Failure(EXIT_BUDGET, e.to_string()),
        _ => usage(e.to_string()),
    }
}

/// Runs one command. Reports go to `out`, diagnostics to `err`.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut report = String::new();
    let code = match execute(cli.command, &mut report) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    };
    let _ = out.write_all(report.as_bytes());
    code
}

fn line(report: &mut String, key: &str, value: impl std::fmt::Display) {
    report.push_str(&format!("{key}: {value}\n"));
}

fn execute(cmd: Command, r: &mut String) -> Result<i32, Failure> {
    match cmd {
        Command::Classify { file } => {
            let (_, f) = load_formula(&file)?;
            r.push_str(&classify(&f).to_report());
            Ok(EXIT_OK)
        }
        Command::Normalize {
            file, all, dialect, ..
        } => {
            let (sig, f) = load_formula(&file)?;
            let dialect = match dialect {
                Some(d) => d,
                None => infer_dialect(&f)?,
            };
            let candidates = to_normal_form(&f, &sig, dialect).map_err(|e| usage(e.to_string()))?;
            line(r, "dialect", dialect);
            line(r, "candidates", candidates.len());
            for (i, (nf, trace)) in candidates.enumerate() {
                r.push('\n');
                line(r, "candidate", i);
                for (g, value) in &trace.guesses {
                    line(
                        r,
                        "guess",
                        format!("{} = {value}", guardedsat::render_formula(g)),
                    );
                }
                line(r, "size", nf.size_n);
                r.push_str(&render_file(&nf.signature, &nf.to_formula()));
                r.push('\n');
                if !all {
                    break;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Sat {
            file,
            dialect,
            engine,
            max_size,
            budget_nodes,
            output,
        } => {
            let (sig, f) = load_formula(&file)?;
            let dialect = match dialect {
                Some(d) => d,
                None => infer_dialect(&f)?,
            };
            let opts = Options {
                max_size,
                budget_nodes,
                ..Options::default()
            };
            let start = Instant::now();
            line(r, "dialect", dialect);
            line(r, "engine", engine);
            line(
                r,
                "max-size",
                match max_size {
                    SizeLimit::Fixed(n) => n.to_string(),
                    SizeLimit::Bound => "bound".into(),
                },
            );
            line(r, "budget-nodes", budget_nodes);
            let v = decide(&f, &sig, dialect, engine, &opts).map_err(decision_failure)?;
            line(r, "status", v.status.label());
            match &v.status {
                SatStatus::UnsatUpTo(n) => line(r, "searched-up-to", n),
                SatStatus::Unknown(why) => line(r, "reason", why),
                _ => {}
            }
            if let Some(b) = v.bound {
                line(r, "bound", b);
            }
            line(r, "nodes", v.stats.nodes);
            line(r, "candidates", v.stats.candidates);
            line(r, "elapsed-ms", start.elapsed().as_millis());
            Ok(match &v.status {
                SatStatus::Sat(m) => {
                    line(r, "model-size", m.size());
                    let text = render_structure(m);
                    match output {
                        Some(path) => {
                            write(&path, &text)?;
                            line(r, "certificate", path.display());
                        }
                        None => r.push_str(&text),
                    }
                    EXIT_OK
                }
                SatStatus::Unsat | SatStatus::UnsatUpTo(_) => EXIT_FALSE,
                SatStatus::Unknown(_) => EXIT_BUDGET,
            })
        }
        Command::Check { formula, structure } => {
            let (sig, f) = load_formula(&formula)?;
            let s = parse_structure(&read(&structure)?, Some(&sig))
                .map_err(|e| usage(format!("{}: {e}", structure.display())))?;
            let ok = models(&s, &f).map_err(|e| usage(e.to_string()))?;
            line(r, "size", s.size());
            line(r, "model", ok);
            Ok(if ok { EXIT_OK } else { EXIT_FALSE })
        }
        Command::Shrink {
            formula,
            structure,
            dialect,
            output,
        } => {
            let (sig, f) = load_formula(&formula)?;
            let dialect = match dialect {
                Some(d) => d,
                None => infer_dialect(&f)?,
            };
            let s = parse_structure(&read(&structure)?, Some(&sig))
                .map_err(|e| usage(format!("{}: {e}", structure.display())))?;
            if !models(&s, &f).map_err(|e| usage(e.to_string()))? {
                line(r, "model", false);
                return Ok(EXIT_FALSE);
            }
            let candidates = to_normal_form(&f, &sig, dialect).map_err(|e| usage(e.to_string()))?;
            for (nf, _) in candidates {
                let expanded = nf.expand(&s).map_err(|e| usage(e.to_string()))?;
                if !models(&expanded, &nf.to_formula()).map_err(|e| usage(e.to_string()))? {
                    continue;
                }
                let outcome =
                    shrink_model(&expanded, &nf, dialect).map_err(|e| usage(e.to_string()))?;
                let small = outcome.structure.reduct(&sig);
                let verified =
                    outcome.verified && models(&small, &f).map_err(|e| usage(e.to_string()))?;
                write(&output, &render_structure(&small))?;
                line(r, "dialect", dialect);
                line(r, "input-size", s.size());
                line(r, "output-size", small.size());
                line(r, "bound", outcome.bound);
                line(r, "within-bound", outcome.within_bound());
                line(r, "doubled", outcome.plan.doubled);
                line(r, "kings", outcome.plan.kings.len());
                line(r, "copies", outcome.plan.copies);
                line(r, "verified", verified);
                line(r, "output", output.display());
                return Ok(if verified { EXIT_OK } else { EXIT_FALSE });
            }
            Err(usage("no normal form candidate matches the structure"))
        }
        Command::Encode {
            kind,
            spec,
            n,
            output,
        } => {
            let text = read(&spec)?;
            let width = || {
                n.map(|n| n as usize)
                    .ok_or_else(|| usage("tiling encodings need -n"))
            };
            let (sig, f) = match kind {
                EncodingKind::Atm | EncodingKind::AtmConst => {
                    let m = parse_atm(&text).map_err(reduction_failure)?;
                    if n.is_some_and(|n| n as usize != m.width()) {
                        return Err(usage(format!(
                            "machines use n = max(1, input length) = {}",
                            m.width()
                        )));
                    }
                    if matches!(kind, EncodingKind::Atm) {
                        encode_atm_tgf1eq(&m)
                    } else {
                        encode_atm_gf1_const(&m)
                    }
                    .map_err(reduction_failure)?
                }
                EncodingKind::Tiling | EncodingKind::Tiling2exp => {
                    let t = parse_tiling(&text).map_err(reduction_failure)?;
                    if matches!(kind, EncodingKind::Tiling) {
                        encode_tiling_ufgf1(&t, width()?)
                    } else {
                        encode_grid_tgf1_const(&t, width()?)
                    }
                    .map_err(reduction_failure)?
                }
            };
            write(&output, &render_file(&sig, &f))?;
            let c = classify(&f);
            line(
                r,
                "encoding",
                kind.to_possible_value()
                    .expect("no skipped variants")
                    .get_name(),
            );
            line(r, "relations", sig.relations.len());
            line(r, "max-arity", sig.max_arity());
            line(r, "in_gf1", c.in_gf1);
            line(r, "in_tgf1", c.in_tgf1);
            line(r, "uses_equality", c.uses_equality);
            line(r, "uses_constants", c.uses_constants);
            line(r, "uniform_sentence_shape", c.uniform_sentence_shape);
            line(r, "output", output.display());
            Ok(EXIT_OK)
        }
        Command::Oracle { kind, spec, m } => {
            let text = read(&spec)?;
            match kind {
                OracleKind::Tiling => {
                    let t = parse_tiling(&text).map_err(reduction_failure)?;
                    let m = m.ok_or_else(|| usage("the tiling oracle needs -m"))? as usize;
                    let result = tiling_oracle(&t, m, ORACLE_STEPS).map_err(reduction_failure)?;
                    line(r, "side", m);
                    line(r, "tiles", result.is_some());
                    if let Some(f) = &result {
                        for q in (0..m).rev() {
                            let row: Vec<&str> =
                                (0..m).map(|p| t.colors[f[p][q]].as_str()).collect();
                            line(r, "row", row.join(" "));
                        }
                    }
                    Ok(if result.is_some() {
                        EXIT_OK
                    } else {
                        EXIT_FALSE
                    })
                }
                OracleKind::Atm => {
                    let machine = parse_atm(&text).map_err(reduction_failure)?;
                    let v = atm_oracle(&machine, ORACLE_STEPS).map_err(reduction_failure)?;
                    line(r, "tape-cells", 1usize << machine.width());
                    line(
                        r,
                        "verdict",
                        match v {
                            AtmVerdict::Accepts => "accepts",
                            AtmVerdict::Rejects => "rejects",
                        },
                    );
                    Ok(if v == AtmVerdict::Accepts {
                        EXIT_OK
                    } else {
                        EXIT_FALSE
                    })
                }
            }
        }
    }
}
