use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use quantrans::annotate::annotate;
use quantrans::infoflow::{leak, LeakEntry};
use quantrans::oracle::{self, EscapePolicy, Relation};
use quantrans::parser::{parse_domain, parse_domain_for, parse_program, parse_quantity, parse_triple_file, ParseError};
use quantrans::proofs::{check_galois, check_induction, check_one_shot, check_triple, Galois, Triple, Verdict};
use quantrans::props::{self, PropsConfig, PropsReport};
use quantrans::syntax::{DomainSpec, Program, Quantity, Var};
use quantrans::transformers::{transform, AnalysisResult, Mode, Status, TransformConfig};

const OK: u8 = 0;
const USAGE: u8 = 1;
const UNKNOWN: u8 = 2;
const FAILS: u8 = 3;

/// Quantitative wp, wlp, sp and slp for nondeterministic guarded commands.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// Comma-separated with a header row.
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a transformer to a program.
    Transform {
        program: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        quantity: String,
        /// Kleene iteration budget; defaults to the probe domain's fuel.
        #[arg(long)]
        fuel: Option<usize>,
        /// States used to detect convergence, e.g. "x=-8..8; fuel=64".
        #[arg(long)]
        probe_domain: Option<String>,
    },
    /// Print the program with the transformer's value at every point.
    Annotate {
        program: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        quantity: String,
        #[arg(long)]
        fuel: Option<usize>,
        #[arg(long)]
        probe_domain: Option<String>,
    },
    /// Compare a symbolic transform with the collecting semantics.
    Oracle {
        program: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        quantity: String,
        #[arg(long)]
        domain: String,
        #[arg(long, default_value = "error")]
        escape: String,
        /// Runs start from the domain grown by this much on every side and
        /// may move twice as far, so that values on the domain itself do
        /// not depend on its edge. 0 uses the domain alone.
        #[arg(long, default_value_t = 8)]
        margin: i64,
    },
    /// Check a triple file, a loop rule or a Galois connection.
    Check {
        /// `kind; pre; program-file; post`.
        triple: Option<PathBuf>,
        #[arg(long)]
        domain: String,
        /// Check the induction rule of this mode for the loop in --program.
        #[arg(long, conflicts_with_all = ["triple", "one_shot", "galois"])]
        induction: Option<String>,
        /// Check the one-step rule (sp or slp) for the loop in --program,
        /// starting from the prequantity -g.
        #[arg(long, conflicts_with_all = ["triple", "galois"])]
        one_shot: Option<String>,
        /// wlp-sp or wp-slp.
        #[arg(long, conflicts_with = "triple")]
        galois: Option<String>,
        #[arg(long)]
        program: Option<PathBuf>,
        /// The postquantity f.
        #[arg(short, long)]
        f: Option<String>,
        /// The prequantity g.
        #[arg(short, long)]
        g: Option<String>,
        #[arg(long)]
        invariant: Option<String>,
    },
    /// Run the property suites on generated programs.
    Props {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Instances per suite.
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Program variables, at most 3.
        #[arg(long, default_value_t = 3)]
        vars: usize,
        /// Branch nesting depth, at most 4.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Run only this suite.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Leak intervals of a secret given an observable.
    Leak {
        program: PathBuf,
        #[arg(long)]
        secret: String,
        #[arg(long)]
        observable: String,
        #[arg(long)]
        domain: String,
    },
}

/// An error that ends the run with exit code 1.
struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

fn parsed<T>(what: &str, source: &str, r: Result<T, ParseError>) -> Result<T, Fail> {
    r.map_err(|e| Fail(format!("in {what}:\n{}", e.render(source))))
}

fn program(path: &Path) -> Result<Program, Fail> {
    let text = read(path)?;
    parsed(&path.display().to_string(), &text, parse_program(&text))
}

fn quantity(text: &str) -> Result<Quantity, Fail> {
    parsed("quantity", text, parse_quantity(text))
}

fn mode(text: &str) -> Result<Mode, Fail> {
    text.parse::<Mode>().map_err(|e| Fail(e.to_string()))
}

fn domain(text: &str, required: &[Var]) -> Result<DomainSpec, Fail> {
    parsed("domain", text, parse_domain_for(text, required))
}

/// The given probe domain, or every free variable over -8..8.
fn probe(text: Option<&str>, c: &Program, f: &Quantity) -> Result<DomainSpec, Fail> {
    let mut vars = c.vars();
    vars.extend(f.free_vars());
    match text {
        Some(t) => domain(t, &vars.into_iter().collect::<Vec<_>>()),
        None => {
            let names: Vec<&str> = vars.iter().map(Var::as_str).collect();
            Ok(DomainSpec::uniform(&names, (-8, 8), DomainSpec::DEFAULT_ALPHA, DomainSpec::DEFAULT_FUEL))
        }
    }
}

fn status_code(s: Status) -> u8 {
    if s.is_truncated() {
        UNKNOWN
    } else {
        OK
    }
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Holds => OK,
        Verdict::Fails { .. } => FAILS,
        Verdict::Unknown(_) => UNKNOWN,
    }
}

fn csv(field: impl std::fmt::Display) -> String {
    let s = field.to_string();
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn status_fields(s: &Status) -> (String, String) {
    match s {
        Status::Exact => ("exact".into(), String::new()),
        Status::Converged { iterations } => ("converged".into(), iterations.to_string()),
        Status::Truncated { fuel, bound } => (format!("truncated_{bound}"), fuel.to_string()),
    }
}

fn run(cli: Cli) -> Result<u8, Fail> {
    let table = cli.format == Format::Table;
    match cli.command {
        Command::Transform { program: path, mode: m, quantity: q, fuel, probe_domain } => {
            let (c, f, m) = (program(&path)?, quantity(&q)?, mode(&m)?);
            let mut cfg = TransformConfig::new(probe(probe_domain.as_deref(), &c, &f)?);
            if let Some(n) = fuel {
                cfg = cfg.with_fuel(n);
            }
            let r: AnalysisResult = transform(m, &c, &f, &cfg)?;
            if table {
                let (status, n) = status_fields(&r.status);
                println!("mode,quantity,status,iterations\n{m},{},{status},{n}", csv(&r.quantity));
            } else {
                println!("{r}");
            }
            Ok(status_code(r.status))
        }
        Command::Annotate { program: path, mode: m, quantity: q, fuel, probe_domain } => {
            let (c, f, m) = (program(&path)?, quantity(&q)?, mode(&m)?);
            let mut cfg = TransformConfig::new(probe(probe_domain.as_deref(), &c, &f)?);
            if let Some(n) = fuel {
                cfg = cfg.with_fuel(n);
            }
            let listing = annotate(m, &c, &f, &cfg)?;
            println!("{listing}");
            Ok(status_code(listing.status))
        }
        Command::Oracle { program: path, mode: m, quantity: q, domain: d, escape, margin } => {
            if margin < 0 {
                return Err(Fail("--margin must not be negative".into()));
            }
            let (c, f, m) = (program(&path)?, quantity(&q)?, mode(&m)?);
            let mut vars: Vec<Var> = c.vars().into_iter().collect();
            vars.extend(f.free_vars());
            let dom = domain(&d, &vars)?;
            let policy: EscapePolicy = escape.parse().map_err(Fail)?;
            let r = transform(m, &c, &f, &TransformConfig::new(dom.clone()))?;
            let rel = Relation::from_initial(&c, dom.widened(margin).states(), &dom.widened(2 * margin), policy)?;
            if r.status.is_truncated() {
                // Only the bound direction can be checked.
                let mut worst = None;
                for s in dom.states() {
                    let (sym, reference) = (r.quantity.eval(&s, &dom)?, rel.reference(m, &f, &s)?);
                    let ok = if m.is_liberal() { sym >= reference } else { sym <= reference };
                    if !ok {
                        worst = Some(oracle::Mismatch { state: s, symbolic: sym, reference });
                        break;
                    }
                }
                return Ok(match worst {
                    None => {
                        println!("unknown: {}; the bound holds on {} states", r.status, dom.size());
                        UNKNOWN
                    }
                    Some(mm) => {
                        println!("fail: {}; bound violated {mm}", r.status);
                        FAILS
                    }
                });
            }
            match oracle::compare(&rel, m, &f, &r.quantity, dom.states())? {
                None => {
                    println!("pass: {m} equals the reference on {} states", dom.size());
                    Ok(OK)
                }
                Some(mm) => {
                    println!("fail: {mm}");
                    Ok(FAILS)
                }
            }
        }
        Command::Check { triple, domain: d, induction, one_shot, galois, program: path, f, g, invariant } => {
            let need = |name: &str, v: &Option<String>| -> Result<Quantity, Fail> {
                quantity(v.as_deref().ok_or_else(|| Fail(format!("--{name} is required")))?)
            };
            let load_program = |p: &Option<PathBuf>| -> Result<Program, Fail> {
                program(p.as_deref().ok_or_else(|| Fail("--program is required".into()))?)
            };
            if let Some(path) = triple {
                let text = read(&path)?;
                let tf = parsed(&path.display().to_string(), &text, parse_triple_file(&text))?;
                let base = path.parent().unwrap_or(Path::new("."));
                let c = program(&base.join(&tf.program_path))?;
                let t = Triple { kind: tf.kind, pre: tf.pre, program: c, post: tf.post };
                let dom = parsed("domain", &d, parse_domain(&d))?;
                let r = check_triple(&t, &dom);
                println!("{} triple", t.kind);
                for fm in &r.formulations {
                    println!("  {}: {}", fm.statement, fm.verdict);
                }
                println!("{}", r.verdict);
                return Ok(verdict_code(&r.verdict));
            }
            let dom = parsed("domain", &d, parse_domain(&d))?;
            if let Some(m) = induction {
                let (m, lp) = (mode(&m)?, load_program(&path)?);
                let (f, g, i) = (need("f", &f)?, need("g", &g)?, need("invariant", &invariant)?);
                let r = check_induction(m, &lp, &f, &g, &i, &dom);
                println!("{} induction", r.rule);
                for p in &r.premises {
                    println!("  {p}");
                }
                if r.verdict.holds() {
                    println!("  therefore {}", r.conclusion);
                }
                println!("{}", r.verdict);
                return Ok(verdict_code(&r.verdict));
            }
            if let Some(m) = one_shot {
                let (m, lp) = (mode(&m)?, load_program(&path)?);
                let q = need("g", &g)?;
                return Ok(match check_one_shot(m, &lp, &q, &dom) {
                    Ok(r) if r.applies => {
                        println!("applies: {m}[loop]({q}) = {}", r.result);
                        OK
                    }
                    Ok(_) => {
                        println!("does not apply");
                        FAILS
                    }
                    Err(v) => {
                        println!("{v}");
                        verdict_code(&v)
                    }
                });
            }
            if let Some(which) = galois {
                let which = match which.as_str() {
                    "wlp-sp" => Galois::WlpSp,
                    "wp-slp" => Galois::WpSlp,
                    other => return Err(Fail(format!("unknown Galois connection `{other}`; use wlp-sp or wp-slp"))),
                };
                let c = load_program(&path)?;
                let r = check_galois(which, &c, &need("f", &f)?, &need("g", &g)?, &dom);
                println!("  left: {}\n  right: {}", r.left, r.right);
                println!("{}", r.verdict);
                return Ok(verdict_code(&r.verdict));
            }
            Err(Fail("give a triple file or one of --induction, --one-shot, --galois".into()))
        }
        Command::Props { seed, count, vars, depth, suite } => {
            if !(1..=3).contains(&vars) || depth > 4 {
                return Err(Fail("--vars must be 1 to 3 and --depth at most 4".into()));
            }
            let cfg = PropsConfig { seed, count, max_vars: vars, depth };
            let report = match suite.as_deref() {
                None => props::run_all(&cfg),
                Some("soundness") => PropsReport { suites: vec![props::soundness(&cfg)] },
                Some("loop-soundness") => PropsReport { suites: vec![props::loop_soundness(&cfg)] },
                Some(name) => match props::THEOREMS.iter().find(|(n, _)| *n == name) {
                    Some((_, s)) => PropsReport { suites: vec![s(&cfg)] },
                    None => return Err(Fail(format!("unknown suite `{name}`"))),
                },
            };
            if table {
                print!("{}", report.table());
            } else {
                println!("{report}");
            }
            Ok(if report.falsified() == 0 { OK } else { FAILS })
        }
        Command::Leak { program: path, secret, observable, domain: d } => {
            let c = program(&path)?;
            let dom = parsed("domain", &d, parse_domain(&d))?;
            let (h, l) = (Var::new(secret.as_str())?, Var::new(observable.as_str())?);
            let r = leak(&c, &h, &l, &dom)?;
            if table {
                print!("{}", r.table());
            } else {
                println!("{r}");
            }
            let unknown = r.entries.values().any(|e| matches!(e, LeakEntry::Unknown { .. }));
            Ok(if unknown { UNKNOWN } else { OK })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(USAGE)
        }
    }
}
