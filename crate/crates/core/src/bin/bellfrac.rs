//! `bellfrac`: local and non-signaling fractions from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 cross-check mismatch between computation routes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use bellfrac::document::{behavior_from_text, BehaviorDocument};
use bellfrac::enumeration;
use bellfrac::lp;
use bellfrac::measures::{self, SetKind};
use bellfrac::rational::{format_decimal, format_rational};
use bellfrac::sampler::{self, SampleConfig, DEFAULT_GAP, DEFAULT_SEED};
use bellfrac::verify::{self, VerifyOptions};
use bellfrac::{Behavior, Target};

const EXIT_VERIFY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "bellfrac",
    version,
    about = "Local and non-signaling fractions of CHSH-scenario behaviors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Local,
    Ns,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Local => Target::Local,
            TargetArg::Ns => Target::NonSignaling,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SetArg {
    Q,
    S,
    Both,
}

impl SetArg {
    fn kinds(self) -> Vec<SetKind> {
        match self {
            SetArg::Q => vec![SetKind::Q],
            SetArg::S => vec![SetKind::S],
            SetArg::Both => vec![SetKind::Q, SetKind::S],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Closed,
    Lp,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VectorSource {
    Shipped,
    Orbits,
    Enumeration,
}

#[derive(clap::Args)]
struct Input {
    /// Behavior file: JSON document, or CSV with one line of 16 values.
    file: PathBuf,
    /// Rescale blocks whose sums are within this distance of 1.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Local or non-signaling fraction of a behavior.
    Fraction {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "local")]
        target: TargetArg,
        /// `closed` minimizes over the vector set, `lp` solves the primal,
        /// `both` runs the two and requires them to agree.
        #[arg(long, value_enum, default_value = "closed")]
        method: Method,
        #[arg(long)]
        json: bool,
    },
    /// Optimal split `P = p·inner + (1−p)·outer` as behavior documents.
    Decompose {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "local")]
        target: TargetArg,
    },
    /// Export a measure-vector set in the data-file format.
    Vectors {
        #[arg(long, value_enum, default_value = "q")]
        set: SetArg,
        #[arg(long, value_enum, default_value = "shipped")]
        source: VectorSource,
    },
    /// Enumerate the dual polyhedron and compare with the shipped set.
    Enumerate {
        #[arg(long, value_enum, default_value = "local")]
        target: TargetArg,
        /// Write the raw vertices and rays to this file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Prevalence of minimizing classes on random behaviors.
    Sample {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, env = "BELLFRAC_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_GAP)]
        gap: f64,
        #[arg(long, value_enum, default_value = "both")]
        set: SetArg,
        /// Also tabulate class changes between ℚ and 𝕊.
        #[arg(long)]
        migration: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Check the non-redundancy witness of every vector.
    Witnesses {
        #[arg(long, value_enum, default_value = "both")]
        set: SetArg,
        /// Print each witness behavior as a CSV line.
        #[arg(long)]
        behaviors: bool,
    },
    /// Run the self-check suite.
    Verify {
        /// Skip the sampling check.
        #[arg(long)]
        quick: bool,
        /// Check this ℚ file instead of the shipped one.
        #[arg(long)]
        q_file: Option<PathBuf>,
        /// Check this 𝕊 file instead of the shipped one.
        #[arg(long)]
        s_file: Option<PathBuf>,
        #[arg(long, env = "BELLFRAC_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

fn load_behavior(input: &Input) -> Result<(Behavior, Option<String>), Failure> {
    let text = read_file(&input.file)?;
    let is_csv = input
        .file
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    behavior_from_text(&text, is_csv, input.tolerance)
        .map_err(|e| input_error(format!("{}: {e}", input.file.display())))
}

fn cmd_fraction(
    input: &Input,
    target: Target,
    method: Method,
    as_json: bool,
) -> Result<(), Failure> {
    let (behavior, label) = load_behavior(input)?;
    let closed = (method != Method::Lp).then(|| measures::fraction(&behavior, target));
    let primal = (method != Method::Closed).then(|| lp::solve_primal(&behavior, target));
    if let (Some(c), Some(p)) = (&closed, &primal) {
        if c.value != p.p_star {
            return Err(Failure {
                code: EXIT_MISMATCH,
                message: format!(
                    "route mismatch: closed form {} but LP {}",
                    format_rational(&c.value),
                    format_rational(&p.p_star)
                ),
            });
        }
    }
    let value = closed
        .as_ref()
        .map(|c| c.value.clone())
        .or_else(|| primal.as_ref().map(|p| p.p_star.clone()));
    let value = value.expect("at least one route ran");
    let set = measures::solution_set(target.solution_set());
    let minimizers: Vec<serde_json::Value> = closed
        .iter()
        .flat_map(|c| &c.minimizers)
        .filter_map(|&id| set.by_id(id))
        .map(|v| json!({"id": v.id, "class": v.class.tag()}))
        .collect();
    if as_json {
        let report = json!({
            "label": label,
            "target": target.name(),
            "method": match method { Method::Closed => "closed", Method::Lp => "lp", Method::Both => "both" },
            "value": format_rational(&value),
            "decimal": format_decimal(&value, 12),
            "minimizers": minimizers,
            "unique": closed.as_ref().map(|c| c.unique),
            "classification": behavior.classify().to_string(),
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
        return Ok(());
    }
    if let Some(l) = label {
        println!("label: {l}");
    }
    println!("target: {}", target.name());
    println!("value: {}", format_rational(&value));
    println!("decimal: {}", format_decimal(&value, 12));
    if let Some(c) = &closed {
        let ids: Vec<String> = c
            .minimizers
            .iter()
            .filter_map(|&id| set.by_id(id))
            .map(|v| v.label())
            .collect();
        println!("minimizers: {}", ids.join(" "));
        println!("unique: {}", c.unique);
    }
    if let Some(p) = &primal {
        println!("lp pivots: {}", p.pivots);
    }
    if method == Method::Both {
        println!("routes agree: yes");
    }
    println!("classification: {}", behavior.classify());
    Ok(())
}

fn cmd_decompose(input: &Input, target: Target) -> Result<(), Failure> {
    let (behavior, label) = load_behavior(input)?;
    let d = lp::decompose(&behavior, target);
    if d.recombine() != *behavior.entries() {
        return Err(Failure {
            code: EXIT_MISMATCH,
            message: "decomposition does not recombine to the input".into(),
        });
    }
    let part = |b: &Option<Behavior>, name: &str| {
        b.as_ref().map(|b| {
            BehaviorDocument::from_behavior(
                b,
                Some(format!("{} {name}", label.as_deref().unwrap_or("input"))),
            )
            .to_json_value()
        })
    };
    let report = json!({
        "target": target.name(),
        "p": format_rational(&d.p),
        "inner": part(&d.inner, "inner"),
        "outer": part(&d.outer, "outer"),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

fn cmd_vectors(set: SetArg, source: VectorSource) -> Result<(), Failure> {
    for kind in set.kinds() {
        let text = match source {
            VectorSource::Shipped => measures::solution_set(kind).to_text(),
            VectorSource::Orbits => measures::generate_from_orbits(kind).to_text(),
            VectorSource::Enumeration => {
                let derived = enumeration::derive_set(kind).map_err(|e| Failure {
                    code: EXIT_MISMATCH,
                    message: e.to_string(),
                })?;
                let labelled = measures::solution_set(kind);
                let mut out = String::new();
                for c in &derived {
                    let digits: Vec<String> = c.iter().map(|d| d.to_string()).collect();
                    match labelled.find(c) {
                        Some(v) => out.push_str(&format!(
                            "{} {} {}\n",
                            digits.join(" "),
                            v.class,
                            v.orbit.tag()
                        )),
                        None => out.push_str(&format!("{} ? ?\n", digits.join(" "))),
                    }
                }
                out
            }
        };
        print!("{text}");
    }
    Ok(())
}

fn cmd_enumerate(target: Target, export: Option<&Path>) -> Result<(), Failure> {
    let start = std::time::Instant::now();
    let v = enumeration::dual_vertices(target);
    println!("target: {}", target.name());
    println!("vertices: {}", v.vertices.len());
    println!("rays: {}", v.rays.len());
    println!("time: {:.3}s", start.elapsed().as_secs_f64());
    if let Some(path) = export {
        std::fs::write(path, v.to_text())
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
        println!("exported: {}", path.display());
    }
    let kind = target.solution_set();
    match enumeration::check_derivation(kind, measures::solution_set(kind)) {
        Ok(()) => {
            println!(
                "derived set: {} vectors, equal to {kind}",
                kind.expected_len()
            );
            Ok(())
        }
        Err(e) => Err(Failure {
            code: EXIT_MISMATCH,
            message: e.to_string(),
        }),
    }
}

fn cmd_sample(
    cfg: SampleConfig,
    set: SetArg,
    migration: bool,
    format: Format,
) -> Result<(), Failure> {
    let study = sampler::study(&cfg).map_err(|e| input_error(e.to_string()))?;
    let reports: Vec<&sampler::PrevalenceReport> = set
        .kinds()
        .into_iter()
        .map(|k| {
            if k == SetKind::Q {
                &study.local
            } else {
                &study.nonsignaling
            }
        })
        .collect();
    match format {
        Format::Json => {
            let mut out =
                json!({"prevalence": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>()});
            if migration {
                out["migration"] = study.migration.to_json();
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("report serializes")
            );
        }
        Format::Csv => {
            for r in &reports {
                println!("# set {} n {} seed {}", r.kind, r.n, r.seed);
                print!("{}", r.to_csv());
            }
            if migration {
                println!("# migration");
                print!("{}", study.migration.to_csv());
            }
        }
        Format::Table => {
            println!("generator: {}", sampler::GENERATOR);
            println!(
                "n: {}  seed: {}  gap: {:e}",
                cfg.n, cfg.seed, cfg.uniqueness_gap
            );
            for r in &reports {
                println!();
                println!("set {}", r.kind);
                for (&class, &count) in &r.counts {
                    let reference = verify::reference_shares(r.kind)
                        .iter()
                        .find(|(c, _)| *c == class)
                        .map(|(_, p)| *p);
                    let reference =
                        reference.map_or_else(String::new, |p| format!("  (reference {p:.2}%)"));
                    println!(
                        "  {class}  {count:>8}  {:>7.3}%{reference}",
                        r.percentage(class)
                    );
                }
                println!("  ties  {:>6}", r.ties);
            }
            if migration {
                println!();
                println!("migration Q -> S");
                for ((from, to), count) in &study.migration.transitions {
                    println!("  {from} -> {to}  {count}");
                }
                println!("  unchanged  {}", study.migration.unchanged);
            }
        }
    }
    Ok(())
}

fn cmd_witnesses(set: SetArg, behaviors: bool) -> Result<(), Failure> {
    let mut failed = 0;
    let mut total = 0;
    for kind in set.kinds() {
        let outcomes = sampler::witness_suite(kind).map_err(|e| Failure {
            code: EXIT_VERIFY,
            message: e.to_string(),
        })?;
        let vectors = measures::solution_set(kind);
        for o in &outcomes {
            total += 1;
            let status = if o.passes() { "ok" } else { "FAIL" };
            if !o.passes() {
                failed += 1;
            }
            if behaviors {
                let v = vectors.by_id(o.id).expect("witness id");
                let w = sampler::witness(v).expect("witness exists");
                println!(
                    "{kind},{},{},{}",
                    o.id,
                    o.class,
                    bellfrac::document::to_csv_line(&w)
                );
            } else {
                println!(
                    "{kind} {}#{} value {} {status}",
                    o.class,
                    o.id,
                    format_rational(&o.value)
                );
            }
        }
    }
    if !behaviors {
        println!(
            "{} of {total} witnesses certify a unique zero",
            total - failed
        );
    }
    if failed > 0 {
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("{failed} witness checks failed"),
        })
    } else {
        Ok(())
    }
}

fn cmd_verify(
    quick: bool,
    q_file: Option<&Path>,
    s_file: Option<&Path>,
    seed: u64,
) -> Result<(), Failure> {
    let q_text = q_file.map(read_file).transpose()?;
    let s_text = s_file.map(read_file).transpose()?;
    let opts = VerifyOptions {
        quick,
        q_text,
        s_text,
        seed,
        ..VerifyOptions::default()
    };
    let results = verify::run(&opts);
    print!("{}", verify::render_table(&results));
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        println!("all {} checks passed", results.len());
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("failed checks: {}", failed.join(", ")),
        })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fraction {
            input,
            target,
            method,
            json,
        } => cmd_fraction(&input, target.into(), method, json),
        Command::Decompose { input, target } => cmd_decompose(&input, target.into()),
        Command::Vectors { set, source } => cmd_vectors(set, source),
        Command::Enumerate { target, export } => cmd_enumerate(target.into(), export.as_deref()),
        Command::Sample {
            n,
            seed,
            gap,
            set,
            migration,
            format,
        } => {
            let cfg = SampleConfig {
                n,
                seed,
                uniqueness_gap: gap,
            }
            .checked()
            .map_err(|e| input_error(e.to_string()))?;
            cmd_sample(cfg, set, migration, format)
        }
        Command::Witnesses { set, behaviors } => cmd_witnesses(set, behaviors),
        Command::Verify {
            quick,
            q_file,
            s_file,
            seed,
        } => cmd_verify(quick, q_file.as_deref(), s_file.as_deref(), seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
