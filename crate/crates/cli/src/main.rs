//! `latmin`: lattice-point counts, successive minima, volumes, the random
//! inequality suite and the reduction-ledger arithmetic, all as JSON.
//!
//! Every run prints exactly one JSON document on stdout. Successful runs print
//! `{"report": ..., "manifest": ...}`; failures print `{"error": {"kind", "message"}}`.
//!
//! Exit codes: 0 ok, 1 an inequality was violated, 2 usage, config or ledger
//! errors, 3 budget or numeric limits.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use latmin::enumeration::{effective_sections, strictly_effective_sections, EnumConfig, SectionSet};
use latmin::exact::{self, real, LogReal};
use latmin::inequality::{InequalityReport, Verdict};
use latmin::ledger::{self, ArithmeticContext, Ledger, LedgerMode, SimParams};
use latmin::minima::successive_minima;
use latmin::suite::{run_suite, SuiteConfig};
use latmin::volume::{euler_characteristic, DEFAULT_SAMPLES};
use latmin::{NormSpec, NormedModule, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "latmin", version, about = "Exact normed-lattice counting and effective-bound checks")]
struct Cli {
    /// Worker threads (defaults to all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count lattice vectors of norm ≤ 1 (or < 1 with --strict).
    Count {
        #[arg(long)]
        module: PathBuf,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        emit_vectors: bool,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Successive minima with witnesses.
    Minima {
        #[arg(long)]
        module: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// `χ = ln vol(B)`.
    Chi {
        #[arg(long)]
        module: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Randomised inequality suite.
    Verify(VerifyArgs),
    /// Reduction ledgers and closed-form bounds.
    #[command(subcommand)]
    Ledger(LedgerCommand),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "sec2")]
    suite: String,
    /// Suite configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_rank: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum LedgerCommand {
    /// Evaluate a closed-form bound and/or check a ledger.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = ["B", "C", "D", "E", "deg1", "trivial"])]
        theorem: Option<String>,
    },
    /// Constant absorption and Stirling sweeps over a (g, κ) grid.
    Sweep {
        #[arg(long, default_value_t = 1000)]
        g_max: u64,
        #[arg(long, default_value_t = 50)]
        kappa_max: u64,
        /// Stirling grid limits (default: 200 and 20, capped by the above).
        #[arg(long)]
        stirling_g_max: Option<u64>,
        #[arg(long)]
        stirling_kappa_max: Option<u64>,
    },
    /// Simulated reduction ledgers.
    Simulate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// A ledger mode, or `all`.
        #[arg(long, default_value = "all")]
        mode: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Simulation parameters; `mode` in the file is ignored.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// A failure with its exit code.
struct Failure {
    kind: String,
    message: String,
    code: u8,
}

impl From<latmin::Error> for Failure {
    fn from(e: latmin::Error) -> Self {
        Failure {
            kind: e.kind().to_string(),
            message: e.to_string(),
            code: if e.is_resource_limit() { 3 } else { 2 },
        }
    }
}

fn usage(kind: &str, message: impl Into<String>) -> Failure {
    Failure { kind: kind.to_string(), message: message.into(), code: 2 }
}

struct Outcome {
    subcommand: &'static str,
    config: Value,
    seed: Option<u64>,
    report: Value,
    violated: bool,
}

#[derive(Serialize)]
struct Document<'a> {
    report: &'a Value,
    manifest: Manifest<'a>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    subcommand: &'a str,
    config: &'a Value,
    seed: Option<u64>,
    result_digest: String,
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage("Io", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage("InvalidJson", format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(v: Value, what: &str) -> Result<T, Failure> {
    serde_json::from_value(v).map_err(|e| usage("InvalidConfig", format!("{what}: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleFile {
    rank: usize,
    norm: NormSpec,
}

fn load_module(path: &Path) -> Result<NormedModule, Failure> {
    let raw: ModuleFile = parse(read_json(path)?, "module")?;
    Ok(NormedModule::new(raw.rank, raw.norm)?)
}

fn enum_config(budget: Option<u64>) -> EnumConfig {
    budget.map_or_else(EnumConfig::from_env, EnumConfig::with_budget)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn count_report(s: &SectionSet, emit: bool) -> Value {
    let mut v = json!({
        "count": s.count,
        "log_count": real::format(s.log_count),
        "threshold_kind": s.threshold_kind,
        "span_rank": s.span_rank(),
    });
    if emit {
        v["vectors"] = to_value(&s.vectors);
    }
    v
}

fn run_count(module: &Path, strict: bool, emit: bool, budget: Option<u64>) -> Result<Outcome, Failure> {
    let m = load_module(module)?;
    let cfg = enum_config(budget);
    let s = if strict { strictly_effective_sections(&m, &cfg)? } else { effective_sections(&m, &cfg)? };
    Ok(Outcome {
        subcommand: "count",
        config: json!({"module": to_value(&m), "strict": strict, "emit_vectors": emit, "budget": cfg.budget}),
        seed: None,
        report: count_report(&s, emit),
        violated: false,
    })
}

fn run_minima(module: &Path, budget: Option<u64>) -> Result<Outcome, Failure> {
    let m = load_module(module)?;
    let cfg = enum_config(budget);
    let rep = successive_minima(&m, &cfg)?;
    let mut report = to_value(&rep);
    report["mu_sum"] = json!(real::format(rep.mu_sum().to_f64()));
    Ok(Outcome {
        subcommand: "minima",
        config: json!({"module": to_value(&m), "budget": cfg.budget}),
        seed: None,
        report,
        violated: false,
    })
}

fn run_chi(module: &Path, samples: u64, seed: u64) -> Result<Outcome, Failure> {
    let m = load_module(module)?;
    let rep = euler_characteristic(&m, samples, seed)?;
    Ok(Outcome {
        subcommand: "chi",
        config: json!({"module": to_value(&m), "samples": samples}),
        seed: Some(seed),
        report: to_value(&rep),
        violated: false,
    })
}

fn run_verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    if a.suite != "sec2" {
        return Err(usage("Usage", format!("unknown suite {:?}; available: sec2", a.suite)));
    }
    let mut config: SuiteConfig = match &a.config {
        Some(p) => parse(read_json(p)?, "suite config")?,
        None => SuiteConfig::default(),
    };
    if let Some(t) = a.trials {
        config.trials = t;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(r) = a.max_rank {
        config.rank_max = r;
        config.rank_min = config.rank_min.min(r);
    }
    if let Some(b) = a.budget {
        config.budget = b;
    }
    if let Some(s) = a.samples {
        config.samples = s;
    }
    let summary = run_suite(&config)?;
    Ok(Outcome {
        subcommand: "verify",
        config: json!({"suite": a.suite, "params": to_value(&config)}),
        seed: Some(config.seed),
        violated: summary.total_violations() > 0,
        report: to_value(&summary),
    })
}

/// Inputs for `ledger eval`; which fields are needed depends on the theorem.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct EvalConfig {
    g: Option<u64>,
    kappa: Option<u64>,
    d_circ: Option<u64>,
    eps: Option<u64>,
    r_minus: Option<u64>,
    #[serde(rename = "deg_LQ")]
    deg_lq: Option<u64>,
    #[serde(rename = "L2", with = "exact::serde_rational::option")]
    l2: Option<Rational>,
    #[serde(with = "exact::serde_rational::option")]
    omega2: Option<Rational>,
    #[serde(rename = "absD", with = "exact::serde_rational::option")]
    abs_d: Option<Rational>,
    r1: Option<u64>,
    r2: Option<u64>,
    #[serde(with = "exact::serde_rational::option")]
    delta: Option<Rational>,
    #[serde(with = "exact::serde_rational::option")]
    gamma: Option<Rational>,
    ledger: Option<Ledger>,
}

fn need<T: Clone>(x: &Option<T>, name: &str, theorem: &str) -> Result<T, Failure> {
    x.clone()
        .ok_or_else(|| usage("InvalidConfig", format!("theorem {theorem} needs field {name:?}")))
}

fn bound_value(b: LogReal) -> Value {
    json!({"value": real::format(b.to_f64())})
}

fn eval_theorem(c: &EvalConfig, t: &str) -> Result<(Value, bool), Failure> {
    let zero = Rational::from_integer(0.into());
    let out = match t {
        "B" => bound_value(ledger::theorem_b_bound(
            need(&c.g, "g", t)?,
            need(&c.d_circ, "d_circ", t)?,
            need(&c.kappa, "kappa", t)?,
            &need(&c.l2, "L2", t)?,
        )?),
        "C" => bound_value(ledger::theorem_c_bound(
            need(&c.d_circ, "d_circ", t)?,
            need(&c.kappa, "kappa", t)?,
            need(&c.eps, "eps", t)?,
            &need(&c.l2, "L2", t)?,
        )?),
        "D" => bound_value(ledger::theorem_d_bound(
            need(&c.g, "g", t)?,
            need(&c.kappa, "kappa", t)?,
            need(&c.eps, "eps", t)?,
            &need(&c.omega2, "omega2", t)?,
        )?),
        "deg1" => bound_value(ledger::deg_one_bound(need(&c.g, "g", t)?, need(&c.kappa, "kappa", t)?, &need(&c.l2, "L2", t)?)),
        "trivial" => bound_value(ledger::trivial_bound(
            need(&c.r_minus, "r_minus", t)?,
            need(&c.deg_lq, "deg_LQ", t)?,
            &need(&c.l2, "L2", t)?,
        )?),
        "E" => {
            let ctx = ArithmeticContext {
                g: need(&c.g, "g", t)?,
                kappa: need(&c.kappa, "kappa", t)?,
                eps: need(&c.eps, "eps", t)?,
                abs_d: need(&c.abs_d, "absD", t)?,
                r1: need(&c.r1, "r1", t)?,
                r2: need(&c.r2, "r2", t)?,
                omega2: need(&c.omega2, "omega2", t)?,
                delta: c.delta.clone().unwrap_or_else(|| zero.clone()),
                gamma: c.gamma.clone().unwrap_or(zero),
            };
            let rep = ledger::corollary_e(&ctx)?;
            let bad = c.delta.is_some() && !(rep.delta_within_omega_bound && rep.delta_within_chi_fal_bound);
            return Ok((to_value(&rep), bad));
        }
        other => return Err(usage("Usage", format!("unknown theorem {other:?}"))),
    };
    Ok((out, false))
}

fn ledger_section(l: &Ledger) -> Result<(Value, bool), Failure> {
    let derived = ledger::derived_intersections(l)?;
    let reports: Vec<InequalityReport> = ledger::ledger_reports(l)?;
    let bad = reports.iter().any(|r| r.verdict == Verdict::Violated);
    Ok((json!({"digest": l.digest(), "derived": to_value(&derived), "reports": to_value(&reports)}), bad))
}

fn run_ledger_eval(path: &Path, theorem: Option<&str>) -> Result<Outcome, Failure> {
    let raw = read_json(path)?;
    // a bare ledger document is accepted as well
    let cfg: EvalConfig = if raw.get("steps").is_some() {
        EvalConfig { ledger: Some(parse(raw, "ledger")?), ..EvalConfig::default() }
    } else {
        parse(raw, "eval config")?
    };
    if theorem.is_none() && cfg.ledger.is_none() {
        return Err(usage("Usage", "give --theorem, a ledger in the config, or both"));
    }
    let mut report = json!({});
    let mut violated = false;
    if let Some(t) = theorem {
        let (v, bad) = eval_theorem(&cfg, t)?;
        report["theorem"] = json!(t);
        report["bound"] = v;
        violated |= bad;
    }
    if let Some(l) = &cfg.ledger {
        let (v, bad) = ledger_section(l)?;
        report["ledger"] = v;
        violated |= bad;
    }
    Ok(Outcome {
        subcommand: "ledger eval",
        config: json!({"theorem": theorem, "input": to_value(&cfg)}),
        seed: None,
        report,
        violated,
    })
}

fn run_ledger_sweep(g_max: u64, kappa_max: u64, sg: Option<u64>, sk: Option<u64>) -> Result<Outcome, Failure> {
    let chain = ledger::verify_constant_chain(g_max, kappa_max)?;
    let sg = sg.unwrap_or(200.min(g_max));
    let sk = sk.unwrap_or(20.min(kappa_max));
    let stirling = ledger::stirling_sweep(sg, sk);
    let violated = !chain.violations.is_empty() || !stirling.violations.is_empty();
    Ok(Outcome {
        subcommand: "ledger sweep",
        config: json!({"g_max": g_max, "kappa_max": kappa_max, "stirling_g_max": sg, "stirling_kappa_max": sk}),
        seed: None,
        report: json!({"constant_chain": to_value(&chain), "stirling": to_value(&stirling)}),
        violated,
    })
}

fn run_ledger_simulate(seed: u64, mode: &str, trials: u64, config: Option<&Path>) -> Result<Outcome, Failure> {
    let modes: Vec<LedgerMode> =
        if mode == "all" { LedgerMode::ALL.to_vec() } else { vec![LedgerMode::parse(mode)?] };
    let base: SimParams = match config {
        Some(p) => parse(read_json(p)?, "simulation params")?,
        None => SimParams::default(),
    };
    let mut summaries = Vec::new();
    for m in &modes {
        let params = SimParams { mode: *m, ..base.clone() };
        summaries.push(ledger::simulate_sweep(seed, trials, &params)?);
    }
    let violated = summaries.iter().any(|s| !s.passed);
    let mut params = to_value(&base);
    params.as_object_mut().expect("object").remove("mode");
    Ok(Outcome {
        subcommand: "ledger simulate",
        config: json!({"modes": modes, "trials": trials, "params": params}),
        seed: Some(seed),
        report: json!({"modes": to_value(&summaries)}),
        violated,
    })
}

fn dispatch(cmd: &Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Count { module, strict, emit_vectors, budget } => run_count(module, *strict, *emit_vectors, *budget),
        Command::Minima { module, budget } => run_minima(module, *budget),
        Command::Chi { module, samples, seed } => run_chi(module, *samples, *seed),
        Command::Verify(a) => run_verify(a),
        Command::Ledger(LedgerCommand::Eval { config, theorem }) => run_ledger_eval(config, theorem.as_deref()),
        Command::Ledger(LedgerCommand::Sweep { g_max, kappa_max, stirling_g_max, stirling_kappa_max }) => {
            run_ledger_sweep(*g_max, *kappa_max, *stirling_g_max, *stirling_kappa_max)
        }
        Command::Ledger(LedgerCommand::Simulate { seed, mode, trials, config }) => {
            run_ledger_simulate(*seed, mode, *trials, config.as_deref())
        }
    }
}

fn emit_error(f: &Failure) -> ExitCode {
    let doc = json!({"error": {"kind": f.kind, "message": f.message}});
    println!("{}", serde_json::to_string_pretty(&doc).expect("error serializes"));
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return emit_error(&usage("Usage", e.to_string().trim_end()));
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return emit_error(&usage("Usage", "--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("thread pool builds once");
    }
    let start = Instant::now();
    let out = match dispatch(&cli.command) {
        Ok(o) => o,
        Err(f) => return emit_error(&f),
    };
    let report_json = serde_json::to_string(&out.report).expect("report serializes");
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        subcommand: out.subcommand,
        config: &out.config,
        seed: out.seed,
        result_digest: hex::encode(Sha256::digest(report_json.as_bytes())),
    };
    let doc = Document { report: &out.report, manifest };
    println!("{}", serde_json::to_string_pretty(&doc).expect("document serializes"));
    eprintln!("latmin {}: {:.3}s", out.subcommand, start.elapsed().as_secs_f64());
    if out.violated {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
