//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use latmin::enumeration::{effective_sections, EnumConfig};
use latmin::exact::rational_to_f64;
use latmin::inequality::Verdict;
use latmin::ledger::{
    constant_c_form, corollary_e, simulate_sweep, stirling_check, stirling_sweep, verify_constant_chain,
    ArithmeticContext, ConstantForm, LedgerMode, SimParams,
};
use latmin::norm::BaseNorm;
use latmin::suite::{random_module, run_suite, trial_seed, CheckKind, NormFamily, SuiteConfig, SuiteSummary};
use latmin::{NormedModule, Rational};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- oracle

fn to_f64_matrix(m: &[Vec<Rational>]) -> Vec<Vec<f64>> {
    m.iter().map(|row| row.iter().map(rational_to_f64).collect()).collect()
}

/// Gauss–Jordan inverse of a square matrix.
fn inverse_f64(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| (i == j) as u8 as f64));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        for x in m[c].iter_mut() {
            *x /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot_row = m[c].clone();
                for (x, y) in m[r].iter_mut().zip(pivot_row) {
                    *x -= f * y;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n..].to_vec()).collect()
}

/// First `r` linearly independent rows (Gram–Schmidt residual test).
fn independent_rows(rows: &[Vec<f64>], r: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for row in rows {
        let mut v = row.clone();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            basis.push(v.iter().map(|x| x / norm).collect());
            chosen.push(row.clone());
        }
        if chosen.len() == r {
            break;
        }
    }
    chosen
}

/// Scan box and a membership test `‖v‖ ≤ 1` decided through logarithms,
/// with ties resolved exactly (`q = e^β` with `q` rational forces `β = 0`).
struct Oracle {
    bounds: Vec<i64>,
    base: BaseNorm,
    alpha: f64,
    alpha_is_zero: bool,
}

impl Oracle {
    fn new(m: &NormedModule) -> Self {
        let alpha = rational_to_f64(m.alpha());
        let scale = alpha.exp() * (1.0 + 1e-9);
        let r = m.rank();
        let widths: Vec<f64> = match m.base() {
            BaseNorm::Ellipsoid { gram } => {
                let inv = inverse_f64(&to_f64_matrix(gram));
                (0..r).map(|k| inv[k][k].sqrt() * scale).collect()
            }
            BaseNorm::PolyMax { functionals } => {
                let sq = independent_rows(&to_f64_matrix(functionals), r);
                let inv = inverse_f64(&sq);
                (0..r).map(|k| inv[k].iter().map(|x| x.abs()).sum::<f64>() * scale).collect()
            }
        };
        Oracle {
            bounds: widths.iter().map(|w| w.floor() as i64 + 1).collect(),
            base: m.base().clone(),
            alpha,
            alpha_is_zero: m.alpha() == &Rational::from_integer(0.into()),
        }
    }

    /// `(ln base(v), tie)`; `tie` is the exact comparison of `base(v)` with 1.
    fn contains(&self, v: &[i64]) -> Result<bool, String> {
        let (log_base, exact_one) = match &self.base {
            BaseNorm::Ellipsoid { gram } => {
                let mut q = Rational::from_integer(0.into());
                for (i, row) in gram.iter().enumerate() {
                    for (j, g) in row.iter().enumerate() {
                        q += g * Rational::from_integer((v[i] * v[j]).into());
                    }
                }
                (0.5 * rational_to_f64(&q).ln(), q.cmp(&Rational::from_integer(1.into())))
            }
            BaseNorm::PolyMax { functionals } => {
                let q = functionals
                    .iter()
                    .map(|a| {
                        a.iter()
                            .zip(v)
                            .map(|(x, &c)| x * Rational::from_integer(c.into()))
                            .sum::<Rational>()
                    })
                    .map(|x| if x < Rational::from_integer(0.into()) { -x } else { x })
                    .max()
                    .unwrap();
                (rational_to_f64(&q).ln(), q.cmp(&Rational::from_integer(1.into())))
            }
        };
        if self.alpha_is_zero {
            return Ok(exact_one != std::cmp::Ordering::Greater);
        }
        let gap = log_base - self.alpha;
        if gap.abs() < 1e-12 {
            return Err(format!("oracle cannot separate {v:?} from the boundary"));
        }
        Ok(gap < 0.0)
    }

    fn scan(&self) -> Result<Vec<Vec<i64>>, String> {
        let mut out = Vec::new();
        let mut v: Vec<i64> = self.bounds.iter().map(|b| -b).collect();
        loop {
            if self.contains(&v)? {
                out.push(v.clone());
            }
            let Some(i) = (0..v.len()).rev().find(|&i| v[i] < self.bounds[i]) else {
                return Ok(out);
            };
            v[i] += 1;
            for (x, b) in v.iter_mut().zip(&self.bounds).skip(i + 1) {
                *x = -b;
            }
        }
    }
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let config = SuiteConfig { rank_min: 1, rank_max: 3, budget: 10_000_000, ..SuiteConfig::default() };
    let cfg = EnumConfig::with_budget(10_000_000);
    let mut matched = 0;
    let mut notes = Vec::new();
    for i in 0..200 {
        let m = random_module(trial_seed(1, i), &config);
        let got = effective_sections(&m, &cfg).map(|s| s.vectors);
        match (got, Oracle::new(&m).scan()) {
            (Ok(a), Ok(b)) if a == b => matched += 1,
            (Ok(_), Ok(_)) => notes.push(format!("mismatch on {}", m.to_json())),
            (Err(e), _) => notes.push(format!("enumeration error {e}")),
            (_, Err(e)) => notes.push(e),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        matched == 200 && secs < 60.0,
        format!("{matched}/200 modules match the box-scan oracle in {secs:.2} s (limit 60 s) {}", notes.join("; ")),
    )
}

fn count_violations(s: &SuiteSummary, names: &[&str]) -> (u64, u64) {
    names.iter().fold((0, 0), |(c, v), n| {
        let x = s.inequalities.get(*n).cloned().unwrap_or_default();
        (c + x.checked, v + x.violations)
    })
}

fn tight(s: &SuiteSummary, name: &str) -> u64 {
    s.inequalities.get(name).map_or(0, |x| x.tight)
}

fn criterion_2() -> Outcome {
    let config = SuiteConfig {
        seed: 2,
        trials: 500,
        rank_min: 1,
        rank_max: 5,
        checks: vec![CheckKind::NormScaling, CheckKind::SefGap],
        ..SuiteConfig::default()
    };
    let s = match run_suite(&config) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let names = [
        "h0_twist_monotone",
        "h0_twist_growth",
        "h0_sef_twist_monotone",
        "h0_sef_twist_growth",
        "sef_below_h0",
        "h0_below_sef_plus_r_log3",
    ];
    let (checked, viol) = count_violations(&s, &names);
    let both = s.family_counts.contains_key(&NormFamily::Ellipsoid) && s.family_counts.contains_key(&NormFamily::Polymax);
    let t = tight(&s, "h0_below_sef_plus_r_log3");
    outcome(
        viol == 0 && both && t >= 1 && s.errors.is_empty() && checked >= 6 * 500,
        format!(
            "{checked} reports over {} instances, {viol} violations, {} skips, {t} tight sef-gap reports",
            s.instances, s.skips
        ),
    )
}

fn criterion_3() -> Outcome {
    let config = SuiteConfig {
        seed: 3,
        trials: 200,
        checks: vec![CheckKind::Filtration],
        filtration_max_len: 6,
        ..SuiteConfig::default()
    };
    let s = match run_suite(&config) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let names = ["h0_filtration_upper", "h0_filtration_lower", "h0_sef_filtration_upper", "h0_sef_filtration_lower"];
    let (checked, viol) = count_violations(&s, &names);
    outcome(
        viol == 0 && s.errors.is_empty() && s.skips == 0,
        format!("{checked} reports over {} instances, {viol} violations, {} skips", s.instances, s.skips),
    )
}

fn minkowski_corpus() -> Result<SuiteSummary, String> {
    let config = SuiteConfig {
        seed: 4,
        trials: 450,
        checks: vec![CheckKind::SecondMinima, CheckKind::GsCount, CheckKind::MinkowskiCount],
        ..SuiteConfig::default()
    };
    run_suite(&config).map_err(|e| e.to_string())
}

fn criterion_4(s: &SuiteSummary) -> Outcome {
    let lower = s.inequalities.get("minkowski_second_lower").cloned().unwrap_or_default();
    let upper = s.inequalities.get("minkowski_second_upper").cloned().unwrap_or_default();
    let (_, gs_viol) = count_violations(s, &["h0_minima_count", "h0_sef_minima_count"]);
    let window_ok = lower.violations == 0 && upper.violations == 0;
    let tight_ok = tight(s, "minkowski_second_upper") >= 2 && tight(s, "minkowski_second_lower") >= 1;
    let gs_tight = tight(s, "h0_minima_count") >= 1;
    outcome(
        window_ok && gs_viol == 0 && lower.exact >= 300 && tight_ok && gs_tight && s.errors.is_empty(),
        format!(
            "{} exact-volume instances, window violations {}, count violations {gs_viol}, tight upper/lower/count {}/{}/{}",
            lower.exact,
            lower.violations + upper.violations,
            tight(s, "minkowski_second_upper"),
            tight(s, "minkowski_second_lower"),
            tight(s, "h0_minima_count"),
        ),
    )
}

fn criterion_5(s: &SuiteSummary) -> Outcome {
    let m = s.inequalities.get("minkowski_count").cloned().unwrap_or_default();
    outcome(
        m.violations == 0 && m.checked == s.instances - s.skips.min(s.instances),
        format!(
            "{} reports, {} violations, {} inconclusive, {} exact",
            m.checked, m.violations, m.inconclusive, m.exact
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for mode in LedgerMode::ALL {
        let p = SimParams { mode, ..SimParams::default() };
        match simulate_sweep(6, 1000, &p) {
            Ok(s) => {
                let chain = s.inequalities.get("theorem_chain").cloned().unwrap_or_default();
                let one = s.inequalities.get("onestep_count").cloned().unwrap_or_default();
                ok &= s.passed && s.feasible == 1000 && chain.checked == 1000 && chain.violations == 0;
                ok &= one.violations == 0 && s.inequalities["sum_ci_bound"].violations == 0;
                lines.push(format!("{}: {} feasible, {} failures", mode.name(), s.feasible, s.failures.len()));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{}: {e}", mode.name()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(ok && secs < 30.0, format!("{} in {secs:.2} s (limit 30 s)", lines.join(", ")))
}

fn criterion_7() -> Outcome {
    let form = constant_c_form();
    let exact_form = form == ConstantForm { g_log_abs_d: 2, d_log_d: 18, d: 25 };
    let ctx = ArithmeticContext {
        g: 3,
        kappa: 2,
        eps: 1,
        abs_d: Rational::from_integer(5.into()),
        r1: 0,
        r2: 1,
        omega2: Rational::from_integer(7.into()),
        delta: Rational::from_integer(0.into()),
        gamma: Rational::from_integer(0.into()),
    };
    let (c_ok, c_val) = match corollary_e(&ctx) {
        Ok(rep) => {
            let d = 8.0f64;
            let want = 2.0 * 3.0 * 5f64.ln() + 18.0 * d * d.ln() + 25.0 * d;
            (rep.constant_form == form && (rep.c_value - want).abs() < 1e-9, rep.c_value)
        }
        Err(_) => (false, f64::NAN),
    };
    let start = Instant::now();
    let chain = match verify_constant_chain(1000, 50) {
        Ok(c) => c,
        Err(e) => return outcome(false, e.to_string()),
    };
    let closed = 25.0 - 16.0 * 3f64.ln() - 2.0 * (2.0 * PI).ln();
    let margin_ok = (chain.asymptotic_margin - closed).abs() < 1e-6;
    let min_ii = chain.margins.get(1).map_or(f64::NAN, |m| m.min_margin_per_d);
    outcome(
        exact_form && c_ok && chain.violations.is_empty() && margin_ok && min_ii > 0.0 && chain.three_c_dominates,
        format!(
            "C = {}g ln|D| + {} d ln d + {} d (C(3, K) = {c_val:.6}); {} grid checks, {} violations, \
             asymptotic margin {:.9} vs {closed:.9}, min per-d margin {min_ii:.6} ({:.2} s)",
            form.g_log_abs_d,
            form.d_log_d,
            form.d,
            chain.checked,
            chain.violations.len(),
            chain.asymptotic_margin,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let s = stirling_sweep(200, 20);
    let eq = stirling_check(2, 1, 0);
    let detected = s.equality_cases.contains(&(2, 1, 0));
    outcome(
        s.violations.is_empty() && detected && eq.slack.abs() < 1e-9 && eq.verdict == Verdict::Holds,
        format!(
            "{} grid points, {} violations, equality cases {:?}, slack at (2,1,0) = {:.3e}",
            s.checked,
            s.violations.len(),
            s.equality_cases,
            eq.slack
        ),
    )
}

fn run_cli(args: &[&str], threads: &str) -> (Vec<u8>, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_latmin"))
        .args(args)
        .args(["--threads", threads])
        .env_remove("LATMIN_BUDGET")
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code())
}

fn criterion_9() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let module = dir.join("box.json");
    std::fs::write(
        &module,
        r#"{"rank":3,"norm":{"type":"polymax","functionals":[["1/3","1/5","0"],["0","1/2","1/7"],["1/4","0","1/3"],["1/5","1/5","1/5"]]}}"#,
    )
    .unwrap();
    let ledger = dir.join("ledger.json");
    std::fs::write(
        &ledger,
        r#"{"g":2,"kappa":1,"L2":20,"d_circ":4,"ledger":{"g":2,"kappa":1,"L2_0":"20","mode":"positive-genus",
            "steps":[{"d":4,"r":3,"c":"1","slack":"2"},{"d":2,"r":2,"c":"0","slack":"0"}]}}"#,
    )
    .unwrap();
    let m = module.to_str().unwrap();
    let l = ledger.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["count", "--module", m, "--emit-vectors"],
        vec!["minima", "--module", m],
        vec!["chi", "--module", m, "--samples", "50000", "--seed", "9"],
        vec!["verify", "--suite", "sec2", "--trials", "10", "--seed", "7"],
        vec!["ledger", "eval", "--config", l, "--theorem", "B"],
        vec!["ledger", "sweep", "--g-max", "200", "--kappa-max", "10"],
        vec!["ledger", "simulate", "--seed", "5", "--trials", "100"],
    ];
    let mut bad = Vec::new();
    for args in &cases {
        let a = run_cli(args, "1");
        let b = run_cli(args, "1");
        let c = run_cli(args, "4");
        if a.1 != Some(0) || a != b || a != c || a.0.is_empty() {
            bad.push(format!("{} {}", args[0], args.get(1).copied().unwrap_or("")));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} subcommand invocations x 3 runs byte-identical; differing: {bad:?}", cases.len()),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let dt: Duration = start.elapsed();
        failed += !o.pass as u32;
        println!(
            "criterion {n} [{}] {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail.trim_end(),
            dt.as_secs_f64()
        );
    };
    report(1, "oracle equivalence", &criterion_1);
    report(2, "twist scaling and sef gap", &criterion_2);
    report(3, "filtration bounds", &criterion_3);
    let corpus = minkowski_corpus();
    match &corpus {
        Ok(s) => {
            report(4, "minima window and count", &|| criterion_4(s));
            report(5, "Minkowski count bound", &|| criterion_5(s));
        }
        Err(e) => {
            report(4, "minima window and count", &|| outcome(false, e.clone()));
            report(5, "Minkowski count bound", &|| outcome(false, e.clone()));
        }
    }
    report(6, "ledger feasibility and chaining", &criterion_6);
    report(7, "constant reproduction", &criterion_7);
    report(8, "Stirling estimate", &criterion_8);
    report(9, "CLI determinism", &criterion_9);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 9 acceptance criteria passed");
}
