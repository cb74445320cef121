//! Seeded random instances and the batch runner for the inequality checks.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::enumeration::{box_point_count, EnumConfig};
use crate::error::{Error, Result};
use crate::exact::{self, ceil_to_bigint, floor_to_bigint, int, rat, Rational};
use crate::inequality::{
    check_filtration, check_gs_count, check_minkowski_count, check_norm_scaling, check_second_minima,
    check_sef_gap, InequalityReport, Verdict,
};
use crate::norm::{make_normed_module, NormSpec, NormedModule};

pub const MAX_RANK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormFamily {
    Ellipsoid,
    Polymax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    NormScaling,
    SefGap,
    Filtration,
    SecondMinima,
    GsCount,
    MinkowskiCount,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::NormScaling,
        CheckKind::SefGap,
        CheckKind::Filtration,
        CheckKind::SecondMinima,
        CheckKind::GsCount,
        CheckKind::MinkowskiCount,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: u64,
    pub rank_min: usize,
    pub rank_max: usize,
    pub norm_families: Vec<NormFamily>,
    /// Range of the twist parameter fed to the checks.
    #[serde(with = "exact::serde_rational")]
    pub alpha_min: Rational,
    #[serde(with = "exact::serde_rational")]
    pub alpha_max: Rational,
    /// Range of the random twist applied to generated instances.
    #[serde(with = "exact::serde_rational")]
    pub twist_min: Rational,
    #[serde(with = "exact::serde_rational")]
    pub twist_max: Rational,
    pub filtration_max_len: usize,
    pub budget: u64,
    pub samples: u64,
    pub checks: Vec<CheckKind>,
    /// Prepend the fixed boundary-tight instances to the random corpus.
    pub anchors: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            trials: 100,
            rank_min: 1,
            rank_max: 4,
            norm_families: vec![NormFamily::Ellipsoid, NormFamily::Polymax],
            alpha_min: Rational::zero(),
            alpha_max: int(3),
            twist_min: rat(-1, 2),
            twist_max: int(1),
            filtration_max_len: 6,
            budget: 10_000_000,
            samples: 20_000,
            checks: CheckKind::ALL.to_vec(),
            anchors: true,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.rank_max > MAX_RANK || self.rank_min > self.rank_max {
            return bad("need rank_min ≤ rank_max ≤ 8");
        }
        if self.norm_families.is_empty() {
            return bad("at least one norm family is required");
        }
        if self.alpha_min < Rational::zero() || self.alpha_min > self.alpha_max {
            return bad("need 0 ≤ alpha_min ≤ alpha_max");
        }
        if self.twist_min > self.twist_max {
            return bad("need twist_min ≤ twist_max");
        }
        if self.filtration_max_len == 0 {
            return bad("filtration_max_len must be at least 1");
        }
        if self.budget == 0 {
            return bad("budget must be positive");
        }
        Ok(())
    }

    pub fn enum_config(&self) -> EnumConfig {
        EnumConfig::with_budget(self.budget)
    }
}

/// Seed of trial `index` under the suite seed `seed`.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"trial");
    h.update(seed.to_le_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Uniform rational in `[lo, hi]` with a random denominator in `1..=6`.
fn random_rational(rng: &mut ChaCha8Rng, lo: &Rational, hi: &Rational) -> Rational {
    let q: i64 = rng.gen_range(1..=6);
    let qq = int(q);
    let a = ceil_to_bigint(&(lo * &qq));
    let b = floor_to_bigint(&(hi * &qq));
    if a > b {
        return lo.clone();
    }
    let span: u64 = (&b - &a).try_into().unwrap_or(u64::MAX - 1);
    let k = rng.gen_range(0..=span);
    Rational::new(a + num_bigint::BigInt::from(k), num_bigint::BigInt::from(q))
}

fn random_spec(rng: &mut ChaCha8Rng, r: usize, family: NormFamily) -> NormSpec {
    match family {
        NormFamily::Ellipsoid => {
            let a: Vec<Vec<i64>> = (0..r).map(|_| (0..r).map(|_| rng.gen_range(-2..=2)).collect()).collect();
            let scale = rat(rng.gen_range(1..=4), rng.gen_range(1..=4));
            let gram = (0..r)
                .map(|i| {
                    (0..r)
                        .map(|j| {
                            let dot: i64 = (0..r).map(|k| a[k][i] * a[k][j]).sum();
                            int(dot + (i == j) as i64) * &scale
                        })
                        .collect()
                })
                .collect();
            NormSpec::Ellipsoid { gram }
        }
        NormFamily::Polymax => {
            let m = r + [0, 0, 1, 2][rng.gen_range(0..4)];
            let functionals = (0..m)
                .map(|_| (0..r).map(|_| rat(rng.gen_range(-3..=3), rng.gen_range(1..=4))).collect())
                .collect();
            NormSpec::PolyMax { functionals }
        }
    }
}

/// Deterministic instance for `seed`. Rejects rank-deficient functionals
/// and instances whose enclosing box exceeds the budget.
pub fn random_module(seed: u64, config: &SuiteConfig) -> NormedModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let r = rng.gen_range(config.rank_min..=config.rank_max);
        let family = config.norm_families[rng.gen_range(0..config.norm_families.len())];
        let spec = random_spec(&mut rng, r, family);
        let twisted = rng.gen_bool(0.5);
        let alpha = random_rational(&mut rng, &config.twist_min, &config.twist_max);
        let Ok(mut m) = make_normed_module(r, spec) else {
            continue;
        };
        if twisted && !alpha.is_zero() {
            m = m.twist(&alpha);
        }
        let fits = m
            .enclosing_box()
            .map(|b| box_point_count(&b) <= num_bigint::BigInt::from(config.budget))
            .unwrap_or(false);
        if fits {
            return m;
        }
    }
}

/// `0 = α₀ ≤ α₁ ≤ …` with at most `max_len` entries and unit-scale steps.
pub fn random_filtration(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Rational> {
    let len = rng.gen_range(1..=max_len);
    let mut out = vec![Rational::zero()];
    for _ in 1..len {
        let step = random_rational(rng, &Rational::zero(), &Rational::one());
        let next = out.last().expect("nonempty") + step;
        out.push(next);
    }
    out
}

/// Boundary-tight instances: `(ℤ, |·|)`, `(ℤ², max(|x|/4, |y|))` and the
/// Euclidean plane.
pub fn anchor_modules() -> Vec<NormedModule> {
    vec![
        make_normed_module(1, NormSpec::sup(1)).expect("valid"),
        make_normed_module(
            2,
            NormSpec::PolyMax { functionals: vec![vec![rat(1, 4), int(0)], vec![int(0), int(1)]] },
        )
        .expect("valid"),
        make_normed_module(2, NormSpec::euclidean(2)).expect("valid"),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialInput {
    pub index: u64,
    pub seed: u64,
    pub module: NormedModule,
    #[serde(with = "exact::serde_rational")]
    pub alpha: Rational,
    #[serde(with = "exact::serde_rational::vec")]
    pub filtration: Vec<Rational>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ViolationDump {
    pub trial: TrialInput,
    pub report: InequalityReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureNote {
    pub trial: TrialInput,
    pub check: CheckKind,
    pub error_kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InequalitySummary {
    pub checked: u64,
    pub holds: u64,
    pub violations: u64,
    pub inconclusive: u64,
    pub exact: u64,
    /// Reports with `|slack| < 10⁻⁹`.
    pub tight: u64,
    #[serde(serialize_with = "exact::real::serialize_option")]
    pub min_slack: Option<f64>,
}

impl InequalitySummary {
    pub(crate) fn absorb(&mut self, r: &InequalityReport) {
        self.checked += 1;
        match r.verdict {
            Verdict::Holds => self.holds += 1,
            Verdict::Violated => self.violations += 1,
            Verdict::Inconclusive => self.inconclusive += 1,
        }
        self.exact += (r.mode == crate::inequality::CheckMode::Exact) as u64;
        self.tight += (r.slack.abs() < 1e-9) as u64;
        self.min_slack = Some(self.min_slack.map_or(r.slack, |m| m.min(r.slack)));
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub instances: u64,
    pub family_counts: BTreeMap<NormFamily, u64>,
    /// Checks skipped because the enumeration budget was exceeded.
    pub skips: u64,
    pub inequalities: BTreeMap<String, InequalitySummary>,
    pub violations: Vec<ViolationDump>,
    /// Checks that failed for reasons other than the budget.
    pub errors: Vec<FailureNote>,
    pub passed: bool,
}

impl SuiteSummary {
    pub fn total_violations(&self) -> u64 {
        self.inequalities.values().map(|s| s.violations).sum()
    }
}

struct TrialOutcome {
    input: TrialInput,
    family: NormFamily,
    reports: Vec<InequalityReport>,
    skips: u64,
    errors: Vec<FailureNote>,
}

fn family_of(m: &NormedModule) -> NormFamily {
    match m.base() {
        crate::norm::BaseNorm::Ellipsoid { .. } => NormFamily::Ellipsoid,
        crate::norm::BaseNorm::PolyMax { .. } => NormFamily::Polymax,
    }
}

fn run_checks(input: &TrialInput, config: &SuiteConfig) -> TrialOutcome {
    let cfg = config.enum_config();
    let m = &input.module;
    let mut reports = Vec::new();
    let mut skips = 0;
    let mut errors = Vec::new();
    for &check in &config.checks {
        let res = match check {
            CheckKind::NormScaling => check_norm_scaling(m, &input.alpha, &cfg),
            CheckKind::SefGap => check_sef_gap(m, &cfg),
            CheckKind::Filtration => check_filtration(m, &input.filtration, &cfg),
            CheckKind::SecondMinima => check_second_minima(m, config.samples, input.seed, &cfg),
            CheckKind::GsCount => check_gs_count(m, &cfg),
            CheckKind::MinkowskiCount => {
                check_minkowski_count(m, config.samples, input.seed, &cfg).map(|r| vec![r])
            }
        };
        match res {
            Ok(rs) => reports.extend(rs),
            Err(Error::EnumerationBudgetExceeded { .. }) => skips += 1,
            Err(e) => errors.push(FailureNote {
                trial: input.clone(),
                check,
                error_kind: e.kind().to_string(),
                message: e.to_string(),
            }),
        }
    }
    TrialOutcome { family: family_of(m), input: input.clone(), reports, skips, errors }
}

/// The corpus of trial inputs: anchors first (when enabled), then `trials`
/// random instances.
pub fn corpus(config: &SuiteConfig) -> Vec<TrialInput> {
    let mut out = Vec::new();
    if config.anchors {
        for (i, module) in anchor_modules().into_iter().enumerate() {
            let alpha = if i == 0 { Rational::one() } else { rat(1, 2) };
            out.push(TrialInput {
                index: out.len() as u64,
                seed: config.seed,
                module,
                alpha,
                filtration: vec![Rational::zero(), Rational::one(), int(2)],
            });
        }
    }
    for t in 0..config.trials {
        let seed = trial_seed(config.seed, t);
        let module = random_module(seed, config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let alpha = random_rational(&mut rng, &config.alpha_min, &config.alpha_max);
        let filtration = random_filtration(&mut rng, config.filtration_max_len);
        out.push(TrialInput { index: out.len() as u64, seed, module, alpha, filtration });
    }
    out
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteSummary> {
    config.validate()?;
    let inputs = corpus(config);
    let outcomes: Vec<TrialOutcome> = inputs.par_iter().map(|i| run_checks(i, config)).collect();
    let mut summary = SuiteSummary {
        instances: outcomes.len() as u64,
        family_counts: BTreeMap::new(),
        skips: 0,
        inequalities: BTreeMap::new(),
        violations: Vec::new(),
        errors: Vec::new(),
        passed: true,
    };
    for o in outcomes {
        *summary.family_counts.entry(o.family).or_default() += 1;
        summary.skips += o.skips;
        summary.errors.extend(o.errors);
        for r in o.reports {
            summary.inequalities.entry(r.name.clone()).or_default().absorb(&r);
            if r.verdict == Verdict::Violated {
                summary.violations.push(ViolationDump { trial: o.input.clone(), report: r });
            }
        }
    }
    summary.passed = summary.violations.is_empty() && summary.errors.is_empty();
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_module_is_deterministic() {
        let cfg = SuiteConfig::default();
        assert_eq!(random_module(42, &cfg).digest(), random_module(42, &cfg).digest());
        assert_ne!(random_module(42, &cfg).digest(), random_module(43, &cfg).digest());
    }

    #[test]
    fn generator_covers_both_families() {
        let cfg = SuiteConfig::default();
        let mut seen = BTreeMap::new();
        for s in 0..200 {
            *seen.entry(family_of(&random_module(s, &cfg))).or_insert(0) += 1;
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn generated_ellipsoids_revalidate() {
        let cfg = SuiteConfig { norm_families: vec![NormFamily::Ellipsoid], ..SuiteConfig::default() };
        for s in 0..50 {
            let m = random_module(s, &cfg);
            let back: NormedModule = serde_json::from_str(&m.to_json()).unwrap();
            assert_eq!(back.digest(), m.digest());
        }
    }

    #[test]
    fn filtrations_start_at_zero_and_increase() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let f = random_filtration(&mut rng, 6);
            assert!(f[0].is_zero() && f.len() <= 6);
            assert!(f.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn small_suite_passes_and_replays() {
        let cfg = SuiteConfig { trials: 8, rank_max: 3, seed: 11, ..SuiteConfig::default() };
        let a = run_suite(&cfg).unwrap();
        assert!(a.passed, "{:?}", a.violations);
        assert!(a.inequalities["h0_below_sef_plus_r_log3"].tight >= 1);
        let b = run_suite(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn config_validation() {
        let bad = SuiteConfig { rank_max: 9, ..SuiteConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SuiteConfig { trials: 0, ..SuiteConfig::default() };
        assert!(bad.validate().is_err());
        assert!(SuiteConfig::default().validate().is_ok());
    }
}
