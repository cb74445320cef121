//! Seeded random admissible ledgers and the sweep that checks them.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ledger_reports, Ledger, LedgerMode, LedgerStep};
use crate::error::{Error, Result};
use crate::exact::{self, int, Rational};
use crate::inequality::{InequalityReport, Verdict};
use crate::suite::InequalitySummary;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub mode: LedgerMode,
    pub kappa_max: u64,
    pub g_max: u64,
    /// Largest `d₀/κ`.
    pub d_circ_max: u64,
    pub n_max: u64,
    pub c_max: u64,
    pub slack_max: u64,
    pub l2_max: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            mode: LedgerMode::PositiveGenus,
            kappa_max: 3,
            g_max: 6,
            d_circ_max: 12,
            n_max: 5,
            c_max: 3,
            slack_max: 10,
            l2_max: 200,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.kappa_max == 0 {
            return bad("kappa_max must be positive");
        }
        if self.d_circ_max < 2 {
            return bad("d_circ_max must be at least 2");
        }
        match self.mode {
            LedgerMode::PositiveGenus if self.g_max < 1 => bad("positive-genus needs g_max ≥ 1"),
            LedgerMode::CliffordHyperelliptic | LedgerMode::CliffordNonhyperelliptic if self.g_max < 2 => {
                bad("clifford modes need g_max ≥ 2")
            }
            _ => Ok(()),
        }
    }
}

fn sim_rng(seed: u64, mode: LedgerMode) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"ledger");
    h.update(seed.to_le_bytes());
    h.update(mode.name().as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// `p/q` with `q ∈ 1..=4` and `0 ≤ p/q ≤ max`.
fn random_nonneg(rng: &mut ChaCha8Rng, max: u64) -> Rational {
    let q: u64 = rng.gen_range(1..=4);
    let p: u64 = rng.gen_range(0..=max * q);
    exact::rat(p as i64, q as i64)
}

/// Largest `r/κ` allowed at step `i` with `d/κ = dc`.
fn rank_cap(mode: LedgerMode, i: usize, dc: u64) -> u64 {
    match mode {
        LedgerMode::PositiveGenus => dc,
        LedgerMode::GenusZero => dc + 1,
        LedgerMode::CliffordHyperelliptic => dc / 2 + 1,
        LedgerMode::CliffordNonhyperelliptic if i == 0 => dc / 2 + 1,
        LedgerMode::CliffordNonhyperelliptic => dc.div_ceil(2),
    }
}

/// A deterministic admissible ledger. The minima and slacks are drawn freely,
/// `slack₀` is raised until `Σ_{i<n} slackᵢ + 2Σ_{i≥1} dᵢcᵢ ≥ (d₀ + dₙ)Σ_{i≥1} cᵢ`,
/// and both are then scaled down together if `L̄²` cannot absorb them.
pub fn simulate_reduction(seed: u64, params: &SimParams) -> Result<Ledger> {
    params.validate()?;
    let mode = params.mode;
    let mut rng = sim_rng(seed, mode);
    let kappa = rng.gen_range(1..=params.kappa_max);
    let g = match mode {
        LedgerMode::PositiveGenus => rng.gen_range(1..=params.g_max),
        LedgerMode::GenusZero => 0,
        _ => rng.gen_range(2..=params.g_max),
    };
    let d_top = match mode {
        LedgerMode::CliffordHyperelliptic | LedgerMode::CliffordNonhyperelliptic => {
            params.d_circ_max.min(2 * g - 2)
        }
        _ => params.d_circ_max,
    };
    let d0 = rng.gen_range(2..=d_top);
    let n = (rng.gen_range(0..=params.n_max)).min(d0 - 1) as usize;
    let mut rest: Vec<u64> = rand::seq::index::sample(&mut rng, (d0 - 1) as usize, n)
        .into_iter()
        .map(|x| x as u64 + 1)
        .collect();
    rest.sort_unstable_by(|a, b| b.cmp(a));
    let degrees: Vec<u64> = std::iter::once(d0).chain(rest).collect();

    let mut steps: Vec<LedgerStep> = degrees
        .iter()
        .enumerate()
        .map(|(i, &dc)| {
            let rc = match mode {
                LedgerMode::GenusZero => dc + 1,
                _ => rng.gen_range(1..=rank_cap(mode, i, dc)),
            };
            let c = random_nonneg(&mut rng, params.c_max);
            let slack = if i < n { random_nonneg(&mut rng, params.slack_max) } else { Rational::zero() };
            LedgerStep { d: dc * kappa, r: rc * kappa, c, slack }
        })
        .collect();

    if n > 0 {
        let beta: Rational = steps[1..].iter().map(|s| s.c.clone()).sum();
        let ends = int((steps[0].d + steps[n].d) as i64);
        let have: Rational = steps[..n].iter().map(|s| s.slack.clone()).sum::<Rational>()
            + steps[1..].iter().map(|s| &s.c * int(2 * s.d as i64)).sum::<Rational>();
        let deficit = ends * beta - have;
        if deficit.is_positive() {
            steps[0].slack += deficit;
        }
    }

    let l2_0 = random_nonneg(&mut rng, params.l2_max);
    let need: Rational = steps.iter().map(|s| &s.c * int(2 * s.d as i64) + &s.slack).sum();
    if need > l2_0 {
        let t = &l2_0 / &need;
        for s in &mut steps {
            s.c *= &t;
            s.slack *= &t;
        }
    }
    let ledger = Ledger { g, kappa, steps, l2_0, mode };
    ledger.validate()?;
    Ok(ledger)
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationFailure {
    pub seed: u64,
    pub ledger: Ledger,
    pub report: Option<InequalityReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub mode: LedgerMode,
    pub trials: u64,
    pub feasible: u64,
    pub inequalities: BTreeMap<String, InequalitySummary>,
    /// Ledgers with `Σ rᵢcᵢ ≤ Σ dᵢcᵢ`.
    pub rc_below_dc: u64,
    pub failures: Vec<SimulationFailure>,
    pub passed: bool,
}

fn sim_seed(seed: u64, index: u64) -> u64 {
    crate::suite::trial_seed(seed, index)
}

pub fn simulate_sweep(seed: u64, trials: u64, params: &SimParams) -> Result<SimulationSummary> {
    params.validate()?;
    let results: Vec<(u64, Ledger, Result<Vec<InequalityReport>>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = sim_seed(seed, i);
            let ledger = simulate_reduction(s, params)?;
            let reps = ledger_reports(&ledger);
            Ok((s, ledger, reps))
        })
        .collect::<Result<_>>()?;
    let mut out = SimulationSummary {
        mode: params.mode,
        trials,
        feasible: 0,
        inequalities: BTreeMap::new(),
        rc_below_dc: 0,
        failures: Vec::new(),
        passed: true,
    };
    for (s, ledger, reps) in results {
        let rc: Rational = ledger.steps.iter().map(|x| &x.c * int(x.r as i64)).sum();
        let dc: Rational = ledger.steps.iter().map(|x| &x.c * int(x.d as i64)).sum();
        out.rc_below_dc += (rc <= dc) as u64;
        match reps {
            Ok(reps) => {
                out.feasible += 1;
                for r in reps {
                    out.inequalities.entry(r.name.clone()).or_default().absorb(&r);
                    if r.verdict == Verdict::Violated {
                        out.failures.push(SimulationFailure {
                            seed: s,
                            ledger: ledger.clone(),
                            report: Some(r),
                            error: None,
                        });
                    }
                }
            }
            Err(e) => out.failures.push(SimulationFailure { seed: s, ledger, report: None, error: Some(e.to_string()) }),
        }
    }
    out.passed = out.failures.is_empty();
    Ok(out)
}
