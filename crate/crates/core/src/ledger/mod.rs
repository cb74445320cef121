//! Reduction ledgers: the degrees, ranks, absolute minima and effectivity
//! slacks of a reduction sequence `L̄_i(−c_i) = L̄_{i+1} + Ē_{i+1}`, together
//! with the closed-form bounds they feed into.
//!
//! Degrees and ranks are stored over ℚ (already multiplied by `κ`).

mod bounds;
mod constants;
mod simulate;

pub use bounds::*;
pub use constants::*;
pub use simulate::*;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::{self, r_log_3, r_log_r, LogReal, Rational};
use crate::inequality::{compare, InequalityReport, Quantity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LedgerMode {
    PositiveGenus,
    GenusZero,
    CliffordHyperelliptic,
    CliffordNonhyperelliptic,
}

impl LedgerMode {
    pub const ALL: [LedgerMode; 4] = [
        LedgerMode::PositiveGenus,
        LedgerMode::GenusZero,
        LedgerMode::CliffordHyperelliptic,
        LedgerMode::CliffordNonhyperelliptic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LedgerMode::PositiveGenus => "positive-genus",
            LedgerMode::GenusZero => "genus-zero",
            LedgerMode::CliffordHyperelliptic => "clifford-hyperelliptic",
            LedgerMode::CliffordNonhyperelliptic => "clifford-nonhyperelliptic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown ledger mode {s:?}")))
    }

    /// `(s, t)` in `Σ r_i c_i ≤ s·2Σ d_i c_i + t·κ·(c₀ + Σ c_i)`.
    fn chain_coefficients(self) -> (Rational, Rational) {
        match self {
            LedgerMode::PositiveGenus => (exact::rat(1, 2), Rational::zero()),
            LedgerMode::GenusZero => (exact::rat(1, 2), exact::int(1)),
            LedgerMode::CliffordHyperelliptic => (exact::rat(1, 4), exact::int(1)),
            LedgerMode::CliffordNonhyperelliptic => (exact::rat(1, 4), exact::rat(1, 2)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerStep {
    pub d: u64,
    pub r: u64,
    #[serde(with = "exact::serde_rational")]
    pub c: Rational,
    #[serde(with = "exact::serde_rational")]
    pub slack: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ledger {
    pub g: u64,
    pub kappa: u64,
    pub steps: Vec<LedgerStep>,
    #[serde(rename = "L2_0", with = "exact::serde_rational")]
    pub l2_0: Rational,
    pub mode: LedgerMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DerivedIntersections {
    /// `L̄_i²`
    #[serde(with = "exact::serde_rational::vec")]
    pub l2: Vec<Rational>,
    /// `L̄'_i² = L̄_i(−c_i)²`
    #[serde(with = "exact::serde_rational::vec")]
    pub l2_prime: Vec<Rational>,
}

impl Ledger {
    pub fn n(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn d0(&self) -> u64 {
        self.steps[0].d
    }

    pub fn r0(&self) -> u64 {
        self.steps[0].r
    }

    /// `d° = d₀/κ`
    pub fn d_circ(&self) -> u64 {
        self.d0() / self.kappa
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ledger serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(&Sha256::digest(self.to_json().as_bytes())[..8])
    }

    /// Structural admissibility, including the mode's rank constraints.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidLedger(m));
        if self.kappa == 0 {
            return bad("kappa must be positive".into());
        }
        if self.steps.is_empty() {
            return bad("a ledger needs at least one step".into());
        }
        if self.l2_0.is_negative() {
            return bad("L2_0 must be nonnegative".into());
        }
        let k = self.kappa;
        for (i, s) in self.steps.iter().enumerate() {
            if s.d == 0 || s.r == 0 {
                return bad(format!("step {i}: d and r must be positive"));
            }
            if s.d % k != 0 || s.r % k != 0 {
                return bad(format!("step {i}: d and r must be multiples of kappa"));
            }
            if s.c.is_negative() || s.slack.is_negative() {
                return bad(format!("step {i}: c and slack must be nonnegative"));
            }
        }
        if let Some(i) = self.steps.windows(2).position(|w| w[1].d >= w[0].d) {
            return bad(format!("degrees must strictly decrease (steps {i} and {})", i + 1));
        }
        if !self.steps.last().expect("nonempty").slack.is_zero() {
            return bad("the final step has no successor; its slack must be 0".into());
        }
        let n = self.n();
        // compare 2r with d + 2κ etc. to stay in integers
        for (i, s) in self.steps.iter().enumerate() {
            let ok = match self.mode {
                LedgerMode::PositiveGenus => s.r <= s.d,
                LedgerMode::GenusZero => s.r == s.d + k,
                LedgerMode::CliffordHyperelliptic => 2 * s.r <= s.d + 2 * k,
                LedgerMode::CliffordNonhyperelliptic if i == 0 => 2 * s.r <= s.d + 2 * k,
                LedgerMode::CliffordNonhyperelliptic => 2 * s.r <= s.d + k,
            };
            if !ok {
                return bad(format!("step {i} of {n}: rank {} violates the {} constraint", s.r, self.mode.name()));
            }
        }
        match self.mode {
            LedgerMode::PositiveGenus if self.g == 0 => bad("positive-genus mode needs g ≥ 1".into()),
            LedgerMode::GenusZero if self.g != 0 => bad("genus-zero mode needs g = 0".into()),
            LedgerMode::CliffordHyperelliptic | LedgerMode::CliffordNonhyperelliptic => {
                if self.g < 2 {
                    bad("clifford modes need g ≥ 2".into())
                } else if self.d0() > k * (2 * self.g - 2) {
                    bad("special bundles have degree at most 2g − 2".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Forward computation of `L̄_i²` and `L̄'_i²`.
pub fn derived_intersections(ledger: &Ledger) -> Result<DerivedIntersections> {
    ledger.validate()?;
    let mut l2 = Vec::with_capacity(ledger.steps.len());
    let mut l2_prime = Vec::with_capacity(ledger.steps.len());
    let mut cur = ledger.l2_0.clone();
    for (i, s) in ledger.steps.iter().enumerate() {
        let prime = &cur - &s.c * exact::int(2 * s.d as i64);
        if prime.is_negative() {
            return Err(Error::InfeasibleLedger(format!(
                "L'_{i}² = {} < 0",
                exact::format_rational(&prime)
            )));
        }
        l2.push(cur);
        cur = &prime - &s.slack;
        l2_prime.push(prime);
        if cur.is_negative() && i < ledger.n() {
            return Err(Error::InfeasibleLedger(format!(
                "L_{}² = {} < 0",
                i + 1,
                exact::format_rational(&cur)
            )));
        }
    }
    Ok(DerivedIntersections { l2, l2_prime })
}

fn error_terms(r0: u64, log3_multiple: i64) -> Quantity {
    Quantity::exact(r_log_r(r0).times(4) + r_log_3(r0).times(log3_multiple))
}

/// Count-side value `Σ_{i≤j} r_i c_i + 4r₀ ln r₀ + 2r₀ ln 3` (with `ĥ⁰_sef(L̄'_j)`
/// left out).
pub fn onestep_count_value(ledger: &Ledger, j: usize) -> LogReal {
    let sum: Rational = ledger.steps[..=j]
        .iter()
        .map(|s| &s.c * exact::int(s.r as i64))
        .sum();
    LogReal::constant(sum) + r_log_r(ledger.r0()).times(4) + r_log_3(ledger.r0()).times(2)
}

/// The intersection inequality `L̄² ≥ L̄'_j² + 2Σ_{i≤j} d_i c_i` and the count
/// side compared against `s(L̄² − L̄'_j²) + t·κ·L̄²/d₀ + 4r₀ ln r₀ + 2r₀ ln 3`.
pub fn onestep_chain(ledger: &Ledger, j: usize) -> Result<Vec<InequalityReport>> {
    let der = derived_intersections(ledger)?;
    if j > ledger.n() {
        return Err(Error::PreconditionViolated(format!("step index {j} exceeds n = {}", ledger.n())));
    }
    let digest = ledger.digest();
    let dc: Rational = ledger.steps[..=j]
        .iter()
        .map(|s| &s.c * exact::int(2 * s.d as i64))
        .sum();
    let inter = compare(
        "onestep_intersection",
        Quantity::rational(&der.l2_prime[j] + dc),
        Quantity::rational(ledger.l2_0.clone()),
        &digest,
    )?;
    let (s, t) = ledger.mode.chain_coefficients();
    let rhs = Quantity::rational(
        s * (&ledger.l2_0 - &der.l2_prime[j])
            + t * exact::int(ledger.kappa as i64) * &ledger.l2_0 / exact::int(ledger.d0() as i64),
    ) + error_terms(ledger.r0(), 2);
    let count = compare("onestep_count", Quantity::exact(onestep_count_value(ledger, j)), rhs, &digest)?;
    Ok(vec![inter, count])
}

/// `c₀ + Σ_{i=0}^n c_i ≤ L̄²/d₀`.
pub fn sum_ci_bound(ledger: &Ledger) -> Result<InequalityReport> {
    derived_intersections(ledger)?;
    let total: Rational = ledger.steps.iter().map(|s| s.c.clone()).sum::<Rational>() + &ledger.steps[0].c;
    compare(
        "sum_ci_bound",
        Quantity::rational(total),
        Quantity::rational(&ledger.l2_0 / exact::int(ledger.d0() as i64)),
        &ledger.digest(),
    )
}

/// The bound the reduction yields for `ĥ⁰` (terminal `ĥ⁰_sef(L̄'_n) = 0`,
/// plus `r₀ ln 3` to pass from strict to closed sections) against the
/// closed-form theorem bound for the ledger's mode.
pub fn theorem_chain_check(ledger: &Ledger) -> Result<InequalityReport> {
    derived_intersections(ledger)?;
    let chained = onestep_count_value(ledger, ledger.n()) + r_log_3(ledger.r0());
    let (k, d_circ, l2) = (ledger.kappa, ledger.d_circ(), &ledger.l2_0);
    let bound = match ledger.mode {
        LedgerMode::PositiveGenus => theorem_b_bound(ledger.g, d_circ, k, l2)?,
        LedgerMode::GenusZero => theorem_b_bound(0, d_circ, k, l2)?,
        LedgerMode::CliffordHyperelliptic => theorem_c_bound(d_circ, k, 2, l2)?,
        LedgerMode::CliffordNonhyperelliptic => theorem_c_bound(d_circ, k, 1, l2)?,
    };
    compare("theorem_chain", Quantity::exact(chained), Quantity::exact(bound), &ledger.digest())
}

/// Every ledger-level check: all one-step chains, the `Σ c_i` bound and the
/// theorem chain.
pub fn ledger_reports(ledger: &Ledger) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    for j in 0..=ledger.n() {
        out.extend(onestep_chain(ledger, j)?);
    }
    out.push(sum_ci_bound(ledger)?);
    out.push(theorem_chain_check(ledger)?);
    Ok(out)
}
