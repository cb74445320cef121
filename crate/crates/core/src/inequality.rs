//! Executable forms of the counting inequalities for normed lattices.
//!
//! Every check returns [`InequalityReport`]s. Sides built only from lattice
//! point counts, minima and exact volumes are compared exactly through
//! [`LogReal`]; sides involving a Monte Carlo volume are compared with a
//! guard band of four standard errors.

use std::cmp::Ordering;
use std::ops::{Add, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::enumeration::{effective_sections, strictly_effective_sections, EnumConfig, SectionSet};
use crate::error::{Error, Result};
use crate::exact::{self, r_log_2, r_log_3, r_log_r, LogReal, Rational};
use crate::minima::successive_minima;
use crate::norm::NormedModule;
use crate::volume::{euler_characteristic, ChiReport};

pub const INTERVAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    Exact,
    Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub name: String,
    #[serde(serialize_with = "exact::real::serialize")]
    pub lhs: f64,
    #[serde(serialize_with = "exact::real::serialize")]
    pub rhs: f64,
    #[serde(serialize_with = "exact::real::serialize")]
    pub slack: f64,
    pub holds: bool,
    pub verdict: Verdict,
    pub mode: CheckMode,
    pub instance_digest: String,
}

/// A real quantity: exact when every ingredient is, otherwise a float with
/// an accumulated standard error.
#[derive(Clone, Debug)]
pub struct Quantity {
    pub exact: Option<LogReal>,
    pub approx: f64,
    pub sigma: f64,
}

impl Quantity {
    pub fn exact(l: LogReal) -> Self {
        Quantity { approx: l.to_f64(), exact: Some(l), sigma: 0.0 }
    }

    pub fn approx(value: f64, sigma: f64) -> Self {
        Quantity { exact: None, approx: value, sigma }
    }

    pub fn zero() -> Self {
        Self::exact(LogReal::zero())
    }

    pub fn rational(q: Rational) -> Self {
        Self::exact(LogReal::constant(q))
    }

    pub fn chi(c: &ChiReport) -> Self {
        match &c.exact {
            Some(l) => Self::exact(l.clone()),
            None => Self::approx(c.chi, c.stderr),
        }
    }

    /// Absolute value, decided exactly when possible.
    pub fn abs(self) -> Result<Self> {
        match &self.exact {
            Some(l) => Ok(if l.is_nonnegative()? { self } else { -self }),
            None => Ok(Quantity { approx: self.approx.abs(), ..self }),
        }
    }
}

impl Add for Quantity {
    type Output = Quantity;
    fn add(self, o: Quantity) -> Quantity {
        Quantity {
            exact: self.exact.zip(o.exact).map(|(a, b)| a + b),
            approx: self.approx + o.approx,
            sigma: self.sigma + o.sigma,
        }
    }
}

impl Neg for Quantity {
    type Output = Quantity;
    fn neg(self) -> Quantity {
        Quantity { exact: self.exact.map(|a| -a), approx: -self.approx, sigma: self.sigma }
    }
}

impl Sub for Quantity {
    type Output = Quantity;
    fn sub(self, o: Quantity) -> Quantity {
        self + (-o)
    }
}

/// Checks `lhs ≤ rhs`.
pub fn compare(name: &str, lhs: Quantity, rhs: Quantity, digest: &str) -> Result<InequalityReport> {
    let mut slack = rhs.approx - lhs.approx;
    let (mode, holds, verdict) = match (&lhs.exact, &rhs.exact) {
        (Some(l), Some(r)) => {
            let ord = l.cmp_exact(r)?;
            if ord == Ordering::Equal {
                slack = 0.0;
            }
            let holds = ord != Ordering::Greater;
            (CheckMode::Exact, holds, if holds { Verdict::Holds } else { Verdict::Violated })
        }
        _ if lhs.sigma == 0.0 && rhs.sigma == 0.0 => {
            // exact inputs with a transcendental constant (π); never tight
            let holds = slack >= 0.0;
            (CheckMode::Exact, holds, if holds { Verdict::Holds } else { Verdict::Violated })
        }
        _ => {
            let guard = 4.0 * (lhs.sigma + rhs.sigma) + INTERVAL_TOL;
            let holds = slack >= -INTERVAL_TOL;
            let verdict = if holds {
                Verdict::Holds
            } else if slack < -guard {
                Verdict::Violated
            } else {
                Verdict::Inconclusive
            };
            (CheckMode::Interval, holds, verdict)
        }
    };
    Ok(InequalityReport {
        name: name.to_string(),
        lhs: lhs.approx,
        rhs: rhs.approx,
        slack,
        holds,
        verdict,
        mode,
        instance_digest: digest.to_string(),
    })
}

/// Checks `lhs ≤ rhs` for plain floating-point sides with tolerance `tol`.
pub fn compare_real(name: &str, lhs: f64, rhs: f64, tol: f64, digest: &str) -> InequalityReport {
    let slack = rhs - lhs;
    let holds = slack >= -tol;
    InequalityReport {
        name: name.to_string(),
        lhs,
        rhs,
        slack,
        holds,
        verdict: if holds { Verdict::Holds } else { Verdict::Violated },
        mode: CheckMode::Interval,
        instance_digest: digest.to_string(),
    }
}

fn log_count(s: &SectionSet) -> Quantity {
    Quantity::exact(LogReal::ln_int(s.count))
}

fn rank_of(m: &NormedModule) -> u64 {
    m.rank() as u64
}

/// Twisting down by `α ≥ 0` loses at most `r(α + ln 3)` of `ĥ⁰`, for both
/// closed and strict section counts.
pub fn check_norm_scaling(m: &NormedModule, alpha: &Rational, cfg: &EnumConfig) -> Result<Vec<InequalityReport>> {
    if alpha.is_negative() {
        return Err(Error::PreconditionViolated("twist parameter must be nonnegative".into()));
    }
    let d = m.short_digest();
    let r = rank_of(m);
    let shrunk = m.twist(&-alpha.clone());
    let error = Quantity::rational(alpha * exact::int(r as i64)) + Quantity::exact(r_log_3(r));
    let mut out = Vec::with_capacity(4);
    for (tag, full, small) in [
        ("h0", effective_sections(m, cfg)?, effective_sections(&shrunk, cfg)?),
        ("h0_sef", strictly_effective_sections(m, cfg)?, strictly_effective_sections(&shrunk, cfg)?),
    ] {
        out.push(compare(&format!("{tag}_twist_monotone"), log_count(&small), log_count(&full), &d)?);
        out.push(compare(
            &format!("{tag}_twist_growth"),
            log_count(&full),
            log_count(&small) + error.clone(),
            &d,
        )?);
    }
    Ok(out)
}

/// `ĥ⁰_sef ≤ ĥ⁰ ≤ ĥ⁰_sef + r ln 3`.
pub fn check_sef_gap(m: &NormedModule, cfg: &EnumConfig) -> Result<Vec<InequalityReport>> {
    let d = m.short_digest();
    let closed = log_count(&effective_sections(m, cfg)?);
    let open = log_count(&strictly_effective_sections(m, cfg)?);
    Ok(vec![
        compare("sef_below_h0", open.clone(), closed.clone(), &d)?,
        compare("h0_below_sef_plus_r_log3", closed, open + Quantity::exact(r_log_3(rank_of(m))), &d)?,
    ])
}

/// Upper and lower bounds of `ĥ⁰` along `0 = α₀ ≤ α₁ ≤ … ≤ α_n`, with
/// `r_i` the span rank of the sections of `M̄(−α_i)`. The strict variant uses
/// strict sections throughout.
pub fn check_filtration(m: &NormedModule, alphas: &[Rational], cfg: &EnumConfig) -> Result<Vec<InequalityReport>> {
    if alphas.first().is_none_or(|a| !a.is_zero()) {
        return Err(Error::PreconditionViolated("filtration must start at 0".into()));
    }
    if alphas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::PreconditionViolated("filtration must be nondecreasing".into()));
    }
    let d = m.short_digest();
    let mut out = Vec::with_capacity(4);
    for (tag, strict) in [("h0", false), ("h0_sef", true)] {
        let mut sets = Vec::with_capacity(alphas.len());
        for a in alphas {
            let t = m.twist(&-a.clone());
            sets.push(if strict { strictly_effective_sections(&t, cfg)? } else { effective_sections(&t, cfg)? });
        }
        let ranks: Vec<i64> = sets.iter().map(|s| s.span_rank() as i64).collect();
        let r0 = ranks[0] as u64;
        let mut upper_sum = Rational::zero();
        let mut lower_sum = Rational::zero();
        for i in 1..alphas.len() {
            let step = &alphas[i] - &alphas[i - 1];
            upper_sum += &step * exact::int(ranks[i - 1]);
            lower_sum += &step * exact::int(ranks[i]);
        }
        let h = log_count(&sets[0]);
        let h_last = log_count(sets.last().expect("nonempty"));
        let upper = h_last
            + Quantity::rational(upper_sum)
            + Quantity::exact(r_log_r(r0).times(4))
            + Quantity::exact(r_log_3(r0).times(2));
        let lower =
            Quantity::rational(lower_sum) - Quantity::exact(r_log_r(r0).times(2)) - Quantity::exact(r_log_3(r0));
        out.push(compare(&format!("{tag}_filtration_upper"), h.clone(), upper, &d)?);
        out.push(compare(&format!("{tag}_filtration_lower"), lower, h, &d)?);
    }
    Ok(out)
}

/// `r ln 2 − ln r! ≤ χ − Σ μ_i ≤ r ln 2`.
pub fn check_second_minima(
    m: &NormedModule,
    samples: u64,
    seed: u64,
    cfg: &EnumConfig,
) -> Result<Vec<InequalityReport>> {
    let d = m.short_digest();
    let r = rank_of(m);
    let chi = Quantity::chi(&euler_characteristic(m, samples, seed)?);
    let mu_sum = if r == 0 { Quantity::zero() } else { Quantity::exact(successive_minima(m, cfg)?.mu_sum()) };
    let middle = chi - mu_sum;
    let top = Quantity::exact(r_log_2(r));
    let bottom = top.clone() - Quantity::exact(LogReal::ln_int(exact::factorial(r)));
    Ok(vec![
        compare("minkowski_second_lower", bottom, middle.clone(), &d)?,
        compare("minkowski_second_upper", middle, top, &d)?,
    ])
}

/// `|ĥ⁰ − Σ max(μ_i, 0)| ≤ r ln 3 + 2r ln r`, and the same for `ĥ⁰_sef`.
pub fn check_gs_count(m: &NormedModule, cfg: &EnumConfig) -> Result<Vec<InequalityReport>> {
    let d = m.short_digest();
    let r = rank_of(m);
    let pos = if r == 0 {
        Quantity::zero()
    } else {
        Quantity::exact(successive_minima(m, cfg)?.positive_mu_sum()?)
    };
    let bound = Quantity::exact(r_log_3(r) + r_log_r(r).times(2));
    let closed = log_count(&effective_sections(m, cfg)?);
    let open = log_count(&strictly_effective_sections(m, cfg)?);
    Ok(vec![
        compare("h0_minima_count", (closed - pos.clone()).abs()?, bound.clone(), &d)?,
        compare("h0_sef_minima_count", (open - pos).abs()?, bound, &d)?,
    ])
}

/// `χ ≤ ĥ⁰ + r ln 2`.
pub fn check_minkowski_count(
    m: &NormedModule,
    samples: u64,
    seed: u64,
    cfg: &EnumConfig,
) -> Result<InequalityReport> {
    let chi = Quantity::chi(&euler_characteristic(m, samples, seed)?);
    let h = log_count(&effective_sections(m, cfg)?);
    compare("minkowski_count", chi, h + Quantity::exact(r_log_2(rank_of(m))), &m.short_digest())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use crate::norm::{make_normed_module, NormSpec};

    fn cfg() -> EnumConfig {
        EnumConfig::with_budget(10_000_000)
    }

    fn z1() -> NormedModule {
        make_normed_module(1, NormSpec::sup(1)).unwrap()
    }

    fn e2() -> NormedModule {
        make_normed_module(2, NormSpec::euclidean(2)).unwrap()
    }

    fn box41() -> NormedModule {
        make_normed_module(
            2,
            NormSpec::PolyMax { functionals: vec![vec![rat(1, 4), int(0)], vec![int(0), int(1)]] },
        )
        .unwrap()
    }

    fn all_hold(reps: &[InequalityReport]) {
        for r in reps {
            assert!(r.holds && r.verdict == Verdict::Holds, "{r:?}");
        }
    }

    #[test]
    fn norm_scaling_rank_one() {
        let reps = check_norm_scaling(&z1(), &int(1), &cfg()).unwrap();
        all_hold(&reps);
        let growth = &reps[1];
        assert_eq!(growth.name, "h0_twist_growth");
        assert!((growth.lhs - 3f64.ln()).abs() < 1e-15);
        assert!((growth.slack - 1.0).abs() < 1e-12);
        assert_eq!(growth.mode, CheckMode::Exact);
    }

    #[test]
    fn norm_scaling_zero_alpha_and_box() {
        let reps = check_norm_scaling(&e2(), &int(0), &cfg()).unwrap();
        all_hold(&reps);
        assert_eq!(reps[0].slack, 0.0);
        assert!((reps[1].slack - 2.0 * 3f64.ln()).abs() < 1e-12);
        all_hold(&check_norm_scaling(&box41(), &rat(1, 2), &cfg()).unwrap());
        assert!(check_norm_scaling(&e2(), &int(-1), &cfg()).is_err());
    }

    #[test]
    fn sef_gap_examples() {
        let reps = check_sef_gap(&e2(), &cfg()).unwrap();
        all_hold(&reps);
        assert!((reps[1].lhs - 5f64.ln()).abs() < 1e-15);
        let tight = check_sef_gap(&z1(), &cfg()).unwrap();
        all_hold(&tight);
        assert_eq!(tight[1].slack, 0.0);
        all_hold(&check_sef_gap(&make_normed_module(0, NormSpec::sup(0)).unwrap(), &cfg()).unwrap());
    }

    #[test]
    fn filtration_examples() {
        all_hold(&check_filtration(&e2(), &[int(0)], &cfg()).unwrap());
        all_hold(&check_filtration(&box41(), &[int(0), int(1), int(2)], &cfg()).unwrap());
        all_hold(&check_filtration(&z1(), &[int(0), rat(1, 3), int(5)], &cfg()).unwrap());
        assert!(check_filtration(&z1(), &[int(1)], &cfg()).is_err());
        assert!(check_filtration(&z1(), &[int(0), int(2), int(1)], &cfg()).is_err());
    }

    #[test]
    fn second_minima_examples() {
        let reps = check_second_minima(&e2(), 0, 0, &cfg()).unwrap();
        all_hold(&reps);
        assert!((reps[1].lhs - std::f64::consts::PI.ln()).abs() < 1e-12);
        let bx = check_second_minima(&box41(), 0, 0, &cfg()).unwrap();
        all_hold(&bx);
        assert_eq!(bx[1].slack, 0.0);
        let z = check_second_minima(&z1(), 0, 0, &cfg()).unwrap();
        all_hold(&z);
        assert_eq!(z[0].slack, 0.0);
        assert_eq!(z[1].slack, 0.0);
    }

    #[test]
    fn gs_count_examples() {
        let bx = check_gs_count(&box41(), &cfg()).unwrap();
        all_hold(&bx);
        assert!((bx[0].lhs - (27f64.ln() - 4f64.ln())).abs() < 1e-12);
        let z = check_gs_count(&z1(), &cfg()).unwrap();
        all_hold(&z);
        assert_eq!(z[0].slack, 0.0);
        all_hold(&check_gs_count(&e2(), &cfg()).unwrap());
    }

    #[test]
    fn minkowski_count_examples() {
        for m in [e2(), z1(), box41()] {
            let rep = check_minkowski_count(&m, 0, 0, &cfg()).unwrap();
            assert!(rep.holds, "{rep:?}");
        }
    }

    #[test]
    fn interval_mode_guard_band() {
        let lhs = Quantity::approx(1.0, 0.01);
        let near = compare("x", lhs.clone(), Quantity::rational(rat(99, 100)), "d").unwrap();
        assert_eq!(near.mode, CheckMode::Interval);
        assert_eq!(near.verdict, Verdict::Inconclusive);
        let far = compare("x", lhs, Quantity::rational(rat(1, 2)), "d").unwrap();
        assert_eq!(far.verdict, Verdict::Violated);
        assert!(!far.holds);
    }
}
