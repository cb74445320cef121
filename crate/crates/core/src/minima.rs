//! Successive minima `λ_i` and logarithmic minima `μ_i = −ln λ_i`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::enumeration::{enumerate_ball, EnumConfig};
use crate::error::{Error, Result};
use crate::exact::{self, LogReal, Rational};
use crate::linalg::IntEchelon;
use crate::norm::{BaseValue, IntegerForm, NormValue, NormedModule};

#[derive(Clone, Debug, Serialize)]
pub struct MinimaReport {
    #[serde(serialize_with = "exact::real::serialize_vec")]
    pub lambdas: Vec<f64>,
    #[serde(serialize_with = "exact::real::serialize_vec")]
    pub mus: Vec<f64>,
    pub witnesses: Vec<Vec<i64>>,
    /// Exact `λ_i` as expressions, e.g. `sqrt(2)` or `exp(-(1/3))*1/4`.
    pub lambdas_exact: Vec<String>,
    #[serde(skip)]
    pub lambda_values: Vec<NormValue>,
    #[serde(skip)]
    pub mu_exact: Vec<LogReal>,
}

impl MinimaReport {
    /// `Σ μ_i`, exactly.
    pub fn mu_sum(&self) -> LogReal {
        self.mu_exact.iter().cloned().sum()
    }

    /// `Σ max(μ_i, 0)`, exactly.
    pub fn positive_mu_sum(&self) -> Result<LogReal> {
        let mut acc = LogReal::zero();
        for m in &self.mu_exact {
            acc = acc + m.max_zero()?;
        }
        Ok(acc)
    }
}

/// Rational `R ≥ √q`.
fn sqrt_upper(q: &Rational) -> Rational {
    let scale = BigInt::one() << 20u32;
    let scaled = exact::ceil_to_bigint(&(q * Rational::from_integer(&scale * &scale)));
    Rational::new(scaled.sqrt() + BigInt::one(), scale)
}

/// Upper bound on `base(e_k)` for the cheapest unit vector, and for the dearest.
fn unit_vector_radii(module: &NormedModule) -> Result<(Rational, Rational)> {
    let r = module.rank();
    let mut radii = Vec::with_capacity(r);
    for k in 0..r {
        let mut e = vec![0i64; r];
        e[k] = 1;
        radii.push(match module.norm_eval(&e)?.base {
            BaseValue::Squared(q) => sqrt_upper(&q),
            BaseValue::Linear(q) => q,
        });
    }
    let lo = radii.iter().min().cloned().expect("rank ≥ 1");
    let hi = radii.iter().max().cloned().expect("rank ≥ 1");
    Ok((lo, hi))
}

pub fn successive_minima(module: &NormedModule, cfg: &EnumConfig) -> Result<MinimaReport> {
    let r = module.rank();
    if r == 0 {
        return Err(Error::PreconditionViolated("successive minima need rank ≥ 1".into()));
    }
    let base = module.untwisted();
    let (mut radius, cap) = unit_vector_radii(&base)?;
    let form = &base.compiled().form;
    loop {
        let mut ball = enumerate_ball(&base, &radius, false, cfg.budget)?;
        ball.retain(|v| v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0));
        let mut keyed: Vec<(i128, Vec<i64>)> = ball
            .into_iter()
            .map(|v| Ok((raw(form, &v)?, v)))
            .collect::<Result<_>>()?;
        keyed.sort_unstable();
        let mut ech = IntEchelon::new();
        let mut witnesses = Vec::with_capacity(r);
        for (_, v) in keyed {
            if ech.insert(&v) {
                witnesses.push(v);
                if witnesses.len() == r {
                    break;
                }
            }
        }
        if witnesses.len() == r {
            return report(module, witnesses);
        }
        if radius >= cap {
            unreachable!("unit vectors lie in the ball of radius {cap}");
        }
        radius = (radius * exact::int(2)).min(cap.clone());
    }
}

fn raw(form: &IntegerForm, v: &[i64]) -> Result<i128> {
    form.raw_value(v)
        .ok_or_else(|| Error::NumericRange("norm evaluation overflow".into()))
}

fn report(module: &NormedModule, witnesses: Vec<Vec<i64>>) -> Result<MinimaReport> {
    let mut lambda_values = Vec::with_capacity(witnesses.len());
    for w in &witnesses {
        lambda_values.push(module.norm_eval(w)?);
    }
    let mu_exact: Vec<LogReal> = lambda_values.iter().map(|l| -l.ln()).collect();
    Ok(MinimaReport {
        lambdas: lambda_values.iter().map(NormValue::to_f64).collect(),
        mus: mu_exact.iter().map(LogReal::to_f64).collect(),
        lambdas_exact: lambda_values.iter().map(|l| l.to_string()).collect(),
        witnesses,
        lambda_values,
        mu_exact,
    })
}

/// Checks the witnesses against the definition: prefix ranks increase and
/// the vectors strictly shorter than `λ_i` span rank below `i`.
pub fn witnesses_are_minimal(module: &NormedModule, report: &MinimaReport, cfg: &EnumConfig) -> Result<bool> {
    let mut prefix = IntEchelon::new();
    for (i, w) in report.witnesses.iter().enumerate() {
        if !prefix.insert(w) || module.norm_eval(w)? != report.lambda_values[i] {
            return Ok(false);
        }
        let shorter = shorter_than(module, &report.lambda_values[i], cfg)?;
        if crate::linalg::span_rank(&shorter) > i {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Nonzero vectors with norm strictly below `lam`.
fn shorter_than(module: &NormedModule, lam: &NormValue, cfg: &EnumConfig) -> Result<Vec<Vec<i64>>> {
    let base = module.untwisted();
    let base_lam = NormValue { base: lam.base.clone(), alpha: Rational::zero() };
    let radius = match &base_lam.base {
        BaseValue::Squared(q) => sqrt_upper(q),
        BaseValue::Linear(q) => q.clone(),
    };
    let mut out = Vec::new();
    for v in enumerate_ball(&base, &radius, false, cfg.budget)? {
        if v.iter().all(|&c| c == 0) {
            continue;
        }
        let val = base.norm_eval(&v)?;
        if val.base_squared() < base_lam.base_squared() {
            out.push(v);
        }
    }
    Ok(out)
}
