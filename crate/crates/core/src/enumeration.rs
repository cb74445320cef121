//! Exact enumeration of effective (`‖v‖ ≤ 1`) and strictly effective
//! (`‖v‖ < 1`) lattice vectors.
//!
//! Ellipsoids are scanned Fincke–Pohst style: a floating-point `UᵀDU`
//! factorisation prunes branches with a conservative margin, and every
//! surviving leaf is re-checked in exact integer arithmetic. Polymax norms
//! prune with exact per-coordinate interval propagation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, cmp_exp, Rational};
use crate::norm::{BaseValue, IntegerForm, NormedModule};

pub use crate::linalg::span_rank;

pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Environment variable that overrides [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "LATMIN_BUDGET";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnumConfig {
    /// Maximum number of candidate points in the enclosing box.
    pub budget: u64,
}

impl EnumConfig {
    pub fn with_budget(budget: u64) -> Self {
        EnumConfig { budget }
    }

    /// Budget from `LATMIN_BUDGET` when set and valid, otherwise the default.
    pub fn from_env() -> Self {
        let budget = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_BUDGET);
        EnumConfig { budget }
    }
}

impl Default for EnumConfig {
    fn default() -> Self {
        Self::from_env()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    /// `‖v‖ ≤ 1`
    Closed,
    /// `‖v‖ < 1`
    Open,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectionSet {
    /// Lexicographically sorted.
    pub vectors: Vec<Vec<i64>>,
    pub threshold_kind: ThresholdKind,
    pub count: u64,
    #[serde(serialize_with = "exact::real::serialize")]
    pub log_count: f64,
}

impl SectionSet {
    fn new(vectors: Vec<Vec<i64>>, threshold_kind: ThresholdKind) -> Self {
        let count = vectors.len() as u64;
        SectionSet {
            vectors,
            threshold_kind,
            count,
            log_count: (count as f64).ln(),
        }
    }

    pub fn span_rank(&self) -> usize {
        span_rank(&self.vectors)
    }
}

pub fn effective_sections(module: &NormedModule, cfg: &EnumConfig) -> Result<SectionSet> {
    let v = enumerate_ball(module, &Rational::one(), false, cfg.budget)?;
    Ok(SectionSet::new(v, ThresholdKind::Closed))
}

pub fn strictly_effective_sections(module: &NormedModule, cfg: &EnumConfig) -> Result<SectionSet> {
    let v = enumerate_ball(module, &Rational::one(), true, cfg.budget)?;
    Ok(SectionSet::new(v, ThresholdKind::Open))
}

/// `ĥ⁰ = ln #{v : ‖v‖ ≤ 1}`.
pub fn h0_hat(module: &NormedModule, cfg: &EnumConfig) -> Result<f64> {
    Ok(effective_sections(module, cfg)?.log_count)
}

/// `ĥ⁰_sef = ln #{v : ‖v‖ < 1}`.
pub fn h0_hat_sef(module: &NormedModule, cfg: &EnumConfig) -> Result<f64> {
    Ok(strictly_effective_sections(module, cfg)?.log_count)
}

/// Product of `2B_k + 1` over the box.
pub fn box_point_count(bounds: &[BigInt]) -> BigInt {
    bounds
        .iter()
        .fold(BigInt::one(), |acc, b| acc * (b * BigInt::from(2) + BigInt::one()))
}

fn checked_bounds(bounds: &[BigInt], budget: u64) -> Result<Vec<i64>> {
    let predicted = box_point_count(bounds);
    if predicted > BigInt::from(budget) {
        return Err(Error::EnumerationBudgetExceeded {
            predicted: predicted.to_string(),
            budget,
        });
    }
    Ok(bounds.iter().map(|b| b.to_i64().expect("bounded by budget")).collect())
}

/// All `v ∈ ℤ^r` with `‖v‖ ≤ radius` (or `< radius` when `strict`), sorted.
pub(crate) fn enumerate_ball(
    module: &NormedModule,
    radius: &Rational,
    strict: bool,
    budget: u64,
) -> Result<Vec<Vec<i64>>> {
    let r = module.rank();
    if r == 0 {
        return Ok(if strict && radius.is_zero() { vec![] } else { vec![vec![]] });
    }
    let bounds = checked_bounds(&module.ball_box(radius)?, budget)?;
    let limit = module.ball_limit(radius, strict)?;
    if limit < 0 {
        return Ok(Vec::new());
    }
    let form = &module.compiled().form;
    check_range(form, &bounds)?;
    let mut out = match form {
        IntegerForm::Quadratic { gram, .. } => enumerate_quadratic(gram, &bounds, limit, form),
        IntegerForm::Linear { rows, .. } => enumerate_linear(rows, &bounds, limit),
    };
    out.sort_unstable();
    Ok(out)
}

/// Rejects boxes whose exact evaluation could overflow `i128`.
fn check_range(form: &IntegerForm, bounds: &[i64]) -> Result<()> {
    let s: f64 = bounds.iter().map(|&b| b as f64).sum::<f64>() + 1.0;
    let max_coef = match form {
        IntegerForm::Quadratic { gram, .. } => gram.iter().flatten().map(|g| g.unsigned_abs()).max(),
        IntegerForm::Linear { rows, .. } => rows.iter().flatten().map(|g| g.unsigned_abs()).max(),
    }
    .unwrap_or(0) as f64;
    if max_coef * s * s * (bounds.len() as f64).powi(2) > 1e35 {
        return Err(Error::NumericRange("enumeration box too large for exact evaluation".into()));
    }
    Ok(())
}

struct UdU {
    d: Vec<f64>,
    /// u[i][j] for j > i
    u: Vec<Vec<f64>>,
}

fn udu(gram: &[Vec<i128>]) -> UdU {
    let n = gram.len();
    let g: Vec<Vec<f64>> = gram.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
    let mut d = vec![0.0; n];
    let mut u = vec![vec![0.0; n]; n];
    for i in 0..n {
        d[i] = g[i][i] - (0..i).map(|k| d[k] * u[k][i] * u[k][i]).sum::<f64>();
        for j in i + 1..n {
            u[i][j] = (g[i][j] - (0..i).map(|k| d[k] * u[k][i] * u[k][j]).sum::<f64>()) / d[i];
        }
    }
    UdU { d, u }
}

struct QuadSearch<'a> {
    f: &'a UdU,
    bounds: &'a [i64],
    limit: i128,
    limit_f: f64,
    tol: f64,
    form: &'a IntegerForm,
}

impl QuadSearch<'_> {
    fn level(&self, i: usize, x: &mut [i64], partial: f64, out: &mut Vec<Vec<i64>>) {
        let n = x.len();
        let center = -(i + 1..n).map(|j| self.f.u[i][j] * x[j] as f64).sum::<f64>();
        let rem = self.limit_f - partial;
        if rem < -self.tol {
            return;
        }
        let w = ((rem.max(0.0) + self.tol) / self.f.d[i]).sqrt() * (1.0 + 1e-9) + 1e-6;
        let lo = ((center - w).ceil() as i64).max(-self.bounds[i]);
        let hi = ((center + w).floor() as i64).min(self.bounds[i]);
        for xi in lo..=hi {
            x[i] = xi;
            let t = xi as f64 - center;
            let p = partial + self.f.d[i] * t * t;
            if i == 0 {
                if p <= self.limit_f + self.tol {
                    match self.form.raw_value(x) {
                        Some(v) if v <= self.limit => out.push(x.to_vec()),
                        _ => {}
                    }
                }
            } else {
                self.level(i - 1, x, p, out);
            }
        }
        x[i] = 0;
    }
}

fn enumerate_quadratic(
    gram: &[Vec<i128>],
    bounds: &[i64],
    limit: i128,
    form: &IntegerForm,
) -> Vec<Vec<i64>> {
    let n = gram.len();
    let f = udu(gram);
    let search = QuadSearch {
        f: &f,
        bounds,
        limit,
        limit_f: limit as f64,
        tol: 1e-7 * (limit as f64 + 1.0),
        form,
    };
    let top = n - 1;
    let chunks: Vec<Vec<Vec<i64>>> = (-bounds[top]..=bounds[top])
        .into_par_iter()
        .map(|xt| {
            let mut out = Vec::new();
            let mut x = vec![0i64; n];
            x[top] = xt;
            let t = xt as f64;
            let p = f.d[top] * t * t;
            if p > search.limit_f + search.tol {
                return out;
            }
            if top == 0 {
                if matches!(form.raw_value(&x), Some(v) if v <= limit) {
                    out.push(x);
                }
            } else {
                search.level(top - 1, &mut x, p, &mut out);
            }
            out
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

struct LinSearch<'a> {
    rows: &'a [Vec<i128>],
    bounds: &'a [i64],
    limit: i128,
    /// suffix[j][k] = Σ_{k' ≥ k} |row_j[k']|·B_k'
    suffix: Vec<Vec<i128>>,
}

impl LinSearch<'_> {
    fn range(&self, i: usize, partial: &[i128]) -> Option<(i64, i64)> {
        let mut lo = -(self.bounds[i] as i128);
        let mut hi = self.bounds[i] as i128;
        for (j, row) in self.rows.iter().enumerate() {
            let a = row[i];
            let s = self.suffix[j][i + 1];
            let p = partial[j];
            if a == 0 {
                if p.abs() - s > self.limit {
                    return None;
                }
                continue;
            }
            // |p + a x| ≤ L + s
            let (num_lo, num_hi) = (-self.limit - s - p, self.limit + s - p);
            let (l, h) = if a > 0 {
                (Integer::div_ceil(&num_lo, &a), Integer::div_floor(&num_hi, &a))
            } else {
                (Integer::div_ceil(&num_hi, &a), Integer::div_floor(&num_lo, &a))
            };
            lo = lo.max(l);
            hi = hi.min(h);
            if lo > hi {
                return None;
            }
        }
        Some((lo as i64, hi as i64))
    }

    fn level(&self, i: usize, x: &mut [i64], partial: &mut [i128], out: &mut Vec<Vec<i64>>) {
        let n = x.len();
        let Some((lo, hi)) = self.range(i, partial) else {
            return;
        };
        for xi in lo..=hi {
            x[i] = xi;
            for (j, row) in self.rows.iter().enumerate() {
                partial[j] += row[i] * xi as i128;
            }
            if i + 1 == n {
                if partial.iter().all(|p| p.abs() <= self.limit) {
                    out.push(x.to_vec());
                }
            } else {
                self.level(i + 1, x, partial, out);
            }
            for (j, row) in self.rows.iter().enumerate() {
                partial[j] -= row[i] * xi as i128;
            }
        }
        x[i] = 0;
    }
}

fn enumerate_linear(rows: &[Vec<i128>], bounds: &[i64], limit: i128) -> Vec<Vec<i64>> {
    let n = bounds.len();
    let suffix: Vec<Vec<i128>> = rows
        .iter()
        .map(|row| {
            let mut s = vec![0i128; n + 1];
            for k in (0..n).rev() {
                s[k] = s[k + 1] + row[k].abs() * bounds[k] as i128;
            }
            s
        })
        .collect();
    let search = LinSearch { rows, bounds, limit, suffix };
    let zero = vec![0i128; rows.len()];
    let Some((lo, hi)) = search.range(0, &zero) else {
        return Vec::new();
    };
    let chunks: Vec<Vec<Vec<i64>>> = (lo..=hi)
        .into_par_iter()
        .map(|x0| {
            let mut out = Vec::new();
            let mut x = vec![0i64; n];
            x[0] = x0;
            let mut partial: Vec<i128> = rows.iter().map(|row| row[0] * x0 as i128).collect();
            if n == 1 {
                if partial.iter().all(|p| p.abs() <= limit) {
                    out.push(x);
                }
            } else {
                search.level(1, &mut x, &mut partial, &mut out);
            }
            out
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// A rational `ε > 0` with `Ĥ⁰(M̄(−ε₀)) = Ĥ⁰_sef(M̄)` for all `0 < ε₀ ≤ ε`.
///
/// With `m` the largest norm below 1, `e^{−ε} ≥ 1 − ε > m` once `ε ≤ (1 − m)/2`;
/// a certified rational upper bound on `m` keeps the result rational.
pub fn sef_limit_epsilon(module: &NormedModule, cfg: &EnumConfig) -> Result<Rational> {
    let open = strictly_effective_sections(module, cfg)?;
    let mut best: Option<Rational> = None;
    for v in open.vectors.iter().filter(|v| v.iter().any(|&c| c != 0)) {
        let value = module.norm_eval(v)?;
        let upper = upper_bound_below_one(&value)?;
        if best.as_ref().is_none_or(|b| &upper > b) {
            best = Some(upper);
        }
    }
    Ok(match best {
        None => exact::rat(1, 2),
        Some(m) => (Rational::one() - m) / exact::int(2),
    })
}

/// Rational `u` with `‖v‖ ≤ u < 1`, given `‖v‖ < 1`.
fn upper_bound_below_one(value: &crate::norm::NormValue) -> Result<Rational> {
    let (q, beta, squared) = match &value.base {
        BaseValue::Squared(q) => (q.clone(), -&value.alpha * exact::int(2), true),
        BaseValue::Linear(q) => (q.clone(), -value.alpha.clone(), false),
    };
    // value (or its square) = q·e^β
    for bits in [64u64, 128, 256, 512] {
        let (_, hi) = exact::exp_enclosure(&beta, bits);
        let u = &q * &hi;
        if u < Rational::one() {
            // for squares, m ≤ sqrt(u) ≤ (1 + u)/2 < 1
            return Ok(if squared { (Rational::one() + u) / exact::int(2) } else { u });
        }
    }
    let _ = cmp_exp(&q, &-beta)?;
    Err(Error::Undecidable("norm too close to 1".into()))
}

/// Whether `q` is a perfect square of a rational (helper for tests and reports).
pub fn is_rational_square(q: &Rational) -> bool {
    if q.is_negative() {
        return false;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    &n * &n == *q.numer() && &d * &d == *q.denom()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use crate::norm::{make_normed_module, NormSpec};

    fn cfg() -> EnumConfig {
        EnumConfig::with_budget(10_000_000)
    }

    fn box41() -> NormedModule {
        make_normed_module(
            2,
            NormSpec::PolyMax { functionals: vec![vec![rat(1, 4), int(0)], vec![int(0), int(1)]] },
        )
        .unwrap()
    }

    #[test]
    fn euclidean_plane_sections() {
        let m = make_normed_module(2, NormSpec::euclidean(2)).unwrap();
        let closed = effective_sections(&m, &cfg()).unwrap();
        assert_eq!(closed.count, 5);
        assert_eq!(
            closed.vectors,
            vec![vec![-1, 0], vec![0, -1], vec![0, 0], vec![0, 1], vec![1, 0]]
        );
        let open = strictly_effective_sections(&m, &cfg()).unwrap();
        assert_eq!(open.vectors, vec![vec![0, 0]]);
        assert_eq!(open.log_count, 0.0);
    }

    #[test]
    fn box_norm_count() {
        let s = effective_sections(&box41(), &cfg()).unwrap();
        assert_eq!(s.count, 27);
        assert!((s.log_count - 27f64.ln()).abs() < 1e-15);
        assert_eq!(s.span_rank(), 2);
    }

    #[test]
    fn negative_twist_leaves_only_zero() {
        let m = make_normed_module(1, NormSpec::sup(1)).unwrap().twist(&int(-1));
        assert_eq!(effective_sections(&m, &cfg()).unwrap().vectors, vec![vec![0]]);
    }

    #[test]
    fn h0_values() {
        let z = make_normed_module(1, NormSpec::sup(1)).unwrap();
        assert!((h0_hat(&z, &cfg()).unwrap() - 3f64.ln()).abs() < 1e-15);
        let e = make_normed_module(2, NormSpec::euclidean(2)).unwrap();
        assert!((h0_hat(&e, &cfg()).unwrap() - 5f64.ln()).abs() < 1e-15);
        assert_eq!(h0_hat_sef(&e, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn rank_zero_module_has_one_section() {
        let m = make_normed_module(0, NormSpec::sup(0)).unwrap();
        assert_eq!(effective_sections(&m, &cfg()).unwrap().count, 1);
        assert_eq!(strictly_effective_sections(&m, &cfg()).unwrap().count, 1);
    }

    #[test]
    fn budget_is_enforced() {
        let m = make_normed_module(3, NormSpec::sup(3)).unwrap().twist(&int(5));
        let err = effective_sections(&m, &EnumConfig::with_budget(1000)).unwrap_err();
        assert!(matches!(err, Error::EnumerationBudgetExceeded { .. }));
    }

    #[test]
    fn skewed_ellipsoid_matches_scan() {
        let gram = vec![
            vec![int(5), int(2), int(-1)],
            vec![int(2), int(3), int(1)],
            vec![int(-1), int(1), int(2)],
        ];
        let m = make_normed_module(3, NormSpec::Ellipsoid { gram }).unwrap().twist(&rat(13, 10));
        let got = effective_sections(&m, &cfg()).unwrap().vectors;
        let b: Vec<i64> = m.enclosing_box().unwrap().iter().map(|x| x.to_i64().unwrap()).collect();
        let mut want = Vec::new();
        for x in -b[0]..=b[0] {
            for y in -b[1]..=b[1] {
                for z in -b[2]..=b[2] {
                    if m.norm_eval(&[x, y, z]).unwrap().le_one().unwrap() {
                        want.push(vec![x, y, z]);
                    }
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn sef_epsilon_reproduces_open_set() {
        for m in [box41(), make_normed_module(2, NormSpec::euclidean(2)).unwrap().twist(&rat(1, 3))] {
            let eps = sef_limit_epsilon(&m, &cfg()).unwrap();
            assert!(eps.is_positive());
            let open = strictly_effective_sections(&m, &cfg()).unwrap().vectors;
            for k in [1, 2, 7] {
                let e0 = &eps / int(k);
                let shrunk = effective_sections(&m.twist(&-e0), &cfg()).unwrap().vectors;
                assert_eq!(shrunk, open);
            }
        }
    }

    #[test]
    fn rational_squares() {
        assert!(is_rational_square(&rat(9, 4)));
        assert!(!is_rational_square(&rat(2, 1)));
    }
}
