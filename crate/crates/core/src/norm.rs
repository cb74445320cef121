//! Normed free ℤ-modules `(ℤ^r, ‖·‖)` with exactly described norms.
//!
//! The lattice is always ℤ^r with covolume 1; a general lattice is handled by
//! pulling its norm back through a basis before construction.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::{
    self, cmp_exp, floor_mul_exp, format_rational, rational_to_f64, serde_rational, LogReal,
    Rational,
};
use crate::linalg::{self, Matrix};

/// Exact description of a symmetric norm on ℝ^r.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NormSpec {
    /// `‖x‖ = sqrt(xᵀ·gram·x)`.
    Ellipsoid {
        #[serde(with = "serde_rational::matrix")]
        gram: Matrix,
    },
    /// `‖x‖ = max_j |⟨a_j, x⟩|`.
    #[serde(rename = "polymax")]
    PolyMax {
        #[serde(with = "serde_rational::matrix")]
        functionals: Matrix,
    },
    /// `‖x‖ = e^(−alpha)·‖x‖_inner`.
    Scaled {
        inner: Box<NormSpec>,
        #[serde(with = "serde_rational")]
        alpha: Rational,
    },
}

impl NormSpec {
    pub fn euclidean(rank: usize) -> Self {
        let gram = (0..rank)
            .map(|i| (0..rank).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        NormSpec::Ellipsoid { gram }
    }

    pub fn sup(rank: usize) -> Self {
        let functionals = (0..rank)
            .map(|i| (0..rank).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        NormSpec::PolyMax { functionals }
    }

    /// Strips all `Scaled` layers, returning the base norm and the summed alpha.
    fn flatten(&self) -> (&NormSpec, Rational) {
        match self {
            NormSpec::Scaled { inner, alpha } => {
                let (base, a) = inner.flatten();
                (base, a + alpha)
            }
            other => (other, Rational::zero()),
        }
    }
}

/// The unscaled norm underlying a module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseNorm {
    Ellipsoid { gram: Matrix },
    PolyMax { functionals: Matrix },
}

/// Integer-coefficient form of the base norm used on the hot enumeration path.
///
/// Quadratic: `base(x)² = xᵀ·gram·x / denom`. Linear: `base(x) = max_j |row_j·x| / denom`.
#[derive(Clone, Debug)]
pub(crate) enum IntegerForm {
    Quadratic { gram: Vec<Vec<i128>>, denom: BigInt },
    Linear { rows: Vec<Vec<i128>>, denom: BigInt },
}

impl IntegerForm {
    /// `xᵀ·gram·x` or `max_j |row_j·x|`; `None` on overflow.
    pub(crate) fn raw_value(&self, x: &[i64]) -> Option<i128> {
        match self {
            IntegerForm::Quadratic { gram, .. } => {
                let mut acc: i128 = 0;
                for (i, row) in gram.iter().enumerate() {
                    if x[i] == 0 {
                        continue;
                    }
                    let mut dot: i128 = 0;
                    for (j, g) in row.iter().enumerate() {
                        dot = dot.checked_add(g.checked_mul(x[j] as i128)?)?;
                    }
                    acc = acc.checked_add(dot.checked_mul(x[i] as i128)?)?;
                }
                Some(acc)
            }
            IntegerForm::Linear { rows, .. } => {
                let mut best: i128 = 0;
                for row in rows {
                    let mut dot: i128 = 0;
                    for (a, &xi) in row.iter().zip(x) {
                        dot = dot.checked_add(a.checked_mul(xi as i128)?)?;
                    }
                    best = best.max(dot.checked_abs()?);
                }
                Some(best)
            }
        }
    }

    pub(crate) fn denom(&self) -> &BigInt {
        match self {
            IntegerForm::Quadratic { denom, .. } | IntegerForm::Linear { denom, .. } => denom,
        }
    }

    pub(crate) fn is_quadratic(&self) -> bool {
        matches!(self, IntegerForm::Quadratic { .. })
    }
}

#[derive(Debug)]
pub(crate) struct Compiled {
    pub(crate) form: IntegerForm,
    /// Per-coordinate box weights: `(gram⁻¹)_kk` (squared units) for
    /// ellipsoids, `Σ_j |(A⁻¹)_kj|` for polymax norms.
    pub(crate) box_weights: Vec<Rational>,
}

/// A validated, immutable normed module `(ℤ^r, e^(−alpha)·base)`.
#[derive(Clone, Debug)]
pub struct NormedModule {
    rank: usize,
    spec: NormSpec,
    base: BaseNorm,
    alpha: Rational,
    compiled: Arc<Compiled>,
}

impl PartialEq for NormedModule {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank && self.spec == other.spec
    }
}

#[derive(Serialize, Deserialize)]
struct ModuleJson {
    rank: usize,
    norm: NormSpec,
}

impl Serialize for NormedModule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModuleJson {
            rank: self.rank,
            norm: self.spec.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormedModule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ModuleJson::deserialize(d)?;
        NormedModule::new(raw.rank, raw.norm).map_err(serde::de::Error::custom)
    }
}

fn lcm_of_denominators<'a>(entries: impl Iterator<Item = &'a Rational>) -> BigInt {
    entries.fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

fn to_i128(q: &Rational, what: &str) -> Result<i128> {
    debug_assert!(q.is_integer());
    q.numer()
        .to_i128()
        .filter(|v| v.unsigned_abs() < (1u128 << 62))
        .ok_or_else(|| Error::NumericRange(format!("{what} coefficient too large")))
}

fn compile(rank: usize, base: &BaseNorm) -> Result<Compiled> {
    match base {
        BaseNorm::Ellipsoid { gram } => {
            let denom = lcm_of_denominators(gram.iter().flatten());
            let scale = Rational::from_integer(denom.clone());
            let int_gram = gram
                .iter()
                .map(|row| row.iter().map(|g| to_i128(&(g * &scale), "gram")).collect())
                .collect::<Result<Vec<Vec<i128>>>>()?;
            let inv = linalg::inverse(gram)
                .ok_or_else(|| Error::InvalidNorm("gram matrix is singular".into()))?;
            let box_weights = (0..rank).map(|k| inv[k][k].clone()).collect();
            Ok(Compiled {
                form: IntegerForm::Quadratic { gram: int_gram, denom },
                box_weights,
            })
        }
        BaseNorm::PolyMax { functionals } => {
            let denom = lcm_of_denominators(functionals.iter().flatten());
            let scale = Rational::from_integer(denom.clone());
            let rows = functionals
                .iter()
                .map(|row| row.iter().map(|a| to_i128(&(a * &scale), "functional")).collect())
                .collect::<Result<Vec<Vec<i128>>>>()?;
            let square_rows = linalg::independent_rows(functionals);
            if square_rows.len() != rank {
                return Err(Error::UnboundedBall(format!(
                    "functionals span dimension {} < rank {}",
                    square_rows.len(),
                    rank
                )));
            }
            let a: Matrix = square_rows.iter().map(|&i| functionals[i].clone()).collect();
            let inv = linalg::inverse(&a).expect("independent rows form an invertible matrix");
            let box_weights = (0..rank)
                .map(|k| inv[k].iter().fold(Rational::zero(), |acc, x| acc + x.abs()))
                .collect();
            Ok(Compiled {
                form: IntegerForm::Linear { rows, denom },
                box_weights,
            })
        }
    }
}

/// Validates `norm` against `rank` and builds the module.
pub fn make_normed_module(rank: usize, norm: NormSpec) -> Result<NormedModule> {
    NormedModule::new(rank, norm)
}

impl NormedModule {
    pub fn new(rank: usize, spec: NormSpec) -> Result<Self> {
        let (base_spec, alpha) = spec.flatten();
        let base = match base_spec {
            NormSpec::Ellipsoid { gram } => {
                if gram.len() != rank {
                    return Err(Error::DimensionMismatch { expected: rank, got: gram.len() });
                }
                if let Some(row) = gram.iter().find(|row| row.len() != rank) {
                    return Err(Error::DimensionMismatch { expected: rank, got: row.len() });
                }
                if !linalg::is_symmetric(gram) {
                    return Err(Error::InvalidNorm("gram matrix is not symmetric".into()));
                }
                if !linalg::leading_minors_positive(gram) {
                    return Err(Error::InvalidNorm(
                        "gram matrix has a nonpositive leading principal minor".into(),
                    ));
                }
                BaseNorm::Ellipsoid { gram: gram.clone() }
            }
            NormSpec::PolyMax { functionals } => {
                if let Some(row) = functionals.iter().find(|row| row.len() != rank) {
                    return Err(Error::DimensionMismatch { expected: rank, got: row.len() });
                }
                BaseNorm::PolyMax { functionals: functionals.clone() }
            }
            NormSpec::Scaled { .. } => unreachable!("flatten strips scaling"),
        };
        let compiled = Arc::new(compile(rank, &base)?);
        Ok(NormedModule { rank, spec, base, alpha, compiled })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn base(&self) -> &BaseNorm {
        &self.base
    }

    /// Accumulated twist: the norm is `e^(−alpha)` times the base norm.
    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub(crate) fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    /// `M̄(alpha) = (M, e^(−alpha)·‖·‖)`.
    pub fn twist(&self, alpha: &Rational) -> NormedModule {
        NormedModule {
            rank: self.rank,
            spec: NormSpec::Scaled {
                inner: Box::new(self.spec.clone()),
                alpha: alpha.clone(),
            },
            base: self.base.clone(),
            alpha: &self.alpha + alpha,
            compiled: Arc::clone(&self.compiled),
        }
    }

    /// The same module with its accumulated twist removed.
    pub fn untwisted(&self) -> NormedModule {
        let spec = match &self.base {
            BaseNorm::Ellipsoid { gram } => NormSpec::Ellipsoid { gram: gram.clone() },
            BaseNorm::PolyMax { functionals } => NormSpec::PolyMax { functionals: functionals.clone() },
        };
        NormedModule {
            rank: self.rank,
            spec,
            base: self.base.clone(),
            alpha: Rational::zero(),
            compiled: Arc::clone(&self.compiled),
        }
    }

    pub fn norm_eval(&self, v: &[i64]) -> Result<NormValue> {
        if v.len() != self.rank {
            return Err(Error::DimensionMismatch { expected: self.rank, got: v.len() });
        }
        let x: Vec<Rational> = v.iter().map(|&c| exact::int(c)).collect();
        let base = match &self.base {
            BaseNorm::Ellipsoid { gram } => {
                let mut acc = Rational::zero();
                for (i, row) in gram.iter().enumerate() {
                    for (j, g) in row.iter().enumerate() {
                        acc += g * &x[i] * &x[j];
                    }
                }
                BaseValue::Squared(acc)
            }
            BaseNorm::PolyMax { functionals } => {
                let best = functionals
                    .iter()
                    .map(|a| a.iter().zip(&x).fold(Rational::zero(), |s, (ai, xi)| s + ai * xi).abs())
                    .max()
                    .unwrap_or_else(Rational::zero);
                BaseValue::Linear(best)
            }
        };
        Ok(NormValue { base, alpha: self.alpha.clone() })
    }

    /// Integer bound `B_k` per coordinate with `‖x‖ ≤ 1 ⇒ |x_k| ≤ B_k`.
    pub fn enclosing_box(&self) -> Result<Vec<BigInt>> {
        self.ball_box(&Rational::one())
    }

    /// Box for `‖x‖ ≤ radius` in this module's (twisted) norm.
    pub(crate) fn ball_box(&self, radius: &Rational) -> Result<Vec<BigInt>> {
        let c = &self.compiled;
        c.box_weights
            .iter()
            .map(|w| {
                if c.form.is_quadratic() {
                    // |x_k| ≤ R e^{α} sqrt(G⁻¹_kk)
                    let sq = floor_mul_exp(&(w * radius * radius), &(&self.alpha * exact::int(2)), false)?;
                    Ok(sq.sqrt())
                } else {
                    floor_mul_exp(&(w * radius), &self.alpha, false)
                }
            })
            .collect()
    }

    /// Integer limit `L` such that `‖x‖ ≤ radius` (or `<` when `strict`) iff
    /// the integer form's raw value is at most `L`.
    pub(crate) fn ball_limit(&self, radius: &Rational, strict: bool) -> Result<i128> {
        let form = &self.compiled.form;
        let denom = Rational::from_integer(form.denom().clone());
        let lim = if form.is_quadratic() {
            floor_mul_exp(&(denom * radius * radius), &(&self.alpha * exact::int(2)), strict)?
        } else {
            floor_mul_exp(&(denom * radius), &self.alpha, strict)?
        };
        lim.to_i128()
            .filter(|v| v.unsigned_abs() < (1u128 << 120))
            .ok_or_else(|| Error::NumericRange("ball threshold too large".into()))
    }

    /// Real-valued half-widths of a box containing the unit ball.
    pub(crate) fn real_box_half_widths(&self) -> Vec<f64> {
        let scale = rational_to_f64(&self.alpha).exp();
        self.compiled
            .box_weights
            .iter()
            .map(|w| {
                let w = rational_to_f64(w);
                if self.compiled.form.is_quadratic() {
                    w.sqrt() * scale
                } else {
                    w * scale
                }
            })
            .collect()
    }

    /// Canonical JSON of the instance.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("module serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// First 16 hex characters of [`NormedModule::digest`].
    pub fn short_digest(&self) -> String {
        self.digest()[..16].to_string()
    }
}

/// The base part of a norm value before scaling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseValue {
    /// Holds `base(x)²`.
    Squared(Rational),
    /// Holds `base(x)`.
    Linear(Rational),
}

/// Exact handle for `e^(−alpha)·base(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormValue {
    pub base: BaseValue,
    pub alpha: Rational,
}

impl NormValue {
    pub fn is_zero(&self) -> bool {
        match &self.base {
            BaseValue::Squared(q) | BaseValue::Linear(q) => q.is_zero(),
        }
    }

    /// `base(x)²` as an exact rational.
    pub fn base_squared(&self) -> Rational {
        match &self.base {
            BaseValue::Squared(q) => q.clone(),
            BaseValue::Linear(q) => q * q,
        }
    }

    /// Exact rational value when the norm is rational (linear base, no twist).
    pub fn as_rational(&self) -> Option<Rational> {
        match &self.base {
            BaseValue::Linear(q) if self.alpha.is_zero() => Some(q.clone()),
            BaseValue::Squared(q) if self.alpha.is_zero() => {
                let (n, d) = (q.numer().sqrt(), q.denom().sqrt());
                let r = Rational::new(n, d);
                (&r * &r == *q).then_some(r)
            }
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let scale = (-rational_to_f64(&self.alpha)).exp();
        match &self.base {
            BaseValue::Squared(q) => rational_to_f64(q).sqrt() * scale,
            BaseValue::Linear(q) => rational_to_f64(q) * scale,
        }
    }

    /// Compares the value with 1, exactly.
    pub fn cmp_one(&self) -> Result<Ordering> {
        match &self.base {
            BaseValue::Squared(q) => cmp_exp(q, &(&self.alpha * exact::int(2))),
            BaseValue::Linear(q) => cmp_exp(q, &self.alpha),
        }
    }

    pub fn le_one(&self) -> Result<bool> {
        Ok(self.cmp_one()? != Ordering::Greater)
    }

    pub fn lt_one(&self) -> Result<bool> {
        Ok(self.cmp_one()? == Ordering::Less)
    }

    /// `ln ‖x‖` for nonzero values.
    pub fn ln(&self) -> LogReal {
        assert!(!self.is_zero(), "log of zero norm");
        LogReal::half_ln(&self.base_squared()) - LogReal::constant(self.alpha.clone())
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let core = match &self.base {
            BaseValue::Squared(q) => format!("sqrt({})", format_rational(q)),
            BaseValue::Linear(q) => format_rational(q),
        };
        if self.alpha.is_zero() {
            write!(f, "{core}")
        } else {
            write!(f, "exp(-({}))*{core}", format_rational(&self.alpha))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn diag(entries: &[Rational]) -> Matrix {
        let n = entries.len();
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { entries[i].clone() } else { int(0) }).collect())
            .collect()
    }

    #[test]
    fn construction_examples() {
        let m = make_normed_module(1, NormSpec::PolyMax { functionals: vec![vec![int(1)]] }).unwrap();
        assert_eq!(m.rank(), 1);
        assert!(make_normed_module(2, NormSpec::euclidean(2)).is_ok());
        let bad = make_normed_module(2, NormSpec::PolyMax { functionals: vec![vec![int(1), int(0)]] });
        assert!(matches!(bad, Err(Error::UnboundedBall(_))));
    }

    #[test]
    fn construction_errors() {
        let not_pd = NormSpec::Ellipsoid { gram: vec![vec![int(1), int(2)], vec![int(2), int(1)]] };
        assert!(matches!(make_normed_module(2, not_pd), Err(Error::InvalidNorm(_))));
        let asym = NormSpec::Ellipsoid { gram: vec![vec![int(2), int(1)], vec![int(0), int(2)]] };
        assert!(matches!(make_normed_module(2, asym), Err(Error::InvalidNorm(_))));
        assert!(matches!(
            make_normed_module(3, NormSpec::euclidean(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            make_normed_module(1, NormSpec::sup(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(make_normed_module(0, NormSpec::sup(0)).is_ok());
    }

    #[test]
    fn norm_eval_examples() {
        let sup = make_normed_module(2, NormSpec::sup(2)).unwrap();
        let v = sup.norm_eval(&[3, -2]).unwrap();
        assert_eq!(v.as_rational(), Some(int(3)));
        let euc = make_normed_module(2, NormSpec::euclidean(2)).unwrap();
        let v = euc.norm_eval(&[3, 4]).unwrap();
        assert_eq!(v.as_rational(), Some(int(5)));
        assert!(matches!(euc.norm_eval(&[1]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn twisted_by_one_decides_against_interval() {
        let m = make_normed_module(1, NormSpec::sup(1)).unwrap().twist(&int(1));
        let v = m.norm_eval(&[2]).unwrap();
        // 2/e ≈ 0.7358
        assert!((v.to_f64() - 2.0 / std::f64::consts::E).abs() < 1e-15);
        assert!(v.le_one().unwrap());
        let v3 = m.norm_eval(&[3]).unwrap();
        assert!(!v3.le_one().unwrap());
    }

    #[test]
    fn twist_seven_tenths() {
        let m = make_normed_module(1, NormSpec::sup(1)).unwrap().twist(&rat(7, 10));
        let v = m.norm_eval(&[2]).unwrap();
        assert!((v.to_f64() - 2.0 * (-0.7f64).exp()).abs() < 1e-15);
        assert!(v.lt_one().unwrap());
    }

    #[test]
    fn twist_additivity_and_identity() {
        let m = make_normed_module(2, NormSpec::euclidean(2)).unwrap();
        let a = m.twist(&rat(1, 2)).twist(&rat(1, 2));
        let b = m.twist(&int(1));
        let z = m.twist(&int(0));
        for v in [[1, 0], [3, -7], [0, 0], [5, 5]] {
            assert_eq!(a.norm_eval(&v).unwrap(), b.norm_eval(&v).unwrap());
            assert_eq!(z.norm_eval(&v).unwrap(), m.norm_eval(&v).unwrap());
        }
    }

    #[test]
    fn enclosing_box_examples() {
        let euc = make_normed_module(2, NormSpec::euclidean(2)).unwrap();
        assert_eq!(euc.enclosing_box().unwrap(), vec![BigInt::from(1), BigInt::from(1)]);
        let pm = make_normed_module(
            2,
            NormSpec::PolyMax { functionals: vec![vec![rat(1, 4), int(0)], vec![int(0), int(1)]] },
        )
        .unwrap();
        assert_eq!(pm.enclosing_box().unwrap(), vec![BigInt::from(4), BigInt::from(1)]);
        let ell = make_normed_module(2, NormSpec::Ellipsoid { gram: diag(&[int(1), rat(1, 9)]) }).unwrap();
        assert_eq!(ell.enclosing_box().unwrap(), vec![BigInt::from(1), BigInt::from(3)]);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = make_normed_module(
            2,
            NormSpec::Scaled {
                inner: Box::new(NormSpec::PolyMax {
                    functionals: vec![vec![rat(1, 4), int(0)], vec![int(0), int(1)], vec![rat(1, 3), rat(-2, 5)]],
                }),
                alpha: rat(7, 10),
            },
        )
        .unwrap();
        let s = m.to_json();
        let back: NormedModule = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_json(), s);
        assert!(s.contains("\"type\":\"scaled\""));
        assert!(s.contains("\"7/10\""));
    }

    #[test]
    fn json_accepts_integer_literals() {
        let s = r#"{"rank":2,"norm":{"type":"ellipsoid","gram":[["1","0"],["0","1"]]}}"#;
        let m: NormedModule = serde_json::from_str(s).unwrap();
        assert_eq!(m.to_json(), r#"{"rank":2,"norm":{"type":"ellipsoid","gram":[["1/1","0/1"],["0/1","1/1"]]}}"#);
        let bad = r#"{"rank":2,"norm":{"type":"polymax","functionals":[["1","0"]]}}"#;
        assert!(serde_json::from_str::<NormedModule>(bad).is_err());
    }
}
