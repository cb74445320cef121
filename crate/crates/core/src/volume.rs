//! Unit-ball volumes and the Euler characteristic `χ = ln vol B`.
//!
//! The lattice is always the standard `ℤ^r`, so the covolume is 1.

use std::f64::consts::PI;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exact::{self, rational_to_f64, LogReal, Rational};
use crate::linalg::{self, Matrix};
use crate::norm::{BaseNorm, NormedModule};

pub const MIN_SAMPLES: u64 = 10_000;
pub const DEFAULT_SAMPLES: u64 = 200_000;

const CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolumeMethod {
    ExactEllipsoid,
    ExactParallelepiped,
    ExactPolygon,
    MonteCarlo,
}

impl VolumeMethod {
    pub fn is_exact(self) -> bool {
        self != VolumeMethod::MonteCarlo
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeReport {
    #[serde(serialize_with = "exact::real::serialize")]
    pub value: f64,
    #[serde(serialize_with = "exact::real::serialize")]
    pub log_value: f64,
    pub method: VolumeMethod,
    #[serde(serialize_with = "exact::real::serialize")]
    pub stderr: f64,
    /// `ln vol` as an exact log-expression when the volume is `e^{q}·rational`.
    #[serde(skip)]
    pub exact_log: Option<LogReal>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiReport {
    #[serde(serialize_with = "exact::real::serialize")]
    pub chi: f64,
    /// Standard error of `χ` (delta method, `stderr(vol)/vol`).
    #[serde(serialize_with = "exact::real::serialize")]
    pub stderr: f64,
    pub method: VolumeMethod,
    pub volume: VolumeReport,
    #[serde(skip)]
    pub exact: Option<LogReal>,
}

/// `ln V(r)` for the Euclidean unit ball, `V(r) = π^{r/2}/Γ(r/2 + 1)`.
pub fn ln_unit_ball(r: usize) -> f64 {
    let h = r as f64 / 2.0;
    h * PI.ln() - ln_gamma(h + 1.0)
}

pub fn ball_volume(module: &NormedModule, samples: u64, seed: u64) -> Result<VolumeReport> {
    let r = module.rank();
    let ra = module.alpha() * exact::int(r as i64);
    let shift = rational_to_f64(&ra);
    let mut rep = base_volume(module, samples, seed)?;
    rep.log_value += shift;
    rep.value = rep.log_value.exp();
    rep.stderr *= shift.exp();
    rep.exact_log = rep.exact_log.map(|l| l + LogReal::constant(ra));
    Ok(rep)
}

pub fn euler_characteristic(module: &NormedModule, samples: u64, seed: u64) -> Result<ChiReport> {
    let volume = ball_volume(module, samples, seed)?;
    Ok(ChiReport {
        chi: volume.log_value,
        stderr: if volume.value > 0.0 { volume.stderr / volume.value } else { f64::INFINITY },
        method: volume.method,
        exact: volume.exact_log.clone(),
        volume,
    })
}

fn exact_report(method: VolumeMethod, log_value: f64, exact_log: Option<LogReal>) -> VolumeReport {
    VolumeReport { value: log_value.exp(), log_value, method, stderr: 0.0, exact_log }
}

fn base_volume(module: &NormedModule, samples: u64, seed: u64) -> Result<VolumeReport> {
    let r = module.rank();
    if r == 0 {
        return Ok(exact_report(VolumeMethod::ExactParallelepiped, 0.0, Some(LogReal::zero())));
    }
    match module.base() {
        BaseNorm::Ellipsoid { gram } => {
            let det = linalg::determinant(gram);
            let lv = ln_unit_ball(r) - 0.5 * exact::ln_rational(&det);
            // V(1) = 2, V(2) = π: only rank 1 is a rational-log value
            let exact_log = (r == 1).then(|| LogReal::ln(&exact::int(2)) - LogReal::half_ln(&det));
            Ok(exact_report(VolumeMethod::ExactEllipsoid, lv, exact_log))
        }
        BaseNorm::PolyMax { functionals } if functionals.len() == r => {
            let det = linalg::determinant(functionals).abs();
            let v = Rational::from_integer(num_bigint::BigInt::from(1) << r) / det;
            Ok(exact_report(
                VolumeMethod::ExactParallelepiped,
                exact::ln_rational(&v),
                Some(LogReal::ln(&v)),
            ))
        }
        BaseNorm::PolyMax { functionals } if r == 1 => {
            let m = functionals.iter().map(|a| a[0].abs()).max().expect("nonempty");
            let v = exact::int(2) / m;
            Ok(exact_report(
                VolumeMethod::ExactParallelepiped,
                exact::ln_rational(&v),
                Some(LogReal::ln(&v)),
            ))
        }
        BaseNorm::PolyMax { functionals } if r == 2 => {
            let v = polygon_area(functionals, &module.compiled().box_weights);
            Ok(exact_report(VolumeMethod::ExactPolygon, exact::ln_rational(&v), Some(LogReal::ln(&v))))
        }
        BaseNorm::PolyMax { .. } => monte_carlo(module, samples, seed),
    }
}

type Point = (Rational, Rational);

/// Area of `{x ∈ ℝ² : |a_j·x| ≤ 1 ∀j}` by clipping the enclosing box.
pub fn polygon_area(functionals: &Matrix, half_widths: &[Rational]) -> Rational {
    let (w0, w1) = (half_widths[0].clone(), half_widths[1].clone());
    let mut poly: Vec<Point> = vec![
        (-w0.clone(), -w1.clone()),
        (w0.clone(), -w1.clone()),
        (w0.clone(), w1.clone()),
        (-w0, w1),
    ];
    for a in functionals {
        for sign in [1i64, -1] {
            let s = exact::int(sign);
            let n = (&a[0] * &s, &a[1] * &s);
            poly = clip(&poly, &n);
        }
    }
    shoelace(&poly)
}

/// Sutherland–Hodgman step against `n·x ≤ 1`.
fn clip(poly: &[Point], n: &(Rational, Rational)) -> Vec<Point> {
    let one = exact::int(1);
    let f = |p: &Point| &n.0 * &p.0 + &n.1 * &p.1 - &one;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let cur = &poly[i];
        let next = &poly[(i + 1) % poly.len()];
        let (fc, fn_) = (f(cur), f(next));
        let cur_in = !fc.is_positive();
        let next_in = !fn_.is_positive();
        if cur_in {
            out.push(cur.clone());
        }
        if cur_in != next_in {
            let t = &fc / (&fc - &fn_);
            out.push((&cur.0 + &t * (&next.0 - &cur.0), &cur.1 + &t * (&next.1 - &cur.1)));
        }
    }
    out
}

fn shoelace(poly: &[Point]) -> Rational {
    let mut acc = Rational::zero();
    for i in 0..poly.len() {
        let (p, q) = (&poly[i], &poly[(i + 1) % poly.len()]);
        acc += &p.0 * &q.1 - &q.0 * &p.1;
    }
    acc.abs() / exact::int(2)
}

/// 32-byte key for the sample stream of `(seed, instance)`.
fn rng_key(seed: u64, digest: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(digest.as_bytes());
    h.finalize().into()
}

/// Rejection sampling in the enclosing box of the untwisted ball.
///
/// Sample `i` uses words `2r·i ..` of a ChaCha stream keyed by the seed and
/// the instance digest, so the estimate does not depend on scheduling.
fn monte_carlo(module: &NormedModule, samples: u64, seed: u64) -> Result<VolumeReport> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "monte-carlo volume needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let base = module.untwisted();
    let r = base.rank();
    let BaseNorm::PolyMax { functionals } = base.base() else {
        unreachable!("monte-carlo path is only used for polymax norms");
    };
    let rows: Vec<Vec<f64>> = functionals
        .iter()
        .map(|row| row.iter().map(rational_to_f64).collect())
        .collect();
    let half: Vec<f64> = base.real_box_half_widths().iter().map(|h| h * (1.0 + 1e-9)).collect();
    let key = rng_key(seed, &base.digest());
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(samples);
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_word_pos(start as u128 * 2 * r as u128);
            let mut x = vec![0.0; r];
            let mut hits = 0u64;
            for _ in start..end {
                for (xk, h) in x.iter_mut().zip(&half) {
                    *xk = (rng.gen::<f64>() * 2.0 - 1.0) * h;
                }
                let inside = rows
                    .iter()
                    .all(|a| a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum::<f64>().abs() <= 1.0);
                hits += inside as u64;
            }
            hits
        })
        .sum();
    let box_vol: f64 = half.iter().map(|h| 2.0 * h).product();
    let p = hits as f64 / samples as f64;
    let value = box_vol * p;
    let stderr = box_vol * (p * (1.0 - p) / samples as f64).sqrt();
    Ok(VolumeReport {
        value,
        log_value: value.ln(),
        method: VolumeMethod::MonteCarlo,
        stderr,
        exact_log: None,
    })
}
