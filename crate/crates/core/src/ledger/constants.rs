//! `χ(O_K^g)`, the Stirling estimate, the arithmetic Noether formula and the
//! constant absorption behind `C(g, K) = 2g ln|D_K| + 18 d ln d + 25 d`.

use std::f64::consts::PI;

use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, rational_to_f64, Rational};
use crate::inequality::{compare_real, InequalityReport, Verdict, INTERVAL_TOL};
use crate::volume::ln_unit_ball;

fn ln_2pi() -> f64 {
    (2.0 * PI).ln()
}

/// `r₁ ln V(g) + r₂ ln V(2g) − (g/2) ln|D_K|`.
pub fn chi_ok(g: u64, r1: u64, r2: u64, abs_d: f64) -> f64 {
    r1 as f64 * ln_unit_ball(g as usize) + r2 as f64 * ln_unit_ball(2 * g as usize) - 0.5 * g as f64 * abs_d.ln()
}

/// `r₁ ln V(g) + r₂ ln V(2g) ≥ (r/2) ln 2π − (r/2) ln r` with `r = g(r₁ + 2r₂)`,
/// non-strict, tolerance `10⁻⁹`.
pub fn stirling_check(g: u64, r1: u64, r2: u64) -> InequalityReport {
    let r = (g * (r1 + 2 * r2)) as f64;
    let lhs = 0.5 * r * ln_2pi() - 0.5 * r * r.ln();
    let rhs = chi_ok(g, r1, r2, 1.0);
    compare_real("stirling", lhs, rhs, INTERVAL_TOL, &format!("g={g},r1={r1},r2={r2}"))
}

#[derive(Clone, Debug, Serialize)]
pub struct StirlingSweep {
    pub checked: u64,
    pub violations: Vec<InequalityReport>,
    /// Grid points with `|slack| < 10⁻⁹`, as `(g, r1, r2)`.
    pub equality_cases: Vec<(u64, u64, u64)>,
    #[serde(serialize_with = "exact::real::serialize")]
    pub min_slack: f64,
}

/// All `2 ≤ g ≤ g_max` and splits `r₁ + 2r₂ = κ ≤ kappa_max`.
pub fn stirling_sweep(g_max: u64, kappa_max: u64) -> StirlingSweep {
    let mut points = Vec::new();
    for g in 2..=g_max {
        for kappa in 1..=kappa_max {
            for r2 in 0..=kappa / 2 {
                points.push((g, kappa - 2 * r2, r2));
            }
        }
    }
    let reports: Vec<((u64, u64, u64), InequalityReport)> =
        points.par_iter().map(|&(g, r1, r2)| ((g, r1, r2), stirling_check(g, r1, r2))).collect();
    let mut out = StirlingSweep {
        checked: reports.len() as u64,
        violations: Vec::new(),
        equality_cases: Vec::new(),
        min_slack: f64::INFINITY,
    };
    for (p, rep) in reports {
        out.min_slack = out.min_slack.min(rep.slack);
        if rep.slack.abs() < INTERVAL_TOL {
            out.equality_cases.push(p);
        }
        if rep.verdict == Verdict::Violated {
            out.violations.push(rep);
        }
    }
    out
}

/// `χ_Fal = (ω̄² + δ)/12 − (gκ/3) ln 2π`.
pub fn noether_chi_fal(omega2: f64, delta: f64, g: u64, kappa: u64) -> f64 {
    (omega2 + delta) / 12.0 - (g * kappa) as f64 / 3.0 * ln_2pi()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArithmeticContext {
    pub g: u64,
    pub kappa: u64,
    pub eps: u64,
    #[serde(rename = "absD", with = "exact::serde_rational")]
    pub abs_d: Rational,
    pub r1: u64,
    pub r2: u64,
    #[serde(with = "exact::serde_rational")]
    pub omega2: Rational,
    #[serde(with = "exact::serde_rational")]
    pub delta: Rational,
    #[serde(with = "exact::serde_rational")]
    pub gamma: Rational,
}

impl ArithmeticContext {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::PreconditionViolated(m.to_string()));
        if self.g < 2 {
            return bad("need g > 1");
        }
        if self.kappa == 0 || self.r1 + 2 * self.r2 != self.kappa {
            return bad("need r1 + 2·r2 = kappa ≥ 1");
        }
        if self.eps != 1 && self.eps != 2 {
            return bad("eps must be 1 or 2");
        }
        if self.abs_d < exact::int(1) {
            return bad("absD must be at least 1");
        }
        if self.omega2.is_negative() {
            return bad("omega2 must be nonnegative");
        }
        Ok(())
    }

    /// `d = (2g − 2)κ`
    pub fn d(&self) -> u64 {
        (2 * self.g - 2) * self.kappa
    }

    /// `r = gκ`
    pub fn r(&self) -> u64 {
        self.g * self.kappa
    }

    fn ln_abs_d(&self) -> f64 {
        exact::ln_rational(&self.abs_d)
    }
}

/// Integer coefficients of `a·g ln|D_K| + b·d ln d + c·d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConstantForm {
    pub g_log_abs_d: i64,
    pub d_log_d: i64,
    pub d: i64,
}

impl ConstantForm {
    pub fn eval(&self, g: u64, d: u64, ln_abs_d: f64) -> f64 {
        let df = d as f64;
        self.g_log_abs_d as f64 * g as f64 * ln_abs_d + self.d_log_d as f64 * df * df.ln() + self.d as f64 * df
    }
}

/// `C' = ½ g ln|D_K| + (9/2) d ln d + 4 d ln 3`, as its three coefficients.
fn c_prime_coefficients() -> (Rational, Rational, f64) {
    (exact::rat(1, 2), exact::rat(9, 2), 4.0 * 3f64.ln())
}

/// `max r/d = max_{g≥2} g/(2g − 2)`, attained at `g = 2`.
fn max_r_over_d() -> Rational {
    exact::rat(2, 2)
}

/// Absorbs `m·C' + 4r ln 2π` into integer coefficients, using `r ≤ max(r/d)·d`
/// and rounding the `d` coefficient up.
pub fn absorb_constant(multiple: i64) -> ConstantForm {
    let (a, b, c) = c_prime_coefficients();
    let m = exact::int(multiple);
    let a = (a * &m).to_integer().to_i64().expect("integral");
    let b = (b * &m).to_integer().to_i64().expect("integral");
    let d = multiple as f64 * c + 4.0 * rational_to_f64(&max_r_over_d()) * ln_2pi();
    ConstantForm { g_log_abs_d: a, d_log_d: b, d: d.ceil() as i64 }
}

/// `C(g, K)` in symbolic form: the absorption of `4C' + 4r ln 2π`.
pub fn constant_c_form() -> ConstantForm {
    absorb_constant(4)
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaBoundReport {
    pub d: u64,
    pub r: u64,
    pub constant_form: ConstantForm,
    /// The form obtained from `12C' + 4r ln 2π`, dominated by `3·C(g, K)`.
    pub omega_form: ConstantForm,
    #[serde(serialize_with = "exact::real::serialize")]
    pub c_value: f64,
    #[serde(serialize_with = "exact::real::serialize")]
    pub chi_fal: f64,
    /// `(2 + 3ε/(g−1))ω̄² + 12γ + 3C(g, K)`
    #[serde(serialize_with = "exact::real::serialize")]
    pub rhs_omega: f64,
    /// `(8 + 4ε/(g−1+ε))χ_Fal + (4(g−1)/(g−1+ε))γ + C(g, K)`
    #[serde(serialize_with = "exact::real::serialize")]
    pub rhs_chi_fal: f64,
    #[serde(serialize_with = "exact::real::serialize")]
    pub delta: f64,
    /// Whether the supplied `δ_X` respects each bound.
    pub delta_within_omega_bound: bool,
    pub delta_within_chi_fal_bound: bool,
}

pub fn corollary_e(ctx: &ArithmeticContext) -> Result<DeltaBoundReport> {
    ctx.validate()?;
    let (g, eps) = (ctx.g as f64, ctx.eps as f64);
    let form = constant_c_form();
    let c_value = form.eval(ctx.g, ctx.d(), ctx.ln_abs_d());
    let omega2 = rational_to_f64(&ctx.omega2);
    let delta = rational_to_f64(&ctx.delta);
    let gamma = rational_to_f64(&ctx.gamma);
    let chi_fal = noether_chi_fal(omega2, delta, ctx.g, ctx.kappa);
    let rhs_omega = (2.0 + 3.0 * eps / (g - 1.0)) * omega2 + 12.0 * gamma + 3.0 * c_value;
    let rhs_chi_fal =
        (8.0 + 4.0 * eps / (g - 1.0 + eps)) * chi_fal + 4.0 * (g - 1.0) / (g - 1.0 + eps) * gamma + c_value;
    Ok(DeltaBoundReport {
        d: ctx.d(),
        r: ctx.r(),
        constant_form: form,
        omega_form: absorb_constant(12),
        c_value,
        chi_fal,
        rhs_omega,
        rhs_chi_fal,
        delta,
        delta_within_omega_bound: delta <= rhs_omega + INTERVAL_TOL,
        delta_within_chi_fal_bound: delta <= rhs_chi_fal + INTERVAL_TOL,
    })
}

/// The three absorption steps at one grid point, with `ln|D_K| = 0` (its
/// coefficients cancel exactly).
pub fn constant_chain_at(g: u64, kappa: u64) -> Vec<InequalityReport> {
    let d = ((2 * g - 2) * kappa) as f64;
    let r = (g * kappa) as f64;
    let (_, b, c) = c_prime_coefficients();
    let c_prime = rational_to_f64(&b) * d * d.ln() + c * d;
    let tag = format!("g={g},kappa={kappa}");
    let omega = absorb_constant(12);
    let form = constant_c_form();
    vec![
        compare_real(
            "absorb_12c_prime",
            12.0 * c_prime + 4.0 * r * ln_2pi(),
            omega.eval(g, d as u64, 0.0),
            INTERVAL_TOL,
            &tag,
        ),
        compare_real(
            "absorb_4c_prime",
            4.0 * c_prime + 4.0 * r * ln_2pi(),
            form.eval(g, d as u64, 0.0),
            INTERVAL_TOL,
            &tag,
        ),
        compare_real(
            "absorb_minkowski_stirling",
            4.0 * d * (3.0 * d).ln() + r * 2f64.ln() + 0.5 * r * r.ln() - 0.5 * r * ln_2pi(),
            c_prime,
            INTERVAL_TOL,
            &tag,
        ),
    ]
}

/// Limit of the per-`d` margin of the `4C'` absorption as `g → ∞`, evaluated
/// from the residual `25 − 16 ln 3 − 4(r/d) ln 2π` at `r/d = 1/2`.
pub fn asymptotic_margin() -> f64 {
    let form = constant_c_form();
    let (_, _, c) = c_prime_coefficients();
    form.d as f64 - 4.0 * c - 4.0 * 0.5 * ln_2pi()
}

#[derive(Clone, Debug, Serialize)]
pub struct StepMargin {
    pub name: String,
    /// Smallest `slack / d` over the grid.
    #[serde(serialize_with = "exact::real::serialize")]
    pub min_margin_per_d: f64,
    pub at_g: u64,
    pub at_kappa: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantChainSummary {
    pub g_max: u64,
    pub kappa_max: u64,
    pub checked: u64,
    pub violations: Vec<InequalityReport>,
    pub margins: Vec<StepMargin>,
    #[serde(serialize_with = "exact::real::serialize")]
    pub asymptotic_margin: f64,
    pub constant_form: ConstantForm,
    pub omega_form: ConstantForm,
    /// `12·C'` and `3·C` carry the same `g ln|D_K|` and `d ln d` coefficients,
    /// and `3·C` has the larger `d` coefficient.
    pub three_c_dominates: bool,
    pub log_abs_d_cancels: bool,
}

pub fn verify_constant_chain(g_max: u64, kappa_max: u64) -> Result<ConstantChainSummary> {
    if g_max < 2 || kappa_max < 1 {
        return Err(Error::PreconditionViolated("need g_max ≥ 2 and kappa_max ≥ 1".into()));
    }
    let points: Vec<(u64, u64)> = (2..=g_max).flat_map(|g| (1..=kappa_max).map(move |k| (g, k))).collect();
    let results: Vec<((u64, u64), Vec<InequalityReport>)> =
        points.par_iter().map(|&(g, k)| ((g, k), constant_chain_at(g, k))).collect();
    let mut margins: Vec<StepMargin> = Vec::new();
    let mut violations = Vec::new();
    let mut checked = 0;
    for ((g, k), reps) in results {
        let d = ((2 * g - 2) * k) as f64;
        for (i, rep) in reps.into_iter().enumerate() {
            checked += 1;
            let m = rep.slack / d;
            if margins.len() <= i {
                margins.push(StepMargin { name: rep.name.clone(), min_margin_per_d: m, at_g: g, at_kappa: k });
            } else if m < margins[i].min_margin_per_d {
                margins[i] = StepMargin { name: rep.name.clone(), min_margin_per_d: m, at_g: g, at_kappa: k };
            }
            if rep.verdict == Verdict::Violated {
                violations.push(rep);
            }
        }
    }
    let form = constant_c_form();
    let omega = absorb_constant(12);
    let three_c = ConstantForm { g_log_abs_d: 3 * form.g_log_abs_d, d_log_d: 3 * form.d_log_d, d: 3 * form.d };
    Ok(ConstantChainSummary {
        g_max,
        kappa_max,
        checked,
        violations,
        margins,
        asymptotic_margin: asymptotic_margin(),
        constant_form: form,
        omega_form: omega,
        three_c_dominates: three_c.g_log_abs_d == omega.g_log_abs_d
            && three_c.d_log_d == omega.d_log_d
            && three_c.d >= omega.d,
        log_abs_d_cancels: omega.g_log_abs_d == 6 && form.g_log_abs_d == 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::int;

    fn ctx(eps: u64, omega2: i64, gamma: i64, abs_d: i64) -> ArithmeticContext {
        ArithmeticContext {
            g: 2,
            kappa: 1,
            eps,
            abs_d: int(abs_d),
            r1: 1,
            r2: 0,
            omega2: int(omega2),
            delta: int(0),
            gamma: int(gamma),
        }
    }

    #[test]
    fn chi_ok_examples() {
        assert!((chi_ok(2, 1, 0, 1.0) - PI.ln()).abs() < 1e-12);
        assert!((chi_ok(2, 0, 1, 1.0) - (PI * PI / 2.0).ln()).abs() < 1e-12);
        let e2 = std::f64::consts::E.powi(2);
        for (g, r1, r2) in [(2, 1, 0), (3, 2, 1), (7, 0, 3)] {
            assert!((chi_ok(g, r1, r2, e2) - (chi_ok(g, r1, r2, 1.0) - g as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn stirling_examples() {
        let eq = stirling_check(2, 1, 0);
        assert!(eq.holds && eq.slack.abs() < 1e-12);
        let s = stirling_check(3, 1, 0);
        assert!((s.rhs - (4.0 * PI / 3.0).ln()).abs() < 1e-12);
        assert!((s.lhs - (1.5 * (2.0 * PI).ln() - 1.5 * 3f64.ln())).abs() < 1e-12);
        assert!(s.holds && s.slack > 0.3);
    }

    #[test]
    fn stirling_equality_only_at_genus_two_rank_one() {
        let sweep = stirling_sweep(40, 6);
        assert!(sweep.violations.is_empty());
        assert_eq!(sweep.equality_cases, vec![(2, 1, 0)]);
        // for r1 ≥ 2 the slack is r1 ln r1
        let s = stirling_check(2, 3, 0);
        assert!((s.slack - 3.0 * 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn noether_examples() {
        let v = noether_chi_fal(12.0, 0.0, 2, 1);
        assert!((v - (1.0 - 2.0 / 3.0 * (2.0 * PI).ln())).abs() < 1e-12);
        assert_eq!(v, noether_chi_fal(0.0, 12.0, 2, 1));
        assert!((noether_chi_fal(0.0, 0.0, 3, 2) + 2.0 * (2.0 * PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_forms() {
        assert_eq!(constant_c_form(), ConstantForm { g_log_abs_d: 2, d_log_d: 18, d: 25 });
        assert_eq!(absorb_constant(12), ConstantForm { g_log_abs_d: 6, d_log_d: 54, d: 61 });
        let want = 25.0 - 16.0 * 3f64.ln() - 2.0 * (2.0 * PI).ln();
        assert!((asymptotic_margin() - want).abs() < 1e-12);
    }

    #[test]
    fn delta_bound_examples() {
        let rep = corollary_e(&ctx(1, 12, 0, 1)).unwrap();
        assert!((rep.c_value - (36.0 * 2f64.ln() + 50.0)).abs() < 1e-12);
        assert!((rep.rhs_omega - (60.0 + 3.0 * rep.c_value)).abs() < 1e-9);
        assert!(corollary_e(&ArithmeticContext { g: 1, ..ctx(1, 0, 0, 1) }).is_err());
        assert!(corollary_e(&ArithmeticContext { r1: 2, ..ctx(1, 0, 0, 1) }).is_err());
    }

    #[test]
    fn delta_bounds_are_monotone() {
        for w in [0, 5, 40] {
            for gm in [-3, 0, 7] {
                for ad in [1, 5, 300] {
                    let base = corollary_e(&ctx(1, w, gm, ad)).unwrap();
                    let up_w = corollary_e(&ctx(1, w + 1, gm, ad)).unwrap();
                    let up_g = corollary_e(&ctx(1, w, gm + 1, ad)).unwrap();
                    let up_d = corollary_e(&ctx(1, w, gm, ad + 1)).unwrap();
                    let up_e = corollary_e(&ctx(2, w, gm, ad)).unwrap();
                    for other in [&up_w, &up_g, &up_d] {
                        assert!(other.rhs_omega >= base.rhs_omega);
                        assert!(other.rhs_chi_fal >= base.rhs_chi_fal);
                    }
                    assert!(up_e.rhs_omega >= base.rhs_omega);
                    if base.chi_fal >= gm as f64 {
                        assert!(up_e.rhs_chi_fal >= base.rhs_chi_fal);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_chain_small_grid() {
        let s = verify_constant_chain(60, 5).unwrap();
        assert!(s.violations.is_empty());
        assert_eq!(s.checked, 59 * 5 * 3);
        let ii = &s.margins[1];
        assert_eq!((ii.at_g, ii.name.as_str()), (2, "absorb_4c_prime"));
        assert!(ii.min_margin_per_d > 0.0 && ii.min_margin_per_d < 0.1);
        assert!(s.three_c_dominates && s.log_abs_d_cancels);
        let at2 = constant_chain_at(2, 1);
        assert!((at2[0].rhs - (108.0 * 2f64.ln() + 122.0)).abs() < 1e-9);
        assert!((at2[0].lhs - 195.03).abs() < 0.01);
    }
}
