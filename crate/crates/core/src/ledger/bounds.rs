//! Closed-form upper bounds for `ĥ⁰`, evaluated exactly as log-expressions.

use crate::error::{Error, Result};
use crate::exact::{self, r_log_3, LogReal, Rational};

fn four_x_log_3x(x: u64) -> LogReal {
    LogReal::ln_int(3 * x).times(4 * x as i64)
}

/// `(r⁻/deg)·L² + r⁻ ln 3`.
pub fn trivial_bound(r_minus: u64, deg_lq: u64, l2: &Rational) -> Result<LogReal> {
    if r_minus == 0 || deg_lq == 0 {
        return Err(Error::PreconditionViolated("rank and degree must be positive".into()));
    }
    Ok(LogReal::constant(l2 * exact::rat(r_minus as i64, deg_lq as i64)) + r_log_3(r_minus))
}

/// `g > 0`: `L²/2 + 4d ln(3d)`, `d = d°κ`. `g = 0`: `(1/2 + 1/d°)L² + 4r ln(3r)`,
/// `r = (d° + 1)κ`.
pub fn theorem_b_bound(g: u64, d_circ: u64, kappa: u64, l2: &Rational) -> Result<LogReal> {
    if kappa == 0 {
        return Err(Error::PreconditionViolated("kappa must be positive".into()));
    }
    if g > 0 {
        if d_circ <= 1 {
            return Err(Error::PreconditionViolated("positive genus needs d° > 1".into()));
        }
        Ok(LogReal::constant(l2 * exact::rat(1, 2)) + four_x_log_3x(d_circ * kappa))
    } else {
        if d_circ == 0 {
            return Err(Error::PreconditionViolated("genus zero needs d° > 0".into()));
        }
        let coef = exact::rat(1, 2) + exact::rat(1, d_circ as i64);
        Ok(LogReal::constant(l2 * coef) + four_x_log_3x((d_circ + 1) * kappa))
    }
}

fn check_eps(eps: u64) -> Result<()> {
    if eps == 1 || eps == 2 {
        Ok(())
    } else {
        Err(Error::PreconditionViolated(format!("eps must be 1 or 2, got {eps}")))
    }
}

/// `(1/4 + ε/(2d°))·L² + 4d ln(3d)`, `d = d°κ`.
pub fn theorem_c_bound(d_circ: u64, kappa: u64, eps: u64, l2: &Rational) -> Result<LogReal> {
    check_eps(eps)?;
    if d_circ <= 1 || kappa == 0 {
        return Err(Error::PreconditionViolated("need d° > 1 and kappa ≥ 1".into()));
    }
    let coef = exact::rat(1, 4) + exact::rat(eps as i64, 2 * d_circ as i64);
    Ok(LogReal::constant(l2 * coef) + four_x_log_3x(d_circ * kappa))
}

/// `((g + ε − 1)/(4(g − 1)))·ω̄² + 4d ln(3d)`, `d = (2g − 2)κ`.
pub fn theorem_d_bound(g: u64, kappa: u64, eps: u64, omega2: &Rational) -> Result<LogReal> {
    check_eps(eps)?;
    if g <= 1 || kappa == 0 {
        return Err(Error::PreconditionViolated("need g > 1 and kappa ≥ 1".into()));
    }
    let coef = exact::rat((g + eps - 1) as i64, 4 * (g - 1) as i64);
    Ok(LogReal::constant(omega2 * coef) + four_x_log_3x((2 * g - 2) * kappa))
}

/// `g > 0`: `L² + κ ln 3`; `g = 0`: `L² + 5κ ln 3`.
pub fn deg_one_bound(g: u64, kappa: u64, l2: &Rational) -> LogReal {
    let k = if g > 0 { kappa } else { 5 * kappa };
    LogReal::constant(l2.clone()) + r_log_3(k)
}
