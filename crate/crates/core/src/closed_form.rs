//! Exact solutions on the invariant line `a = 0`.

use crate::error::{Error, Result};

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

/// Unnormalized flow for constants `c^2_{13} = -K`, `c^3_{12} = 1` from
/// `(a, c, B) = (0, c0, b0²)`. Returns `(c(t), B(t))`.
pub fn pdq_closed_form(k: f64, c0: f64, b0: f64, t: f64) -> Result<(f64, f64)> {
    finite("K", k)?;
    positive("c0", c0)?;
    positive("b0", b0)?;
    finite("t", t)?;
    let b0_sq = b0 * b0;
    let kc2 = k * c0 * c0;
    if (kc2 - 1.0).abs() <= 1e-12 {
        return Ok((c0, b0_sq - t * (c0 * c0 * k + 1.0) / c0));
    }
    let e = ((1.0 - kc2) * t / (b0_sq * c0)).exp();
    let b_sq = (kc2 * e * e - 1.0) / ((kc2 - 1.0) * e) * b0_sq;
    Ok((c0 * e, b_sq))
}

/// First time at which `B` reaches 0 on the pdq trajectory, if any.
pub fn pdq_exit_time(k: f64, c0: f64, b0: f64) -> Option<f64> {
    if k <= 0.0 {
        return None;
    }
    let kc2 = k * c0 * c0;
    if (kc2 - 1.0).abs() <= 1e-12 {
        return Some(b0 * b0 * c0 / (c0 * c0 * k + 1.0));
    }
    Some(b0 * b0 * c0 * (1.0 / (k.sqrt() * c0)).ln() / (1.0 - kc2))
}

/// Unnormalized flow for constants `c^2_{13} = -K`, `c^3_{12} = 1/K` from
/// `(a, c, B) = (0, c0, B0)`.
pub fn prequant_closed_form(k: f64, c0: f64, b0_sq: f64, t: f64) -> Result<(f64, f64)> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidParameter { name: "K", value: k });
    }
    positive("c0", c0)?;
    positive("B0", b0_sq)?;
    finite("t", t)?;
    let k2c2 = k * k * c0 * c0;
    if (k2c2 - 1.0).abs() <= 1e-12 {
        return Ok((c0, b0_sq - 2.0 * k.signum() * t));
    }
    let lambda = (1.0 - k2c2) / (b0_sq * c0 * k);
    let e = (lambda * t).exp();
    let b_sq = b0_sq * (1.0 - k2c2 * e * e) / ((1.0 - k2c2) * e);
    Ok((c0 * e, b_sq))
}

/// Finite blow-up time of `ċ = 1 - K c²` from `c0`, if any.
pub fn normalized_a0_blowup_time(k: f64, c0: f64) -> Option<f64> {
    if k < 0.0 {
        let s = (-k).sqrt();
        Some((std::f64::consts::FRAC_PI_2 - (s * c0).atan()) / s)
    } else {
        None
    }
}

/// Solution of `ċ = 1 - K c²`, `c(0) = c0`: the normalized flow on the `a = 0`
/// line for constants `c^2_{13} = -K`, `c^3_{12} = 1`.
pub fn normalized_a0_closed_form(k: f64, c0: f64, t: f64) -> Result<f64> {
    finite("K", k)?;
    positive("c0", c0)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter { name: "t", value: t });
    }
    if k > 0.0 {
        let s = k.sqrt();
        let x = s * c0;
        let u = s * t;
        let c = if x < 1.0 {
            (u + x.atanh()).tanh() / s
        } else if x > 1.0 {
            1.0 / ((u + (1.0 / x).atanh()).tanh() * s)
        } else {
            1.0 / s
        };
        Ok(c)
    } else if k == 0.0 {
        Ok(c0 + t)
    } else {
        let s = (-k).sqrt();
        let t_star = normalized_a0_blowup_time(k, c0).expect("K < 0");
        if t >= t_star {
            return Err(Error::BlowUpAt { time: t_star });
        }
        Ok((s * t + (s * c0).atan()).tan() / s)
    }
}
