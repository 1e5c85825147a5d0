//! Threshold algebra for uniform convergence of parameterized chaos masses.
//!
//! `s(p)` is the moment-decay exponent of level increments, `m` its maximum
//! over `p`, and `n(lambda, k, gamma)` the exponent needed by a chaining argument
//! over a `k`-dimensional parameter space whose measures vary `lambda`-Hölder.
//! Masses converge uniformly and are Hölder in the parameter when `n < m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma == 0.0 {
        return Err(Error::GammaZero);
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("gamma = {gamma} must be positive and finite")));
    }
    Ok(())
}

/// `s_{alpha1, gamma}(p)`.
pub fn s_exponent(alpha1: f64, gamma: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidP(p));
    }
    let g2 = gamma * gamma;
    let second = (alpha1 - g2 * p / 2.0) * (p - 1.0);
    if p <= 2.0 {
        Ok(second)
    } else {
        Ok(((alpha1 - g2) * p / 2.0).min(second))
    }
}

/// `m(alpha1, gamma) = (alpha1/gamma - gamma/2)^2 / 2`.
pub fn m_value(alpha1: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(0.5 * (alpha1 / gamma - gamma / 2.0).powi(2))
}

/// `n(lambda, k, gamma)`.
pub fn n_value(lambda: f64, k: f64, gamma: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(k >= 1.0) || !(gamma >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "n(lambda, k, gamma) needs lambda > 0, k >= 1, gamma >= 0; got ({lambda}, {k}, {gamma})"
        )));
    }
    let g2 = gamma * gamma;
    let radicand = 4.0 * k * k * g2 + 2.0 * k * (1.0 - g2) * lambda;
    if radicand < 0.0 {
        return Err(Error::ParameterOutOfRange(format!("negative radicand {radicand} in n(lambda, k, gamma)")));
    }
    let l2 = lambda * lambda;
    Ok((4.0 * k * k - lambda * k) / l2 * g2 + 2.0 * k / l2 * gamma * radicand.sqrt() + k / lambda)
}

/// Maximizer of `s_{alpha1, gamma}` over `p >= 1`.
pub fn p_star(alpha1: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(alpha1 / (gamma * gamma) + 0.5)
}

/// Minimizer of `(gamma^2 q^2 + (1 - gamma^2) q) / (lambda q - 2k)` over `q > 2k / lambda`.
pub fn q_star(lambda: f64, k: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(lambda > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("lambda = {lambda} must be positive")));
    }
    let radicand = 4.0 * k * k + 2.0 * k * (1.0 / (gamma * gamma) - 1.0) * lambda;
    if radicand < 0.0 {
        return Err(Error::ParameterOutOfRange(format!("negative radicand {radicand} in q*")));
    }
    Ok((2.0 * k + radicand.sqrt()) / lambda)
}

/// Regularity data of a parameterized family of base measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInput {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha2prime: f64,
    pub k: u32,
    pub gamma: f64,
}

impl ThresholdInput {
    /// `lambda = min(alpha2, 2 alpha2')`.
    pub fn lambda(&self) -> f64 {
        self.alpha2.min(2.0 * self.alpha2prime)
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if !(self.alpha1 > 0.0) {
            return Err(Error::ParameterOutOfRange(format!("alpha1 = {} must be positive", self.alpha1)));
        }
        if !(self.alpha2 >= 0.0 && self.alpha2prime >= 0.0) {
            return Err(Error::ParameterOutOfRange("alpha2 and alpha2prime must be nonnegative".into()));
        }
        if self.k < 1 {
            return Err(Error::ParameterOutOfRange("k must be at least 1".into()));
        }
        let lambda = self.lambda();
        if !(lambda > 0.0) {
            return Err(Error::ParameterOutOfRange(format!("lambda = {lambda} must be positive")));
        }
        if !(self.k as f64 > lambda / 2.0) {
            return Err(Error::ParameterOutOfRange(format!("k = {} must exceed lambda/2 = {}", self.k, lambda / 2.0)));
        }
        Ok(())
    }
}

/// Outcome of the condition `n(lambda, k, gamma) < m(alpha1, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mcond {
    /// `m - n`.
    pub margin: f64,
    pub holds: bool,
}

pub fn check_mcond(input: &ThresholdInput) -> Result<Mcond> {
    input.validate()?;
    let margin = m_value(input.alpha1, input.gamma)? - n_value(input.lambda(), input.k as f64, input.gamma)?;
    Ok(Mcond { margin, holds: margin > 0.0 })
}

/// Smallest `gamma` in `(0, sqrt(2 alpha1))` where `m(alpha1, gamma) = n(lambda, k, gamma)`.
pub fn critical_gamma(lambda: f64, k: f64, alpha1: f64) -> Result<f64> {
    if !(lambda > 0.0 && k > lambda / 2.0 && k >= 1.0 && alpha1 > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "critical gamma needs lambda > 0, k > lambda/2, alpha1 > 0; got ({lambda}, {k}, {alpha1})"
        )));
    }
    let margin = |g: f64| -> Result<f64> { Ok(m_value(alpha1, g)? - n_value(lambda, k, g)?) };
    let hi = (2.0 * alpha1).sqrt();
    // Scan for the first sign change, then bisect it.
    const SCAN: usize = 4096;
    let mut a = hi * 1e-9;
    let mut fa = margin(a)?;
    if fa <= 0.0 {
        return Err(Error::NoRoot(format!("margin is not positive near gamma = 0 for ({lambda}, {k}, {alpha1})")));
    }
    for i in 1..=SCAN {
        let b = hi * i as f64 / SCAN as f64;
        let fb = margin(b)?;
        if fb <= 0.0 {
            let (mut lo, mut up) = (a, b);
            while up - lo > 1e-15 * up.max(1.0) {
                let mid = 0.5 * (lo + up);
                if margin(mid)? > 0.0 {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            return Ok(0.5 * (lo + up));
        }
        a = b;
        fa = fb;
    }
    let _ = fa;
    Err(Error::NoRoot(format!("no sign change of m - n on (0, {hi}) for ({lambda}, {k}, {alpha1})")))
}

/// All threshold quantities for one input, as printed by the `thresholds` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub input: ThresholdInput,
    pub lambda: f64,
    pub m: f64,
    pub n: f64,
    pub margin: f64,
    pub mcond: bool,
    pub p_star: f64,
    pub q_star: f64,
    pub s_at_p_star: f64,
    pub critical_gamma: Option<f64>,
}

pub fn threshold_report(input: &ThresholdInput) -> Result<ThresholdReport> {
    let cond = check_mcond(input)?;
    let lambda = input.lambda();
    let k = input.k as f64;
    let p = p_star(input.alpha1, input.gamma)?;
    Ok(ThresholdReport {
        input: *input,
        lambda,
        m: m_value(input.alpha1, input.gamma)?,
        n: n_value(lambda, k, input.gamma)?,
        margin: cond.margin,
        mcond: cond.holds,
        p_star: p,
        q_star: q_star(lambda, k, input.gamma)?,
        s_at_p_star: s_exponent(input.alpha1, input.gamma, p)?,
        critical_gamma: critical_gamma(lambda, k, input.alpha1).ok(),
    })
}
