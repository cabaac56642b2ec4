//! Closed-form loss analysis. All logarithms are base 2.
//!
//! These are plain `f64` computations; nothing here feeds the coding path.

use serde::Serialize;
use thiserror::Error;

use crate::params::PmaticParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("argument {0} outside the function's domain")]
    DomainError(f64),
    #[error("balance equation has no sign change on (2 delta, 1/2) for delta = {0}")]
    NoRoot(f64),
}

/// h(p) in bits.
pub fn binary_entropy(p: f64) -> Result<f64, AnalysisError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(AnalysisError::DomainError(p));
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Binary KL divergence D(p || q) in bits, with `0 log 0 = 0`.
pub fn binary_kl(p: f64, q: f64) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalysisError::DomainError(p));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(AnalysisError::DomainError(q));
    }
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).log2() };
    Ok((term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0))
}

/// Per-bit loss terms: entropy of a helper bit and the quantization KL bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBounds {
    pub helper_bits_per_bit: f64,
    pub quant_bits_per_bit: f64,
}

impl LossBounds {
    pub fn per_bit(&self) -> f64 {
        self.helper_bits_per_bit + self.quant_bits_per_bit
    }

    /// Loss bound for a token of `ell` bits.
    pub fn per_token(&self, ell: u32) -> f64 {
        ell as f64 * self.per_bit()
    }
}

pub fn loss_bounds(params: &PmaticParams) -> LossBounds {
    let helper = binary_entropy(params.helper_p().to_f64()).expect("helper_p is in (0, 1/2)");
    LossBounds {
        helper_bits_per_bit: helper,
        quant_bits_per_bit: 2.0 * std::f64::consts::LOG2_E * params.r().to_f64(),
    }
}

/// Helper-bit cost as approximated in the balance equation: (delta/r) log(r/delta).
pub fn approx_helper_term(delta: f64, r: f64) -> f64 {
    delta / r * (r / delta).log2()
}

pub fn quant_term(r: f64) -> f64 {
    2.0 * std::f64::consts::LOG2_E * r
}

/// Residual of `2 log(e) r^2 = delta log(r / delta)`.
pub fn balance_residual(delta: f64, r: f64) -> f64 {
    2.0 * std::f64::consts::LOG2_E * r * r - delta * (r / delta).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalRadius {
    /// `sqrt(delta log(1/delta)) / sqrt(2 log e)`.
    pub closed_form: f64,
    /// Root of the balance equation, found by bisection.
    pub balanced: f64,
}

pub fn optimal_r(delta: f64) -> Result<OptimalRadius, AnalysisError> {
    if !(delta > 0.0 && delta < 0.125) {
        return Err(AnalysisError::DomainError(delta));
    }
    let closed_form = (delta * (1.0 / delta).log2() / (2.0 * std::f64::consts::LOG2_E)).sqrt();

    let mut lo = 2.0 * delta;
    let mut hi = 0.5;
    let f_lo = balance_residual(delta, lo);
    let f_hi = balance_residual(delta, hi);
    if f_lo.signum() == f_hi.signum() {
        return Err(AnalysisError::NoRoot(delta));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if (balance_residual(delta, mid) < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(OptimalRadius { closed_form, balanced: 0.5 * (lo + hi) })
}
