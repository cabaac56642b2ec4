//! Validated coding parameters: mismatch tolerance `delta`, bin radius `r`,
//! bin count `m = 1/(2r)` and the helper-bit probability `delta / r`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rangecoder::{BinaryProb, MAX_DENOMINATOR};
use crate::rational::{cmp_f64_frac, Rational, RationalError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("delta and r must be positive (delta = {delta}, r = {r})")]
    NotPositive { delta: Rational, r: Rational },
    #[error("bin radius r = {r} must exceed 2 * delta = {two_delta}")]
    RadiusTooSmall { r: Rational, two_delta: Rational },
    #[error("1/(2r) is not a positive integer for r = {0}")]
    NotReciprocalEvenInteger(Rational),
    #[error("helper probability delta/r = {0} is outside (0, 1/2)")]
    HelperProbOutOfRange(Rational),
    #[error("{what} denominator {den} exceeds the coder limit {MAX_DENOMINATOR}")]
    DenominatorTooLarge { what: &'static str, den: u64 },
    #[error(transparent)]
    Rational(#[from] RationalError),
}

/// Named presets used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// delta = 0.001, r = 0.05
    One,
    /// delta = 0.00001, r = 0.005
    Two,
}

impl Setting {
    pub fn params(self) -> PmaticParams {
        let (delta, r) = match self {
            Setting::One => (Rational::new(1, 1000), Rational::new(1, 20)),
            Setting::Two => (Rational::new(1, 100_000), Rational::new(1, 200)),
        };
        PmaticParams::new(delta.unwrap(), r.unwrap()).expect("preset parameters are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting::One => "setting1",
            Setting::Two => "setting2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmaticParams {
    delta: Rational,
    r: Rational,
    m: u32,
    helper_p: Rational,
}

impl PmaticParams {
    pub fn new(delta: Rational, r: Rational) -> Result<Self, ParamsError> {
        if !delta.is_positive() || !r.is_positive() {
            return Err(ParamsError::NotPositive { delta, r });
        }
        let two_delta = delta.checked_mul(Rational::from_integer(2))?;
        if r <= two_delta {
            return Err(ParamsError::RadiusTooSmall { r, two_delta });
        }
        let m = r.checked_mul(Rational::from_integer(2))?.recip()?;
        if m.denom() != 1 || m.numer() < 1 {
            return Err(ParamsError::NotReciprocalEvenInteger(r));
        }
        let helper_p = delta.checked_div(r)?;
        if helper_p >= Rational::new(1, 2)? {
            return Err(ParamsError::HelperProbOutOfRange(helper_p));
        }
        let m_u = m.numer() as u64;
        if 2 * m_u > MAX_DENOMINATOR as u64 {
            return Err(ParamsError::DenominatorTooLarge { what: "bin", den: 2 * m_u });
        }
        if helper_p.denom() > MAX_DENOMINATOR as u64 {
            return Err(ParamsError::DenominatorTooLarge { what: "helper probability", den: helper_p.denom() });
        }
        Ok(PmaticParams { delta, r, m: m_u as u32, helper_p })
    }

    /// Rebuild parameters from `(delta, m)` as stored in a container header.
    pub fn from_delta_and_bins(delta: Rational, m: u32) -> Result<Self, ParamsError> {
        if m == 0 {
            return Err(ParamsError::NotPositive { delta, r: Rational::ZERO });
        }
        Self::new(delta, Rational::new(1, 2 * m as u64)?)
    }

    pub fn delta(&self) -> Rational {
        self.delta
    }

    pub fn r(&self) -> Rational {
        self.r
    }

    pub fn bins(&self) -> u32 {
        self.m
    }

    pub fn helper_p(&self) -> Rational {
        self.helper_p
    }

    /// The fixed coder probability used for every helper bit.
    pub fn helper_prob(&self) -> BinaryProb {
        BinaryProb::new(self.helper_p.numer() as u32, self.helper_p.denom() as u32)
            .expect("validated at construction")
    }

    /// Exact ordering of `x` relative to `k/m + sign * delta`.
    pub(crate) fn cmp_edge(&self, x: f64, k: u32, sign: i8) -> Ordering {
        let dn = self.delta.numer() as i128;
        let dd = self.delta.denom() as u128;
        let m = self.m as i128;
        let num = k as i128 * dd as i128 + sign as i128 * dn * m;
        cmp_f64_frac(x, num, m as u128 * dd)
    }

    /// Exact ordering of `x` relative to `num / (2m)`.
    pub(crate) fn cmp_half_grid(&self, x: f64, num: u32) -> Ordering {
        cmp_f64_frac(x, num as i128, 2 * self.m as u128)
    }
}
