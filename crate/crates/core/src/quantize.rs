//! Probability quantization with helper bits.
//!
//! `[0, 1]` is cut into `m` bins `I_k = [(k-1)/m, k/m]` of radius `r`. The
//! delta-interior of a bin is the closed interval
//! `[(k-1)/m + delta, k/m - delta]`, except that the first bin starts at 0
//! and the last ends at 1. An encoder probability inside some interior is
//! quantized to that bin's center `(2k-1)/(2m)` (helper bit 0); any other
//! probability is strictly within `delta` of exactly one inner boundary
//! `k/m`, which becomes the quantized value (helper bit 1).
//!
//! A decoder whose probability differs by at most `delta` recovers the same
//! value: with helper 0 its probability still lies in the same bin, and with
//! helper 1 the nearest boundary is the same one because `r > 2 delta`.
//!
//! All threshold tests compare the float exactly against rationals.

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::params::PmaticParams;
use crate::rangecoder::BinaryProb;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizeError {
    #[error("probability {p} is neither in a bin interior nor near a boundary")]
    InternalInconsistency { p: f64 },
    #[error("probability {0} is outside (0, 1)")]
    OutOfRange(f64),
}

/// An agreed probability on the `1/(2m)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum QuantPoint {
    /// Center of bin `k` (1-based): `(2k - 1) / (2m)`.
    Center(u32),
    /// Inner boundary `k / m`, `1 <= k < m`.
    Boundary(u32),
}

impl QuantPoint {
    /// Numerator over the common denominator `2m`.
    pub fn half_grid_numer(self) -> u32 {
        match self {
            QuantPoint::Center(k) => 2 * k - 1,
            QuantPoint::Boundary(k) => 2 * k,
        }
    }

    pub fn helper_bit(self) -> bool {
        matches!(self, QuantPoint::Boundary(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Quantization {
    pub helper_bit: bool,
    pub point: QuantPoint,
    #[serde(skip)]
    m: u32,
}

impl Quantization {
    fn new(point: QuantPoint, m: u32) -> Self {
        Quantization { helper_bit: point.helper_bit(), point, m }
    }

    /// The quantized probability as an exact rational.
    pub fn phat(&self) -> Rational {
        Rational::new(self.point.half_grid_numer() as i64, 2 * self.m as u64).expect("nonzero denominator")
    }

    pub fn prob(&self) -> BinaryProb {
        BinaryProb::new(self.point.half_grid_numer(), 2 * self.m).expect("quantized points lie in [r, 1 - r]")
    }
}

/// 1-based index of the bin holding `x`, using half-open bins
/// `[(k-1)/m, k/m)` with the last bin closed at 1.
fn bin_of(x: f64, params: &PmaticParams) -> u32 {
    let m = params.bins();
    let mut k = ((x * m as f64).floor().max(0.0) as u32).min(m - 1);
    while k > 0 && params.cmp_edge(x, k, 0) == Ordering::Less {
        k -= 1;
    }
    while k + 1 < m && params.cmp_edge(x, k + 1, 0) != Ordering::Less {
        k += 1;
    }
    k + 1
}

/// Encoder-side classification of a next-bit probability `p`.
pub fn classify_encoder(p: f64, params: &PmaticParams) -> Result<Quantization, QuantizeError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(QuantizeError::OutOfRange(p));
    }
    let m = params.bins();
    let k = bin_of(p, params);

    // Lower interior edge: (k-1)/m + delta, absent for the first bin.
    let above_lower = k == 1 || params.cmp_edge(p, k - 1, 1) != Ordering::Less;
    // Upper interior edge: k/m - delta, absent for the last bin.
    let below_upper = k == m || params.cmp_edge(p, k, -1) != Ordering::Greater;
    if above_lower && below_upper {
        return Ok(Quantization::new(QuantPoint::Center(k), m));
    }

    // Strictly within delta of an inner boundary.
    let near = |b: u32| {
        (1..m).contains(&b)
            && params.cmp_edge(p, b, -1) == Ordering::Greater
            && params.cmp_edge(p, b, 1) == Ordering::Less
    };
    if !above_lower && near(k - 1) {
        return Ok(Quantization::new(QuantPoint::Boundary(k - 1), m));
    }
    if !below_upper && near(k) {
        return Ok(Quantization::new(QuantPoint::Boundary(k), m));
    }
    Err(QuantizeError::InternalInconsistency { p })
}

/// Decoder-side quantization of its own probability `q` given the helper bit.
///
/// Helper 0 maps to the center of the bin holding `q`. Helper 1 maps to
/// the nearest inner boundary; an exact tie goes to the smaller index.
pub fn quantize_decoder(q: f64, helper_bit: bool, params: &PmaticParams) -> Result<Quantization, QuantizeError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(QuantizeError::OutOfRange(q));
    }
    let m = params.bins();
    let k = bin_of(q, params);
    if !helper_bit {
        return Ok(Quantization::new(QuantPoint::Center(k), m));
    }
    // q in [(k-1)/m, k/m): candidates are boundaries k-1 and k; the bin
    // center (2k-1)/(2m) is their midpoint.
    let b = if k == 1 {
        1
    } else if k == m {
        m - 1
    } else if params.cmp_half_grid(q, 2 * k - 1) == Ordering::Greater {
        k
    } else {
        k - 1
    };
    Ok(Quantization::new(QuantPoint::Boundary(b), m))
}

/// Clamp a conditional probability into the open unit interval so that
/// forced bits (exactly 0 or 1) land in the first or last bin interior.
pub fn clamp_open(p: f64) -> f64 {
    const LO: f64 = 1.0 / (1u64 << 53) as f64;
    p.clamp(LO, 1.0 - LO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Setting;
    use proptest::prelude::*;

    fn s1() -> PmaticParams {
        Setting::One.params()
    }

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn encoder_examples() {
        let c = classify_encoder(0.33, &s1()).unwrap();
        assert!(!c.helper_bit);
        assert_eq!(c.phat(), q("7/20"));

        let c = classify_encoder(0.5, &s1()).unwrap();
        assert!(c.helper_bit);
        assert_eq!(c.phat(), q("1/2"));

        let c = classify_encoder(0.0005, &s1()).unwrap();
        assert!(!c.helper_bit);
        assert_eq!(c.phat(), q("1/20"));

        let c = classify_encoder(0.0996, &s1()).unwrap();
        assert!(c.helper_bit);
        assert_eq!(c.phat(), q("1/10"));

        assert_eq!(classify_encoder(0.9995, &s1()).unwrap().phat(), q("19/20"));
        assert!(classify_encoder(0.0, &s1()).is_err());
        assert!(classify_encoder(1.0, &s1()).is_err());
    }

    #[test]
    fn decoder_examples() {
        assert_eq!(quantize_decoder(0.349, false, &s1()).unwrap().phat(), q("7/20"));
        assert_eq!(quantize_decoder(0.502, true, &s1()).unwrap().phat(), q("1/2"));
        assert_eq!(quantize_decoder(0.999, false, &s1()).unwrap().phat(), q("19/20"));
        // Boundary membership: 0.5 belongs to the bin above it.
        assert_eq!(quantize_decoder(0.5, false, &s1()).unwrap().phat(), q("11/20"));
        assert_eq!(quantize_decoder(0.34, true, &s1()).unwrap().phat(), q("3/10"));
        // An exact tie (q = 3/8 between 1/4 and 1/2) goes to the smaller boundary.
        let dyadic = PmaticParams::new(q("1/1024"), q("1/8")).unwrap();
        assert_eq!(quantize_decoder(0.375, true, &dyadic).unwrap().phat(), q("1/4"));
        assert_eq!(quantize_decoder(0.36, true, &s1()).unwrap().phat(), q("2/5"));
        // Helper 1 in the outer bins still picks an inner boundary.
        assert_eq!(quantize_decoder(0.01, true, &s1()).unwrap().phat(), q("1/10"));
        assert_eq!(quantize_decoder(0.99, true, &s1()).unwrap().phat(), q("9/10"));
    }

    #[test]
    fn interior_edges_are_closed() {
        let p = s1();
        // A dyadic delta makes the interior edges exact floats.
        let dyadic = PmaticParams::new(q("1/1024"), q("1/8")).unwrap();
        let edge = 0.25 + 1.0 / 1024.0;
        assert!(!classify_encoder(edge, &dyadic).unwrap().helper_bit);
        assert!(classify_encoder(edge.next_down(), &dyadic).unwrap().helper_bit);
        let edge = 0.5 - 1.0 / 1024.0;
        assert!(!classify_encoder(edge, &dyadic).unwrap().helper_bit);
        assert!(classify_encoder(edge.next_up(), &dyadic).unwrap().helper_bit);
        // The tiniest and largest values sit in outer-bin interiors.
        assert_eq!(classify_encoder(clamp_open(0.0), &p).unwrap().point, QuantPoint::Center(1));
        assert_eq!(classify_encoder(clamp_open(1.0), &p).unwrap().point, QuantPoint::Center(10));
    }

    #[test]
    fn phat_stays_inside_r_band() {
        for setting in [Setting::One, Setting::Two] {
            let p = setting.params();
            let (r, one_minus_r) = (p.r(), Rational::ONE.checked_sub(p.r()).unwrap());
            for i in 1..100_000 {
                let x = i as f64 / 100_000.0;
                for h in [false, true] {
                    let v = quantize_decoder(x, h, &p).unwrap().phat();
                    assert!(v >= r && v <= one_minus_r);
                }
                let v = classify_encoder(x, &p).unwrap().phat();
                assert!(v >= r && v <= one_minus_r);
            }
        }
    }

    proptest! {
        #[test]
        fn agreement_under_bounded_offset(p in 1e-12f64..1.0, frac in -1.0f64..=1.0, two in any::<bool>()) {
            let params = if two { Setting::Two.params() } else { Setting::One.params() };
            let d = params.delta().to_f64();
            let qv = clamp_open(p + frac * d * (1.0 - 1e-9));
            let enc = classify_encoder(p, &params).unwrap();
            let dec = quantize_decoder(qv, enc.helper_bit, &params).unwrap();
            prop_assert_eq!(enc.phat(), dec.phat());
        }

        #[test]
        fn distance_to_phat(p in 1e-12f64..1.0) {
            let params = s1();
            let c = classify_encoder(p, &params).unwrap();
            let dist = (c.phat().to_f64() - p).abs();
            if c.helper_bit {
                prop_assert!(dist < params.delta().to_f64() * (1.0 + 1e-9));
            } else {
                prop_assert!(dist <= params.r().to_f64() * (1.0 + 1e-12));
            }
        }
    }
}
