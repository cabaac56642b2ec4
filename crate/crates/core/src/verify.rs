//! Invariant suites run by `pmatic verify` and reused by the tests.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand_core::RngCore;
use serde::Serialize;

use crate::params::PmaticParams;
use crate::probmodel::{cond_tv_bruteforce, noise_rng, perturb_logits, prop1_bound, softmax, unit_f64, LogitVector};
use crate::quantize::{classify_encoder, quantize_decoder};
use crate::rangecoder::{BinaryProb, Decoder, Encoder};
use crate::rational::Rational;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

/// Exact test of `|q - p| <= delta`.
pub fn within_delta(p: f64, q: f64, delta: Rational) -> bool {
    let d = delta.to_f64();
    // The float difference is within a relative 2^-53 of the exact one.
    let approx = (q - p).abs();
    if approx < d * (1.0 - 1e-12) {
        return true;
    }
    if approx > d * (1.0 + 1e-12) {
        return false;
    }
    let diff = BigRational::from_float(q).expect("finite") - BigRational::from_float(p).expect("finite");
    let bound = BigRational::new(BigInt::from(delta.numer()), BigInt::from(delta.denom()));
    diff <= bound && -diff <= bound
}

/// The float farthest from `p` on the side of `q` with `|q - p| <= delta`
/// exactly, when `q` itself is outside.
pub fn pull_within(p: f64, q: f64, delta: Rational) -> f64 {
    if within_delta(p, q, delta) {
        return q;
    }
    // Jump to the rounded edge; usually a few ulps then suffice.
    let d = delta.to_f64();
    let mut bad = if q > p { p + d } else { p - d };
    for _ in 0..8 {
        if within_delta(p, bad, delta) {
            return bad;
        }
        bad = if q > p { bad.next_down() } else { bad.next_up() };
    }
    // Near zero the ulps are tiny (p - d can round to 0.0), so bisect.
    let mut good = p;
    loop {
        let mid = good / 2.0 + bad / 2.0;
        if mid == good || mid == bad {
            return good;
        }
        if within_delta(p, mid, delta) {
            good = mid;
        } else {
            bad = mid;
        }
    }
}

fn ulp_walk(x: f64, steps: i32) -> f64 {
    let mut y = x;
    for _ in 0..steps.unsigned_abs() {
        y = if steps > 0 { y.next_up() } else { y.next_down() };
    }
    y
}

/// Encoder probabilities for the agreement grid: `grid` evenly spaced points
/// plus every interior edge `k/m +- delta` and boundary `k/m`, each with a
/// few ulps either side.
pub fn theorem1_points(params: &PmaticParams, grid: usize) -> Vec<f64> {
    let m = params.bins();
    let d = params.delta().to_f64();
    let mut pts: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) / grid as f64).collect();
    for k in 0..=m {
        let b = k as f64 / m as f64;
        for centre in [b - d, b, b + d] {
            for s in -4..=4 {
                let p = ulp_walk(centre, s);
                if p > 0.0 && p < 1.0 {
                    pts.push(p);
                }
            }
        }
    }
    pts
}

/// Agreement between encoder and decoder quantization for every grid point
/// and `offsets` decoder offsets spread over `[-delta, delta]` (endpoints
/// included), plus offsets that land the decoder a few ulps from a
/// threshold.
pub fn theorem1_grid(params: &PmaticParams, grid: usize, offsets: usize) -> SuiteReport {
    let delta = params.delta();
    let d = delta.to_f64();
    let m = params.bins() as f64;
    let (mut cases, mut failures) = (0u64, 0u64);
    let mut first_failure = None;
    let offsets = offsets.max(2);
    let mut check = |p: f64, q: f64| {
        let q = pull_within(p, q.clamp(f64::MIN_POSITIVE, 1.0f64.next_down()), delta);
        cases += 1;
        let enc = classify_encoder(p, params).expect("p in (0, 1)");
        let ok = quantize_decoder(q, enc.helper_bit, params).is_ok_and(|dec| dec.phat() == enc.phat());
        if !ok {
            failures += 1;
            first_failure.get_or_insert((p, q));
        }
    };
    for p in theorem1_points(params, grid) {
        for j in 0..offsets {
            let off = -d + 2.0 * d * j as f64 / (offsets - 1) as f64;
            check(p, p + off);
        }
        // Decoder values hugging the nearest threshold.
        let k = (p * m).round();
        for target in [k / m - d, k / m, k / m + d] {
            for s in [-2, 0, 2] {
                let q = ulp_walk(target, s);
                if (q - p).abs() <= d * 1.000001 {
                    check(p, q);
                }
            }
        }
    }
    SuiteReport {
        name: "theorem1-grid".into(),
        cases,
        failures,
        detail: match first_failure {
            Some((p, q)) => format!("first disagreement at p = {p:e}, q = {q:e}"),
            None => format!("delta = {delta}, m = {}", params.bins()),
        },
    }
}

/// Brute-force conditional TV against `tanh(eps/2)` for random logits and
/// noise bounded by `eps` in every coordinate.
pub fn prop1(sizes: &[usize], eps_values: &[f64], samples: usize, seed: u64) -> SuiteReport {
    let mut rng = noise_rng(seed);
    let (mut cases, mut failures) = (0u64, 0u64);
    let mut worst = 0.0f64;
    for &eps in eps_values {
        let bound = prop1_bound(eps);
        for &n in sizes {
            for _ in 0..samples {
                let u: Vec<f64> = (0..n).map(|_| 8.0 * unit_f64(&mut rng) - 4.0).collect();
                let u = LogitVector::new(u).expect("finite");
                let v = perturb_logits(&u, eps, &mut rng);
                let tv = cond_tv_bruteforce(&softmax(&u), &softmax(&v)).expect("small alphabet");
                cases += 1;
                if tv > bound + 1e-12 {
                    failures += 1;
                }
                if bound > 0.0 {
                    worst = worst.max(tv / bound);
                }
            }
        }
    }
    SuiteReport {
        name: "prop1".into(),
        cases,
        failures,
        detail: format!("largest d_condTV / tanh(eps/2) = {worst:.6}"),
    }
}

/// Random binary streams with random probabilities: exact round trip,
/// lockstep coder state, and length within 64 bits of the ideal.
pub fn coder_round_trip(streams: usize, events: usize, seed: u64) -> SuiteReport {
    let mut rng = noise_rng(seed);
    let (mut cases, mut failures) = (0u64, 0u64);
    let mut worst_slack = f64::NEG_INFINITY;
    for _ in 0..streams {
        let mut enc = Encoder::new();
        let mut ideal = 0.0;
        let mut events_log = Vec::with_capacity(events);
        for _ in 0..events {
            let den = 2 + rng.next_u32() % ((1 << 24) - 1);
            let prob = BinaryProb::new(1 + rng.next_u32() % (den - 1), den).expect("valid");
            let pr = prob.num() as f64 / den as f64;
            let bit = unit_f64(&mut rng) < pr;
            enc.encode_bit(bit, prob);
            ideal += prob.cost_bits(bit);
            events_log.push((bit, prob, enc.interval()));
        }
        let out = enc.finish();
        let slack = out.len() as f64 * 8.0 - ideal;
        worst_slack = worst_slack.max(slack);
        cases += 1;
        let mut ok = slack <= 64.0;
        match Decoder::new(&out) {
            Ok(mut dec) => {
                for &(bit, prob, state) in &events_log {
                    if dec.decode_bit(prob) != Ok(bit) || dec.interval() != state {
                        ok = false;
                        break;
                    }
                }
            }
            Err(_) => ok = false,
        }
        failures += !ok as u64;
    }
    SuiteReport {
        name: "coder-round-trip".into(),
        cases,
        failures,
        detail: format!("largest length minus ideal = {worst_slack:.2} bits"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Setting;

    #[test]
    fn small_suites_pass() {
        for s in [Setting::One, Setting::Two] {
            let r = theorem1_grid(&s.params(), 2000, 7);
            assert!(r.passed(), "{r:?}");
        }
        assert!(prop1(&[2, 3], &[0.002, 1.0], 200, 1).passed());
        assert!(coder_round_trip(5, 2000, 2).passed());
    }

    #[test]
    fn exact_distance_check() {
        let delta = Rational::new(1, 1000).unwrap();
        // 0.001 as a float is slightly above 1/1000.
        assert!(!within_delta(0.0, 0.001, delta));
        assert!(within_delta(0.0, 0.001f64.next_down(), delta));
        let q = pull_within(0.5, 0.6, delta);
        assert!(within_delta(0.5, q, delta) && !within_delta(0.5, q.next_up(), delta));
        // 0.001 - 0.001 is 0.0, which is just outside the exact distance.
        let q = pull_within(0.001, 0.0, delta);
        assert!(q > 0.0 && within_delta(0.001, q, delta) && !within_delta(0.001, q.next_down(), delta));
    }

    #[test]
    fn offsets_beyond_delta_break_agreement() {
        let params = Setting::One.params();
        let wide = Rational::new(3, 100).unwrap();
        let mut bad = 0;
        for p in theorem1_points(&params, 1000) {
            let enc = classify_encoder(p, &params).unwrap();
            let q = pull_within(p, (p + 0.03).min(0.999), wide);
            if quantize_decoder(q, enc.helper_bit, &params).unwrap().phat() != enc.phat() {
                bad += 1;
            }
        }
        assert!(bad > 0);
    }
}
