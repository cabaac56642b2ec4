//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines are always printed; exits nonzero if any criterion fails.

use std::time::Instant;

use rand_core::RngCore;
use sha2::{Digest, Sha256};

use pmatic::analysis::{balance_residual, binary_kl, loss_bounds, optimal_r};
use pmatic::codec::{decode_stream, encode_stream, StreamConfig};
use pmatic::corpus::MarkovSource;
use pmatic::probmodel::{noise_rng, unit_f64};
use pmatic::rangecoder::{BinaryProb, Encoder};
use pmatic::verify;
use pmatic::{Codebook, MismatchWrapper, NGramModel, PmaticParams, Setting};

const SETTINGS: [Setting; 2] = [Setting::One, Setting::Two];

struct Outcome {
    pass: bool,
    summary: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, summary: String) -> Outcome {
    Outcome { pass, summary }
}

fn eps_for(params: &PmaticParams) -> f64 {
    2.0 * params.delta().to_f64()
}

/// Encoder and decoder agree on every quantized value over a dense grid
/// that includes points a few ulps from every threshold.
fn theorem1_grid() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for s in SETTINGS {
        let r = verify::theorem1_grid(&s.params(), 100_000, 11);
        pass &= r.passed() && r.cases >= 1_000_000;
        parts.push(format!("{}: {}/{} agree", s.name(), r.cases - r.failures, r.cases));
    }
    outcome(pass, parts.join(", "))
}

/// A randomized stream: Markov tokens over one of the test alphabets.
fn random_stream(i: u64, sizes: &[u32], max_len: u32) -> (u32, Vec<u32>) {
    let mut rng = noise_rng(0xacce_0000 + i);
    let n = sizes[(i % sizes.len() as u64) as usize];
    let len = 1 + rng.next_u32() % max_len;
    let branching = 1 + rng.next_u32() % 12;
    let spread = 0.5 + 2.0 * unit_f64(&mut rng);
    let source = MarkovSource::new(n, branching, spread, 0.05, rng.next_u64());
    (n, source.generate(len as usize, rng.next_u64()))
}

fn noisy_round_trips() -> Outcome {
    let sizes = [2, 5, 37, 256, 1000];
    let mut parts = Vec::new();
    let mut pass = true;
    for s in SETTINGS {
        let params = s.params();
        let config = StreamConfig::new(params);
        let (mut ok, mut tokens) = (0, 0u64);
        for i in 0..1000u64 {
            let (n, seq) = random_stream(i, &sizes, 2000);
            tokens += seq.len() as u64;
            let cb = Codebook::build(n, i).unwrap();
            let enc = encode_stream(&seq, &cb, &config, NGramModel::with_defaults(n as usize)).unwrap();
            let noisy = MismatchWrapper::uniform_logit(NGramModel::with_defaults(n as usize), eps_for(&params), i);
            if decode_stream(&enc.payload, seq.len() as u64, &cb, &config, noisy).is_ok_and(|d| d == seq) {
                ok += 1;
            }
        }
        pass &= ok == 1000;
        parts.push(format!("{}: {ok}/1000 streams ({tokens} tokens)", s.name()));
    }
    outcome(pass, parts.join(", "))
}

fn adversarial_round_trips() -> Outcome {
    let sizes = [2, 5, 37, 256, 1000];
    let mut parts = Vec::new();
    let mut pass = true;
    for s in SETTINGS {
        let params = s.params();
        let config = StreamConfig::new(params);
        let mut ok = 0;
        for i in 0..100u64 {
            let (n, seq) = random_stream(10_000 + i, &sizes, 1000);
            let cb = Codebook::build(n, i).unwrap();
            let enc = encode_stream(&seq, &cb, &config, NGramModel::with_defaults(n as usize)).unwrap();
            let adv = MismatchWrapper::adversarial_bit(NGramModel::with_defaults(n as usize), params.delta(), i);
            if decode_stream(&enc.payload, seq.len() as u64, &cb, &config, adv).is_ok_and(|d| d == seq) {
                ok += 1;
            }
        }
        pass &= ok == 100;
        parts.push(format!("{}: {ok}/100", s.name()));
    }
    outcome(pass, parts.join(", "))
}

fn plain_coding_breaks() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for s in SETTINGS {
        let params = s.params();
        let config = StreamConfig::plain(params);
        let mut failed = 0;
        for i in 0..100u64 {
            let source = MarkovSource::reference(256, i);
            let seq = source.generate(200, i);
            let cb = Codebook::build(256, i).unwrap();
            let enc = encode_stream(&seq, &cb, &config, NGramModel::with_defaults(256)).unwrap();
            let noisy = MismatchWrapper::uniform_logit(NGramModel::with_defaults(256), eps_for(&params), i);
            if !decode_stream(&enc.payload, seq.len() as u64, &cb, &config, noisy).is_ok_and(|d| d == seq) {
                failed += 1;
            }
        }
        pass &= failed >= 99;
        parts.push(format!("{}: {failed}/100 plain streams failed", s.name()));
    }
    outcome(pass, parts.join(", "))
}

fn proposition1() -> Outcome {
    let r = verify::prop1(&[2, 3, 4], &[0.002, 0.2, 1.0], 10_000, 2024);
    outcome(r.passed() && r.cases == 90_000, format!("{} of {} samples within tanh(eps/2); {}", r.cases - r.failures, r.cases, r.detail))
}

fn loss_bounds_empirical() -> Outcome {
    let n = 64;
    let tokens = MarkovSource::reference(n, 6).generate(200_000, 6);
    let cb = Codebook::build(n, 6).unwrap();
    let ell = cb.ell() as f64;
    let t = tokens.len() as f64;
    let mut parts = Vec::new();
    let mut pass = true;
    for s in SETTINGS {
        let params = s.params();
        let bounds = loss_bounds(&params);
        let pm = encode_stream(&tokens, &cb, &StreamConfig::new(params), NGramModel::with_defaults(n as usize)).unwrap();
        let plain = encode_stream(&tokens, &cb, &StreamConfig::plain(params), NGramModel::with_defaults(n as usize)).unwrap();

        let helper = pm.stats.helper_cost_bits / t;
        let expected = ell * bounds.helper_bits_per_bit;
        let helper_ok = (helper / expected - 1.0).abs() <= 0.15;

        let overhead = (pm.payload.len() as f64 - plain.payload.len() as f64) * 8.0 / t;
        let limit = ell * bounds.per_bit() + 0.2;
        let overhead_ok = overhead <= limit;

        pass &= helper_ok && overhead_ok;
        parts.push(format!(
            "{}: (a) helper {helper:.4} vs {expected:.4} bits/token [{}] (helper-1 rate {:.5}, p' = {}), (b) overhead {overhead:.4} <= {limit:.4} [{}]",
            s.name(),
            if helper_ok { "ok" } else { "outside 15%" },
            pm.stats.helper_ones as f64 / pm.stats.token_bits as f64,
            params.helper_p(),
            if overhead_ok { "ok" } else { "exceeded" },
        ));
    }
    outcome(pass, format!("{} tokens, |A| = {n}: {}", tokens.len(), parts.join("; ")))
}

/// Expected SHA-256 of the criterion 7 stream; guards cross-build determinism.
const CODER_DIGEST: &str = "967f6e1006dd50b6360747d80f052b17bf0a8793ad7b44aca82558d278bc3c8c";

fn coder_run() -> (Vec<u8>, f64) {
    let mut rng = noise_rng(7777);
    let mut enc = Encoder::new();
    let mut ideal = 0.0;
    for _ in 0..100_000 {
        let den = 2 + rng.next_u32() % ((1 << 24) - 1);
        let prob = BinaryProb::new(1 + rng.next_u32() % (den - 1), den).unwrap();
        let bit = unit_f64(&mut rng) < prob.num() as f64 / den as f64;
        enc.encode_bit(bit, prob);
        ideal += prob.cost_bits(bit);
    }
    (enc.finish(), ideal)
}

fn coder_optimality() -> Outcome {
    let (a, ideal) = coder_run();
    let (b, _) = coder_run();
    let slack = a.len() as f64 * 8.0 - ideal;
    let digest = format!("{:x}", Sha256::digest(&a));
    let suite = verify::coder_round_trip(20, 100_000, 99);
    let pass = slack <= 64.0 && a == b && digest == CODER_DIGEST && suite.passed();
    outcome(
        pass,
        format!(
            "length - ideal = {slack:.2} bits, repeat identical = {}, digest {} = {}, {}/{} random streams ok ({})",
            a == b,
            digest,
            if digest == CODER_DIGEST { "frozen" } else { "MISMATCH" },
            suite.cases - suite.failures,
            suite.cases,
            suite.detail
        ),
    )
}

fn quantization_kl() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for s in SETTINGS {
        let params = s.params();
        let m = params.bins();
        let r = params.r().to_f64();
        let bound = 2.0 * std::f64::consts::LOG2_E * r + 1e-12;
        let (mut checked, mut worst) = (0u64, 0.0f64);
        let mut ok = true;
        for num in 1..2 * m {
            let phat = num as f64 / (2 * m) as f64;
            for i in 0..=10_000 {
                let p = (phat - r + 2.0 * r * i as f64 / 10_000.0).clamp(0.0, 1.0);
                let kl = binary_kl(p, phat).unwrap();
                worst = worst.max(kl);
                ok &= kl <= bound;
                checked += 1;
            }
        }
        pass &= ok;
        parts.push(format!("{}: {checked} points, max KL {worst:.6} <= {bound:.6}", s.name()));
    }
    outcome(pass, parts.join(", "))
}

fn optimal_radius() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for delta in [1e-3, 1e-5] {
        let opt = optimal_r(delta).unwrap();
        let residual = balance_residual(delta, opt.balanced).abs();
        pass &= residual <= 1e-9;
        if delta == 1e-3 {
            pass &= (0.03..=0.07).contains(&opt.balanced);
        }
        parts.push(format!("delta {delta:e}: r = {:.6} (residual {residual:.1e}, closed form {:.6})", opt.balanced, opt.closed_form));
    }
    outcome(pass, parts.join(", "))
}

fn main() {
    // libtest passes flags like --nocapture or a filter; none apply here.
    let criteria: [Criterion; 9] = [
        ("quantization agreement grid", theorem1_grid),
        ("round trip under logit noise eps = 2 delta", noisy_round_trips),
        ("round trip under per-bit offsets of +-delta", adversarial_round_trips),
        ("plain arithmetic coding fails under noise", plain_coding_breaks),
        ("conditional TV within tanh(eps/2)", proposition1),
        ("empirical helper cost and total overhead", loss_bounds_empirical),
        ("range coder length and determinism", coder_optimality),
        ("quantization KL bound", quantization_kl),
        ("optimal bin radius", optimal_radius),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict} {name} ({:.1}s): {}", i + 1, start.elapsed().as_secs_f64(), o.summary);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
