use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pmatic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmatic")).args(args).output().expect("run pmatic")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TEXT: &str = "It was the best of times, it was the worst of times, it was the age of wisdom, \
                    it was the age of foolishness, it was the epoch of belief.";

#[test]
fn bytes_round_trip_under_noise_both_settings() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.txt");
    fs::write(&input, TEXT.repeat(4)).unwrap();
    for (flag, eps) in [("--setting1", "0.002"), ("--setting2", "0.00002")] {
        let packed = path(&dir, "x.pmtc");
        let output = path(&dir, "out.txt");
        let c = pmatic(&["compress", s(&input), "-o", s(&packed), flag]);
        assert_eq!(code(&c), 0, "{}", String::from_utf8_lossy(&c.stderr));
        let d = pmatic(&["decompress", s(&packed), "-o", s(&output), "--mismatch-eps", eps, "--mismatch-seed", "9"]);
        assert_eq!(code(&d), 0, "{}", String::from_utf8_lossy(&d.stderr));
        assert_eq!(fs::read(&output).unwrap(), fs::read(&input).unwrap());
    }
}

#[test]
fn token_input_with_custom_params() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "ids.txt");
    let ids: Vec<String> = (0..400).map(|i| ((i * 7 + i / 3) % 37).to_string()).collect();
    fs::write(&input, ids.join(" ")).unwrap();
    let packed = path(&dir, "ids.pmtc");
    let output = path(&dir, "ids.out");
    let c = pmatic(&[
        "compress", s(&input), "-o", s(&packed), "--input-format", "tokens", "--vocab", "40",
        "--delta", "1/2000", "--r", "1/40", "--codebook-seed", "5", "--context-max", "64", "--context-keep", "16",
    ]);
    assert_eq!(code(&c), 0, "{}", String::from_utf8_lossy(&c.stderr));

    let info = pmatic(&["inspect", s(&packed), "--json"]);
    assert_eq!(code(&info), 0);
    let v: serde_json::Value = serde_json::from_slice(&info.stdout).unwrap();
    assert_eq!(v["header"]["alphabet_size"], 40);
    assert_eq!(v["header"]["codebook_seed"], 5);
    assert_eq!(v["header"]["bins"], 20);
    assert_eq!(v["header"]["token_count"], 400);
    assert_eq!(v["header"]["context"]["max_window"], 64);
    assert_eq!(v["ell"], 6);
    assert_eq!(v["helper_p"], "1/50");

    let d = pmatic(&["decompress", s(&packed), "-o", s(&output), "--mismatch-eps", "0.001"]);
    assert_eq!(code(&d), 0, "{}", String::from_utf8_lossy(&d.stderr));
    assert_eq!(fs::read_to_string(&output).unwrap().trim(), ids.join(" "));
}

#[test]
fn inspect_prints_header_text() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.txt");
    fs::write(&input, TEXT).unwrap();
    let packed = path(&dir, "x.pmtc");
    assert_eq!(code(&pmatic(&["compress", s(&input), "-o", s(&packed), "--predictor", "byte-uniform"])), 0);
    let out = pmatic(&["inspect", s(&packed)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("delta           1/1000"), "{text}");
    assert!(text.contains("byte-uniform"), "{text}");
    assert!(text.contains(&format!("tokens          {}", TEXT.len())), "{text}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.txt");
    fs::write(&input, TEXT.repeat(3)).unwrap();
    let packed = path(&dir, "x.pmtc");
    assert_eq!(code(&pmatic(&["compress", s(&input), "-o", s(&packed)])), 0);
    let bytes = fs::read(&packed).unwrap();

    // Validation: bad parameters, missing file, bad header.
    assert_eq!(code(&pmatic(&["compress", s(&input), "-o", s(&packed), "--delta", "0.001", "--r", "0.03"])), 2);
    assert_eq!(code(&pmatic(&["compress", "/nonexistent/file", "-o", s(&packed)])), 2);
    let bad = path(&dir, "bad.pmtc");
    let mut wrong_magic = bytes.clone();
    wrong_magic[0] = b'X';
    fs::write(&bad, &wrong_magic).unwrap();
    assert_eq!(code(&pmatic(&["decompress", s(&bad), "-o", s(&path(&dir, "o"))])), 2);
    assert_eq!(code(&pmatic(&["inspect", s(&bad)])), 2);

    // Decode failure: truncated payload.
    fs::write(&bad, &bytes[..bytes.len() - 10]).unwrap();
    assert_eq!(code(&pmatic(&["decompress", s(&bad), "-o", s(&path(&dir, "o"))])), 3);

    // Decode failure: noise far beyond the tolerance.
    let out = pmatic(&["decompress", s(&packed), "-o", s(&path(&dir, "o")), "--mismatch-eps", "3"]);
    if code(&out) == 0 {
        assert_ne!(fs::read(path(&dir, "o")).unwrap(), fs::read(&input).unwrap());
    } else {
        assert_eq!(code(&out), 3);
    }

    // Bridge failure: the external process vanishes during the handshake.
    let ext = path(&dir, "ext.pmtc");
    let out = pmatic(&["compress", s(&input), "-o", s(&ext), "--predictor", "external", "--bridge-cmd", "exit 0"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    // External predictor without a command is a usage error.
    assert_eq!(code(&pmatic(&["compress", s(&input), "-o", s(&ext), "--predictor", "external"])), 2);
}

/// A shell predictor: uniform logits over 4 symbols, answering each line.
const STUB: &str = r#"while read cmd rest; do case "$cmd" in HELLO) echo "OK vocab=4";; PREDICT) echo "LOGITS 4 0 0.5 -1 0.25";; RESET) echo OK;; esac; done"#;

#[test]
fn external_bridge_round_trip() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "ids.txt");
    fs::write(&input, "0 1 2 3 3 2 1 0 1 1 2 0").unwrap();
    let packed = path(&dir, "ids.pmtc");
    let output = path(&dir, "ids.out");
    let c = pmatic(&[
        "compress", s(&input), "-o", s(&packed), "--input-format", "tokens", "--vocab", "4", "--predictor",
        "external", "--bridge-cmd", STUB,
    ]);
    assert_eq!(code(&c), 0, "{}", String::from_utf8_lossy(&c.stderr));
    let d = pmatic(&["decompress", s(&packed), "-o", s(&output), "--bridge-cmd", STUB, "--mismatch-eps", "0.002"]);
    assert_eq!(code(&d), 0, "{}", String::from_utf8_lossy(&d.stderr));
    assert_eq!(fs::read_to_string(&output).unwrap().trim(), "0 1 2 3 3 2 1 0 1 1 2 0");

    // Decoding an external container without a bridge command is a usage error.
    assert_eq!(code(&pmatic(&["decompress", s(&packed), "-o", s(&output)])), 2);
    // A bridge that answers with the wrong vocabulary.
    let wrong = STUB.replace("OK vocab=4", "OK vocab=5");
    assert_eq!(code(&pmatic(&["decompress", s(&packed), "-o", s(&output), "--bridge-cmd", &wrong])), 2);
    // A bridge that sends too few logits.
    let short = STUB.replace("LOGITS 4 0 0.5 -1 0.25", "LOGITS 3 0 0.5 -1");
    assert_eq!(code(&pmatic(&["decompress", s(&packed), "-o", s(&output), "--bridge-cmd", &short])), 4);
}

#[test]
fn bench_reports_json() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "in.txt");
    fs::write(&input, TEXT.repeat(10)).unwrap();
    let out = pmatic(&["bench", s(&input), "--chunk", "600", "--setting1", "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), TEXT.len() * 10 / 600 + 1);
    for r in rows {
        assert_eq!(r["decode_success"], true);
        assert_eq!(r["setting"], "setting1");
        assert_eq!(r["mismatch_seed"], 1);
    }
    assert_eq!(v["aggregate"][0]["tokens"], TEXT.len() * 10);

    let out = pmatic(&["bench", "--synthetic", "3000", "--vocab", "64", "--chunk", "1000", "--per-file"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("setting1") && text.contains("setting2"), "{text}");
    assert!(text.contains("total (3 files)"), "{text}");
}

#[test]
fn verify_quick_passes() {
    let out = pmatic(&["verify", "--quick", "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    let out = pmatic(&["verify", "--suite", "prop1", "--quick"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("PASS prop1"));
}
