use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pmatic::bench::{self, BenchFile, BenchOptions, BenchSummary, DEFAULT_CHUNK_BYTES};
use pmatic::container::{self, open, CompressOptions};
use pmatic::corpus::MarkovSource;
use pmatic::predictor::{from_id, DEFAULT_BRIDGE_TIMEOUT};
use pmatic::verify::{self, SuiteReport};
use pmatic::{
    codebook, loss_bounds, BridgeClient, ContextPolicy, MismatchWrapper, NGramModel, PmaticParams, Predictor,
    PredictorError, Rational, Setting, UniformPredictor,
};

mod tokens;

use tokens::{read_tokens, write_tokens, InputFormat};

/// Mismatch-tolerant arithmetic coding.
#[derive(Parser)]
#[command(name = "pmatic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a token or byte stream into a container.
    Compress(CompressArgs),
    /// Decompress a container.
    Decompress(DecompressArgs),
    /// Print a container header.
    Inspect(InspectArgs),
    /// Measure compression and robustness on files or a synthetic corpus.
    Bench(BenchArgs),
    /// Run the built-in invariant suites.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// delta = 0.001, r = 0.05 (the default).
    #[arg(long, conflicts_with_all = ["setting2", "delta", "r"])]
    setting1: bool,
    /// delta = 0.00001, r = 0.005.
    #[arg(long, conflicts_with_all = ["delta", "r"])]
    setting2: bool,
    /// Mismatch tolerance, as a decimal or fraction ("0.001", "1/1000").
    #[arg(long, requires = "r")]
    delta: Option<String>,
    /// Bin radius; 1/(2r) must be an integer.
    #[arg(long, requires = "delta")]
    r: Option<String>,
}

impl ParamArgs {
    /// Explicitly selected settings, in command-line order of preference.
    fn selected(&self) -> Result<Vec<(String, PmaticParams)>, CliError> {
        let mut out = Vec::new();
        if self.setting1 {
            out.push((Setting::One.name().to_string(), Setting::One.params()));
        }
        if self.setting2 {
            out.push((Setting::Two.name().to_string(), Setting::Two.params()));
        }
        if let (Some(d), Some(r)) = (&self.delta, &self.r) {
            let delta: Rational = d.parse().map_err(|e| CliError::usage(format!("--delta: {e}")))?;
            let radius: Rational = r.parse().map_err(|e| CliError::usage(format!("--r: {e}")))?;
            let params = PmaticParams::new(delta, radius).map_err(pmatic::Error::from)?;
            out.push((format!("delta={delta},r={radius}"), params));
        }
        Ok(out)
    }

    fn single(&self) -> Result<PmaticParams, CliError> {
        Ok(self.selected()?.first().map(|s| s.1).unwrap_or_else(|| Setting::One.params()))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PredictorKind {
    Ngram,
    External,
    ByteUniform,
}

#[derive(Args, Clone)]
struct PredictorArgs {
    #[arg(long, value_enum, default_value = "ngram")]
    predictor: PredictorKind,
    #[arg(long, default_value_t = NGramModel::DEFAULT_ORDER)]
    ngram_order: usize,
    #[arg(long, default_value_t = NGramModel::DEFAULT_ALPHA)]
    ngram_alpha: f64,
    /// Shell command that starts an external predictor speaking the line protocol.
    #[arg(long)]
    bridge_cmd: Option<String>,
    /// Seconds to wait for each bridge reply.
    #[arg(long, default_value_t = DEFAULT_BRIDGE_TIMEOUT.as_secs())]
    bridge_timeout: u64,
}

impl PredictorArgs {
    fn id(&self) -> Result<String, CliError> {
        match self.predictor {
            PredictorKind::Ngram => {
                if !(self.ngram_alpha > 0.0 && self.ngram_alpha.is_finite()) {
                    return Err(CliError::usage("--ngram-alpha must be positive"));
                }
                Ok(NGramModel::new(2, self.ngram_order, self.ngram_alpha).id())
            }
            PredictorKind::ByteUniform => Ok(UniformPredictor::ID.to_string()),
            PredictorKind::External => Ok("external".to_string()),
        }
    }

    fn build(&self, vocab: usize) -> Result<Box<dyn Predictor>, CliError> {
        match self.predictor {
            PredictorKind::External => self.bridge(vocab),
            _ => Ok(from_id(&self.id()?, vocab).map_err(pmatic::Error::from)?),
        }
    }

    fn bridge(&self, vocab: usize) -> Result<Box<dyn Predictor>, CliError> {
        let cmd = self.bridge_cmd.as_deref().ok_or_else(|| CliError::usage("--predictor external needs --bridge-cmd"))?;
        let timeout = Duration::from_secs(self.bridge_timeout);
        Ok(Box::new(BridgeClient::spawn(cmd, vocab, timeout).map_err(pmatic::Error::from)?))
    }
}

#[derive(Args, Clone)]
struct MismatchArgs {
    /// Add Uniform[-eps, eps] noise to every decoder logit.
    #[arg(long)]
    mismatch_eps: Option<f64>,
    #[arg(long, default_value_t = 1)]
    mismatch_seed: u64,
}

#[derive(Args)]
struct CompressArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    predictor: PredictorArgs,
    #[arg(long, value_enum, default_value = "bytes")]
    input_format: InputFormat,
    /// Alphabet size for token input (default: largest id + 1).
    #[arg(long)]
    vocab: Option<u32>,
    #[arg(long, default_value_t = 0)]
    codebook_seed: u64,
    #[arg(long, default_value_t = ContextPolicy::DEFAULT.max_window)]
    context_max: u16,
    #[arg(long, default_value_t = ContextPolicy::DEFAULT.keep)]
    context_keep: u16,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DecompressArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Predictor override; by default the one named in the header is rebuilt.
    #[arg(long, value_enum)]
    predictor: Option<PredictorKind>,
    #[arg(long)]
    bridge_cmd: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BRIDGE_TIMEOUT.as_secs())]
    bridge_timeout: u64,
    #[command(flatten)]
    mismatch: MismatchArgs,
    /// Output as raw bytes or whitespace-separated ids (default: bytes for a
    /// 256-symbol alphabet, ids otherwise).
    #[arg(long, value_enum)]
    output_format: Option<InputFormat>,
}

#[derive(Args)]
struct InspectArgs {
    input: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Files to benchmark; each is split into chunks.
    corpus: Vec<PathBuf>,
    /// Benchmark a generated Markov corpus of this many tokens instead.
    #[arg(long, conflicts_with = "corpus")]
    synthetic: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    predictor: PredictorArgs,
    #[command(flatten)]
    mismatch: MismatchArgs,
    #[arg(long, value_enum, default_value = "bytes")]
    input_format: InputFormat,
    /// Alphabet size for token input and synthetic corpora.
    #[arg(long)]
    vocab: Option<u32>,
    /// Chunk length, in bytes for byte input and in tokens otherwise.
    #[arg(long, default_value_t = DEFAULT_CHUNK_BYTES)]
    chunk: usize,
    #[arg(long, default_value_t = 0)]
    codebook_seed: u64,
    #[arg(long, default_value_t = ContextPolicy::DEFAULT.max_window)]
    context_max: u16,
    #[arg(long, default_value_t = ContextPolicy::DEFAULT.keep)]
    context_keep: u16,
    /// Do not code bits the codebook already determines.
    #[arg(long)]
    skip_structural_bits: bool,
    /// Print per-file rows as well as totals.
    #[arg(long)]
    per_file: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Prop1,
    Theorem1Grid,
    CoderRoundTrip,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    /// Smaller sample counts, for a quick smoke run.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(PathBuf, io::Error),
    Lib(pmatic::Error),
    SuiteFailed,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::SuiteFailed => 1,
            CliError::Lib(e) if e.is_bridge_failure() => 4,
            CliError::Lib(e) if e.is_decode_failure() => 3,
            _ => 2,
        }
    }
}

impl From<pmatic::Error> for CliError {
    fn from(e: pmatic::Error) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::SuiteFailed => write!(f, "verification failed"),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).map_err(|e| CliError::Io(path.into(), e))?;
        return Ok(buf);
    }
    fs::read(path).map_err(|e| CliError::Io(path.into(), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if path == Path::new("-") {
        return io::stdout().write_all(bytes).map_err(|e| CliError::Io(path.into(), e));
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(path.into(), e))
}

fn context(max: u16, keep: u16) -> Result<ContextPolicy, CliError> {
    Ok(ContextPolicy::new(max, keep)?)
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn compress(args: CompressArgs) -> Result<(), CliError> {
    let raw = read_file(&args.input)?;
    let (tokens, vocab) = read_tokens(&raw, args.input_format, args.vocab)?;
    let params = args.params.single()?;
    let options = CompressOptions {
        params,
        codebook_seed: args.codebook_seed,
        context: context(args.context_max, args.context_keep)?,
    };
    let predictor = args.predictor.build(vocab as usize)?;
    let packed = container::compress(&tokens, vocab, &options, predictor)?;
    write_file(&args.output, &packed.bytes)?;
    let t = tokens.len().max(1) as f64;
    if args.json {
        print_json(&serde_json::json!({
            "header": packed.header,
            "stats": packed.stats,
            "container_bytes": packed.bytes.len(),
            "bits_per_token": packed.header.payload_length as f64 * 8.0 / t,
        }));
    } else {
        eprintln!(
            "{} tokens -> {} bytes ({:.3} bits/token, helper share {:.3} bits/token)",
            tokens.len(),
            packed.bytes.len(),
            packed.header.payload_length as f64 * 8.0 / t,
            packed.stats.helper_cost_bits / t,
        );
    }
    Ok(())
}

fn decompress(args: DecompressArgs) -> Result<(), CliError> {
    let bytes = read_file(&args.input)?;
    let (header, _) = open(&bytes)?;
    let vocab = header.alphabet_size as usize;
    let external = args.predictor == Some(PredictorKind::External) || header.predictor_id == "external";
    let predictor: Box<dyn Predictor> = if external {
        let pa = PredictorArgs {
            predictor: PredictorKind::External,
            ngram_order: NGramModel::DEFAULT_ORDER,
            ngram_alpha: NGramModel::DEFAULT_ALPHA,
            bridge_cmd: args.bridge_cmd.clone(),
            bridge_timeout: args.bridge_timeout,
        };
        pa.build(vocab)?
    } else {
        let id = match args.predictor {
            Some(PredictorKind::ByteUniform) => UniformPredictor::ID.to_string(),
            _ => header.predictor_id.clone(),
        };
        from_id(&id, vocab).map_err(pmatic::Error::from)?
    };
    let tokens = match args.mismatch.mismatch_eps {
        Some(eps) if eps > 0.0 => {
            container::decompress(&bytes, MismatchWrapper::uniform_logit(predictor, eps, args.mismatch.mismatch_seed))?
        }
        _ => container::decompress(&bytes, predictor)?,
    };
    let format = args.output_format.unwrap_or(if vocab == 256 { InputFormat::Bytes } else { InputFormat::Tokens });
    write_file(&args.output, &write_tokens(&tokens, format)?)?;
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<(), CliError> {
    let bytes = read_file(&args.input)?;
    let (header, payload) = open(&bytes)?;
    let params = header.params()?;
    let ell = codebook::codeword_len(header.alphabet_size);
    let bounds = loss_bounds(&params);
    if args.json {
        print_json(&serde_json::json!({
            "header": header,
            "r": params.r(),
            "helper_p": params.helper_p(),
            "ell": ell,
            "loss_bound_bits_per_token": bounds.per_token(ell),
            "container_bytes": bytes.len(),
        }));
        return Ok(());
    }
    println!("format          PMTC v{}", container::VERSION);
    println!("alphabet_size   {} (ell = {ell})", header.alphabet_size);
    println!("codebook_seed   {}", header.codebook_seed);
    println!("delta           {} ({:e})", header.delta, header.delta.to_f64());
    println!("bins            {} (r = {})", header.bins, params.r());
    println!("helper_p        {}", params.helper_p());
    println!("predictor       {}", header.predictor_id);
    println!("context         max {} keep {}", header.context.max_window, header.context.keep);
    println!("tokens          {}", header.token_count);
    println!("payload         {} bytes", payload.len());
    if header.token_count > 0 {
        println!("bits_per_token  {:.4}", payload.len() as f64 * 8.0 / header.token_count as f64);
    }
    println!("loss_bound      {:.4} bits/token", bounds.per_token(ell));
    Ok(())
}

fn bench_files(args: &BenchArgs) -> Result<(Vec<BenchFile>, u32), CliError> {
    if let Some(len) = args.synthetic {
        let vocab = args.vocab.unwrap_or(256);
        let tokens = MarkovSource::reference(vocab, 1).generate(len, 1);
        return Ok((chunk_tokens("synthetic", &tokens, args.chunk, 0), vocab));
    }
    if args.corpus.is_empty() {
        return Err(CliError::usage("give corpus files or --synthetic N"));
    }
    let mut files = Vec::new();
    let mut vocab = args.vocab.unwrap_or(0);
    for path in &args.corpus {
        let raw = read_file(path)?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match args.input_format {
            InputFormat::Bytes => {
                files.extend(BenchFile::split_bytes(&name, &raw, args.chunk));
                vocab = 256;
            }
            InputFormat::Tokens => {
                let (tokens, v) = read_tokens(&raw, InputFormat::Tokens, args.vocab)?;
                vocab = vocab.max(v);
                files.extend(chunk_tokens(&name, &tokens, args.chunk, raw.len() as u64));
            }
        }
    }
    Ok((files, vocab))
}

/// Split a token stream into files, sharing `raw_bytes` out in proportion
/// (token count when no raw size is known).
fn chunk_tokens(name: &str, tokens: &[u32], chunk: usize, raw_bytes: u64) -> Vec<BenchFile> {
    let total = tokens.len().max(1) as u64;
    tokens
        .chunks(chunk.max(1))
        .enumerate()
        .map(|(i, c)| BenchFile {
            name: format!("{name}.{i:04}"),
            tokens: c.to_vec(),
            raw_bytes: if raw_bytes == 0 { c.len() as u64 } else { raw_bytes * c.len() as u64 / total },
        })
        .collect()
}

fn print_row(r: &bench::BenchReport) {
    println!(
        "{:<24} {:<22} {:>9} {:>10} {:>8.3} {:>8.3} {:>8.3} {:>9.3} {:>7.2}% {:>8} {:>8}",
        r.file,
        r.setting,
        r.tokens,
        r.compressed_bytes,
        r.bits_per_token,
        r.baseline_bits_per_token,
        r.overhead_bits_per_token,
        r.helper_overhead_bits_per_token,
        100.0 * r.compression_ratio,
        if r.decode_success { "ok" } else { "FAILED" },
        if r.plain_mismatch_failed { "broke" } else { "survived" },
    );
}

fn run_bench(args: BenchArgs) -> Result<(), CliError> {
    let (files, vocab) = bench_files(&args)?;
    let mut settings = args.params.selected()?;
    if settings.is_empty() {
        settings = [Setting::One, Setting::Two].map(|s| (s.name().to_string(), s.params())).to_vec();
    }
    if args.predictor.predictor == PredictorKind::External {
        return Err(CliError::usage("bench runs built-in predictors only"));
    }
    let mut opts = BenchOptions::new(vocab, args.predictor.id()?);
    opts.codebook_seed = args.codebook_seed;
    opts.context = context(args.context_max, args.context_keep)?;
    opts.mismatch_eps = args.mismatch.mismatch_eps;
    opts.mismatch_seed = args.mismatch.mismatch_seed;
    opts.skip_structural = args.skip_structural_bits;
    let summary: BenchSummary = bench::run(&files, &settings, &opts)?;
    if args.json {
        print_json(&summary);
        return Ok(());
    }
    println!(
        "{:<24} {:<22} {:>9} {:>10} {:>8} {:>8} {:>8} {:>9} {:>8} {:>8} {:>8}",
        "file", "setting", "tokens", "bytes", "bits/tok", "plain", "overhead", "helper", "ratio", "pmatic", "plain+eps"
    );
    if args.per_file {
        summary.rows.iter().for_each(print_row);
    }
    summary.aggregate.iter().for_each(print_row);
    let failures = summary.rows.iter().filter(|r| r.plain_mismatch_failed).count();
    println!(
        "plain coding under mismatch broke on {failures} of {} file runs; predictor {}, codebook seed {}, noise seed {}",
        summary.rows.len(),
        opts.predictor_id,
        opts.codebook_seed,
        opts.mismatch_seed
    );
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let scale = if args.quick { 10 } else { 1 };
    let mut reports: Vec<SuiteReport> = Vec::new();
    if matches!(args.suite, Suite::All | Suite::Prop1) {
        reports.push(verify::prop1(&[2, 3, 4], &[0.002, 0.2, 1.0], 10_000 / scale, args.seed));
    }
    if matches!(args.suite, Suite::All | Suite::Theorem1Grid) {
        for s in [Setting::One, Setting::Two] {
            let mut r = verify::theorem1_grid(&s.params(), 100_000 / scale, 11);
            r.name = format!("{} ({})", r.name, s.name());
            reports.push(r);
        }
    }
    if matches!(args.suite, Suite::All | Suite::CoderRoundTrip) {
        reports.push(verify::coder_round_trip(20 / scale.min(10), 100_000 / scale, args.seed));
    }
    if args.json {
        print_json(&reports);
    } else {
        for r in &reports {
            let verdict = if r.passed() { "PASS" } else { "FAIL" };
            println!("{verdict} {:<28} {:>9} cases {:>4} failures  {}", r.name, r.cases, r.failures, r.detail);
        }
    }
    if reports.iter().all(SuiteReport::passed) {
        Ok(())
    } else {
        Err(CliError::SuiteFailed)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(a) => compress(a),
        Command::Decompress(a) => decompress(a),
        Command::Inspect(a) => inspect(a),
        Command::Bench(a) => run_bench(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::SuiteFailed) {
                eprintln!("pmatic: {e}");
            }
            if let CliError::Lib(pmatic::Error::Predictor(PredictorError::VocabMismatch { .. })) = e {
                eprintln!("pmatic: the predictor vocabulary must equal the container alphabet");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
