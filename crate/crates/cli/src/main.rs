//! `tokaudit` command-line front end.
//!
//! Exit status: 0 on success, 1 when `--strict` is set and a finding
//! triggered, 2 on usage errors, 3 on runtime failures (unreadable files,
//! malformed input).

mod input;
mod tokenizer;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tokaudit::audit::{
    audit_text, compare_tokenizers, evidence, profile_finding, scan_integers_with_cap, scan_years, AuditOptions,
    AuditReport, CaseMode, Detector, IntegerFormat, OutputFormat, PitfallKind, TokenEvidence, DEFAULT_CONTINUATION,
    DEFAULT_RANGE_CAP,
};
use tokaudit::bpe::{train_bpe, Mode, TrainConfig};
use tokaudit::ingest::{
    aggregate, downsample, locate_fields, parse_str, round_values, serialize, FieldSpan, PromptTemplate, Reading,
    SensorRow, Stat, Template,
};
use tokaudit::pretokenize::Pattern;

use input::TextInput;
use tokenizer::{Loaded, OtherTokenizerArgs, TokenizerArgs};

#[derive(Parser, Debug)]
#[command(name = "tokaudit", version, about = "Audit how BPE tokenizers split numeric and sensor text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode text and print token IDs with their spans.
    Encode(EncodeArgs),
    /// Decode token IDs back to text.
    Decode(DecodeArgs),
    /// Train a byte-level BPE vocabulary from a line-oriented corpus.
    Train(TrainArgs),
    /// Run pitfall detectors over text and print a report.
    Audit(AuditArgs),
    /// Compare the segmentations of two tokenizers over a corpus.
    Compare(CompareArgs),
    /// Parse, preprocess, and serialize WISDM-style accelerometer rows.
    Ingest(IngestArgs),
    /// Profile which years in a range are single tokens.
    Years(YearsArgs),
    /// Profile token counts of consecutive integers.
    Ints(IntsArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct FormatArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Plain)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Markdown,
    Plain,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Markdown => OutputFormat::Markdown,
            Format::Plain => OutputFormat::Plain,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct ReportArgs {
    #[command(flatten)]
    format: FormatArgs,
    /// Exit with status 1 if any finding triggered.
    #[arg(long)]
    strict: bool,
    /// Add a generation timestamp to the report.
    #[arg(long)]
    stamp: bool,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[command(flatten)]
    input: TextInput,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Token IDs, separated by commas or whitespace.
    #[arg(long, allow_hyphen_values = true)]
    ids: String,
    #[command(flatten)]
    format: FormatArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    ByteLevel,
    CharLevel,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Corpus file, one text per line.
    #[arg(long, conflicts_with = "stdin")]
    corpus: Option<PathBuf>,
    /// Read the corpus from standard input.
    #[arg(long)]
    stdin: bool,
    /// Target vocabulary size, base alphabet included.
    #[arg(long)]
    vocab_size: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::ByteLevel)]
    mode: ModeArg,
    /// Pre-tokenization pattern: gpt2, whitespace, or char.
    #[arg(long, default_value = "gpt2")]
    pattern: Pattern,
    /// Where to write vocab.json.
    #[arg(long)]
    out_vocab: PathBuf,
    /// Where to write merges.txt.
    #[arg(long)]
    out_merges: PathBuf,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[command(flatten)]
    input: TextInput,
    /// Field-span sidecar written by `ingest --spans`.
    #[arg(long, conflicts_with = "no_fields")]
    spans: Option<PathBuf>,
    /// Treat the input as free text even if it contains WISDM rows.
    #[arg(long)]
    no_fields: bool,
    /// Detectors to run, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = ["numeric".to_owned(), "sign-merge".to_owned(), "alignment".to_owned()])]
    detect: Vec<String>,
    /// Capitalize only the first letter or the whole word in case probes.
    #[arg(long, value_enum, default_value_t = CaseArg::First)]
    case_mode: CaseArg,
    /// Word appended after the trailing space in the whitespace probe.
    #[arg(long, default_value = DEFAULT_CONTINUATION)]
    continuation: String,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum CaseArg {
    First,
    Full,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[command(flatten)]
    other: OtherTokenizerArgs,
    /// Texts to compare; with --stdin or --file, one text per line.
    #[command(flatten)]
    input: TextInput,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SerializeArg {
    RawCsv,
    LabeledPrompt,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum StatArg {
    Mean,
    Min,
    Max,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// WISDM raw file.
    #[arg(long, required_unless_present = "stdin")]
    wisdm: Option<PathBuf>,
    /// Read rows from standard input.
    #[arg(long, conflicts_with = "wisdm")]
    stdin: bool,
    /// Keep only the first N rows.
    #[arg(long)]
    rows: Option<usize>,
    /// Keep every K-th row.
    #[arg(long, value_name = "K")]
    downsample: Option<usize>,
    /// Aggregate non-overlapping windows of W rows.
    #[arg(long, value_name = "W", requires = "stat")]
    window: Option<usize>,
    #[arg(long, value_enum, requires = "window")]
    stat: Option<StatArg>,
    /// Allow windows that mix participants or activities.
    #[arg(long)]
    mixed_windows: bool,
    /// Round x, y, z to P decimals.
    #[arg(long = "round", value_name = "P")]
    round: Option<u32>,
    #[arg(long, value_enum, default_value_t = SerializeArg::RawCsv)]
    serialize: SerializeArg,
    /// Prompt preamble (labeled-prompt only).
    #[arg(long)]
    preamble: Option<String>,
    /// Row template with {participant} {activity} {timestamp} {x} {y} {z} placeholders.
    #[arg(long)]
    row_template: Option<String>,
    /// Row separator for labeled-prompt.
    #[arg(long)]
    separator: Option<String>,
    /// Parse readings as 32-bit floats.
    #[arg(long)]
    f32: bool,
    /// Write the field-span sidecar JSON here.
    #[arg(long)]
    spans: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct YearsArgs {
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[arg(long, default_value_t = 1900, allow_negative_numbers = true)]
    lo: i64,
    #[arg(long, default_value_t = 1999, allow_negative_numbers = true)]
    hi: i64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ContextArg {
    Plain,
    CommaSpaceList,
    SpacePrefixed,
}

#[derive(Args, Debug)]
struct IntsArgs {
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    lo: i64,
    #[arg(long, default_value_t = 999, allow_negative_numbers = true)]
    hi: i64,
    /// Context each integer is encoded in.
    #[arg(long, value_enum, default_value_t = ContextArg::Plain)]
    context: ContextArg,
    /// Largest range accepted.
    #[arg(long, default_value_t = DEFAULT_RANGE_CAP)]
    cap: u64,
    #[command(flatten)]
    report: ReportArgs,
}

fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn stamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("unix:{secs}")
}

/// Print a report and map `--strict` onto the exit status.
fn finish(report: AuditReport, args: ReportArgs) -> Result<ExitCode> {
    let report = if args.stamp { report.with_stamp(stamp()) } else { report };
    emit(&report.render(args.format.format.into()))?;
    Ok(if args.strict && report.any_triggered() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn token_table(tokens: &[TokenEvidence], format: Format, tokenizer: &str) -> String {
    match format {
        Format::Json => {
            let ids: Vec<u32> = tokens.iter().map(|t| t.id).collect();
            let v = serde_json::json!({ "tokenizer": tokenizer, "ids": ids, "tokens": tokens });
            serde_json::to_string_pretty(&v).expect("plain data") + "\n"
        }
        Format::Markdown => {
            let mut s = String::from("| # | id | span | text |\n|---|---|---|---|\n");
            for (i, t) in tokens.iter().enumerate() {
                let text = format!("{:?}", t.text).replace('|', "\\|");
                s.push_str(&format!("| {i} | {} | {}..{} | {text} |\n", t.id, t.span.start, t.span.end));
            }
            s
        }
        Format::Plain => {
            let ids: Vec<String> = tokens.iter().map(|t| t.id.to_string()).collect();
            let mut s = format!("{}\n", ids.join(" "));
            for t in tokens {
                s.push_str(&format!("{}\t{}..{}\t{:?}\n", t.id, t.span.start, t.span.end, t.text));
            }
            s
        }
    }
}

fn run_encode(args: EncodeArgs) -> Result<ExitCode> {
    let tok = args.tokenizer.load()?;
    let text = args.input.read()?;
    let enc = tok.tok.encode(&text)?;
    emit(&token_table(&evidence(&text, &enc), args.format.format, tok.tok.name()))?;
    Ok(ExitCode::SUCCESS)
}

fn run_decode(args: DecodeArgs) -> Result<ExitCode> {
    let tok = args.tokenizer.load()?;
    let ids = args
        .ids
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().with_context(|| format!("invalid token id {s:?}")))
        .collect::<Result<Vec<u32>>>()?;
    let text = tok.tok.decode(&ids)?;
    match args.format.format {
        Format::Json => emit(&(serde_json::to_string_pretty(&serde_json::json!({ "ids": ids, "text": text }))? + "\n"))?,
        _ => emit(&text)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn run_train(args: TrainArgs) -> Result<ExitCode> {
    let raw = match (&args.corpus, args.stdin) {
        (Some(path), _) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        (None, true) => input::read_stdin()?,
        (None, false) => bail!("give --corpus PATH or --stdin"),
    };
    let corpus: Vec<&str> = raw.lines().collect();
    let mode = match args.mode {
        ModeArg::ByteLevel => Mode::ByteLevel,
        ModeArg::CharLevel => Mode::CharLevel,
    };
    let (vocab, merges) = train_bpe(
        &corpus,
        args.vocab_size,
        TrainConfig {
            mode,
            pattern: args.pattern,
        },
    )?;
    let create = |p: &PathBuf| {
        std::fs::File::create(p)
            .map(std::io::BufWriter::new)
            .with_context(|| format!("creating {}", p.display()))
    };
    vocab.write_json(create(&args.out_vocab)?)?;
    merges.write_txt(create(&args.out_merges)?)?;
    emit(&format!(
        "trained {} merges; vocabulary has {} entries\n",
        merges.len(),
        vocab.len()
    ))?;
    Ok(ExitCode::SUCCESS)
}

fn run_audit(args: AuditArgs) -> Result<ExitCode> {
    let loaded = args.tokenizer.load()?;
    let text = args.input.read()?;
    let detectors = args
        .detect
        .iter()
        .map(|d| d.parse::<Detector>().map_err(anyhow::Error::msg))
        .collect::<Result<_>>()?;
    let options = AuditOptions {
        detectors,
        case_mode: match args.case_mode {
            CaseArg::First => CaseMode::First,
            CaseArg::Full => CaseMode::Full,
        },
        continuation: args.continuation,
        ..AuditOptions::default()
    };
    let fields: Option<Vec<FieldSpan>> = if let Some(path) = &args.spans {
        let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Some(serde_json::from_slice(&raw).with_context(|| format!("parsing span sidecar {}", path.display()))?)
    } else if args.no_fields {
        None
    } else {
        Some(locate_fields(&text)).filter(|f| !f.is_empty())
    };
    let report = audit_text(&*loaded.tok, loaded.info.clone(), &text, fields.as_deref(), &options)?;
    finish(report, args.report)
}

fn run_compare(args: CompareArgs) -> Result<ExitCode> {
    let a = args.tokenizer.load()?;
    let b: Loaded = args.other.load()?;
    let raw = args.input.read()?;
    let corpus: Vec<&str> = if args.input.text.is_some() {
        vec![raw.as_str()]
    } else {
        raw.lines().filter(|l| !l.is_empty()).collect()
    };
    let divergence = compare_tokenizers(&*a.tok, &*b.tok, &corpus)?;
    let mut report = AuditReport::from_comparison(&*a.tok, &divergence)?;
    report.tokenizer = a.info;
    finish(report, args.report)
}

fn ingest_rows<T: Reading>(args: &IngestArgs, raw: &str) -> Result<tokaudit::SerializedBatch> {
    let mut rows: Vec<SensorRow<T>> = parse_str(raw)?;
    if let Some(n) = args.rows {
        rows.truncate(n);
    }
    if let Some(k) = args.downsample {
        rows = downsample(&rows, k)?;
    }
    if let (Some(w), Some(stat)) = (args.window, args.stat) {
        let stat = match stat {
            StatArg::Mean => Stat::Mean,
            StatArg::Min => Stat::Min,
            StatArg::Max => Stat::Max,
        };
        rows = aggregate(&rows, w, stat, !args.mixed_windows)?;
    }
    if let Some(p) = args.round {
        rows = round_values(&rows, p);
    }
    let template = match args.serialize {
        SerializeArg::RawCsv => Template::RawCsv,
        SerializeArg::LabeledPrompt => {
            let d = PromptTemplate::default();
            Template::LabeledPrompt(PromptTemplate {
                preamble: args.preamble.clone().unwrap_or(d.preamble),
                row: args.row_template.clone().unwrap_or(d.row),
                separator: args.separator.clone().unwrap_or(d.separator),
            })
        }
    };
    Ok(serialize(&rows, &template)?)
}

fn run_ingest(args: IngestArgs) -> Result<ExitCode> {
    let raw = match &args.wisdm {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => input::read_stdin()?,
    };
    let batch = if args.f32 {
        ingest_rows::<f32>(&args, &raw)?
    } else {
        ingest_rows::<f64>(&args, &raw)?
    };
    if let Some(path) = &args.spans {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        batch.write_sidecar(std::io::BufWriter::new(file))?;
    }
    emit(&batch.text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_years(args: YearsArgs) -> Result<ExitCode> {
    let loaded = args.tokenizer.load()?;
    let profile = scan_years(&*loaded.tok, args.lo, args.hi)?;
    let finding = profile_finding(&*loaded.tok, &profile, PitfallKind::DateCoverage)?;
    finish(AuditReport::new(loaded.info, vec![finding]), args.report)
}

fn run_ints(args: IntsArgs) -> Result<ExitCode> {
    let loaded = args.tokenizer.load()?;
    let format = match args.context {
        ContextArg::Plain => IntegerFormat::Plain,
        ContextArg::CommaSpaceList => IntegerFormat::CommaSpaceList,
        ContextArg::SpacePrefixed => IntegerFormat::SpacePrefixed,
    };
    let profile = scan_integers_with_cap(&*loaded.tok, args.lo, args.hi, format, args.cap)?;
    let finding = profile_finding(&*loaded.tok, &profile, PitfallKind::DigitChunking)?;
    finish(AuditReport::new(loaded.info, vec![finding]), args.report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode(a) => run_encode(a),
        Command::Decode(a) => run_decode(a),
        Command::Train(a) => run_train(a),
        Command::Audit(a) => run_audit(a),
        Command::Compare(a) => run_compare(a),
        Command::Ingest(a) => run_ingest(a),
        Command::Years(a) => run_years(a),
        Command::Ints(a) => run_ints(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
