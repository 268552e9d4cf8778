//! vexbench: generate and enrich embedding datasets, search them through
//! interchangeable backends, and measure backend speed and result quality.

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vexbench_core::backend::{
    stub_serve, BackendKind, FlatBackend, NaiveBackend, RemoteBackend, SearchBackend, StubConfig,
};
use vexbench_core::bench::{emit_csv, run_bench, BenchPlan};
use vexbench_core::clock::MonotonicClock;
use vexbench_core::dataset::{
    enrich, read_jsonl, read_raw_jsonl, synth_corpus, EmbeddingProvider, EnrichedRecord,
    EnrichmentConfig, JsonlWriter, RemoteProvider, SyntheticProvider,
};
use vexbench_core::quality::{recall_expected, run_agreement, write_agreement_csv, write_recall_csv};
use vexbench_core::{Embedding, Error, Result, ResultList};

const REMOTE_URL_ENV: &str = "VEXBENCH_REMOTE_URL";

#[derive(Parser)]
#[command(name = "vexbench", version, about = "Exact vector-search benchmark suite")]
struct Cli {
    /// Seed for all pseudo-random generation.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Embedding dimension for generation and enrichment.
    #[arg(long, global = true, default_value_t = 768)]
    dim: usize,

    /// Report output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Base URL of the remote search service (defaults to $VEXBENCH_REMOTE_URL).
    #[arg(long, global = true)]
    remote_url: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic enriched dataset with planted queries.
    Gen {
        /// Number of records.
        #[arg(long)]
        n: usize,
        /// Noise level in [0, 1]; 0 plants queries equal to their documents.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Output JSONL path.
        #[arg(long)]
        out: String,
    },
    /// Attach embeddings to a raw JSONL dataset through a provider.
    Enrich {
        /// Input raw JSONL path.
        #[arg(long = "in")]
        input: String,
        /// Output enriched JSONL path.
        #[arg(long)]
        out: String,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        /// Texts are truncated to this many whitespace tokens.
        #[arg(long, default_value_t = 256)]
        max_seq_len: usize,
        /// "synthetic", "remote" (uses the remote URL), or an explicit URL.
        #[arg(long, default_value = "synthetic")]
        provider: String,
    },
    /// Search a dataset with one backend and print the top-k hits.
    Query {
        #[arg(long)]
        data: String,
        #[arg(long, default_value = "flat")]
        backend: BackendKind,
        /// Row whose question embedding becomes the query.
        #[arg(long, default_value_t = 0)]
        row: usize,
        #[arg(long, default_value_t = 100)]
        k: usize,
    },
    /// Time indexing and querying across corpus sizes; write raw and summary CSVs.
    Bench {
        #[arg(long)]
        data: String,
        #[arg(long, value_delimiter = ',', default_value = "1000,5000,10000,20000,40000,80000")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "flat,naive")]
        backends: Vec<BackendKind>,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        reps: u32,
        /// CSVs are written to <prefix>_raw.csv and <prefix>_summary.csv.
        #[arg(long, default_value = "bench")]
        out_prefix: String,
    },
    /// Count positional top-k differences between backends.
    Agree {
        #[arg(long)]
        data: String,
        #[arg(long, value_delimiter = ',', default_value = "500,1000,5000,10000")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "flat,naive")]
        backends: Vec<BackendKind>,
        #[arg(long, default_value_t = 100)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        runs: usize,
    },
    /// Check how often each query's own document lands in its top-k.
    Recall {
        #[arg(long)]
        data: String,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, value_delimiter = ',', default_value = "50,100,500,1000")]
        k_values: Vec<usize>,
    },
    /// Run the search-service protocol stub in the foreground.
    Stub {
        #[arg(long, default_value_t = 0)]
        port: u16,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = stage_name(&cli.command);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error ({stage}): {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn stage_name(command: &Command) -> &'static str {
    match command {
        Command::Gen { .. } => "gen",
        Command::Enrich { .. } => "enrich",
        Command::Query { .. } => "query",
        Command::Bench { .. } => "bench",
        Command::Agree { .. } => "agree",
        Command::Recall { .. } => "recall",
        Command::Stub { .. } => "stub",
    }
}

/// Nonzero exit codes by failure category: 3 dataset/format/io, 4 vector and
/// index contract violations, 5 remote transport/protocol/provider, 6
/// configuration and metric arity.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::MalformedLine { .. } => 3,
        Error::DimensionMismatch { .. }
        | Error::EmptyEmbedding
        | Error::NonFinite { .. }
        | Error::ZeroNorm
        | Error::DuplicateId(_)
        | Error::IndexSealed
        | Error::IndexUnsealed
        | Error::InvalidK => 4,
        Error::Connection { .. }
        | Error::Protocol { .. }
        | Error::Provider { .. }
        | Error::StubStartup(_) => 5,
        Error::Config(_) | Error::TooFewLists(_) => 6,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { n, noise, ref out } => cmd_gen(n, cli.dim, cli.seed, noise, out),
        Command::Enrich {
            ref input,
            ref out,
            batch_size,
            max_seq_len,
            ref provider,
        } => cmd_enrich(
            input,
            out,
            EnrichmentConfig {
                batch_size,
                max_seq_len,
                embedding_dim: cli.dim,
            },
            provider,
            cli.seed,
            remote_url(&cli.remote_url),
        ),
        Command::Query {
            ref data,
            backend,
            row,
            k,
        } => cmd_query(data, backend, row, k, cli.format, remote_url(&cli.remote_url)),
        Command::Bench {
            ref data,
            ref sizes,
            ref backends,
            k,
            reps,
            ref out_prefix,
        } => cmd_bench(
            data,
            sizes,
            backends,
            k,
            reps,
            cli.seed,
            out_prefix,
            remote_url(&cli.remote_url),
        ),
        Command::Agree {
            ref data,
            ref sizes,
            ref backends,
            k,
            runs,
        } => cmd_agree(data, sizes, backends, k, runs, cli.format, remote_url(&cli.remote_url)),
        Command::Recall {
            ref data,
            n,
            m,
            ref k_values,
        } => cmd_recall(data, n, m, k_values, cli.format),
        Command::Stub { port } => cmd_stub(port),
    }
}

fn remote_url(flag: &Option<String>) -> Option<String> {
    flag.clone().or_else(|| std::env::var(REMOTE_URL_ENV).ok())
}

fn cmd_gen(n: usize, dim: usize, seed: u64, noise: f64, out: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("--n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config("--noise must be in [0, 1]".into()));
    }
    if dim == 0 {
        return Err(Error::Config("--dim must be at least 1".into()));
    }
    let mut writer = JsonlWriter::create(out)?;
    for record in synth_corpus(n, dim, seed, noise) {
        writer.write_record(&record)?;
    }
    writer.flush()?;
    eprintln!("wrote {} records to {out}", writer.count());
    Ok(())
}

fn cmd_enrich(
    input: &str,
    out: &str,
    config: EnrichmentConfig,
    provider_arg: &str,
    seed: u64,
    remote: Option<String>,
) -> Result<()> {
    let provider: Box<dyn EmbeddingProvider> = match provider_arg {
        "synthetic" => Box::new(SyntheticProvider::new(seed, config.embedding_dim)),
        "remote" => {
            let url = remote.ok_or_else(|| {
                Error::Config(format!(
                    "--provider remote needs --remote-url or ${REMOTE_URL_ENV}"
                ))
            })?;
            Box::new(RemoteProvider::new(&url, config.embedding_dim))
        }
        url => Box::new(RemoteProvider::new(url, config.embedding_dim)),
    };

    let reader = read_raw_jsonl(input)?;
    let skipped = reader.skip_counter();
    let mut writer = JsonlWriter::create(out)?;
    for batch in enrich(reader, &config, provider.as_ref())? {
        for record in batch? {
            writer.write_record(&record)?;
        }
        // Interrupted runs keep everything up to the last whole batch.
        writer.flush()?;
    }
    eprintln!(
        "enriched {} records to {out} ({} unparseable lines skipped)",
        writer.count(),
        skipped.load(std::sync::atomic::Ordering::Relaxed)
    );
    Ok(())
}

fn load_records(path: &str, limit: Option<usize>) -> Result<Vec<EnrichedRecord>> {
    let reader = read_jsonl(path)?;
    let mut records = Vec::new();
    for record in reader {
        records.push(record?);
        if let Some(limit) = limit {
            if records.len() == limit {
                break;
            }
        }
    }
    Ok(records)
}

fn make_backend(
    kind: BackendKind,
    dim: usize,
    remote: &Option<String>,
) -> Result<Box<dyn SearchBackend>> {
    match kind {
        BackendKind::Flat => Ok(Box::new(FlatBackend::new(dim)?)),
        BackendKind::Naive => Ok(Box::new(NaiveBackend::new(dim)?)),
        BackendKind::Remote => {
            let url = remote.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "remote backend needs --remote-url or ${REMOTE_URL_ENV}"
                ))
            })?;
            Ok(Box::new(RemoteBackend::new(url, dim)?))
        }
    }
}

fn print_hits(result: &ResultList, format: Format) {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Csv => {
            let _ = writeln!(out, "rank,id,score");
            for (rank, hit) in result.hits.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", rank + 1, hit.id, hit.score);
            }
        }
        Format::Table => {
            let _ = writeln!(out, "{:>5}  {:>20}  score", "rank", "id");
            for (rank, hit) in result.hits.iter().enumerate() {
                let _ = writeln!(out, "{:>5}  {:>20}  {}", rank + 1, hit.id, hit.score);
            }
        }
    }
}

fn cmd_query(
    data: &str,
    kind: BackendKind,
    row: usize,
    k: usize,
    format: Format,
    remote: Option<String>,
) -> Result<()> {
    let records = load_records(data, None)?;
    if records.is_empty() {
        return Err(Error::Config(format!("{data} holds no records")));
    }
    if row >= records.len() {
        return Err(Error::Config(format!(
            "--row {row} is out of range ({} records)",
            records.len()
        )));
    }
    let dim = records[0].dim();
    let corpus: Vec<(i64, Embedding)> = records
        .iter()
        .map(|r| (r.example_id, r.document_embeddings.clone()))
        .collect();
    let query = records[row].question_embeddings.clone();

    let mut backend = make_backend(kind, dim, &remote)?;
    let clock = MonotonicClock::new();
    let (result, timings) =
        vexbench_core::backend::index_and_query(backend.as_mut(), &corpus, &query, k, &clock)?;

    // Hits on stdout (deterministic); timings on stderr.
    print_hits(&result, format);
    eprintln!(
        "backend={kind} index_s={} query_s={}",
        timings.index_duration.as_secs_f64(),
        timings.query_duration.as_secs_f64()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    data: &str,
    sizes: &[usize],
    backends: &[BackendKind],
    k: usize,
    reps: u32,
    seed: u64,
    out_prefix: &str,
    remote: Option<String>,
) -> Result<()> {
    let max_size = *sizes.iter().max().ok_or_else(|| {
        Error::Config("--sizes must name at least one corpus size".into())
    })?;
    let records = load_records(data, Some(max_size))?;
    if records.is_empty() {
        return Err(Error::Config(format!("{data} holds no records")));
    }
    let dim = records[0].dim();
    let corpus: Vec<(i64, Embedding)> = records
        .iter()
        .map(|r| (r.example_id, r.document_embeddings.clone()))
        .collect();
    // One fixed query for the whole run: the first row's question.
    let query = records[0].question_embeddings.clone();

    let plan = BenchPlan {
        sizes: sizes.to_vec(),
        backends: backends.to_vec(),
        k,
        repetitions: reps,
        seed,
    };
    let mut factory =
        |kind: BackendKind| -> Result<Box<dyn SearchBackend>> { make_backend(kind, dim, &remote) };
    let clock = MonotonicClock::new();
    let run = run_bench(&plan, &corpus, &query, &mut factory, &clock)?;

    let (raw_path, summary_path) = emit_csv(&run, out_prefix)?;
    for failure in &run.failures {
        eprintln!(
            "cell failed: backend={} size={} phase={} rep={}: {}",
            failure.backend, failure.size, failure.phase, failure.repetition, failure.message
        );
    }
    println!("raw samples: {raw_path}");
    println!("summary: {summary_path}");
    for row in &run.summary {
        match row.mean_s {
            Some(mean) => println!(
                "{:<7} {:<6} {:>7}  mean_s={}",
                row.backend.to_string(),
                row.phase.to_string(),
                row.size,
                mean
            ),
            None => println!(
                "{:<7} {:<6} {:>7}  failed",
                row.backend.to_string(),
                row.phase.to_string(),
                row.size
            ),
        }
    }
    Ok(())
}

fn cmd_agree(
    data: &str,
    sizes: &[usize],
    backends: &[BackendKind],
    k: usize,
    runs: usize,
    format: Format,
    remote: Option<String>,
) -> Result<()> {
    let max_size = *sizes.iter().max().ok_or_else(|| {
        Error::Config("--sizes must name at least one corpus size".into())
    })?;
    let records = load_records(data, Some(max_size))?;
    if records.is_empty() {
        return Err(Error::Config(format!("{data} holds no records")));
    }
    let dim = records[0].dim();
    let corpus: Vec<(i64, Embedding)> = records
        .iter()
        .map(|r| (r.example_id, r.document_embeddings.clone()))
        .collect();
    let query = records[0].question_embeddings.clone();

    let mut factory =
        |kind: BackendKind| -> Result<Box<dyn SearchBackend>> { make_backend(kind, dim, &remote) };
    let reports = run_agreement(&corpus, &query, sizes, backends, k, runs, &mut factory)?;

    match format {
        Format::Csv => {
            let mut out = Vec::new();
            write_agreement_csv(&reports, &mut out)?;
            print!("{}", String::from_utf8_lossy(&out));
        }
        Format::Table => {
            println!("{:>8}  {:>4}  {:>4}  avg_errors", "size", "k", "runs");
            for (size, outcome) in &reports {
                match outcome {
                    Ok(r) => println!("{size:>8}  {:>4}  {:>4}  {}", r.k, r.runs, r.avg_errors),
                    Err(e) => println!("{size:>8}  failed: {e}"),
                }
            }
        }
    }
    if reports.iter().any(|(_, outcome)| outcome.is_err()) {
        return Err(Error::Config("one or more sizes failed".into()));
    }
    Ok(())
}

fn cmd_recall(data: &str, n: usize, m: usize, k_values: &[usize], format: Format) -> Result<()> {
    let records = load_records(data, Some(n))?;
    let report = recall_expected(&records, n, m, k_values)?;
    match format {
        Format::Csv => {
            let mut out = Vec::new();
            write_recall_csv(&report, &mut out)?;
            print!("{}", String::from_utf8_lossy(&out));
        }
        Format::Table => {
            println!("{:>6}  hits (of {} queries)", "k", report.num_queries);
            for (k, hits) in report.k_values.iter().zip(&report.hits_at_k) {
                println!("{k:>6}  {hits}");
            }
        }
    }
    Ok(())
}

fn cmd_stub(port: u16) -> Result<()> {
    let handle = stub_serve(StubConfig {
        addr: format!("127.0.0.1:{port}"),
        workers: 4,
    })?;
    println!("listening on http://{}", handle.addr());
    // Foreground until killed.
    loop {
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }
}
