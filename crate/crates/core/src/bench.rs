//! Wall-clock benchmark harness: indexing and querying time per backend
//! across growing corpus sizes, repeated and averaged, emitted as CSV.
//!
//! Execution is strictly sequential — cells and repetitions never overlap —
//! and every repetition gets a fresh backend instance. Timing goes through
//! an injectable [`Clock`]; each timed phase makes exactly two `now()` calls
//! (start and end), and the naive backend's ingest is executed untimed, so a
//! scripted clock can reproduce durations exactly.

use std::io::Write;
use std::time::Duration;

use crate::backend::{BackendKind, SearchBackend};
use crate::clock::Clock;
use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// What was measured: the ingest or the query round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Index,
    Query,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Index => "index",
            Phase::Query => "query",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The benchmark grid.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    /// Corpus sizes, strictly ascending.
    pub sizes: Vec<usize>,
    pub backends: Vec<BackendKind>,
    pub k: usize,
    pub repetitions: u32,
    /// Recorded for provenance of the corpus the plan ran against.
    pub seed: u64,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            sizes: vec![1_000, 5_000, 10_000, 20_000, 40_000, 80_000],
            backends: vec![BackendKind::Flat, BackendKind::Naive],
            k: 100,
            repetitions: 3,
            seed: 42,
        }
    }
}

impl BenchPlan {
    fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("bench plan needs at least one size".into()));
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("sizes must be strictly ascending".into()));
        }
        if self.backends.is_empty() {
            return Err(Error::Config("bench plan needs at least one backend".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidK);
        }
        Ok(())
    }
}

/// One timed measurement. `duration` is `None` when the owning cell failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchSample {
    pub backend: BackendKind,
    pub phase: Phase,
    pub size: usize,
    pub repetition: u32,
    pub duration: Option<Duration>,
}

/// Per-(backend, phase, size) arithmetic mean. `mean_s` is `None` for failed
/// cells.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummaryRow {
    pub backend: BackendKind,
    pub phase: Phase,
    pub size: usize,
    pub mean_s: Option<f64>,
}

/// Diagnostic for a failed (backend, size) cell.
#[derive(Debug, Clone)]
pub struct CellFailure {
    pub backend: BackendKind,
    pub size: usize,
    pub phase: Phase,
    pub repetition: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchRun {
    pub samples: Vec<BenchSample>,
    pub summary: Vec<BenchSummaryRow>,
    pub failures: Vec<CellFailure>,
}

pub type BackendFactory<'a> = dyn FnMut(BackendKind) -> Result<Box<dyn SearchBackend>> + 'a;

/// Runs the full grid. Each (backend, size) cell runs `repetitions` times on
/// fresh backend instances with one fixed query; a failure marks that cell
/// failed (dropping its partial samples) and the remaining cells still run.
pub fn run_bench(
    plan: &BenchPlan,
    records: &[(i64, Embedding)],
    query: &Embedding,
    factory: &mut BackendFactory<'_>,
    clock: &dyn Clock,
) -> Result<BenchRun> {
    plan.validate()?;
    let max_size = *plan.sizes.last().expect("validated nonempty");
    if records.len() < max_size {
        return Err(Error::Config(format!(
            "corpus has {} records, plan needs {max_size}",
            records.len()
        )));
    }

    let mut run = BenchRun::default();
    for &kind in &plan.backends {
        for &size in &plan.sizes {
            run_cell(plan, kind, size, &records[..size], query, factory, clock, &mut run);
        }
    }

    sort_samples(&mut run.samples);
    run.summary = summarize(&run.samples);
    Ok(run)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    plan: &BenchPlan,
    kind: BackendKind,
    size: usize,
    records: &[(i64, Embedding)],
    query: &Embedding,
    factory: &mut BackendFactory<'_>,
    clock: &dyn Clock,
    run: &mut BenchRun,
) {
    let mut cell_samples = Vec::new();
    let mut failure: Option<(Phase, u32, Error)> = None;

    'reps: for repetition in 0..plan.repetitions {
        let mut backend = match factory(kind) {
            Ok(b) => b,
            Err(e) => {
                failure = Some((Phase::Index, repetition, e));
                break 'reps;
            }
        };

        if backend.kind() == BackendKind::Naive {
            // Buffered, not indexed: executed but never timed.
            if let Err(e) = backend.index(records) {
                failure = Some((Phase::Index, repetition, e));
                break 'reps;
            }
        } else {
            let start = clock.now();
            if let Err(e) = backend.index(records) {
                failure = Some((Phase::Index, repetition, e));
                break 'reps;
            }
            cell_samples.push(BenchSample {
                backend: kind,
                phase: Phase::Index,
                size,
                repetition,
                duration: Some(clock.now() - start),
            });
        }

        let start = clock.now();
        match backend.query(query, plan.k) {
            Ok(_) => cell_samples.push(BenchSample {
                backend: kind,
                phase: Phase::Query,
                size,
                repetition,
                duration: Some(clock.now() - start),
            }),
            Err(e) => {
                failure = Some((Phase::Query, repetition, e));
                break 'reps;
            }
        }
    }

    match failure {
        None => run.samples.extend(cell_samples),
        Some((phase, repetition, error)) => {
            run.samples.push(BenchSample {
                backend: kind,
                phase,
                size,
                repetition,
                duration: None,
            });
            run.failures.push(CellFailure {
                backend: kind,
                size,
                phase,
                repetition,
                message: error.to_string(),
            });
        }
    }
}

fn sort_samples(samples: &mut [BenchSample]) {
    samples.sort_by(|a, b| {
        a.backend
            .as_str()
            .cmp(b.backend.as_str())
            .then(a.phase.as_str().cmp(b.phase.as_str()))
            .then(a.size.cmp(&b.size))
            .then(a.repetition.cmp(&b.repetition))
    });
}

/// Arithmetic mean per (backend, phase, size), in seconds, grouped over
/// already-sorted samples. A failed marker anywhere in a group makes the
/// whole group failed.
pub fn summarize(samples: &[BenchSample]) -> Vec<BenchSummaryRow> {
    let mut result = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        let key = (samples[i].backend, samples[i].phase, samples[i].size);
        let mut j = i;
        let mut sum = 0.0f64;
        let mut count = 0usize;
        let mut failed = false;
        while j < samples.len()
            && (samples[j].backend, samples[j].phase, samples[j].size) == key
        {
            match samples[j].duration {
                Some(d) => {
                    sum += d.as_secs_f64();
                    count += 1;
                }
                None => failed = true,
            }
            j += 1;
        }
        result.push(BenchSummaryRow {
            backend: key.0,
            phase: key.1,
            size: key.2,
            mean_s: if failed || count == 0 {
                None
            } else {
                Some(sum / count as f64)
            },
        });
        i = j;
    }
    result
}

fn format_seconds(s: f64) -> String {
    // Shortest round-trip representation keeps injected fake-clock values
    // exact and output byte-stable.
    format!("{s}")
}

/// Raw samples as CSV: `backend,phase,size,repetition,duration_s,status`.
pub fn write_raw_csv<W: Write>(samples: &[BenchSample], mut w: W) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Config("no samples to emit".into()));
    }
    writeln!(w, "backend,phase,size,repetition,duration_s,status")?;
    for s in samples {
        match s.duration {
            Some(d) => writeln!(
                w,
                "{},{},{},{},{},ok",
                s.backend,
                s.phase,
                s.size,
                s.repetition,
                format_seconds(d.as_secs_f64())
            )?,
            None => writeln!(
                w,
                "{},{},{},{},,failed",
                s.backend, s.phase, s.size, s.repetition
            )?,
        }
    }
    Ok(())
}

/// Summary as CSV: `backend,phase,size,mean_s,status`.
pub fn write_summary_csv<W: Write>(rows: &[BenchSummaryRow], mut w: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config("no summary rows to emit".into()));
    }
    writeln!(w, "backend,phase,size,mean_s,status")?;
    for r in rows {
        match r.mean_s {
            Some(mean) => writeln!(
                w,
                "{},{},{},{},ok",
                r.backend,
                r.phase,
                r.size,
                format_seconds(mean)
            )?,
            None => writeln!(w, "{},{},{},,failed", r.backend, r.phase, r.size)?,
        }
    }
    Ok(())
}

/// Writes `<prefix>_raw.csv` and `<prefix>_summary.csv`.
pub fn emit_csv(run: &BenchRun, prefix: &str) -> Result<(String, String)> {
    let raw_path = format!("{prefix}_raw.csv");
    let summary_path = format!("{prefix}_summary.csv");
    write_raw_csv(&run.samples, std::fs::File::create(&raw_path)?)?;
    write_summary_csv(&run.summary, std::fs::File::create(&summary_path)?)?;
    Ok((raw_path, summary_path))
}
