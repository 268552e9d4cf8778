//! Streaming JSONL readers and writers for the enriched dataset format.
//!
//! One JSON document per line, UTF-8, embeddings as plain decimal arrays.
//! Readers yield records lazily in file order and never load the whole file.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::{EnrichedRecord, RawRecord};
use crate::error::{Error, Result};

/// Lazy reader over enriched records.
///
/// Each line must parse as an [`EnrichedRecord`]; a malformed line aborts the
/// stream with an error naming the line. All records must share one embedding
/// dimension (fixed by the first record).
pub struct JsonlReader<R: BufRead> {
    lines: std::io::Lines<R>,
    line_number: usize,
    expected_dim: Option<usize>,
}

impl<R: BufRead> JsonlReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_number: 0,
            expected_dim: None,
        }
    }

    fn parse_line(&mut self, line: &str) -> Result<EnrichedRecord> {
        let record: EnrichedRecord =
            serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                line: self.line_number,
                message: e.to_string(),
            })?;
        if record.document_embeddings.dim() != record.question_embeddings.dim() {
            return Err(Error::MalformedLine {
                line: self.line_number,
                message: format!(
                    "document embedding has dimension {}, question embedding {}",
                    record.document_embeddings.dim(),
                    record.question_embeddings.dim()
                ),
            });
        }
        match self.expected_dim {
            None => self.expected_dim = Some(record.dim()),
            Some(dim) if dim != record.dim() => {
                return Err(Error::MalformedLine {
                    line: self.line_number,
                    message: format!("dimension {} is inconsistent with earlier {dim}", record.dim()),
                });
            }
            Some(_) => {}
        }
        Ok(record)
    }
}

impl<R: BufRead> Iterator for JsonlReader<R> {
    type Item = Result<EnrichedRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_number += 1;
            match self.lines.next()? {
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(self.parse_line(&line));
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

/// Opens an enriched JSONL file for lazy reading.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<JsonlReader<BufReader<File>>> {
    Ok(JsonlReader::new(BufReader::new(File::open(path)?)))
}

/// Lazy reader over raw (pre-enrichment) records.
///
/// Unlike the enriched reader, unparseable lines are skipped and counted
/// instead of aborting: enrichment runs are long and a stray bad line should
/// not kill one.
pub struct RawJsonlReader<R: BufRead> {
    lines: std::io::Lines<R>,
    skipped: Arc<AtomicUsize>,
}

impl<R: BufRead> RawJsonlReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            skipped: Arc::new(AtomicUsize::new(0)),
        }
    }

    /// Live counter of skipped unparseable lines. Read it after the stream
    /// is consumed.
    pub fn skip_counter(&self) -> Arc<AtomicUsize> {
        Arc::clone(&self.skipped)
    }
}

impl<R: BufRead> Iterator for RawJsonlReader<R> {
    type Item = RawRecord;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.lines.next()? {
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<RawRecord>(&line) {
                        Ok(record) => return Some(record),
                        Err(_) => {
                            self.skipped.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                }
                Err(_) => {
                    self.skipped.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
    }
}

pub fn read_raw_jsonl(path: impl AsRef<Path>) -> Result<RawJsonlReader<BufReader<File>>> {
    Ok(RawJsonlReader::new(BufReader::new(File::open(path)?)))
}

/// Incremental writer with explicit flush points, for batch-granular
/// progress.
pub struct JsonlWriter<W: Write> {
    inner: BufWriter<W>,
    count: usize,
}

impl<W: Write> JsonlWriter<W> {
    pub fn new(writer: W) -> Self {
        Self {
            inner: BufWriter::new(writer),
            count: 0,
        }
    }

    pub fn write_record(&mut self, record: &EnrichedRecord) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record)
            .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
        self.inner.write_all(b"\n")?;
        self.count += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

impl JsonlWriter<File> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(File::create(path)?))
    }
}

/// Writes all records to `path`, one JSON document per line, and returns the
/// number written.
pub fn write_jsonl<I>(records: I, path: impl AsRef<Path>) -> Result<usize>
where
    I: IntoIterator<Item = EnrichedRecord>,
{
    let mut writer = JsonlWriter::create(path)?;
    for record in records {
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(writer.count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Embedding;
    use proptest::prelude::*;

    /// The enriched-record example from the source corpus, with the arrays
    /// cut down to a test-friendly dimension.
    pub(crate) const EXAMPLE_LINE: &str = concat!(
        r#"{"document_embeddings": [0.178529500961, -0.32837245, 0.91022, 0.0051],"#,
        r#" "document_text": "Email marketing - Wikipedia <H1>Email marketing</H1> Jump to...","#,
        r#" "example_id": 5655493461695504401,"#,
        r#" "question_embeddings": [-0.051026359897, 0.2277609, -0.44186, 0.77125],"#,
        r#" "question_text": "which is the most common use of opt-in e-mail marketing"}"#
    );

    fn sample_record(example_id: i64, dim: usize) -> EnrichedRecord {
        let doc: Vec<f32> = (0..dim).map(|j| (j as f32 + 1.0) * 0.25).collect();
        let q: Vec<f32> = (0..dim).map(|j| (j as f32 + 1.0) * -0.125).collect();
        EnrichedRecord {
            document_embeddings: Embedding::new(doc).unwrap(),
            document_text: format!("document {example_id}"),
            example_id,
            question_embeddings: Embedding::new(q).unwrap(),
            question_text: format!("question {example_id}"),
        }
    }

    #[test]
    fn example_line_parses_with_all_fields() {
        let record: EnrichedRecord = serde_json::from_str(EXAMPLE_LINE).unwrap();
        assert_eq!(record.example_id, 5655493461695504401);
        assert_eq!(
            record.question_text,
            "which is the most common use of opt-in e-mail marketing"
        );
        assert!(record.document_text.starts_with("Email marketing"));
        assert_eq!(record.dim(), 4);
        // Stored values match the decimal text to f32 precision.
        assert!((record.document_embeddings.values()[0] as f64 - 0.178529500961).abs() < 1e-7);
        assert!((record.question_embeddings.values()[0] as f64 - -0.051026359897).abs() < 1e-7);
    }

    #[test]
    fn example_line_round_trips() {
        let record: EnrichedRecord = serde_json::from_str(EXAMPLE_LINE).unwrap();
        let serialized = serde_json::to_string(&record).unwrap();
        let reparsed: EnrichedRecord = serde_json::from_str(&serialized).unwrap();
        assert_eq!(reparsed.example_id, 5655493461695504401);
        assert_eq!(record, reparsed);
    }

    #[test]
    fn keys_serialize_in_fixed_order() {
        let line = serde_json::to_string(&sample_record(1, 2)).unwrap();
        let d = line.find("\"document_embeddings\"").unwrap();
        let t = line.find("\"document_text\"").unwrap();
        let i = line.find("\"example_id\"").unwrap();
        let qe = line.find("\"question_embeddings\"").unwrap();
        let qt = line.find("\"question_text\"").unwrap();
        assert!(d < t && t < i && i < qe && qe < qt);
    }

    #[test]
    fn empty_file_yields_empty_stream() {
        let reader = JsonlReader::new(std::io::Cursor::new(""));
        assert_eq!(reader.count(), 0);
    }

    #[test]
    fn truncated_array_names_the_line() {
        let good = serde_json::to_string(&sample_record(1, 3)).unwrap();
        let bad = r#"{"document_embeddings": [0.1, 0.2"#;
        let input = format!("{good}\n{bad}\n");
        let mut reader = JsonlReader::new(std::io::Cursor::new(input));
        assert!(reader.next().unwrap().is_ok());
        match reader.next().unwrap().unwrap_err() {
            Error::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn inconsistent_dimension_is_rejected() {
        let input = format!(
            "{}\n{}\n",
            serde_json::to_string(&sample_record(1, 3)).unwrap(),
            serde_json::to_string(&sample_record(2, 5)).unwrap()
        );
        let mut reader = JsonlReader::new(std::io::Cursor::new(input));
        assert!(reader.next().unwrap().is_ok());
        assert!(matches!(
            reader.next().unwrap().unwrap_err(),
            Error::MalformedLine { line: 2, .. }
        ));
    }

    #[test]
    fn mismatched_doc_and_question_dims_are_rejected() {
        let line = concat!(
            r#"{"document_embeddings": [0.1, 0.2], "document_text": "d","#,
            r#" "example_id": 1, "question_embeddings": [0.1], "question_text": "q"}"#
        );
        let mut reader = JsonlReader::new(std::io::Cursor::new(line));
        assert!(matches!(
            reader.next().unwrap().unwrap_err(),
            Error::MalformedLine { line: 1, .. }
        ));
    }

    #[test]
    fn reader_is_lazy() {
        // A reader that fails after the first line: taking one record must
        // succeed, proving the rest of the file is never touched.
        struct FailAfter<R> {
            inner: R,
            remaining: usize,
        }
        impl<R: std::io::Read> std::io::Read for FailAfter<R> {
            fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
                if self.remaining == 0 {
                    return Err(std::io::Error::other("read past budget"));
                }
                let n = self.remaining.min(buf.len());
                let got = self.inner.read(&mut buf[..n])?;
                self.remaining -= got;
                Ok(got)
            }
        }

        let first = serde_json::to_string(&sample_record(1, 2)).unwrap();
        let mut body = format!("{first}\n");
        let budget = body.len() + 16;
        for i in 2..200 {
            body.push_str(&serde_json::to_string(&sample_record(i, 2)).unwrap());
            body.push('\n');
        }
        let reader = JsonlReader::new(BufReader::with_capacity(
            8,
            FailAfter {
                inner: std::io::Cursor::new(body),
                remaining: budget,
            },
        ));
        let first_record = reader.take(1).next().unwrap().unwrap();
        assert_eq!(first_record.example_id, 1);
    }

    #[test]
    fn raw_reader_skips_unparseable_lines() {
        let input = concat!(
            r#"{"example_id": 1, "document_text": "d1", "question_text": "q1", "extra": 3}"#,
            "\n",
            "not json at all\n",
            r#"{"example_id": 2}"#,
            "\n",
            r#"{"example_id": 3, "document_text": "d3", "question_text": "q3"}"#,
            "\n"
        );
        let reader = RawJsonlReader::new(std::io::Cursor::new(input));
        let skipped = reader.skip_counter();
        let records: Vec<RawRecord> = reader.collect();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].example_id, 1);
        assert_eq!(records[1].example_id, 3);
        assert_eq!(skipped.load(Ordering::Relaxed), 2);
    }

    #[test]
    fn write_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round_trip.jsonl");
        let records: Vec<EnrichedRecord> = (0..100).map(|i| sample_record(i, 6)).collect();
        let written = write_jsonl(records.clone(), &path).unwrap();
        assert_eq!(written, 100);
        let back: Vec<EnrichedRecord> = read_jsonl(&path)
            .unwrap()
            .collect::<Result<Vec<_>>>()
            .unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn write_zero_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        assert_eq!(write_jsonl(Vec::new(), &path).unwrap(), 0);
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
    }

    fn record_strategy() -> impl Strategy<Value = EnrichedRecord> {
        (
            proptest::collection::vec(-10.0f32..10.0, 4),
            proptest::collection::vec(-10.0f32..10.0, 4),
            any::<i64>(),
            "[a-zA-Z0-9 ]{0,40}",
            "[a-zA-Z0-9 ]{0,40}",
        )
            .prop_map(|(d, q, example_id, document_text, question_text)| EnrichedRecord {
                document_embeddings: Embedding::new(d).unwrap(),
                document_text,
                example_id,
                question_embeddings: Embedding::new(q).unwrap(),
                question_text,
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip_identity(records in proptest::collection::vec(record_strategy(), 0..20)) {
            let mut buffer = Vec::new();
            {
                let mut writer = JsonlWriter::new(&mut buffer);
                for r in &records {
                    writer.write_record(r).unwrap();
                }
                writer.flush().unwrap();
            }
            let back: Vec<EnrichedRecord> = JsonlReader::new(std::io::Cursor::new(buffer))
                .collect::<Result<Vec<_>>>()
                .unwrap();
            prop_assert_eq!(back, records);
        }
    }
}
