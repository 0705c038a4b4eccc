//! Event input: AMiner-style newline-delimited JSON and the canonical
//! tab-separated event format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rustc_hash::FxHashSet;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::events::{validate_stream, AuthorId, EventError, EventStream, Interner, PaperId, PublicationEvent};
use crate::util::{fmt_real, parse_real};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: missing or invalid field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Counts from one AMiner ingestion. Journal records split into kept events,
/// dropped events and duplicate ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub records_total: usize,
    pub records_malformed: usize,
    pub records_non_journal: usize,
    pub journal_records: usize,
    pub duplicate_ids: usize,
    pub events_kept: usize,
    pub events_dropped_empty_refs: usize,
    pub events_dropped_no_authors: usize,
    pub authors_seen: usize,
    pub papers_seen: usize,
    pub refs_dropped_out_of_corpus: usize,
    pub self_refs_dropped: usize,
    pub time_range: Option<(f64, f64)>,
    pub events_per_year: BTreeMap<String, usize>,
}

/// One event with source labels, before interning.
struct RawEvent {
    time: f64,
    paper: String,
    authors: Vec<String>,
    references: Vec<String>,
}

/// Interns labels in a fixed order (authors, focal paper, references per
/// event) so both input formats produce identical ids for the same events.
fn assemble(raw: Vec<RawEvent>) -> Result<EventStream, EventError> {
    let mut authors = Interner::new();
    let mut papers = Interner::new();
    let mut events = Vec::with_capacity(raw.len());
    for r in raw {
        let a = r.authors.iter().map(|s| AuthorId(authors.intern(s))).collect();
        let p = PaperId(papers.intern(&r.paper));
        let refs = r.references.iter().map(|s| PaperId(papers.intern(s))).collect();
        events.push(PublicationEvent::new(r.time, p, a, refs));
    }
    validate_stream(events, authors, papers)
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_owned()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>, IngestError> {
    let f = BufReader::new(File::open(path)?);
    Ok(f.lines().enumerate().map(|(i, l)| (i + 1, l)))
}

/// Journal record fields needed by the second pass.
struct JournalRecord {
    id: String,
    year: f64,
    authors: Vec<String>,
    references: Vec<String>,
}

fn parse_journal(line: usize, v: &Value) -> Result<Option<JournalRecord>, IngestError> {
    let id = v.get("id").and_then(id_string).ok_or(IngestError::MissingField { line, field: "id" })?;
    if v.get("doc_type").and_then(Value::as_str) != Some("Journal") {
        return Ok(None);
    }
    let year = match v.get("year") {
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => parse_real(s),
        _ => None,
    }
    .filter(|y| y.is_finite() && *y >= 0.0)
    .ok_or(IngestError::MissingField { line, field: "year" })?;
    let authors = v
        .get("authors")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(|x| x.get("id").and_then(id_string)).collect())
        .unwrap_or_default();
    let references = v
        .get("references")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(id_string).collect())
        .unwrap_or_default();
    Ok(Some(JournalRecord {
        id,
        year,
        authors,
        references,
    }))
}

/// Reads newline-delimited AMiner JSON in two passes: the first collects the
/// ids of journal papers, the second restricts every reference list to
/// them and drops events left without references (their papers stay
/// citable).
pub fn ingest_aminer(path: &Path) -> Result<(EventStream, IngestReport), IngestError> {
    let mut report = IngestReport::default();
    let mut retained: FxHashSet<String> = FxHashSet::default();
    for (n, line) in lines(path)? {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.records_total += 1;
        let Ok(v) = serde_json::from_str::<Value>(&line) else {
            report.records_malformed += 1;
            continue;
        };
        match parse_journal(n, &v)? {
            Some(rec) => {
                report.journal_records += 1;
                retained.insert(rec.id);
            }
            None => report.records_non_journal += 1,
        }
    }

    let mut seen: FxHashSet<String> = FxHashSet::default();
    let mut raw = Vec::new();
    for (n, line) in lines(path)? {
        let line = line?;
        let Ok(v) = serde_json::from_str::<Value>(&line) else { continue };
        let Some(rec) = parse_journal(n, &v)? else { continue };
        if !seen.insert(rec.id.clone()) {
            report.duplicate_ids += 1;
            continue;
        }
        let mut refs = Vec::with_capacity(rec.references.len());
        let mut uniq: FxHashSet<&str> = FxHashSet::default();
        for r in &rec.references {
            if !uniq.insert(r) {
                continue;
            }
            if *r == rec.id {
                report.self_refs_dropped += 1;
            } else if retained.contains(r) {
                refs.push(r.clone());
            } else {
                report.refs_dropped_out_of_corpus += 1;
            }
        }
        if refs.is_empty() {
            report.events_dropped_empty_refs += 1;
            continue;
        }
        let mut authors = rec.authors;
        let mut uniq: FxHashSet<String> = FxHashSet::default();
        authors.retain(|a| uniq.insert(a.clone()));
        if authors.is_empty() {
            report.events_dropped_no_authors += 1;
            continue;
        }
        raw.push(RawEvent {
            time: rec.year,
            paper: rec.id,
            authors,
            references: refs,
        });
    }
    raw.sort_by(|a, b| a.time.total_cmp(&b.time));

    report.events_kept = raw.len();
    for r in &raw {
        *report.events_per_year.entry(fmt_real(r.time)).or_default() += 1;
    }
    report.time_range = raw.first().zip(raw.last()).map(|(a, b)| (a.time, b.time));
    let stream = assemble(raw)?;
    report.authors_seen = stream.num_authors();
    report.papers_seen = stream.num_papers();
    Ok((stream, report))
}

/// Parses `time<TAB>paper<TAB>author,...<TAB>ref,...` lines. Blank lines and
/// lines starting with `#` are skipped.
pub fn read_event_tsv<R: BufRead>(r: R) -> Result<EventStream, IngestError> {
    let mut raw = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| IngestError::MalformedLine {
            line: n,
            reason: reason.to_owned(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 tab-separated fields"));
        }
        let time = parse_real(fields[0]).ok_or_else(|| bad("malformed time"))?;
        let list = |s: &str| -> Vec<String> {
            s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::to_owned).collect()
        };
        raw.push(RawEvent {
            time,
            paper: fields[1].trim().to_owned(),
            authors: list(fields[2]),
            references: list(fields[3]),
        });
    }
    Ok(assemble(raw)?)
}

pub fn read_event_tsv_file(path: &Path) -> Result<EventStream, IngestError> {
    read_event_tsv(BufReader::new(File::open(path)?))
}

pub fn write_event_tsv<W: Write>(stream: &EventStream, mut w: W) -> std::io::Result<()> {
    let a = stream.author_labels();
    let p = stream.paper_labels();
    for e in stream.events() {
        let authors: Vec<&str> = e.authors.iter().map(|x| a.name(x.0)).collect();
        let refs: Vec<&str> = e.references.iter().map(|x| p.name(x.0)).collect();
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            fmt_real(e.time),
            p.name(e.paper.0),
            authors.join(","),
            refs.join(",")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let text = "2001\tp1\ta,b\tr1,r2\n2002\tp2\tc,a\tp1,r3\n2002\tp3\tb\tr2\n";
        let s = read_event_tsv(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        let mut out = Vec::new();
        write_event_tsv(&s, &mut out).unwrap();
        let again = read_event_tsv(&out[..]).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn tsv_errors() {
        assert!(matches!(
            read_event_tsv("2001\tp1\ta\n".as_bytes()),
            Err(IngestError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            read_event_tsv("2001\tp1\ta\tp1\n".as_bytes()),
            Err(IngestError::Event(EventError::SelfReference { .. }))
        ));
    }

    #[test]
    fn aminer_filters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.json");
        let records = [
            r#"{"id":"p1","year":2000,"doc_type":"Journal","authors":[{"id":"a1"}],"references":["x"]}"#,
            r#"{"id":"p2","year":2001,"doc_type":"Journal","authors":[{"id":"a1"},{"id":"a2"}],"references":["p1","x","p2"]}"#,
            r#"{"id":"p3","year":2001,"doc_type":"Conference","authors":[{"id":"a3"}],"references":["p1"]}"#,
            r#"not json"#,
        ];
        std::fs::write(&path, records.join("\n")).unwrap();
        let (s, r) = ingest_aminer(&path).unwrap();
        assert_eq!(r.events_kept, 1);
        assert_eq!(r.events_dropped_empty_refs, 1);
        assert_eq!(r.records_non_journal, 1);
        assert_eq!(r.records_malformed, 1);
        assert_eq!(r.self_refs_dropped, 1);
        assert_eq!(r.refs_dropped_out_of_corpus, 2);
        assert_eq!(s.events()[0].references.len(), 1);
        assert_eq!(s.paper_labels().name(s.events()[0].references[0].0), "p1");
    }

    #[test]
    fn aminer_missing_year() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.json");
        std::fs::write(&path, r#"{"id":"p1","doc_type":"Journal","authors":[],"references":[]}"#).unwrap();
        assert!(matches!(
            ingest_aminer(&path),
            Err(IngestError::MissingField { field: "year", .. })
        ));
    }
}
