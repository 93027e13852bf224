//! TREC-style text files.
//!
//! - qrels: `qid 0 docid grade`
//! - run:   `qid 0 docid rank score tag`

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::pipeline::{RunEntry, StageTag};
use crate::{Error, Result};

/// Relevance judgments keyed by query, then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one judgment; returns `false` if the pair was already present.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> bool {
        self.judgments
            .entry(query_id.to_owned())
            .or_default()
            .insert(doc_id.to_owned(), grade)
            .is_none()
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(query_id)?.get(doc_id).copied()
    }

    /// All judged documents for a query (including grade 0).
    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.judgments.keys().map(String::as_str)
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

pub fn read_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    parse_qrels(&fs::read_to_string(path)?)
}

pub fn parse_qrels(text: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, docid, grade] = fields[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 fields `qid 0 docid grade`, found {}", fields.len()),
            });
        };
        let grade: u32 = grade.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("grade {grade:?} is not a non-negative integer"),
        })?;
        if !qrels.insert(qid, docid, grade) {
            return Err(Error::DuplicateJudgment {
                line: line_no,
                query_id: qid.to_owned(),
                doc_id: docid.to_owned(),
            });
        }
    }
    Ok(qrels)
}

pub fn write_run(entries: &[RunEntry], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_run_to(entries, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_run_to<W: Write>(entries: &[RunEntry], w: &mut W) -> Result<()> {
    for e in entries {
        writeln!(
            w,
            "{} 0 {} {} {} {}",
            e.query_id,
            e.doc_id,
            e.rank,
            e.score,
            e.stage_tag.as_str()
        )?;
    }
    Ok(())
}

pub fn read_run(path: impl AsRef<Path>) -> Result<Vec<RunEntry>> {
    parse_run(&fs::read_to_string(path)?)
}

pub fn parse_run(text: &str) -> Result<Vec<RunEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, docid, rank, score, tag] = fields[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "expected 6 fields `qid 0 docid rank score tag`, found {}",
                    fields.len()
                ),
            });
        };
        let rank: usize = rank.parse().ok().filter(|&r| r >= 1).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("rank {rank:?} is not a positive integer"),
        })?;
        let score: f64 = score.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("score {score:?} is not a number"),
        })?;
        out.push(RunEntry {
            query_id: qid.to_owned(),
            doc_id: docid.to_owned(),
            rank,
            score,
            stage_tag: StageTag::from_label(tag),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qrels_line() {
        let q = parse_qrels("q1 0 d7 1\n").unwrap();
        assert_eq!(q.grade("q1", "d7"), Some(1));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn duplicate_pair_names_the_line() {
        let err = parse_qrels("q1 0 d7 1\nq1 0 d8 1\nq1 0 d7 0\n").unwrap_err();
        match err {
            Error::DuplicateJudgment { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_qrels() {
        assert!(parse_qrels("").unwrap().is_empty());
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        assert!(matches!(parse_qrels("q1 0 d1 1\nq1 d2 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_qrels("q1 0 d1 -1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_run("q1 0 d1 0 0.5 x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_run("q1 0 d1 1 abc x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn run_lines_round_trip() {
        let entries = vec![
            RunEntry {
                query_id: "q1".into(),
                doc_id: "d3".into(),
                rank: 1,
                score: 0.9449111825230679,
                stage_tag: StageTag::Spectral,
            },
            RunEntry {
                query_id: "q1".into(),
                doc_id: "d1".into(),
                rank: 2,
                score: -0.25,
                stage_tag: StageTag::Spectral,
            },
        ];
        let mut buf = Vec::new();
        write_run_to(&entries, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "q1 0 d3 1 0.9449111825230679 spectral");
        assert_eq!(parse_run(&text).unwrap(), entries);
    }
}
