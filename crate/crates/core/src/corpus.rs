//! Sentences, alignments and the block-format corpus file.
//!
//! A corpus file is a sequence of blank-line separated records:
//!
//! ```text
//! # ::id train-0001
//! # ::snt The boy wants to go.
//! # ::tok The boy wants to go .
//! # ::alignments 1-1|b 2-2|w
//! (w / want-01
//!     :ARG0 (b / boy))
//! ```
//!
//! `::tok` is preferred over whitespace-splitting `::snt`. `::alignments`
//! holds space-separated `start-end|var` pairs with inclusive 0-based token
//! ranges. Unknown `# ::` keys are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::graph::{AmrGraph, VarId};
use crate::penman::{parse_penman, serialize_penman, ParseMode, PenmanError, PenmanStyle};

/// A sentence with its authoritative tokenization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = text.split_whitespace().map(str::to_string).collect();
        Sentence { id: id.into(), text, tokens }
    }

    pub fn with_tokens(id: impl Into<String>, text: impl Into<String>, tokens: Vec<String>) -> Self {
        Sentence { id: id.into(), text: text.into(), tokens }
    }
}

/// Inclusive 0-based token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn single(index: usize) -> Self {
        Span { start: index, end: index }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Node-to-token-span alignment map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment(BTreeMap<VarId, Span>);

impl Alignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, var: impl Into<VarId>, span: Span) {
        self.0.insert(var.into(), span);
    }

    pub fn get(&self, var: &str) -> Option<Span> {
        self.0.get(var).copied()
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, Span)> {
        self.0.iter().map(|(v, s)| (v, *s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that aligned variables exist, spans are ordered and lie
    /// within token bounds.
    pub fn validate(&self, graph: &AmrGraph, sentence: &Sentence) -> Result<(), String> {
        for (var, span) in self.iter() {
            if !graph.has_node(var) {
                return Err(format!("alignment references unknown variable `{var}`"));
            }
            if span.start > span.end {
                return Err(format!("alignment for `{var}` has start > end"));
            }
            if span.end >= sentence.tokens.len() {
                return Err(format!(
                    "alignment for `{var}` exceeds token count {}",
                    sentence.tokens.len()
                ));
            }
        }
        Ok(())
    }
}

impl FromIterator<(VarId, Span)> for Alignment {
    fn from_iter<T: IntoIterator<Item = (VarId, Span)>>(iter: T) -> Self {
        Alignment(iter.into_iter().collect())
    }
}

/// One corpus entry: sentence, gold graph, optional alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub sentence: Sentence,
    pub graph: AmrGraph,
    pub alignment: Option<Alignment>,
}

/// Ordered collection of records with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<CorpusRecord>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("record {index}: missing `# ::snt` line")]
    MissingSentence { index: usize },
    #[error("record {index}: missing PENMAN block")]
    MissingGraph { index: usize },
    #[error("record {index}: {source}")]
    Penman {
        index: usize,
        #[source]
        source: PenmanError,
    },
    #[error("record {index}: bad alignment entry `{entry}`")]
    BadAlignment { index: usize, entry: String },
    #[error("record {index}: {msg}")]
    BadRecord { index: usize, msg: String },
    #[error("duplicate record id `{id}`")]
    DuplicateId { id: String },
    #[error("record {index}: cannot serialize: {source}")]
    Unserializable {
        index: usize,
        #[source]
        source: PenmanError,
    },
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<CorpusRecord>) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new();
        for r in records {
            corpus.push(r)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, record: CorpusRecord) -> Result<(), CorpusError> {
        if self.records.iter().any(|r| r.sentence.id == record.sentence.id) {
            return Err(CorpusError::DuplicateId { id: record.sentence.id.clone() });
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn iter(&self) -> impl Iterator<Item = &CorpusRecord> {
        self.records.iter()
    }

    pub fn get(&self, index: usize) -> Option<&CorpusRecord> {
        self.records.get(index)
    }

    pub fn get_by_id(&self, id: &str) -> Option<&CorpusRecord> {
        self.records.iter().find(|r| r.sentence.id == id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl IntoIterator for Corpus {
    type Item = CorpusRecord;
    type IntoIter = std::vec::IntoIter<CorpusRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.into_iter()
    }
}

/// Parses corpus text in the block format.
pub fn parse_corpus(text: &str, mode: ParseMode) -> Result<Corpus, CorpusError> {
    let mut corpus = Corpus::new();
    let mut block: Vec<&str> = Vec::new();
    let mut index = 0usize;
    for line in text.lines().map(|l| l.trim_end_matches('\r')) {
        if line.trim().is_empty() {
            if !block.is_empty() {
                let record = parse_block(&block, index, mode)?;
                corpus.push(record)?;
                index += 1;
                block.clear();
            }
        } else {
            block.push(line);
        }
    }
    if !block.is_empty() {
        let record = parse_block(&block, index, mode)?;
        corpus.push(record)?;
    }
    Ok(corpus)
}

fn meta_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix("# ")?.trim_start();
    let rest = rest.strip_prefix(key)?;
    if rest.is_empty() {
        Some("")
    } else if rest.starts_with(char::is_whitespace) {
        Some(rest.trim_start())
    } else {
        None
    }
}

fn parse_block(lines: &[&str], index: usize, mode: ParseMode) -> Result<CorpusRecord, CorpusError> {
    let mut id: Option<String> = None;
    let mut snt: Option<String> = None;
    let mut tok: Option<Vec<String>> = None;
    let mut alignments_src: Option<String> = None;
    let mut penman_lines: Vec<&str> = Vec::new();

    for line in lines {
        if line.starts_with('#') {
            if let Some(v) = meta_value(line, "::id") {
                id = Some(v.split_whitespace().next().unwrap_or("").to_string());
            } else if let Some(v) = meta_value(line, "::snt") {
                snt = Some(v.to_string());
            } else if let Some(v) = meta_value(line, "::tok") {
                tok = Some(v.split_whitespace().map(str::to_string).collect());
            } else if let Some(v) = meta_value(line, "::alignments") {
                alignments_src = Some(v.to_string());
            }
            // Other metadata keys are ignored.
        } else {
            penman_lines.push(line);
        }
    }

    let text = snt.ok_or(CorpusError::MissingSentence { index })?;
    if penman_lines.is_empty() {
        return Err(CorpusError::MissingGraph { index });
    }
    let graph = parse_penman(&penman_lines.join("\n"), mode)
        .map_err(|source| CorpusError::Penman { index, source })?;

    let id = match id {
        Some(id) if !id.is_empty() => id,
        _ => format!("record-{index}"),
    };
    let tokens = match tok {
        Some(t) if !t.is_empty() => t,
        _ => text.split_whitespace().map(str::to_string).collect(),
    };
    let sentence = Sentence::with_tokens(id, text, tokens);

    let alignment = match alignments_src {
        None => None,
        Some(src) => {
            let mut al = Alignment::new();
            for entry in src.split_whitespace() {
                let parsed = parse_alignment_entry(entry);
                let Some((start, end, var)) = parsed else {
                    return Err(CorpusError::BadAlignment { index, entry: entry.to_string() });
                };
                al.insert(var, Span::new(start, end));
            }
            al.validate(&graph, &sentence)
                .map_err(|msg| CorpusError::BadRecord { index, msg })?;
            Some(al)
        }
    };

    Ok(CorpusRecord { sentence, graph, alignment })
}

fn parse_alignment_entry(entry: &str) -> Option<(usize, usize, String)> {
    let (range, var) = entry.split_once('|')?;
    let (start, end) = range.split_once('-')?;
    let start: usize = start.parse().ok()?;
    let end: usize = end.parse().ok()?;
    if start > end || var.is_empty() {
        return None;
    }
    Some((start, end, var.to_string()))
}

/// Renders a corpus in the block format. Graphs must be serializable
/// (rooted and connected).
pub fn format_corpus(corpus: &Corpus) -> Result<String, CorpusError> {
    let mut out = String::new();
    for (index, record) in corpus.iter().enumerate() {
        for token in &record.sentence.tokens {
            if token.chars().any(char::is_whitespace) || token.is_empty() {
                return Err(CorpusError::BadRecord {
                    index,
                    msg: format!("token `{token}` cannot be written to `::tok`"),
                });
            }
        }
        out.push_str("# ::id ");
        out.push_str(&record.sentence.id);
        out.push('\n');
        out.push_str("# ::snt ");
        out.push_str(&record.sentence.text.replace(['\n', '\r'], " "));
        out.push('\n');
        out.push_str("# ::tok ");
        out.push_str(&record.sentence.tokens.join(" "));
        out.push('\n');
        if let Some(al) = &record.alignment {
            if !al.is_empty() {
                out.push_str("# ::alignments");
                for (var, span) in al.iter() {
                    out.push_str(&format!(" {}-{}|{}", span.start, span.end, var));
                }
                out.push('\n');
            }
        }
        let penman = serialize_penman(&record.graph, PenmanStyle::Pretty)
            .map_err(|source| CorpusError::Unserializable { index, source })?;
        out.push_str(&penman);
        out.push_str("\n\n");
    }
    Ok(out)
}

pub fn read_corpus(path: impl AsRef<Path>, mode: ParseMode) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text, mode)
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let text = format_corpus(corpus)?;
    std::fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_RECORD: &str = "\
# ::id train-0001
# ::snt The boy wants to go.
# ::tok The boy wants to go .
# ::alignments 1-1|b 2-2|w
(w / want-01
    :ARG0 (b / boy))
";

    #[test]
    fn single_record() {
        let corpus = parse_corpus(ONE_RECORD, ParseMode::Strict).unwrap();
        assert_eq!(corpus.len(), 1);
        let r = &corpus.records()[0];
        assert_eq!(r.sentence.id, "train-0001");
        assert_eq!(r.sentence.tokens.len(), 6);
        assert_eq!(r.graph.node_count(), 2);
        let al = r.alignment.as_ref().unwrap();
        assert_eq!(al.get("b"), Some(Span::new(1, 1)));
        assert_eq!(al.get("w"), Some(Span::new(2, 2)));
    }

    #[test]
    fn tok_preferred_over_snt() {
        let text = "\
# ::id x
# ::snt a-b c
# ::tok a - b c
(a / alpha)
";
        let corpus = parse_corpus(text, ParseMode::Strict).unwrap();
        assert_eq!(corpus.records()[0].sentence.tokens, vec!["a", "-", "b", "c"]);
    }

    #[test]
    fn missing_snt_cites_record_index() {
        let text = "\
# ::id a
# ::snt ok
(a / alpha)

# ::id b
(b / beta)
";
        match parse_corpus(text, ParseMode::Strict).unwrap_err() {
            CorpusError::MissingSentence { index } => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_penman_cites_record_index() {
        let text = "# ::id a\n# ::snt hello\n";
        match parse_corpus(text, ParseMode::Strict).unwrap_err() {
            CorpusError::MissingGraph { index } => assert_eq!(index, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "\
# ::id a
# ::snt one
(a / alpha)

# ::id a
# ::snt two
(b / beta)
";
        assert!(matches!(
            parse_corpus(text, ParseMode::Strict).unwrap_err(),
            CorpusError::DuplicateId { .. }
        ));
    }

    #[test]
    fn missing_id_is_generated() {
        let text = "# ::snt hello\n(a / alpha)\n";
        let corpus = parse_corpus(text, ParseMode::Strict).unwrap();
        assert_eq!(corpus.records()[0].sentence.id, "record-0");
    }

    #[test]
    fn bad_alignment_entry() {
        let text = "# ::snt hello\n# ::alignments 3|x\n(a / alpha)\n";
        assert!(matches!(
            parse_corpus(text, ParseMode::Strict).unwrap_err(),
            CorpusError::BadAlignment { .. }
        ));
    }

    #[test]
    fn alignment_out_of_bounds() {
        let text = "# ::snt one two\n# ::alignments 5-5|a\n(a / alpha)\n";
        assert!(matches!(
            parse_corpus(text, ParseMode::Strict).unwrap_err(),
            CorpusError::BadRecord { .. }
        ));
    }

    #[test]
    fn write_read_fixed_point() {
        let text = format!("{ONE_RECORD}\n# ::id second\n# ::snt dogs bark\n# ::tok dogs bark\n(b / bark-01\n    :ARG0 (d / dog))\n");
        let corpus = parse_corpus(&text, ParseMode::Strict).unwrap();
        let written = format_corpus(&corpus).unwrap();
        let back = parse_corpus(&written, ParseMode::Strict).unwrap();
        assert_eq!(back, corpus);
        // And a second write is byte-stable.
        assert_eq!(format_corpus(&back).unwrap(), written);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.amr");
        let corpus = parse_corpus(ONE_RECORD, ParseMode::Strict).unwrap();
        write_corpus(&corpus, &path).unwrap();
        let back = read_corpus(&path, ParseMode::Strict).unwrap();
        assert_eq!(back, corpus);
    }
}
