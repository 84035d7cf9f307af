//! CoNLL-U ingestion reduced to dependency relation labels.
//!
//! Only two columns matter here: ID (column 1), used to skip multiword
//! ranges and empty nodes, and DEPREL (column 8). Everything else, including
//! HEAD and the enhanced DEPS column, is ignored.

use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const COLUMNS: usize = 10;
const DEPREL_COLUMN: usize = 7;
const UNANNOTATED: &str = "_";

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("input is not valid UTF-8 (first invalid byte at offset {offset}, line {line})")]
    Encoding { offset: usize, line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ConlluError {
    fn malformed(line: usize, message: impl Into<String>) -> Self {
        ConlluError::Malformed {
            line,
            message: message.into(),
        }
    }

    /// 1-based line number of the offending line, when known.
    pub fn line(&self) -> Option<usize> {
        match self {
            ConlluError::Malformed { line, .. } | ConlluError::Encoding { line, .. } => Some(*line),
            ConlluError::Io(_) => None,
        }
    }
}

/// A basic-layer token: its word index and verbatim DEPREL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConlluToken {
    pub id: u32,
    pub deprel: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConlluSentence {
    pub tokens: Vec<ConlluToken>,
    /// Comment lines of the block, verbatim including the leading `#`.
    pub metadata: Vec<String>,
}

impl ConlluSentence {
    pub fn deprels(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.deprel.as_str())
    }
}

/// One text reduced to its per-sentence label sequences.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepDocument {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
    pub class_label: String,
    pub domain: String,
    pub language: String,
}

impl DepDocument {
    pub fn num_labels(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Reads a whole CoNLL-U stream.
pub fn parse_conllu<R: Read>(mut input: R) -> Result<Vec<ConlluSentence>, ConlluError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    parse_conllu_bytes(&bytes)
}

pub fn parse_conllu_bytes(bytes: &[u8]) -> Result<Vec<ConlluSentence>, ConlluError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_conllu_str(text),
        Err(err) => {
            let offset = err.valid_up_to();
            let line = 1 + bytes[..offset].iter().filter(|&&b| b == b'\n').count();
            Err(ConlluError::Encoding { offset, line })
        }
    }
}

pub fn parse_conllu_str(text: &str) -> Result<Vec<ConlluSentence>, ConlluError> {
    let mut sentences = Vec::new();
    let mut current = ConlluSentence::default();
    let mut in_block = false;
    let mut last_id = 0u32;

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        if line.trim().is_empty() {
            if in_block {
                sentences.push(std::mem::take(&mut current));
                in_block = false;
                last_id = 0;
            }
            continue;
        }
        in_block = true;

        if line.starts_with('#') {
            current.metadata.push(line.to_string());
            continue;
        }

        let columns: Vec<&str> = line.split('\t').collect();
        if columns.len() != COLUMNS {
            return Err(ConlluError::malformed(
                line_no,
                format!("expected {COLUMNS} tab-separated columns, found {}", columns.len()),
            ));
        }

        let id = columns[0];
        if id.contains('-') || id.contains('.') {
            // Multiword range or empty node: no basic-layer relation.
            continue;
        }
        let id: u32 = id
            .parse()
            .map_err(|_| ConlluError::malformed(line_no, format!("invalid token id {id:?}")))?;
        if id != last_id + 1 {
            return Err(ConlluError::malformed(
                line_no,
                format!("token id {id} does not follow {last_id}"),
            ));
        }
        last_id = id;

        let deprel = columns[DEPREL_COLUMN];
        if deprel.is_empty() {
            return Err(ConlluError::malformed(line_no, "empty DEPREL column"));
        }
        if deprel.chars().any(char::is_whitespace) {
            return Err(ConlluError::malformed(
                line_no,
                format!("DEPREL {deprel:?} contains whitespace"),
            ));
        }
        current.tokens.push(ConlluToken {
            id,
            deprel: deprel.to_string(),
        });
    }
    if in_block {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Writes sentences back out as CoNLL-U, keeping only ID and DEPREL.
pub fn write_conllu(sentences: &[ConlluSentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        for comment in &sentence.metadata {
            out.push_str(comment);
            out.push('\n');
        }
        for token in &sentence.tokens {
            let _ = writeln!(out, "{}\t_\t_\t_\t_\t_\t_\t{}\t_\t_", token.id, token.deprel);
        }
        out.push('\n');
    }
    out
}

/// Lowercases labels and drops unannotated (`_`) tokens, one label sequence
/// per sentence.
pub fn extract_dep_document(
    sentences: &[ConlluSentence],
    doc_id: &str,
    class_label: &str,
    domain: &str,
    language: &str,
) -> DepDocument {
    let sentences = sentences
        .iter()
        .map(|s| {
            s.deprels()
                .filter(|d| *d != UNANNOTATED)
                .map(str::to_lowercase)
                .collect()
        })
        .collect();
    DepDocument {
        doc_id: doc_id.to_string(),
        sentences,
        class_label: class_label.to_string(),
        domain: domain.to_string(),
        language: language.to_string(),
    }
}

/// Splits a parsed stream at `# newdoc` markers.
///
/// Sentences before the first marker form a document without an id. A
/// stream with no markers at all is a single document, possibly empty.
pub fn split_documents(sentences: Vec<ConlluSentence>) -> Vec<(Option<String>, Vec<ConlluSentence>)> {
    let mut docs: Vec<(Option<String>, Vec<ConlluSentence>)> = Vec::new();
    for sentence in sentences {
        if let Some(id) = sentence.metadata.iter().find_map(|m| newdoc_id(m)) {
            docs.push((id, Vec::new()));
        } else if docs.is_empty() {
            docs.push((None, Vec::new()));
        }
        docs.last_mut().expect("pushed above").1.push(sentence);
    }
    if docs.is_empty() {
        docs.push((None, Vec::new()));
    }
    docs
}

/// `Some(id)` for a `# newdoc` comment, where `id` is the optional
/// `id = ...` value.
fn newdoc_id(comment: &str) -> Option<Option<String>> {
    let rest = comment.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix("newdoc")?;
    if !(rest.is_empty() || rest.starts_with(char::is_whitespace)) {
        return None;
    }
    let id = rest
        .trim()
        .strip_prefix("id")
        .and_then(|r| r.trim_start().strip_prefix('='))
        .map(|r| r.trim().to_string())
        .filter(|r| !r.is_empty());
    Some(id)
}
