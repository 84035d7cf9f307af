//! Line-delimited JSON dataset manifests.
//!
//! The first non-blank line is a header declaring the class, domain and
//! language sets; every following line is one document record:
//!
//! ```text
//! {"manifest_version":1,"classes":["human","machine"],"domains":["wiki"],"languages":["en"]}
//! {"doc_id":"w1","conllu":"parsed/w1.conllu","class_label":"human","domain":"wiki","language":"en"}
//! {"doc_id":"w2","conllu_inline":"1\t...\n","class_label":"machine","domain":"wiki","language":"en"}
//! ```
//!
//! Relative `conllu` paths resolve against the manifest's directory. Class
//! order in the header fixes the model's class order.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::conllu::{self, DepDocument};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub manifest_version: u32,
    pub classes: Vec<String>,
    pub domains: Vec<String>,
    pub languages: Vec<String>,
    /// Free-form producer metadata, e.g. parser model names and versions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConlluSource {
    Path(PathBuf),
    Inline(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub doc_id: String,
    pub source: ConlluSource,
    pub class_label: String,
    pub domain: String,
    pub language: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordRepr {
    doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conllu: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conllu_inline: Option<String>,
    class_label: String,
    domain: String,
    language: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub records: Vec<ManifestRecord>,
}

fn invalid(line: usize, doc_id: Option<&str>, message: impl Into<String>) -> PipelineError {
    PipelineError::Manifest {
        line,
        doc_id: doc_id.map(str::to_string),
        message: message.into(),
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    DatasetManifest::parse(&text, base)
}

impl DatasetManifest {
    /// Parses and validates manifest text; relative paths join `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());

        let (header_line, header_text) = lines.next().ok_or_else(|| invalid(1, None, "manifest is empty"))?;
        let header: ManifestHeader =
            serde_json::from_str(header_text).map_err(|e| invalid(header_line, None, format!("bad header: {e}")))?;
        if header.manifest_version != MANIFEST_VERSION {
            return Err(invalid(
                header_line,
                None,
                format!(
                    "unsupported manifest_version {} (expected {MANIFEST_VERSION})",
                    header.manifest_version
                ),
            ));
        }
        for (what, set) in [
            ("class", &header.classes),
            ("domain", &header.domains),
            ("language", &header.languages),
        ] {
            let mut seen = HashSet::new();
            if let Some(dup) = set.iter().find(|v| !seen.insert(v.as_str())) {
                return Err(invalid(header_line, None, format!("{what} {dup:?} declared twice")));
            }
        }
        if header.classes.len() < 2 {
            return Err(invalid(header_line, None, "at least two classes must be declared"));
        }

        let mut records = Vec::new();
        let mut ids = HashSet::new();
        for (line, raw) in lines {
            let r: RecordRepr =
                serde_json::from_str(raw).map_err(|e| invalid(line, None, format!("bad record: {e}")))?;
            let id = Some(r.doc_id.as_str());
            if r.doc_id.is_empty() {
                return Err(invalid(line, id, "empty doc_id"));
            }
            if !ids.insert(r.doc_id.clone()) {
                return Err(invalid(line, id, "duplicate doc_id"));
            }
            for (what, value, set) in [
                ("class", &r.class_label, &header.classes),
                ("domain", &r.domain, &header.domains),
                ("language", &r.language, &header.languages),
            ] {
                if !set.contains(value) {
                    return Err(invalid(line, id, format!("undeclared {what} {value:?}")));
                }
            }
            let source = match (r.conllu, r.conllu_inline) {
                (Some(p), None) => {
                    let p = if p.is_absolute() { p } else { base_dir.join(p) };
                    if !p.is_file() {
                        return Err(invalid(
                            line,
                            id,
                            format!("CoNLL-U file {} does not exist", p.display()),
                        ));
                    }
                    ConlluSource::Path(p)
                }
                (None, Some(text)) => ConlluSource::Inline(text),
                _ => {
                    return Err(invalid(
                        line,
                        id,
                        "exactly one of `conllu` or `conllu_inline` is required",
                    ));
                }
            };
            records.push(ManifestRecord {
                doc_id: r.doc_id,
                source,
                class_label: r.class_label,
                domain: r.domain,
                language: r.language,
            });
        }
        Ok(DatasetManifest { header, records })
    }

    /// Serializes back to manifest text. Paths are written as stored.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            let (conllu, conllu_inline) = match &r.source {
                ConlluSource::Path(p) => (Some(p.clone()), None),
                ConlluSource::Inline(t) => (None, Some(t.clone())),
            };
            let repr = RecordRepr {
                doc_id: r.doc_id.clone(),
                conllu,
                conllu_inline,
                class_label: r.class_label.clone(),
                domain: r.domain.clone(),
                language: r.language.clone(),
            };
            out.push_str(&serde_json::to_string(&repr).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.header.classes.iter().position(|c| c == class)
    }
}

impl ManifestRecord {
    /// Parses the record's CoNLL-U into a labelled document.
    pub fn load(&self) -> Result<DepDocument, PipelineError> {
        let wrap = |source| PipelineError::Conllu {
            doc_id: self.doc_id.clone(),
            source,
        };
        let sentences = match &self.source {
            ConlluSource::Path(p) => {
                let bytes = fs::read(p).map_err(|source| PipelineError::Io {
                    path: p.clone(),
                    source,
                })?;
                conllu::parse_conllu_bytes(&bytes).map_err(wrap)?
            }
            ConlluSource::Inline(text) => conllu::parse_conllu_str(text).map_err(wrap)?,
        };
        Ok(conllu::extract_dep_document(
            &sentences,
            &self.doc_id,
            &self.class_label,
            &self.domain,
            &self.language,
        ))
    }
}

/// Loads documents in record order; parsing fans out across threads.
pub fn load_documents(records: &[ManifestRecord]) -> Result<Vec<DepDocument>, PipelineError> {
    records.par_iter().map(ManifestRecord::load).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        r#"{"manifest_version":1,"classes":["human","machine"],"domains":["arxiv","reddit"],"languages":["en"]}"#;

    fn inline(id: &str, class: &str, domain: &str) -> String {
        format!(
            r#"{{"doc_id":"{id}","conllu_inline":"1\tw\tw\tX\t_\t_\t0\tROOT\t_\t_\n","class_label":"{class}","domain":"{domain}","language":"en"}}"#
        )
    }

    fn parse(lines: &[String]) -> Result<DatasetManifest, PipelineError> {
        DatasetManifest::parse(&(HEADER.to_string() + "\n" + &lines.join("\n")), Path::new("."))
    }

    fn err_text(r: Result<DatasetManifest, PipelineError>) -> String {
        r.unwrap_err().to_string()
    }

    #[test]
    fn well_formed_manifest() {
        let m = parse(&[inline("a", "human", "arxiv"), inline("b", "machine", "reddit")]).unwrap();
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.class_index("machine"), Some(1));
        let doc = m.records[0].load().unwrap();
        assert_eq!(doc.sentences, vec![vec!["root"]]);
        assert_eq!(doc.class_label, "human");
    }

    #[test]
    fn file_references_resolve_and_must_exist() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.conllu"), "1\tw\tw\tX\t_\t_\t0\tnsubj\t_\t_\n").unwrap();
        let rec = |id: &str, file: &str| {
            format!(r#"{{"doc_id":"{id}","conllu":"{file}","class_label":"human","domain":"arxiv","language":"en"}}"#)
        };
        let path = dir.path().join("m.jsonl");
        fs::write(&path, format!("{HEADER}\n{}\n", rec("a", "a.conllu"))).unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(load_documents(&m.records).unwrap()[0].sentences, vec![vec!["nsubj"]]);

        fs::write(&path, format!("{HEADER}\n{}\n", rec("gone", "missing.conllu"))).unwrap();
        let msg = load_manifest(&path).unwrap_err().to_string();
        assert!(msg.contains("gone") && msg.contains("does not exist"), "{msg}");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let msg = err_text(parse(&[inline("a", "human", "arxiv"), inline("a", "human", "arxiv")]));
        assert!(msg.contains("duplicate doc_id") && msg.contains("\"a\""), "{msg}");
    }

    #[test]
    fn undeclared_values_are_rejected() {
        assert!(err_text(parse(&[inline("a", "gpt", "arxiv")])).contains("undeclared class"));
        assert!(err_text(parse(&[inline("a", "human", "news")])).contains("undeclared domain"));
    }

    #[test]
    fn header_problems() {
        assert!(DatasetManifest::parse("", Path::new(".")).is_err());
        let v2 = HEADER.replace("\"manifest_version\":1", "\"manifest_version\":2");
        assert!(DatasetManifest::parse(&v2, Path::new(".")).is_err());
        let one_class = r#"{"manifest_version":1,"classes":["human"],"domains":[],"languages":[]}"#;
        assert!(DatasetManifest::parse(one_class, Path::new(".")).is_err());
    }

    #[test]
    fn record_needs_exactly_one_source() {
        let both =
            r#"{"doc_id":"a","conllu":"x","conllu_inline":"","class_label":"human","domain":"arxiv","language":"en"}"#;
        assert!(err_text(parse(&[both.to_string()])).contains("exactly one"));
    }

    #[test]
    fn bad_conllu_names_the_document() {
        let bad =
            r#"{"doc_id":"broken","conllu_inline":"1\tonly\n","class_label":"human","domain":"arxiv","language":"en"}"#;
        let m = parse(&[bad.to_string()]).unwrap();
        let msg = load_documents(&m.records).unwrap_err().to_string();
        assert!(msg.contains("broken") && msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn jsonl_round_trip() {
        let m = parse(&[inline("a", "human", "arxiv"), inline("b", "machine", "reddit")]).unwrap();
        let again = DatasetManifest::parse(&m.to_jsonl(), Path::new(".")).unwrap();
        assert_eq!(again, m);
    }
}
