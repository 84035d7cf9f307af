#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The multiset every sentence of the bigram corpus is a permutation of.
pub const SENTENCE_LABELS: [&str; 8] = ["nsubj", "root", "obj", "punct", "dep", "amod", "det", "punct"];
pub const PLANTED: [&str; 2] = ["punct", "dep"];
pub const PLANTED_NGRAM: &str = "punct dep";

#[derive(Debug, Clone)]
pub struct SynthDoc {
    pub doc_id: String,
    pub class: String,
    pub domain: String,
    pub language: String,
    pub sentences: Vec<Vec<String>>,
}

pub fn conllu_text(sentences: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (s, labels) in sentences.iter().enumerate() {
        out.push_str(&format!("# sent_id = {}\n", s + 1));
        let root = labels.iter().position(|l| l == "root").map_or(0, |p| p + 1);
        for (i, label) in labels.iter().enumerate() {
            let head = if label == "root" { 0 } else { root };
            out.push_str(&format!("{}\tw{i}\tw{i}\tX\t_\t_\t{head}\t{label}\t_\t_\n", i + 1));
        }
        out.push('\n');
    }
    out
}

fn has_bigram(labels: &[String], bigram: [&str; 2]) -> bool {
    labels.windows(2).any(|w| w[0] == bigram[0] && w[1] == bigram[1])
}

/// Two classes whose documents have identical unigram proportions: every
/// sentence is a shuffle of [`SENTENCE_LABELS`]. Every `machine` sentence
/// contains the [`PLANTED`] bigram and no `human` sentence does.
pub fn bigram_corpus(docs_per_class: usize, seed: u64) -> Vec<SynthDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    for i in 0..2 * docs_per_class {
        let machine = i % 2 == 1;
        let n_sentences = rng.random_range(3..=7);
        let sentences = (0..n_sentences)
            .map(|_| loop {
                let mut labels: Vec<String> = SENTENCE_LABELS.iter().map(|s| s.to_string()).collect();
                labels.shuffle(&mut rng);
                if has_bigram(&labels, PLANTED) == machine {
                    break labels;
                }
            })
            .collect();
        docs.push(SynthDoc {
            doc_id: format!("doc{i:04}"),
            class: if machine { "machine" } else { "human" }.into(),
            domain: ["news", "wiki"][i / 2 % 2].into(),
            language: "en".into(),
            sentences,
        });
    }
    docs
}

const ALPHABET: [&str; 10] = [
    "nsubj", "root", "obj", "det", "amod", "advmod", "case", "nmod", "punct", "conj",
];

/// Three classes over three domains. Labels are drawn uniformly; each
/// non-human class inserts its own favourite bigram into some sentences.
pub fn multiclass_corpus(docs_per_cell: usize, seed: u64) -> Vec<SynthDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = ["human", "gpt", "llama"];
    let domains = ["arxiv", "reddit", "wiki"];
    let favourite: [Option<[&str; 2]>; 3] = [None, Some(["amod", "nmod"]), Some(["advmod", "conj"])];
    let mut docs = Vec::new();
    for (di, domain) in domains.iter().enumerate() {
        for (ci, class) in classes.iter().enumerate() {
            for k in 0..docs_per_cell {
                let n_sentences = rng.random_range(2..=6);
                let sentences = (0..n_sentences)
                    .map(|_| {
                        let len = rng.random_range(4..=12);
                        let mut labels: Vec<String> = (0..len)
                            .map(|_| ALPHABET.choose(&mut rng).unwrap().to_string())
                            .collect();
                        if let Some(fav) = favourite[ci] {
                            if rng.random_bool(0.6) {
                                let at = rng.random_range(0..len - 1);
                                labels[at] = fav[0].into();
                                labels[at + 1] = fav[1].into();
                            }
                        }
                        labels
                    })
                    .collect();
                docs.push(SynthDoc {
                    doc_id: format!("{domain}-{class}-{k:03}-{di}{ci}"),
                    class: class.to_string(),
                    domain: domain.to_string(),
                    language: "en".into(),
                    sentences,
                });
            }
        }
    }
    docs
}

fn distinct(values: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Writes one CoNLL-U file per document under `dir/conllu/` plus
/// `dir/manifest.jsonl`; returns the manifest path.
pub fn write_dataset(dir: &Path, docs: &[SynthDoc]) -> PathBuf {
    let conllu_dir = dir.join("conllu");
    fs::create_dir_all(&conllu_dir).unwrap();
    let header = serde_json::json!({
        "manifest_version": 1,
        "classes": distinct(docs.iter().map(|d| d.class.clone())),
        "domains": distinct(docs.iter().map(|d| d.domain.clone())),
        "languages": distinct(docs.iter().map(|d| d.language.clone())),
    });
    let mut manifest = header.to_string() + "\n";
    for d in docs {
        fs::write(
            conllu_dir.join(format!("{}.conllu", d.doc_id)),
            conllu_text(&d.sentences),
        )
        .unwrap();
        let record = serde_json::json!({
            "doc_id": d.doc_id,
            "conllu": format!("conllu/{}.conllu", d.doc_id),
            "class_label": d.class,
            "domain": d.domain,
            "language": d.language,
        });
        manifest.push_str(&record.to_string());
        manifest.push('\n');
    }
    let path = dir.join("manifest.jsonl");
    fs::write(&path, manifest).unwrap();
    path
}

/// Every file under `dir`, relative path and contents, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
