//! TF-IDF vectors over dependency-label n-grams.
//!
//! Weighting is raw term count times smoothed IDF,
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, followed by L2 normalization.
//! The vocabulary keeps every n-gram seen during fitting, ordered
//! lexicographically by its space-joined key so that feature indices are
//! stable across runs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::DepDocument;
use crate::sparse::{SparseMatrix, SparseVector};

pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum FeaturizeError {
    #[error("invalid n-gram range ({min_n},{max_n}): need 1 <= min <= max <= {MAX_NGRAM}")]
    InvalidRange { min_n: usize, max_n: usize },
    #[error("cannot fit a feature space on an empty corpus")]
    EmptyCorpus,
    #[error("feature space is inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct NgramRange {
    min_n: usize,
    max_n: usize,
}

impl NgramRange {
    pub fn new(min_n: usize, max_n: usize) -> Result<Self, FeaturizeError> {
        if min_n == 0 || min_n > max_n || max_n > MAX_NGRAM {
            return Err(FeaturizeError::InvalidRange { min_n, max_n });
        }
        Ok(NgramRange { min_n, max_n })
    }

    pub fn min_n(&self) -> usize {
        self.min_n
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// The three ranges compared by the n-gram sweep.
    pub fn sweep() -> [NgramRange; 3] {
        [(1, 1), (1, 2), (1, 3)].map(|(a, b)| NgramRange { min_n: a, max_n: b })
    }
}

impl Default for NgramRange {
    fn default() -> Self {
        NgramRange { min_n: 1, max_n: 2 }
    }
}

impl fmt::Display for NgramRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.min_n, self.max_n)
    }
}

impl TryFrom<(usize, usize)> for NgramRange {
    type Error = FeaturizeError;

    fn try_from((a, b): (usize, usize)) -> Result<Self, Self::Error> {
        NgramRange::new(a, b)
    }
}

impl From<NgramRange> for (usize, usize) {
    fn from(r: NgramRange) -> Self {
        (r.min_n, r.max_n)
    }
}

/// How label sequences are windowed into n-grams.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramOptions {
    pub range: NgramRange,
    /// Treat the document as one label stream, letting windows span
    /// sentence breaks.
    #[serde(default)]
    pub cross_sentences: bool,
}

impl NgramOptions {
    pub fn new(range: NgramRange) -> Self {
        NgramOptions {
            range,
            cross_sentences: false,
        }
    }
}

/// N-gram counts of one document; windows stay inside a sentence.
pub fn count_ngrams(doc: &DepDocument, range: NgramRange) -> BTreeMap<String, usize> {
    count_ngrams_with(doc, &NgramOptions::new(range))
}

pub fn count_ngrams_with(doc: &DepDocument, options: &NgramOptions) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    let mut add = |labels: &[String]| {
        for n in options.range.min_n..=options.range.max_n {
            for window in labels.windows(n) {
                *counts.entry(window.join(" ")).or_insert(0) += 1;
            }
        }
    };
    if options.cross_sentences {
        let stream: Vec<String> = doc.sentences.iter().flatten().cloned().collect();
        add(&stream);
    } else {
        for sentence in &doc.sentences {
            add(sentence);
        }
    }
    counts
}

/// A fitted vocabulary with per-feature IDF weights. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureSpaceRepr", into = "FeatureSpaceRepr")]
pub struct FeatureSpace {
    options: NgramOptions,
    terms: Vec<String>,
    idf: Vec<f64>,
    num_train_docs: usize,
    lookup: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct FeatureSpaceRepr {
    ngram_range: NgramRange,
    cross_sentences: bool,
    num_train_docs: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl TryFrom<FeatureSpaceRepr> for FeatureSpace {
    type Error = FeaturizeError;

    fn try_from(r: FeatureSpaceRepr) -> Result<Self, Self::Error> {
        if r.terms.len() != r.idf.len() {
            return Err(FeaturizeError::Inconsistent(format!(
                "{} terms but {} idf weights",
                r.terms.len(),
                r.idf.len()
            )));
        }
        if r.terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FeaturizeError::Inconsistent("terms are not strictly sorted".into()));
        }
        if r.idf.iter().any(|w| !(*w > 0.0)) {
            return Err(FeaturizeError::Inconsistent("non-positive idf weight".into()));
        }
        Ok(FeatureSpace::assemble(
            NgramOptions {
                range: r.ngram_range,
                cross_sentences: r.cross_sentences,
            },
            r.terms,
            r.idf,
            r.num_train_docs,
        ))
    }
}

impl From<FeatureSpace> for FeatureSpaceRepr {
    fn from(s: FeatureSpace) -> Self {
        FeatureSpaceRepr {
            ngram_range: s.options.range,
            cross_sentences: s.options.cross_sentences,
            num_train_docs: s.num_train_docs,
            terms: s.terms,
            idf: s.idf,
        }
    }
}

impl FeatureSpace {
    fn assemble(options: NgramOptions, terms: Vec<String>, idf: Vec<f64>, num_train_docs: usize) -> Self {
        let lookup = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        FeatureSpace {
            options,
            terms,
            idf,
            num_train_docs,
            lookup,
        }
    }

    pub fn options(&self) -> &NgramOptions {
        &self.options
    }

    pub fn ngram_range(&self) -> NgramRange {
        self.options.range
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_train_docs(&self) -> usize {
        self.num_train_docs
    }

    /// N-gram keys in feature-index order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    /// L2-normalized TF-IDF row; out-of-vocabulary n-grams are ignored.
    pub fn transform(&self, doc: &DepDocument) -> SparseVector {
        let counts = count_ngrams_with(doc, &self.options);
        let mut entries: Vec<(usize, f64)> = counts
            .iter()
            .filter_map(|(term, &c)| self.index_of(term).map(|i| (i, c as f64 * self.idf[i])))
            .collect();
        entries.sort_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVector::from_entries(entries)
    }

    /// Rows in corpus order.
    pub fn transform_corpus(&self, docs: &[DepDocument]) -> SparseMatrix {
        let rows: Vec<SparseVector> = docs.par_iter().map(|d| self.transform(d)).collect();
        SparseMatrix::from_rows(&rows, self.len())
    }
}

pub fn fit(corpus: &[DepDocument], range: NgramRange) -> Result<FeatureSpace, FeaturizeError> {
    fit_with(corpus, &NgramOptions::new(range))
}

pub fn fit_with(corpus: &[DepDocument], options: &NgramOptions) -> Result<FeatureSpace, FeaturizeError> {
    if corpus.is_empty() {
        return Err(FeaturizeError::EmptyCorpus);
    }
    let per_doc: Vec<BTreeSet<String>> = corpus
        .par_iter()
        .map(|d| count_ngrams_with(d, options).into_keys().collect())
        .collect();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for terms in per_doc {
        for t in terms {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n = corpus.len() as f64;
    let (terms, idf): (Vec<String>, Vec<f64>) = df
        .into_iter()
        .map(|(t, d)| {
            let w = ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0;
            (t, w)
        })
        .unzip();
    Ok(FeatureSpace::assemble(*options, terms, idf, corpus.len()))
}

pub fn transform(doc: &DepDocument, space: &FeatureSpace) -> SparseVector {
    space.transform(doc)
}
