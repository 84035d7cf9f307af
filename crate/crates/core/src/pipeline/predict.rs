//! Inference on raw CoNLL-U.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::bundle::ModelBundle;
use super::PipelineError;
use crate::conllu::{self, DepDocument};
use crate::gbdt::argmax;

#[derive(Debug, Clone, PartialEq)]
pub struct DocPrediction {
    pub doc_id: String,
    pub class: String,
    /// In the model's class order.
    pub probabilities: Vec<f64>,
}

impl DocPrediction {
    /// `doc_id<TAB>class<TAB>name=prob<TAB>...`
    pub fn to_line(&self, class_names: &[String]) -> String {
        let mut line = format!("{}\t{}", self.doc_id, self.class);
        for (name, p) in class_names.iter().zip(&self.probabilities) {
            let _ = write!(line, "\t{name}={p}");
        }
        line
    }
}

/// Splits `input` at `# newdoc` markers and classifies every document, in
/// input order. Documents without a `newdoc id` are named after `source`
/// (`source`, or `source#n` when the stream holds several documents).
pub fn predict_conllu(bundle: &ModelBundle, input: &[u8], source: &str) -> Result<Vec<DocPrediction>, PipelineError> {
    let sentences = conllu::parse_conllu_bytes(input).map_err(|e| PipelineError::Conllu {
        doc_id: source.to_string(),
        source: e,
    })?;
    let parts = conllu::split_documents(sentences);
    let many = parts.len() > 1;
    let docs: Vec<DepDocument> = parts
        .iter()
        .enumerate()
        .map(|(i, (id, sents))| {
            let id = match id {
                Some(id) => id.clone(),
                None if many => format!("{source}#{}", i + 1),
                None => source.to_string(),
            };
            conllu::extract_dep_document(sents, &id, "", "", "")
        })
        .collect();
    predict_documents(bundle, &docs)
}

pub fn predict_documents(bundle: &ModelBundle, docs: &[DepDocument]) -> Result<Vec<DocPrediction>, PipelineError> {
    docs.par_iter()
        .map(|d| {
            let probabilities = bundle.model.predict_scores(&bundle.space.transform(d))?;
            let class = bundle.model.class_names()[argmax(&probabilities)].clone();
            Ok(DocPrediction {
                doc_id: d.doc_id.clone(),
                class,
                probabilities,
            })
        })
        .collect()
}
