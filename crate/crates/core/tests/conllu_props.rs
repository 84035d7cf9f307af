use depai_core::conllu::{
    extract_dep_document, parse_conllu_str, split_documents, write_conllu, ConlluSentence, ConlluToken,
};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("nsubj".to_string()),
        Just("root".to_string()),
        Just("det:poss".to_string()),
        Just("ROOT".to_string()),
        Just("obl:tmod".to_string()),
        Just("_".to_string()),
        "[a-z]{1,6}",
    ]
}

fn sentence() -> impl Strategy<Value = ConlluSentence> {
    (
        prop::collection::vec(label(), 1..12),
        prop::collection::vec("# [a-z =]{0,12}", 0..3),
    )
        .prop_map(|(labels, metadata)| ConlluSentence {
            tokens: labels
                .into_iter()
                .enumerate()
                .map(|(i, deprel)| ConlluToken {
                    id: i as u32 + 1,
                    deprel,
                })
                .collect(),
            metadata,
        })
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(sentences in prop::collection::vec(sentence(), 0..8)) {
        let text = write_conllu(&sentences);
        prop_assert_eq!(parse_conllu_str(&text).unwrap(), sentences);
    }

    #[test]
    fn extraction_keeps_every_annotated_token(sentences in prop::collection::vec(sentence(), 0..8)) {
        let doc = extract_dep_document(&sentences, "d", "c", "x", "en");
        prop_assert_eq!(doc.sentences.len(), sentences.len());
        for (labels, s) in doc.sentences.iter().zip(&sentences) {
            let annotated: Vec<String> = s.deprels().filter(|d| *d != "_").map(str::to_lowercase).collect();
            prop_assert_eq!(labels, &annotated);
        }
    }

    #[test]
    fn multiword_and_empty_nodes_do_not_change_labels(labels in prop::collection::vec("[a-z]{1,5}", 1..8)) {
        let mut plain = String::new();
        let mut decorated = String::from("1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_\n");
        for (i, l) in labels.iter().enumerate() {
            let line = format!("{}\tw\tw\tX\t_\t_\t0\t{l}\t_\t_\n", i + 1);
            plain.push_str(&line);
            decorated.push_str(&line);
            decorated.push_str(&format!("{}.1\tz\t_\t_\t_\t_\t_\t_\t_\t_\n", i + 1));
        }
        prop_assert_eq!(parse_conllu_str(&plain).unwrap(), parse_conllu_str(&decorated).unwrap());
    }

    #[test]
    fn newdoc_split_preserves_sentences(groups in prop::collection::vec(prop::collection::vec(sentence(), 1..4), 1..5)) {
        let mut stream = Vec::new();
        for (g, group) in groups.iter().enumerate() {
            for (i, s) in group.iter().enumerate() {
                let mut s = s.clone();
                s.metadata.retain(|m| !m.contains("newdoc"));
                if i == 0 {
                    s.metadata.insert(0, format!("# newdoc id = doc{g}"));
                }
                stream.push(s);
            }
        }
        let parsed = parse_conllu_str(&write_conllu(&stream)).unwrap();
        let docs = split_documents(parsed);
        prop_assert_eq!(docs.len(), groups.len());
        for (g, (id, sents)) in docs.iter().enumerate() {
            prop_assert_eq!(id.clone(), Some(format!("doc{g}")));
            prop_assert_eq!(sents.len(), groups[g].len());
        }
    }
}

#[test]
fn errors_carry_line_numbers() {
    let text = "# c\n1\tw\tw\tX\t_\t_\t0\troot\t_\t_\n2\tonly three\tcols\n";
    let err = parse_conllu_str(text).unwrap_err();
    assert_eq!(err.line(), Some(3));
}
