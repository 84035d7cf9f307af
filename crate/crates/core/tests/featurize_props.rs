use depai_core::conllu::DepDocument;
use depai_core::featurize::{self, NgramOptions, NgramRange};
use proptest::prelude::*;

const ALPHABET: [&str; 6] = ["nsubj", "root", "obj", "det", "amod", "punct"];

fn doc() -> impl Strategy<Value = DepDocument> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(&ALPHABET[..]), 0..10), 0..5).prop_map(|s| {
        DepDocument {
            sentences: s
                .into_iter()
                .map(|v| v.into_iter().map(String::from).collect())
                .collect(),
            ..DepDocument::default()
        }
    })
}

fn corpus() -> impl Strategy<Value = Vec<DepDocument>> {
    prop::collection::vec(doc(), 1..15)
}

fn range() -> impl Strategy<Value = NgramRange> {
    (1usize..=4)
        .prop_flat_map(|lo| (Just(lo), lo..=4))
        .prop_map(|(lo, hi)| NgramRange::new(lo, hi).unwrap())
}

proptest! {
    #[test]
    fn fit_ignores_document_order(docs in corpus(), r in range(), seed in any::<u64>()) {
        let mut shuffled = docs.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed as usize ^ i.wrapping_mul(2654435761)) % (i + 1));
        }
        prop_assert_eq!(featurize::fit(&docs, r).unwrap(), featurize::fit(&shuffled, r).unwrap());
    }

    #[test]
    fn rows_are_unit_or_zero(docs in corpus(), r in range(), query in doc()) {
        let space = featurize::fit(&docs, r).unwrap();
        for d in docs.iter().chain([&query]) {
            let v = space.transform(d);
            prop_assert!(v.is_zero() || (v.norm() - 1.0).abs() < 1e-12);
            prop_assert!(v.entries().iter().all(|&(i, w)| i < space.len() && w > 0.0));
        }
    }

    #[test]
    fn wider_ranges_only_add_terms(docs in corpus(), hi in 1usize..4) {
        let narrow = featurize::fit(&docs, NgramRange::new(1, hi).unwrap()).unwrap();
        let wide = featurize::fit(&docs, NgramRange::new(1, hi + 1).unwrap()).unwrap();
        prop_assert!(narrow.terms().iter().all(|t| wide.index_of(t).is_some()));
        prop_assert!(wide.len() >= narrow.len());
    }

    #[test]
    fn vocabulary_is_sorted_and_matches_arity(docs in corpus(), r in range()) {
        let space = featurize::fit(&docs, r).unwrap();
        prop_assert!(space.terms().windows(2).all(|w| w[0] < w[1]));
        for t in space.terms() {
            let n = t.split(' ').count();
            prop_assert!(n >= r.min_n() && n <= r.max_n());
        }
    }

    #[test]
    fn crossing_sentences_never_removes_terms(docs in corpus(), r in range()) {
        let within = featurize::fit(&docs, r).unwrap();
        let across = featurize::fit_with(&docs, &NgramOptions { range: r, cross_sentences: true }).unwrap();
        prop_assert!(within.terms().iter().all(|t| across.index_of(t).is_some()));
    }

    #[test]
    fn space_survives_serialization(docs in corpus(), r in range()) {
        let space = featurize::fit(&docs, r).unwrap();
        let back: featurize::FeatureSpace = serde_json::from_str(&serde_json::to_string(&space).unwrap()).unwrap();
        prop_assert_eq!(&back, &space);
        for d in &docs {
            prop_assert_eq!(back.transform(d), space.transform(d));
        }
    }
}
