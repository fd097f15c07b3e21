//! Vocabulary construction and TF-IDF word-1-gram vectorization.
//!
//! The weighting is frozen: `weight(t, d) = tf(t, d) * idf(t)` with raw
//! term counts and `idf(t) = ln((1 + n_docs) / (1 + doc_freq(t))) + 1`,
//! followed by L2 row normalization. The smoothed form keeps idf positive
//! for terms present in every document, which matters here because words
//! like "this" and "not" are exactly the signal being classified.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::lexic;

/// Frozen term → column mapping plus document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// Column indices 0..V-1, assigned in lexicographic term order.
    pub term_index: BTreeMap<String, usize>,
    pub doc_freq: BTreeMap<String, usize>,
    pub n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.term_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_index.is_empty()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        let df = *self.doc_freq.get(term)?;
        Some((((1 + self.n_docs) as f64) / ((1 + df) as f64)).ln() + 1.0)
    }
}

/// Sparse row-major matrix of TF-IDF weights. Row ids align with the
/// corpus items (synthetic rows appended later get generated ids). Rows
/// produced by [`vectorize`] have unit L2 norm; rows appended by
/// oversampling are interpolations and are deliberately not re-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    /// Per row: (column, weight) pairs sorted by column, weights > 0.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub n_cols: usize,
    pub ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_dense(&self, row: usize) -> Vec<f64> {
        let mut dense = vec![0.0; self.n_cols];
        for &(col, w) in &self.rows[row] {
            dense[col] = w;
        }
        dense
    }

    pub fn from_dense_rows(ids: Vec<String>, dense: Vec<Vec<f64>>, n_cols: usize) -> Self {
        let rows = dense
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .enumerate()
                    .filter(|&(_, w)| w != 0.0)
                    .collect()
            })
            .collect();
        FeatureMatrix { rows, n_cols, ids }
    }

    /// Sparse triplet export: header `rows cols nnz`, then one
    /// `row col weight` line per entry, weights with 12 significant digits.
    pub fn to_triplet_string(&self) -> String {
        let nnz: usize = self.rows.iter().map(Vec::len).sum();
        let mut out = format!("{} {} {}\n", self.n_rows(), self.n_cols, nnz);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, w) in row {
                out.push_str(&format!("{r} {c} {w:.11e}\n"));
            }
        }
        out
    }
}

/// Lowercased word tokens of a text, punctuation excluded. This is the
/// term extraction used for both document frequencies and term counts.
pub fn document_terms(text: &str) -> Vec<String> {
    lexic::tokenize(text)
        .into_iter()
        .filter(|t| t.is_word)
        .map(|t| t.lower)
        .collect()
}

/// Build the vocabulary over a corpus, keeping terms with
/// `min_df <= doc_freq <= max_df_ratio * n_docs`.
pub fn build_vocabulary(corpus: &Corpus, min_df: usize, max_df_ratio: f64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "max_df_ratio must be in (0, 1], got {max_df_ratio}"
        )));
    }
    let n_docs = corpus.len();
    let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
    for item in corpus.items() {
        let mut seen: Vec<String> = document_terms(&item.requirement().text);
        seen.sort_unstable();
        seen.dedup();
        for term in seen {
            *doc_freq.entry(term).or_insert(0) += 1;
        }
    }
    let max_df = max_df_ratio * n_docs as f64;
    let kept: BTreeMap<String, usize> = doc_freq
        .into_iter()
        .filter(|&(_, df)| df >= min_df && df as f64 <= max_df)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let term_index = kept
        .keys()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary {
        term_index,
        doc_freq: kept,
        n_docs,
    })
}

/// Vectorize a corpus against a frozen vocabulary. Out-of-vocabulary
/// tokens are ignored; documents left with no in-vocabulary tokens become
/// all-zero rows.
pub fn vectorize(corpus: &Corpus, vocab: &Vocabulary) -> FeatureMatrix {
    let rows = corpus
        .items()
        .iter()
        .map(|item| vectorize_text(&item.requirement().text, vocab))
        .collect();
    FeatureMatrix {
        rows,
        n_cols: vocab.len(),
        ids: corpus.ids().iter().map(|s| s.to_string()).collect(),
    }
}

/// Vectorize one text against a frozen vocabulary.
pub fn vectorize_text(text: &str, vocab: &Vocabulary) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let terms = document_terms(text);
    for term in &terms {
        if vocab.term_index.contains_key(term.as_str()) {
            *counts.entry(term.as_str()).or_insert(0) += 1;
        }
    }
    let mut row: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(term, tf)| {
            let col = vocab.term_index[term];
            (col, tf as f64 * vocab.idf(term).expect("term in vocab"))
        })
        .collect();
    row.sort_unstable_by_key(|&(col, _)| col);
    let norm = row.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for entry in &mut row {
            entry.1 /= norm;
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusItem, Provenance, Requirement};

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, text)| {
                    CorpusItem::Unlabeled(
                        Requirement::new(format!("D{i}"), "", *text, Provenance::Other).unwrap(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn vocabulary_counts_and_indices() {
        let vocab = build_vocabulary(&corpus(&["a b", "b c"]), 1, 1.0).unwrap();
        assert_eq!(vocab.n_docs, 2);
        assert_eq!(vocab.term_index.get("a"), Some(&0));
        assert_eq!(vocab.term_index.get("b"), Some(&1));
        assert_eq!(vocab.term_index.get("c"), Some(&2));
        assert_eq!(vocab.doc_freq.get("a"), Some(&1));
        assert_eq!(vocab.doc_freq.get("b"), Some(&2));
        assert_eq!(vocab.doc_freq.get("c"), Some(&1));
    }

    #[test]
    fn min_df_filters_rare_terms() {
        let vocab = build_vocabulary(&corpus(&["a b", "b c"]), 2, 1.0).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.term_index.get("b"), Some(&0));
    }

    #[test]
    fn max_df_ratio_filters_common_terms() {
        let vocab = build_vocabulary(&corpus(&["a b", "b c"]), 1, 0.5).unwrap();
        assert_eq!(vocab.len(), 2);
        assert!(vocab.term_index.contains_key("a"));
        assert!(vocab.term_index.contains_key("c"));
        assert!(!vocab.term_index.contains_key("b"));
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let empty = Corpus::new(vec![]).unwrap();
        assert!(matches!(
            build_vocabulary(&empty, 1, 1.0),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn over_filtered_vocabulary_is_rejected() {
        assert!(matches!(
            build_vocabulary(&corpus(&["a b", "b c"]), 3, 1.0),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn punctuation_is_not_a_term() {
        let vocab = build_vocabulary(&corpus(&["stop. now.", "stop!"]), 1, 1.0).unwrap();
        assert!(vocab.term_index.contains_key("stop"));
        assert!(vocab.term_index.contains_key("now"));
        assert_eq!(vocab.len(), 2);
    }

    #[test]
    fn frozen_example_weights() {
        // docs ["a b", "b c"]: idf_a = ln(3/2) + 1, idf_b = 1, normalized.
        let c = corpus(&["a b", "b c"]);
        let vocab = build_vocabulary(&c, 1, 1.0).unwrap();
        let matrix = vectorize(&c, &vocab);
        let row = matrix.row_dense(0);
        assert!((row[0] - 0.8148024746671690).abs() < 1e-12, "a: {}", row[0]);
        assert!((row[1] - 0.5797386715376657).abs() < 1e-12, "b: {}", row[1]);
        assert_eq!(row[2], 0.0);
        let row = matrix.row_dense(1);
        assert!((row[1] - 0.5797386715376657).abs() < 1e-12);
        assert!((row[2] - 0.8148024746671690).abs() < 1e-12);
    }

    #[test]
    fn oov_document_becomes_zero_row() {
        let c = corpus(&["a b", "b c"]);
        let vocab = build_vocabulary(&c, 1, 1.0).unwrap();
        let oov = corpus(&["z z z"]);
        let matrix = vectorize(&oov, &vocab);
        assert!(matrix.rows[0].is_empty());
    }

    #[test]
    fn identical_documents_get_identical_rows() {
        let c = corpus(&["x y z", "x y z"]);
        let vocab = build_vocabulary(&c, 1, 1.0).unwrap();
        let matrix = vectorize(&c, &vocab);
        assert_eq!(matrix.rows[0], matrix.rows[1]);
    }

    #[test]
    fn rows_are_unit_norm() {
        let c = corpus(&["alpha beta beta gamma", "beta delta", "alpha alpha"]);
        let vocab = build_vocabulary(&c, 1, 1.0).unwrap();
        let matrix = vectorize(&c, &vocab);
        for row in &matrix.rows {
            let norm: f64 = row.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_tokens_leaves_normalized_rows_unchanged() {
        let single = corpus(&["a b b", "c a"]);
        let doubled = corpus(&["a b b a b b", "c a c a"]);
        let vocab = build_vocabulary(&single, 1, 1.0).unwrap();
        let m1 = vectorize(&single, &vocab);
        let m2 = vectorize(&doubled, &vocab);
        for (r1, r2) in m1.rows.iter().zip(&m2.rows) {
            assert_eq!(r1.len(), r2.len());
            for (&(c1, w1), &(c2, w2)) in r1.iter().zip(r2) {
                assert_eq!(c1, c2);
                assert!((w1 - w2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vocabulary_is_order_independent() {
        let forward = corpus(&["m n", "n o", "p q"]);
        let backward = corpus(&["p q", "n o", "m n"]);
        let v1 = build_vocabulary(&forward, 1, 1.0).unwrap();
        let v2 = build_vocabulary(&backward, 1, 1.0).unwrap();
        assert_eq!(v1.term_index, v2.term_index);
        assert_eq!(v1.doc_freq, v2.doc_freq);
    }

    #[test]
    fn triplet_export_format() {
        let c = corpus(&["a b", "b c"]);
        let vocab = build_vocabulary(&c, 1, 1.0).unwrap();
        let matrix = vectorize(&c, &vocab);
        let text = matrix.to_triplet_string();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("2 3 4"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("0 0 8.1480247466"), "{first}");
    }
}
