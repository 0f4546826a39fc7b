//! TF-IDF extractor: term frequency in the document weighted by the inverse
//! frequency across the corpus, over stopword-free unigrams and bigrams.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{candidate_phrases, TokenizedDoc};
use crate::error::{Error, Result};

use super::{top_k, KeywordSet, Method, ScoreOrder};

/// Maximum n-gram length of the TF-IDF candidate space.
const MAX_NGRAM: usize = 2;

/// Document frequencies over the shared candidate space (unigrams + bigrams,
/// stopword-free): phrase → number of documents containing it.
pub fn build_df(docs: &[TokenizedDoc]) -> Result<BTreeMap<String, usize>> {
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for tdoc in docs {
        let texts: BTreeSet<String> = candidate_phrases(tdoc, MAX_NGRAM)?
            .into_iter()
            .map(|c| c.text)
            .collect();
        for text in texts {
            *df.entry(text).or_insert(0) += 1;
        }
    }
    Ok(df)
}

/// score(t) = tf(t, doc) · ln(N / df(t)); higher is better; ties break
/// lexicographically. `df` must cover this document's candidate space.
pub fn extract_tfidf(
    tdoc: &TokenizedDoc,
    df: &BTreeMap<String, usize>,
    n_docs: usize,
    k: usize,
) -> Result<KeywordSet> {
    if n_docs == 0 {
        return Err(Error::Validation("corpus size N must be ≥ 1".into()));
    }
    let mut scored = Vec::new();
    for candidate in candidate_phrases(tdoc, MAX_NGRAM)? {
        let df_t = *df.get(&candidate.text).ok_or_else(|| {
            Error::Validation(format!(
                "document frequency table is missing '{}' (built over a different corpus?)",
                candidate.text
            ))
        })?;
        let idf = (n_docs as f64 / df_t as f64).ln();
        scored.push((candidate.text, candidate.doc_frequency as f64 * idf));
    }
    Ok(KeywordSet {
        doc_id: tdoc.doc_id.clone(),
        method: Method::Tfidf,
        keywords: top_k(scored, k, ScoreOrder::HigherBetter)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Document, StopwordList};

    fn tokenized(id: &str, text: &str) -> TokenizedDoc {
        let doc = Document {
            id: id.into(),
            title: String::new(),
            abstract_text: text.into(),
            gold_keywords: None,
        };
        tokenize(&doc, &StopwordList::from_words(Vec::<String>::new()))
    }

    fn score_of(set: &KeywordSet, text: &str) -> f64 {
        set.keywords
            .iter()
            .find(|kw| kw.text == text)
            .unwrap_or_else(|| panic!("'{text}' missing"))
            .score
    }

    #[test]
    fn matches_hand_computed_two_document_example() {
        // docs {"a a b", "b c"}: df(a)=1, df(b)=2 → in doc1,
        // score(a) = 2·ln 2, score(b) = 0, bigrams score ln 2.
        let docs = vec![tokenized("d1", "a a b"), tokenized("d2", "b c")];
        let df = build_df(&docs).unwrap();
        assert_eq!(df["a"], 1);
        assert_eq!(df["b"], 2);
        let set = extract_tfidf(&docs[0], &df, 2, 20).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((score_of(&set, "a") - 2.0 * ln2).abs() < 1e-12);
        assert!((score_of(&set, "a") - 1.3862943611198906).abs() < 1e-12);
        assert_eq!(score_of(&set, "b"), 0.0);
        assert!((score_of(&set, "a a") - ln2).abs() < 1e-12);
        assert!((score_of(&set, "a b") - ln2).abs() < 1e-12);
        // Equal bigram scores tie lexicographically: "a a" before "a b".
        let rank = |t: &str| set.keywords.iter().find(|kw| kw.text == t).unwrap().rank;
        assert!(rank("a a") < rank("a b"));
        assert_eq!(rank("a"), 1, "2·ln2 beats everything");
    }

    #[test]
    fn term_in_every_document_scores_zero() {
        let docs = vec![
            tokenized("d1", "shared shared shared unique1"),
            tokenized("d2", "shared unique2"),
            tokenized("d3", "shared unique3"),
        ];
        let df = build_df(&docs).unwrap();
        let set = extract_tfidf(&docs[0], &df, 3, 20).unwrap();
        assert_eq!(score_of(&set, "shared"), 0.0, "tf=3 but df=N");
        assert!(score_of(&set, "unique1") > 0.0);
    }

    #[test]
    fn k_larger_than_candidates_returns_all() {
        let docs = vec![tokenized("d1", "x y")];
        let df = build_df(&docs).unwrap();
        let set = extract_tfidf(&docs[0], &df, 1, 20).unwrap();
        // Candidates: x, y, "x y" — all with idf ln(1/1) = 0.
        assert_eq!(set.keywords.len(), 3);
        assert!(set.keywords.iter().all(|kw| kw.score == 0.0));
    }

    #[test]
    fn rejects_empty_corpus_and_foreign_df() {
        let docs = vec![tokenized("d1", "a b")];
        let df = build_df(&docs).unwrap();
        assert!(extract_tfidf(&docs[0], &df, 0, 20).is_err());
        let other = tokenized("d2", "unseen words");
        let err = extract_tfidf(&other, &df, 1, 20).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ranking_is_invariant_to_uniform_scaling_of_counts() {
        // Multiplying every df and N by the same positive integer preserves
        // the argsort of scores: idf shifts are monotone-identical.
        let docs = vec![
            tokenized("d1", "alpha alpha beta gamma gamma gamma"),
            tokenized("d2", "beta delta"),
            tokenized("d3", "gamma delta epsilon"),
        ];
        let df = build_df(&docs).unwrap();
        let base = extract_tfidf(&docs[0], &df, 3, 20).unwrap();
        let scaled_df: BTreeMap<String, usize> =
            df.iter().map(|(t, c)| (t.clone(), c * 7)).collect();
        let scaled = extract_tfidf(&docs[0], &scaled_df, 21, 20).unwrap();
        let order_base: Vec<&str> = base.keywords.iter().map(|kw| kw.text.as_str()).collect();
        let order_scaled: Vec<&str> = scaled.keywords.iter().map(|kw| kw.text.as_str()).collect();
        assert_eq!(order_base, order_scaled);
    }
}
