//! Embedding extractor: candidate phrases and the document share one vector
//! space; candidates rank by cosine similarity to the document vector.

use crate::corpus::{candidate_phrases, TokenizedDoc};
use crate::error::{Error, Result};
use crate::vectors::{cosine, DocVector, WordVectorStore};

use super::{top_k, KeywordSet, Method, ScoreOrder};

const MAX_NGRAM: usize = 3;

/// Phrase vector = mean of member word vectors; candidates with any
/// out-of-vocabulary member are excluded. A zero document vector yields an
/// empty result (nothing to compare against).
pub fn extract_embed(
    tdoc: &TokenizedDoc,
    doc_vec: &DocVector,
    store: &WordVectorStore,
    k: usize,
) -> Result<KeywordSet> {
    if doc_vec.doc_id != tdoc.doc_id {
        return Err(Error::Validation(format!(
            "document vector is for '{}' but the tokenized document is '{}'",
            doc_vec.doc_id, tdoc.doc_id
        )));
    }
    let empty = KeywordSet {
        doc_id: tdoc.doc_id.clone(),
        method: Method::Embed,
        keywords: Vec::new(),
    };
    if doc_vec.vector.iter().all(|&v| v == 0.0) {
        return Ok(empty);
    }
    let dim = store.dim();
    let mut scored: Vec<(String, f64)> = Vec::new();
    'candidates: for candidate in candidate_phrases(tdoc, MAX_NGRAM)? {
        let mut phrase_vec = vec![0.0f64; dim];
        let words: Vec<&str> = candidate.text.split(' ').collect();
        for word in &words {
            match store.get(word) {
                Some(v) => {
                    for (slot, value) in phrase_vec.iter_mut().zip(v) {
                        *slot += value;
                    }
                }
                None => continue 'candidates,
            }
        }
        for slot in &mut phrase_vec {
            *slot /= words.len() as f64;
        }
        scored.push((candidate.text, cosine(&phrase_vec, &doc_vec.vector)?));
    }
    Ok(KeywordSet {
        keywords: top_k(scored, k, ScoreOrder::HigherBetter)?,
        ..empty
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Document, StopwordList};
    use crate::vectors::doc_vector;

    fn tokenized(text: &str) -> TokenizedDoc {
        let doc = Document {
            id: "d".into(),
            title: String::new(),
            abstract_text: text.into(),
            gold_keywords: None,
        };
        tokenize(&doc, &StopwordList::from_words(Vec::<String>::new()))
    }

    fn store(entries: &[(&str, Vec<f64>)]) -> WordVectorStore {
        let mut s = WordVectorStore::new(entries[0].1.len());
        for (w, v) in entries {
            s.insert(w, v.clone()).unwrap();
        }
        s
    }

    #[test]
    fn single_in_vocab_word_scores_cosine_one() {
        let tdoc = tokenized("telomere");
        let s = store(&[("telomere", vec![0.6, 0.8])]);
        let dv = doc_vector(&tdoc, &s);
        let set = extract_embed(&tdoc, &dv, &s, 20).unwrap();
        assert_eq!(set.keywords.len(), 1);
        assert_eq!(set.keywords[0].text, "telomere");
        assert!((set.keywords[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn candidates_with_oov_members_are_excluded() {
        let tdoc = tokenized("known unknown");
        let s = store(&[("known", vec![1.0, 0.0])]);
        let dv = doc_vector(&tdoc, &s);
        let set = extract_embed(&tdoc, &dv, &s, 20).unwrap();
        let texts: Vec<&str> = set.keywords.iter().map(|kw| kw.text.as_str()).collect();
        assert_eq!(texts, ["known"], "bigram and OOV unigram dropped: {texts:?}");
    }

    #[test]
    fn ranking_matches_hand_computed_cosines() {
        // doc = "apple banana cherry" → doc vector d = (1/6, 1/2, 1/3),
        // |d| = √14/6. Hand cosines: cherry = (2/3)/(√1.5·√14/6) ≈ 0.8729,
        // banana = (1/3)/(√2·√14/6) ≈ 0.3780, apple = (1/6)/(√14/6) ≈ 0.2673.
        let s = store(&[
            ("apple", vec![1.0, 0.0, 0.0]),
            ("banana", vec![-1.0, 1.0, 0.0]),
            ("cherry", vec![0.5, 0.5, 1.0]),
        ]);
        let tdoc = tokenized("apple banana cherry");
        let dv = doc_vector(&tdoc, &s);
        for (i, want) in [1.0 / 6.0, 0.5, 1.0 / 3.0].iter().enumerate() {
            assert!((dv.vector[i] - want).abs() < 1e-12);
        }
        let expected = |v: &[f64]| cosine(v, &dv.vector).unwrap();
        let c_apple = expected(&[1.0, 0.0, 0.0]);
        let c_banana = expected(&[-1.0, 1.0, 0.0]);
        let c_cherry = expected(&[0.5, 0.5, 1.0]);
        assert!((c_cherry - 0.8728715609439696).abs() < 1e-12);
        assert!((c_banana - 0.3779644730092272).abs() < 1e-12);
        assert!((c_apple - 0.2672612419124244).abs() < 1e-12);
        assert!(c_cherry > c_banana && c_banana > c_apple);
        let set = extract_embed(&tdoc, &dv, &s, 3).unwrap();
        // Trigram/bigram candidates also compete; restrict to unigrams.
        let full = extract_embed(&tdoc, &dv, &s, 20).unwrap();
        let unigrams: Vec<(&str, f64)> = full
            .keywords
            .iter()
            .filter(|kw| !kw.text.contains(' '))
            .map(|kw| (kw.text.as_str(), kw.score))
            .collect();
        assert_eq!(
            unigrams.iter().map(|(t, _)| *t).collect::<Vec<_>>(),
            ["cherry", "banana", "apple"]
        );
        for (text, score) in unigrams {
            let want = match text {
                "apple" => c_apple,
                "banana" => c_banana,
                _ => c_cherry,
            };
            assert!((score - want).abs() < 1e-12);
        }
        assert_eq!(set.keywords.len(), 3, "k truncates mixed candidates");
    }

    #[test]
    fn zero_document_vector_yields_empty_set() {
        let tdoc = tokenized("ghost words");
        let s = store(&[("other", vec![1.0, 0.0])]);
        let dv = doc_vector(&tdoc, &s);
        assert_eq!(dv.oov_fraction, 1.0);
        let set = extract_embed(&tdoc, &dv, &s, 20).unwrap();
        assert!(set.keywords.is_empty());
    }

    #[test]
    fn mismatched_document_vector_is_rejected() {
        let tdoc = tokenized("word");
        let s = store(&[("word", vec![1.0])]);
        let mut dv = doc_vector(&tdoc, &s);
        dv.doc_id = "other".into();
        assert!(extract_embed(&tdoc, &dv, &s, 20).is_err());
    }
}
