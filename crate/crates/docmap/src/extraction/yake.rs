//! YAKE!: single-document statistical keyword scoring. Per-term features —
//! casing, position, frequency normalization, context relatedness, sentence
//! dispersion — combine into a term score (lower = better); candidate
//! phrases are scored from their terms and near-duplicates are removed.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{candidate_phrases, TokenizedDoc};
use crate::error::Result;

use super::{top_k, KeywordSet, Method, ScoreOrder};

/// Near-duplicate threshold on normalized Levenshtein similarity.
const DEDUP_SIMILARITY: f64 = 0.9;
const MAX_NGRAM: usize = 3;

#[derive(Debug, Default, Clone)]
struct TermStats {
    tf: usize,
    /// Occurrences fully uppercase (length > 1): acronyms.
    tf_acronym: usize,
    /// Occurrences starting uppercase, excluding sentence-initial ones.
    tf_capitalized: usize,
    sentence_ids: BTreeSet<usize>,
    left: Vec<String>,
    right: Vec<String>,
}

fn median_of_sorted(values: &[usize]) -> f64 {
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2] as f64
    } else {
        (values[m / 2 - 1] + values[m / 2]) as f64 / 2.0
    }
}

fn is_acronym(surface: &str) -> bool {
    surface.chars().count() > 1 && surface.chars().all(|c| c.is_uppercase())
}

fn starts_uppercase(surface: &str) -> bool {
    surface.chars().next().is_some_and(char::is_uppercase)
}

/// Per-term YAKE scores S(t) for every non-stopword term (lower = better).
fn term_scores(tdoc: &TokenizedDoc) -> BTreeMap<String, f64> {
    let n_sentences = tdoc.sentences.len().max(1);
    let mut stats: BTreeMap<String, TermStats> = BTreeMap::new();
    let mut stop_terms: BTreeSet<String> = BTreeSet::new();
    for sentence in &tdoc.sentences {
        for (w_idx, token) in sentence.iter().enumerate() {
            let entry = stats.entry(token.normalized.clone()).or_default();
            entry.tf += 1;
            entry.sentence_ids.insert(token.sentence_index);
            if is_acronym(&token.surface) {
                entry.tf_acronym += 1;
            }
            if starts_uppercase(&token.surface) && w_idx > 0 {
                entry.tf_capitalized += 1;
            }
            if token.is_stopword {
                stop_terms.insert(token.normalized.clone());
            }
            // Window-1 context: the immediately preceding token in the same
            // sentence, unless punctuation breaks the window. Stopwords
            // participate as neighbors.
            if w_idx > 0 && !token.break_before {
                let prev = &sentence[w_idx - 1].normalized;
                stats
                    .get_mut(prev)
                    .expect("previous token already recorded")
                    .right
                    .push(token.normalized.clone());
                stats
                    .get_mut(&token.normalized)
                    .expect("just inserted")
                    .left
                    .push(prev.clone());
            }
        }
    }
    let content_tfs: Vec<f64> = stats
        .iter()
        .filter(|(term, _)| !stop_terms.contains(*term))
        .map(|(_, s)| s.tf as f64)
        .collect();
    if content_tfs.is_empty() {
        return BTreeMap::new();
    }
    let mean_tf = content_tfs.iter().sum::<f64>() / content_tfs.len() as f64;
    let std_tf = (content_tfs
        .iter()
        .map(|tf| (tf - mean_tf).powi(2))
        .sum::<f64>()
        / content_tfs.len() as f64)
        .sqrt();
    let max_tf = stats.values().map(|s| s.tf).max().unwrap_or(1) as f64;

    let mut scores = BTreeMap::new();
    for (term, s) in &stats {
        if stop_terms.contains(term) {
            continue;
        }
        let tf = s.tf as f64;
        let casing = (s.tf_acronym.max(s.tf_capitalized)) as f64 / (1.0 + tf.ln());
        let ids: Vec<usize> = s.sentence_ids.iter().copied().collect();
        let position = (3.0 + median_of_sorted(&ids)).ln().ln();
        let frequency = tf / (mean_tf + std_tf);
        let distinct_ratio = |neighbors: &[String]| -> f64 {
            if neighbors.is_empty() {
                0.0
            } else {
                neighbors.iter().collect::<BTreeSet<_>>().len() as f64 / neighbors.len() as f64
            }
        };
        let relatedness =
            1.0 + (distinct_ratio(&s.left) + distinct_ratio(&s.right)) * (tf / max_tf);
        let dispersion = s.sentence_ids.len() as f64 / n_sentences as f64;
        let score =
            relatedness * position / (casing + frequency / relatedness + dispersion / relatedness);
        scores.insert(term.clone(), score);
    }
    scores
}

/// Levenshtein distance on characters.
fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut previous: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut current = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let substitution = previous[j] + usize::from(ca != cb);
            current.push(substitution.min(previous[j + 1] + 1).min(current[j] + 1));
        }
        previous = current;
    }
    previous[b.len()]
}

fn similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Extract keywords by YAKE!: candidates are stopword-free n-grams (n ≤ 3);
/// S(p) = Π S(t) / (tf(p) · (1 + Σ S(t))), ascending (lower is better);
/// near-duplicates (normalized Levenshtein ≥ 0.9) keep the better-scored.
pub fn extract_yake(tdoc: &TokenizedDoc, k: usize) -> Result<KeywordSet> {
    let scores = term_scores(tdoc);
    let mut scored: Vec<(String, f64)> = Vec::new();
    for candidate in candidate_phrases(tdoc, MAX_NGRAM)? {
        let words: Vec<&str> = candidate.text.split(' ').collect();
        let mut product = 1.0;
        let mut sum = 0.0;
        for w in &words {
            let s = scores[*w];
            product *= s;
            sum += s;
        }
        let score = product / (candidate.doc_frequency as f64 * (1.0 + sum));
        scored.push((candidate.text, score));
    }
    // Rank best-first before deduplication so "keep the better-scored" is a
    // keep-first scan.
    let n_candidates = scored.len().max(1);
    let ranked = top_k(scored, n_candidates, ScoreOrder::LowerBetter)?;
    let mut kept: Vec<(String, f64)> = Vec::new();
    for kw in ranked {
        let duplicate = kept
            .iter()
            .any(|(text, _)| similarity(text, &kw.text) >= DEDUP_SIMILARITY);
        if !duplicate {
            kept.push((kw.text, kw.score));
        }
    }
    Ok(KeywordSet {
        doc_id: tdoc.doc_id.clone(),
        method: Method::Yake,
        keywords: top_k(kept, k, ScoreOrder::LowerBetter)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Document, StopwordList};

    fn tokenized(text: &str, stopwords: &[&str]) -> TokenizedDoc {
        let doc = Document {
            id: "d".into(),
            title: String::new(),
            abstract_text: text.into(),
            gold_keywords: None,
        };
        tokenize(&doc, &StopwordList::from_words(stopwords.iter().copied()))
    }

    const ORACLE_TEXT: &str = "Telomeres are important. Telomeres in cells decay slowly.";

    /// Frozen hand-computed feature table for the two-sentence oracle text
    /// (stopwords {are, in}): every term score to 6 decimals.
    #[test]
    fn term_scores_match_hand_computed_feature_table() {
        let tdoc = tokenized(ORACLE_TEXT, &["are", "in"]);
        let scores = term_scores(&tdoc);
        let expect = [
            ("telomeres", 0.400625),
            ("important", 0.188096),
            ("cells", 1.161366),
            ("decay", 1.161366),
            ("slowly", 0.653269),
        ];
        assert_eq!(scores.len(), expect.len(), "stopwords excluded: {scores:?}");
        for (term, want) in expect {
            let got = scores[term];
            assert!((got - want).abs() < 5e-7, "{term}: got {got}, want {want}");
        }
    }

    #[test]
    fn phrase_ranking_matches_hand_computed_oracle() {
        let tdoc = tokenized(ORACLE_TEXT, &["are", "in"]);
        let set = extract_yake(&tdoc, 20).unwrap();
        let got: Vec<(&str, f64)> = set
            .keywords
            .iter()
            .map(|kw| (kw.text.as_str(), kw.score))
            .collect();
        let expect = [
            ("telomeres", 0.143016),
            ("important", 0.158317),
            ("cells decay slowly", 0.221607),
            ("decay slowly", 0.269550),
            ("slowly", 0.395138),
            ("cells decay", 0.405922),
            ("cells", 0.537330), // ties with "decay"; lexicographic order
            ("decay", 0.537330),
        ];
        assert_eq!(got.len(), expect.len(), "{got:?}");
        for ((gt, gs), (et, es)) in got.iter().zip(expect) {
            assert_eq!(*gt, et);
            assert!((gs - es).abs() < 5e-7, "{et}: got {gs}, want {es}");
        }
        // Ascending scores: lower strictly improves rank.
        for pair in set.keywords.windows(2) {
            assert!(pair[0].score <= pair[1].score);
        }
    }

    #[test]
    fn single_word_document_ranks_that_word_first() {
        let tdoc = tokenized("telomere", &[]);
        let set = extract_yake(&tdoc, 20).unwrap();
        assert_eq!(set.keywords.len(), 1);
        assert_eq!(set.keywords[0].text, "telomere");
        assert_eq!(set.keywords[0].rank, 1);
    }

    #[test]
    fn all_stopword_document_yields_empty_set() {
        let tdoc = tokenized("the of and", &["the", "of", "and"]);
        let set = extract_yake(&tdoc, 20).unwrap();
        assert!(set.keywords.is_empty());
    }

    #[test]
    fn casing_feature_favors_acronyms_and_capitalized_terms() {
        // "DNA" is an acronym everywhere; "dna" control text has no casing
        // signal. A stronger casing numerator must not worsen the score.
        let upper = tokenized("Cells contain DNA. Repair of DNA is slow.", &["of", "is"]);
        let lower = tokenized("Cells contain dna. Repair of dna is slow.", &["of", "is"]);
        let s_upper = term_scores(&upper)["dna"];
        let s_lower = term_scores(&lower)["dna"];
        assert!(
            s_upper < s_lower,
            "acronym should score better (lower): {s_upper} vs {s_lower}"
        );
    }

    #[test]
    fn sentence_initial_capitals_do_not_count() {
        // "Telomeres" appears only sentence-initially: casing must be 0, so
        // scores match an all-lowercase rendering of the same text.
        let cased = tokenized(ORACLE_TEXT, &["are", "in"]);
        let folded = tokenized(&ORACLE_TEXT.to_lowercase(), &["are", "in"]);
        let a = term_scores(&cased);
        let b = term_scores(&folded);
        assert_eq!(a.len(), b.len());
        for (term, score) in &a {
            assert!((score - b[term]).abs() < 1e-12, "{term}");
        }
    }

    #[test]
    fn levenshtein_and_similarity_basics() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("same", "same"), 0);
        assert!((similarity("telomere", "telomeres") - (1.0 - 1.0 / 9.0)).abs() < 1e-12);
    }

    #[test]
    fn near_duplicates_keep_only_the_better_scored() {
        // "telomere length" vs "telomere lengths" differ by one char out of
        // 16 → similarity 0.9375 ≥ 0.9: one of them must be dropped.
        let text = "Telomere length shrinks. Telomere lengths vary. Telomere length matters.";
        let tdoc = tokenized(&text.to_lowercase(), &[]);
        let set = extract_yake(&tdoc, 20).unwrap();
        let texts: Vec<&str> = set.keywords.iter().map(|kw| kw.text.as_str()).collect();
        let has_singular = texts.contains(&"telomere length");
        let has_plural = texts.contains(&"telomere lengths");
        assert!(
            has_singular ^ has_plural,
            "exactly one of the near-duplicates survives: {texts:?}"
        );
        assert!(
            has_singular,
            "the more frequent (better-scored) variant is kept: {texts:?}"
        );
    }
}
