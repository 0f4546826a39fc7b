//! Five unsupervised keyword extractors, each producing the k best-scored
//! keywords per document: TF-IDF, YAKE!, RAKE, TextRank, and
//! embedding-similarity.

mod embed;
mod rake;
mod textrank;
mod tfidf;
mod yake;

pub use embed::extract_embed;
pub use rake::{extract_rake, RakeMetric};
pub use textrank::extract_textrank;
pub use tfidf::{build_df, extract_tfidf};
pub use yake::extract_yake;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extractor identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tfidf,
    Yake,
    Rake,
    Textrank,
    Embed,
}

impl Method {
    /// All methods, in canonical report order.
    pub const ALL: [Method; 5] = [
        Method::Tfidf,
        Method::Yake,
        Method::Rake,
        Method::Textrank,
        Method::Embed,
    ];
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::Tfidf => "tfidf",
            Method::Yake => "yake",
            Method::Rake => "rake",
            Method::Textrank => "textrank",
            Method::Embed => "embed",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(Method::Tfidf),
            "yake" => Ok(Method::Yake),
            "rake" => Ok(Method::Rake),
            "textrank" => Ok(Method::Textrank),
            "embed" => Ok(Method::Embed),
            other => Err(Error::Validation(format!(
                "unknown extraction method '{other}' (expected tfidf, yake, rake, textrank, or embed)"
            ))),
        }
    }
}

/// One extracted keyword with its method-specific score and 1-based rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredKeyword {
    pub text: String,
    pub score: f64,
    pub rank: usize,
}

/// All keywords one method produced for one document (≤ k of them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordSet {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub method: Method,
    pub keywords: Vec<ScoredKeyword>,
}

/// Whether numerically larger scores are better for a method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreOrder {
    HigherBetter,
    /// YAKE's convention.
    LowerBetter,
}

/// Order scored texts by the method's convention (ties lexicographic),
/// truncate to k, and assign contiguous ranks from 1.
pub fn top_k(scored: Vec<(String, f64)>, k: usize, order: ScoreOrder) -> Result<Vec<ScoredKeyword>> {
    if k == 0 {
        return Err(Error::Validation("k must be ≥ 1".into()));
    }
    for (text, score) in &scored {
        if !score.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite score for keyword '{text}'"
            )));
        }
    }
    let mut scored = scored;
    scored.sort_by(|a, b| {
        let by_score = match order {
            ScoreOrder::HigherBetter => b.1.partial_cmp(&a.1),
            ScoreOrder::LowerBetter => a.1.partial_cmp(&b.1),
        }
        .expect("scores are finite");
        by_score.then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (text, score))| ScoredKeyword {
            text,
            score,
            rank: i + 1,
        })
        .collect())
}

/// Write keyword sets as JSONL, one document per line.
pub fn write_keywords(sets: &[KeywordSet], path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for set in sets {
        let line = serde_json::to_string(set)
            .map_err(|e| Error::Parse(format!("serializing keywords for '{}': {e}", set.doc_id)))?;
        out.write_all(line.as_bytes())
            .and_then(|()| out.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Read keyword sets from JSONL produced by [`write_keywords`].
pub fn read_keywords(path: &Path) -> Result<Vec<KeywordSet>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut sets = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let set: KeywordSet = serde_json::from_str(&line).map_err(|e| {
            Error::Parse(format!("{}:{}: {e}", path.display(), index + 1))
        })?;
        sets.push(set);
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{candidate_phrases, tokenize, Document, StopwordList};
    use crate::vectors::{doc_vector, WordVectorStore};
    use tempfile::tempdir;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            title: String::new(),
            abstract_text: text.into(),
            gold_keywords: None,
        }
    }

    #[test]
    fn top_k_truncates_and_ranks() {
        let scored: Vec<(String, f64)> = (0..25).map(|i| (format!("w{i:02}"), i as f64)).collect();
        let got = top_k(scored, 20, ScoreOrder::HigherBetter).unwrap();
        assert_eq!(got.len(), 20);
        assert_eq!(got[0].text, "w24");
        assert_eq!(got[0].rank, 1);
        assert_eq!(got[19].rank, 20);
        let short = top_k(vec![("a".into(), 1.0); 5], 20, ScoreOrder::HigherBetter).unwrap();
        assert_eq!(short.len(), 5, "exhaustion returns all candidates");
    }

    #[test]
    fn top_k_breaks_ties_lexicographically_in_both_orders() {
        let scored = vec![
            ("pear".to_string(), 1.0),
            ("apple".to_string(), 1.0),
            ("mango".to_string(), 2.0),
        ];
        let hi = top_k(scored.clone(), 3, ScoreOrder::HigherBetter).unwrap();
        assert_eq!(
            hi.iter().map(|s| s.text.as_str()).collect::<Vec<_>>(),
            ["mango", "apple", "pear"]
        );
        let lo = top_k(scored, 3, ScoreOrder::LowerBetter).unwrap();
        assert_eq!(
            lo.iter().map(|s| s.text.as_str()).collect::<Vec<_>>(),
            ["apple", "pear", "mango"]
        );
    }

    #[test]
    fn top_k_rejects_zero_k_and_nan_scores() {
        assert!(top_k(vec![("a".into(), 1.0)], 0, ScoreOrder::HigherBetter).is_err());
        let err = top_k(vec![("a".into(), f64::NAN)], 1, ScoreOrder::HigherBetter).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn keyword_jsonl_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("kw.jsonl");
        let sets = vec![KeywordSet {
            doc_id: "d1".into(),
            method: Method::Rake,
            keywords: vec![ScoredKeyword {
                text: "deep learning".into(),
                score: 4.0,
                rank: 1,
            }],
        }];
        write_keywords(&sets, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"id\":\"d1\""), "{text}");
        assert!(text.contains("\"method\":\"rake\""), "{text}");
        let back = read_keywords(&path).unwrap();
        assert_eq!(back, sets);
    }

    /// Cross-method invariants: determinism and verbatim containment of every
    /// keyword in the (case-folded, separator-squashed) source document.
    #[test]
    fn every_method_is_deterministic_and_returns_verbatim_text() {
        let stop = StopwordList::bundled();
        let documents = [
            doc(
                "d1",
                "Telomere shortening drives cellular aging. Short telomeres limit the lifespan of dividing cells.",
            ),
            doc(
                "d2",
                "Caloric restriction extends lifespan in mice. Dietary restriction changes metabolic signaling pathways.",
            ),
            doc(
                "d3",
                "Mitochondrial dysfunction accumulates with age, and mitochondrial quality control declines.",
            ),
        ];
        let tdocs: Vec<_> = documents.iter().map(|d| tokenize(d, &stop)).collect();
        let df = build_df(&tdocs).unwrap();
        let mut store = WordVectorStore::new(4);
        for (i, word) in tdocs
            .iter()
            .flat_map(|t| t.tokens())
            .map(|t| t.normalized.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
        {
            let angle = i as f64;
            store
                .insert(&word, vec![angle.cos(), angle.sin(), 1.0, angle / 10.0])
                .unwrap();
        }
        for tdoc in &tdocs {
            let dv = doc_vector(tdoc, &store);
            let squashed = tdoc.joined_normalized();
            let runs: Vec<KeywordSet> = vec![
                extract_tfidf(tdoc, &df, tdocs.len(), 20).unwrap(),
                extract_yake(tdoc, 20).unwrap(),
                extract_rake(tdoc, 20, RakeMetric::DegreeOverFreq).unwrap(),
                extract_textrank(tdoc, 20).unwrap(),
                extract_embed(tdoc, &dv, &store, 20).unwrap(),
            ];
            for set in &runs {
                assert!(!set.keywords.is_empty(), "{} produced nothing", set.method);
                assert!(set.keywords.len() <= 20);
                let mut seen = std::collections::BTreeSet::new();
                for (i, kw) in set.keywords.iter().enumerate() {
                    assert_eq!(kw.rank, i + 1, "ranks contiguous for {}", set.method);
                    assert!(seen.insert(kw.text.clone()), "duplicate '{}'", kw.text);
                    let padded = format!(" {squashed} ");
                    assert!(
                        padded.contains(&format!(" {} ", kw.text)),
                        "{}: '{}' not in source",
                        set.method,
                        kw.text
                    );
                }
            }
            let again: Vec<KeywordSet> = vec![
                extract_tfidf(tdoc, &df, tdocs.len(), 20).unwrap(),
                extract_yake(tdoc, 20).unwrap(),
                extract_rake(tdoc, 20, RakeMetric::DegreeOverFreq).unwrap(),
                extract_textrank(tdoc, 20).unwrap(),
                extract_embed(tdoc, &dv, &store, 20).unwrap(),
            ];
            assert_eq!(runs, again, "repeat extraction identical");
        }
        // Exercised here so the fixture covers candidate generation too.
        for tdoc in &tdocs {
            assert!(!candidate_phrases(tdoc, 3).unwrap().is_empty());
        }
    }
}
