//! RAKE: phrases are maximal stopword/punctuation-delimited token runs; a
//! word co-occurrence graph inside each phrase yields word scores (degree,
//! frequency, or their ratio) that sum into phrase scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDoc;
use crate::error::Result;

use super::{top_k, KeywordSet, Method, ScoreOrder};

/// Word-score variant. `DegreeOverFreq` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RakeMetric {
    DegreeOverFreq,
    Freq,
    Degree,
}

/// Maximal runs of consecutive non-stopword tokens within one sentence that
/// contain no punctuation break; no length cap. Normalized word lists.
fn phrase_runs(tdoc: &TokenizedDoc) -> Vec<Vec<&str>> {
    let mut runs = Vec::new();
    for sentence in &tdoc.sentences {
        let mut current: Vec<&str> = Vec::new();
        for token in sentence {
            let boundary = token.is_stopword || (token.break_before && !current.is_empty());
            if boundary && !current.is_empty() {
                runs.push(std::mem::take(&mut current));
            }
            if !token.is_stopword {
                current.push(&token.normalized);
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }
    }
    runs
}

/// Extract keywords by RAKE with the chosen word-score metric.
/// deg(w) sums the lengths of every phrase occurrence containing w
/// (self-co-occurrence included); higher phrase scores are better.
pub fn extract_rake(tdoc: &TokenizedDoc, k: usize, metric: RakeMetric) -> Result<KeywordSet> {
    let runs = phrase_runs(tdoc);
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    let mut degree: BTreeMap<&str, usize> = BTreeMap::new();
    for run in &runs {
        for &word in run {
            *freq.entry(word).or_insert(0) += 1;
            *degree.entry(word).or_insert(0) += run.len();
        }
    }
    let word_score = |word: &str| -> f64 {
        let f = freq[word] as f64;
        let d = degree[word] as f64;
        match metric {
            RakeMetric::DegreeOverFreq => d / f,
            RakeMetric::Freq => f,
            RakeMetric::Degree => d,
        }
    };
    let mut phrase_scores: BTreeMap<String, f64> = BTreeMap::new();
    for run in &runs {
        let text = run.join(" ");
        let score: f64 = run.iter().map(|w| word_score(w)).sum();
        phrase_scores.insert(text, score);
    }
    let scored: Vec<(String, f64)> = phrase_scores.into_iter().collect();
    Ok(KeywordSet {
        doc_id: tdoc.doc_id.clone(),
        method: Method::Rake,
        keywords: top_k(scored, k, ScoreOrder::HigherBetter)?,
    })
}
