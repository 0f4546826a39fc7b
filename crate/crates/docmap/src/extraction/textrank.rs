//! TextRank: PageRank over an undirected word co-occurrence graph (window 2
//! within sentences); the top third of words are kept and adjacent selected
//! words merge into phrases.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};

use super::{top_k, KeywordSet, Method, ScoreOrder};

const DAMPING: f64 = 0.85;
const PR_TOL: f64 = 1e-6;
const PR_MAX_ITERS: usize = 100;

/// PageRank over a weighted undirected graph. Rows of `weights` are
/// adjacency (weight[i][j] = co-occurrence count). Dangling mass is spread
/// uniformly so the vector always sums to 1.
fn pagerank(weights: &[Vec<f64>]) -> Vec<f64> {
    let n = weights.len();
    let mut pr = vec![1.0 / n as f64; n];
    let out_sum: Vec<f64> = weights.iter().map(|row| row.iter().sum()).collect();
    for _ in 0..PR_MAX_ITERS {
        let dangling: f64 = (0..n).filter(|&j| out_sum[j] == 0.0).map(|j| pr[j]).sum();
        let mut next = vec![0.0; n];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut inflow = 0.0;
            for j in 0..n {
                if out_sum[j] > 0.0 && weights[j][i] > 0.0 {
                    inflow += weights[j][i] / out_sum[j] * pr[j];
                }
            }
            *slot = (1.0 - DAMPING) / n as f64 + DAMPING * (inflow + dangling / n as f64);
        }
        let l1: f64 = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        pr = next;
        if l1 < PR_TOL {
            break;
        }
    }
    pr
}

/// Extract keywords by TextRank. Phrase score = sum of member word ranks;
/// higher is better.
pub fn extract_textrank(tdoc: &TokenizedDoc, k: usize) -> Result<KeywordSet> {
    // Node set: distinct normalized non-stopword words, in sorted order for
    // deterministic indexing.
    let vocab: BTreeMap<&str, usize> = tdoc
        .tokens()
        .filter(|t| !t.is_stopword)
        .map(|t| t.normalized.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, w)| (w, i))
        .collect();
    if vocab.is_empty() {
        return Err(Error::Validation(format!(
            "document '{}' has no content words",
            tdoc.doc_id
        )));
    }
    let n = vocab.len();
    let mut weights = vec![vec![0.0f64; n]; n];
    for sentence in &tdoc.sentences {
        let filtered: Vec<usize> = sentence
            .iter()
            .filter(|t| !t.is_stopword)
            .map(|t| vocab[t.normalized.as_str()])
            .collect();
        for pair in filtered.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a != b {
                weights[a][b] += 1.0;
                weights[b][a] += 1.0;
            }
        }
    }
    let pr = pagerank(&weights);

    // Top third of words (at least one), ties broken lexicographically.
    let mut ranked: Vec<(&str, f64)> = vocab.iter().map(|(&w, &i)| (w, pr[i])).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(b.0)));
    let keep = n.div_ceil(3);
    let selected: BTreeSet<&str> = ranked[..keep].iter().map(|(w, _)| *w).collect();

    // Merge adjacent selected words (no stopword, punctuation break, or
    // sentence boundary in between) into phrases.
    let mut phrases: BTreeMap<String, f64> = BTreeMap::new();
    for sentence in &tdoc.sentences {
        let mut run: Vec<&str> = Vec::new();
        let mut flush = |run: &mut Vec<&str>| {
            if run.is_empty() {
                return;
            }
            let text = run.join(" ");
            let score: f64 = run.iter().map(|w| pr[vocab[w]]).sum();
            phrases.insert(text, score);
            run.clear();
        };
        for token in sentence {
            let selectable =
                !token.is_stopword && selected.contains(token.normalized.as_str());
            if !selectable || (token.break_before && !run.is_empty()) {
                flush(&mut run);
            }
            if selectable {
                run.push(&token.normalized);
            }
        }
        flush(&mut run);
    }
    let scored: Vec<(String, f64)> = phrases.into_iter().collect();
    Ok(KeywordSet {
        doc_id: tdoc.doc_id.clone(),
        method: Method::Textrank,
        keywords: top_k(scored, k, ScoreOrder::HigherBetter)?,
    })
}
