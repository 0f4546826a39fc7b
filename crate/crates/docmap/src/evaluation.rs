//! Evaluation of extracted keywords against gold annotations: stem-normalized
//! multiset matching, precision/recall/F1 at every cutoff n, macro-averaged
//! over documents that carry gold keywords.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::{stem, Corpus};
use crate::error::{Error, Result};
use crate::extraction::{KeywordSet, Method};

/// One cutoff's macro-averaged scores.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Macro-averaged curve for one extraction method, cutoffs 1..=max_n.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: Method,
    pub rows: Vec<EvalRow>,
    /// Number of gold-carrying documents the averages run over.
    pub docs_evaluated: usize,
}

/// Canonical comparison form: case-fold, strip punctuation, Porter-stem each
/// word, join with single spaces. "Ageing studies" and "ageing study" collide;
/// "mouse" and "mice" do not.
pub fn normalize_keyword(text: &str) -> String {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(stem)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Count matches between predictions and gold under multiset semantics: each
/// gold keyword can be claimed by at most one prediction, and vice versa.
/// Inputs are already-normalized strings.
pub fn match_count(predictions: &[String], gold: &[String]) -> usize {
    let mut remaining: BTreeMap<&str, usize> = BTreeMap::new();
    for g in gold {
        *remaining.entry(g.as_str()).or_insert(0) += 1;
    }
    let mut matches = 0;
    for p in predictions {
        if let Some(count) = remaining.get_mut(p.as_str()) {
            if *count > 0 {
                *count -= 1;
                matches += 1;
            }
        }
    }
    matches
}

/// Precision, recall, F1 at cutoff n for one document. Predictions are in
/// rank order and truncated to n; precision divides by the number of
/// predictions actually scored, min(n, |predictions|). With no predictions
/// all three are 0; F1 is 0 whenever precision + recall is.
pub fn prf_at_n(predictions: &[String], gold: &[String], n: usize) -> Result<(f64, f64, f64)> {
    if n == 0 {
        return Err(Error::Validation("cutoff n must be ≥ 1".into()));
    }
    if gold.is_empty() {
        return Err(Error::Validation(
            "precision/recall needs at least one gold keyword".into(),
        ));
    }
    let taken = n.min(predictions.len());
    if taken == 0 {
        return Ok((0.0, 0.0, 0.0));
    }
    let matches = match_count(&predictions[..taken], gold) as f64;
    let precision = matches / taken as f64;
    let recall = matches / gold.len() as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok((precision, recall, f1))
}

/// How the macro-averaged F1 column is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum F1Mode {
    /// Mean of per-document F1 scores (the default).
    #[default]
    MeanOfF1,
    /// Harmonic mean of the macro-averaged precision and recall.
    F1OfMeans,
}

/// Evaluate one method's keyword sets against the corpus gold annotations.
/// Documents without gold keywords are excluded from the averages; if no
/// document has any, evaluation is impossible and an error is returned. A
/// gold-carrying document missing from `sets` is a validation error.
pub fn evaluate(
    corpus: &Corpus,
    sets: &[KeywordSet],
    max_n: usize,
    f1_mode: F1Mode,
) -> Result<EvalReport> {
    if max_n == 0 {
        return Err(Error::Validation("max_n must be ≥ 1".into()));
    }
    let method = match sets.first() {
        Some(first) => first.method,
        None => return Err(Error::Validation("no keyword sets to evaluate".into())),
    };
    let mut by_doc: BTreeMap<&str, &KeywordSet> = BTreeMap::new();
    for set in sets {
        if set.method != method {
            return Err(Error::Validation(format!(
                "mixed methods in one evaluation: {} and {}",
                method, set.method
            )));
        }
        if by_doc.insert(set.doc_id.as_str(), set).is_some() {
            return Err(Error::Validation(format!(
                "duplicate keyword set for document '{}'",
                set.doc_id
            )));
        }
    }
    // (normalized predictions, normalized gold) per gold-carrying document.
    let mut pairs: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for doc in &corpus.documents {
        let gold = match &doc.gold_keywords {
            Some(g) if !g.is_empty() => g,
            _ => continue,
        };
        let set = by_doc.get(doc.id.as_str()).ok_or_else(|| {
            Error::Validation(format!(
                "document '{}' has gold keywords but no extracted keyword set",
                doc.id
            ))
        })?;
        let predictions = set
            .keywords
            .iter()
            .map(|kw| normalize_keyword(&kw.text))
            .collect();
        let gold = gold.iter().map(|g| normalize_keyword(g)).collect();
        pairs.push((predictions, gold));
    }
    if pairs.is_empty() {
        return Err(Error::Validation(
            "no document in the corpus has gold keywords; nothing to evaluate".into(),
        ));
    }
    let docs = pairs.len() as f64;
    let mut rows = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
        for (predictions, gold) in &pairs {
            let (p, r, f) = prf_at_n(predictions, gold, n)?;
            p_sum += p;
            r_sum += r;
            f_sum += f;
        }
        let precision = p_sum / docs;
        let recall = r_sum / docs;
        let f1 = match f1_mode {
            F1Mode::MeanOfF1 => f_sum / docs,
            F1Mode::F1OfMeans => {
                if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                }
            }
        };
        rows.push(EvalRow {
            n,
            precision,
            recall,
            f1,
        });
    }
    Ok(EvalReport {
        method,
        rows,
        docs_evaluated: pairs.len(),
    })
}

/// Write evaluation curves as CSV: `method,n,precision,recall,f1`, six
/// decimal places, one row per method per cutoff.
pub fn write_report_csv(reports: &[EvalReport], path: &Path) -> Result<()> {
    let mut out = String::from("method,n,precision,recall,f1\n");
    for report in reports {
        for row in &report.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6}\n",
                report.method, row.n, row.precision, row.recall, row.f1
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write precision–recall pairs as CSV: `method,n,recall,precision`; the
/// rows trace each method's PR curve as n grows.
pub fn write_pr_csv(reports: &[EvalReport], path: &Path) -> Result<()> {
    let mut out = String::from("method,n,recall,precision\n");
    for report in reports {
        for row in &report.rows {
            out.push_str(&format!(
                "{},{},{:.6},{:.6}\n",
                report.method, row.n, row.recall, row.precision
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read evaluation curves back from [`write_report_csv`] output, grouping
/// consecutive rows of the same method into one report.
pub fn read_report_csv(path: &Path) -> Result<Vec<EvalReport>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::Parse(format!("{}: empty file", path.display()))),
    };
    if header.trim() != "method,n,precision,recall,f1" {
        return Err(Error::Parse(format!(
            "{}: unexpected header '{}'",
            path.display(),
            header.trim()
        )));
    }
    let mut reports: Vec<EvalReport> = Vec::new();
    for (index, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| {
            Error::Parse(format!("{}:{}: {what}", path.display(), index + 1))
        };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 comma-separated fields"));
        }
        let method: Method = fields[0].parse()?;
        let n: usize = fields[1].parse().map_err(|_| bad("bad cutoff n"))?;
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| bad(&format!("bad {what}")))
        };
        let row = EvalRow {
            n,
            precision: parse_f(fields[2], "precision")?,
            recall: parse_f(fields[3], "recall")?,
            f1: parse_f(fields[4], "f1")?,
        };
        match reports.last_mut() {
            Some(last) if last.method == method => last.rows.push(row),
            _ => reports.push(EvalReport {
                method,
                rows: vec![row],
                docs_evaluated: 0,
            }),
        }
    }
    if reports.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    Ok(reports)
}
