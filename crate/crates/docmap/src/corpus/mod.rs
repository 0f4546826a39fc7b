//! Corpus ingestion, tokenization, sentence splitting, stopwords, stemming,
//! and candidate-phrase generation shared by all extractors.

mod porter;

pub use porter::stem;

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One corpus item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Unique, non-empty identifier.
    pub id: String,
    pub title: String,
    /// Non-empty after whitespace trim; empty-abstract records are rejected
    /// (skipped) at ingest.
    pub abstract_text: String,
    /// Author-assigned gold keywords, when available.
    pub gold_keywords: Option<Vec<String>>,
}

impl Document {
    /// Does this document carry at least one gold keyword?
    pub fn has_gold(&self) -> bool {
        self.gold_keywords.as_ref().is_some_and(|g| !g.is_empty())
    }
}

/// Ordered collection of documents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

/// Summary statistics, recomputed deterministically from the documents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub with_gold: usize,
    /// Mean gold keywords over the documents that have at least one
    /// (0.0 when no document has gold keywords).
    pub mean_gold_per_doc: f64,
}

impl Corpus {
    pub fn stats(&self) -> CorpusStats {
        let with_gold = self.documents.iter().filter(|d| d.has_gold()).count();
        let total_gold: usize = self
            .documents
            .iter()
            .filter_map(|d| d.gold_keywords.as_ref())
            .map(|g| g.len())
            .sum();
        let mean_gold_per_doc = if with_gold == 0 {
            0.0
        } else {
            total_gold as f64 / with_gold as f64
        };
        CorpusStats {
            documents: self.documents.len(),
            with_gold,
            mean_gold_per_doc,
        }
    }
}

/// Stopword set keyed by case-folded form.
#[derive(Debug, Clone)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// The bundled English list (~175 entries).
    pub fn bundled() -> Self {
        Self::from_words(include_str!("../../data/stopwords.txt").lines())
    }

    /// Load a list from a file with one token per line (UTF-8).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_words(text.lines()))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        Self { words }
    }

    pub fn contains(&self, normalized: &str) -> bool {
        self.words.contains(normalized)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// One token of a tokenized document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Original surface form (casing preserved for YAKE's casing feature).
    pub surface: String,
    /// Case-folded surface.
    pub normalized: String,
    /// Porter stem of the normalized form.
    pub stem: String,
    pub is_stopword: bool,
    pub sentence_index: usize,
    /// Strictly increasing across the whole document.
    pub position_in_doc: usize,
    /// True when a non-whitespace separator (punctuation) or a sentence
    /// boundary precedes this token. Phrase builders (candidate n-grams,
    /// RAKE runs, TextRank merging) never span such a break, and YAKE's
    /// co-occurrence window resets on it.
    pub break_before: bool,
}

/// Tokenized view of one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDoc {
    pub doc_id: String,
    pub sentences: Vec<Vec<Token>>,
}

impl TokenizedDoc {
    /// Flat iterator over all tokens in document order.
    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flatten()
    }

    /// All normalized forms joined by single spaces — the containment domain
    /// for the "every candidate occurs verbatim" invariant.
    pub fn joined_normalized(&self) -> String {
        self.tokens()
            .map(|t| t.normalized.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Contiguous stopword-free n-gram (n ≤ 3) with its in-document frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePhrase {
    /// Tokens of the first occurrence.
    pub tokens: Vec<Token>,
    /// Joined normalized form ("word" or "word word" ...).
    pub text: String,
    /// Occurrences in this document.
    pub doc_frequency: usize,
}

/// Ingest warning tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    /// Documents skipped because the abstract was empty after trimming.
    pub skipped_empty_abstract: usize,
}

#[derive(Serialize, Deserialize)]
struct RawDoc {
    id: String,
    title: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    keywords: Option<Vec<String>>,
}

/// Load a corpus from JSONL (`{"id","title","abstract","keywords"?}` per line).
///
/// Preserves file order; documents with empty/whitespace abstracts are skipped
/// and tallied. Malformed JSON and duplicate/empty ids fail with the line
/// number.
pub fn load_jsonl(path: &Path) -> Result<(Corpus, LoadStats)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut documents = Vec::new();
    let mut stats = LoadStats::default();
    let mut seen_ids = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDoc = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{line_no}: {e}", path.display())))?;
        if raw.id.is_empty() {
            return Err(Error::Parse(format!(
                "{}:{line_no}: empty document id",
                path.display()
            )));
        }
        if !seen_ids.insert(raw.id.clone()) {
            return Err(Error::Parse(format!(
                "{}:{line_no}: duplicate document id '{}'",
                path.display(),
                raw.id
            )));
        }
        if raw.abstract_text.trim().is_empty() {
            stats.skipped_empty_abstract += 1;
            continue;
        }
        documents.push(Document {
            id: raw.id,
            title: raw.title,
            abstract_text: raw.abstract_text,
            gold_keywords: raw.keywords,
        });
    }
    Ok((Corpus { documents }, stats))
}

/// Serialize a corpus back to JSONL with the same schema `load_jsonl` reads.
pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for doc in &corpus.documents {
        let raw = RawDoc {
            id: doc.id.clone(),
            title: doc.title.clone(),
            abstract_text: doc.abstract_text.clone(),
            keywords: doc.gold_keywords.clone(),
        };
        let line = serde_json::to_string(&raw)
            .map_err(|e| Error::Parse(format!("serializing doc '{}': {e}", doc.id)))?;
        out.write_all(line.as_bytes())
            .and_then(|()| out.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Split text into sentences on terminal punctuation (`.` `!` `?`) followed
/// by whitespace. No abbreviation model (documented limitation).
fn split_sentences(text: &str) -> Vec<&str> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(next_pos, next)) = chars.peek() {
                if next.is_whitespace() {
                    let piece = &text[start..pos + c.len_utf8()];
                    if !piece.trim().is_empty() {
                        sentences.push(piece);
                    }
                    start = next_pos;
                }
            }
        }
    }
    let tail = &text[start..];
    if !tail.trim().is_empty() {
        sentences.push(tail);
    }
    sentences
}

/// Tokenize one document's abstract.
///
/// Tokens are maximal runs of Unicode letters/digits plus internal hyphens;
/// every other character is a separator. Each token carries its case-folded
/// and stemmed form, stopword flag, sentence index, global position, and
/// whether punctuation (or a sentence boundary) immediately precedes it.
pub fn tokenize(doc: &Document, stopwords: &StopwordList) -> TokenizedDoc {
    let mut sentences = Vec::new();
    let mut position = 0usize;
    for (sentence_index, sentence) in split_sentences(&doc.abstract_text).iter().enumerate() {
        let mut tokens: Vec<Token> = Vec::new();
        // Sentence starts count as breaks.
        let mut pending_break = true;
        let mut run = String::new();
        let mut flush = |run: &mut String, pending_break: &mut bool, tokens: &mut Vec<Token>| {
            if run.is_empty() {
                return;
            }
            let trimmed = run.trim_matches('-');
            if trimmed.chars().any(char::is_alphanumeric) {
                let leading_trim = run.starts_with('-');
                let trailing_trim = run.ends_with('-');
                let normalized = trimmed.to_lowercase();
                tokens.push(Token {
                    surface: trimmed.to_string(),
                    stem: stem(&normalized),
                    is_stopword: stopwords.contains(&normalized),
                    normalized,
                    sentence_index,
                    position_in_doc: position,
                    break_before: *pending_break || leading_trim,
                });
                position += 1;
                *pending_break = trailing_trim;
            } else {
                // Hyphen-only run: pure punctuation.
                *pending_break = true;
            }
            run.clear();
        };
        for c in sentence.chars() {
            if c.is_alphanumeric() || c == '-' {
                run.push(c);
            } else {
                flush(&mut run, &mut pending_break, &mut tokens);
                if !c.is_whitespace() {
                    pending_break = true;
                }
            }
        }
        flush(&mut run, &mut pending_break, &mut tokens);
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    // Re-number sentence indices in case a sentence produced no tokens.
    for (index, sentence) in sentences.iter_mut().enumerate() {
        for token in sentence.iter_mut() {
            token.sentence_index = index;
        }
    }
    TokenizedDoc {
        doc_id: doc.id.clone(),
        sentences,
    }
}

/// All contiguous stopword-free n-grams (n ≤ max_len) that cross neither a
/// sentence boundary nor a punctuation break, deduplicated by normalized text
/// with per-document frequency accumulated. First-occurrence order.
pub fn candidate_phrases(tdoc: &TokenizedDoc, max_len: usize) -> Result<Vec<CandidatePhrase>> {
    if !(1..=3).contains(&max_len) {
        return Err(Error::Validation(format!(
            "candidate max_len must be in 1..=3, got {max_len}"
        )));
    }
    let mut by_text: HashMap<String, usize> = HashMap::new();
    let mut candidates: Vec<CandidatePhrase> = Vec::new();
    for sentence in &tdoc.sentences {
        for start in 0..sentence.len() {
            if sentence[start].is_stopword {
                continue;
            }
            let mut text = String::new();
            for len in 1..=max_len {
                let end = start + len - 1;
                if end >= sentence.len() {
                    break;
                }
                let token = &sentence[end];
                if token.is_stopword || (len > 1 && token.break_before) {
                    break;
                }
                if len > 1 {
                    text.push(' ');
                }
                text.push_str(&token.normalized);
                match by_text.get(&text) {
                    Some(&index) => candidates[index].doc_frequency += 1,
                    None => {
                        by_text.insert(text.clone(), candidates.len());
                        candidates.push(CandidatePhrase {
                            tokens: sentence[start..=end].to_vec(),
                            text: text.clone(),
                            doc_frequency: 1,
                        });
                    }
                }
            }
        }
    }
    Ok(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(abstract_text: &str) -> Document {
        Document {
            id: "d1".into(),
            title: "t".into(),
            abstract_text: abstract_text.into(),
            gold_keywords: None,
        }
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write as _;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_jsonl_preserves_order_and_fields() {
        let f = write_temp(concat!(
            "{\"id\":\"a\",\"title\":\"A\",\"abstract\":\"Alpha text.\"}\n",
            "{\"id\":\"b\",\"title\":\"B\",\"abstract\":\"Beta text.\",\"keywords\":[\"aging\",\"diet\"]}\n",
            "{\"id\":\"c\",\"title\":\"C\",\"abstract\":\"Gamma text.\"}\n",
        ));
        let (corpus, stats) = load_jsonl(f.path()).unwrap();
        assert_eq!(stats.skipped_empty_abstract, 0);
        let ids: Vec<_> = corpus.documents.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(
            corpus.documents[1].gold_keywords.as_deref(),
            Some(["aging".to_string(), "diet".to_string()].as_slice())
        );
    }

    #[test]
    fn load_jsonl_skips_empty_abstracts_with_tally() {
        let f = write_temp(concat!(
            "{\"id\":\"a\",\"title\":\"A\",\"abstract\":\"\"}\n",
            "{\"id\":\"b\",\"title\":\"B\",\"abstract\":\"  \"}\n",
            "{\"id\":\"c\",\"title\":\"C\",\"abstract\":\"Real text.\"}\n",
        ));
        let (corpus, stats) = load_jsonl(f.path()).unwrap();
        assert_eq!(stats.skipped_empty_abstract, 2);
        assert_eq!(corpus.documents.len(), 1);
        assert_eq!(corpus.documents[0].id, "c");
    }

    #[test]
    fn load_jsonl_names_the_malformed_line() {
        let f = write_temp(concat!(
            "{\"id\":\"a\",\"title\":\"A\",\"abstract\":\"ok\"}\n",
            "{not json}\n",
        ));
        let err = load_jsonl(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "should name line 2: {msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn load_jsonl_rejects_duplicate_ids() {
        let f = write_temp(concat!(
            "{\"id\":\"a\",\"title\":\"A\",\"abstract\":\"x\"}\n",
            "{\"id\":\"a\",\"title\":\"B\",\"abstract\":\"y\"}\n",
        ));
        let err = load_jsonl(f.path()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn load_jsonl_missing_file_is_io_error() {
        let err = load_jsonl(Path::new("/nonexistent/corpus.jsonl")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn jsonl_round_trip_is_byte_stable() {
        let f = write_temp(concat!(
            "{\"id\":\"a\",\"title\":\"A\",\"abstract\":\"Alpha text.\",\"keywords\":[\"x\"]}\n",
            "{\"id\":\"b\",\"title\":\"B\",\"abstract\":\"Beta.\"}\n",
        ));
        let (corpus, _) = load_jsonl(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(&corpus, out.path()).unwrap();
        let first = std::fs::read(out.path()).unwrap();
        let (reloaded, _) = load_jsonl(out.path()).unwrap();
        assert_eq!(corpus, reloaded);
        let out2 = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(&reloaded, out2.path()).unwrap();
        assert_eq!(first, std::fs::read(out2.path()).unwrap());
    }

    #[test]
    fn corpus_stats_count_gold() {
        let corpus = Corpus {
            documents: vec![
                Document {
                    gold_keywords: Some(vec!["a".into(), "b".into(), "c".into()]),
                    ..doc("x")
                },
                Document {
                    id: "d2".into(),
                    gold_keywords: Some(vec!["a".into()]),
                    ..doc("y")
                },
                Document {
                    id: "d3".into(),
                    ..doc("z")
                },
            ],
        };
        let stats = corpus.stats();
        assert_eq!(stats.documents, 3);
        assert_eq!(stats.with_gold, 2);
        assert!((stats.mean_gold_per_doc - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tokenize_splits_sentences_on_terminal_punctuation() {
        let tdoc = tokenize(&doc("Mice age. Diets matter."), &StopwordList::bundled());
        assert_eq!(tdoc.sentences.len(), 2);
        let s0: Vec<_> = tdoc.sentences[0].iter().map(|t| t.normalized.as_str()).collect();
        let s1: Vec<_> = tdoc.sentences[1].iter().map(|t| t.normalized.as_str()).collect();
        assert_eq!(s0, ["mice", "age"]);
        assert_eq!(s1, ["diets", "matter"]);
    }

    #[test]
    fn tokenize_flags_stopwords() {
        let tdoc = tokenize(&doc("The cat"), &StopwordList::from_words(["the"]));
        let flags: Vec<_> = tdoc.tokens().map(|t| (t.surface.as_str(), t.is_stopword)).collect();
        assert_eq!(flags, [("The", true), ("cat", false)]);
    }

    #[test]
    fn tokenize_keeps_internal_hyphens() {
        let tdoc = tokenize(&doc("state-of-the-art"), &StopwordList::bundled());
        let tokens: Vec<_> = tdoc.tokens().map(|t| t.normalized.as_str()).collect();
        assert_eq!(tokens, ["state-of-the-art"]);
    }

    #[test]
    fn tokenize_splits_on_slash_and_marks_break() {
        let tdoc = tokenize(&doc("NZB/NZW mice"), &StopwordList::bundled());
        let tokens: Vec<_> = tdoc
            .tokens()
            .map(|t| (t.normalized.as_str(), t.break_before))
            .collect();
        assert_eq!(tokens, [("nzb", true), ("nzw", true), ("mice", false)]);
    }

    #[test]
    fn tokenize_positions_increase_and_sentences_do_not_decrease() {
        let tdoc = tokenize(
            &doc("One two three. Four five! Six?  Seven."),
            &StopwordList::bundled(),
        );
        let mut last_pos = None;
        let mut last_sentence = 0;
        for token in tdoc.tokens() {
            if let Some(prev) = last_pos {
                assert!(token.position_in_doc > prev);
            }
            assert!(token.sentence_index >= last_sentence);
            last_sentence = token.sentence_index;
            last_pos = Some(token.position_in_doc);
        }
        assert_eq!(tdoc.sentences.len(), 4);
    }

    #[test]
    fn tokenize_decimal_point_is_not_a_sentence_boundary() {
        let tdoc = tokenize(&doc("Dose 3.5 mg works"), &StopwordList::bundled());
        assert_eq!(tdoc.sentences.len(), 1);
        let tokens: Vec<_> = tdoc.tokens().map(|t| t.normalized.as_str()).collect();
        assert_eq!(tokens, ["dose", "3", "5", "mg", "works"]);
    }

    #[test]
    fn candidate_phrases_enumerates_ngrams() {
        let tdoc = tokenize(&doc("red apple"), &StopwordList::bundled());
        let cands = candidate_phrases(&tdoc, 3).unwrap();
        let texts: Vec<_> = cands.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["red", "red apple", "apple"]);
    }

    #[test]
    fn candidate_phrases_never_cross_stopwords() {
        let tdoc = tokenize(&doc("apple of tree"), &StopwordList::from_words(["of"]));
        let cands = candidate_phrases(&tdoc, 3).unwrap();
        let texts: Vec<_> = cands.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["apple", "tree"]);
    }

    #[test]
    fn candidate_phrases_accumulate_doc_frequency() {
        let tdoc = tokenize(&doc("red apple and red apple"), &StopwordList::from_words(["and"]));
        let cands = candidate_phrases(&tdoc, 2).unwrap();
        let bigram = cands.iter().find(|c| c.text == "red apple").unwrap();
        assert_eq!(bigram.doc_frequency, 2);
        let red = cands.iter().find(|c| c.text == "red").unwrap();
        assert_eq!(red.doc_frequency, 2);
    }

    #[test]
    fn candidate_phrases_never_cross_punctuation() {
        let tdoc = tokenize(&doc("aging, diet and exercise"), &StopwordList::from_words(["and"]));
        let cands = candidate_phrases(&tdoc, 3).unwrap();
        let texts: Vec<_> = cands.iter().map(|c| c.text.as_str()).collect();
        // "aging diet" must not appear: a comma separates the tokens.
        assert_eq!(texts, ["aging", "diet", "exercise"]);
    }

    #[test]
    fn candidate_phrases_validates_max_len() {
        let tdoc = tokenize(&doc("a b"), &StopwordList::bundled());
        assert!(candidate_phrases(&tdoc, 0).is_err());
        assert!(candidate_phrases(&tdoc, 4).is_err());
    }

    /// Build abstracts from a small vocabulary with varied separators.
    fn text_strategy() -> impl Strategy<Value = String> {
        let words = prop::sample::select(vec![
            "red", "apple", "tree", "the", "of", "Mice", "age", "state-of-the-art", "DNA", "x1",
        ]);
        let seps = prop::sample::select(vec![" ", ". ", ", ", "; ", "! ", " - ", "/"]);
        prop::collection::vec((words, seps), 1..40).prop_map(|pairs| {
            let mut text = String::new();
            for (word, sep) in pairs {
                text.push_str(word);
                text.push_str(sep);
            }
            text
        })
    }

    proptest! {
        #[test]
        fn tokenization_is_deterministic(text in text_strategy()) {
            let d = doc(&text);
            let stopwords = StopwordList::bundled();
            prop_assert_eq!(tokenize(&d, &stopwords), tokenize(&d, &stopwords));
        }

        #[test]
        fn every_candidate_occurs_verbatim(text in text_strategy()) {
            let d = doc(&text);
            let tdoc = tokenize(&d, &StopwordList::bundled());
            // Case-fold the abstract and collapse separator runs to single
            // spaces (hyphens trimmed per word, exactly like the tokenizer);
            // every candidate must appear word-aligned in the result.
            let folded: String = d
                .abstract_text
                .to_lowercase()
                .chars()
                .map(|c| if c.is_alphanumeric() || c == '-' { c } else { ' ' })
                .collect();
            let squashed_words: Vec<&str> = folded
                .split_whitespace()
                .map(|w| w.trim_matches('-'))
                .filter(|w| !w.is_empty())
                .collect();
            let haystack = format!(" {} ", squashed_words.join(" "));
            for cand in candidate_phrases(&tdoc, 3).unwrap() {
                prop_assert!(
                    haystack.contains(&format!(" {} ", cand.text)),
                    "candidate '{}' not verbatim in '{}'", cand.text, haystack
                );
            }
        }

        #[test]
        fn unigram_frequencies_sum_to_non_stopword_token_count(text in text_strategy()) {
            let d = doc(&text);
            let tdoc = tokenize(&d, &StopwordList::bundled());
            let cands = candidate_phrases(&tdoc, 3).unwrap();
            let unigram_sum: usize = cands
                .iter()
                .filter(|c| c.tokens.len() == 1)
                .map(|c| c.doc_frequency)
                .sum();
            let non_stop = tdoc.tokens().filter(|t| !t.is_stopword).count();
            prop_assert_eq!(unigram_sum, non_stop);
        }
    }
}
