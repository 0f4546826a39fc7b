//! Pretrained word-vector loading (textual `.vec` format) and document
//! vectors as frequency-weighted averages of word vectors.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};

/// Vocabulary → dense vector of fixed dimension.
#[derive(Debug, Clone)]
pub struct WordVectorStore {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl WordVectorStore {
    /// An empty store of the given dimension (vectors are added with
    /// [`WordVectorStore::insert`]).
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert a vector keyed by its case-folded word. Existing entries win
    /// (first occurrence kept), mirroring the file loader's dedup rule.
    /// Returns whether the word was newly inserted.
    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Validation(format!(
                "vector for '{word}' has length {}, store dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        if !vector.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation(format!(
                "vector for '{word}' has non-finite entries"
            )));
        }
        let key = word.to_lowercase();
        if self.entries.contains_key(&key) {
            return Ok(false);
        }
        self.entries.insert(key, vector);
        Ok(true)
    }

    /// Look up by case-folded form.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(word).map(Vec::as_slice)
    }
}

/// Loader warning tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VecLoadStats {
    /// Duplicate words encountered (first occurrence kept).
    pub duplicate_words: usize,
}

/// Per-document embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub doc_id: String,
    pub vector: Vec<f64>,
    /// OOV token occurrences / total non-stopword token occurrences
    /// (1.0 for documents with no in-vocabulary occurrence at all).
    pub oov_fraction: f64,
}

/// Load a textual `.vec` file: header `<count> <dim>`, then one
/// `word v1 ... v_dim` row per line, single-ASCII-space separated.
///
/// `limit` caps the number of entries read (desk-scale memory guard).
/// Duplicate words keep the first occurrence and are tallied.
pub fn load_vec(path: &Path, limit: Option<usize>) -> Result<(WordVectorStore, VecLoadStats)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::Parse(format!(
                "{}:1: empty file, expected '<count> <dim>' header",
                path.display()
            )))
        }
    };
    let mut parts = header.split(' ');
    let (count, dim) = match (
        parts.next().and_then(|p| p.parse::<usize>().ok()),
        parts.next().and_then(|p| p.parse::<usize>().ok()),
        parts.next(),
    ) {
        (Some(count), Some(dim), None) if dim >= 1 => (count, dim),
        _ => {
            return Err(Error::Parse(format!(
                "{}:1: malformed header '{header}', expected '<count> <dim>'",
                path.display()
            )))
        }
    };
    let _ = count; // Declared size; the store holds exactly the parsed rows.
    let mut store = WordVectorStore::new(dim);
    let mut stats = VecLoadStats::default();
    for (index, line) in lines {
        let line_no = index + 1;
        if let Some(limit) = limit {
            if store.len() >= limit {
                break;
            }
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let word = fields
            .next()
            .expect("split always yields at least one field");
        let mut vector = Vec::with_capacity(dim);
        for field in fields {
            let value: f64 = field.parse().map_err(|_| {
                Error::Parse(format!(
                    "{}:{line_no}: non-numeric value '{field}'",
                    path.display()
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Parse(format!(
                    "{}:{line_no}: non-finite value '{field}'",
                    path.display()
                )));
            }
            vector.push(value);
        }
        if vector.len() != dim {
            return Err(Error::Parse(format!(
                "{}:{line_no}: row has {} values, header dimension is {dim}",
                path.display(),
                vector.len()
            )));
        }
        if !store.insert(word, vector)? {
            stats.duplicate_words += 1;
        }
    }
    if store.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no vector rows parsed",
            path.display()
        )));
    }
    Ok((store, stats))
}

/// Document vector: the mean of word vectors over all in-vocabulary
/// non-stopword token occurrences (frequency weighting — repeated words
/// contribute once per occurrence). Stopwords and OOV occurrences are
/// excluded; a document with no in-vocabulary occurrence gets the zero
/// vector and oov_fraction 1.
pub fn doc_vector(tdoc: &TokenizedDoc, store: &WordVectorStore) -> DocVector {
    let mut sum = vec![0.0; store.dim()];
    let mut in_vocab = 0usize;
    let mut total = 0usize;
    for token in tdoc.tokens() {
        if token.is_stopword {
            continue;
        }
        total += 1;
        if let Some(vector) = store.get(&token.normalized) {
            in_vocab += 1;
            for (accumulator, value) in sum.iter_mut().zip(vector) {
                *accumulator += value;
            }
        }
    }
    let vector = if in_vocab > 0 {
        let scale = 1.0 / in_vocab as f64;
        sum.iter().map(|v| v * scale).collect()
    } else {
        sum
    };
    let oov_fraction = if total == 0 {
        1.0
    } else {
        (total - in_vocab) as f64 / total as f64
    };
    DocVector {
        doc_id: tdoc.doc_id.clone(),
        vector,
        oov_fraction,
    }
}

/// Standard cosine similarity in [-1, 1]; 0 by convention when either vector
/// is all-zero. Length mismatch is a contract violation.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Validation(format!(
            "cosine of vectors with different lengths ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0;
    let mut norm_u = 0.0;
    let mut norm_v = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        norm_u += a * a;
        norm_v += b * b;
    }
    if norm_u == 0.0 || norm_v == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (norm_u.sqrt() * norm_v.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Document, StopwordList};
    use proptest::prelude::*;
    use std::io::Write as _;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn tdoc_of(text: &str, stopwords: &StopwordList) -> TokenizedDoc {
        let doc = Document {
            id: "d".into(),
            title: String::new(),
            abstract_text: text.into(),
            gold_keywords: None,
        };
        tokenize(&doc, stopwords)
    }

    #[test]
    fn load_vec_parses_header_and_rows() {
        let f = write_temp("2 3\nalpha 1 2 3\nbeta 0.5 -1 2.25\n");
        let (store, stats) = load_vec(f.path(), None).unwrap();
        assert_eq!(store.dim(), 3);
        assert_eq!(store.len(), 2);
        assert_eq!(stats.duplicate_words, 0);
        assert_eq!(store.get("beta"), Some([0.5, -1.0, 2.25].as_slice()));
    }

    #[test]
    fn load_vec_reports_arity_mismatch_with_line() {
        let f = write_temp("2 3\nalpha 1 2 3\nbeta 1 2\n");
        let err = load_vec(f.path(), None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3:"), "should name line 3: {msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn load_vec_keeps_first_duplicate_and_tallies() {
        let f = write_temp("3 2\nw 1 1\nw 9 9\nv 2 2\n");
        let (store, stats) = load_vec(f.path(), None).unwrap();
        assert_eq!(stats.duplicate_words, 1);
        assert_eq!(store.get("w"), Some([1.0, 1.0].as_slice()));
    }

    #[test]
    fn load_vec_honors_limit() {
        let f = write_temp("3 1\na 1\nb 2\nc 3\n");
        let (store, _) = load_vec(f.path(), Some(2)).unwrap();
        assert_eq!(store.len(), 2);
        assert!(store.get("c").is_none());
    }

    #[test]
    fn load_vec_rejects_bad_header() {
        let f = write_temp("not a header\n");
        let err = load_vec(f.path(), None).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
    }

    #[test]
    fn doc_vector_is_occurrence_weighted_mean() {
        let mut store = WordVectorStore::new(2);
        store.insert("a", vec![3.0, 0.0]).unwrap();
        store.insert("b", vec![0.0, 3.0]).unwrap();
        let tdoc = tdoc_of("a a b", &StopwordList::from_words(Vec::<&str>::new()));
        let dv = doc_vector(&tdoc, &store);
        // (2·v_a + v_b) / 3
        assert_eq!(dv.vector, vec![2.0, 1.0]);
        assert_eq!(dv.oov_fraction, 0.0);
    }

    #[test]
    fn doc_vector_single_word_is_identity() {
        let mut store = WordVectorStore::new(3);
        store.insert("telomere", vec![1.0, -2.0, 0.5]).unwrap();
        let tdoc = tdoc_of("telomere", &StopwordList::bundled());
        let dv = doc_vector(&tdoc, &store);
        assert_eq!(dv.vector, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn doc_vector_all_oov_is_zero_with_fraction_one() {
        let store = WordVectorStore::new(2);
        let tdoc = tdoc_of("unknown words", &StopwordList::bundled());
        let dv = doc_vector(&tdoc, &store);
        assert_eq!(dv.vector, vec![0.0, 0.0]);
        assert_eq!(dv.oov_fraction, 1.0);
    }

    #[test]
    fn doc_vector_excludes_stopwords_from_totals() {
        let mut store = WordVectorStore::new(1);
        store.insert("cat", vec![4.0]).unwrap();
        store.insert("the", vec![100.0]).unwrap();
        let tdoc = tdoc_of("the cat", &StopwordList::from_words(["the"]));
        let dv = doc_vector(&tdoc, &store);
        assert_eq!(dv.vector, vec![4.0]);
        assert_eq!(dv.oov_fraction, 0.0);
    }

    #[test]
    fn cosine_identity_orthogonal_and_diagonal() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let got = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((got - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6, "{got}");
    }

    #[test]
    fn cosine_zero_vector_convention_and_length_check() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
        let err = cosine(&[1.0], &[1.0, 2.0]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    proptest! {
        #[test]
        fn doc_vector_is_permutation_invariant(
            mut words in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 1..20),
            rotation in 0usize..20,
        ) {
            let mut store = WordVectorStore::new(2);
            store.insert("a", vec![1.0, 0.25]).unwrap();
            store.insert("b", vec![-2.0, 1.5]).unwrap();
            store.insert("c", vec![0.125, 8.0]).unwrap();
            // "d" stays OOV.
            let stopwords = StopwordList::from_words(Vec::<&str>::new());
            let original = doc_vector(&tdoc_of(&words.join(" "), &stopwords), &store);
            let pivot = rotation % words.len();
            words.rotate_left(pivot);
            let rotated = doc_vector(&tdoc_of(&words.join(" "), &stopwords), &store);
            prop_assert_eq!(original.oov_fraction, rotated.oov_fraction);
            for (x, y) in original.vector.iter().zip(&rotated.vector) {
                prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
            }
        }

        #[test]
        fn doc_vector_scales_linearly_with_store(scale in 0.25f64..8.0) {
            let text = "a a b c";
            let stopwords = StopwordList::from_words(Vec::<&str>::new());
            let mut base = WordVectorStore::new(2);
            let mut scaled = WordVectorStore::new(2);
            for (w, v) in [("a", [1.0, 2.0]), ("b", [-3.0, 0.5]), ("c", [4.0, -1.0])] {
                base.insert(w, v.to_vec()).unwrap();
                scaled.insert(w, v.iter().map(|x| x * scale).collect()).unwrap();
            }
            let dv = doc_vector(&tdoc_of(text, &stopwords), &base);
            let dv_scaled = doc_vector(&tdoc_of(text, &stopwords), &scaled);
            for (x, y) in dv.vector.iter().zip(&dv_scaled.vector) {
                prop_assert!((x * scale - y).abs() <= 1e-9 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn empty_store_gives_oov_fraction_one() {
        let store = WordVectorStore::new(4);
        let tdoc = tdoc_of("some actual content words", &StopwordList::bundled());
        let dv = doc_vector(&tdoc, &store);
        assert_eq!(dv.oov_fraction, 1.0);
        assert!(dv.vector.iter().all(|v| *v == 0.0));
    }
}
