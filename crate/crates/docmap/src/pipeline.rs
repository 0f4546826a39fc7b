//! End-to-end orchestration: corpus → document vectors → 2-D projection →
//! GMM clusters → per-document keywords → enrichment labels → figures, with
//! a content-hash manifest that makes reruns verifiable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::{keyword_presence, label_clusters, ClusterLabels, LabelOptions};
use crate::clustering::{fit_gmm, silhouette_exemplars, Exemplars};
use crate::corpus::{load_jsonl, tokenize, StopwordList, TokenizedDoc};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, write_pr_csv, write_report_csv, F1Mode};
use crate::extraction::{
    build_df, extract_embed, extract_rake, extract_textrank, extract_tfidf, extract_yake,
    write_keywords, KeywordSet, Method, RakeMetric,
};
use crate::projection::{tsne, TsneParams};
use crate::render::{render_curves, render_map, Canvas, ClusterLabel, MapPoint, MapScene};
use crate::util::{fmt_sig9, sha256_hex};
use crate::vectors::{doc_vector, load_vec, DocVector, WordVectorStore};

pub const DEFAULT_K_KEYWORDS: usize = 20;
pub const DEFAULT_PERPLEXITY: f64 = 30.0;
pub const DEFAULT_TSNE_ITERATIONS: usize = 1000;
pub const DEFAULT_LEARNING_RATE: f64 = 200.0;
pub const DEFAULT_K_CLUSTERS: usize = 9;
pub const DEFAULT_ASSIGN_THRESHOLD: f64 = 0.6;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_LABELS_PER_CLUSTER: usize = 5;
pub const DEFAULT_SEED: u64 = 42;
/// Exemplars written per cluster.
pub const EXEMPLARS_PER_CLUSTER: usize = 5;

fn d_k_keywords() -> usize {
    DEFAULT_K_KEYWORDS
}
fn d_method() -> Method {
    Method::Yake
}
fn d_perplexity() -> f64 {
    DEFAULT_PERPLEXITY
}
fn d_tsne_iterations() -> usize {
    DEFAULT_TSNE_ITERATIONS
}
fn d_learning_rate() -> f64 {
    DEFAULT_LEARNING_RATE
}
fn d_k_clusters() -> usize {
    DEFAULT_K_CLUSTERS
}
fn d_assign_threshold() -> f64 {
    DEFAULT_ASSIGN_THRESHOLD
}
fn d_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn d_labels_per_cluster() -> usize {
    DEFAULT_LABELS_PER_CLUSTER
}
fn d_seed() -> u64 {
    DEFAULT_SEED
}
fn d_corpus() -> PathBuf {
    PathBuf::from("corpus.jsonl")
}
fn d_vectors() -> PathBuf {
    PathBuf::from("vectors.vec")
}
fn d_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Full pipeline configuration. Every field has a default, so `{}` is a
/// valid config file; CLI flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "d_corpus")]
    pub corpus: PathBuf,
    #[serde(default = "d_vectors")]
    pub vectors: PathBuf,
    #[serde(default = "d_out_dir")]
    pub out_dir: PathBuf,
    /// Keywords extracted per document.
    #[serde(default = "d_k_keywords")]
    pub k_keywords: usize,
    #[serde(default = "d_method")]
    pub method: Method,
    #[serde(default = "d_perplexity")]
    pub perplexity: f64,
    #[serde(default = "d_tsne_iterations")]
    pub tsne_iterations: usize,
    #[serde(default = "d_learning_rate")]
    pub learning_rate: f64,
    #[serde(rename = "K_clusters", default = "d_k_clusters")]
    pub k_clusters: usize,
    /// Minimum posterior for cluster membership (strictly greater than).
    #[serde(default = "d_assign_threshold")]
    pub assign_threshold: f64,
    /// Enrichment significance level.
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_labels_per_cluster")]
    pub labels_per_cluster: usize,
    #[serde(default = "d_seed")]
    pub seed: u64,
    /// Optional stopword file (one word per line); bundled list otherwise.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// Optional cap on loaded vector vocabulary.
    #[serde(default)]
    pub vector_limit: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl PipelineConfig {
    /// Parse a JSON config file; `{}` yields all defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let trimmed = text.trim();
        let source = if trimmed.is_empty() { "{}" } else { trimmed };
        serde_json::from_str(source)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Range-check every field, naming the offender.
    pub fn validate(&self) -> Result<()> {
        if self.k_keywords == 0 {
            return Err(Error::Validation("k_keywords must be ≥ 1".into()));
        }
        if !(self.perplexity.is_finite() && self.perplexity > 1.0) {
            return Err(Error::Validation(format!(
                "perplexity must be a finite number > 1, got {}",
                self.perplexity
            )));
        }
        if self.tsne_iterations == 0 {
            return Err(Error::Validation("tsne_iterations must be ≥ 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Validation(format!(
                "learning_rate must be a finite number > 0, got {}",
                self.learning_rate
            )));
        }
        if self.k_clusters == 0 {
            return Err(Error::Validation("K_clusters must be ≥ 1".into()));
        }
        if !(self.assign_threshold.is_finite()
            && (0.0..=1.0).contains(&self.assign_threshold))
        {
            return Err(Error::Validation(format!(
                "assign_threshold must be in [0,1], got {}",
                self.assign_threshold
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Validation(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if self.labels_per_cluster == 0 {
            return Err(Error::Validation("labels_per_cluster must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// One artifact in the manifest: path relative to the output directory and
/// the SHA-256 of its bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

/// Deterministic corpus/run statistics echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PipelineStats {
    pub documents: usize,
    pub docs_with_gold: usize,
    pub vector_dim: usize,
    pub zero_vector_docs: usize,
    pub tsne_final_kl: f64,
    pub gmm_log_likelihood: f64,
    pub clusters_nonempty: usize,
    pub unassigned_docs: usize,
}

/// Everything a finished run produced: the resolved config echo, one entry
/// per artifact with its content hash, and run statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    pub artifacts: BTreeMap<String, ManifestEntry>,
    pub stats: PipelineStats,
}

// ---------------------------------------------------------------------------
// Stage file formats (shared by `run_pipeline` and the per-stage subcommands)
// ---------------------------------------------------------------------------

/// `doc_id \t oov_fraction \t v1 ... vd`, nine significant digits.
pub fn write_doc_vectors_tsv(vectors: &[DocVector], path: &Path) -> Result<()> {
    let mut out = String::new();
    for dv in vectors {
        out.push_str(&dv.doc_id);
        out.push('\t');
        out.push_str(&fmt_sig9(dv.oov_fraction));
        for v in &dv.vector {
            out.push('\t');
            out.push_str(&fmt_sig9(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read [`write_doc_vectors_tsv`] output.
pub fn read_doc_vectors_tsv(path: &Path) -> Result<Vec<DocVector>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vectors: Vec<DocVector> = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad =
            |what: &str| Error::Parse(format!("{}:{}: {what}", path.display(), index + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(bad("expected doc_id, oov_fraction, and ≥ 1 value"));
        }
        let oov_fraction: f64 = fields[1].parse().map_err(|_| bad("bad oov_fraction"))?;
        let vector = fields[2..]
            .iter()
            .map(|f| f.parse().map_err(|_| bad("bad vector value")))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = vectors.first() {
            if first.vector.len() != vector.len() {
                return Err(bad("inconsistent vector dimension"));
            }
        }
        vectors.push(DocVector {
            doc_id: fields[0].to_string(),
            vector,
            oov_fraction,
        });
    }
    if vectors.is_empty() {
        return Err(Error::Parse(format!("{}: no rows", path.display())));
    }
    Ok(vectors)
}

/// `doc_id \t x \t y`, nine significant digits.
pub fn write_projection_tsv(ids: &[String], coords: &[[f64; 2]], path: &Path) -> Result<()> {
    if ids.len() != coords.len() {
        return Err(Error::Validation(
            "ids and coords must have equal length".into(),
        ));
    }
    let mut out = String::new();
    for (id, c) in ids.iter().zip(coords) {
        out.push_str(&format!("{id}\t{}\t{}\n", fmt_sig9(c[0]), fmt_sig9(c[1])));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read [`write_projection_tsv`] output.
pub fn read_projection_tsv(path: &Path) -> Result<(Vec<String>, Vec<[f64; 2]>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad =
            |what: &str| Error::Parse(format!("{}:{}: {what}", path.display(), index + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad("expected doc_id, x, y"));
        }
        let x: f64 = fields[1].parse().map_err(|_| bad("bad x"))?;
        let y: f64 = fields[2].parse().map_err(|_| bad("bad y"))?;
        ids.push(fields[0].to_string());
        coords.push([x, y]);
    }
    if ids.is_empty() {
        return Err(Error::Parse(format!("{}: no rows", path.display())));
    }
    Ok((ids, coords))
}

/// `doc_id \t x \t y \t cluster` with `-` for unassigned documents.
pub fn write_clusters_tsv(
    ids: &[String],
    coords: &[[f64; 2]],
    assignments: &[Option<usize>],
    path: &Path,
) -> Result<()> {
    if ids.len() != coords.len() || ids.len() != assignments.len() {
        return Err(Error::Validation(
            "ids, coords, and assignments must have equal length".into(),
        ));
    }
    let mut out = String::new();
    for ((id, c), a) in ids.iter().zip(coords).zip(assignments) {
        let cluster = match a {
            Some(c) => c.to_string(),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{id}\t{}\t{}\t{cluster}\n",
            fmt_sig9(c[0]),
            fmt_sig9(c[1])
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read [`write_clusters_tsv`] output.
#[allow(clippy::type_complexity)]
pub fn read_clusters_tsv(path: &Path) -> Result<(Vec<String>, Vec<[f64; 2]>, Vec<Option<usize>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (mut ids, mut coords, mut assignments) = (Vec::new(), Vec::new(), Vec::new());
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad =
            |what: &str| Error::Parse(format!("{}:{}: {what}", path.display(), index + 1));
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad("expected doc_id, x, y, cluster"));
        }
        let x: f64 = fields[1].parse().map_err(|_| bad("bad x"))?;
        let y: f64 = fields[2].parse().map_err(|_| bad("bad y"))?;
        let cluster = match fields[3] {
            "-" => None,
            c => Some(c.parse().map_err(|_| bad("bad cluster"))?),
        };
        ids.push(fields[0].to_string());
        coords.push([x, y]);
        assignments.push(cluster);
    }
    if ids.is_empty() {
        return Err(Error::Parse(format!("{}: no rows", path.display())));
    }
    Ok((ids, coords, assignments))
}

/// Serialized shape of one cluster's labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelOut {
    pub cluster: usize,
    pub labels: Vec<LabelEntryOut>,
}

/// One enriched keyword as written to labels.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntryOut {
    pub text: String,
    pub p: f64,
    pub k: usize,
    pub n: usize,
    #[serde(rename = "K")]
    pub k_bg: usize,
    #[serde(rename = "N")]
    pub n_bg: usize,
}

/// Convert internal labels to the output shape (one object per cluster).
pub fn labels_to_output(labels: &ClusterLabels) -> Vec<LabelOut> {
    labels
        .iter()
        .map(|(cluster, keywords)| LabelOut {
            cluster: *cluster,
            labels: keywords
                .iter()
                .map(|kw| LabelEntryOut {
                    text: kw.text.clone(),
                    p: kw.p_value,
                    k: kw.k,
                    n: kw.n,
                    k_bg: kw.k_bg,
                    n_bg: kw.n_bg,
                })
                .collect(),
        })
        .collect()
}

fn write_json_pretty<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write labels.json.
pub fn write_labels_json(labels: &ClusterLabels, path: &Path) -> Result<()> {
    write_json_pretty(&labels_to_output(labels), path)
}

/// Write exemplars.json (`{"<cluster>": [{"id":…, "silhouette":…}]}`).
pub fn write_exemplars_json(exemplars: &Exemplars, path: &Path) -> Result<()> {
    write_json_pretty(exemplars, path)
}

// ---------------------------------------------------------------------------
// Extraction dispatch
// ---------------------------------------------------------------------------

fn tag_doc(err: Error, doc_id: &str) -> Error {
    match err {
        Error::Validation(m) => Error::Validation(format!("document '{doc_id}': {m}")),
        Error::Numeric(m) => Error::Numeric(format!("document '{doc_id}': {m}")),
        other => other,
    }
}

/// Run one extraction method over the whole corpus (parallel over documents,
/// output order = input order). The embedding method additionally needs the
/// per-document vectors (aligned with `tdocs`) and the word-vector store.
pub fn extract_all(
    tdocs: &[TokenizedDoc],
    method: Method,
    k: usize,
    embed_inputs: Option<(&[DocVector], &WordVectorStore)>,
) -> Result<Vec<KeywordSet>> {
    match method {
        Method::Tfidf => {
            let df = build_df(tdocs)?;
            let n_docs = tdocs.len();
            tdocs
                .par_iter()
                .map(|t| extract_tfidf(t, &df, n_docs, k).map_err(|e| tag_doc(e, &t.doc_id)))
                .collect()
        }
        Method::Yake => tdocs
            .par_iter()
            .map(|t| extract_yake(t, k).map_err(|e| tag_doc(e, &t.doc_id)))
            .collect(),
        Method::Rake => tdocs
            .par_iter()
            .map(|t| {
                extract_rake(t, k, RakeMetric::DegreeOverFreq).map_err(|e| tag_doc(e, &t.doc_id))
            })
            .collect(),
        Method::Textrank => tdocs
            .par_iter()
            .map(|t| extract_textrank(t, k).map_err(|e| tag_doc(e, &t.doc_id)))
            .collect(),
        Method::Embed => {
            let (doc_vectors, store) = embed_inputs.ok_or_else(|| {
                Error::Validation(
                    "the embed method needs document vectors and a word-vector store".into(),
                )
            })?;
            if doc_vectors.len() != tdocs.len() {
                return Err(Error::Validation(
                    "document vectors are not aligned with the corpus".into(),
                ));
            }
            tdocs
                .par_iter()
                .zip(doc_vectors.par_iter())
                .map(|(t, dv)| {
                    extract_embed(t, dv, store, k).map_err(|e| tag_doc(e, &t.doc_id))
                })
                .collect()
        }
    }
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

fn register_artifact(
    artifacts: &mut BTreeMap<String, ManifestEntry>,
    out_dir: &Path,
    name: &str,
    file_name: &str,
) -> Result<()> {
    let path = out_dir.join(file_name);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    artifacts.insert(
        name.to_string(),
        ManifestEntry {
            path: file_name.to_string(),
            sha256: sha256_hex(&bytes),
        },
    );
    Ok(())
}

/// Run every stage in order, writing artifacts into `config.out_dir`:
/// doc_vectors.tsv, projection.tsv, clusters.tsv, exemplars.json,
/// keywords.jsonl, labels.json, map.svg, then (when the corpus has gold
/// keywords) eval.csv + pr.csv + curves.svg, and finally manifest.json.
/// A stage failure aborts with the stage name; earlier artifacts remain.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    let out_dir = &config.out_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut artifacts = BTreeMap::new();
    let mut stats = PipelineStats::default();

    // -- ingest ------------------------------------------------------------
    let stage = "ingest";
    let (corpus, load_stats) = load_jsonl(&config.corpus).map_err(|e| e.in_stage(stage))?;
    if load_stats.skipped_empty_abstract > 0 {
        eprintln!(
            "[{stage}] skipped {} document(s) with empty abstracts",
            load_stats.skipped_empty_abstract
        );
    }
    let stopwords = match &config.stopwords {
        Some(path) => StopwordList::from_file(path).map_err(|e| e.in_stage(stage))?,
        None => StopwordList::bundled(),
    };
    let corpus_stats = corpus.stats();
    stats.documents = corpus_stats.documents;
    stats.docs_with_gold = corpus_stats.with_gold;
    let tdocs: Vec<TokenizedDoc> = corpus
        .documents
        .par_iter()
        .map(|d| tokenize(d, &stopwords))
        .collect();
    let ids: Vec<String> = corpus.documents.iter().map(|d| d.id.clone()).collect();

    // -- vectors -----------------------------------------------------------
    let stage = "vectors";
    let (store, vec_stats) =
        load_vec(&config.vectors, config.vector_limit).map_err(|e| e.in_stage(stage))?;
    if vec_stats.duplicate_words > 0 {
        eprintln!(
            "[{stage}] {} duplicate word(s) in vector file; first kept",
            vec_stats.duplicate_words
        );
    }
    stats.vector_dim = store.dim();
    let doc_vectors: Vec<DocVector> = tdocs.par_iter().map(|t| doc_vector(t, &store)).collect();
    stats.zero_vector_docs = doc_vectors
        .iter()
        .filter(|dv| dv.vector.iter().all(|&v| v == 0.0))
        .count();
    if stats.zero_vector_docs > 0 {
        eprintln!(
            "[{stage}] {} document(s) are entirely out of vocabulary (zero vector)",
            stats.zero_vector_docs
        );
    }
    write_doc_vectors_tsv(&doc_vectors, &out_dir.join("doc_vectors.tsv"))
        .map_err(|e| e.in_stage(stage))?;
    register_artifact(&mut artifacts, out_dir, "doc_vectors", "doc_vectors.tsv")
        .map_err(|e| e.in_stage(stage))?;

    // -- project -----------------------------------------------------------
    let stage = "project";
    let x: Vec<Vec<f64>> = doc_vectors.iter().map(|dv| dv.vector.clone()).collect();
    let params = TsneParams {
        perplexity: config.perplexity,
        iterations: config.tsne_iterations,
        learning_rate: config.learning_rate,
        seed: config.seed,
    };
    let projection = tsne(&x, &params).map_err(|e| e.in_stage(stage))?;
    stats.tsne_final_kl = projection.final_kl;
    write_projection_tsv(&ids, &projection.coords, &out_dir.join("projection.tsv"))
        .map_err(|e| e.in_stage(stage))?;
    register_artifact(&mut artifacts, out_dir, "projection", "projection.tsv")
        .map_err(|e| e.in_stage(stage))?;

    // -- cluster -----------------------------------------------------------
    let stage = "cluster";
    let mut model =
        fit_gmm(&projection.coords, config.k_clusters, config.seed).map_err(|e| e.in_stage(stage))?;
    model.set_threshold(config.assign_threshold);
    stats.gmm_log_likelihood = model.log_likelihood;
    stats.unassigned_docs = model.assignments.iter().filter(|a| a.is_none()).count();
    let nonempty: std::collections::BTreeSet<usize> =
        model.assignments.iter().flatten().copied().collect();
    stats.clusters_nonempty = nonempty.len();
    write_clusters_tsv(
        &ids,
        &projection.coords,
        &model.assignments,
        &out_dir.join("clusters.tsv"),
    )
    .map_err(|e| e.in_stage(stage))?;
    register_artifact(&mut artifacts, out_dir, "clusters", "clusters.tsv")
        .map_err(|e| e.in_stage(stage))?;
    let exemplars = if nonempty.len() >= 2 {
        silhouette_exemplars(
            &projection.coords,
            &ids,
            &model.assignments,
            EXEMPLARS_PER_CLUSTER,
        )
        .map_err(|e| e.in_stage(stage))?
    } else {
        eprintln!("[{stage}] fewer than 2 non-empty clusters; exemplars empty");
        Exemplars::new()
    };
    write_exemplars_json(&exemplars, &out_dir.join("exemplars.json"))
        .map_err(|e| e.in_stage(stage))?;
    register_artifact(&mut artifacts, out_dir, "exemplars", "exemplars.json")
        .map_err(|e| e.in_stage(stage))?;

    // -- keywords ----------------------------------------------------------
    let stage = "keywords";
    let keyword_sets = extract_all(
        &tdocs,
        config.method,
        config.k_keywords,
        Some((&doc_vectors, &store)),
    )
    .map_err(|e| e.in_stage(stage))?;
    write_keywords(&keyword_sets, &out_dir.join("keywords.jsonl"))
        .map_err(|e| e.in_stage(stage))?;
    register_artifact(&mut artifacts, out_dir, "keywords", "keywords.jsonl")
        .map_err(|e| e.in_stage(stage))?;

    // -- annotate ----------------------------------------------------------
    let stage = "annotate";
    let presence = keyword_presence(&keyword_sets).map_err(|e| e.in_stage(stage))?;
    let assignment_map: BTreeMap<String, Option<usize>> = ids
        .iter()
        .cloned()
        .zip(model.assignments.iter().copied())
        .collect();
    let label_options = LabelOptions {
        alpha: config.alpha,
        top_m: config.labels_per_cluster,
        fdr: false,
    };
    let labels =
        label_clusters(&presence, &assignment_map, &label_options).map_err(|e| e.in_stage(stage))?;
    write_labels_json(&labels, &out_dir.join("labels.json")).map_err(|e| e.in_stage(stage))?;
    register_artifact(&mut artifacts, out_dir, "labels", "labels.json")
        .map_err(|e| e.in_stage(stage))?;

    // -- map ---------------------------------------------------------------
    let stage = "map";
    let scene = MapScene {
        points: ids
            .iter()
            .zip(&projection.coords)
            .zip(&model.assignments)
            .map(|((id, c), a)| MapPoint {
                doc_id: id.clone(),
                x: c[0],
                y: c[1],
                cluster: *a,
            })
            .collect(),
        labels: nonempty
            .iter()
            .map(|&cluster| ClusterLabel {
                cluster,
                anchor: model.means[cluster],
                labels: labels
                    .get(&cluster)
                    .map(|kws| kws.iter().map(|kw| kw.text.clone()).collect())
                    .unwrap_or_default(),
            })
            .collect(),
        canvas: Canvas::default(),
    };
    render_map(&scene, &out_dir.join("map.svg")).map_err(|e| e.in_stage(stage))?;
    register_artifact(&mut artifacts, out_dir, "map", "map.svg").map_err(|e| e.in_stage(stage))?;

    // -- evaluate (only when gold keywords exist) ----------------------------
    let stage = "evaluate";
    if stats.docs_with_gold > 0 {
        let report = evaluate(&corpus, &keyword_sets, config.k_keywords, F1Mode::MeanOfF1)
            .map_err(|e| e.in_stage(stage))?;
        let reports = [report];
        write_report_csv(&reports, &out_dir.join("eval.csv")).map_err(|e| e.in_stage(stage))?;
        register_artifact(&mut artifacts, out_dir, "eval", "eval.csv")
            .map_err(|e| e.in_stage(stage))?;
        write_pr_csv(&reports, &out_dir.join("pr.csv")).map_err(|e| e.in_stage(stage))?;
        register_artifact(&mut artifacts, out_dir, "pr_curve", "pr.csv")
            .map_err(|e| e.in_stage(stage))?;
        render_curves(&reports, &out_dir.join("curves.svg")).map_err(|e| e.in_stage(stage))?;
        register_artifact(&mut artifacts, out_dir, "curves", "curves.svg")
            .map_err(|e| e.in_stage(stage))?;
    } else {
        eprintln!("[{stage}] corpus has no gold keywords; evaluation artifacts skipped");
    }

    // -- manifest ------------------------------------------------------------
    let manifest = Manifest {
        config: config.clone(),
        artifacts,
        stats,
    };
    write_json_pretty(&manifest, &out_dir.join("manifest.json"))
        .map_err(|e| e.in_stage("manifest"))?;
    Ok(manifest)
}
