//! `docmap` command-line interface: every pipeline stage as a subcommand,
//! plus `pipeline` to run them all from one JSON config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use docmap::annotation::{keyword_presence, label_clusters, LabelOptions};
use docmap::clustering::{fit_gmm, silhouette_exemplars, Exemplars};
use docmap::corpus::{load_jsonl, tokenize, write_jsonl, StopwordList, TokenizedDoc};
use docmap::evaluation::{
    evaluate, read_report_csv, write_pr_csv, write_report_csv, EvalReport, F1Mode,
};
use docmap::extraction::{read_keywords, Method};
use docmap::pipeline::{
    extract_all, read_clusters_tsv, read_doc_vectors_tsv, read_projection_tsv, run_pipeline,
    write_clusters_tsv, write_doc_vectors_tsv, write_exemplars_json, write_labels_json,
    write_projection_tsv, LabelOut, PipelineConfig, EXEMPLARS_PER_CLUSTER,
};
use docmap::projection::{tsne, TsneParams};
use docmap::pubmed::{parse_efetch_xml, FetchClient, HttpTransport, SystemClock};
use docmap::render::{render_curves, render_map, Canvas, ClusterLabel, MapPoint, MapScene};
use docmap::vectors::{doc_vector, load_vec, DocVector};
use docmap::{Error, Result};

#[derive(Parser)]
#[command(
    name = "docmap",
    version,
    about = "Turn a text corpus into an annotated 2-D document map"
)]
struct Cli {
    /// Worker threads for parallel stages (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download PubMed abstracts matching a query into efetch XML batches.
    Fetch(FetchArgs),
    /// Convert efetch XML into the corpus JSONL format.
    Ingest(IngestArgs),
    /// Average word vectors into one vector per document.
    Vectors(VectorsArgs),
    /// Project document vectors to 2-D with t-SNE.
    Project(ProjectArgs),
    /// Fit a Gaussian mixture to the projection and assign clusters.
    Cluster(ClusterArgs),
    /// Extract per-document keywords with one method.
    Keywords(KeywordsArgs),
    /// Label clusters by hypergeometric keyword enrichment.
    Annotate(AnnotateArgs),
    /// Score extracted keywords against gold keywords.
    Evaluate(EvaluateArgs),
    /// Render the cluster map SVG.
    RenderMap(RenderMapArgs),
    /// Render precision/recall/F1 curve panels from an evaluation CSV.
    RenderCurves(RenderCurvesArgs),
    /// Run every stage end to end from a config file plus flag overrides.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct FetchArgs {
    /// PubMed query, e.g. "longevity[MeSH Terms]".
    #[arg(long)]
    query: String,
    /// Maximum number of records to download.
    #[arg(long, default_value_t = 10_000)]
    max_records: usize,
    /// Directory for the numbered batch XML files.
    #[arg(long)]
    out_dir: PathBuf,
    /// NCBI API key (falls back to the NCBI_API_KEY environment variable).
    #[arg(long)]
    api_key: Option<String>,
}

#[derive(Args)]
struct IngestArgs {
    /// efetch XML file.
    #[arg(long)]
    input: PathBuf,
    /// Output corpus JSONL path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VectorsArgs {
    /// Corpus JSONL path.
    #[arg(long)]
    corpus: PathBuf,
    /// Word-vector .vec file.
    #[arg(long)]
    vectors: PathBuf,
    /// Output document-vector TSV path.
    #[arg(long)]
    out: PathBuf,
    /// Optional stopword file (one word per line).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Load at most this many vocabulary entries.
    #[arg(long)]
    vector_limit: Option<usize>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Document-vector TSV (output of `vectors`).
    #[arg(long)]
    input: PathBuf,
    /// Output projection TSV path.
    #[arg(long)]
    out: PathBuf,
    /// t-SNE perplexity (effective neighborhood size).
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_PERPLEXITY)]
    perplexity: f64,
    /// Gradient-descent iterations.
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_TSNE_ITERATIONS)]
    iterations: usize,
    /// Gradient-descent learning rate.
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_LEARNING_RATE)]
    learning_rate: f64,
    /// Seed for the deterministic random init.
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct ClusterArgs {
    /// Projection TSV (output of `project`).
    #[arg(long)]
    input: PathBuf,
    /// Output cluster TSV path.
    #[arg(long)]
    out: PathBuf,
    /// Output exemplars JSON path.
    #[arg(long)]
    exemplars: PathBuf,
    /// Number of mixture components.
    #[arg(short = 'K', long = "clusters", default_value_t = docmap::pipeline::DEFAULT_K_CLUSTERS)]
    k_clusters: usize,
    /// Minimum posterior for assignment (strictly greater than).
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_ASSIGN_THRESHOLD)]
    threshold: f64,
    /// Seed for restart initialization.
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct KeywordsArgs {
    /// Corpus JSONL path.
    #[arg(long)]
    corpus: PathBuf,
    /// Output keywords JSONL path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Yake)]
    method: Method,
    /// Keywords per document.
    #[arg(long = "k", default_value_t = docmap::pipeline::DEFAULT_K_KEYWORDS)]
    k: usize,
    /// Optional stopword file (one word per line).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Word-vector .vec file (required by the embed method).
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Load at most this many vocabulary entries.
    #[arg(long)]
    vector_limit: Option<usize>,
}

#[derive(Args)]
struct AnnotateArgs {
    /// Keywords JSONL (output of `keywords`).
    #[arg(long)]
    keywords: PathBuf,
    /// Cluster TSV (output of `cluster`).
    #[arg(long)]
    clusters: PathBuf,
    /// Output labels JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Enrichment significance level.
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_ALPHA)]
    alpha: f64,
    /// Labels kept per cluster.
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_LABELS_PER_CLUSTER)]
    labels_per_cluster: usize,
    /// Apply Benjamini–Hochberg FDR correction before the alpha cut.
    #[arg(long)]
    fdr: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Corpus JSONL with gold keywords.
    #[arg(long)]
    corpus: PathBuf,
    /// Keywords JSONL file(s); repeat the flag for several methods.
    #[arg(long, required = true)]
    keywords: Vec<PathBuf>,
    /// Output evaluation CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Optional recall-ordered precision–recall CSV path.
    #[arg(long)]
    pr_out: Option<PathBuf>,
    /// Largest cutoff n to evaluate.
    #[arg(long, default_value_t = docmap::pipeline::DEFAULT_K_KEYWORDS)]
    max_n: usize,
    /// Report F1 of mean precision/recall instead of mean per-document F1.
    #[arg(long)]
    f1_of_means: bool,
}

#[derive(Args)]
struct RenderMapArgs {
    /// Cluster TSV (output of `cluster`).
    #[arg(long)]
    clusters: PathBuf,
    /// Labels JSON (output of `annotate`); omit for an unlabeled map.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Canvas width in SVG units.
    #[arg(long, default_value_t = 1200.0)]
    width: f64,
    /// Canvas height in SVG units.
    #[arg(long, default_value_t = 900.0)]
    height: f64,
    /// Margin between the canvas edge and the data extent.
    #[arg(long, default_value_t = 60.0)]
    margin: f64,
}

#[derive(Args)]
struct RenderCurvesArgs {
    /// Evaluation CSV (output of `evaluate`).
    #[arg(long)]
    eval: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON config file; every field optional, flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus JSONL path.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Word-vector .vec file.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Directory for all pipeline artifacts.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Keywords per document.
    #[arg(long = "k")]
    k: Option<usize>,
    /// Keyword extraction method.
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// t-SNE perplexity (effective neighborhood size).
    #[arg(long)]
    perplexity: Option<f64>,
    /// t-SNE gradient-descent iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// t-SNE learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Number of mixture components.
    #[arg(short = 'K', long = "clusters")]
    k_clusters: Option<usize>,
    /// Minimum posterior for assignment (strictly greater than).
    #[arg(long)]
    threshold: Option<f64>,
    /// Enrichment significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Labels kept per cluster.
    #[arg(long)]
    labels_per_cluster: Option<usize>,
    /// Seed for every stochastic stage.
    #[arg(long)]
    seed: Option<u64>,
    /// Stopword file overriding the bundled English list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Load at most this many vocabulary entries.
    #[arg(long)]
    vector_limit: Option<usize>,
}

impl PipelineArgs {
    /// File config (or defaults) with any flag overrides applied on top.
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.corpus {
            config.corpus = v.clone();
        }
        if let Some(v) = &self.vectors {
            config.vectors = v.clone();
        }
        if let Some(v) = &self.out_dir {
            config.out_dir = v.clone();
        }
        if let Some(v) = self.k {
            config.k_keywords = v;
        }
        if let Some(v) = self.method {
            config.method = v;
        }
        if let Some(v) = self.perplexity {
            config.perplexity = v;
        }
        if let Some(v) = self.iterations {
            config.tsne_iterations = v;
        }
        if let Some(v) = self.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = self.k_clusters {
            config.k_clusters = v;
        }
        if let Some(v) = self.threshold {
            config.assign_threshold = v;
        }
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.labels_per_cluster {
            config.labels_per_cluster = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = &self.stopwords {
            config.stopwords = Some(v.clone());
        }
        if let Some(v) = self.vector_limit {
            config.vector_limit = Some(v);
        }
        config.validate()?;
        Ok(config)
    }
}

fn load_stopwords(path: &Option<PathBuf>) -> Result<StopwordList> {
    match path {
        Some(p) => StopwordList::from_file(p),
        None => Ok(StopwordList::bundled()),
    }
}

fn tokenize_corpus(corpus_path: &Path, stopwords: &Option<PathBuf>) -> Result<Vec<TokenizedDoc>> {
    let (corpus, load_stats) = load_jsonl(corpus_path)?;
    if load_stats.skipped_empty_abstract > 0 {
        eprintln!(
            "skipped {} document(s) with empty abstracts",
            load_stats.skipped_empty_abstract
        );
    }
    let stopwords = load_stopwords(stopwords)?;
    Ok(corpus
        .documents
        .iter()
        .map(|d| tokenize(d, &stopwords))
        .collect())
}

fn run_fetch(args: &FetchArgs) -> Result<()> {
    let api_key = args
        .api_key
        .clone()
        .or_else(|| std::env::var("NCBI_API_KEY").ok().filter(|k| !k.is_empty()));
    let client = FetchClient::new(HttpTransport::default(), SystemClock::default(), api_key);
    let summary = client.fetch(&args.query, args.max_records, &args.out_dir)?;
    println!(
        "fetched {} record id(s) into {} batch file(s) under {}",
        summary.pmids,
        summary.batch_files.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run_ingest(args: &IngestArgs) -> Result<()> {
    let (corpus, stats) = parse_efetch_xml(&args.input)?;
    write_jsonl(&corpus, &args.out)?;
    println!(
        "ingested {} document(s) ({} skipped without abstracts) into {}",
        stats.parsed,
        stats.skipped_no_abstract,
        args.out.display()
    );
    Ok(())
}

fn run_vectors(args: &VectorsArgs) -> Result<()> {
    let tdocs = tokenize_corpus(&args.corpus, &args.stopwords)?;
    let (store, vec_stats) = load_vec(&args.vectors, args.vector_limit)?;
    if vec_stats.duplicate_words > 0 {
        eprintln!(
            "{} duplicate word(s) in vector file; first kept",
            vec_stats.duplicate_words
        );
    }
    let doc_vectors: Vec<DocVector> = tdocs.iter().map(|t| doc_vector(t, &store)).collect();
    write_doc_vectors_tsv(&doc_vectors, &args.out)?;
    println!(
        "wrote {} document vector(s) of dimension {} to {}",
        doc_vectors.len(),
        store.dim(),
        args.out.display()
    );
    Ok(())
}

fn run_project(args: &ProjectArgs) -> Result<()> {
    let doc_vectors = read_doc_vectors_tsv(&args.input)?;
    let ids: Vec<String> = doc_vectors.iter().map(|dv| dv.doc_id.clone()).collect();
    let x: Vec<Vec<f64>> = doc_vectors.into_iter().map(|dv| dv.vector).collect();
    let params = TsneParams {
        perplexity: args.perplexity,
        iterations: args.iterations,
        learning_rate: args.learning_rate,
        seed: args.seed,
    };
    let projection = tsne(&x, &params)?;
    write_projection_tsv(&ids, &projection.coords, &args.out)?;
    println!(
        "projected {} point(s) in {} iteration(s); final KL divergence {:.6}",
        ids.len(),
        projection.iterations,
        projection.final_kl
    );
    Ok(())
}

fn run_cluster(args: &ClusterArgs) -> Result<()> {
    let (ids, coords) = read_projection_tsv(&args.input)?;
    let mut model = fit_gmm(&coords, args.k_clusters, args.seed)?;
    model.set_threshold(args.threshold);
    write_clusters_tsv(&ids, &coords, &model.assignments, &args.out)?;
    let nonempty: std::collections::BTreeSet<usize> =
        model.assignments.iter().flatten().copied().collect();
    let exemplars = if nonempty.len() >= 2 {
        silhouette_exemplars(&coords, &ids, &model.assignments, EXEMPLARS_PER_CLUSTER)?
    } else {
        eprintln!("fewer than 2 non-empty clusters; exemplars empty");
        Exemplars::new()
    };
    write_exemplars_json(&exemplars, &args.exemplars)?;
    let unassigned = model.assignments.iter().filter(|a| a.is_none()).count();
    println!(
        "fit {} component(s); {} document(s) assigned, {} unassigned; log-likelihood {:.6}",
        args.k_clusters,
        ids.len() - unassigned,
        unassigned,
        model.log_likelihood
    );
    Ok(())
}

fn run_keywords(args: &KeywordsArgs) -> Result<()> {
    let tdocs = tokenize_corpus(&args.corpus, &args.stopwords)?;
    let sets = match args.method {
        Method::Embed => {
            let vec_path = args.vectors.as_ref().ok_or_else(|| {
                Error::Validation("the embed method requires --vectors".into())
            })?;
            let (store, _) = load_vec(vec_path, args.vector_limit)?;
            let doc_vectors: Vec<DocVector> =
                tdocs.iter().map(|t| doc_vector(t, &store)).collect();
            extract_all(&tdocs, args.method, args.k, Some((&doc_vectors, &store)))?
        }
        _ => extract_all(&tdocs, args.method, args.k, None)?,
    };
    docmap::extraction::write_keywords(&sets, &args.out)?;
    println!(
        "extracted {} keyword set(s) with method {} into {}",
        sets.len(),
        args.method,
        args.out.display()
    );
    Ok(())
}

fn run_annotate(args: &AnnotateArgs) -> Result<()> {
    let sets = read_keywords(&args.keywords)?;
    let (ids, _, assignments) = read_clusters_tsv(&args.clusters)?;
    let assignment_map: BTreeMap<String, Option<usize>> =
        ids.into_iter().zip(assignments).collect();
    let presence = keyword_presence(&sets)?;
    let options = LabelOptions {
        alpha: args.alpha,
        top_m: args.labels_per_cluster,
        fdr: args.fdr,
    };
    let labels = label_clusters(&presence, &assignment_map, &options)?;
    write_labels_json(&labels, &args.out)?;
    let total: usize = labels.values().map(Vec::len).sum();
    println!(
        "labeled {} cluster(s) with {} enriched keyword(s) total",
        labels.len(),
        total
    );
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (corpus, _) = load_jsonl(&args.corpus)?;
    let f1_mode = if args.f1_of_means {
        F1Mode::F1OfMeans
    } else {
        F1Mode::MeanOfF1
    };
    let mut reports: Vec<EvalReport> = Vec::new();
    for path in &args.keywords {
        let sets = read_keywords(path)?;
        reports.push(evaluate(&corpus, &sets, args.max_n, f1_mode)?);
    }
    write_report_csv(&reports, &args.out)?;
    if let Some(pr_out) = &args.pr_out {
        write_pr_csv(&reports, pr_out)?;
    }
    for report in &reports {
        let last = report.rows.last().expect("max_n ≥ 1 guarantees rows");
        println!(
            "{}: over {} document(s) at n={}: precision {:.4}, recall {:.4}, F1 {:.4}",
            report.method, report.docs_evaluated, last.n, last.precision, last.recall, last.f1
        );
    }
    Ok(())
}

fn run_render_map(args: &RenderMapArgs) -> Result<()> {
    let (ids, coords, assignments) = read_clusters_tsv(&args.clusters)?;
    let points: Vec<MapPoint> = ids
        .iter()
        .zip(&coords)
        .zip(&assignments)
        .map(|((id, c), a)| MapPoint {
            doc_id: id.clone(),
            x: c[0],
            y: c[1],
            cluster: *a,
        })
        .collect();
    // Anchor each label block at the centroid of its cluster's points.
    let mut labels = Vec::new();
    if let Some(labels_path) = &args.labels {
        let text =
            std::fs::read_to_string(labels_path).map_err(|e| Error::io(labels_path, e))?;
        let parsed: Vec<LabelOut> = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", labels_path.display())))?;
        let mut sums: BTreeMap<usize, ([f64; 2], usize)> = BTreeMap::new();
        for (c, a) in coords.iter().zip(&assignments) {
            if let Some(cluster) = a {
                let entry = sums.entry(*cluster).or_insert(([0.0, 0.0], 0));
                entry.0[0] += c[0];
                entry.0[1] += c[1];
                entry.1 += 1;
            }
        }
        for group in parsed {
            let Some((sum, count)) = sums.get(&group.cluster) else {
                eprintln!("labels for cluster {} ignored: no member points", group.cluster);
                continue;
            };
            labels.push(ClusterLabel {
                cluster: group.cluster,
                anchor: [sum[0] / *count as f64, sum[1] / *count as f64],
                labels: group.labels.into_iter().map(|l| l.text).collect(),
            });
        }
    }
    let scene = MapScene {
        points,
        labels,
        canvas: Canvas {
            width: args.width,
            height: args.height,
            margin: args.margin,
        },
    };
    render_map(&scene, &args.out)?;
    println!("rendered map of {} point(s) to {}", ids.len(), args.out.display());
    Ok(())
}

fn run_render_curves(args: &RenderCurvesArgs) -> Result<()> {
    let reports = read_report_csv(&args.eval)?;
    render_curves(&reports, &args.out)?;
    println!(
        "rendered curves for {} method(s) to {}",
        reports.len(),
        args.out.display()
    );
    Ok(())
}

fn run_pipeline_cmd(args: &PipelineArgs) -> Result<()> {
    let config = args.resolve()?;
    let manifest = run_pipeline(&config)?;
    println!(
        "pipeline finished: {} document(s), {} non-empty cluster(s), {} artifact(s) in {}",
        manifest.stats.documents,
        manifest.stats.clusters_nonempty,
        manifest.artifacts.len(),
        config.out_dir.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Validation(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Fetch(args) => run_fetch(args),
        Command::Ingest(args) => run_ingest(args),
        Command::Vectors(args) => run_vectors(args),
        Command::Project(args) => run_project(args),
        Command::Cluster(args) => run_cluster(args),
        Command::Keywords(args) => run_keywords(args),
        Command::Annotate(args) => run_annotate(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::RenderMap(args) => run_render_map(args),
        Command::RenderCurves(args) => run_render_curves(args),
        Command::Pipeline(args) => run_pipeline_cmd(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
