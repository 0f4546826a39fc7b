//! End-to-end smoke tests of the compiled binary: stage-by-stage chaining,
//! config/flag precedence, and exit codes.

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn docmap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docmap"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed (status {:?})\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Two-topic corpus (6 docs each) plus matching word vectors.
fn write_fixture(dir: &Path) {
    let mut corpus = String::new();
    for topic in 0..2 {
        let words: Vec<String> = (0..4).map(|w| format!("area{topic}term{w}")).collect();
        for d in 0..6 {
            let mut text = String::new();
            for s in 0..3 {
                write!(
                    text,
                    "{} {} {}. ",
                    words[(d + s) % 4],
                    words[(d + s + 1) % 4],
                    words[(d + s + 2) % 4]
                )
                .unwrap();
            }
            corpus.push_str(&format!(
                r#"{{"id":"t{topic}d{d}","title":"doc","abstract":"{}","keywords":["{}"]}}"#,
                text.trim(),
                words[d % 4]
            ));
            corpus.push('\n');
        }
    }
    std::fs::write(dir.join("corpus.jsonl"), corpus).unwrap();

    let mut vec_text = String::from("8 4\n");
    for topic in 0..2 {
        for w in 0..4 {
            let mut v = [0.0f64; 4];
            v[2 * topic] = 8.0;
            v[2 * topic + 1] = w as f64 * 0.1;
            vec_text.push_str(&format!(
                "area{topic}term{w} {} {} {} {}\n",
                v[0], v[1], v[2], v[3]
            ));
        }
    }
    std::fs::write(dir.join("vectors.vec"), vec_text).unwrap();
}

#[test]
fn stages_chain_through_the_documented_file_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_fixture(d);

    assert_ok(
        &docmap(
            &["vectors", "--corpus", "corpus.jsonl", "--vectors", "vectors.vec", "--out", "dv.tsv"],
            d,
        ),
        "vectors",
    );
    assert_ok(
        &docmap(
            &[
                "project", "--input", "dv.tsv", "--out", "proj.tsv", "--perplexity", "3",
                "--iterations", "120", "--seed", "5",
            ],
            d,
        ),
        "project",
    );
    assert_ok(
        &docmap(
            &[
                "cluster", "--input", "proj.tsv", "--out", "clusters.tsv", "--exemplars",
                "exemplars.json", "-K", "2", "--seed", "5",
            ],
            d,
        ),
        "cluster",
    );
    assert_ok(
        &docmap(
            &[
                "keywords", "--corpus", "corpus.jsonl", "--out", "kw.jsonl", "--method", "rake",
                "--k", "5",
            ],
            d,
        ),
        "keywords",
    );
    assert_ok(
        &docmap(
            &[
                "annotate", "--keywords", "kw.jsonl", "--clusters", "clusters.tsv", "--out",
                "labels.json",
            ],
            d,
        ),
        "annotate",
    );
    assert_ok(
        &docmap(
            &[
                "evaluate", "--corpus", "corpus.jsonl", "--keywords", "kw.jsonl", "--out",
                "eval.csv", "--pr-out", "pr.csv", "--max-n", "5",
            ],
            d,
        ),
        "evaluate",
    );
    assert_ok(
        &docmap(
            &[
                "render-map", "--clusters", "clusters.tsv", "--labels", "labels.json", "--out",
                "map.svg",
            ],
            d,
        ),
        "render-map",
    );
    assert_ok(
        &docmap(&["render-curves", "--eval", "eval.csv", "--out", "curves.svg"], d),
        "render-curves",
    );

    for file in [
        "dv.tsv", "proj.tsv", "clusters.tsv", "exemplars.json", "kw.jsonl", "labels.json",
        "eval.csv", "pr.csv", "map.svg", "curves.svg",
    ] {
        assert!(d.join(file).exists(), "{file} missing");
    }
    let eval = std::fs::read_to_string(d.join("eval.csv")).unwrap();
    assert!(eval.starts_with("method,n,precision,recall,f1\n"), "{eval}");
    let svg = std::fs::read_to_string(d.join("map.svg")).unwrap();
    assert!(svg.contains("<svg"), "map.svg is not SVG");
}

#[test]
fn pipeline_subcommand_writes_manifest_and_respects_threads_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_fixture(d);
    let out = docmap(
        &[
            "--threads", "2", "pipeline", "--corpus", "corpus.jsonl", "--vectors", "vectors.vec",
            "--out-dir", "out", "-K", "2", "--perplexity", "3", "--iterations", "120", "--k", "6",
            "--method", "tfidf",
        ],
        d,
    );
    assert_ok(&out, "pipeline");
    assert!(d.join("out/manifest.json").exists());
    assert!(d.join("out/map.svg").exists());
    assert!(d.join("out/eval.csv").exists(), "gold corpus gets evaluation");
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_fixture(d);
    std::fs::write(
        d.join("config.json"),
        r#"{"corpus":"corpus.jsonl","vectors":"vectors.vec","out_dir":"out",
            "k_keywords":20,"K_clusters":2,"perplexity":3.0,"tsne_iterations":100,
            "method":"rake"}"#,
    )
    .unwrap();
    let out = docmap(&["pipeline", "--config", "config.json", "--k", "10"], d);
    assert_ok(&out, "pipeline with overrides");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("out/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["k_keywords"], 10, "--k 10 overrides file k=20");
    assert_eq!(manifest["config"]["K_clusters"], 2, "file value kept without flag");
}

#[test]
fn out_of_range_alpha_is_a_validation_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_fixture(d);
    let out = docmap(
        &[
            "pipeline", "--corpus", "corpus.jsonl", "--vectors", "vectors.vec", "--out-dir",
            "out", "--alpha", "1.5",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(2), "validation errors exit 2");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("alpha"), "stderr names the field: {stderr}");
    assert!(!d.join("out/manifest.json").exists(), "no artifacts on rejection");
}

#[test]
fn missing_input_file_is_an_io_error_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = docmap(
        &["project", "--input", "absent.tsv", "--out", "proj.tsv"],
        d,
    );
    assert_eq!(out.status.code(), Some(3), "I/O errors exit 3");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("absent.tsv"), "{stderr}");
}

#[test]
fn ingest_converts_efetch_xml_to_corpus_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let xml = r#"<?xml version="1.0" ?>
<PubmedArticleSet>
  <PubmedArticle>
    <MedlineCitation>
      <PMID Version="1">101</PMID>
      <Article>
        <ArticleTitle>Telomere length in aging</ArticleTitle>
        <Abstract><AbstractText>Telomeres shorten with age.</AbstractText></Abstract>
      </Article>
      <KeywordList><Keyword>telomere</Keyword><Keyword>aging</Keyword></KeywordList>
    </MedlineCitation>
  </PubmedArticle>
</PubmedArticleSet>"#;
    std::fs::write(d.join("batch.xml"), xml).unwrap();
    let out = docmap(&["ingest", "--input", "batch.xml", "--out", "corpus.jsonl"], d);
    assert_ok(&out, "ingest");
    let jsonl = std::fs::read_to_string(d.join("corpus.jsonl")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(doc["id"], "101");
    assert_eq!(doc["abstract"], "Telomeres shorten with age.");
    assert_eq!(doc["keywords"][0], "telomere");
}

#[test]
fn unknown_method_is_rejected_by_argument_parsing() {
    let dir = tempfile::tempdir().unwrap();
    let out = docmap(
        &["keywords", "--corpus", "c.jsonl", "--out", "k.jsonl", "--method", "bogus"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "clap rejects unknown variants");
}
