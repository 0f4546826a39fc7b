//! docmap — turn an unlabeled text corpus into an annotated 2D document map.
//!
//! The library embeds documents as averaged word vectors, projects them to 2D
//! with exact t-SNE, clusters the map with a full-covariance Gaussian mixture,
//! extracts per-document keywords with five unsupervised methods (TF-IDF,
//! YAKE!, RAKE, TextRank, embedding similarity), and labels each cluster with
//! keywords that are statistically enriched versus the whole corpus
//! (hypergeometric upper-tail test). A benchmark harness scores extractors
//! against gold keywords (P@n / R@n / F1@n) and everything renders to
//! standalone SVG.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`corpus`] — ingestion, tokenization, stemming, candidate phrases
//! * [`pubmed`] — efetch XML parsing and a rate-limited E-utilities client
//! * [`vectors`] — `.vec` loading and document vectors
//! * [`projection`] — exact t-SNE
//! * [`clustering`] — GMM/EM, posterior-threshold assignment, exemplars
//! * [`extraction`] — the five keyword extractors
//! * [`annotation`] — hypergeometric enrichment labels
//! * [`evaluation`] — P@n/R@n/F1@n versus gold keywords
//! * [`render`] — SVG map and metric curves
//! * [`pipeline`] — end-to-end orchestration, config, manifest

pub mod annotation;
pub mod clustering;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod pipeline;
pub mod projection;
pub mod pubmed;
pub mod render;
pub mod util;
pub mod vectors;

pub use error::{Error, Result};
