//! Cluster labeling by hypergeometric enrichment: keywords that appear in a
//! cluster's documents statistically more often than across the whole corpus.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::KeywordSet;

/// A keyword enriched in one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedKeyword {
    pub text: String,
    pub cluster: usize,
    /// In-cluster documents containing the keyword.
    pub k: usize,
    /// Cluster size.
    pub n: usize,
    /// Background documents containing the keyword.
    #[serde(rename = "K")]
    pub k_bg: usize,
    /// Total documents (Unassigned included).
    #[serde(rename = "N")]
    pub n_bg: usize,
    /// Upper-tail hypergeometric p-value in (0, 1].
    pub p_value: f64,
}

/// Per-cluster ordered label lists (p ascending, then k descending, then
/// lexicographic), at most `top_m` per cluster, all below alpha.
pub type ClusterLabels = BTreeMap<usize, Vec<EnrichedKeyword>>;

/// Presence map: keyword → set of documents whose top-k list contains it.
pub type PresenceMap = BTreeMap<String, BTreeSet<String>>;

/// Build the presence map from one method's keyword sets (one per document).
/// A document "contains" a keyword iff the keyword is in its top-k set.
pub fn keyword_presence(keyword_sets: &[KeywordSet]) -> Result<PresenceMap> {
    let mut seen_docs = BTreeSet::new();
    let mut presence: PresenceMap = BTreeMap::new();
    for set in keyword_sets {
        if !seen_docs.insert(set.doc_id.clone()) {
            return Err(Error::Validation(format!(
                "duplicate doc_id '{}' in keyword sets",
                set.doc_id
            )));
        }
        for keyword in &set.keywords {
            presence
                .entry(keyword.text.clone())
                .or_default()
                .insert(set.doc_id.clone());
        }
    }
    Ok(presence)
}

/// Reusable ln-factorial table: `ln_fact(i) = ln(i!)` computed once with
/// compensated (Kahan) summation so absolute error stays far below the
/// 1e-10 oracle tolerance for the N ≤ 60 sweep.
struct LnFactTable {
    table: Vec<f64>,
}

impl LnFactTable {
    fn new(max_n: usize) -> Self {
        let mut table = Vec::with_capacity(max_n + 1);
        table.push(0.0);
        let mut sum = 0.0;
        let mut compensation = 0.0;
        for i in 1..=max_n {
            let term = (i as f64).ln() - compensation;
            let next = sum + term;
            compensation = (next - sum) - term;
            sum = next;
            table.push(sum);
        }
        Self { table }
    }

    fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.table[n] - self.table[k] - self.table[n - k]
    }

    /// Upper-tail P(X ≥ k) for X ~ Hypergeometric(N, K, n).
    fn sf(&self, k: usize, big_k: usize, n: usize, big_n: usize) -> Result<f64> {
        if !(k <= n && n <= big_n && k <= big_k && big_k <= big_n) {
            return Err(Error::Validation(format!(
                "hypergeom_sf requires 0 <= k <= n <= N and k <= K <= N, got k={k} K={big_k} n={n} N={big_n}"
            )));
        }
        if k == 0 {
            return Ok(1.0);
        }
        let ln_total = self.ln_binomial(big_n, n);
        // C(N−K, n−i) vanishes when n−i > N−K, so start at i ≥ n−(N−K).
        let low = k.max((n + big_k).saturating_sub(big_n));
        let high = big_k.min(n);
        let mut p = 0.0;
        for i in low..=high {
            p += (self.ln_binomial(big_k, i) + self.ln_binomial(big_n - big_k, n - i) - ln_total)
                .exp();
        }
        Ok(p.clamp(0.0, 1.0))
    }
}

/// Upper-tail hypergeometric probability
/// P(X ≥ k) = Σ_{i=k}^{min(K,n)} C(K,i)·C(N−K,n−i)/C(N,n), in log space.
///
/// `k`: in-cluster hits, `big_k`: background hits, `n`: cluster size,
/// `big_n`: corpus size. Exactly 1 for k = 0 and for n = N (census).
pub fn hypergeom_sf(k: usize, big_k: usize, n: usize, big_n: usize) -> Result<f64> {
    LnFactTable::new(big_n).sf(k, big_k, n, big_n)
}

/// Options for [`label_clusters`].
#[derive(Debug, Clone, Copy)]
pub struct LabelOptions {
    /// Significance threshold (default 0.05).
    pub alpha: f64,
    /// Labels kept per cluster (default 5).
    pub top_m: usize,
    /// Apply Benjamini–Hochberg correction before the alpha cut
    /// (off by default: the raw p < alpha rule is the primary behavior).
    pub fdr: bool,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            top_m: 5,
            fdr: false,
        }
    }
}

/// Label every cluster with its enriched keywords.
///
/// `assignments` maps doc_id → cluster (None = Unassigned). The background
/// population is all documents, Unassigned included. Per cluster, every
/// keyword present in ≥ 1 member document is tested; keywords pass when
/// p < alpha (BH-adjusted p when `fdr`) and the enrichment direction holds
/// (k/n ≥ K/N). Empty clusters are skipped.
pub fn label_clusters(
    presence: &PresenceMap,
    assignments: &BTreeMap<String, Option<usize>>,
    options: &LabelOptions,
) -> Result<ClusterLabels> {
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(Error::Validation(format!(
            "alpha must be in (0,1), got {}",
            options.alpha
        )));
    }
    let big_n = assignments.len();
    if big_n == 0 {
        return Err(Error::Validation("no documents to label".into()));
    }
    let mut members: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for (doc_id, assignment) in assignments {
        if let Some(cluster) = assignment {
            members.entry(*cluster).or_default().insert(doc_id);
        }
    }
    let table = LnFactTable::new(big_n);
    let mut labels: ClusterLabels = BTreeMap::new();
    for (&cluster, docs) in &members {
        let n = docs.len();
        let mut tested: Vec<EnrichedKeyword> = Vec::new();
        for (text, present_in) in presence {
            let k = present_in
                .iter()
                .filter(|id| docs.contains(id.as_str()))
                .count();
            if k == 0 {
                continue;
            }
            let big_k = present_in.len();
            let p_value = table.sf(k, big_k, n, big_n)?;
            tested.push(EnrichedKeyword {
                text: text.clone(),
                cluster,
                k,
                n,
                k_bg: big_k,
                n_bg: big_n,
                p_value,
            });
        }
        let cut: Vec<EnrichedKeyword> = if options.fdr {
            benjamini_hochberg_pass(&tested, options.alpha)
        } else {
            tested
                .into_iter()
                .filter(|e| e.p_value < options.alpha)
                .collect()
        };
        let mut selected: Vec<EnrichedKeyword> = cut
            .into_iter()
            // Enrichment direction: k/n ≥ K/N, compared in integers.
            .filter(|e| e.k * e.n_bg >= e.k_bg * e.n)
            .collect();
        selected.sort_by(|a, b| {
            a.p_value
                .partial_cmp(&b.p_value)
                .expect("p-values are finite")
                .then(b.k.cmp(&a.k))
                .then(a.text.cmp(&b.text))
        });
        selected.truncate(options.top_m);
        labels.insert(cluster, selected);
    }
    Ok(labels)
}

/// Keep the keywords whose Benjamini–Hochberg adjusted p-value is below
/// alpha. `p_value` fields stay raw; only the selection changes.
fn benjamini_hochberg_pass(tested: &[EnrichedKeyword], alpha: f64) -> Vec<EnrichedKeyword> {
    let m = tested.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        tested[a]
            .p_value
            .partial_cmp(&tested[b].p_value)
            .expect("p-values are finite")
    });
    // adjusted_i = min_{j >= i} p_(j) · m / (j+1), computed right-to-left.
    let mut adjusted = vec![0.0; m];
    let mut running_min = f64::INFINITY;
    for rank in (0..m).rev() {
        let raw = tested[order[rank]].p_value * m as f64 / (rank + 1) as f64;
        running_min = running_min.min(raw.min(1.0));
        adjusted[order[rank]] = running_min;
    }
    tested
        .iter()
        .zip(&adjusted)
        .filter(|(_, adj)| **adj < alpha)
        .map(|(e, _)| e.clone())
        .collect()
}
