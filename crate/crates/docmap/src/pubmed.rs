//! PubMed ingestion: an offline parser for efetch XML, plus an optional
//! rate-limited E-utilities client that writes raw batch XML to disk so
//! parsing stays a separate, reproducible pass.

use std::cell::Cell;
use std::path::{Path, PathBuf};
use std::time::Duration;

use quick_xml::events::Event;

use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// One PubmedArticle as parsed from efetch XML.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PubMedRecord {
    pub pmid: String,
    pub title: String,
    /// Structured abstracts keep one entry per AbstractText section, in
    /// document order; section labels are dropped.
    pub abstract_sections: Vec<String>,
    /// Author-assigned keywords (KeywordList); MeSH headings are ignored.
    pub author_keywords: Vec<String>,
}

/// Tally of records the parser had to skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestStats {
    pub parsed: usize,
    pub skipped_no_abstract: usize,
}

fn squash_spaces(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse a PubmedArticleSet file into a corpus: one document per article
/// with a non-empty abstract, order-preserving. Articles without an
/// AbstractText are skipped and tallied.
pub fn parse_efetch_xml(path: &Path) -> Result<(Corpus, IngestStats)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (records, stats) = parse_efetch_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if records.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no articles with abstracts found (skipped {} without)",
            path.display(),
            stats.skipped_no_abstract
        )));
    }
    let documents = records
        .into_iter()
        .map(|r| Document {
            id: r.pmid,
            title: r.title,
            abstract_text: r.abstract_sections.join(" "),
            gold_keywords: (!r.author_keywords.is_empty()).then_some(r.author_keywords),
        })
        .collect();
    Ok((Corpus { documents }, stats))
}

/// Parse efetch XML text into records (abstract-less ones already dropped
/// but tallied). Errors carry the byte offset of the malformed construct.
pub fn parse_efetch_str(xml: &str) -> Result<(Vec<PubMedRecord>, IngestStats)> {
    let mut reader = quick_xml::Reader::from_str(xml);
    let mut stack: Vec<Vec<u8>> = Vec::new();
    let mut records = Vec::new();
    let mut stats = IngestStats::default();
    // Per-article accumulation state.
    let mut current: Option<PubMedRecord> = None;
    let mut in_title = 0usize;
    let mut in_abstract_text = 0usize;
    let mut in_keyword = 0usize;
    let mut title = String::new();
    let mut section = String::new();
    let mut keyword = String::new();
    loop {
        let event = reader.read_event().map_err(|e| {
            Error::Parse(format!(
                "malformed XML at byte offset {}: {e}",
                reader.buffer_position()
            ))
        })?;
        match event {
            Event::Eof => break,
            Event::Start(e) => {
                let name = e.name().as_ref().to_vec();
                match name.as_slice() {
                    b"PubmedArticle" => current = Some(PubMedRecord::default()),
                    b"ArticleTitle" => {
                        in_title += 1;
                        title.clear();
                    }
                    b"AbstractText" => {
                        in_abstract_text += 1;
                        section.clear();
                    }
                    b"Keyword" => {
                        in_keyword += 1;
                        keyword.clear();
                    }
                    _ => {}
                }
                stack.push(name);
            }
            Event::End(e) => {
                match e.name().as_ref() {
                    b"PubmedArticle" => {
                        if let Some(record) = current.take() {
                            if record.pmid.is_empty() {
                                return Err(Error::Parse(format!(
                                    "article ending at byte offset {} has no PMID",
                                    reader.buffer_position()
                                )));
                            }
                            if record.abstract_sections.is_empty() {
                                stats.skipped_no_abstract += 1;
                            } else {
                                stats.parsed += 1;
                                records.push(record);
                            }
                        }
                    }
                    b"ArticleTitle" => {
                        in_title = in_title.saturating_sub(1);
                        if in_title == 0 {
                            let cleaned = squash_spaces(&title);
                            if let Some(r) = current.as_mut() {
                                if r.title.is_empty() && !cleaned.is_empty() {
                                    r.title = cleaned;
                                }
                            }
                        }
                    }
                    b"AbstractText" => {
                        in_abstract_text = in_abstract_text.saturating_sub(1);
                        if in_abstract_text == 0 {
                            let cleaned = squash_spaces(&section);
                            if !cleaned.is_empty() {
                                if let Some(r) = current.as_mut() {
                                    r.abstract_sections.push(cleaned);
                                }
                            }
                        }
                    }
                    b"Keyword" => {
                        in_keyword = in_keyword.saturating_sub(1);
                        if in_keyword == 0 {
                            let cleaned = squash_spaces(&keyword);
                            if !cleaned.is_empty() {
                                if let Some(r) = current.as_mut() {
                                    r.author_keywords.push(cleaned);
                                }
                            }
                        }
                    }
                    _ => {}
                }
                stack.pop();
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| {
                    Error::Parse(format!(
                        "bad character data at byte offset {}: {e}",
                        reader.buffer_position()
                    ))
                })?;
                absorb_text(
                    &text,
                    &stack,
                    current.as_mut(),
                    in_title,
                    in_abstract_text,
                    in_keyword,
                    &mut title,
                    &mut section,
                    &mut keyword,
                )?;
            }
            Event::CData(t) => {
                let text = String::from_utf8_lossy(&t).into_owned();
                absorb_text(
                    &text,
                    &stack,
                    current.as_mut(),
                    in_title,
                    in_abstract_text,
                    in_keyword,
                    &mut title,
                    &mut section,
                    &mut keyword,
                )?;
            }
            _ => {}
        }
    }
    Ok((records, stats))
}

#[allow(clippy::too_many_arguments)]
fn absorb_text(
    text: &str,
    stack: &[Vec<u8>],
    current: Option<&mut PubMedRecord>,
    in_title: usize,
    in_abstract_text: usize,
    in_keyword: usize,
    title: &mut String,
    section: &mut String,
    keyword: &mut String,
) -> Result<()> {
    let Some(record) = current else {
        return Ok(());
    };
    // The article's PMID is the one directly under MedlineCitation; PMIDs
    // nested elsewhere (e.g. CommentsCorrections) are other articles'.
    let is_citation_pmid = stack.len() >= 2
        && stack[stack.len() - 1] == b"PMID"
        && stack[stack.len() - 2] == b"MedlineCitation";
    if is_citation_pmid && record.pmid.is_empty() {
        let pmid = text.trim();
        if pmid.is_empty() || !pmid.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("non-numeric PMID '{pmid}'")));
        }
        record.pmid = pmid.to_string();
    } else if in_abstract_text > 0 {
        // Accumulate character data verbatim (inline markup like <i>/<sup>
        // contributes interleaved Text events); whitespace is normalized
        // once, at the closing tag.
        section.push_str(text);
    } else if in_keyword > 0 {
        keyword.push_str(text);
    } else if in_title > 0 {
        title.push_str(text);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Fetch client
// ---------------------------------------------------------------------------

/// E-utilities base URL.
pub const EUTILS_BASE: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
/// Records per efetch request.
pub const BATCH_SIZE: usize = 200;
const RETRY_ATTEMPTS: u32 = 3;
const BACKOFF_BASE: Duration = Duration::from_millis(500);

/// HTTP GET abstraction so tests can run against canned responses.
pub trait Transport {
    fn get(&self, url: &str) -> Result<String>;
}

/// Monotonic time abstraction so throttling is assertable without waiting.
pub trait Clock {
    fn now(&self) -> Duration;
    fn sleep(&self, amount: Duration);
}

impl<T: Transport + ?Sized> Transport for &T {
    fn get(&self, url: &str) -> Result<String> {
        (**self).get(url)
    }
}

impl<C: Clock + ?Sized> Clock for &C {
    fn now(&self) -> Duration {
        (**self).now()
    }
    fn sleep(&self, amount: Duration) {
        (**self).sleep(amount)
    }
}

/// Real HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport {
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(120))
                .build(),
        }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<String> {
        let response = self
            .agent
            .get(url)
            .call()
            .map_err(|e| Error::Http(format!("GET failed: {e}")))?;
        let mut body = String::new();
        use std::io::Read;
        response
            .into_reader()
            .read_to_string(&mut body)
            .map_err(|e| Error::Http(format!("reading response body: {e}")))?;
        Ok(body)
    }
}

/// Real wall clock.
pub struct SystemClock {
    origin: std::time::Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock {
            origin: std::time::Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
    fn sleep(&self, amount: Duration) {
        std::thread::sleep(amount);
    }
}

/// What a fetch run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchSummary {
    pub pmids: usize,
    pub batch_files: Vec<PathBuf>,
}

/// Sequential, rate-limited E-utilities client: esearch resolves a query to
/// PMIDs, efetch downloads them in batches of ≤ 200, and every batch lands
/// on disk as `batch_{index}.xml`.
pub struct FetchClient<T, C> {
    transport: T,
    clock: C,
    api_key: Option<String>,
    last_request: Cell<Option<Duration>>,
}

impl<T: Transport, C: Clock> FetchClient<T, C> {
    pub fn new(transport: T, clock: C, api_key: Option<String>) -> Self {
        FetchClient {
            transport,
            clock,
            api_key,
            last_request: Cell::new(None),
        }
    }

    /// NCBI allows 3 requests/s anonymously, 10/s with an API key.
    fn min_spacing(&self) -> Duration {
        if self.api_key.is_some() {
            Duration::from_millis(100)
        } else {
            Duration::from_secs_f64(1.0 / 3.0)
        }
    }

    fn api_key_param(&self) -> String {
        match &self.api_key {
            Some(key) => format!("&api_key={}", utf8_percent_encode(key, NON_ALPHANUMERIC)),
            None => String::new(),
        }
    }

    /// One GET with throttling and up to 3 attempts (exponential backoff).
    fn throttled_get(&self, url: &str) -> Result<String> {
        let mut last_err = None;
        for attempt in 0..RETRY_ATTEMPTS {
            if attempt > 0 {
                self.clock.sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
            }
            if let Some(last) = self.last_request.get() {
                let next_allowed = last + self.min_spacing();
                let now = self.clock.now();
                if now < next_allowed {
                    self.clock.sleep(next_allowed - now);
                }
            }
            self.last_request.set(Some(self.clock.now()));
            match self.transport.get(url) {
                Ok(body) => return Ok(body),
                Err(e) => last_err = Some(e),
            }
        }
        Err(match last_err.expect("at least one attempt ran") {
            Error::Http(msg) => {
                Error::Http(format!("{msg} (gave up after {RETRY_ATTEMPTS} attempts)"))
            }
            other => other,
        })
    }

    /// Resolve a query to PMIDs (at most `retmax`).
    pub fn esearch(&self, query: &str, retmax: usize) -> Result<Vec<String>> {
        let url = format!(
            "{EUTILS_BASE}/esearch.fcgi?db=pubmed&term={}&retmax={retmax}&retmode=xml{}",
            utf8_percent_encode(query, NON_ALPHANUMERIC),
            self.api_key_param()
        );
        parse_esearch_ids(&self.throttled_get(&url)?)
    }

    /// Download one batch of records as raw XML.
    pub fn efetch(&self, pmids: &[String]) -> Result<String> {
        let url = format!(
            "{EUTILS_BASE}/efetch.fcgi?db=pubmed&id={}&retmode=xml{}",
            pmids.join(","),
            self.api_key_param()
        );
        self.throttled_get(&url)
    }

    /// esearch + batched efetch; raw XML written to `out_dir/batch_{i}.xml`.
    pub fn fetch(&self, query: &str, max_records: usize, out_dir: &Path) -> Result<FetchSummary> {
        if max_records == 0 {
            return Err(Error::Validation("max_records must be ≥ 1".into()));
        }
        let mut ids = self.esearch(query, max_records)?;
        if ids.is_empty() {
            return Err(Error::Validation(format!(
                "query '{query}' matched no PubMed records"
            )));
        }
        ids.truncate(max_records);
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let mut batch_files = Vec::new();
        for (index, chunk) in ids.chunks(BATCH_SIZE).enumerate() {
            let body = self.efetch(chunk)?;
            let path = out_dir.join(format!("batch_{index}.xml"));
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            batch_files.push(path);
        }
        Ok(FetchSummary {
            pmids: ids.len(),
            batch_files,
        })
    }
}

/// Pull the `<Id>` list out of an esearch response.
pub fn parse_esearch_ids(xml: &str) -> Result<Vec<String>> {
    let mut reader = quick_xml::Reader::from_str(xml);
    let mut ids = Vec::new();
    let mut stack: Vec<Vec<u8>> = Vec::new();
    loop {
        match reader.read_event().map_err(|e| {
            Error::Parse(format!(
                "malformed esearch XML at byte offset {}: {e}",
                reader.buffer_position()
            ))
        })? {
            Event::Eof => break,
            Event::Start(e) => stack.push(e.name().as_ref().to_vec()),
            Event::End(_) => {
                stack.pop();
            }
            Event::Text(t) => {
                let in_id = stack.len() >= 2
                    && stack[stack.len() - 1] == b"Id"
                    && stack[stack.len() - 2] == b"IdList";
                if in_id {
                    let id = t
                        .unescape()
                        .map_err(|e| Error::Parse(format!("bad esearch Id: {e}")))?
                        .trim()
                        .to_string();
                    if !id.is_empty() {
                        ids.push(id);
                    }
                }
            }
            _ => {}
        }
    }
    Ok(ids)
}
