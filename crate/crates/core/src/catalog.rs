//! Paper/image metadata, faceted search and corpus statistics.
//!
//! Papers and images are ingested from JSONL or CSV files into an immutable
//! [`Catalog`]. Search is pure filtering: every filled facet must match and
//! results come back in proceedings order, never ranked.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rust_stemmers::{Algorithm, Stemmer};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::labels::RecordError;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

impl CatalogError {
    pub fn is_io(&self) -> bool {
        matches!(self, CatalogError::Record(e) if e.is_io())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Venue {
    Vis,
    SciVis,
    InfoVis,
    #[serde(rename = "VAST")]
    Vast,
}

impl Venue {
    pub const ALL: [Venue; 4] = [Venue::Vis, Venue::SciVis, Venue::InfoVis, Venue::Vast];

    pub fn name(&self) -> &'static str {
        match self {
            Venue::Vis => "Vis",
            Venue::SciVis => "SciVis",
            Venue::InfoVis => "InfoVis",
            Venue::Vast => "VAST",
        }
    }
}

impl fmt::Display for Venue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Venue {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Venue::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown venue {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ImageType {
    #[serde(rename = "F", alias = "figure")]
    Figure,
    #[serde(rename = "T", alias = "table")]
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub doi: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    pub authors: Vec<String>,
    #[serde(default)]
    pub author_keywords: Vec<String>,
    pub venue: Venue,
    pub year: i32,
    pub page_count: u32,
    pub proceedings_order: i64,
    /// Opaque link into an external keyword collection; stored, never fetched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword_link: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub doi: String,
    #[serde(rename = "type")]
    pub image_type: ImageType,
    pub thumbnail_ref: String,
    pub fullres_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<String>,
    pub in_paper_index: u32,
    /// The same image also printed in the paper's color plate; not counted.
    #[serde(default)]
    pub color_plate_duplicate: bool,
    /// Curation session the box came from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
}

// CSV rows: lists are `;`-separated cells.
#[derive(Deserialize)]
struct PaperRow {
    doi: String,
    title: String,
    #[serde(rename = "abstract", default)]
    abstract_text: String,
    authors: String,
    #[serde(default)]
    author_keywords: String,
    venue: Venue,
    year: i32,
    page_count: u32,
    proceedings_order: i64,
    #[serde(default)]
    keyword_link: Option<String>,
}

fn split_list(s: &str) -> Vec<String> {
    s.split(';').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
}

impl From<PaperRow> for PaperRecord {
    fn from(r: PaperRow) -> Self {
        PaperRecord {
            doi: r.doi,
            title: r.title,
            abstract_text: r.abstract_text,
            authors: split_list(&r.authors),
            author_keywords: split_list(&r.author_keywords),
            venue: r.venue,
            year: r.year,
            page_count: r.page_count,
            proceedings_order: r.proceedings_order,
            keyword_link: r.keyword_link.filter(|s| !s.is_empty()),
        }
    }
}

#[derive(Deserialize)]
struct ImageRow {
    image_id: String,
    doi: String,
    #[serde(rename = "type")]
    image_type: ImageType,
    thumbnail_ref: String,
    fullres_ref: String,
    #[serde(default)]
    caption: Option<String>,
    in_paper_index: u32,
    #[serde(default)]
    color_plate_duplicate: Option<bool>,
    #[serde(default)]
    session: Option<String>,
}

impl From<ImageRow> for ImageRecord {
    fn from(r: ImageRow) -> Self {
        ImageRecord {
            image_id: r.image_id,
            doi: r.doi,
            image_type: r.image_type,
            thumbnail_ref: r.thumbnail_ref,
            fullres_ref: r.fullres_ref,
            caption: r.caption.filter(|s| !s.is_empty()),
            in_paper_index: r.in_paper_index,
            color_plate_duplicate: r.color_plate_duplicate.unwrap_or(false),
            session: r.session.filter(|s| !s.is_empty()),
        }
    }
}

/// A parsed record with the line it came from.
type Lined<T> = (usize, T);

fn is_delimited(path: &Path) -> Option<u8> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Some(b','),
        Some("tsv") => Some(b'\t'),
        _ => None,
    }
}

fn read_jsonl_lined<T: DeserializeOwned>(reader: impl BufRead, origin: &str) -> Result<Vec<Lined<T>>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| RecordError::Io {
            path: origin.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| RecordError::Malformed {
            path: origin.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

fn read_delimited_lined<R: DeserializeOwned, T: From<R>>(
    reader: impl Read,
    delimiter: u8,
    origin: &str,
) -> Result<Vec<Lined<T>>, RecordError> {
    let convert = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        let message = e.to_string();
        match e.into_kind() {
            csv::ErrorKind::Io(source) => RecordError::Io {
                path: origin.to_string(),
                source,
            },
            _ => RecordError::Malformed {
                path: origin.to_string(),
                line,
                message,
            },
        }
    };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(convert)?.clone();
    let mut record = csv::StringRecord::new();
    let mut out = Vec::new();
    while rdr.read_record(&mut record).map_err(convert)? {
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: R = record.deserialize(Some(&headers)).map_err(|e| RecordError::Malformed {
            path: origin.to_string(),
            line,
            message: e.to_string(),
        })?;
        out.push((line, T::from(row)));
    }
    Ok(out)
}

fn open(path: &Path) -> Result<File, RecordError> {
    File::open(path).map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_papers(path: &Path) -> Result<Vec<Lined<PaperRecord>>, RecordError> {
    let origin = path.display().to_string();
    match is_delimited(path) {
        Some(d) => read_delimited_lined::<PaperRow, PaperRecord>(open(path)?, d, &origin),
        None => read_jsonl_lined(BufReader::new(open(path)?), &origin),
    }
}

fn read_images(path: &Path) -> Result<Vec<Lined<ImageRecord>>, RecordError> {
    let origin = path.display().to_string();
    match is_delimited(path) {
        Some(d) => read_delimited_lined::<ImageRow, ImageRecord>(open(path)?, d, &origin),
        None => read_jsonl_lined(BufReader::new(open(path)?), &origin),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogConfig {
    pub year_min: i32,
    pub year_max: i32,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            year_min: 1990,
            year_max: 2019,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub image_id: String,
    pub doi: String,
    pub line: usize,
    pub reason: String,
}

/// What ingestion dropped or flagged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub warnings: Vec<String>,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub papers: usize,
    pub images: usize,
    pub figures: usize,
    pub tables: usize,
    /// Color-plate duplicates present but excluded from the counts above.
    pub excluded_duplicates: usize,
    pub by_venue: BTreeMap<Venue, usize>,
    pub by_year: BTreeMap<i32, usize>,
}

#[derive(Debug, Clone)]
struct PaperIndex {
    text: HashSet<String>,
    keywords: HashSet<String>,
    text_stemmed: HashSet<String>,
    keywords_stemmed: HashSet<String>,
    authors: Vec<Vec<String>>,
}

/// Immutable catalog with a prebuilt search index.
#[derive(Debug, Clone)]
pub struct Catalog {
    papers: BTreeMap<String, PaperRecord>,
    // canonical order
    images: Vec<ImageRecord>,
    by_id: BTreeMap<String, usize>,
    index: BTreeMap<String, PaperIndex>,
    config: CatalogConfig,
}

#[derive(Serialize, Deserialize)]
struct Stored {
    config: CatalogConfig,
    papers: Vec<PaperRecord>,
    images: Vec<ImageRecord>,
}

/// Lowercased tokens split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn stemmer() -> Stemmer {
    Stemmer::create(Algorithm::English)
}

fn stem_all(tokens: &HashSet<String>, s: &Stemmer) -> HashSet<String> {
    tokens.iter().map(|t| s.stem(t).into_owned()).collect()
}

fn index_paper(p: &PaperRecord, s: &Stemmer) -> PaperIndex {
    let text: HashSet<String> = tokenize(&p.title).into_iter().chain(tokenize(&p.abstract_text)).collect();
    let keywords: HashSet<String> = p.author_keywords.iter().flat_map(|k| tokenize(k)).collect();
    PaperIndex {
        text_stemmed: stem_all(&text, s),
        keywords_stemmed: stem_all(&keywords, s),
        text,
        keywords,
        authors: p.authors.iter().map(|a| tokenize(a)).collect(),
    }
}

fn canonical_cmp(papers: &BTreeMap<String, PaperRecord>, a: &ImageRecord, b: &ImageRecord) -> Ordering {
    let key = |i: &ImageRecord| {
        let p = &papers[&i.doi];
        (p.year, p.proceedings_order)
    };
    key(a)
        .cmp(&key(b))
        .then_with(|| a.doi.cmp(&b.doi))
        .then(a.in_paper_index.cmp(&b.in_paper_index))
        .then_with(|| a.image_id.cmp(&b.image_id))
}

impl Catalog {
    /// Builds a catalog, keeping the last record of a duplicated DOI or image
    /// id and rejecting images whose DOI is unknown.
    pub fn build(
        papers: impl IntoIterator<Item = PaperRecord>,
        images: impl IntoIterator<Item = ImageRecord>,
        config: CatalogConfig,
    ) -> (Catalog, IngestReport) {
        let papers: Vec<_> = papers.into_iter().enumerate().map(|(i, p)| (i + 1, p)).collect();
        let images: Vec<_> = images.into_iter().enumerate().map(|(i, p)| (i + 1, p)).collect();
        Self::build_lined(papers, images, config)
    }

    fn build_lined(
        papers: Vec<Lined<PaperRecord>>,
        images: Vec<Lined<ImageRecord>>,
        config: CatalogConfig,
    ) -> (Catalog, IngestReport) {
        let mut report = IngestReport::default();
        let mut by_doi: BTreeMap<String, PaperRecord> = BTreeMap::new();
        for (line, p) in papers {
            if by_doi.contains_key(&p.doi) {
                report
                    .warnings
                    .push(format!("papers:{line}: duplicate doi {}; keeping the later record", p.doi));
            }
            by_doi.insert(p.doi.clone(), p);
        }
        for p in by_doi.values() {
            report.warnings.extend(lint_paper(p, &config));
        }

        let mut by_image: BTreeMap<String, (usize, ImageRecord)> = BTreeMap::new();
        for (line, img) in images {
            if !by_doi.contains_key(&img.doi) {
                report.rejected.push(Rejection {
                    image_id: img.image_id.clone(),
                    doi: img.doi.clone(),
                    line,
                    reason: "unknown doi".to_string(),
                });
                continue;
            }
            if by_image.contains_key(&img.image_id) {
                report.warnings.push(format!(
                    "images:{line}: duplicate image id {}; keeping the later record",
                    img.image_id
                ));
            }
            by_image.insert(img.image_id.clone(), (line, img));
        }
        // (doi, in_paper_index) must be unique: first by input line wins
        let mut kept: Vec<(usize, ImageRecord)> = by_image.into_values().collect();
        kept.sort_by_key(|(line, _)| *line);
        let mut slots = HashSet::new();
        let mut images = Vec::with_capacity(kept.len());
        for (line, img) in kept {
            if slots.insert((img.doi.clone(), img.in_paper_index)) {
                images.push(img);
            } else {
                report.rejected.push(Rejection {
                    reason: format!("in_paper_index {} already used in {}", img.in_paper_index, img.doi),
                    image_id: img.image_id,
                    doi: img.doi,
                    line,
                });
            }
        }
        (Catalog::assemble(by_doi, images, config), report)
    }

    fn assemble(papers: BTreeMap<String, PaperRecord>, mut images: Vec<ImageRecord>, config: CatalogConfig) -> Catalog {
        images.sort_by(|a, b| canonical_cmp(&papers, a, b));
        let s = stemmer();
        let index = papers.iter().map(|(d, p)| (d.clone(), index_paper(p, &s))).collect();
        let by_id = images.iter().enumerate().map(|(i, img)| (img.image_id.clone(), i)).collect();
        Catalog {
            papers,
            images,
            by_id,
            index,
            config,
        }
    }

    /// Reads papers and images (`.csv`/`.tsv` delimited, anything else JSONL).
    pub fn ingest(papers: &Path, images: &Path, config: CatalogConfig) -> Result<(Catalog, IngestReport), CatalogError> {
        let p = read_papers(papers)?;
        for (line, paper) in &p {
            if paper.page_count == 0 {
                return Err(RecordError::Malformed {
                    path: papers.display().to_string(),
                    line: *line,
                    message: "page_count must be positive".to_string(),
                }
                .into());
            }
        }
        let i = read_images(images)?;
        Ok(Catalog::build_lined(p, i, config))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&Stored {
            config: self.config,
            papers: self.papers.values().cloned().collect(),
            images: self.images.clone(),
        })
        .expect("serializes")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Catalog, CatalogError> {
        let stored: Stored = serde_json::from_str(text).map_err(|e| RecordError::Malformed {
            path: origin.to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let papers = stored.papers.into_iter().map(|p| (p.doi.clone(), p)).collect();
        Ok(Catalog::assemble(papers, stored.images, stored.config))
    }

    pub fn save(&self, path: &Path) -> Result<(), CatalogError> {
        std::fs::write(path, self.to_json()).map_err(|source| {
            RecordError::Io {
                path: path.display().to_string(),
                source,
            }
            .into()
        })
    }

    pub fn load(path: &Path) -> Result<Catalog, CatalogError> {
        let text = std::fs::read_to_string(path).map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Catalog::from_json(&text, &path.display().to_string())
    }

    pub fn config(&self) -> &CatalogConfig {
        &self.config
    }
    pub fn papers(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.values()
    }
    /// All images in canonical order.
    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }
    pub fn paper(&self, doi: &str) -> Option<&PaperRecord> {
        self.papers.get(doi)
    }
    pub fn image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.by_id.get(image_id).map(|&i| &self.images[i])
    }
    pub fn images_of(&self, doi: &str) -> Vec<&ImageRecord> {
        self.images.iter().filter(|i| i.doi == doi).collect()
    }

    /// Hex SHA-256 over the canonical serialization; equal for equal content.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Counts over distinct images (color-plate duplicates excluded).
    pub fn totals(&self) -> Totals {
        let mut t = Totals {
            papers: self.papers.len(),
            ..Default::default()
        };
        for p in self.papers.values() {
            t.by_year.entry(p.year).or_default();
            t.by_venue.entry(p.venue).or_default();
        }
        for img in &self.images {
            if img.color_plate_duplicate {
                t.excluded_duplicates += 1;
                continue;
            }
            t.images += 1;
            match img.image_type {
                ImageType::Figure => t.figures += 1,
                ImageType::Table => t.tables += 1,
            }
            let p = &self.papers[&img.doi];
            *t.by_venue.entry(p.venue).or_default() += 1;
            *t.by_year.entry(p.year).or_default() += 1;
        }
        t
    }

    pub fn search(&self, q: &Query) -> Result<Vec<&ImageRecord>, CatalogError> {
        q.validate()?;
        let terms: Vec<String> = match &q.terms {
            Some(t) if q.stem => {
                let s = stemmer();
                tokenize(t).iter().map(|w| s.stem(w).into_owned()).collect()
            }
            Some(t) => tokenize(t),
            None => Vec::new(),
        };
        let authors: Vec<Vec<String>> = q
            .authors
            .as_deref()
            .map(|a| a.split(';').map(tokenize).filter(|t| !t.is_empty()).collect())
            .unwrap_or_default();
        let venues: BTreeSet<Venue> = q.venues.iter().copied().collect();

        let paper_ok = |doi: &str| {
            let p = &self.papers[doi];
            let ix = &self.index[doi];
            if !venues.is_empty() && !venues.contains(&p.venue) {
                return false;
            }
            if let Some((lo, hi)) = q.year_range {
                if p.year < lo || p.year > hi {
                    return false;
                }
            }
            let field = match (q.term_mode, q.stem) {
                (TermMode::TitleAndAbstract, false) => &ix.text,
                (TermMode::TitleAndAbstract, true) => &ix.text_stemmed,
                (TermMode::AuthorKeywords, false) => &ix.keywords,
                (TermMode::AuthorKeywords, true) => &ix.keywords_stemmed,
            };
            if !terms.iter().all(|t| field.contains(t)) {
                return false;
            }
            authors
                .iter()
                .all(|wanted| ix.authors.iter().any(|have| author_matches(wanted, have)))
        };

        let mut verdicts: BTreeMap<&str, bool> = BTreeMap::new();
        Ok(self
            .images
            .iter()
            .filter(|img| q.image_type.admits(img.image_type))
            .filter(|img| *verdicts.entry(img.doi.as_str()).or_insert_with(|| paper_ok(&img.doi)))
            .collect())
    }

    pub fn stats(&self) -> Vec<GroupStats> {
        let mut groups: BTreeMap<(i32, Venue), GroupStats> = BTreeMap::new();
        for p in self.papers.values() {
            let g = groups.entry((p.year, p.venue)).or_insert_with(|| GroupStats::new(p.year, p.venue));
            g.papers += 1;
            g.pages += p.page_count as u64;
        }
        for img in self.images.iter().filter(|i| !i.color_plate_duplicate) {
            let p = &self.papers[&img.doi];
            let g = groups.get_mut(&(p.year, p.venue)).expect("paper grouped");
            g.images += 1;
            match img.image_type {
                ImageType::Figure => g.figures += 1,
                ImageType::Table => g.tables += 1,
            }
        }
        groups
            .into_values()
            .map(|mut g| {
                g.images_per_page = if g.pages == 0 { 0.0 } else { g.images as f64 / g.pages as f64 };
                g
            })
            .collect()
    }

    /// Stats rolled up by the requested keys (any subset of year and venue).
    pub fn stats_by(&self, by_year: bool, by_venue: bool) -> Vec<GroupStats> {
        let mut rolled: BTreeMap<(Option<i32>, Option<Venue>), GroupStats> = BTreeMap::new();
        for g in self.stats() {
            let key = (by_year.then_some(g.year).flatten(), by_venue.then_some(g.venue).flatten());
            let r = rolled.entry(key).or_insert_with(|| GroupStats {
                year: key.0,
                venue: key.1,
                ..Default::default()
            });
            r.papers += g.papers;
            r.images += g.images;
            r.figures += g.figures;
            r.tables += g.tables;
            r.pages += g.pages;
        }
        rolled
            .into_values()
            .map(|mut g| {
                g.images_per_page = if g.pages == 0 { 0.0 } else { g.images as f64 / g.pages as f64 };
                g
            })
            .collect()
    }
}

fn lint_paper(p: &PaperRecord, cfg: &CatalogConfig) -> Vec<String> {
    let mut out = Vec::new();
    if p.year < cfg.year_min || p.year > cfg.year_max {
        out.push(format!(
            "{}: year {} outside {}..={}",
            p.doi, p.year, cfg.year_min, cfg.year_max
        ));
    }
    match p.venue {
        Venue::SciVis if p.year < 2013 => out.push(format!("{}: SciVis paper dated {} (before 2013)", p.doi, p.year)),
        Venue::Vis if p.year > 2012 => out.push(format!("{}: Vis paper dated {} (after 2012)", p.doi, p.year)),
        _ => {}
    }
    out
}

/// Whether every token of `wanted` pairs with a distinct token of `have`,
/// a single letter standing for any token with that initial.
pub fn author_matches(wanted: &[String], have: &[String]) -> bool {
    fn compatible(a: &str, b: &str) -> bool {
        if a == b {
            return true;
        }
        let one = |s: &str| s.chars().count() == 1;
        (one(a) || one(b)) && a.chars().next() == b.chars().next()
    }
    // tiny bipartite matching by augmenting paths
    fn assign(i: usize, wanted: &[String], have: &[String], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for j in 0..have.len() {
            if seen[j] || !compatible(&wanted[i], &have[j]) {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| assign(k, wanted, have, owner, seen)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    if wanted.is_empty() || wanted.len() > have.len() {
        return wanted.is_empty();
    }
    let mut owner = vec![None; have.len()];
    (0..wanted.len()).all(|i| assign(i, wanted, have, &mut owner, &mut vec![false; have.len()]))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermMode {
    AuthorKeywords,
    #[default]
    TitleAndAbstract,
}

impl FromStr for TermMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "author_keywords" | "keywords" => Ok(TermMode::AuthorKeywords),
            "title_and_abstract" | "title" => Ok(TermMode::TitleAndAbstract),
            _ => Err(format!("unknown term mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageFilter {
    Figure,
    Table,
    #[default]
    Both,
}

impl ImageFilter {
    pub fn admits(&self, t: ImageType) -> bool {
        matches!(
            (self, t),
            (ImageFilter::Both, _) | (ImageFilter::Figure, ImageType::Figure) | (ImageFilter::Table, ImageType::Table)
        )
    }
}

impl FromStr for ImageFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "figure" | "f" => Ok(ImageFilter::Figure),
            "table" | "t" => Ok(ImageFilter::Table),
            "both" | "" => Ok(ImageFilter::Both),
            _ => Err(format!("unknown image type {s:?}")),
        }
    }
}

/// A faceted search request; unset facets match everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Query {
    pub terms: Option<String>,
    pub term_mode: TermMode,
    /// One or more names separated by `;`, all of which must be authors.
    pub authors: Option<String>,
    pub venues: Vec<Venue>,
    /// Inclusive.
    pub year_range: Option<(i32, i32)>,
    pub image_type: ImageFilter,
    pub stem: bool,
}

impl Query {
    pub fn validate(&self) -> Result<(), CatalogError> {
        match self.year_range {
            Some((lo, hi)) if lo > hi => Err(CatalogError::InvalidQuery(format!("year range {lo}..{hi} is reversed"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub venue: Option<Venue>,
    pub papers: usize,
    pub images: usize,
    pub figures: usize,
    pub tables: usize,
    pub pages: u64,
    pub images_per_page: f64,
}

impl GroupStats {
    fn new(year: i32, venue: Venue) -> Self {
        GroupStats {
            year: Some(year),
            venue: Some(venue),
            ..Default::default()
        }
    }
}
