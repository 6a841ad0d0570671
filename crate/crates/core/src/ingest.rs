//! Review/business dump parsing, category slicing, and deduplication.
//!
//! Input files are newline-delimited JSON in the Yelp Challenge shape. The
//! parser is deliberately tolerant: malformed lines are counted and skipped
//! rather than aborting a multi-gigabyte ingest, and the business schema
//! accepts both `avg_stars` and the dump's `stars` spelling, plus
//! `categories` as either an array or a comma-separated string.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// One user's review of one business.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawReview {
    pub review_id: String,
    pub user_id: String,
    pub business_id: String,
    /// Star rating in [1, 5], half-star granularity.
    pub stars: f64,
    pub text: String,
}

/// Business metadata needed for category slicing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Business {
    pub business_id: String,
    pub categories: Vec<String>,
    pub avg_stars: f64,
}

/// All reviews of one cuisine category, with their businesses resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSlice {
    pub category: String,
    pub reviews: Vec<RawReview>,
    pub businesses: BTreeMap<String, Business>,
}

/// Per-file parse accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub parsed: usize,
    pub skipped: usize,
}

#[derive(Deserialize)]
struct ReviewRecord {
    #[serde(default)]
    review_id: Option<String>,
    user_id: String,
    business_id: String,
    stars: f64,
    text: String,
}

#[derive(Deserialize)]
struct BusinessRecord {
    business_id: String,
    #[serde(deserialize_with = "categories_field", default)]
    categories: Vec<String>,
    #[serde(alias = "stars")]
    avg_stars: f64,
}

/// `categories` appears as `["Indian", "Thai"]` in older dumps and as
/// `"Indian, Thai"` in newer ones; `null` means uncategorized.
fn categories_field<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        List(Vec<String>),
        Joined(String),
        Missing(Option<()>),
    }
    Ok(match Raw::deserialize(de)? {
        Raw::List(v) => v,
        Raw::Joined(s) => s
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect(),
        Raw::Missing(_) => Vec::new(),
    })
}

fn valid_stars(stars: f64) -> bool {
    (1.0..=5.0).contains(&stars) && (stars * 2.0).fract() == 0.0
}

/// Parses newline-delimited review records, skipping malformed lines.
///
/// A missing `review_id` is synthesized from the 1-based line number so
/// reruns over the same file are stable. Lines failing the record schema,
/// with empty ids, or with a star rating outside [1, 5] (or off the
/// half-star grid) are counted in `ParseStats::skipped`.
pub fn parse_reviews<R: BufRead>(reader: R) -> Result<(Vec<RawReview>, ParseStats)> {
    let mut reviews = Vec::new();
    let mut stats = ParseStats::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<review stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReviewRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(_) => {
                stats.skipped += 1;
                continue;
            }
        };
        if record.user_id.is_empty() || record.business_id.is_empty() || !valid_stars(record.stars)
        {
            stats.skipped += 1;
            continue;
        }
        let review_id = match record.review_id {
            Some(id) if !id.is_empty() => id,
            _ => format!("r{:08}", idx + 1),
        };
        reviews.push(RawReview {
            review_id,
            user_id: record.user_id,
            business_id: record.business_id,
            stars: record.stars,
            text: record.text,
        });
        stats.parsed += 1;
    }
    Ok((reviews, stats))
}

/// Parses newline-delimited business records, skipping malformed lines.
pub fn parse_businesses<R: BufRead>(reader: R) -> Result<(Vec<Business>, ParseStats)> {
    let mut businesses = Vec::new();
    let mut stats = ParseStats::default();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<business stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: BusinessRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(_) => {
                stats.skipped += 1;
                continue;
            }
        };
        if record.business_id.is_empty() || !(1.0..=5.0).contains(&record.avg_stars) {
            stats.skipped += 1;
            continue;
        }
        businesses.push(Business {
            business_id: record.business_id,
            categories: record.categories,
            avg_stars: record.avg_stars,
        });
        stats.parsed += 1;
    }
    Ok((businesses, stats))
}

/// Selects the reviews of every business listing `category`.
///
/// Matching is exact but case-insensitive membership in the business's
/// category list; a business with several categories lands in every
/// matching slice. Reviews referencing unknown businesses are dropped.
pub fn filter_by_category(
    reviews: &[RawReview],
    businesses: &[Business],
    category: &str,
) -> Result<CorpusSlice> {
    if category.is_empty() {
        return Err(Error::invalid("category must be non-empty"));
    }
    let wanted = category.to_lowercase();
    let selected: BTreeMap<String, Business> = businesses
        .iter()
        .filter(|b| b.categories.iter().any(|c| c.to_lowercase() == wanted))
        .map(|b| (b.business_id.clone(), b.clone()))
        .collect();
    let slice_reviews = reviews
        .iter()
        .filter(|r| selected.contains_key(&r.business_id))
        .cloned()
        .collect();
    Ok(CorpusSlice {
        category: category.to_string(),
        reviews: slice_reviews,
        businesses: selected,
    })
}

/// Enforces one review per (user, business).
///
/// When duplicates exist the review with the lexicographically greatest
/// `review_id` wins; output order follows input order of the winners.
pub fn dedup_reviews(slice: CorpusSlice) -> CorpusSlice {
    let mut winners: HashMap<(String, String), String> = HashMap::new();
    for r in &slice.reviews {
        let key = (r.user_id.clone(), r.business_id.clone());
        match winners.get_mut(&key) {
            Some(best) if *best >= r.review_id => {}
            Some(best) => *best = r.review_id.clone(),
            None => {
                winners.insert(key, r.review_id.clone());
            }
        }
    }
    let mut emitted: HashMap<(String, String), bool> = HashMap::new();
    let reviews = slice
        .reviews
        .into_iter()
        .filter(|r| {
            let key = (r.user_id.clone(), r.business_id.clone());
            if winners.get(&key) != Some(&r.review_id) {
                return false;
            }
            // Identical (user, business, review_id) triples: keep the first.
            !std::mem::replace(emitted.entry(key).or_insert(false), true)
        })
        .collect();
    CorpusSlice {
        category: slice.category,
        reviews,
        businesses: slice.businesses,
    }
}
