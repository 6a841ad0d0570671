//! User-topic correlation and representative-user selection.
//!
//! For each user we align their per-restaurant overall star ratings with
//! their per-restaurant sentiment about one topic and take the Pearson
//! correlation. Users correlating at or above a threshold represent that
//! topic: their stars proxy one latent rating dimension.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentiment::ReviewTopicSentiment;

/// One user's rating and per-topic sentiment profiles, keyed by business.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserVectors {
    pub user_id: String,
    pub overall: BTreeMap<String, f64>,
    /// topic → (business → sentiment); keys are a subset of `overall`'s.
    pub topic: BTreeMap<u32, BTreeMap<String, f64>>,
}

/// Which review count the "minimum of N reviews" rule applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinReviewsScope {
    /// N aligned (rating, topic-sentiment) pairs per user-topic pair — the
    /// strictest reading, and the default.
    PerPair,
    /// N total reviews by the user; aligned pairs only need the Pearson
    /// minimum of 2.
    PerUser,
}

impl Default for MinReviewsScope {
    fn default() -> Self {
        MinReviewsScope::PerPair
    }
}

/// Sparse user × topic correlation matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub min_reviews: usize,
    pub scope: MinReviewsScope,
    /// (user, topic) → Pearson r; only defined entries are stored.
    pub entries: BTreeMap<(String, u32), f64>,
    /// (user, topic) → aligned observation count, for stored entries.
    pub support: BTreeMap<(String, u32), usize>,
}

/// Users representing each topic at some threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeSet {
    pub threshold: f64,
    /// topic → member user ids (sorted).
    pub members: BTreeMap<u32, Vec<String>>,
}

impl RepresentativeSet {
    pub fn members_of(&self, topic: u32) -> &[String] {
        self.members.get(&topic).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct users across all topics, sorted.
    pub fn all_members(&self) -> Vec<String> {
        let mut all: Vec<String> = self.members.values().flatten().cloned().collect();
        all.sort();
        all.dedup();
        all
    }
}

/// Sample Pearson correlation; `None` when either vector has zero
/// variance (a constant rater carries no correlation signal).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "pearson requires equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("pearson requires at least 2 observations"));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Ok(None);
    }
    Ok(Some((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0)))
}

/// Groups per-review topic sentiments into per-user profiles.
///
/// Requires one record per (user, business) — dedup upstream guarantees it.
pub fn build_user_vectors(
    sentiments: &[ReviewTopicSentiment],
) -> Result<BTreeMap<String, UserVectors>> {
    let mut users: BTreeMap<String, UserVectors> = BTreeMap::new();
    for record in sentiments {
        let user = users
            .entry(record.user_id.clone())
            .or_insert_with(|| UserVectors {
                user_id: record.user_id.clone(),
                overall: BTreeMap::new(),
                topic: BTreeMap::new(),
            });
        if user
            .overall
            .insert(record.business_id.clone(), record.stars)
            .is_some()
        {
            return Err(Error::invalid(format!(
                "duplicate review by user {} of business {}; dedup the slice first",
                record.user_id, record.business_id
            )));
        }
        for (&topic, &sentiment) in &record.topic_sentiment {
            user.topic
                .entry(topic)
                .or_default()
                .insert(record.business_id.clone(), sentiment);
        }
    }
    Ok(users)
}

/// Computes the correlation matrix under the min-reviews rule.
///
/// Aligned vectors are ordered by business id, so the result does not
/// depend on input iteration order. Pairs failing the support rule or with
/// zero variance on either side get no entry.
pub fn build_correlation_matrix(
    vectors: &BTreeMap<String, UserVectors>,
    min_reviews: usize,
    scope: MinReviewsScope,
) -> Result<CorrelationMatrix> {
    if min_reviews < 2 {
        return Err(Error::invalid("min_reviews must be >= 2"));
    }
    let per_user: Vec<Vec<((String, u32), f64, usize)>> = vectors
        .par_iter()
        .map(|(user_id, vecs)| {
            let mut out = Vec::new();
            let user_ok = match scope {
                MinReviewsScope::PerPair => true,
                MinReviewsScope::PerUser => vecs.overall.len() >= min_reviews,
            };
            if !user_ok {
                return out;
            }
            for (&topic, sentiments) in &vecs.topic {
                // Sentiment keys are a subset of overall keys, and BTreeMap
                // iteration is already sorted by business id.
                let aligned: Vec<(f64, f64)> = sentiments
                    .iter()
                    .filter_map(|(b, &s)| vecs.overall.get(b).map(|&r| (r, s)))
                    .collect();
                let enough = match scope {
                    MinReviewsScope::PerPair => aligned.len() >= min_reviews,
                    MinReviewsScope::PerUser => aligned.len() >= 2,
                };
                if !enough {
                    continue;
                }
                let ratings: Vec<f64> = aligned.iter().map(|&(r, _)| r).collect();
                let topic_sent: Vec<f64> = aligned.iter().map(|&(_, s)| s).collect();
                if let Some(r) = pearson(&ratings, &topic_sent).expect("aligned length >= 2") {
                    out.push(((user_id.clone(), topic), r, aligned.len()));
                }
            }
            out
        })
        .collect();

    let mut matrix = CorrelationMatrix {
        min_reviews,
        scope,
        entries: BTreeMap::new(),
        support: BTreeMap::new(),
    };
    for rows in per_user {
        for (key, r, support) in rows {
            matrix.support.insert(key.clone(), support);
            matrix.entries.insert(key, r);
        }
    }
    Ok(matrix)
}

/// Members per topic: users with `C(u, topic) >= threshold` (inclusive).
pub fn select_representatives(matrix: &CorrelationMatrix, threshold: f64) -> Result<RepresentativeSet> {
    if !(threshold > -1.0 && threshold <= 1.0) {
        return Err(Error::invalid(format!(
            "threshold must lie in (-1, 1], got {threshold}"
        )));
    }
    let mut members: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for ((user, topic), &r) in &matrix.entries {
        if r >= threshold {
            members.entry(*topic).or_default().push(user.clone());
        }
    }
    Ok(RepresentativeSet {
        threshold,
        members,
    })
}

/// One row of the threshold sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub topic: u32,
    pub threshold: f64,
    pub members: usize,
}

/// Member counts per (topic, threshold), a tidy table for plotting.
/// Thresholds must be sorted ascending; counts are non-increasing along
/// each topic's thresholds.
pub fn sweep_thresholds(
    matrix: &CorrelationMatrix,
    thresholds: &[f64],
    k_local: usize,
) -> Result<Vec<SweepRow>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("thresholds must be sorted ascending"));
    }
    let mut rows = Vec::with_capacity(k_local * thresholds.len());
    for topic in 0..k_local as u32 {
        for &threshold in thresholds {
            let members = select_representatives(matrix, threshold)?
                .members_of(topic)
                .len();
            rows.push(SweepRow {
                topic,
                threshold,
                members,
            });
        }
    }
    Ok(rows)
}
