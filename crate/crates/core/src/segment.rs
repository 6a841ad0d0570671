//! Review segmentation: each sentence goes to the local topic maximizing
//! the bag-of-words score `Σ_w count(w, sentence) · P(w | topic)`.
//!
//! Only local topics compete; the global topics are document-level themes
//! and are ignored here. Sentences with no usable tokens get no topic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::mglda::TopicModel;
use crate::textprep::TokenizedReview;

/// Candidate vocabulary per topic when scoring a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateWords {
    /// Every word, weighted by its smoothed probability (the default).
    FullVocabulary,
    /// Only each topic's `n` most probable words count toward its score.
    TopN(usize),
}

impl Default for CandidateWords {
    fn default() -> Self {
        CandidateWords::FullVocabulary
    }
}

/// A review with per-sentence local-topic assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedReview {
    pub review_id: String,
    pub user_id: String,
    pub business_id: String,
    pub stars: f64,
    /// One entry per sentence, in order; `None` marks an unassigned
    /// (empty or all-out-of-vocabulary) sentence.
    pub sentence_topics: Vec<(usize, Option<u32>)>,
    /// Topic → indices of its sentences; unassigned sentences are absent.
    pub topic_sentences: BTreeMap<u32, Vec<usize>>,
}

/// Scores one sentence against every local topic and returns the argmax,
/// ties broken by the lowest topic index; `None` for empty sentences.
pub fn assign_sentence_topic(
    sentence_tokens: &[u32],
    model: &TopicModel,
    candidates: CandidateWords,
) -> Option<u32> {
    if sentence_tokens.is_empty() {
        return None;
    }
    let mut best: Option<(u32, f64)> = None;
    for topic in 0..model.k_local() {
        let row = model.phi_local_row(topic);
        let score = match candidates {
            CandidateWords::FullVocabulary => {
                sentence_tokens.iter().map(|&w| row[w as usize]).sum::<f64>()
            }
            CandidateWords::TopN(n) => {
                let cutoff = top_n_cutoff(row, n);
                sentence_tokens
                    .iter()
                    .map(|&w| row[w as usize])
                    .filter(|&p| p >= cutoff)
                    .sum::<f64>()
            }
        };
        match best {
            Some((_, best_score)) if score <= best_score => {}
            _ => best = Some((topic as u32, score)),
        }
    }
    best.map(|(t, _)| t)
}

/// The probability of the n-th most probable word; words below it are out
/// of the candidate set.
fn top_n_cutoff(row: &[f64], n: usize) -> f64 {
    if n == 0 || n >= row.len() {
        return f64::NEG_INFINITY;
    }
    let mut sorted: Vec<f64> = row.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[n - 1]
}

/// Applies [`assign_sentence_topic`] to all sentences of a review.
pub fn segment_review(
    review: &TokenizedReview,
    model: &TopicModel,
    candidates: CandidateWords,
) -> SegmentedReview {
    let mut sentence_topics = Vec::with_capacity(review.sentences.len());
    let mut topic_sentences: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, (_, tokens)) in review.sentences.iter().enumerate() {
        let topic = assign_sentence_topic(tokens, model, candidates);
        sentence_topics.push((i, topic));
        if let Some(t) = topic {
            topic_sentences.entry(t).or_default().push(i);
        }
    }
    SegmentedReview {
        review_id: review.review_id.clone(),
        user_id: review.user_id.clone(),
        business_id: review.business_id.clone(),
        stars: review.stars,
        sentence_topics,
        topic_sentences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mglda::MgldaParams;
    use proptest::prelude::*;

    fn model(phi_local: Vec<Vec<f64>>, vocab_size: usize) -> TopicModel {
        let k_local = phi_local.len();
        let params = MgldaParams {
            k_global: 1,
            k_local,
            ..MgldaParams::default()
        };
        let uniform = vec![1.0 / vocab_size as f64; vocab_size];
        TopicModel::new(
            params,
            vocab_size,
            uniform,
            phi_local.into_iter().flatten().collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_sentence_is_unassigned() {
        let m = model(vec![vec![0.5, 0.5]], 2);
        assert_eq!(assign_sentence_topic(&[], &m, CandidateWords::FullVocabulary), None);
    }

    #[test]
    fn count_weighted_scores_pick_argmax() {
        // phi_loc = [[0.9, 0.1], [0.1, 0.9]], sentence [0, 0, 1]:
        // scores (1.9, 1.1) → topic 0.
        let m = model(vec![vec![0.9, 0.1], vec![0.1, 0.9]], 2);
        assert_eq!(
            assign_sentence_topic(&[0, 0, 1], &m, CandidateWords::FullVocabulary),
            Some(0)
        );
        assert_eq!(
            assign_sentence_topic(&[1, 1, 0], &m, CandidateWords::FullVocabulary),
            Some(1)
        );
    }

    #[test]
    fn ties_break_to_lowest_topic_index() {
        let m = model(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 2);
        assert_eq!(
            assign_sentence_topic(&[0, 1], &m, CandidateWords::FullVocabulary),
            Some(0)
        );
    }

    #[test]
    fn top_n_restriction_excludes_tail_words() {
        // Topic 0 loves word 0 but its score for word 2 is tiny; with
        // TopN(1) only each topic's best word counts.
        let m = model(vec![vec![0.8, 0.15, 0.05], vec![0.1, 0.1, 0.8]], 3);
        let sentence = [2, 2, 2];
        assert_eq!(
            assign_sentence_topic(&sentence, &m, CandidateWords::TopN(1)),
            Some(1)
        );
    }

    fn review(sentences: Vec<Vec<u32>>) -> TokenizedReview {
        TokenizedReview {
            review_id: "r1".into(),
            user_id: "u1".into(),
            business_id: "b1".into(),
            stars: 4.0,
            sentences: sentences.into_iter().map(|t| (String::new(), t)).collect(),
        }
    }

    #[test]
    fn zero_sentence_review_segments_to_empty_maps() {
        let m = model(vec![vec![0.5, 0.5]], 2);
        let seg = segment_review(&review(vec![]), &m, CandidateWords::FullVocabulary);
        assert!(seg.sentence_topics.is_empty());
        assert!(seg.topic_sentences.is_empty());
    }

    #[test]
    fn per_sentence_assignments_compose() {
        let m = model(vec![vec![0.9, 0.1], vec![0.1, 0.9]], 2);
        // Sentences: topic 0, topic 1, unassigned.
        let seg = segment_review(
            &review(vec![vec![0, 0], vec![1, 1], vec![]]),
            &m,
            CandidateWords::FullVocabulary,
        );
        assert_eq!(seg.sentence_topics, vec![(0, Some(0)), (1, Some(1)), (2, None)]);
        assert_eq!(seg.topic_sentences[&0], vec![0]);
        assert_eq!(seg.topic_sentences[&1], vec![1]);
        assert_eq!(seg.topic_sentences.len(), 2);
    }

    #[test]
    fn identical_sentences_land_on_one_topic() {
        let m = model(vec![vec![0.9, 0.1], vec![0.1, 0.9]], 2);
        let seg = segment_review(
            &review(vec![vec![0, 1]; 4]),
            &m,
            CandidateWords::FullVocabulary,
        );
        assert_eq!(seg.topic_sentences.len(), 1);
        assert_eq!(seg.topic_sentences.values().next().unwrap().len(), 4);
    }

    fn arb_phi(k: usize, v: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(
            proptest::collection::vec(0.01f64..1.0, v..=v),
            k..=k,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .map(|row| {
                    let sum: f64 = row.iter().sum();
                    row.into_iter().map(|x| x / sum).collect()
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn duplicating_tokens_preserves_assignment(
            phi in arb_phi(3, 6),
            tokens in proptest::collection::vec(0u32..6, 1..8),
            reps in 2usize..4,
        ) {
            let m = model(phi, 6);
            let single = assign_sentence_topic(&tokens, &m, CandidateWords::FullVocabulary);
            let mut dup = Vec::new();
            for _ in 0..reps {
                dup.extend_from_slice(&tokens);
            }
            let multi = assign_sentence_topic(&dup, &m, CandidateWords::FullVocabulary);
            prop_assert_eq!(single, multi);
        }

        #[test]
        fn word_order_does_not_matter(
            phi in arb_phi(3, 6),
            tokens in proptest::collection::vec(0u32..6, 1..10),
        ) {
            let m = model(phi, 6);
            let forward = assign_sentence_topic(&tokens, &m, CandidateWords::FullVocabulary);
            let mut reversed = tokens.clone();
            reversed.reverse();
            let backward = assign_sentence_topic(&reversed, &m, CandidateWords::FullVocabulary);
            prop_assert_eq!(forward, backward);
        }

        #[test]
        fn matches_brute_force_enumeration(
            phi in arb_phi(4, 5),
            tokens in proptest::collection::vec(0u32..5, 0..12),
        ) {
            let m = model(phi.clone(), 5);
            let got = assign_sentence_topic(&tokens, &m, CandidateWords::FullVocabulary);
            // Independent enumeration over all topics.
            let expected = if tokens.is_empty() {
                None
            } else {
                let mut best = 0usize;
                let mut best_score = f64::NEG_INFINITY;
                for (k, row) in phi.iter().enumerate() {
                    let score: f64 = tokens.iter().map(|&w| row[w as usize]).sum();
                    if score > best_score {
                        best_score = score;
                        best = k;
                    }
                }
                Some(best as u32)
            };
            prop_assert_eq!(got, expected);
        }
    }
}
