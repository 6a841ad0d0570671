//! Lexicon-based sentence polarity and per-topic sentiment aggregation.
//!
//! Scoring tokenizes on its own (lowercase, punctuation stripped, stop-words
//! kept) because negators like "not" are stop-words upstream. Each valence
//! token contributes its valence, sign-flipped once per negator in the three
//! preceding tokens, and scaled by an intensifier multiplier when the
//! immediately preceding token is one. Sentence polarity is the mean of the
//! contributions, clamped to [-1, 1].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segment::SegmentedReview;

const DEFAULT_LEXICON: &str = include_str!("data/lexicon.tsv");

/// How many tokens back a negator still flips a valence token.
const NEGATION_WINDOW: usize = 3;

/// Valence lexicon with negation and intensifier tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    valence: HashMap<String, f64>,
    negators: HashSet<String>,
    intensifiers: HashMap<String, f64>,
}

impl SentimentLexicon {
    /// The compiled-in default lexicon.
    pub fn embedded() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("embedded lexicon is well-formed")
    }

    /// Loads an override lexicon; same layout as the embedded file.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut content = String::new();
        let mut reader = reader;
        reader
            .read_to_string(&mut content)
            .map_err(|e| Error::io("<lexicon stream>", e))?;
        Self::parse(&content)
    }

    fn parse(content: &str) -> Result<Self> {
        enum Section {
            Valence,
            Negators,
            Intensifiers,
        }
        let mut section = Section::Valence;
        let mut lexicon = SentimentLexicon {
            valence: HashMap::new(),
            negators: HashSet::new(),
            intensifiers: HashMap::new(),
        };
        for (no, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[valence]" => {
                    section = Section::Valence;
                    continue;
                }
                "[negators]" => {
                    section = Section::Negators;
                    continue;
                }
                "[intensifiers]" => {
                    section = Section::Intensifiers;
                    continue;
                }
                _ => {}
            }
            let mut fields = line.split('\t');
            let token = fields.next().unwrap_or_default().to_lowercase();
            let bad = |what: &str| {
                Error::invalid(format!("lexicon line {}: {}", no + 1, what))
            };
            match section {
                Section::Valence => {
                    let value: f64 = fields
                        .next()
                        .ok_or_else(|| bad("missing valence value"))?
                        .parse()
                        .map_err(|_| bad("unparseable valence value"))?;
                    if !(-1.0..=1.0).contains(&value) {
                        return Err(bad("valence outside [-1, 1]"));
                    }
                    lexicon.valence.insert(token, value);
                }
                Section::Negators => {
                    lexicon.negators.insert(token);
                }
                Section::Intensifiers => {
                    let value: f64 = fields
                        .next()
                        .ok_or_else(|| bad("missing intensifier multiplier"))?
                        .parse()
                        .map_err(|_| bad("unparseable intensifier multiplier"))?;
                    if !(value > 0.0 && value <= 4.0) {
                        return Err(bad("intensifier multiplier outside (0, 4]"));
                    }
                    lexicon.intensifiers.insert(token, value);
                }
            }
        }
        Ok(lexicon)
    }

    pub fn valence_of(&self, token: &str) -> Option<f64> {
        self.valence.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }
}

/// One review's mean sentiment per local topic, in [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewTopicSentiment {
    pub review_id: String,
    pub user_id: String,
    pub business_id: String,
    pub stars: f64,
    /// Only topics with at least one assigned sentence are present.
    pub topic_sentiment: BTreeMap<u32, f64>,
}

fn sentiment_tokens(raw: &str) -> Vec<String> {
    raw.to_lowercase()
        .split_whitespace()
        .map(|t| t.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Scores one raw sentence in [-1, 1]; 0.0 when no lexicon word occurs.
///
/// Double negation restores sign: the flip is applied once per negator in
/// the window, so "not not good" scores like "good".
pub fn sentence_polarity(raw_sentence: &str, lexicon: &SentimentLexicon) -> f64 {
    let tokens = sentiment_tokens(raw_sentence);
    let mut contributions = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        let Some(valence) = lexicon.valence_of(tok) else {
            continue;
        };
        let window_start = i.saturating_sub(NEGATION_WINDOW);
        let negations = tokens[window_start..i]
            .iter()
            .filter(|t| lexicon.negators.contains(*t))
            .count();
        let sign = if negations % 2 == 0 { 1.0 } else { -1.0 };
        let boost = i
            .checked_sub(1)
            .and_then(|p| lexicon.intensifiers.get(&tokens[p]))
            .copied()
            .unwrap_or(1.0);
        contributions.push(valence * sign * boost);
    }
    if contributions.is_empty() {
        return 0.0;
    }
    let mean = contributions.iter().sum::<f64>() / contributions.len() as f64;
    mean.clamp(-1.0, 1.0)
}

/// Averages sentence polarities per assigned topic.
///
/// `raw_sentences` must align index-for-index with the segmentation. When
/// `include_neutral` is false, zero-polarity sentences are left out of the
/// per-topic means (a topic whose sentences all score 0 still appears,
/// with sentiment 0).
pub fn review_topic_sentiment(
    seg: &SegmentedReview,
    raw_sentences: &[String],
    lexicon: &SentimentLexicon,
    include_neutral: bool,
) -> Result<ReviewTopicSentiment> {
    if seg.sentence_topics.len() != raw_sentences.len() {
        return Err(Error::invalid(format!(
            "segmentation of review {} has {} sentences but {} raw sentences were supplied",
            seg.review_id,
            seg.sentence_topics.len(),
            raw_sentences.len()
        )));
    }
    let polarities: Vec<f64> = raw_sentences
        .iter()
        .map(|s| sentence_polarity(s, lexicon))
        .collect();
    let mut topic_sentiment = BTreeMap::new();
    for (topic, sentence_indices) in &seg.topic_sentences {
        let scores: Vec<f64> = sentence_indices
            .iter()
            .map(|&i| polarities[i])
            .filter(|&p| include_neutral || p != 0.0)
            .collect();
        let mean = if scores.is_empty() {
            0.0
        } else {
            scores.iter().sum::<f64>() / scores.len() as f64
        };
        topic_sentiment.insert(*topic, mean.clamp(-1.0, 1.0));
    }
    Ok(ReviewTopicSentiment {
        review_id: seg.review_id.clone(),
        user_id: seg.user_id.clone(),
        business_id: seg.business_id.clone(),
        stars: seg.stars,
        topic_sentiment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn embedded() -> SentimentLexicon {
        SentimentLexicon::embedded()
    }

    #[test]
    fn embedded_lexicon_parses_and_is_sizable() {
        let lex = embedded();
        assert!(lex.len() > 800, "only {} valence entries", lex.len());
        assert!(lex.negators.len() >= 15);
        assert!(lex.intensifiers.len() >= 20);
    }

    #[test]
    fn embedded_values_in_range() {
        let lex = embedded();
        assert!(lex.valence.values().all(|v| (-1.0..=1.0).contains(v)));
        assert!(lex.intensifiers.values().all(|&m| m > 0.0 && m <= 4.0));
    }

    #[test]
    fn no_lexicon_words_scores_zero() {
        assert_eq!(sentence_polarity("the chair is a chair", &embedded()), 0.0);
    }

    #[test]
    fn single_word_scores_its_valence() {
        assert_eq!(sentence_polarity("good", &embedded()), 0.7);
    }

    #[test]
    fn negation_flips_sign() {
        assert_eq!(sentence_polarity("not good", &embedded()), -0.7);
    }

    #[test]
    fn double_negation_restores_sign() {
        assert_eq!(sentence_polarity("not not good", &embedded()), 0.7);
    }

    #[test]
    fn negator_outside_window_does_not_flip() {
        // "not" is four tokens before "good".
        assert_eq!(
            sentence_polarity("not that kind of good", &embedded()),
            0.7
        );
    }

    #[test]
    fn intensifier_scales_immediately_following_word() {
        let lex = embedded();
        let plain = sentence_polarity("good", &lex);
        let boosted = sentence_polarity("very good", &lex);
        assert!((boosted - plain * 1.3).abs() < 1e-12);
    }

    #[test]
    fn negated_intensified_word() {
        // Flip from "not" (2 back), boost from adjacent "very".
        let got = sentence_polarity("not very good", &embedded());
        assert!((got - (-0.7 * 1.3)).abs() < 1e-12);
    }

    #[test]
    fn polarity_is_mean_of_contributions() {
        let lex = embedded();
        let good = lex.valence_of("good").unwrap();
        let bad = lex.valence_of("bad").unwrap();
        let got = sentence_polarity("good but bad", &lex);
        assert!((got - (good + bad) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn punctuation_stripped_before_lookup() {
        assert_eq!(sentence_polarity("Good!!!", &embedded()), 0.7);
    }

    fn seg_fixture(assignments: &[Option<u32>]) -> SegmentedReview {
        let sentence_topics = assignments
            .iter()
            .enumerate()
            .map(|(i, t)| (i, *t))
            .collect();
        let mut topic_sentences: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, t) in assignments.iter().enumerate() {
            if let Some(t) = t {
                topic_sentences.entry(*t).or_default().push(i);
            }
        }
        SegmentedReview {
            review_id: "r1".into(),
            user_id: "u1".into(),
            business_id: "b1".into(),
            stars: 4.0,
            sentence_topics,
            topic_sentences,
        }
    }

    #[test]
    fn per_topic_mean_of_assigned_sentences() {
        let lex = embedded();
        let seg = seg_fixture(&[Some(0), Some(0), Some(1), None]);
        let sentences = vec![
            "good".to_string(),     // 0.7 → topic 0
            "bad".to_string(),      // -0.7 → topic 0
            "great".to_string(),    // 0.8 → topic 1
            "terrible".to_string(), // unassigned, ignored
        ];
        let out = review_topic_sentiment(&seg, &sentences, &lex, true).unwrap();
        assert!((out.topic_sentiment[&0] - 0.0).abs() < 1e-12);
        assert!((out.topic_sentiment[&1] - 0.8).abs() < 1e-12);
        assert!(!out.topic_sentiment.contains_key(&2));
    }

    #[test]
    fn misaligned_sentences_is_an_error() {
        let seg = seg_fixture(&[Some(0)]);
        let err = review_topic_sentiment(&seg, &[], &embedded(), true);
        assert!(err.is_err());
    }

    #[test]
    fn neutral_sentences_can_be_excluded() {
        let lex = embedded();
        let seg = seg_fixture(&[Some(0), Some(0)]);
        let sentences = vec!["good".to_string(), "table chair".to_string()];
        let with = review_topic_sentiment(&seg, &sentences, &lex, true).unwrap();
        let without = review_topic_sentiment(&seg, &sentences, &lex, false).unwrap();
        assert!((with.topic_sentiment[&0] - 0.35).abs() < 1e-12);
        assert!((without.topic_sentiment[&0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn group_by_mean_matches_brute_force() {
        let lex = embedded();
        let words = ["good", "bad", "great", "terrible", "okay", "fine"];
        let assignments = [Some(0), Some(1), Some(0), None, Some(2), Some(1)];
        let seg = seg_fixture(&assignments);
        let sentences: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        let out = review_topic_sentiment(&seg, &sentences, &lex, true).unwrap();

        let mut expected: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for (i, t) in assignments.iter().enumerate() {
            if let Some(t) = t {
                expected
                    .entry(*t)
                    .or_default()
                    .push(sentence_polarity(&sentences[i], &lex));
            }
        }
        for (topic, scores) in expected {
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            assert!((out.topic_sentiment[&topic] - mean).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn polarity_always_within_unit_interval(s in ".{0,300}") {
            let p = sentence_polarity(&s, &embedded());
            prop_assert!((-1.0..=1.0).contains(&p));
        }

        #[test]
        fn plain_sentences_score_mean_of_valences(
            words in proptest::collection::vec(
                prop::sample::select(vec!["good", "bad", "great", "awful", "chair", "fine"]),
                1..8,
            )
        ) {
            let lex = embedded();
            // No negators or intensifiers in the pool, so the score is the
            // plain mean of matched valences.
            let sentence = words.join(" ");
            let vals: Vec<f64> = words.iter().filter_map(|w| lex.valence_of(w)).collect();
            let expected = if vals.is_empty() {
                0.0
            } else {
                (vals.iter().sum::<f64>() / vals.len() as f64).clamp(-1.0, 1.0)
            };
            prop_assert!((sentence_polarity(&sentence, &lex) - expected).abs() < 1e-12);
        }
    }
}
