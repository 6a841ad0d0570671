//! Sentence splitting, token normalization, and vocabulary construction.
//!
//! Normalization is deliberately dependency-free: lowercasing, punctuation
//! stripping, an embedded stop-word list (overridable by file), and a small
//! ordered suffix-rule normalizer standing in for a lemmatizer. Downstream
//! math only needs consistent token identity, not linguistic correctness.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("data/stopwords.txt");

/// Abbreviations that keep a following '.' from ending the sentence.
const ABBREVIATIONS: &[&str] = &["mr", "mrs", "dr", "st", "vs", "etc"];

/// Token → lemma overrides tried before the suffix rules. Covers irregular
/// forms and common `-e` + `s` plurals the bare rules would split from
/// their singular ("tables" → "tabl" vs "table").
const LEMMA_EXCEPTIONS: &[(&str, &str)] = &[
    ("men", "man"),
    ("women", "woman"),
    ("children", "child"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("tables", "table"),
    ("prices", "price"),
    ("places", "place"),
    ("sauces", "sauce"),
    ("houses", "house"),
    ("wines", "wine"),
    ("noodles", "noodle"),
    ("plates", "plate"),
    ("cakes", "cake"),
    ("tastes", "taste"),
    ("sides", "side"),
    ("minutes", "minute"),
    ("times", "time"),
    ("dates", "date"),
    ("vegetables", "vegetable"),
    ("olives", "olive"),
    ("cheeses", "cheese"),
    ("pies", "pie"),
    ("services", "service"),
    ("sizes", "size"),
    ("styles", "style"),
    ("stores", "store"),
];

/// Dense token ↔ id mapping with corpus frequencies.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    frequencies: Vec<u64>,
    #[serde(skip)]
    token_to_id: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_entries(entries: Vec<(String, u64)>) -> Self {
        let token_to_id = entries
            .iter()
            .enumerate()
            .map(|(id, (tok, _))| (tok.clone(), id as u32))
            .collect();
        let (id_to_token, frequencies) = entries.into_iter().unzip();
        Vocabulary {
            id_to_token,
            frequencies,
            token_to_id,
        }
    }

    /// Rebuilds the reverse index after deserialization.
    pub fn reindex(&mut self) {
        self.token_to_id = self
            .id_to_token
            .iter()
            .enumerate()
            .map(|(id, tok)| (tok.clone(), id as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token_of(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(|s| s.as_str())
    }

    pub fn frequency_of(&self, id: u32) -> Option<u64> {
        self.frequencies.get(id as usize).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, &str, u64)> {
        self.id_to_token
            .iter()
            .zip(&self.frequencies)
            .enumerate()
            .map(|(id, (tok, &freq))| (id as u32, tok.as_str(), freq))
    }
}

/// A review with its sentences tokenized to vocabulary ids. Raw sentence
/// text is retained for sentiment scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedReview {
    pub review_id: String,
    pub user_id: String,
    pub business_id: String,
    pub stars: f64,
    /// (raw sentence text, vocabulary token ids), in document order.
    pub sentences: Vec<(String, Vec<u32>)>,
}

impl TokenizedReview {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|(_, t)| t.len()).sum()
    }
}

/// Returns the embedded English stop-word list.
pub fn default_stopwords() -> BTreeSet<String> {
    DEFAULT_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Loads a stop-word override file: one token per line, `#` comments allowed.
pub fn load_stopwords<R: BufRead>(reader: R) -> Result<BTreeSet<String>> {
    let mut set = BTreeSet::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<stopword stream>", e))?;
        let tok = line.trim();
        if tok.is_empty() || tok.starts_with('#') {
            continue;
        }
        set.insert(tok.to_lowercase());
    }
    Ok(set)
}

/// Splits text into sentences on '.', '!', '?' followed by whitespace or
/// end-of-text, guarding single-letter initials and known abbreviations.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    for (i, &c) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let at_end = i + 1 == chars.len();
        if !at_end && !chars[i + 1].is_whitespace() {
            continue;
        }
        if c == '.' && guarded_abbreviation(&chars[start..i]) {
            continue;
        }
        let sentence: String = chars[start..=i].iter().collect();
        let sentence = sentence.trim();
        if !sentence.is_empty() {
            sentences.push(sentence.to_string());
        }
        start = i + 1;
    }
    let tail: String = chars[start..].iter().collect();
    let tail = tail.trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

/// True when the word immediately before a '.' is a single letter or a
/// known abbreviation.
fn guarded_abbreviation(before: &[char]) -> bool {
    let word: String = before
        .iter()
        .rev()
        .take_while(|c| c.is_alphabetic())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    if word.chars().count() == 1 {
        return true;
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Lowercases, strips punctuation, drops stop-words and sub-2-char tokens,
/// then applies the suffix normalizer.
pub fn tokenize_normalize(sentence: &str, stopwords: &BTreeSet<String>) -> Vec<String> {
    sentence
        .to_lowercase()
        .split_whitespace()
        .filter_map(|raw| {
            let stripped: String = raw.chars().filter(|c| c.is_alphanumeric()).collect();
            if stripped.chars().count() < 2 || stopwords.contains(&stripped) {
                None
            } else {
                Some(normalize_suffix(&stripped))
            }
        })
        .collect()
}

/// Ordered suffix rules standing in for a lemmatizer; the exception table
/// is consulted first, then the first applicable rule fires.
pub fn normalize_suffix(token: &str) -> String {
    if let Some((_, lemma)) = LEMMA_EXCEPTIONS.iter().find(|(t, _)| *t == token) {
        return (*lemma).to_string();
    }
    if let Some(stem) = token.strip_suffix("ies") {
        return format!("{stem}y");
    }
    if let Some(stem) = token.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    if let Some(stem) = token.strip_suffix("es") {
        return stem.to_string();
    }
    if let Some(stem) = token.strip_suffix('s') {
        if !token.ends_with("ss") && !token.ends_with("us") {
            return stem.to_string();
        }
    }
    if let Some(stem) = token.strip_suffix("ing") {
        if stem.chars().count() >= 3 {
            return stem.to_string();
        }
    }
    if let Some(stem) = token.strip_suffix("ed") {
        if stem.chars().count() >= 3 {
            return stem.to_string();
        }
    }
    token.to_string()
}

/// Builds a vocabulary from normalized token lists: tokens with corpus
/// frequency ≥ `min_count`, ids in descending frequency, ties broken
/// lexicographically.
pub fn build_vocabulary<'a, I>(token_lists: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    if min_count == 0 {
        return Err(Error::invalid("min_count must be >= 1"));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for list in token_lists {
        for tok in list {
            *counts.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_entries(entries))
}

/// Tokenizes one review against a fixed vocabulary; out-of-vocabulary
/// tokens are dropped. Sentences are kept (possibly token-empty) so
/// indices stay aligned with the raw text.
pub fn tokenize_review(
    review_id: &str,
    user_id: &str,
    business_id: &str,
    stars: f64,
    text: &str,
    stopwords: &BTreeSet<String>,
    vocab: &Vocabulary,
) -> TokenizedReview {
    let sentences = split_sentences(text)
        .into_iter()
        .map(|raw| {
            let ids = tokenize_normalize(&raw, stopwords)
                .iter()
                .filter_map(|t| vocab.id_of(t))
                .collect();
            (raw, ids)
        })
        .collect();
    TokenizedReview {
        review_id: review_id.to_string(),
        user_id: user_id.to_string(),
        business_id: business_id.to_string(),
        stars,
        sentences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stop(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn splits_on_two_terminals() {
        assert_eq!(
            split_sentences("Great food. Bad service!"),
            vec!["Great food.", "Bad service!"]
        );
    }

    #[test]
    fn empty_input_splits_to_nothing() {
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn abbreviation_does_not_split() {
        assert_eq!(
            split_sentences("I met Dr. Smith. Nice."),
            vec!["I met Dr. Smith.", "Nice."]
        );
    }

    #[test]
    fn single_letter_initial_does_not_split() {
        assert_eq!(
            split_sentences("I met J. Smith yesterday. Nice."),
            vec!["I met J. Smith yesterday.", "Nice."]
        );
    }

    #[test]
    fn terminal_followed_by_nonspace_does_not_split() {
        assert_eq!(split_sentences("rated 4.5 stars here"), vec!["rated 4.5 stars here"]);
    }

    #[test]
    fn question_and_trailing_text() {
        assert_eq!(
            split_sentences("Any good? We loved it"),
            vec!["Any good?", "We loved it"]
        );
    }

    #[test]
    fn tokenize_drops_stopwords_and_punctuation() {
        assert_eq!(
            tokenize_normalize("The pizza was great!", &stop(&["the", "was"])),
            vec!["pizza", "great"]
        );
    }

    #[test]
    fn tokenize_applies_suffix_rules() {
        assert_eq!(tokenize_normalize("Dishes", &stop(&[])), vec!["dish"]);
    }

    #[test]
    fn tokenize_drops_short_tokens() {
        let out = tokenize_normalize("a I x", &stop(&[]));
        assert!(out.is_empty());
    }

    #[test]
    fn suffix_rule_table() {
        // (input, expected) covering every rule and its guards.
        let table = [
            ("berries", "berry"),   // ies → y
            ("classes", "class"),   // sses → ss
            ("dishes", "dish"),     // es → ""
            ("drinks", "drink"),    // s → ""
            ("glass", "glass"),     // s-rule blocked by ss
            ("delicious", "delicious"), // s-rule blocked by us
            ("looking", "look"),    // ing → "" with stem ≥ 3
            ("king", "king"),       // ing blocked, stem too short
            ("seated", "seat"),     // ed → "" with stem ≥ 3
            ("red", "red"),         // ed blocked, stem too short
            ("tables", "table"),    // exception table
            ("women", "woman"),     // irregular
        ];
        for (input, expected) in table {
            assert_eq!(normalize_suffix(input), expected, "input {input:?}");
        }
    }

    #[test]
    fn vocabulary_threshold_excludes_rare_tokens() {
        let lists: Vec<Vec<String>> =
            vec![vec!["a".into(), "a".into(), "b".into()]];
        let vocab =
            build_vocabulary(lists.iter().map(|l| l.as_slice()), 2).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.id_of("a"), Some(0));
        assert_eq!(vocab.id_of("b"), None);
    }

    #[test]
    fn vocabulary_ties_break_lexicographically() {
        let lists: Vec<Vec<String>> = vec![vec!["b".into(), "a".into()]];
        let vocab = build_vocabulary(lists.iter().map(|l| l.as_slice()), 1).unwrap();
        assert_eq!(vocab.id_of("a"), Some(0));
        assert_eq!(vocab.id_of("b"), Some(1));
    }

    #[test]
    fn vocabulary_matches_brute_force_counter() {
        // 1000-token synthetic corpus over a small alphabet.
        let mut tokens = Vec::new();
        for i in 0..1000usize {
            tokens.push(format!("w{}", (i * i + i / 3) % 37));
        }
        let lists = vec![tokens.clone()];
        let vocab = build_vocabulary(lists.iter().map(|l| l.as_slice()), 5).unwrap();

        let mut counts: HashMap<String, u64> = HashMap::new();
        for t in &tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        let mut expected: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= 5)
            .collect();
        expected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        assert_eq!(vocab.len(), expected.len());
        for (id, (tok, freq)) in expected.iter().enumerate() {
            assert_eq!(vocab.id_of(tok), Some(id as u32));
            assert_eq!(vocab.frequency_of(id as u32), Some(*freq));
        }
    }

    #[test]
    fn empty_corpus_gives_empty_vocabulary() {
        let lists: Vec<Vec<String>> = Vec::new();
        let vocab = build_vocabulary(lists.iter().map(|l| l.as_slice()), 1).unwrap();
        assert!(vocab.is_empty());
    }

    #[test]
    fn oov_tokens_are_dropped_in_review_tokenization() {
        let lists: Vec<Vec<String>> = vec![vec!["pizza".into(), "pizza".into()]];
        let vocab = build_vocabulary(lists.iter().map(|l| l.as_slice()), 1).unwrap();
        let review = tokenize_review(
            "r1",
            "u1",
            "b1",
            4.0,
            "Pizza was stellar. Stellar indeed.",
            &default_stopwords(),
            &vocab,
        );
        assert_eq!(review.sentences.len(), 2);
        assert_eq!(review.sentences[0].1, vec![0]);
        assert!(review.sentences[1].1.is_empty());
        assert_eq!(review.sentences[1].0, "Stellar indeed.");
    }

    proptest! {
        #[test]
        fn tokenization_is_pure(s in ".{0,200}") {
            let sw = default_stopwords();
            prop_assert_eq!(tokenize_normalize(&s, &sw), tokenize_normalize(&s, &sw));
        }

        #[test]
        fn outputs_contain_no_uppercase_punct_or_stopwords(s in ".{0,200}") {
            let sw = default_stopwords();
            for tok in tokenize_normalize(&s, &sw) {
                prop_assert!(!tok.chars().any(|c| c.is_uppercase()));
                // Suffix rules only remove characters, so alphanumeric-only
                // input stays alphanumeric-only.
                prop_assert!(tok.chars().all(|c| c.is_alphanumeric()));
                prop_assert!(!sw.contains(&tok));
            }
        }

        #[test]
        fn vocabulary_ids_are_dense_and_bijective(
            words in proptest::collection::vec("[a-e]{1,3}", 0..60)
        ) {
            let lists = vec![words];
            let vocab = build_vocabulary(lists.iter().map(|l| l.as_slice()), 1).unwrap();
            for (id, tok, _) in vocab.entries() {
                prop_assert_eq!(vocab.id_of(tok), Some(id));
                prop_assert_eq!(vocab.token_of(id), Some(tok));
            }
            prop_assert!((vocab.len() as u32) == vocab.entries().count() as u32);
        }
    }
}
