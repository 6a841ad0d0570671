//! Collapsed Gibbs state and sweep for multi-grain LDA.
//!
//! Window geometry: a document with `S` sentences and window length `W` has
//! `S + W - 1` windows; sentence `s` (0-based) overlaps windows
//! `s ..= s + W - 1`, and window `v` covers sentences
//! `max(0, v - W + 1) ..= min(S - 1, v)`. A token's latent state is
//! (window offset into its sentence's W windows, granularity, topic),
//! sampled jointly from the collapsed conditional: window term ×
//! granularity term × topic term × word term, each with the token's own
//! count excluded.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textprep::TokenizedReview;

use super::MgldaParams;

/// Topic code: values below `k_global` are global topics; the rest are
/// local topics shifted by `k_global`.
type TopicCode = u16;

struct Doc {
    /// Token word ids, flattened across sentences in order.
    words: Vec<u32>,
    /// Sentence index of each token.
    sentence_of: Vec<u32>,
    /// Token count per sentence (fixed over sampling).
    sentence_tokens: Vec<u32>,
    n_windows: usize,
}

struct DocCounts {
    /// sentence-major [S × W]: tokens of sentence s assigned window offset o.
    n_ds_v: Vec<u32>,
    /// Per window: tokens assigned with global granularity.
    n_dv_glo: Vec<u32>,
    /// Per window: tokens assigned with local granularity.
    n_dv_loc: Vec<u32>,
    /// Per global topic, document level.
    n_d_glo_z: Vec<u32>,
    n_d_glo: u32,
    /// window-major [n_windows × k_local].
    n_dv_loc_z: Vec<u32>,
}

/// Full latent state of one Gibbs chain.
pub struct GibbsState {
    k_global: usize,
    k_local: usize,
    window_len: usize,
    vocab_size: usize,
    alpha_global: f64,
    alpha_local: f64,
    alpha_mix_global: f64,
    alpha_mix_local: f64,
    beta_global: f64,
    beta_local: f64,
    gamma: f64,

    docs: Vec<Doc>,
    counts: Vec<DocCounts>,
    /// Per doc, per token: (window offset, topic code).
    assign: Vec<Vec<(u8, TopicCode)>>,

    /// topic-major [k × V] word counts and per-topic totals.
    n_zw_glo: Vec<u32>,
    n_z_glo: Vec<u32>,
    n_zw_loc: Vec<u32>,
    n_z_loc: Vec<u32>,

    token_count: usize,
    rng: ChaCha8Rng,

    // scratch, reused across tokens
    weights: Vec<f64>,
    global_topic_word: Vec<f64>,
    local_word: Vec<f64>,
}

impl GibbsState {
    /// Builds a state with every token assigned uniformly at random over
    /// (window, granularity, topic), then populates the count tables.
    pub fn init(corpus: &[TokenizedReview], vocab_size: usize, params: &MgldaParams) -> Result<Self> {
        params.validate()?;
        if corpus.is_empty() {
            return Err(Error::invalid("corpus must be non-empty"));
        }
        if params.window_len > u8::MAX as usize {
            return Err(Error::invalid("window length exceeds 255"));
        }
        if params.k_global + params.k_local > TopicCode::MAX as usize {
            return Err(Error::invalid("too many topics"));
        }

        let w_len = params.window_len;
        let mut docs = Vec::with_capacity(corpus.len());
        for (i, review) in corpus.iter().enumerate() {
            let mut words = Vec::new();
            let mut sentence_of = Vec::new();
            let mut sentence_tokens = Vec::new();
            for (s, (_, tokens)) in review.sentences.iter().enumerate() {
                sentence_tokens.push(tokens.len() as u32);
                for &w in tokens {
                    if w as usize >= vocab_size {
                        return Err(Error::invalid(format!(
                            "document {i} has token id {w} >= vocabulary size {vocab_size}"
                        )));
                    }
                    words.push(w);
                    sentence_of.push(s as u32);
                }
            }
            if words.is_empty() {
                return Err(Error::invalid(format!(
                    "document {i} ({}) has no tokens; filter token-free documents before training",
                    review.review_id
                )));
            }
            let n_windows = review.sentences.len() + w_len - 1;
            docs.push(Doc {
                words,
                sentence_of,
                sentence_tokens,
                n_windows,
            });
        }

        let k_global = params.k_global;
        let k_local = params.k_local;
        let mut state = GibbsState {
            k_global,
            k_local,
            window_len: w_len,
            vocab_size,
            alpha_global: params.alpha_global,
            alpha_local: params.alpha_local,
            alpha_mix_global: params.alpha_mix_global,
            alpha_mix_local: params.alpha_mix_local,
            beta_global: params.beta_global,
            beta_local: params.beta_local,
            gamma: params.gamma,
            counts: docs
                .iter()
                .map(|d| DocCounts {
                    n_ds_v: vec![0; d.sentence_tokens.len() * w_len],
                    n_dv_glo: vec![0; d.n_windows],
                    n_dv_loc: vec![0; d.n_windows],
                    n_d_glo_z: vec![0; k_global],
                    n_d_glo: 0,
                    n_dv_loc_z: vec![0; d.n_windows * k_local],
                })
                .collect(),
            assign: docs.iter().map(|d| Vec::with_capacity(d.words.len())).collect(),
            n_zw_glo: vec![0; k_global * vocab_size],
            n_z_glo: vec![0; k_global],
            n_zw_loc: vec![0; k_local * vocab_size],
            n_z_loc: vec![0; k_local],
            token_count: docs.iter().map(|d| d.words.len()).sum(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            weights: vec![0.0; w_len * (k_global + k_local)],
            global_topic_word: vec![0.0; k_global],
            local_word: vec![0.0; k_local],
            docs,
        };

        for d in 0..state.docs.len() {
            for ti in 0..state.docs[d].words.len() {
                let offset = state.rng.random_range(0..w_len) as u8;
                let code = state.rng.random_range(0..k_global + k_local) as TopicCode;
                state.assign[d].push((offset, code));
                state.apply_assignment(d, ti, offset, code, 1);
            }
        }
        Ok(state)
    }

    fn apply_assignment(&mut self, d: usize, ti: usize, offset: u8, code: TopicCode, delta: i64) {
        let doc = &self.docs[d];
        let counts = &mut self.counts[d];
        let w = doc.words[ti] as usize;
        let s = doc.sentence_of[ti] as usize;
        let v = s + offset as usize;
        let add = |c: &mut u32| {
            *c = (*c as i64 + delta) as u32;
        };
        add(&mut counts.n_ds_v[s * self.window_len + offset as usize]);
        let code = code as usize;
        if code < self.k_global {
            add(&mut counts.n_dv_glo[v]);
            add(&mut counts.n_d_glo_z[code]);
            add(&mut counts.n_d_glo);
            add(&mut self.n_zw_glo[code * self.vocab_size + w]);
            add(&mut self.n_z_glo[code]);
        } else {
            let z = code - self.k_global;
            add(&mut counts.n_dv_loc[v]);
            add(&mut counts.n_dv_loc_z[v * self.k_local + z]);
            add(&mut self.n_zw_loc[z * self.vocab_size + w]);
            add(&mut self.n_z_loc[z]);
        }
    }

    /// One full sweep: every token's (window, granularity, topic) triple is
    /// resampled from its collapsed conditional.
    pub fn sweep(&mut self) {
        let v_beta_glo = self.vocab_size as f64 * self.beta_global;
        let v_beta_loc = self.vocab_size as f64 * self.beta_local;
        let k_alpha_glo = self.k_global as f64 * self.alpha_global;
        let k_alpha_loc = self.k_local as f64 * self.alpha_local;
        let mix_sum = self.alpha_mix_global + self.alpha_mix_local;
        let n_codes = self.k_global + self.k_local;

        for d in 0..self.docs.len() {
            for ti in 0..self.docs[d].words.len() {
                let (old_offset, old_code) = self.assign[d][ti];
                self.apply_assignment(d, ti, old_offset, old_code, -1);

                let doc = &self.docs[d];
                let counts = &self.counts[d];
                let w = doc.words[ti] as usize;
                let s = doc.sentence_of[ti] as usize;

                // Word and document-topic factors that do not depend on the
                // window choice.
                let glo_topic_den = counts.n_d_glo as f64 + k_alpha_glo;
                for z in 0..self.k_global {
                    let word = (self.n_zw_glo[z * self.vocab_size + w] as f64 + self.beta_global)
                        / (self.n_z_glo[z] as f64 + v_beta_glo);
                    let topic = (counts.n_d_glo_z[z] as f64 + self.alpha_global) / glo_topic_den;
                    self.global_topic_word[z] = word * topic;
                }
                for z in 0..self.k_local {
                    self.local_word[z] = (self.n_zw_loc[z * self.vocab_size + w] as f64
                        + self.beta_local)
                        / (self.n_z_loc[z] as f64 + v_beta_loc);
                }

                let sentence_rest = (doc.sentence_tokens[s] - 1) as f64;
                let window_den = sentence_rest + self.window_len as f64 * self.gamma;
                let mut total = 0.0;
                let mut idx = 0;
                for o in 0..self.window_len {
                    let v = s + o;
                    let window = (counts.n_ds_v[s * self.window_len + o] as f64 + self.gamma)
                        / window_den;
                    let n_dv = (counts.n_dv_glo[v] + counts.n_dv_loc[v]) as f64;
                    let gran_den = n_dv + mix_sum;
                    let factor_glo =
                        window * (counts.n_dv_glo[v] as f64 + self.alpha_mix_global) / gran_den;
                    for z in 0..self.k_global {
                        let weight = factor_glo * self.global_topic_word[z];
                        self.weights[idx] = weight;
                        total += weight;
                        idx += 1;
                    }
                    let factor_loc =
                        window * (counts.n_dv_loc[v] as f64 + self.alpha_mix_local) / gran_den;
                    let loc_topic_den = counts.n_dv_loc[v] as f64 + k_alpha_loc;
                    let base = v * self.k_local;
                    for z in 0..self.k_local {
                        let topic =
                            (counts.n_dv_loc_z[base + z] as f64 + self.alpha_local) / loc_topic_den;
                        let weight = factor_loc * topic * self.local_word[z];
                        self.weights[idx] = weight;
                        total += weight;
                        idx += 1;
                    }
                }

                let pick = {
                    let u = self.rng.random::<f64>() * total;
                    let mut acc = 0.0;
                    let mut chosen = idx - 1;
                    for (i, &weight) in self.weights[..idx].iter().enumerate() {
                        acc += weight;
                        if u < acc {
                            chosen = i;
                            break;
                        }
                    }
                    chosen
                };
                let new_offset = (pick / n_codes) as u8;
                let new_code = (pick % n_codes) as TopicCode;
                self.assign[d][ti] = (new_offset, new_code);
                self.apply_assignment(d, ti, new_offset, new_code, 1);
            }
        }
    }

    /// Adds the smoothed phi estimate from the current counts into the
    /// accumulators (row-major k × V).
    pub fn accumulate_phi(&self, phi_global: &mut [f64], phi_local: &mut [f64]) {
        let v_beta_glo = self.vocab_size as f64 * self.beta_global;
        for z in 0..self.k_global {
            let den = self.n_z_glo[z] as f64 + v_beta_glo;
            for w in 0..self.vocab_size {
                phi_global[z * self.vocab_size + w] +=
                    (self.n_zw_glo[z * self.vocab_size + w] as f64 + self.beta_global) / den;
            }
        }
        let v_beta_loc = self.vocab_size as f64 * self.beta_local;
        for z in 0..self.k_local {
            let den = self.n_z_loc[z] as f64 + v_beta_loc;
            for w in 0..self.vocab_size {
                phi_local[z * self.vocab_size + w] +=
                    (self.n_zw_loc[z * self.vocab_size + w] as f64 + self.beta_local) / den;
            }
        }
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    /// Total assignments currently recorded in the topic tables.
    pub fn total_assignments(&self) -> u64 {
        let glo: u64 = self.n_z_glo.iter().map(|&c| c as u64).sum();
        let loc: u64 = self.n_z_loc.iter().map(|&c| c as u64).sum();
        glo + loc
    }

    /// Cross-checks every marginal consistency invariant of the count
    /// tables against the raw assignments.
    pub fn validate_counts(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(format!("count invariant violated: {msg}")));

        if self.total_assignments() != self.token_count as u64 {
            return fail(format!(
                "total assignments {} != token count {}",
                self.total_assignments(),
                self.token_count
            ));
        }
        for z in 0..self.k_global {
            let row: u64 = self.n_zw_glo[z * self.vocab_size..(z + 1) * self.vocab_size]
                .iter()
                .map(|&c| c as u64)
                .sum();
            if row != self.n_z_glo[z] as u64 {
                return fail(format!("global topic {z}: word counts sum {row} != total {}", self.n_z_glo[z]));
            }
        }
        for z in 0..self.k_local {
            let row: u64 = self.n_zw_loc[z * self.vocab_size..(z + 1) * self.vocab_size]
                .iter()
                .map(|&c| c as u64)
                .sum();
            if row != self.n_z_loc[z] as u64 {
                return fail(format!("local topic {z}: word counts sum {row} != total {}", self.n_z_loc[z]));
            }
        }
        for (d, (doc, counts)) in self.docs.iter().zip(&self.counts).enumerate() {
            // Window offsets must stay within each sentence's W windows.
            for (ti, &(offset, _)) in self.assign[d].iter().enumerate() {
                if (offset as usize) >= self.window_len {
                    return fail(format!("doc {d} token {ti}: window offset {offset} out of range"));
                }
            }
            for (s, &tokens) in doc.sentence_tokens.iter().enumerate() {
                let assigned: u32 = counts.n_ds_v[s * self.window_len..(s + 1) * self.window_len]
                    .iter()
                    .sum();
                if assigned != tokens {
                    return fail(format!("doc {d} sentence {s}: {assigned} window assignments for {tokens} tokens"));
                }
            }
            let glo_z_total: u32 = counts.n_d_glo_z.iter().sum();
            if glo_z_total != counts.n_d_glo {
                return fail(format!("doc {d}: global topic counts sum {glo_z_total} != {}", counts.n_d_glo));
            }
            let glo_window_total: u32 = counts.n_dv_glo.iter().sum();
            if glo_window_total != counts.n_d_glo {
                return fail(format!("doc {d}: global window counts sum {glo_window_total} != {}", counts.n_d_glo));
            }
            for v in 0..doc.n_windows {
                let z_total: u32 = counts.n_dv_loc_z[v * self.k_local..(v + 1) * self.k_local]
                    .iter()
                    .sum();
                if z_total != counts.n_dv_loc[v] {
                    return fail(format!("doc {d} window {v}: local topic counts sum {z_total} != {}", counts.n_dv_loc[v]));
                }
            }
            let doc_total: u32 = counts.n_dv_glo.iter().sum::<u32>() + counts.n_dv_loc.iter().sum::<u32>();
            if doc_total as usize != doc.words.len() {
                return fail(format!("doc {d}: window totals {doc_total} != {} tokens", doc.words.len()));
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn local_word_counts(&self) -> (Vec<u32>, Vec<u32>) {
        (self.n_zw_loc.clone(), self.n_z_loc.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(sentences: &[&[u32]]) -> TokenizedReview {
        TokenizedReview {
            review_id: "r".into(),
            user_id: "u".into(),
            business_id: "b".into(),
            stars: 3.0,
            sentences: sentences.iter().map(|s| (String::new(), s.to_vec())).collect(),
        }
    }

    fn params() -> MgldaParams {
        MgldaParams {
            k_global: 3,
            k_local: 2,
            iterations: 5,
            burn_in: 2,
            ..MgldaParams::default()
        }
    }

    #[test]
    fn init_populates_consistent_counts() {
        let corpus = vec![
            doc(&[&[0, 1, 2], &[3], &[4, 4]]),
            doc(&[&[2, 2, 2, 1]]),
        ];
        let state = GibbsState::init(&corpus, 5, &params()).unwrap();
        assert_eq!(state.token_count(), 10);
        state.validate_counts().unwrap();
    }

    #[test]
    fn sweeps_preserve_invariants() {
        let corpus = vec![
            doc(&[&[0, 1, 2], &[3], &[4, 4]]),
            doc(&[&[2, 2, 2, 1], &[0, 0]]),
            doc(&[&[1], &[], &[3, 4]]), // token-empty middle sentence
        ];
        let mut state = GibbsState::init(&corpus, 5, &params()).unwrap();
        for _ in 0..30 {
            state.sweep();
            state.validate_counts().unwrap();
        }
    }

    #[test]
    fn empty_middle_sentence_contributes_no_assignments() {
        let corpus = vec![doc(&[&[1], &[], &[3, 4]])];
        let mut state = GibbsState::init(&corpus, 5, &params()).unwrap();
        for _ in 0..5 {
            state.sweep();
        }
        assert_eq!(state.token_count(), 3);
        assert_eq!(state.total_assignments(), 3);
    }
}
