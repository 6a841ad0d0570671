//! Multi-grain LDA trained by collapsed Gibbs sampling.
//!
//! Every token carries a latent triple (window, granularity, topic): the
//! window is one of the sliding windows overlapping the token's sentence,
//! and the topic is drawn either from a document-level ("global")
//! distribution or from that window's ("local") distribution. Local topics
//! are the fine-grained ratable dimensions consumed downstream; global
//! topics soak up document-wide themes and are otherwise ignored.
//!
//! Randomness comes from ChaCha8 seeded with a caller 64-bit seed, so runs
//! are reproducible across platforms. Concurrent chains should use distinct
//! seeds or distinct ChaCha streams; a single chain's sweep is sequential
//! because every update touches the shared count tables.

mod io;
mod sampler;

pub use io::{read_model, write_model, write_top_words_tsv, ModelFileHeader};
pub use sampler::GibbsState;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::TokenizedReview;

/// Sampler hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgldaParams {
    pub k_global: usize,
    pub k_local: usize,
    /// Sentences per sliding window.
    pub window_len: usize,
    pub alpha_global: f64,
    pub alpha_local: f64,
    pub alpha_mix_global: f64,
    pub alpha_mix_local: f64,
    pub beta_global: f64,
    pub beta_local: f64,
    pub gamma: f64,
    pub iterations: u32,
    /// Sweeps discarded before phi samples are retained.
    pub burn_in: u32,
    /// Distance between retained phi samples after burn-in.
    pub sample_lag: u32,
    pub seed: u64,
}

impl Default for MgldaParams {
    fn default() -> Self {
        MgldaParams {
            k_global: 40,
            k_local: 15,
            window_len: 2,
            alpha_global: 0.1,
            alpha_local: 0.1,
            alpha_mix_global: 0.1,
            alpha_mix_local: 0.1,
            beta_global: 0.1,
            beta_local: 0.1,
            gamma: 0.1,
            iterations: 1000,
            burn_in: 500,
            sample_lag: 25,
            seed: 42,
        }
    }
}

impl MgldaParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_global", self.alpha_global),
            ("alpha_local", self.alpha_local),
            ("alpha_mix_global", self.alpha_mix_global),
            ("alpha_mix_local", self.alpha_mix_local),
            ("beta_global", self.beta_global),
            ("beta_local", self.beta_local),
            ("gamma", self.gamma),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::invalid(format!("{name} must be a positive real, got {value}")));
            }
        }
        if self.k_global == 0 || self.k_local == 0 || self.window_len == 0 {
            return Err(Error::invalid("topic counts and window length must be >= 1"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn_in ({}) must be < iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.sample_lag == 0 {
            return Err(Error::invalid("sample_lag must be >= 1"));
        }
        Ok(())
    }
}

/// Topic scope selector for word-list queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicScope {
    Global,
    Local,
}

/// Estimated per-topic word distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub params: MgldaParams,
    vocab_size: usize,
    /// Row-major k_global × V, rows sum to 1.
    phi_global: Vec<f64>,
    /// Row-major k_local × V, rows sum to 1.
    phi_local: Vec<f64>,
}

impl TopicModel {
    pub fn new(
        params: MgldaParams,
        vocab_size: usize,
        phi_global: Vec<f64>,
        phi_local: Vec<f64>,
    ) -> Result<Self> {
        if phi_global.len() != params.k_global * vocab_size
            || phi_local.len() != params.k_local * vocab_size
        {
            return Err(Error::invalid("phi matrix dimensions do not match params"));
        }
        Ok(TopicModel {
            params,
            vocab_size,
            phi_global,
            phi_local,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn k_global(&self) -> usize {
        self.params.k_global
    }

    pub fn k_local(&self) -> usize {
        self.params.k_local
    }

    pub fn phi_global_row(&self, topic: usize) -> &[f64] {
        &self.phi_global[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    pub fn phi_local_row(&self, topic: usize) -> &[f64] {
        &self.phi_local[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    pub(crate) fn phi_global_flat(&self) -> &[f64] {
        &self.phi_global
    }

    pub(crate) fn phi_local_flat(&self) -> &[f64] {
        &self.phi_local
    }
}

/// Trains the model: `iterations` full collapsed-Gibbs sweeps, phi averaged
/// over post-burn-in samples taken every `sample_lag` sweeps (final state
/// when the schedule retains none). Deterministic given the seed.
pub fn train(corpus: &[TokenizedReview], vocab_size: usize, params: &MgldaParams) -> Result<TopicModel> {
    params.validate()?;
    let mut state = GibbsState::init(corpus, vocab_size, params)?;
    let mut retained = 0usize;
    let mut phi_global_acc = vec![0.0; params.k_global * vocab_size];
    let mut phi_local_acc = vec![0.0; params.k_local * vocab_size];
    for sweep in 1..=params.iterations {
        state.sweep();
        if sweep > params.burn_in && (sweep - params.burn_in) % params.sample_lag == 0 {
            state.accumulate_phi(&mut phi_global_acc, &mut phi_local_acc);
            retained += 1;
        }
    }
    if retained == 0 {
        state.accumulate_phi(&mut phi_global_acc, &mut phi_local_acc);
        retained = 1;
    }
    let scale = 1.0 / retained as f64;
    for x in &mut phi_global_acc {
        *x *= scale;
    }
    for x in &mut phi_local_acc {
        *x *= scale;
    }
    TopicModel::new(params.clone(), vocab_size, phi_global_acc, phi_local_acc)
}

/// Point estimate of the word distributions from the current counts:
/// `(n_zw + beta) / (n_z + V*beta)` per scope.
pub fn estimate_phi(state: &GibbsState, params: &MgldaParams, vocab_size: usize) -> Result<TopicModel> {
    let mut phi_global = vec![0.0; params.k_global * vocab_size];
    let mut phi_local = vec![0.0; params.k_local * vocab_size];
    state.accumulate_phi(&mut phi_global, &mut phi_local);
    TopicModel::new(params.clone(), vocab_size, phi_global, phi_local)
}

/// Per-topic top-`k` words by probability, ties broken by word id.
pub fn top_words(model: &TopicModel, scope: TopicScope, k: usize) -> Result<Vec<Vec<(u32, f64)>>> {
    if k > model.vocab_size() {
        return Err(Error::invalid(format!(
            "requested top {k} words but the vocabulary has {}",
            model.vocab_size()
        )));
    }
    let topics = match scope {
        TopicScope::Global => model.k_global(),
        TopicScope::Local => model.k_local(),
    };
    let mut out = Vec::with_capacity(topics);
    for t in 0..topics {
        let row = match scope {
            TopicScope::Global => model.phi_global_row(t),
            TopicScope::Local => model.phi_local_row(t),
        };
        let mut indexed: Vec<(u32, f64)> = row.iter().copied().enumerate().map(|(w, p)| (w as u32, p)).collect();
        indexed.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        indexed.truncate(k);
        out.push(indexed);
    }
    Ok(out)
}
