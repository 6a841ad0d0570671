//! Batch analytics over restaurant reviews.
//!
//! The crate learns latent rating dimensions from review text, finds
//! "representative" users whose star ratings track a single dimension, and
//! predicts overall restaurant ratings from those users' ratings alone.
//!
//! The processing stages, in pipeline order:
//!
//! 1. [`ingest`] — parse newline-delimited JSON review/business dumps,
//!    slice by cuisine category, enforce one review per (user, restaurant).
//! 2. [`textprep`] — sentence splitting, token normalization, vocabulary.
//! 3. [`mglda`] — multi-grain LDA via collapsed Gibbs sampling; local
//!    (sliding-window) topics are the ratable dimensions.
//! 4. [`segment`] — assign each review sentence to the best local topic.
//! 5. [`sentiment`] — lexicon polarity per sentence, averaged per topic.
//! 6. [`usermodel`] — user-topic Pearson correlations and representative
//!    user selection by threshold.
//! 7. [`rating`] — per-restaurant topic ratings, RBF-kernel support vector
//!    regression, baselines, and RMSE evaluation.
//!
//! [`pipeline`] orchestrates the stages over a cached working directory so
//! downstream parameters (threshold, SVR settings) can change without
//! retraining the topic model. [`synth`] generates planted-structure
//! corpora used by the test suite and the bundled fixture.

pub mod error;
pub mod ingest;
pub mod mglda;
pub mod pipeline;
pub mod rating;
pub mod segment;
pub mod sentiment;
pub mod synth;
pub mod textprep;
pub mod usermodel;

pub use error::{Error, Result};
