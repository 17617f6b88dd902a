//! Desk-scale continual learning for grounded region-phrase detection.
//!
//! The crate synthesizes streams of shifted domains, trains a minimal
//! dual-encoder grounding model under four regimes (specialized, joint,
//! sequential, rehearsal), and scores checkpoints with ranking average
//! precision to expose cross-domain generalization, catastrophic forgetting,
//! and the effect of replay.

pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod paradigms;
pub mod replay;
pub mod seeding;

pub use error::{Error, Result};
