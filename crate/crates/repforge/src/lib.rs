//! RPE estimation for single-arm dumbbell bicep curls from wearable EMG and
//! IMU recordings.
//!
//! The pipeline runs raw dual-rate recordings through rate alignment,
//! jerk-based repetition segmentation, per-rep feature extraction,
//! EMG-derived label construction (PCA components and t-SNE/k-means
//! clusters), and fold-safe training and evaluation of tree and linear
//! models that estimate the rating of perceived exertion (Borg CR10, 1–10)
//! of each repetition from IMU features alone.
//!
//! See the `book/` guide for a narrative walkthrough of each stage.

pub mod config;
pub mod csvio;
pub mod dataio;
pub mod dsp;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod pipeline;
pub mod runtime;
pub mod seeds;
pub mod segmentation;
pub mod synth;

pub use error::{Error, Result};

/// The narrative guide, one module per `book/` chapter. Including the
/// markdown here makes `cargo test --doc` run every code block, so the
/// guide cannot drift from the API.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    pub mod alignment {}
    #[doc = include_str!("../../../book/src/segmentation.md")]
    pub mod segmentation {}
    #[doc = include_str!("../../../book/src/features.md")]
    pub mod features {}
    #[doc = include_str!("../../../book/src/labels.md")]
    pub mod labels {}
    #[doc = include_str!("../../../book/src/learners.md")]
    pub mod learners {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub mod reproducibility {}
}
