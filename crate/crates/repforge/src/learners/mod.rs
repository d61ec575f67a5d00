//! Native learners: CART decision trees, random forests, gradient-boosted
//! trees, and linear models (multinomial logistic regression, elastic net).
//!
//! All fits are deterministic given a master seed; per-tree and per-round
//! randomness is derived from labeled sub-seeds so results do not depend on
//! fitting order.

mod forest;
mod gbt;
mod linear;
mod serialize;
mod tree;

pub use forest::{feature_importance, forest_fit, ForestModel, ForestParams};
pub use gbt::{gbt_fit, GbtModel, GbtParams};
pub use linear::{
    elastic_net_fit, logistic_fit, logistic_loss_and_grad, LinearModel, LogisticModel,
};
pub use serialize::{
    describe_model, model_from_text, model_to_text, read_model, schema_hash, write_model,
    ModelFile, SavedModel, MODEL_FORMAT_VERSION,
};
pub use tree::{tree_fit, DecisionTree, Target, Task, TreeParams};

/// Maps a sparse label set (RPE values are 1..=10 but a fold may only see a
/// few) to dense class indices and back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    /// Sorted distinct original labels; position = dense class index.
    pub classes: Vec<u8>,
}

impl LabelMap {
    pub fn fit(labels: &[u8]) -> LabelMap {
        let mut classes: Vec<u8> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        LabelMap { classes }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn encode(&self, label: u8) -> Option<usize> {
        self.classes.binary_search(&label).ok()
    }

    pub fn decode(&self, index: usize) -> u8 {
        self.classes[index]
    }

    pub fn encode_all(&self, labels: &[u8]) -> Option<Vec<usize>> {
        labels.iter().map(|&l| self.encode(l)).collect()
    }
}
