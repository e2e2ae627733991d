//! Minimal trainable stack: a reverse-mode tape over matrix primitives, the
//! hypernetwork producing per-edge aggregation weights, a linear
//! encoder/decoder pair, and the classification training loop.

pub mod gradcheck;
pub mod mat;
pub mod model;
pub mod nets;
pub mod tape;
pub mod train;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use mat::Mat;
pub use model::{
    infer, model_forward, Ablation, KprimeMode, ModelConfig, ModelKind, ScatterComposition,
};
pub use nets::{load_params, save_params, ModelParams};
pub use tape::{Structure, Tape};
pub use train::{
    accuracy, make_split, train, train_with_split, SplitSets, TrainConfig, TrainMetrics,
};
