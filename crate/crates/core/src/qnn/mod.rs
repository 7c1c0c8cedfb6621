//! Quantum neural network classifier: angle encoder, trainable ansatz and a
//! Z-expectation readout, trained with parameter-shift gradients and Adam.

mod dataset;
mod model;
mod train;

pub use dataset::{
    load_csv, load_dataset, load_image_dir, pool_image, synthetic, Dataset, DatasetSpec, Sample, Split, SyntheticKind, CROP, POOL,
    SYNTHETIC_POINTS,
};
pub use model::{
    angle_encode, argmax, batch_gradient, batch_loss, cross_entropy, evaluate, gradient, init_params, loss_and_accuracy, softmax,
    EncoderSlot, EncoderSpec, Model, Readout,
};
pub use train::{
    prune_trained, train, train_with_growth, train_with_pruning, EpochMetrics, GrowthRecord, PruneRecord, TrainConfig, TrainOutcome,
    TrainReport, EPOCH_CSV_HEADER,
};
