//! Cross-entropy training with Adam and subject-independent k-fold
//! cross-validation.

mod adam;
mod cv;
mod data;
mod loss;
mod train;

pub use adam::{adam_step, AdamState, ModelAdam};
pub use cv::{kfold_cv, mean_accuracy, CvOptions, FoldReport};
pub use data::{cut_windows, eval_windows, training_windows, Window, WindowSource};
pub use loss::cross_entropy;
pub use train::{train, EpochRecord, TrainHyper, TrainOutcome};
