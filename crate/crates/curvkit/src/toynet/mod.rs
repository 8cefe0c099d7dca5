//! Desk-scale two-stage multi-task convolutional network: coarse predictions
//! are upsampled and concatenated with trunk skip features into a fine
//! stage, and all task stacks stay in the graph regardless of which tasks
//! carry solvers, keeping the parameter count constant across task subsets.

mod capacity;
mod layers;
mod model_io;
mod net;
mod tensor;
mod train;

pub use capacity::{
    capacity_task_sets, run_capacity_experiment, CapacityReport, ConfigurationReport,
    ConfigurationRun,
};
pub use layers::ConvLayer;
pub use model_io::{load_model, save_model, MODEL_VERSION};
pub use net::{ForwardPass, Network, NetworkConfig, Task, TaskSolver, TaskStack};
pub use tensor::TensorBuffer;
pub use train::{
    backward_and_step, evaluate_heldout, predictions_to_maps, prepare_samples, sample_gradients,
    sample_losses, split_holdout, train, EpochRecord, HeldoutMetrics, NetSample, OptimizerState,
    PredictionMaps, ScaleTruth, StepLosses, StopTargets, TrainReport, DIVERGENCE_LIMIT,
};
