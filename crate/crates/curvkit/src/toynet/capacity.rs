//! Fixed-capacity single-vs-joint training harness: four task
//! configurations with identical parameter counts, trained with identical
//! seeds, reported side by side. The harness records outcomes and makes no
//! statistical claim.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::synth::Dataset;

use super::net::{Network, NetworkConfig, Task};
use super::train::{prepare_samples, train, StopTargets, TrainReport};

/// The four canonical configurations.
pub fn capacity_task_sets() -> [(&'static str, Vec<Task>); 4] {
    [
        ("depth_only", vec![Task::Depth]),
        ("normals_only", vec![Task::Normals]),
        ("depth_normals", vec![Task::Depth, Task::Normals]),
        ("joint_all", vec![Task::Depth, Task::Normals, Task::Curvature]),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigurationRun {
    pub seed: u64,
    pub report: TrainReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigurationReport {
    pub name: String,
    pub tasks: Vec<String>,
    pub param_count: usize,
    pub runs: Vec<ConfigurationRun>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityReport {
    pub dataset_seed: u64,
    pub dataset_size: usize,
    pub epochs: usize,
    pub configurations: Vec<ConfigurationReport>,
}

impl CapacityReport {
    /// Convenience accessor: mean final held-out depth RMS of a
    /// configuration, when the task was trained.
    pub fn mean_depth_rms(&self, name: &str) -> Option<f64> {
        let cfg = self.configurations.iter().find(|c| c.name == name)?;
        let vals: Vec<f64> = cfg
            .runs
            .iter()
            .filter_map(|r| r.report.final_heldout.depth.map(|d| d.rms_lin))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn mean_normal_error(&self, name: &str) -> Option<f64> {
        let cfg = self.configurations.iter().find(|c| c.name == name)?;
        let vals: Vec<f64> = cfg
            .runs
            .iter()
            .filter_map(|r| r.report.final_heldout.normals.map(|n| n.mean_deg))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Trains the four fixed-capacity configurations for every seed. Heads stay
/// in the graph for untrained tasks (`heads_always_present` is forced on),
/// so the parameter count is identical across configurations; a divergent
/// run is aborted and recorded, never retried.
pub fn run_capacity_experiment(
    dataset: &Dataset,
    base_config: &NetworkConfig,
    seeds: &[u64],
) -> Result<CapacityReport> {
    let samples = prepare_samples(dataset)?;
    let mut configurations = Vec::new();
    for (name, tasks) in capacity_task_sets() {
        let mut runs = Vec::new();
        let mut param_count = 0;
        for &seed in seeds {
            let mut config = base_config.clone();
            config.task_set = tasks.clone();
            config.heads_always_present = true;
            config.seed = seed;
            let mut net = Network::build(config)?;
            param_count = net.param_count();
            let report = train(&mut net, &samples, dataset.curvature_scale, StopTargets::default())?;
            runs.push(ConfigurationRun { seed, report });
        }
        configurations.push(ConfigurationReport {
            name: name.to_string(),
            tasks: tasks.iter().map(|t| t.name().to_string()).collect(),
            param_count,
            runs,
        });
    }
    Ok(CapacityReport {
        dataset_seed: dataset.seed,
        dataset_size: dataset.samples.len(),
        epochs: base_config.epochs,
        configurations,
    })
}
