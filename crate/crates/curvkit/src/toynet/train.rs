//! Single-threaded training loop: Nesterov momentum, plateau-halved learning
//! rate, per-epoch held-out metrics, deterministic for a fixed seed.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{CurvatureMap, DepthMap, NormalMap};
use crate::losses::{curvature_loss, depth_loss, normal_loss};
use crate::metrics::{
    eval_curvature, eval_depth, eval_normals, CurvatureErrorMode, CurvatureMetrics, DepthMetrics,
    NormalMetrics,
};
use crate::synth::Dataset;

use super::net::{Network, Task, TaskSolver};
use super::tensor::TensorBuffer;

/// Ground truth for one scale of one sample, in loss-ready plane layout.
#[derive(Debug, Clone)]
pub struct ScaleTruth {
    pub width: usize,
    pub height: usize,
    pub depth_log: Vec<f64>,
    pub depth_lin: Vec<f64>,
    pub depth_mask: Vec<bool>,
    pub normals: Vec<f64>,
    pub normal_mask: Vec<bool>,
    pub curv_scaled: Vec<f64>,
    pub curv_mask: Vec<bool>,
}

impl ScaleTruth {
    fn from_maps(depth: &DepthMap, normals: &NormalMap, curv: &CurvatureMap) -> Self {
        let (w, h) = (depth.width(), depth.height());
        let n = w * h;
        let mut depth_log = vec![0.0; n];
        for i in 0..n {
            if depth.mask()[i] {
                depth_log[i] = depth.data()[i].ln();
            }
        }
        let mut normal_planes = vec![0.0; 3 * n];
        for i in 0..n {
            let v = normals.data()[i];
            normal_planes[i] = v.x;
            normal_planes[n + i] = v.y;
            normal_planes[2 * n + i] = v.z;
        }
        let mut curv_planes = vec![0.0; 2 * n];
        curv_planes[..n].copy_from_slice(curv.k1());
        curv_planes[n..].copy_from_slice(curv.k2());
        // The curvature loss weights by depth, so its mask needs valid depth.
        let curv_mask: Vec<bool> = curv
            .mask()
            .iter()
            .zip(depth.mask())
            .map(|(c, d)| *c && *d)
            .collect();
        Self {
            width: w,
            height: h,
            depth_log,
            depth_lin: depth.data().to_vec(),
            depth_mask: depth.mask().to_vec(),
            normals: normal_planes,
            normal_mask: normals.mask().to_vec(),
            curv_scaled: curv_planes,
            curv_mask,
        }
    }
}

/// One sample prepared for the network: normalized RGB tensor plus ground
/// truth at the fine (= dataset target) and coarse (half) scales.
#[derive(Debug, Clone)]
pub struct NetSample {
    pub input: TensorBuffer,
    pub fine: ScaleTruth,
    pub coarse: ScaleTruth,
    /// Scene group: augmented copies share their base scene's group so the
    /// holdout split never leaks a held-out scene into training.
    pub group: usize,
    pub augmented: bool,
    /// Fine-scale maps kept for metric evaluation.
    pub depth_fine: DepthMap,
    pub normals_fine: NormalMap,
    pub curv_fine_scaled: CurvatureMap,
}

/// Converts a dataset into network samples; the coarse ground truth is a
/// bicubic downsample of the fine one.
pub fn prepare_samples(dataset: &Dataset) -> Result<Vec<NetSample>> {
    let (cw, ch) = (dataset.target_width / 2, dataset.target_height / 2);
    let mut group = 0usize;
    let mut seen_base = false;
    dataset
        .samples
        .iter()
        .map(|s| {
            if s.augment.is_none() {
                if seen_base {
                    group += 1;
                }
                seen_base = true;
            }
            let n = dataset.input_width * dataset.input_height;
            let mut input = vec![0.0; 3 * n];
            for i in 0..n {
                let px = s.rgb.data()[i];
                for c in 0..3 {
                    input[c * n + i] = px[c] - 0.5;
                }
            }
            let input = TensorBuffer::from_data(
                3,
                dataset.input_height,
                dataset.input_width,
                input,
            )?;
            let depth_c = s.depth.resample_bicubic(cw, ch)?;
            let normals_c = s.normals.resample_bicubic(cw, ch)?;
            let curv_c = s.curvature.resample_bicubic(cw, ch)?;
            Ok(NetSample {
                input,
                fine: ScaleTruth::from_maps(&s.depth, &s.normals, &s.curvature),
                coarse: ScaleTruth::from_maps(&depth_c, &normals_c, &curv_c),
                group,
                augmented: s.augment.is_some(),
                depth_fine: s.depth.clone(),
                normals_fine: s.normals.clone(),
                curv_fine_scaled: s.curvature.clone(),
            })
        })
        .collect()
}

/// Deterministic split by scene group: every `holdout_every`-th scene is
/// held out (un-augmented render only); augmented copies of held-out scenes
/// are dropped entirely so nothing leaks into training.
pub fn split_holdout(samples: &[NetSample], holdout_every: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut held = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if (s.group + 1) % holdout_every == 0 {
            if !s.augmented {
                held.push(i);
            }
        } else {
            train.push(i);
        }
    }
    (train, held)
}

/// Nesterov momentum state, one velocity per parameter, aligned with the
/// network's fixed layer order.
pub struct OptimizerState {
    pub learning_rate: f64,
    pub momentum: f64,
    pub grad_clip: f64,
    velocities: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(net: &Network) -> Self {
        let velocities = net
            .layers()
            .flat_map(|l| [vec![0.0; l.weight.len()], vec![0.0; l.bias.len()]])
            .collect();
        Self {
            learning_rate: net.config.learning_rate,
            momentum: net.config.momentum,
            grad_clip: net.config.grad_clip,
            velocities,
        }
    }

    /// v <- mu v + g;  w <- w - lr (g + mu v), with g globally norm-clipped.
    fn step(&mut self, net: &mut Network) {
        let (lr, mu) = (self.learning_rate, self.momentum);
        let norm_sq: f64 = net
            .layers()
            .map(|l| {
                l.weight_grad.iter().map(|g| g * g).sum::<f64>()
                    + l.bias_grad.iter().map(|g| g * g).sum::<f64>()
            })
            .sum();
        let scale = if self.grad_clip > 0.0 && norm_sq.sqrt() > self.grad_clip {
            self.grad_clip / norm_sq.sqrt()
        } else {
            1.0
        };
        let mut vi = 0;
        for layer in net.layers_mut() {
            for (params, grads) in [
                (&mut layer.weight, &layer.weight_grad),
                (&mut layer.bias, &layer.bias_grad),
            ] {
                let vel = &mut self.velocities[vi];
                vi += 1;
                for i in 0..params.len() {
                    let g = grads[i] * scale;
                    vel[i] = mu * vel[i] + g;
                    params[i] -= lr * (g + mu * vel[i]);
                }
            }
        }
    }
}

/// Per-task loss values of one optimization step (summed coarse + fine,
/// averaged over the batch).
pub type StepLosses = BTreeMap<String, f64>;

/// Computes solver losses for one forward pass and writes the gradients
/// (scaled by `grad_scale`) onto the prediction tensors.
fn attach_losses(
    net: &Network,
    pass: &mut super::net::ForwardPass,
    sample: &NetSample,
    solvers: &[TaskSolver],
    grad_scale: f64,
) -> Result<StepLosses> {
    let mut losses = StepLosses::new();
    for solver in solvers {
        let si = net
            .stack_index(solver.task)
            .ok_or_else(|| Error::InvalidConfig(format!(
                "no stack built for task {}",
                solver.task.name()
            )))?;
        let mut total = 0.0;
        for (scale_name, truth, pred) in [
            ("coarse", &sample.coarse, &mut pass.coarse_pred[si]),
            ("fine", &sample.fine, &mut pass.fine_pred[si]),
        ] {
            let (w, h) = (truth.width, truth.height);
            debug_assert_eq!(pred.dims(), (solver.task.channels(), h, w));
            let result = match solver.task {
                Task::Depth => depth_loss(&pred.data, &truth.depth_log, &truth.depth_mask, w, h)?,
                Task::Normals => normal_loss(&pred.data, &truth.normals, &truth.normal_mask, w, h)?,
                Task::Curvature => curvature_loss(
                    &pred.data,
                    &truth.curv_scaled,
                    &truth.depth_lin,
                    &truth.curv_mask,
                    w,
                    h,
                    net.curvature_loss_options(),
                )?,
            };
            if !result.value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    task: solver.task.name(),
                    scale: if scale_name == "coarse" { "coarse" } else { "fine" },
                });
            }
            for (g, r) in pred.grad.iter_mut().zip(&result.grad) {
                *g += solver.weight * grad_scale * r;
            }
            total += solver.weight * result.value;
        }
        losses.insert(solver.task.name().to_string(), total);
    }
    Ok(losses)
}

/// One optimizer step over a batch: accumulate gradients from every attached
/// solver at both scales, then apply the Nesterov update.
pub fn backward_and_step(
    net: &mut Network,
    batch: &[&NetSample],
    solvers: &[TaskSolver],
    state: &mut OptimizerState,
) -> Result<StepLosses> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    net.zero_grads();
    let mut sums = StepLosses::new();
    let grad_scale = 1.0 / batch.len() as f64;
    for sample in batch {
        let mut pass = net.forward(&sample.input)?;
        let losses = attach_losses(net, &mut pass, sample, solvers, grad_scale)?;
        for (k, v) in losses {
            *sums.entry(k).or_insert(0.0) += v * grad_scale;
        }
        net.backward(&mut pass);
    }
    state.step(net);
    Ok(sums)
}

/// Held-out evaluation of the fine-scale predictions with the standard
/// metric suites; absent for tasks outside the trained set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HeldoutMetrics {
    pub depth: Option<DepthMetrics>,
    pub normals: Option<NormalMetrics>,
    pub curvature: Option<CurvatureMetrics>,
}

/// Converts fine-scale predictions of one pass into maps for evaluation.
pub struct PredictionMaps {
    pub depth: DepthMap,
    pub normals: NormalMap,
    pub curvature: CurvatureMap,
}

pub fn predictions_to_maps(
    net: &Network,
    sample: &NetSample,
    curvature_scale: f64,
) -> Result<PredictionMaps> {
    let pass = net.forward(&sample.input)?;
    let (_, (fh, fw)) = net.prediction_dims();
    let n = fh * fw;

    let di = net.stack_index(Task::Depth).expect("depth stack");
    let log_depth = &pass.fine_pred[di].data;
    let depth_data: Vec<f64> = (0..n)
        .map(|i| log_depth[i].clamp(-10.0, 10.0).exp())
        .collect();
    let depth = DepthMap::new(fw, fh, depth_data, sample.fine.depth_mask.clone())?;

    let ni = net.stack_index(Task::Normals).expect("normals stack");
    let planes = &pass.fine_pred[ni].data;
    let mut vecs = vec![Vector3::zeros(); n];
    let mut mask = sample.fine.normal_mask.clone();
    for i in 0..n {
        let v = Vector3::new(planes[i], planes[n + i], planes[2 * n + i]);
        let norm = v.norm();
        if norm > 1e-12 {
            vecs[i] = v / norm;
        } else {
            mask[i] = false;
        }
    }
    let normals = NormalMap::new(fw, fh, vecs, mask)?;

    let ci = net.stack_index(Task::Curvature).expect("curvature stack");
    let kplanes = &pass.fine_pred[ci].data;
    let unscale = 1.0 / curvature_scale;
    let curvature = CurvatureMap::from_unsorted(
        fw,
        fh,
        kplanes[..n].iter().map(|v| v * unscale).collect(),
        kplanes[n..].iter().map(|v| v * unscale).collect(),
        sample.fine.curv_mask.clone(),
    )?;
    Ok(PredictionMaps { depth, normals, curvature })
}

/// Mean held-out metrics across samples (metrics are averaged per sample to
/// stay robust to varying valid-pixel counts).
pub fn evaluate_heldout(
    net: &Network,
    samples: &[NetSample],
    indices: &[usize],
    curvature_scale: f64,
) -> Result<HeldoutMetrics> {
    let mut depth_acc: Vec<DepthMetrics> = Vec::new();
    let mut normal_acc: Vec<NormalMetrics> = Vec::new();
    let mut curv_acc: Vec<CurvatureMetrics> = Vec::new();
    for &i in indices {
        let sample = &samples[i];
        let maps = predictions_to_maps(net, sample, curvature_scale)?;
        depth_acc.push(eval_depth(&maps.depth, &sample.depth_fine, None)?);
        normal_acc.push(eval_normals(&maps.normals, &sample.normals_fine, None)?);
        let gt_unscaled = sample.curv_fine_scaled.scaled(1.0 / curvature_scale)?;
        curv_acc.push(eval_curvature(
            &maps.curvature,
            &gt_unscaled,
            Some(sample.depth_fine.mask()),
            CurvatureErrorMode::MeanCurvature,
        )?);
    }
    let nf = indices.len() as f64;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / nf;
    let trained = |t: Task| net.config.trains(t);
    Ok(HeldoutMetrics {
        depth: trained(Task::Depth).then(|| DepthMetrics {
            rel_abs: mean(&depth_acc.iter().map(|m| m.rel_abs).collect::<Vec<_>>()),
            rms_lin: mean(&depth_acc.iter().map(|m| m.rms_lin).collect::<Vec<_>>()),
            rms_log: mean(&depth_acc.iter().map(|m| m.rms_log).collect::<Vec<_>>()),
            delta1: mean(&depth_acc.iter().map(|m| m.delta1).collect::<Vec<_>>()),
            delta2: mean(&depth_acc.iter().map(|m| m.delta2).collect::<Vec<_>>()),
            delta3: mean(&depth_acc.iter().map(|m| m.delta3).collect::<Vec<_>>()),
        }),
        normals: trained(Task::Normals).then(|| NormalMetrics {
            mean_deg: mean(&normal_acc.iter().map(|m| m.mean_deg).collect::<Vec<_>>()),
            median_deg: mean(&normal_acc.iter().map(|m| m.median_deg).collect::<Vec<_>>()),
            within_11_25: mean(&normal_acc.iter().map(|m| m.within_11_25).collect::<Vec<_>>()),
            within_22_5: mean(&normal_acc.iter().map(|m| m.within_22_5).collect::<Vec<_>>()),
            within_30: mean(&normal_acc.iter().map(|m| m.within_30).collect::<Vec<_>>()),
        }),
        curvature: trained(Task::Curvature).then(|| CurvatureMetrics {
            rms_k1: mean(&curv_acc.iter().map(|m| m.rms_k1).collect::<Vec<_>>()),
            rms_k2: mean(&curv_acc.iter().map(|m| m.rms_k2).collect::<Vec<_>>()),
            median_planar: None,
            median_nonplanar: None,
            within_s1: mean(&curv_acc.iter().map(|m| m.within_s1).collect::<Vec<_>>()),
            within_s2: mean(&curv_acc.iter().map(|m| m.within_s2).collect::<Vec<_>>()),
            within_s3: mean(&curv_acc.iter().map(|m| m.within_s3).collect::<Vec<_>>()),
        }),
    })
}

/// Total solver losses of one sample on the current weights; no optimizer
/// step is taken.
pub fn sample_losses(
    net: &Network,
    sample: &NetSample,
    solvers: &[TaskSolver],
) -> Result<StepLosses> {
    let mut pass = net.forward(&sample.input)?;
    attach_losses(net, &mut pass, sample, solvers, 1.0)
}

/// Per-layer weight gradients of the summed solver losses for one sample;
/// used by the finite-difference verification.
pub fn sample_gradients(
    net: &mut Network,
    sample: &NetSample,
    solvers: &[TaskSolver],
) -> Result<Vec<Vec<f64>>> {
    net.zero_grads();
    let mut pass = net.forward(&sample.input)?;
    attach_losses(net, &mut pass, sample, solvers, 1.0)?;
    net.backward(&mut pass);
    Ok(net.layers().map(|l| l.weight_grad.clone()).collect())
}

/// Optional early-stop targets on held-out metrics.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StopTargets {
    pub depth_rms_lin: Option<f64>,
    pub normal_mean_deg: Option<f64>,
}

impl StopTargets {
    fn met(&self, h: &HeldoutMetrics) -> bool {
        let depth_ok = match self.depth_rms_lin {
            Some(t) => h.depth.map(|d| d.rms_lin < t).unwrap_or(false),
            None => true,
        };
        let normal_ok = match self.normal_mean_deg {
            Some(t) => h.normals.map(|n| n.mean_deg < t).unwrap_or(false),
            None => true,
        };
        let any = self.depth_rms_lin.is_some() || self.normal_mean_deg.is_some();
        any && depth_ok && normal_ok
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: StepLosses,
    pub heldout: HeldoutMetrics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub tasks: Vec<String>,
    pub param_count: usize,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub diverged: bool,
    pub lr_halvings: Vec<usize>,
    pub epochs: Vec<EpochRecord>,
    pub final_heldout: HeldoutMetrics,
}

/// Loss value above which a configuration counts as diverged and training
/// aborts.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Trains `net` on the dataset with solvers for its configured task set.
/// Deterministic for a fixed config seed; single-threaded by contract.
pub fn train(
    net: &mut Network,
    samples: &[NetSample],
    curvature_scale: f64,
    targets: StopTargets,
) -> Result<TrainReport> {
    let solvers: Vec<TaskSolver> = net
        .config
        .task_set
        .iter()
        .map(|&t| TaskSolver::new(t, net.config.loss_weight(t)))
        .collect::<Result<_>>()?;
    let (train_idx, held_idx) = split_holdout(samples, net.config.holdout_every);
    if train_idx.is_empty() || held_idx.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "dataset of {} samples cannot be split with holdout_every={}",
            samples.len(),
            net.config.holdout_every
        )));
    }

    let mut state = OptimizerState::new(net);
    let mut rng = ChaCha12Rng::seed_from_u64(net.config.seed ^ 0xD1CE_5EED);
    let mut report = TrainReport {
        tasks: net.config.task_set.iter().map(|t| t.name().to_string()).collect(),
        param_count: net.param_count(),
        epochs_run: 0,
        stopped_early: false,
        diverged: false,
        lr_halvings: Vec::new(),
        epochs: Vec::new(),
        final_heldout: HeldoutMetrics::default(),
    };
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0usize;
    let base_lr = net.config.learning_rate;
    let warmup = net.config.warmup_epochs;

    for epoch in 0..net.config.epochs {
        if epoch < warmup {
            let t = (epoch + 1) as f64 / (warmup + 1) as f64;
            state.learning_rate = base_lr * (0.1 + 0.9 * t);
        } else if epoch == warmup {
            state.learning_rate = base_lr;
        }
        let mut order = train_idx.clone();
        order.shuffle(&mut rng);
        let mut epoch_losses = StepLosses::new();
        let mut batches = 0.0;
        for chunk in order.chunks(net.config.batch_size) {
            let batch: Vec<&NetSample> = chunk.iter().map(|&i| &samples[i]).collect();
            let losses = backward_and_step(net, &batch, &solvers, &mut state)?;
            for (k, v) in losses {
                *epoch_losses.entry(k).or_insert(0.0) += v;
            }
            batches += 1.0;
        }
        for v in epoch_losses.values_mut() {
            *v /= batches;
        }
        let total: f64 = epoch_losses.values().sum();
        report.epochs_run = epoch + 1;

        if !total.is_finite() || total > DIVERGENCE_LIMIT {
            report.diverged = true;
            report.epochs.push(EpochRecord {
                epoch,
                learning_rate: state.learning_rate,
                train_loss: epoch_losses,
                heldout: HeldoutMetrics::default(),
            });
            break;
        }

        // Plateau schedule: halve the learning rate when the epoch loss has
        // not improved by at least 0.5% of its magnitude for
        // `plateau_patience` epochs (losses can be negative, so the margin
        // scales with |best|).
        let margin = 0.005 * best_loss.abs().max(1e-9);
        if total < best_loss - margin || !best_loss.is_finite() {
            best_loss = total;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= net.config.plateau_patience {
                state.learning_rate *= 0.5;
                report.lr_halvings.push(epoch);
                since_best = 0;
            }
        }

        let heldout = evaluate_heldout(net, samples, &held_idx, curvature_scale)?;
        let stop = targets.met(&heldout);
        report.epochs.push(EpochRecord {
            epoch,
            learning_rate: state.learning_rate,
            train_loss: epoch_losses,
            heldout: heldout.clone(),
        });
        report.final_heldout = heldout;
        if stop {
            report.stopped_early = true;
            break;
        }
    }
    Ok(report)
}
