//! The two-stage multi-task network.
//!
//! Layout for an HxW input (H, W divisible by 4):
//!
//! ```text
//! trunk:  conv 3->c0 5x5/s1 + ReLU          (H x W)
//!         conv c0->c1 5x5/s2 + ReLU         (H/2 x W/2)   <- skip features
//!         conv c1->c2 5x5/s2 + ReLU         (H/4 x W/4)
//! per task (depth / normals / curvature), coarse stack at H/4:
//!         conv c2->hid + ReLU, conv hid->hid + ReLU, head conv hid->ch
//! coarse predictions upsampled 2x (nearest), concatenated with the skip
//! features, then per task fine stack at H/2:
//!         conv cat->hid + ReLU, conv hid->hid + ReLU, head conv hid->ch
//! ```
//!
//! All stacks stay in the graph regardless of which tasks are trained, so
//! the parameter count is identical across task subsets; untrained heads
//! simply act as extra feature maps feeding the fine stage.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::CurvatureLossOptions;

use super::layers::{
    concat_backward, concat_forward, relu_backward, relu_forward, upsample2_backward,
    upsample2_forward, ConvLayer,
};
use super::tensor::TensorBuffer;

/// The prediction tasks, in their fixed network order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Depth,
    Normals,
    Curvature,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Depth, Task::Normals, Task::Curvature];

    /// Prediction channels: log depth (1), normal vector (3), scaled
    /// principal curvatures (2).
    pub fn channels(self) -> usize {
        match self {
            Task::Depth => 1,
            Task::Normals => 3,
            Task::Curvature => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Depth => "depth",
            Task::Normals => "normals",
            Task::Curvature => "curvature",
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Task>> {
        let mut out = Vec::new();
        for part in s.split(',') {
            let task = match part.trim() {
                "depth" => Task::Depth,
                "normals" => Task::Normals,
                "curvature" => Task::Curvature,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown task {other:?}")))
                }
            };
            if !out.contains(&task) {
                out.push(task);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("empty task list".into()));
        }
        Ok(out)
    }
}

/// One attached loss head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSolver {
    pub task: Task,
    pub weight: f64,
}

impl TaskSolver {
    pub fn new(task: Task, weight: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "solver weight for {} must be > 0",
                task.name()
            )));
        }
        Ok(Self { task, weight })
    }
}

/// Network and training configuration.
///
/// Desk-scale defaults; the full-scale sibling of this layout runs 640x480
/// inputs with 74x55 coarse and 147x109 fine predictions, a 0.1 base
/// learning rate, momentum 0.95 and minibatches of 16 over 50 epochs. Those
/// values do not transfer to the miniature network, so only momentum and the
/// epoch budget are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_res: (usize, usize),
    pub trunk_channels: [usize; 3],
    pub stack_hidden: usize,
    pub task_set: Vec<Task>,
    pub heads_always_present: bool,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Identity activation when false (linearity probe).
    pub relu_enabled: bool,
    /// Depth-weight exponent of the curvature loss.
    pub curvature_weight_exponent: f64,
    /// Per-task solver weights in [depth, normals, curvature] order, applied
    /// at both scales.
    pub loss_weights: [f64; 3],
    /// Halve the learning rate after this many epochs without improvement.
    pub plateau_patience: usize,
    /// Linear learning-rate ramp from a tenth of the base rate over the
    /// first epochs; the initial gradients of the sum-scale losses are
    /// orders of magnitude larger than at convergence.
    pub warmup_epochs: usize,
    /// Global L2 gradient-norm clip. The losses sum over pixels, so the
    /// first steps otherwise blow the ReLUs dead and the network collapses
    /// to a constant predictor.
    pub grad_clip: f64,
    /// Every n-th sample goes to the held-out split.
    pub holdout_every: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            input_res: (64, 64),
            trunk_channels: [8, 12, 16],
            stack_hidden: 8,
            task_set: Task::ALL.to_vec(),
            heads_always_present: true,
            learning_rate: 0.01,
            momentum: 0.95,
            epochs: 50,
            batch_size: 8,
            seed: 1,
            relu_enabled: true,
            curvature_weight_exponent: -2.0,
            loss_weights: [1.0, 1.0, 1.0],
            plateau_patience: 5,
            warmup_epochs: 3,
            grad_clip: 50.0,
            holdout_every: 8,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.input_res;
        if h < 8 || w < 8 || h % 4 != 0 || w % 4 != 0 {
            return Err(Error::InvalidConfig(format!(
                "input resolution {h}x{w} must be >= 8 and divisible by 4"
            )));
        }
        if self.trunk_channels.iter().any(|&c| c == 0) || self.stack_hidden == 0 {
            return Err(Error::InvalidConfig("channel counts must be positive".into()));
        }
        if self.task_set.is_empty() {
            return Err(Error::InvalidConfig("task_set must not be empty".into()));
        }
        let mut seen = self.task_set.clone();
        seen.dedup();
        if seen.len() != self.task_set.len() {
            return Err(Error::InvalidConfig("task_set has duplicates".into()));
        }
        if !(self.learning_rate >= 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("bad optimizer parameters".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("batch_size and epochs must be >= 1".into()));
        }
        if self.holdout_every < 2 {
            return Err(Error::InvalidConfig("holdout_every must be >= 2".into()));
        }
        Ok(())
    }

    pub fn trains(&self, task: Task) -> bool {
        self.task_set.contains(&task)
    }

    pub fn loss_weight(&self, task: Task) -> f64 {
        match task {
            Task::Depth => self.loss_weights[0],
            Task::Normals => self.loss_weights[1],
            Task::Curvature => self.loss_weights[2],
        }
    }
}

/// Coarse and fine prediction stacks for one task: two hidden convolutions
/// plus a linear head each.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskStack {
    pub task: Task,
    pub coarse: [ConvLayer; 3],
    pub fine: [ConvLayer; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: NetworkConfig,
    pub trunk: [ConvLayer; 3],
    pub stacks: Vec<TaskStack>,
}

/// Every intermediate activation of one forward pass, kept for backward.
pub struct ForwardPass {
    pub input: TensorBuffer,
    pub trunk_act: Vec<TensorBuffer>,   // post-ReLU, len 3
    pub trunk_pre: Vec<TensorBuffer>,   // pre-ReLU, len 3
    pub coarse_pre: Vec<[TensorBuffer; 2]>,
    pub coarse_act: Vec<[TensorBuffer; 2]>,
    pub coarse_pred: Vec<TensorBuffer>,
    pub upsampled: Vec<TensorBuffer>,
    pub concat: TensorBuffer,
    pub fine_pre: Vec<[TensorBuffer; 2]>,
    pub fine_act: Vec<[TensorBuffer; 2]>,
    pub fine_pred: Vec<TensorBuffer>,
}

impl Network {
    /// Builds the network with fan-in Gaussian initialization; the draw
    /// order is fixed by construction order, so a seed pins every weight.
    pub fn build(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        let [c0, c1, c2] = config.trunk_channels;
        let hid = config.stack_hidden;
        let trunk = [
            ConvLayer::new(3, c0, 5, 1, 2, &mut rng),
            ConvLayer::new(c0, c1, 5, 2, 2, &mut rng),
            ConvLayer::new(c1, c2, 5, 2, 2, &mut rng),
        ];
        let tasks: Vec<Task> = if config.heads_always_present {
            Task::ALL.to_vec()
        } else {
            config.task_set.clone()
        };
        let concat_c: usize = tasks.iter().map(|t| t.channels()).sum::<usize>() + c1;
        let stacks = tasks
            .iter()
            .map(|&task| TaskStack {
                task,
                coarse: [
                    ConvLayer::new(c2, hid, 5, 1, 2, &mut rng),
                    ConvLayer::new(hid, hid, 5, 1, 2, &mut rng),
                    ConvLayer::new(hid, task.channels(), 5, 1, 2, &mut rng),
                ],
                fine: [
                    ConvLayer::new(concat_c, hid, 5, 1, 2, &mut rng),
                    ConvLayer::new(hid, hid, 5, 1, 2, &mut rng),
                    ConvLayer::new(hid, task.channels(), 5, 1, 2, &mut rng),
                ],
            })
            .collect();
        Ok(Self { config, trunk, stacks })
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(|l| l.param_count()).sum()
    }

    pub fn layers(&self) -> impl Iterator<Item = &ConvLayer> {
        self.trunk.iter().chain(
            self.stacks
                .iter()
                .flat_map(|s| s.coarse.iter().chain(s.fine.iter())),
        )
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut ConvLayer> {
        self.trunk.iter_mut().chain(
            self.stacks
                .iter_mut()
                .flat_map(|s| s.coarse.iter_mut().chain(s.fine.iter_mut())),
        )
    }

    pub fn zero_grads(&mut self) {
        for layer in self.layers_mut() {
            layer.zero_grad();
        }
    }

    pub fn stack_index(&self, task: Task) -> Option<usize> {
        self.stacks.iter().position(|s| s.task == task)
    }

    /// Resolutions of the coarse and fine predictions.
    pub fn prediction_dims(&self) -> ((usize, usize), (usize, usize)) {
        let (h, w) = self.config.input_res;
        ((h / 4, w / 4), (h / 2, w / 2))
    }

    pub fn forward(&self, input: &TensorBuffer) -> Result<ForwardPass> {
        let (h, w) = self.config.input_res;
        if input.dims() != (3, h, w) {
            return Err(Error::InvalidConfig(format!(
                "input dims {:?} do not match configured {h}x{w}",
                input.dims()
            )));
        }
        let relu = self.config.relu_enabled;

        let mut trunk_pre = Vec::with_capacity(3);
        let mut trunk_act = Vec::with_capacity(3);
        let mut cur = input.clone();
        for layer in &self.trunk {
            let pre = layer.forward(&cur);
            let act = relu_forward(&pre, relu);
            trunk_pre.push(pre);
            cur = act.clone();
            trunk_act.push(act);
        }

        let mut coarse_pre = Vec::new();
        let mut coarse_act = Vec::new();
        let mut coarse_pred = Vec::new();
        let mut upsampled = Vec::new();
        for stack in &self.stacks {
            let p1 = stack.coarse[0].forward(&trunk_act[2]);
            let a1 = relu_forward(&p1, relu);
            let p2 = stack.coarse[1].forward(&a1);
            let a2 = relu_forward(&p2, relu);
            let pred = stack.coarse[2].forward(&a2);
            upsampled.push(upsample2_forward(&pred));
            coarse_pre.push([p1, p2]);
            coarse_act.push([a1, a2]);
            coarse_pred.push(pred);
        }

        let mut parts: Vec<&TensorBuffer> = upsampled.iter().collect();
        parts.push(&trunk_act[1]);
        let concat = concat_forward(&parts);

        let mut fine_pre = Vec::new();
        let mut fine_act = Vec::new();
        let mut fine_pred = Vec::new();
        for stack in &self.stacks {
            let p1 = stack.fine[0].forward(&concat);
            let a1 = relu_forward(&p1, relu);
            let p2 = stack.fine[1].forward(&a1);
            let a2 = relu_forward(&p2, relu);
            let pred = stack.fine[2].forward(&a2);
            fine_pre.push([p1, p2]);
            fine_act.push([a1, a2]);
            fine_pred.push(pred);
        }

        Ok(ForwardPass {
            input: input.clone(),
            trunk_act,
            trunk_pre,
            coarse_pre,
            coarse_act,
            coarse_pred,
            upsampled,
            concat,
            fine_pre,
            fine_act,
            fine_pred,
        })
    }

    /// Backpropagates the gradients already stored on `pass.coarse_pred` and
    /// `pass.fine_pred` grad buffers, accumulating parameter gradients.
    pub fn backward(&mut self, pass: &mut ForwardPass) {
        let relu = self.config.relu_enabled;
        let n_stacks = self.stacks.len();

        // Fine stacks -> concat gradient.
        for si in 0..n_stacks {
            let stack = &mut self.stacks[si];
            let [a1, a2] = &mut pass.fine_act[si];
            let [p1, p2] = &mut pass.fine_pre[si];
            stack.fine[2].backward(a2, &pass.fine_pred[si]);
            relu_backward(p2, a2, relu);
            stack.fine[1].backward(a1, p2);
            relu_backward(p1, a1, relu);
            stack.fine[0].backward(&mut pass.concat, p1);
        }

        // Split the concat gradient back into the upsampled predictions and
        // the trunk skip features.
        {
            let mut parts: Vec<&mut TensorBuffer> = pass.upsampled.iter_mut().collect();
            let (skip, rest) = pass.trunk_act.split_at_mut(2);
            let _ = rest;
            parts.push(&mut skip[1]);
            concat_backward(&mut parts, &pass.concat);
        }
        for si in 0..n_stacks {
            upsample2_backward(&mut pass.coarse_pred[si], &pass.upsampled[si]);
        }

        // Coarse stacks -> trunk top gradient.
        for si in 0..n_stacks {
            let stack = &mut self.stacks[si];
            let [a1, a2] = &mut pass.coarse_act[si];
            let [p1, p2] = &mut pass.coarse_pre[si];
            stack.coarse[2].backward(a2, &pass.coarse_pred[si]);
            relu_backward(p2, a2, relu);
            stack.coarse[1].backward(a1, p2);
            relu_backward(p1, a1, relu);
            stack.coarse[0].backward(&mut pass.trunk_act[2], p1);
        }

        // Trunk.
        relu_backward(&mut pass.trunk_pre[2], &pass.trunk_act[2], relu);
        {
            let (head, tail) = pass.trunk_act.split_at_mut(2);
            self.trunk[2].backward(&mut head[1], &pass.trunk_pre[2]);
            let _ = tail;
        }
        relu_backward(&mut pass.trunk_pre[1], &pass.trunk_act[1], relu);
        {
            let (head, _) = pass.trunk_act.split_at_mut(1);
            self.trunk[1].backward(&mut head[0], &pass.trunk_pre[1]);
        }
        relu_backward(&mut pass.trunk_pre[0], &pass.trunk_act[0], relu);
        self.trunk[0].backward(&mut pass.input, &pass.trunk_pre[0]);
    }

    pub(crate) fn curvature_loss_options(&self) -> CurvatureLossOptions {
        CurvatureLossOptions {
            depth_weight_exponent: self.config.curvature_weight_exponent,
        }
    }
}
