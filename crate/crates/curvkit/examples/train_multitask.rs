//! Trains the joint depth+normals+curvature model on a synthetic dataset
//! and prints the held-out metrics per epoch.
//!
//! ```text
//! cargo run --release --example train_multitask -- [scenes] [epochs] [lr] [tasks]
//! ```

use curvkit::geom::CameraIntrinsics;
use curvkit::synth::{make_dataset_policy, AugmentPolicy};
use curvkit::toynet::{
    evaluate_heldout, predictions_to_maps, prepare_samples, split_holdout, train, Network,
    NetworkConfig, StopTargets, Task,
};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scenes: usize = args.first().map_or(Ok(16), |s| s.parse())?;
    let epochs: usize = args.get(1).map_or(Ok(12), |s| s.parse())?;
    let default_lr = NetworkConfig::default().learning_rate;
    let lr: f64 = args.get(2).map_or(Ok(default_lr), |s| s.parse())?;
    let tasks = args
        .get(3)
        .map_or(Ok(Task::ALL.to_vec()), |s| Task::parse_list(s))?;
    let momentum: f64 = args.get(4).map_or(Ok(0.95), |s| s.parse())?;
    let batch: usize = args.get(5).map_or(Ok(8), |s| s.parse())?;
    let patience: usize = args.get(6).map_or(Ok(5), |s| s.parse())?;
    let clip: f64 = args.get(7).map_or(Ok(50.0), |s| s.parse())?;
    let width: usize = args.get(8).map_or(Ok(0), |s| s.parse())?;
    let weights: Vec<f64> = args
        .get(9)
        .map(|s| s.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .unwrap_or_else(|| vec![1.0, 1.0, 1.0]);
    let copies: usize = args.get(10).map_or(Ok(0), |s| s.parse())?;

    let intr = CameraIntrinsics::scaled_default(64, 64);
    eprintln!("generating {scenes} scenes at 64x64 (seed 7)...");
    let dataset = make_dataset_policy(scenes, &intr, 0.0, 7, copies, AugmentPolicy::GeometricOnly)?;
    let samples = prepare_samples(&dataset)?;

    let mut config = NetworkConfig {
        task_set: tasks,
        epochs,
        learning_rate: lr,
        momentum,
        batch_size: batch,
        plateau_patience: patience,
        grad_clip: clip,
        seed: 1,
        ..NetworkConfig::default()
    };
    if width > 0 {
        config.trunk_channels = [width, width + width / 2, 2 * width];
        config.stack_hidden = width;
    }
    config.loss_weights = [weights[0], weights[1], weights[2]];
    let mut net = Network::build(config)?;
    println!("parameters: {}", net.param_count());

    let started = std::time::Instant::now();
    let report = train(&mut net, &samples, dataset.curvature_scale, StopTargets::default())?;
    for e in &report.epochs {
        let depth = e.heldout.depth.map(|d| d.rms_lin);
        let normals = e.heldout.normals.map(|n| n.mean_deg);
        let curv = e.heldout.curvature.map(|c| c.rms_k1);
        println!(
            "epoch {:>3}  lr {:.2e}  train {:?}  heldout: depth_rms {:?}  normal_mean {:?}  curv_rms_k1 {:?}",
            e.epoch, e.learning_rate, e.train_loss, depth, normals, curv
        );
    }
    println!(
        "done in {:.1} s; diverged = {}",
        started.elapsed().as_secs_f64(),
        report.diverged
    );

    // Train-split metrics and raw prediction statistics for diagnosis.
    let (train_idx, held_idx) = split_holdout(&samples, net.config.holdout_every);
    let on_train = evaluate_heldout(&net, &samples, &train_idx, dataset.curvature_scale)?;
    println!(
        "train-split: depth_rms {:?} normal_mean {:?}",
        on_train.depth.map(|d| d.rms_lin),
        on_train.normals.map(|n| n.mean_deg)
    );
    let maps = predictions_to_maps(&net, &samples[held_idx[0]], dataset.curvature_scale)?;
    let gt = &samples[held_idx[0]].depth_fine;
    let stats = |d: &curvkit::geom::DepthMap| {
        let vals: Vec<f64> = d
            .data()
            .iter()
            .zip(d.mask())
            .filter(|(_, m)| **m)
            .map(|(v, _)| *v)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (mean, min, max)
    };
    println!("pred depth stats {:?}  gt depth stats {:?}", stats(&maps.depth), stats(gt));
    Ok(())
}
