//! The `curvkit` command line: synth, geometry, train, capacity-experiment,
//! eval, segment.
//!
//! All machine-readable output goes to the declared files; logs go to
//! stderr. Runs with fixed seeds are byte-reproducible, so no timestamps or
//! wall-clock values ever land in output files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::geom::CameraIntrinsics;
use crate::io;
use crate::metrics::{eval_curvature, eval_depth, eval_normals, CurvatureErrorMode};
use crate::quadric::{dense_geometry, PatchSpec};
use crate::segment::{segment_scene, BorderWeights, CurvatureReduction};
use crate::synth::make_dataset_augmented;
use crate::toynet::{
    run_capacity_experiment, save_model, train, Network, NetworkConfig, StopTargets, Task,
};

const FORMAT_VERSIONS: &str = concat!(
    "formats: manifest curvkit.dataset/1, model binary v1, ",
    "PFM scale -1.0 (little-endian, NaN = invalid)"
);

#[derive(Parser)]
#[command(
    name = "curvkit",
    version,
    long_version = concat!(env!("CARGO_PKG_VERSION"), "\nformats: manifest curvkit.dataset/1, model binary v1, PFM scale -1.0 (little-endian, NaN = invalid)"),
    about = "Depth-map geometry, multi-task training and evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with analytic ground truth.
    Synth(SynthArgs),
    /// Dense normals and principal curvatures from a depth map.
    Geometry(GeometryArgs),
    /// Train the multi-task network on a dataset directory.
    Train(TrainArgs),
    /// Run the fixed-capacity single-vs-joint comparison.
    CapacityExperiment(CapacityArgs),
    /// Evaluate predictions against ground truth.
    Eval(EvalArgs),
    /// Border-function segmentation from color, depth and curvature.
    Segment(SegmentArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    scenes: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Additive depth noise std-dev in meters.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Augmented copies per scene.
    #[arg(long, default_value_t = 0)]
    augment: usize,
    /// Render resolution, WxH.
    #[arg(long, default_value = "64x64")]
    size: String,
    /// Also export validity masks as PNGs.
    #[arg(long)]
    mask_png: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long)]
    depth: PathBuf,
    /// Intrinsics config (key=value); defaults to the generic 640x480
    /// pinhole rescaled to the depth resolution when omitted.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    #[arg(long)]
    out_normals: PathBuf,
    #[arg(long)]
    out_curv: PathBuf,
    /// Patch radius in pixels.
    #[arg(long, default_value_t = 18.0)]
    radius: f64,
    #[arg(long, default_value_t = 12)]
    min_samples: usize,
    /// Optionally downsample outputs to WxH (for example 160x120).
    #[arg(long)]
    downsample: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "depth,normals,curvature")]
    tasks: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated list of training seeds.
    #[arg(long, default_value = "1")]
    seeds: String,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// depth | normals | curvature
    #[arg(long)]
    task: String,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Optional mask PFM: pixels with finite values > 0.5 count.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    json: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    rgb: PathBuf,
    #[arg(long)]
    depth: PathBuf,
    #[arg(long)]
    curv: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    wi: f64,
    #[arg(long, default_value_t = 5.0)]
    wd: f64,
    #[arg(long, default_value_t = 0.1)]
    wc: f64,
    #[arg(long, default_value_t = 0.3)]
    thresh: f64,
    /// Curvature reduction: mean-abs | max-abs | abs-mean.
    #[arg(long, default_value = "mean-abs")]
    curvature_term: String,
    #[arg(long)]
    out: PathBuf,
}

/// Parses "WxH".
fn parse_size(s: &str) -> anyhow::Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow::anyhow!("size {s:?} is not WxH"))?;
    Ok((w.trim().parse()?, h.trim().parse()?))
}

fn read_mask(path: &Path, expect_len: usize) -> anyhow::Result<Vec<bool>> {
    let pfm = io::read_pfm(path)?;
    anyhow::ensure!(pfm.channels == 1, "mask must be a grayscale PFM");
    anyhow::ensure!(
        pfm.width * pfm.height == expect_len,
        "mask resolution does not match the evaluated maps"
    );
    Ok(pfm.data.iter().map(|&v| v.is_finite() && v > 0.5).collect())
}

fn run_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let (w, h) = parse_size(&args.size)?;
    let intr = CameraIntrinsics::scaled_default(w, h);
    let dataset = make_dataset_augmented(args.scenes, &intr, args.noise, args.seed, args.augment)?;
    io::save_dataset(&dataset, &args.out, args.mask_png)?;
    eprintln!(
        "wrote {} samples ({} scenes, {} augmented copies each) to {}",
        dataset.samples.len(),
        args.scenes,
        args.augment,
        args.out.display()
    );
    Ok(())
}

fn run_geometry(args: &GeometryArgs) -> anyhow::Result<()> {
    let depth = io::depth_from_pfm(&io::read_pfm(&args.depth)?, &args.depth)?;
    let intr = match &args.intrinsics {
        Some(path) => io::read_intrinsics(path)?,
        None => CameraIntrinsics::scaled_default(depth.width(), depth.height()),
    };
    let spec = PatchSpec::new(args.radius, args.min_samples)?;
    let (mut normals, mut curv) = dense_geometry(&depth, &intr, &spec)?;
    if let Some(size) = &args.downsample {
        let (dw, dh) = parse_size(size)?;
        normals = normals.resample_bicubic(dw, dh)?;
        curv = curv.resample_bicubic(dw, dh)?;
    }
    io::write_pfm(&io::normals_to_pfm(&normals), &args.out_normals)?;
    io::write_pfm(&io::curvature_to_pfm(&curv), &args.out_curv)?;
    eprintln!(
        "geometry: {} of {} pixels valid",
        normals.valid_count(),
        normals.width() * normals.height()
    );
    Ok(())
}

fn network_config_for(
    dataset_w: usize,
    dataset_h: usize,
    n_samples: usize,
    tasks: Vec<Task>,
    seed: u64,
) -> NetworkConfig {
    let mut config = NetworkConfig {
        input_res: (dataset_h, dataset_w),
        task_set: tasks,
        seed,
        ..NetworkConfig::default()
    };
    // Small datasets cannot spare one sample in eight for the held-out split.
    if n_samples < 2 * config.holdout_every {
        config.holdout_every = (n_samples / 2).max(2);
    }
    config
}

fn run_train(args: &TrainArgs) -> anyhow::Result<()> {
    let dataset = io::load_dataset(&args.data)?;
    let tasks = Task::parse_list(&args.tasks)?;
    let mut config = network_config_for(
        dataset.input_width,
        dataset.input_height,
        dataset.samples.len(),
        tasks,
        args.seed,
    );
    if let Some(epochs) = args.epochs {
        config.epochs = epochs;
    }
    let samples = crate::toynet::prepare_samples(&dataset)?;
    let mut net = Network::build(config)?;
    let report = train(&mut net, &samples, dataset.curvature_scale, StopTargets::default())?;
    save_model(&net, &args.out)?;
    io::atomic_write(
        &args.report,
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    eprintln!(
        "trained {:?} for {} epochs; model -> {}, report -> {}",
        report.tasks,
        report.epochs_run,
        args.out.display(),
        args.report.display()
    );
    Ok(())
}

fn run_capacity(args: &CapacityArgs) -> anyhow::Result<()> {
    let dataset = io::load_dataset(&args.data)?;
    let seeds: Vec<u64> = args
        .seeds
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<Result<_, _>>()?;
    anyhow::ensure!(!seeds.is_empty(), "need at least one seed");
    let mut config = network_config_for(
        dataset.input_width,
        dataset.input_height,
        dataset.samples.len(),
        Task::ALL.to_vec(),
        seeds[0],
    );
    if let Some(epochs) = args.epochs {
        config.epochs = epochs;
    }
    let report = run_capacity_experiment(&dataset, &config, &seeds)?;
    io::atomic_write(&args.out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    for cfg in &report.configurations {
        eprintln!(
            "{}: params={} depth_rms={:?} normal_mean={:?}",
            cfg.name,
            cfg.param_count,
            report.mean_depth_rms(&cfg.name),
            report.mean_normal_error(&cfg.name),
        );
    }
    Ok(())
}

fn run_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let json = match args.task.as_str() {
        "depth" => {
            let pred = io::depth_from_pfm(&io::read_pfm(&args.pred)?, &args.pred)?;
            let gt = io::depth_from_pfm(&io::read_pfm(&args.gt)?, &args.gt)?;
            let mask = args
                .mask
                .as_ref()
                .map(|p| read_mask(p, gt.data().len()))
                .transpose()?;
            let m = eval_depth(&pred, &gt, mask.as_deref())?;
            serde_json::json!({"task": "depth", "metrics": m})
        }
        "normals" => {
            let pred = io::normals_from_pfm(&io::read_pfm(&args.pred)?, &args.pred)?;
            let gt = io::normals_from_pfm(&io::read_pfm(&args.gt)?, &args.gt)?;
            let mask = args
                .mask
                .as_ref()
                .map(|p| read_mask(p, gt.mask().len()))
                .transpose()?;
            let m = eval_normals(&pred, &gt, mask.as_deref())?;
            serde_json::json!({"task": "normals", "metrics": m})
        }
        "curvature" => {
            let pred = io::curvature_from_pfm(&io::read_pfm(&args.pred)?, &args.pred)?;
            let gt = io::curvature_from_pfm(&io::read_pfm(&args.gt)?, &args.gt)?;
            let mask = args
                .mask
                .as_ref()
                .map(|p| read_mask(p, gt.mask().len()))
                .transpose()?;
            let m = eval_curvature(&pred, &gt, mask.as_deref(), CurvatureErrorMode::MeanCurvature)?;
            serde_json::json!({"task": "curvature", "metrics": m})
        }
        other => anyhow::bail!("unknown eval task {other:?} (depth|normals|curvature)"),
    };
    io::atomic_write(&args.json, serde_json::to_string_pretty(&json)?.as_bytes())?;
    eprintln!("eval {} -> {}", args.task, args.json.display());
    Ok(())
}

fn run_segment(args: &SegmentArgs) -> anyhow::Result<()> {
    let rgb = io::read_rgb_png(&args.rgb)?;
    let depth = io::depth_from_pfm(&io::read_pfm(&args.depth)?, &args.depth)?;
    let curv = io::curvature_from_pfm(&io::read_pfm(&args.curv)?, &args.curv)?;
    let weights = BorderWeights::new(args.wi, args.wd, args.wc, args.thresh)?;
    let reduction = match args.curvature_term.as_str() {
        "mean-abs" => CurvatureReduction::MeanAbs,
        "max-abs" => CurvatureReduction::MaxAbs,
        "abs-mean" => CurvatureReduction::AbsMean,
        other => anyhow::bail!("unknown curvature term {other:?}"),
    };
    let border = segment_scene(&rgb, &depth, &curv, &weights, reduction)?;
    io::write_mask_png(border.data(), border.width(), border.height(), &args.out)?;
    eprintln!(
        "segment: {} border pixels -> {}",
        border.border_count(),
        args.out.display()
    );
    Ok(())
}

/// Dispatches a full argv (including the program name). Returns the process
/// exit code: 0 on success, 2 on usage errors, 1 on runtime failures.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Geometry(args) => run_geometry(args),
        Command::Train(args) => run_train(args),
        Command::CapacityExperiment(args) => run_capacity(args),
        Command::Eval(args) => run_eval(args),
        Command::Segment(args) => run_segment(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Format-version summary used by `--version`; exposed for tests.
pub fn format_versions() -> &'static str {
    FORMAT_VERSIONS
}
