//! Evaluates the three training losses on small random inputs and verifies
//! their analytic gradients against central finite differences.
//!
//! ```text
//! cargo run --release --example loss_gradients
//! ```

use curvkit::losses::{curvature_loss, depth_loss, normal_loss, CurvatureLossOptions};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut w = x.to_vec();
    for i in 0..x.len() {
        let orig = w[i];
        w[i] = orig + h;
        let hi = f(&w);
        w[i] = orig - h;
        let lo = f(&w);
        w[i] = orig;
        g[i] = (hi - lo) / (2.0 * h);
    }
    g
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.abs().max(y.abs());
            if d < 1e-8 { (x - y).abs() } else { (x - y).abs() / d }
        })
        .fold(0.0, f64::max)
}

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let (w, h) = (5, 5);
    let n = w * h;
    let mask = vec![true; n];

    // Depth loss in log space.
    let gt: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.5)).collect();
    let pred: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.5)).collect();
    let r = depth_loss(&pred, &gt, &mask, w, h)?;
    let fd = fd_grad(|p| depth_loss(p, &gt, &mask, w, h).unwrap().value, &pred, 1e-5);
    println!("depth loss      value {:>12.6}  grad rel err {:.2e}", r.value, max_rel(&r.grad, &fd));

    // Normal loss.
    let mut gt_n = vec![0.0; 3 * n];
    for i in 0..n {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..-0.1),
        )
        .normalize();
        gt_n[i] = v.x;
        gt_n[n + i] = v.y;
        gt_n[2 * n + i] = v.z;
    }
    let pred_n: Vec<f64> = (0..3 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let r = normal_loss(&pred_n, &gt_n, &mask, w, h)?;
    let fd = fd_grad(|p| normal_loss(p, &gt_n, &mask, w, h).unwrap().value, &pred_n, 1e-5);
    println!("normal loss     value {:>12.6}  grad rel err {:.2e}", r.value, max_rel(&r.grad, &fd));

    // Depth-weighted curvature loss.
    let gt_k: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let pred_k: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let depth: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..4.0)).collect();
    let opts = CurvatureLossOptions::default();
    let r = curvature_loss(&pred_k, &gt_k, &depth, &mask, w, h, opts)?;
    let fd = fd_grad(
        |p| curvature_loss(p, &gt_k, &depth, &mask, w, h, opts).unwrap().value,
        &pred_k,
        1e-5,
    );
    println!("curvature loss  value {:>12.6}  grad rel err {:.2e}", r.value, max_rel(&r.grad, &fd));

    // The loss minima at pred = gt.
    let r = depth_loss(&gt, &gt, &mask, w, h)?;
    println!("depth loss at pred = gt: {}", r.value);
    let r = normal_loss(&gt_n, &gt_n, &mask, w, h)?;
    println!("normal loss at pred = gt: {} (minimum is -n = -{n})", r.value);
    Ok(())
}
