//! Texel-budget and primitive-count sweeps. Every cell trains its own model
//! from the same seed; a failing cell is recorded and the sweep continues.

use std::fmt::Write as _;
use std::time::Instant;

use crate::atlas::{init_from_sh0, plan_textures_nearest};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{psnr, ssim};
use crate::optimize::{optimize, OptimizeConfig};
use crate::render::render_color;
use crate::scene::Scene;

/// How each cell builds its initial untextured scene for a primitive count.
pub type InitFn<'a> = dyn Fn(usize) -> Result<Scene> + Sync + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gaussians: usize,
    pub texels: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub seconds: f64,
    pub status: String,
}

pub const SWEEP_HEADER: &str = "gaussians,texels,psnr,ssim,seconds,status";

pub fn sweep_csv(rows: &[SweepRow], with_timing: bool) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let seconds = if with_timing { format!("{:.3}", r.seconds) } else { String::new() };
        let _ = writeln!(out, "{},{},{},{},{},{}", r.gaussians, r.texels, r.psnr, r.ssim, seconds, r.status);
    }
    out
}

/// Mean held-out PSNR and SSIM.
pub fn evaluate(scene: &Scene, dataset: &Dataset) -> Result<(f64, f64)> {
    if dataset.test.is_empty() {
        return Err(Error::InvalidArgument("dataset has no held-out views".into()));
    }
    let (mut p, mut s) = (0.0, 0.0);
    for v in &dataset.test {
        let r = render_color(scene, &v.camera);
        p += psnr(&r, &v.image)?;
        s += ssim(&r, &v.image)?;
    }
    let n = dataset.test.len() as f64;
    Ok((p / n, s / n))
}

/// Allocates `texels` over `init`, initializes from the degree-0 colors and
/// optimizes for `iterations`.
pub fn train_cell(init: Scene, dataset: &Dataset, texels: usize, iterations: u64, seed: u64) -> Result<Scene> {
    let mut scene = init;
    let (plan, _) = plan_textures_nearest(&scene.scales(), texels)?;
    init_from_sh0(&mut scene, &plan)?;
    let config = OptimizeConfig::new(iterations, texels, seed);
    optimize(&mut scene, &dataset.train, &[], &config).map_err(|f| f.error)?;
    Ok(scene)
}

pub fn run_sweep(
    dataset: &Dataset,
    gaussians: &[usize],
    texels: &[usize],
    iterations: u64,
    seed: u64,
    init: &InitFn,
) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &g in gaussians {
        for &t in texels {
            let start = Instant::now();
            let result = init(g).and_then(|s| train_cell(s, dataset, t, iterations, seed)).and_then(|s| evaluate(&s, dataset));
            let seconds = start.elapsed().as_secs_f64();
            rows.push(match result {
                Ok((psnr, ssim)) => SweepRow {
                    gaussians: g,
                    texels: t,
                    psnr,
                    ssim,
                    seconds,
                    status: "ok".into(),
                },
                Err(e) => SweepRow {
                    gaussians: g,
                    texels: t,
                    psnr: f64::NAN,
                    ssim: f64::NAN,
                    seconds,
                    status: format!("failed: {}", e.to_string().replace(',', ";")),
                },
            });
        }
    }
    rows
}
