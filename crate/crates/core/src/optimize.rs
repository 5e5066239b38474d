//! Texture and appearance optimization with frozen geometry.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adam::{adam_step, AdamState, LearningRates};
use crate::atlas::{plan_textures_nearest, reinit_resample};
use crate::backward::{backward, GradientBuffer};
use crate::dataset::PosedImage;
use crate::error::{Error, Result};
use crate::metrics::psnr;
use crate::render::render_color;
use crate::scene::Scene;

pub const REINIT_EVERY: u64 = 100;
pub const EVAL_EVERY: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub iterations: u64,
    /// Texel budget used when re-running the allocation; 0 keeps 1x1 textures.
    pub texel_budget: usize,
    pub seed: u64,
    pub learning_rates: LearningRates,
    pub reinit_every: u64,
    pub eval_every: u64,
    pub precision: Precision,
}

impl OptimizeConfig {
    pub fn new(iterations: u64, texel_budget: usize, seed: u64) -> Self {
        OptimizeConfig {
            iterations,
            texel_budget,
            seed,
            learning_rates: LearningRates::default(),
            reinit_every: REINIT_EVERY,
            eval_every: EVAL_EVERY,
            precision: Precision::F64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iteration: u64,
    pub l1: f64,
    pub dssim: f64,
    pub total: f64,
    pub heldout_psnr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

pub const LOG_HEADER: &str = "iteration,l1,dssim,total,heldout_psnr";

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LOG_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{},{},{},", r.iteration, r.l1, r.dssim, r.total);
            if let Some(p) = r.heldout_psnr {
                let _ = write!(out, "{p}");
            }
            out.push('\n');
        }
        out
    }

    /// Most recent held-out PSNR.
    pub fn final_psnr(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.heldout_psnr)
    }
}

/// Mean PSNR of `scene` over `views`.
pub fn heldout_psnr(scene: &Scene, views: &[PosedImage]) -> Result<f64> {
    if views.is_empty() {
        return Err(Error::InvalidArgument("no held-out views".into()));
    }
    let mut sum = 0.0;
    for v in views {
        sum += psnr(&render_color(scene, &v.camera), &v.image)?;
    }
    Ok(sum / views.len() as f64)
}

/// Failure of [`optimize`] with the last finite scene restored.
#[derive(Debug)]
pub struct OptimizeFailure {
    pub error: Error,
    pub log: TrainingLog,
}

fn round_f32(scene: &mut Scene) {
    for t in &mut scene.atlas.texels {
        *t = t.map(|c| c as f32 as f64);
    }
    for g in &mut scene.primitives {
        g.opacity_logit = g.opacity_logit as f32 as f64;
        g.sh_residual.iter_mut().for_each(|c| *c = *c as f32 as f64);
    }
}

/// Runs `config.iterations` Adam steps, one training view per step in a
/// seeded per-epoch shuffle. Every `reinit_every` steps textures are
/// re-allocated for the budget and resampled; moved texels get fresh Adam
/// moments. Held-out PSNR is logged every `eval_every` steps and at the end.
///
/// On a non-finite loss the scene is restored to its last finite state.
pub fn optimize(
    scene: &mut Scene,
    train: &[PosedImage],
    heldout: &[PosedImage],
    config: &OptimizeConfig,
) -> std::result::Result<TrainingLog, OptimizeFailure> {
    let fail = |error, log: &TrainingLog| OptimizeFailure { error, log: log.clone() };
    let mut log = TrainingLog::default();
    if config.iterations == 0 {
        return Ok(log);
    }
    if train.is_empty() {
        return Err(fail(Error::InvalidArgument("no training views".into()), &log));
    }
    if !scene.is_textured() {
        return Err(fail(Error::InvalidArgument("scene has no textures; allocate first".into()), &log));
    }
    if let Err(e) = scene.validate() {
        return Err(fail(e, &log));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = Vec::new();
    let mut grads = GradientBuffer::for_scene(scene);
    let mut state = AdamState::new(scene);
    let mut last_good = scene.clone();

    for it in 1..=config.iterations {
        if order.is_empty() {
            order = (0..train.len()).collect();
            order.shuffle(&mut rng);
            order.reverse();
        }
        let view = &train[order.pop().expect("refilled")];
        grads.zero();
        let report = match backward(scene, &view.camera, &view.image, &mut grads) {
            Ok(r) => r,
            Err(e) => return Err(fail(e, &log)),
        };
        if !report.total.is_finite() {
            *scene = last_good;
            return Err(fail(Error::NonFiniteLoss { iteration: it }, &log));
        }
        adam_step(scene, &grads, &mut state, it, &config.learning_rates);
        if config.precision == Precision::F32 {
            round_f32(scene);
        }
        if config.reinit_every > 0 && it % config.reinit_every == 0 {
            let plan = match plan_textures_nearest(&scene.scales(), config.texel_budget) {
                Ok((p, _)) => p,
                Err(e) => return Err(fail(e, &log)),
            };
            match reinit_resample(scene, &plan) {
                Ok(true) => {
                    state.reset_texels(scene.atlas.len());
                    grads = GradientBuffer::for_scene(scene);
                }
                Ok(false) => {}
                Err(e) => return Err(fail(e, &log)),
            }
        }
        let evaluate = !heldout.is_empty()
            && ((config.eval_every > 0 && it % config.eval_every == 0) || it == config.iterations);
        let heldout_psnr = if evaluate {
            match heldout_psnr(scene, heldout) {
                Ok(p) => Some(p),
                Err(e) => return Err(fail(e, &log)),
            }
        } else {
            None
        };
        if scene.atlas.texels.iter().all(|t| t.iter().all(|c| c.is_finite())) {
            last_good.clone_from(scene);
        }
        log.rows.push(LogRow {
            iteration: it,
            l1: report.l1,
            dssim: report.dssim,
            total: report.total,
            heldout_psnr,
        });
    }
    Ok(log)
}
