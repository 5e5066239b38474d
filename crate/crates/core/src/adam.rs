use crate::backward::GradientBuffer;
use crate::scene::Scene;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Per-group step sizes. Texels use 1e-3; the SH and opacity rates follow the
/// usual splatting defaults (feature rest = 2.5e-3 / 20, opacity = 5e-2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRates {
    pub texels: f64,
    pub sh_residual: f64,
    pub opacity: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        LearningRates {
            texels: 1e-3,
            sh_residual: 2.5e-3 / 20.0,
            opacity: 5e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: GradientBuffer,
    v: GradientBuffer,
}

impl AdamState {
    pub fn new(scene: &Scene) -> Self {
        AdamState {
            m: GradientBuffer::for_scene(scene),
            v: GradientBuffer::for_scene(scene),
        }
    }

    /// Zeroed moments for a new texel layout; other groups keep their moments.
    pub fn reset_texels(&mut self, texel_count: usize) {
        self.m.d_texels = vec![[0.0; 3]; texel_count];
        self.v.d_texels = vec![[0.0; 3]; texel_count];
    }

    pub fn matches(&self, scene: &Scene) -> bool {
        self.m.matches(scene) && self.v.matches(scene)
    }
}

#[inline]
fn update(param: &mut f64, g: f64, m: &mut f64, v: &mut f64, lr: f64, bc1: f64, bc2: f64) {
    *m = BETA1 * *m + (1.0 - BETA1) * g;
    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
    let m_hat = *m / bc1;
    let v_hat = *v / bc2;
    *param -= lr * m_hat / (v_hat.sqrt() + EPSILON);
}

/// One bias-corrected Adam update; `step` counts from 1.
pub fn adam_step(scene: &mut Scene, grads: &GradientBuffer, state: &mut AdamState, step: u64, lrs: &LearningRates) {
    assert!(step >= 1, "adam steps count from 1");
    assert!(grads.matches(scene) && state.matches(scene), "parameter layout changed");
    let bc1 = 1.0 - BETA1.powi(step as i32);
    let bc2 = 1.0 - BETA2.powi(step as i32);

    let texels = scene.atlas.texels.iter_mut();
    let moments = state.m.d_texels.iter_mut().zip(state.v.d_texels.iter_mut());
    for ((t, g), (m, v)) in texels.zip(&grads.d_texels).zip(moments) {
        for c in 0..3 {
            update(&mut t[c], g[c], &mut m[c], &mut v[c], lrs.texels, bc1, bc2);
        }
    }
    for (i, prim) in scene.primitives.iter_mut().enumerate() {
        for (k, p) in prim.sh_residual.iter_mut().enumerate() {
            update(p, grads.d_sh[i][k], &mut state.m.d_sh[i][k], &mut state.v.d_sh[i][k], lrs.sh_residual, bc1, bc2);
        }
        update(
            &mut prim.opacity_logit,
            grads.d_opacity[i],
            &mut state.m.d_opacity[i],
            &mut state.v.d_opacity[i],
            lrs.opacity,
            bc1,
            bc2,
        );
    }
}
