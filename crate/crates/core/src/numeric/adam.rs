use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numeric::params::ParamSet;

pub const DEFAULT_ALPHA: f64 = 0.005;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: DEFAULT_ALPHA,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Optimizer state: step counter plus first and second moment estimates
/// shaped like the parameters they track.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step_count: u64,
    first_moment: ParamSet,
    second_moment: ParamSet,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        AdamState {
            config,
            step_count: 0,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &ParamSet {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &ParamSet {
        &self.second_moment
    }
}

/// One bias-corrected Adam update, applied elementwise in place.
pub fn adam_step(params: &mut ParamSet, grads: &ParamSet, state: &mut AdamState) -> Result<()> {
    params.check_compatible(grads)?;
    params.check_compatible(&state.first_moment)?;

    let AdamConfig {
        alpha,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = (state.step_count + 1) as i32;
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);

    for (name, p) in params.iter_mut() {
        let g = grads.get(name)?.data();
        let m = state.first_moment.get_mut(name)?.data_mut();
        for (mi, gi) in m.iter_mut().zip(g) {
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
        }
        let v = state.second_moment.get_mut(name)?.data_mut();
        for (vi, gi) in v.iter_mut().zip(g) {
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
        }
        let m = state.first_moment.get(name)?.data();
        let v = state.second_moment.get(name)?.data();
        for ((pi, mi), vi) in p.data_mut().iter_mut().zip(m).zip(v) {
            let m_hat = mi / correction1;
            let v_hat = vi / correction2;
            *pi -= alpha * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    state.step_count += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::tensor::Tensor;

    fn scalar_set(v: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("theta", Tensor::from_vec(vec![v]));
        p
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = ParamSet::new();
        p.insert("a", Tensor::from_vec(vec![1.0, -2.0, 3.5]));
        p.insert("b", Tensor::zeros(&[2, 2]));
        let before = p.clone();
        let grads = p.zeros_like();
        let mut state = AdamState::new(&p, AdamConfig::default());
        for _ in 0..3 {
            adam_step(&mut p, &grads, &mut state).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(state.first_moment().global_norm(), 0.0);
        assert_eq!(state.second_moment().global_norm(), 0.0);
        assert_eq!(state.step_count(), 3);
    }

    #[test]
    fn first_step_moves_by_about_alpha() {
        let mut p = scalar_set(0.0);
        let mut state = AdamState::new(&p, AdamConfig::default());
        adam_step(&mut p, &scalar_set(0.3), &mut state).unwrap();
        // m̂ = g, v̂ = g², so the step is alpha·g/(|g| + eps).
        let expected = -0.005 * 0.3 / (0.3 + 1e-8);
        let got = p.get("theta").unwrap().data()[0];
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert!((got + 0.005).abs() < 1e-9);
    }

    #[test]
    fn two_steps_match_scripted_recurrence() {
        // Replay of the recurrence by hand for g = 1 on both steps:
        // step 1: m=0.1, v=0.001, m̂=1, v̂=1 → θ = -0.005/(1+1e-8)
        // step 2: m=0.19, v=0.001999, m̂=0.19/0.19=1, v̂=0.001999/0.001999=1
        let step = 0.005 / (1.0 + 1e-8);
        let expected = -2.0 * step;

        let mut p = scalar_set(0.0);
        let mut state = AdamState::new(&p, AdamConfig::default());
        for _ in 0..2 {
            adam_step(&mut p, &scalar_set(1.0), &mut state).unwrap();
        }
        let got = p.get("theta").unwrap().data()[0];
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert_eq!(state.step_count(), 2);
    }

    #[test]
    fn rejects_mismatched_gradient_names() {
        let mut p = scalar_set(0.0);
        let mut state = AdamState::new(&p, AdamConfig::default());
        let mut g = ParamSet::new();
        g.insert("other", Tensor::from_vec(vec![1.0]));
        assert!(matches!(
            adam_step(&mut p, &g, &mut state),
            Err(crate::Error::ParamMismatch(_))
        ));

        let mut extra = scalar_set(1.0);
        extra.insert("extra", Tensor::from_vec(vec![1.0]));
        assert!(adam_step(&mut p, &extra, &mut state).is_err());
        assert_eq!(state.step_count(), 0);
    }
}
