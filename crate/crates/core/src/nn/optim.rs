use serde::{Deserialize, Serialize};

use super::Parameters;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Parameters,
    pub v: Parameters,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &Parameters) -> Self {
        AdamState { m: params.zeros_like(), v: params.zeros_like(), step: 0 }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut Parameters, grads: &Parameters, state: &mut AdamState, config: &AdamConfig) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - config.beta1.powi(t);
    let c2 = 1.0 - config.beta2.powi(t);
    let (b1, b2) = (config.beta1, config.beta2);
    for (((p, g), m), v) in params
        .tensors
        .iter_mut()
        .zip(&grads.tensors)
        .zip(state.m.tensors.iter_mut())
        .zip(state.v.tensors.iter_mut())
    {
        for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn params(values: &[f64]) -> Parameters {
        Parameters { tensors: vec![Tensor::from_vec(vec![values.len()], values.to_vec()).unwrap()] }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = params(&[1.0, -2.0, 0.5]);
        let before = p.clone();
        let g = p.zeros_like();
        let mut state = AdamState::new(&p);
        adam_step(&mut p, &g, &mut state, &AdamConfig::default());
        assert_eq!(p, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn constant_gradient_steps_by_lr() {
        let mut p = params(&[0.0, 0.0]);
        let g = params(&[3.0, -0.01]);
        let mut state = AdamState::new(&p);
        let cfg = AdamConfig::default();
        let mut last = p.clone();
        for _ in 0..1000 {
            adam_step(&mut p, &g, &mut state, &cfg);
            let step: Vec<f64> = p.tensors[0].data().iter().zip(last.tensors[0].data()).map(|(a, b)| a - b).collect();
            assert!((step[0] + cfg.learning_rate).abs() < 1e-8);
            assert!((step[1] - cfg.learning_rate).abs() < 1e-5);
            last = p.clone();
        }
        assert_eq!(state.step, 1000);
    }
}
