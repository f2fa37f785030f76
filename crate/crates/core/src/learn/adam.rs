//! Adam optimizer over flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First/second moment accumulators plus the step counter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Standard bias-corrected update, in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], learning_rate: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "adam state sized for {} parameters, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut state = AdamState::new(3);
        let mut params = vec![0.5, -1.0, 2.0];
        let before = params.clone();
        state.step(&mut params, &[0.0, 0.0, 0.0], 0.1).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_is_signed_learning_rate_for_large_gradients() {
        // Bias-corrected first step: Δ = -lr · g / (|g| + ε̃) ≈ -lr · sign(g).
        let mut state = AdamState::new(2);
        let mut params = vec![0.0, 0.0];
        let lr = 1e-3;
        state.step(&mut params, &[5.0, -0.3], lr).unwrap();
        assert!((params[0] + lr).abs() < 1e-9, "got {}", params[0]);
        assert!((params[1] - lr).abs() < 1e-9, "got {}", params[1]);
    }

    #[test]
    fn two_steps_on_quadratic_match_scalar_reference() {
        // Hand-rolled scalar Adam on f(x) = x², gradient 2x.
        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.05);
        let mut x_ref = 1.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=2 {
            let g = 2.0 * x_ref;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x_ref -= lr * mh / (vh.sqrt() + eps);
        }

        let mut state = AdamState::new(1);
        let mut params = vec![1.0f64];
        for _ in 0..2 {
            let g = 2.0 * params[0];
            state.step(&mut params, &[g], lr).unwrap();
        }
        assert!((params[0] - x_ref).abs() < 1e-14);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut state = AdamState::new(2);
        let mut params = vec![0.0];
        assert!(state.step(&mut params, &[1.0], 0.1).is_err());
    }
}
