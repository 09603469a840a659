use crate::error::{check_finite, check_len, Error, Result};
use crate::params::ParamVector;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("adam learning rate must be positive, got {}", self.lr)));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::Config(format!("adam {name} must lie in [0, 1), got {beta}")));
            }
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("adam eps must be non-negative, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Moment estimates and step counter of one Adam trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(dim: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 0,
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// Number of steps taken so far; the next step uses `steps() + 1` in the
    /// bias correction.
    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to `w`.
    ///
    /// Moments are refreshed with the incoming gradient first, then
    /// `w -= lr * sqrt(1 - beta2^k) / (1 - beta1^k) * m / (sqrt(v) + eps)`
    /// with `k` the post-increment step count. The state is left untouched
    /// when the gradient is rejected.
    pub fn update(&mut self, w: &mut [f64], grad: &[f64]) -> Result<()> {
        check_len("adam parameters", self.m.len(), w.len())?;
        check_len("adam gradient", self.m.len(), grad.len())?;
        check_finite("adam gradient", grad)?;

        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.step += 1;
        let k = self.step as i32;
        let correction = (1.0 - beta2.powi(k)).sqrt() / (1.0 - beta1.powi(k));
        let rate = lr * correction;

        for ((wi, &g), (mi, vi)) in w
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *mi = beta1 * *mi + (1.0 - beta1) * g;
            *vi = beta2 * *vi + (1.0 - beta2) * g * g;
            *wi -= rate * *mi / (vi.sqrt() + eps);
        }
        Ok(())
    }
}

/// Pure form of [`AdamState::update`].
pub fn adam_step(w: &ParamVector, grad: &[f64], state: &AdamState) -> Result<(ParamVector, AdamState)> {
    let mut next_w = w.clone();
    let mut next_state = state.clone();
    next_state.update(next_w.as_mut_slice(), grad)?;
    Ok((next_w, next_state))
}
