//! Single-accumulator optimizers: SGD, SGD with momentum, AdaGrad, RMSProp
//! and AdaDelta.

use crate::error::{check_finite, check_len, Result};
use crate::params::ParamVector;

/// Accumulator state shared by the momentum-style optimizers.
///
/// `v` holds the velocity (SGDM), the running sum of squared gradients
/// (AdaGrad), or the moving average of squared gradients (RMSProp, AdaDelta).
/// `u` is only used by AdaDelta, where it is the moving average of squared
/// updates.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub lr: f64,
    pub beta: f64,
    pub eps: f64,
    v: Vec<f64>,
    u: Vec<f64>,
}

impl MomentState {
    pub fn new(dim: usize, lr: f64, beta: f64, eps: f64) -> Self {
        Self {
            lr,
            beta,
            eps,
            v: vec![0.0; dim],
            u: vec![0.0; dim],
        }
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.v
    }

    pub fn update_accumulator(&self) -> &[f64] {
        &self.u
    }

    fn check(&self, w: &[f64], grad: &[f64]) -> Result<()> {
        check_len("optimizer parameters", self.v.len(), w.len())?;
        check_len("optimizer gradient", self.v.len(), grad.len())?;
        check_finite("optimizer gradient", grad)
    }

    /// `v = beta * v + grad; w -= lr * v`
    pub fn sgdm_update(&mut self, w: &mut [f64], grad: &[f64]) -> Result<()> {
        self.check(w, grad)?;
        for ((wi, &g), vi) in w.iter_mut().zip(grad).zip(&mut self.v) {
            *vi = self.beta * *vi + g;
            *wi -= self.lr * *vi;
        }
        Ok(())
    }

    /// `v += grad^2; w -= lr * grad / (sqrt(v) + eps)`
    pub fn adagrad_update(&mut self, w: &mut [f64], grad: &[f64]) -> Result<()> {
        self.check(w, grad)?;
        for ((wi, &g), vi) in w.iter_mut().zip(grad).zip(&mut self.v) {
            *vi += g * g;
            let denom = vi.sqrt() + self.eps;
            if denom > 0.0 {
                *wi -= self.lr * g / denom;
            }
        }
        Ok(())
    }

    /// `v = beta * v + (1 - beta) * grad^2; w -= lr * grad / (sqrt(v) + eps)`
    pub fn rmsprop_update(&mut self, w: &mut [f64], grad: &[f64]) -> Result<()> {
        self.check(w, grad)?;
        for ((wi, &g), vi) in w.iter_mut().zip(grad).zip(&mut self.v) {
            *vi = self.beta * *vi + (1.0 - self.beta) * g * g;
            let denom = vi.sqrt() + self.eps;
            if denom > 0.0 {
                *wi -= self.lr * g / denom;
            }
        }
        Ok(())
    }

    /// Two-accumulator AdaDelta with decay `beta` (rho):
    ///
    /// ```text
    /// v  = rho * v + (1 - rho) * grad^2
    /// dx = -sqrt(u + eps) / sqrt(v + eps) * grad
    /// u  = rho * u + (1 - rho) * dx^2
    /// w += lr * dx
    /// ```
    pub fn adadelta_update(&mut self, w: &mut [f64], grad: &[f64]) -> Result<()> {
        self.check(w, grad)?;
        let rho = self.beta;
        for ((wi, &g), (vi, ui)) in w
            .iter_mut()
            .zip(grad)
            .zip(self.v.iter_mut().zip(self.u.iter_mut()))
        {
            *vi = rho * *vi + (1.0 - rho) * g * g;
            let dx = -((*ui + self.eps).sqrt() / (*vi + self.eps).sqrt()) * g;
            *ui = rho * *ui + (1.0 - rho) * dx * dx;
            *wi += self.lr * dx;
        }
        Ok(())
    }
}

pub fn sgd_step(w: &ParamVector, grad: &[f64], lr: f64) -> Result<ParamVector> {
    check_len("sgd gradient", w.len(), grad.len())?;
    check_finite("sgd gradient", grad)?;
    let next = w.iter().zip(grad).map(|(wi, g)| wi - lr * g).collect();
    Ok(ParamVector::from_vec_unchecked(next))
}

fn pure(
    w: &ParamVector,
    grad: &[f64],
    state: &MomentState,
    update: fn(&mut MomentState, &mut [f64], &[f64]) -> Result<()>,
) -> Result<(ParamVector, MomentState)> {
    let mut next_w = w.clone();
    let mut next_state = state.clone();
    update(&mut next_state, next_w.as_mut_slice(), grad)?;
    Ok((next_w, next_state))
}

pub fn sgdm_step(w: &ParamVector, grad: &[f64], state: &MomentState) -> Result<(ParamVector, MomentState)> {
    pure(w, grad, state, MomentState::sgdm_update)
}

pub fn adagrad_step(w: &ParamVector, grad: &[f64], state: &MomentState) -> Result<(ParamVector, MomentState)> {
    pure(w, grad, state, MomentState::adagrad_update)
}

pub fn rmsprop_step(w: &ParamVector, grad: &[f64], state: &MomentState) -> Result<(ParamVector, MomentState)> {
    pure(w, grad, state, MomentState::rmsprop_update)
}

pub fn adadelta_step(w: &ParamVector, grad: &[f64], state: &MomentState) -> Result<(ParamVector, MomentState)> {
    pure(w, grad, state, MomentState::adadelta_update)
}
