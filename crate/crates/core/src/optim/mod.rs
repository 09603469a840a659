//! First-order stochastic optimizers.
//!
//! Each algorithm is available as a pure step function over
//! `(parameters, gradient, state)` and as an in-place update on a
//! caller-owned state, which is what the training loops use.

mod adam;
mod moment;

use std::fmt;
use std::str::FromStr;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use moment::{adadelta_step, adagrad_step, rmsprop_step, sgd_step, sgdm_step, MomentState};

use crate::error::{check_finite, check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Sgd,
    Sgdm,
    AdaGrad,
    RmsProp,
    AdaDelta,
    Adam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 6] = [
        OptimizerKind::Sgd,
        OptimizerKind::Sgdm,
        OptimizerKind::AdaGrad,
        OptimizerKind::RmsProp,
        OptimizerKind::AdaDelta,
        OptimizerKind::Adam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Sgdm => "sgdm",
            OptimizerKind::AdaGrad => "adagrad",
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::AdaDelta => "adadelta",
            OptimizerKind::Adam => "adam",
        }
    }

    /// Default hyperparameters for this optimizer.
    pub fn defaults(self) -> Hyperparams {
        let adam = AdamConfig::default();
        let (lr, beta, eps) = match self {
            OptimizerKind::Sgd => (0.01, 0.0, 0.0),
            OptimizerKind::Sgdm => (0.01, 0.9, 0.0),
            OptimizerKind::AdaGrad => (0.01, 0.0, 1e-8),
            OptimizerKind::RmsProp => (0.001, 0.9, 1e-8),
            OptimizerKind::AdaDelta => (1.0, 0.95, 1e-6),
            OptimizerKind::Adam => (adam.lr, adam.beta1, adam.eps),
        };
        Hyperparams {
            lr,
            beta,
            beta2: adam.beta2,
            eps,
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown optimizer '{s}'")))
    }
}

/// Flat hyperparameter set. `beta` is the momentum / decay parameter (beta1
/// for Adam, rho for AdaDelta); `beta2` is only read by Adam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub lr: f64,
    pub beta: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Hyperparams {
    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// A running optimizer: algorithm plus its caller-owned state.
#[derive(Debug, Clone, PartialEq)]
pub enum Stepper {
    Sgd { lr: f64 },
    Sgdm(MomentState),
    AdaGrad(MomentState),
    RmsProp(MomentState),
    AdaDelta(MomentState),
    Adam(AdamState),
}

impl Stepper {
    pub fn new(kind: OptimizerKind, hyper: Hyperparams, dim: usize) -> Result<Self> {
        if !(hyper.lr >= 0.0 && hyper.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be non-negative, got {}", hyper.lr)));
        }
        if !(0.0..1.0).contains(&hyper.beta) {
            return Err(Error::Config(format!("decay parameter must lie in [0, 1), got {}", hyper.beta)));
        }
        let moment = || MomentState::new(dim, hyper.lr, hyper.beta, hyper.eps);
        Ok(match kind {
            OptimizerKind::Sgd => Stepper::Sgd { lr: hyper.lr },
            OptimizerKind::Sgdm => Stepper::Sgdm(moment()),
            OptimizerKind::AdaGrad => Stepper::AdaGrad(moment()),
            OptimizerKind::RmsProp => Stepper::RmsProp(moment()),
            OptimizerKind::AdaDelta => Stepper::AdaDelta(moment()),
            OptimizerKind::Adam => {
                let cfg = hyper.adam_config();
                cfg.validate()?;
                Stepper::Adam(AdamState::new(dim, cfg))
            }
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            Stepper::Sgd { .. } => OptimizerKind::Sgd,
            Stepper::Sgdm(_) => OptimizerKind::Sgdm,
            Stepper::AdaGrad(_) => OptimizerKind::AdaGrad,
            Stepper::RmsProp(_) => OptimizerKind::RmsProp,
            Stepper::AdaDelta(_) => OptimizerKind::AdaDelta,
            Stepper::Adam(_) => OptimizerKind::Adam,
        }
    }

    pub fn update(&mut self, w: &mut [f64], grad: &[f64]) -> Result<()> {
        match self {
            Stepper::Sgd { lr } => {
                check_len("sgd gradient", w.len(), grad.len())?;
                check_finite("sgd gradient", grad)?;
                for (wi, g) in w.iter_mut().zip(grad) {
                    *wi -= *lr * g;
                }
                Ok(())
            }
            Stepper::Sgdm(s) => s.sgdm_update(w, grad),
            Stepper::AdaGrad(s) => s.adagrad_update(w, grad),
            Stepper::RmsProp(s) => s.rmsprop_update(w, grad),
            Stepper::AdaDelta(s) => s.adadelta_update(w, grad),
            Stepper::Adam(s) => s.update(w, grad),
        }
    }
}
