//! Gradient-based optimizers, MLP and benchmark objectives, dataset loaders and
//! a genetic-algorithm wrapper around Adam (GADAM) that evolves a population of
//! Adam-trained models.

pub mod data;
pub mod error;
pub mod evolution;
pub mod objective;
pub mod optim;
pub mod params;
pub mod problem;

pub use error::{Error, Result};
