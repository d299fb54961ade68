//! Memristive single-node echo-state reservoir that sorts two-tone musical
//! intervals by the spectral complexity of their echoes, plus a sensory
//! dissonance reference model.

pub mod circuit;
pub mod classify;
pub mod device;
pub mod dsp;
pub mod error;
pub mod ode;
pub mod plot;
pub mod psycho;
pub mod reservoir;
pub mod score;
pub mod store;
pub mod study;

pub use error::{Error, Result};
