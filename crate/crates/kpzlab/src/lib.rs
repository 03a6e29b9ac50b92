//! Simulation and exact-computation toolkit for colored interacting particle
//! systems: colored ASEP, the colored stochastic six-vertex model, q-Boson
//! line ensembles, last-passage percolation and their KPZ scaling limits.

pub mod asep;
pub mod cli;
pub mod error;
pub mod lpp;
pub mod qboson;
pub mod randomness;
pub mod s6v;
pub mod scaling;
pub mod verify;

pub use error::{Error, Result};
