//! Numerical laboratory for graphical translating solitons of mean
//! curvature flow.
//!
//! A graph `z = u(x, y)` moves by vertical translation under mean curvature
//! flow exactly when it solves the translator equation
//! `div(Du / W) = -1 / W` with `W = sqrt(1 + |Du|^2)`. This crate solves
//! that equation on truncated strips with capped infinite boundary data,
//! provides closed-form tilted grim reapers as oracles, extracts the
//! geometric diagnostics used in uniqueness and nonexistence arguments,
//! and assembles embedded surface meshes from graph pieces.

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod fields;
pub mod morse_rado;
pub mod oracles;
pub mod solver;

pub use error::{Error, Result};
pub use fields::{BoundarySpec, GridDomain, ScalarField};
