//! Numerical symplectic curvature flow and almost-Hermitian curvature flows.
//!
//! The crate is layered bottom-up:
//!
//! * [`tensor`], [`mat`], [`jet`]: pointwise algebra, small matrices and
//!   forward-mode jets,
//! * [`geometry`]: Levi-Civita geometry from 2-jets of a metric,
//! * [`hermitian`]: almost-Hermitian operators at a point,
//! * [`grid`]: periodic finite-difference fields on flat tori,
//! * [`flow`]: time integration on grids,
//! * [`homogeneous`]: the exact reduction on left-invariant structures,
//! * [`harness`]: identity checks and static-structure detection,
//! * [`config`], [`driver`]: run configuration and orchestration for the CLI.
//!
//! Everything numerical is generic over the storage scalar (`f32` or `f64`);
//! the `*64` aliases below fix it to `f64`.

pub mod config;
pub mod driver;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod hermitian;
pub mod homogeneous;
pub mod jet;
pub mod mat;
pub mod monitor;
pub mod samples;
pub mod scalar;
pub mod tensor;
pub mod tol;

pub use error::{Error, Result};
pub use scalar::{Analytic, Field, Scalar};
pub use tol::Tolerances;

pub type Real = f64;
