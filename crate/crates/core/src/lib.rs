//! Canonical polyadic (CP) tensor decomposition.
//!
//! Three solvers share one objective: stand-alone alternating least squares,
//! ALS accelerated by nonlinear GMRES (windowed recombination of past
//! iterates followed by a line search), and a Polak–Ribière nonlinear
//! conjugate gradient baseline. Generators for the collinear dense test
//! problem and the finite-difference Laplacian tensor live in [`problems`].

// Negated comparisons are used so that NaN fails validity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod als;
pub mod error;
pub mod io;
pub mod kruskal;
mod linalg;
pub mod linesearch;
pub mod ncg;
pub mod ngmres;
pub mod problems;
pub mod solver;
pub mod tensor;

pub use error::{CpError, Result};
pub use kruskal::{fit_h, gradient, objective, CpModel, Gradient, IterateVector, KruskalTensor};
pub use linesearch::{more_thuente, LineSearchParams, LineSearchStatus};
pub use ncg::{ncg_solve, NcgConfig};
pub use ngmres::{ngmres_solve, AccelWindow, NgmresConfig};
pub use solver::{als_solve, CpSolution, IterRecord, StopReason, Trace};
pub use tensor::{DenseTensor, Matrix, Shape, SparseTensor, Tensor};
