//! Periodic solutions of `Σ_{j=1}^n x^{(j)}(t) = A x(t) + L(x_t) + f(t)` on `[0, 2π]`.
//!
//! Solutions are built frequency by frequency as `û(k) = N_k f̂(k)` with
//! `N_k = (Σ_j (ik)^j I − A − L_k)^{-1}`, checked against a finite-difference
//! oracle, and accompanied by audits of the multiplier families that control
//! Besov-space regularity.

pub mod audit;
pub mod besov;
pub mod cli;
pub mod delay;
pub mod error;
pub mod fd;
pub mod fourier;
pub mod io;
pub mod linalg;
pub mod sequences;
pub mod solver;
pub mod symbol;

pub use delay::{DelayKernel, DelaySpec};
pub use error::{Error, Result};
pub use fourier::{SampledFunction, TrigPolynomial};
pub use linalg::{CMatrix, CVector};
pub use solver::{residual, solve, uniqueness_probe, PeriodicSolution};
pub use symbol::ProblemSpec;
