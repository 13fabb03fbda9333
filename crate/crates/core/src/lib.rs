//! Finite-dimensional laboratory for strong Morita equivalence of
//! representations and completely positive maps on C*-algebras.
//!
//! All algebras are unital *-subalgebras of matrix algebras, all modules are
//! spaces of rectangular matrices, and every construction (induced
//! representations, minimal Stinespring dilations, linking algebras, the
//! transfer of CP maps along an equivalence bimodule) is carried out with
//! explicit matrices and then checked numerically.

pub mod algebra;
pub mod bimodule;
pub mod cpmap;
pub mod error;
pub mod expectation;
pub mod generate;
pub mod numerics;
pub mod random;
pub mod representation;
pub mod transfer;

pub use algebra::{decompose, validate_algebra, Algebra, Block, BlockStructure, UnitPolicy};
pub use error::{Error, Result};
pub use numerics::{CMatrix, Tolerance, C64};
