//! Discrete complex-valued spaces, quadrature and assembly.

pub mod assemble;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod spaces;

pub use assemble::{AssembledOperator, SymmetryKind};
pub use solver::{SaddleLu, SaddleStats, SolverError, SparseLu};
pub use spaces::{EdgeSpace, NodalSpaceW, TetGeom};
