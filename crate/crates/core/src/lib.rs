//! Matroid Bayesian online selection on laminar and graphic matroids.

pub mod exact;
pub mod formula;
pub mod generators;
pub mod io;
pub mod lp;
pub mod model;
pub mod preprocess;
pub mod ptas;
pub mod rational;
pub mod verify;

pub use exact::{optimal_value, ExactConfig, ExactError, ExactSolver, PolicyState, Realization, SelectionTrace, Threshold};
pub use formula::{Clause, Formula, FormulaError, Literal};
pub use model::{Atom, Bin, GraphicGround, Ground, Instance, LaminarFamily, ModelError, ValueDistribution, Violation};
pub use rational::Rational;
