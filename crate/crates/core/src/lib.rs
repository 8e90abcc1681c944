pub mod acceptance;
pub mod constraint;
pub mod cr;
pub mod error;
pub mod eval;
pub mod format;
pub mod greedy;
pub mod instance;
pub mod lp;
pub mod rng;
pub mod rounding;
pub mod set;
pub mod spm;

pub use constraint::{CapacitySet, ConstraintSystem, SubsetWitness, SystemKind};
pub use error::{ProbingError, Result};
pub use instance::{Element, ProbingInstance};
pub use set::{ElementId, ElementSet};
