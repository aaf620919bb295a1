//! A wake-sleep program induction engine.
//!
//! The engine iterates three phases: waking searches for task-solving
//! programs by type-directed enumeration under a learned prior; an
//! abstraction sleep grows the library by refactoring solutions inside a
//! version-space DAG and compressing reused fragments into new productions;
//! a dreaming sleep trains a task-conditioned recognition model on replayed
//! solutions and on fantasy tasks sampled from the library.

pub mod compress;
pub mod curricula;
pub mod driver;
pub mod enumerate;
pub mod eval;
pub mod features;
pub mod grammar;
pub mod primitives;
pub mod program;
pub mod recognition;
pub mod regression;
pub mod task;
pub mod types;
pub mod vspace;

pub use eval::{evaluate, EvalError, Value, DEFAULT_STEP_BUDGET};
pub use grammar::{
    fit_weights, library_description_length, log_prior, sample_program, Frontier, FrontierEntry,
    Library, Production, WeightTable,
};
pub use primitives::PrimitiveSet;
pub use program::{ParseError, Program};
pub use types::{PolyType, Type, TypeContext, TypeError};
