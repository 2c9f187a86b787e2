//! Satisfiability toolkit for the one-dimensional guarded fragment GF₁, the
//! one-dimensional tri-guarded fragment TGF₁ and the one-dimensional loosely
//! guarded fragment LGF₁.
//!
//! The crate covers parsing, fragment classification, the Scott-type normal
//! form, small-model construction, three decision engines and the hardness
//! encodings (with independent oracles) used to validate them.

pub mod decision;
pub mod fragments;
pub mod model_builder;
pub mod normal_form;
pub mod reductions;
pub mod structures;
pub mod syntax;

pub use decision::{
    brute_force_sat, decide, sat_alternating, sat_bounded, Engine, Options, SatStatus, SatVerdict,
    SizeLimit,
};
pub use fragments::{classify, FragmentReport, GuardStatus};
pub use normal_form::{to_normal_form, Dialect, NormalForm};
pub use structures::{evaluate, models, Structure};
pub use syntax::{parse_formula, render_formula, Formula, Signature};
