//! Bipotentials from convex lagrangian covers on sampled 1-D grids.
//!
//! A cover `λ ↦ φ_λ` of convex functions yields
//! `b(x, y) = inf_λ [φ_λ(x) + φ*_λ(y)]`. This crate samples covers on
//! uniform grids, synthesizes `b`, and checks the bipotential axioms, the
//! graph identity `M(b) = ⋃_λ M(φ_λ)`, Fan-type convexity of the cover and
//! the minimax identities, all with explicit tolerances.

pub mod conjugate;
pub mod covers;
pub mod csvio;
pub mod error;
pub mod extgrid;
pub mod fancheck;
pub mod graphs;
pub mod synth;

pub use conjugate::{biconjugate, conjugate, conjugate_fast, is_convex, subdifferential, ConjugatePath};
pub use covers::{Cover, CoverSpec, LambdaSet, ParamSet, StarMode};
pub use error::{Error, Result};
pub use extgrid::{pairing, sample, ExtValue, FnSpec, Grid1D, SampledFn};
pub use fancheck::{check_fan_bic, check_fan_convex, check_implicit_convex, minimax_verify, FanInstance};
pub use graphs::{bb_check, graphs_equal, GraphTol, OperatorGraph};
pub use synth::{extract_graph, synth_table, synth_value, verify_axioms, BipotentialTable};
