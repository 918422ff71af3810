//! Finite relational structures: signatures, models, isomorphism types,
//! exhaustive enumeration and exact induced densities.

mod density;
mod enumerate;
pub mod format;
mod iso;
mod model;
mod signature;

pub use density::induced_density;
pub use enumerate::{
    enumerate_labeled, enumerate_models, enumerate_models_with_budget, DEFAULT_BUDGET,
};
pub use format::{parse_model, parse_model_infer, to_text};
pub use iso::{
    automorphism_count, canonical_form, factorial, isomorphic, labeled_copies, labeled_weight,
    IsoClass,
};
#[allow(unused_imports)]
pub(crate) use model::{index_tuple, tuple_index};
pub use model::{injective_tuples, Model, Relation};
pub use signature::{Predicate, Signature};
