//! Exact and closed-form density computations.

mod action;
mod coupling;
mod dilution;

pub use action::{closed_form_qr_density, parse_rational, ActionRow, ActionTable, ActionTableFile};
pub use coupling::{
    delta1_eval, product_density, ClosedForm, DensityOracle, DensityValue, ExactFn, Factor,
    LinearOrderDensity, Sampled,
};
pub use dilution::{DensityVector, MAX_FAMILY};
