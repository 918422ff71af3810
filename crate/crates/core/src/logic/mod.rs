//! Open first-order formulas, their text syntax, theories and interpretations.

mod formula;
mod interpretation;
mod parser;
mod theory;

pub use formula::{Formula, FormulaDisplay, Node};
pub use interpretation::{
    alternating_copies, alternation, arc_orientation, is_even, Interpretation, InterpretationCheck,
};
pub use parser::parse_formula;
pub use theory::{Theory, Violation};
