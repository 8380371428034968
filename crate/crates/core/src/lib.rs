//! Dialog staging by partial evaluation.
//!
//! [`lcore`] defines the L0 object language; [`mixer`] is an offline partial
//! evaluator for it, available natively and as an L0 program; [`ddsl`] and
//! [`dinterp`] describe dialogs and stage them; [`projections`] derives
//! stagers, a dialog compiler and a compiler generator by specialization.

pub mod assets;
pub mod ddsl;
pub mod dinterp;
pub mod lcore;
pub mod mixer;
pub mod projections;

pub use lcore::{Datum, Program};
