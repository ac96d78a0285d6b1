//! k-contact geometry engine.
//!
//! Symbolic exterior calculus on explicit coordinate charts, verification of
//! k-contact structures and their Reeb frames, Legendrian submanifolds built
//! from parametrizing k-functions, pointwise solution spaces of the
//! Hamilton–de Donder–Weyl equations, and the extensive relativistic
//! hydrodynamics / Bjorken pseudo-gauge calculations built on top.

pub mod bjorken;
pub mod config;
pub mod forms;
pub mod hddw;
pub mod hydro;
pub mod kcontact;
pub mod legendrian;
pub mod linalg;
pub mod par;
pub mod symexpr;

#[cfg(test)]
mod testutil;

pub use config::Config;
