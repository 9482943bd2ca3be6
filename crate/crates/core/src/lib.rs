//! Homogenized surface tensions of ferromagnetic lattice energies with two
//! bond strengths: exact cell problems by minimum cut, bounds, optimal
//! periodic microgeometries and localization on non-periodic fields.

pub mod bounds;
pub mod celltension;
pub mod designer;
pub mod error;
pub mod io;
pub mod lattice;
pub mod localizer;
pub mod mincut;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
