//! Densities of first-order formulas in finite structures, local (ball)
//! statistics, elementary equivalence through Ehrenfeucht–Fraïssé types,
//! convergence diagnostics for structure sequences, and piecewise-affine
//! graphings as limits of bounded-degree graph sequences.

pub mod canon;
pub mod convergence;
pub mod density;
pub mod ef;
pub mod error;
pub mod eval;
pub mod formula;
pub mod graphing;
pub mod io;
pub mod local;
pub mod structure;

pub use density::{density_exact, density_sampled, DensityValue};
pub use error::{Error, Result};
pub use eval::satisfies;
pub use formula::{parse, Formula, FragmentFlags};
pub use structure::{Graph, RootedBall, Signature, Structure};
