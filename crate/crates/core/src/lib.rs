//! Numerical laboratory for the fractional nonlinear Schrödinger equation on
//! the square lattice `hZ²`: Fourier multipliers, split-step dynamics and the
//! continuum-limit comparison, and the degenerate oscillatory integrals that
//! govern lattice dispersive decay.

pub mod discretize;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod lattice;
pub mod manifold;
pub mod oscillatory;
pub mod special;

pub use error::{Error, Result};
pub use fit::{fit_decay, fit_power_law, DecayFit};
pub use lattice::{Grid, LatticeField, SpectralField, SymbolKind, SymbolSpec};
