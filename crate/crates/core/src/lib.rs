//! Exact, classical, semiclassical and closure dynamics for collective and
//! long-range transverse-field Ising spins.
//!
//! The symmetric-sector engine ([`collective`], [`dynamics`], [`entanglement`])
//! handles the all-to-all model at hundreds to thousands of spins. The full
//! Hilbert-space engine ([`full_ed`]) handles arbitrary power-law couplings up
//! to 14 spins and doubles as an oracle for the sector engine.

pub mod classical;
pub mod closures;
pub mod collective;
pub mod dtwa;
pub mod dynamics;
pub mod elliptic;
pub mod entanglement;
pub mod error;
pub mod fit;
pub mod full_ed;
pub mod linalg;
pub mod ode;
pub mod record;
pub mod spectral;
pub mod twa;

pub use error::{Error, Result};
pub use record::TimeSeriesRecord;
