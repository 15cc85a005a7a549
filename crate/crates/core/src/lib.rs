//! Quantum-optical state of the driving laser after high harmonic generation.
//!
//! The crate is organised bottom-up:
//!
//! * [`pulse`] – atomic units and the classical sin² driver.
//! * [`tdse`] – split-operator 1D Schrödinger solver producing dipole means
//!   and two-time connected dipole correlations (reference backend).
//! * [`sfa`] – strong-field-approximation backend built on the bound–continuum
//!   transition kernel.
//! * [`correlation`] – the shared [`CorrelationTable`] type.
//! * [`cache`] – content-addressed on-disk storage of correlation tables.
//! * [`spectral`] – displacements χ_q, the spectral moment matrices and the
//!   squeezing numbers (B, ψ, r, dB).
//! * [`gaussian`] – Gaussian continuous-variable states, the quadratic filter,
//!   Wigner functions and two-mode entanglement measures.
//! * [`scan`] – CEP scans over a backend with content-addressed caching.

pub mod cache;
pub mod correlation;
pub mod error;
pub mod gaussian;
pub mod pulse;
pub mod quad;
pub mod scan;
pub mod sfa;
pub mod spectral;
pub mod tdse;

pub use correlation::{CorrelationTable, DipoleRecord, TableMeta};
pub use error::{Error, Result};
pub use gaussian::{BilinearForm, GaussianState};
pub use pulse::{Envelope, PulseParams, TimeGrid};
pub use spectral::{SpectralMoments, SqueezeRecord};

pub use num_complex::Complex64 as C64;
