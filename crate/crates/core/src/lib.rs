//! Degree-zero analytic torsion of flat model fibers with absolute and
//! relative boundary conditions, torsion of metrized exact sequences, and a
//! harness that checks comparison and gluing identities numerically.
//!
//! The crate is organised bottom-up:
//!
//! * [`special_zeta`]: Riemann and half-shifted zeta values, including the
//!   stored values and derivatives at `s = 0`.
//! * [`heat_kernel`]: theta-function heat traces on intervals and circles,
//!   the Mellin machinery turning traces into `ζ(0)`, `ζ'(0)`.
//! * [`complex`]: finite metrized complexes and their torsion.
//! * [`model`]: the fiber catalog, its spectra, cohomology and
//!   Mayer–Vietoris sequences.
//! * [`torsion`]: spectral torsion by quadrature and by zeta functions, plus
//!   convention calibration.
//! * [`verify`]: the identity catalog, scenario configs and JSON reports.

pub mod complex;
pub mod error;
pub mod heat_kernel;
pub mod model;
pub mod quadrature;
pub mod special_zeta;
pub mod torsion;
pub mod verify;

pub use error::{Error, Result};
