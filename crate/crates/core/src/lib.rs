//! Pseudospectral laboratory for the nonlinear Schrödinger equation
//! `i u_t + αΔu = μ f(|u|²) u` on a periodic box.

pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod imethod;
pub mod initial;
pub mod integrator;
pub mod morawetz;
pub mod numeric;
pub mod record;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::{Grid, GridSpec};
pub use integrator::{energy, evolve, step, NlsParams, Stepper, StepperConfig};
pub use record::{Diagnostic, DiagnosticRecord, Trajectory};
pub use spectral::{Band, SobolevSpec};
