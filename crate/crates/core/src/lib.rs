//! Damped dynamics of an f-deformed (Morse-like) oscillator coupled to a
//! thermal radiation reservoir.
//!
//! The crate is organized bottom-up:
//!
//! * [`fock`]: truncated deformed-oscillator algebra.
//! * [`morse`]: the Morse specialization (spectrum, coupling `η(n)`,
//!   wavefunctions).
//! * [`coherent`]: AOCS, DOCS and even-cat initial states.
//! * [`dissipator`]: thermal rate coefficients and the number-basis master
//!   equation, its RK4 integrator and its stationary state.
//! * [`bessel`] and [`wigner`]: Wigner functions of the evolving state.
//! * [`scenario`]: configuration, scenario orchestration and CSV output.

pub mod bessel;
pub mod coherent;
pub mod density;
pub mod dissipator;
pub mod error;
pub mod fock;
pub mod morse;
pub mod quadrature;
pub mod scenario;
pub mod special;
pub mod wigner;

pub use coherent::{StateKind, StateVector};
pub use density::{DensityMatrix, InvariantTolerance};
pub use dissipator::{Generator, RateTable, ReservoirParams};
pub use error::{Error, Result};
pub use fock::{DeformationFunction, FockOperator, OscillatorModel};
pub use morse::MorseParams;
pub use num_complex::Complex64;
pub use scenario::{ScenarioResult, SimulationConfig};
pub use wigner::{GridSpec, WignerGrid};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
