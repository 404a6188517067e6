//! Coupled hyperchaotic stream cipher together with the tools used to break it.
//!
//! The crate is organised by concern:
//!
//! * [`dynamics`]: vector fields of the transmitter, receiver and eavesdropper, and a
//!   fixed-step RK4 integrator with an optional delayed channel.
//! * [`analysis`]: Lyapunov spectra, local minima, Morlet scalograms, collapse and
//!   synchronization detection.
//! * [`cipher`]: keystream extraction, Vernam XOR and the session state machine.
//! * [`attacks`]: the NMSE inverse problem and the estimators built on it.
//! * [`config`]: the plain-text `key = value` configuration format.

pub mod analysis;
pub mod attacks;
pub mod cipher;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod rng;

pub use error::{Error, Result};
