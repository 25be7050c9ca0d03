//! Simulator for parallel in-memory wireless computing.
//!
//! OFDM-QAM transmitters and receivers are realized as matrix-vector
//! products on modeled 1T1R memristive crossbars. The crate covers the
//! device model ([`crossbar`]), the modem ([`ofdm`]), the analog chain
//! ([`frontend`]), MIMO zero-forcing fused with the DFT ([`mimo`]), the
//! energy arithmetic ([`energetics`]) and the experiment runner
//! ([`harness`]).

pub mod crossbar;
pub mod energetics;
pub mod error;
pub mod frontend;
pub mod harness;
pub mod mimo;
pub mod ofdm;
pub mod rng;
pub mod waveform;

pub use error::{Error, Result};
