//! Entanglement growth from entangled initial states in disordered
//! spin-1/2 chains.
//!
//! Everything lives in the zero-magnetization (half-filling) sector. The
//! numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! experiment drivers and file output run in `f64`.

pub mod bipartition_markov;
pub mod cli_io;
pub mod entanglement;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod operators;
pub mod scalar;
pub mod sector_basis;
pub mod spectral_stats;
mod state;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use sector_basis::{SectorBasis, SubsystemSplit};
pub use state::SectorState;

pub type State = state::SectorState<f64>;
pub type Operator = operators::OperatorMatrix<f64>;
pub type Decomposition = evolution::SpectralDecomposition<f64>;
pub type Gate = operators::TwoQubitGate<f64>;
pub type DensityMatrix = entanglement::DensityMatrix<f64>;

pub type State32 = state::SectorState<f32>;
pub type Operator32 = operators::OperatorMatrix<f32>;
pub type Decomposition32 = evolution::SpectralDecomposition<f32>;
pub type Gate32 = operators::TwoQubitGate<f32>;
