//! Autonomous quantum error correction (AutoQEC) for Hamiltonian phase estimation.
//!
//! Pipeline: Pauli/noise operators → error sets E^[n] and K^[~c] → LP code search
//! over eigenvalue pairs → Gram–Schmidt correctable basis → engineered dissipation
//! → Lindblad integration → QFI curves and ε(R) scaling.
//!
//! Numerical types are generic over [`scalar::Real`] (`f32`/`f64`); the LP is also
//! generic over exact rationals. The aliases below fix the scalar to `f64`.

pub mod code_search;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod lindblad;
pub mod lp;
pub mod metrology;
pub mod noise;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};

pub type Operator64 = linalg::Operator<f64>;
pub type Ket64 = linalg::Ket<f64>;
pub type RealMatrix64 = linalg::RealMatrix<f64>;
pub type Spectrum64 = linalg::HamiltonianSpectrum<f64>;
pub type NoiseModel64 = noise::NoiseModel<f64>;
pub type ErrorStructure64 = noise::ErrorStructure<f64>;
pub type CodePair64 = code_search::CodePair<f64>;
pub type CorrectableBasis64 = engine::CorrectableBasis<f64>;
pub type AutoQecScheme64 = engine::AutoQecScheme<f64>;
pub type Lindbladian64 = lindblad::Lindbladian<f64>;
pub type SimulationConfig64 = lindblad::SimulationConfig<f64>;
pub type Trajectory64 = lindblad::Trajectory<f64>;
pub type QfiCurve64 = metrology::QfiCurve<f64>;
