//! Two-parameter distance sets over prime fields.
//!
//! For E, F ⊂ F_q^{k+l} split as X = (x', x''), the crate counts
//! s(a,b) = #{(X, Y) ∈ E × F : ‖x' − y'‖ = a, ‖x'' − y''‖ = b} and checks the
//! Fourier-analytic estimates that control it: sphere decay, the
//! main-term/discrepancy split, and the rotation-energy chain for k = l = 2.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod pairs;
pub mod rational;
pub mod spectral;

pub use energy::{CorrelationTable, EnergyReport};
pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, Generator, OutputFormat, RunReport, Suite};
pub use field::{PrimeField, Rotation};
pub use geometry::{PointCodec, PointSetFile, Sphere, Vector};
pub use pairs::{PairSpectrum, SplitPointSet};
pub use rational::Rational;
pub use spectral::{DensityTable, SpectralTable};
