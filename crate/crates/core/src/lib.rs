//! Two-photon POVMs realized by sum-frequency generation and mode-selective
//! detection, with the supporting spectral machinery: frequency grids and
//! mode bases, joint spectral amplitudes, Schmidt and negativity analysis,
//! and spectral teleportation fidelities.

pub mod entanglement;
pub mod error;
pub mod grid;
pub mod jsa;
mod linalg;
pub mod povm;
pub mod teleport;

pub use error::{Checked, Error, Result, Warning};
pub use grid::{make_grid, FrequencyGrid, ModeFamily, ModeKind, SpectralAmplitude};
pub use jsa::{CouplingChi, JointSpectralAmplitude, PhaseMatchKind, PhaseMatchSpec};
pub use povm::{PovmElement, TwoPhotonDensity};
