//! Worked scenarios on top of the chain-operator core: singlet and CHSH
//! correlations, spin-1 measurement settings, an EPR lattice, a
//! photodetector decay toy and the light-quantum test.

pub mod axis;
pub mod detector_toy;
pub mod epr;
pub mod error;
pub mod light_quantum;
pub mod relation;
pub mod singlet;
pub mod spin1;

pub use axis::{AxisSetting, Role};
pub use detector_toy::{build_detector_toy, DetectorToyConfig};
pub use epr::{build_epr_lattice, LatticeConfig};
pub use error::{Result, ScenarioError};
pub use light_quantum::{light_quantum_test, FieldInit, LightQuantumConfig};
pub use singlet::{build_singlet, chsh_value, ChshAxes};
pub use spin1::build_spin1_settings;
