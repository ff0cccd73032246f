//! Circuit analysis and control for multimode superconducting qubits.
//!
//! The crate follows the device pipeline end to end:
//!
//! * [`netlist`] and [`circuit`]: lumped-element description, DC phases and
//!   normal modes of the linearized circuit.
//! * [`kerr`]: expansion of the Josephson potential in normal-mode fluxes and
//!   extraction of self-Kerr, cross-Kerr and three-body terms.
//! * [`cqed`]: coupling to a readout cavity and dispersive shifts.
//! * [`design`]: asymmetric four-junction trimon design and validation.
//! * [`compiler`]: conditional-rotation gate compilation with frame tracking.
//! * [`pulsesim`]: Lindblad simulation, tomography and benchmarking.
//!
//! Energies are quoted in GHz (cycles per nanosecond) at every public
//! boundary; internal dynamics use angular units with hbar = 1.

pub mod circuit;
pub mod compiler;
pub mod cqed;
pub mod design;
pub mod error;
pub mod kerr;
pub mod netlist;
pub mod presets;
pub mod pulsesim;
pub mod units;

pub use error::{Error, Result};
