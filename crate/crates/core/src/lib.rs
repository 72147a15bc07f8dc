//! Gate-level workbench for N-modular redundancy (NMR) and distributed
//! minority/majority voting redundancy (3-of-M DMMR).
//!
//! The crate builds redundant systems around combinational function modules,
//! verifies their fault-masking guarantees exhaustively, and compares them on
//! area, critical-path delay, area-delay product and reliability.
//!
//! ```
//! use redundis::{library, redundancy, fault};
//!
//! let braun = library::braun_multiplier(4).unwrap();
//! let system = redundancy::build_dmmr(&braun, 5).unwrap();
//! let verdict = fault::verify_guarantee(&system).unwrap();
//! assert!(verdict.verified);
//! ```

pub mod error;
pub mod fault;
pub mod library;
pub mod metrics;
pub mod netlist;
pub mod par;
pub mod redundancy;
pub mod reliability;
pub mod sim;
pub mod table1;
pub mod verilog;

pub use error::{Error, Result};
pub use netlist::{Gate, GateKind, Netlist};
pub use redundancy::{RedundancyScheme, RedundantSystem};
