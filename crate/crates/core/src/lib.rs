//! Gate-level hardening engines: netlist IR, security coverage, DMR monitor
//! synthesis, row/site placement, static timing, and an incremental
//! insert-only ECO loop, closed by an additive-trojan attack simulator.
//!
//! The crate is `no_std` + `alloc`; all IO, text formats, and the CLI live in
//! the companion `gatemon-tools` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assertion;
pub mod attack;
pub mod coverage;
pub mod eco;
pub mod layout;
pub mod library;
pub mod monitor;
pub mod netlist;
pub mod sim;
pub mod sta;

pub use library::{Cell, CellLibrary, LibraryError, LogicFn, Pin, PinDir};
pub use netlist::{
    Diagnostic, Driver, InstId, Instance, Net, NetId, Netlist, NetlistError, ResourceSummary,
};
