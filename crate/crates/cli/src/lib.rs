//! Batch driver for the multimomentum phase-space engine: spec-file
//! parsing, check execution and report rendering. The binary in
//! `main.rs` is a thin argument-parsing shell over this library.

pub mod checks;
pub mod report;
pub mod runspec;
