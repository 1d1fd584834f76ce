//! Library side of the `duhem` command-line tool: config schema, command
//! implementations, SVG rendering, and verification suites. The binary in
//! `main.rs` is a thin argument-parsing shell over these functions so that
//! every byte of output is testable in-process.

pub mod commands;
pub mod config;
pub mod svg;
pub mod verify;

/// Process exit codes: part of the CLI contract.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG_ERROR: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
    pub const VERIFICATION_FAILURE: i32 = 4;
}
