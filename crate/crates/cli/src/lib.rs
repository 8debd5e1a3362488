//! Library surface of the `eulerpose` command-line tool; the binary in
//! `main.rs` is a thin argument-parsing layer over these modules.

pub mod check;
pub mod commands;
pub mod report;
