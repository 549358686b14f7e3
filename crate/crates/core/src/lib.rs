//! Macro-compiler and container runtime for WCET-bounded adaptation code.
//!
//! Adaptation rules are written in a small C-like language, compiled to a
//! stack-machine macro-code together with a per-platform worst-case execution
//! time, and run inside a container that confines each macro-code to its own
//! memory and time partition.

pub mod batch;
pub mod binfmt;
pub mod compiler;
pub mod container;
pub mod harness;
pub mod isa;
pub mod lang;
pub mod par;
pub mod perfdata;
