//! File formats, verification suites and the command-line driver built on
//! [`hyperkahler_core`].

pub mod cli;
pub mod io;
pub mod num;
pub mod report;
pub mod suite;

pub use hyperkahler_core as core;
