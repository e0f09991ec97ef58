//! Command-line front end for the spherically symmetric transport laboratory.
//!
//! The library half hosts everything the `vlasov` binary does — TOML
//! configuration, artifact layout, the simulation driver, and the
//! post-hoc asymptotic analysis — so integration tests can call the same
//! code paths in process.

pub mod analyze;
pub mod config;
pub mod oracle;
pub mod output;
pub mod report;
pub mod simulate;
