//! Scenario files, run log, HTTP service and command line for the cloudlet
//! delivery toolkit.

pub mod cli;
pub mod runlog;
pub mod scenario;
pub mod service;
