//! Planning and simulation core for transporting cloudlets with aerial,
//! ground and underwater UAVs.
//!
//! - [`catalog`]: devices, cloudlets, UAVs and calibration data.
//! - [`perf_models`]: endurance, load, battery and link models.
//! - [`planner`]: the exact allocation solver and its exhaustive oracle.
//! - [`simulator`]: collaborative-processing and delivery simulations.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod exec;
pub mod perf_models;
pub mod planner;
pub mod simulator;

pub use catalog::{default_catalog, load_catalog, Catalog, CatalogError, Modality};
pub use exec::ExecMode;
pub use planner::{build_model, plan, solve, DeploymentRequest, Plan, PlanError, SolveOutcome};
