//! Scenario runner for the `blowup` solvers and checks.

pub mod catalog;
pub mod config;
pub mod run;
