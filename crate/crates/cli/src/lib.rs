//! Experiment runner for the hinge-penalty solvers.

pub mod commands;
pub mod config;
pub mod plot;
