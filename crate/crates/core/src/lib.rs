//! Compiler from Clifford+T circuits to ICM form, wire schedules, braided
//! defect assemblies and distillation plans, with a dense state-vector
//! oracle for checking each stage.

pub mod circuit;
pub mod distill;
pub mod geometry;
pub mod icm;
pub mod oracle;
pub mod pipeline;
pub mod schedule;
pub mod verify;
