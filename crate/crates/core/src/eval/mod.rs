//! Experiment harness: data generators, cross-validation, sweeps, the
//! networkless baseline and saturation studies.

pub mod cv;
pub mod datagen;
pub mod experiment;
pub mod networkless;
pub mod saturation;
