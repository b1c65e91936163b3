//! Design and characterization toolkit for quasi-phase-matched parametric
//! down-conversion in thin-film lithium niobate rib waveguides.
//!
//! The pipeline runs from material dispersion ([`materials`]) through the
//! waveguide cross-section ([`waveguide`]) and a finite-difference mode solver
//! ([`modesolver`]) to phase matching, spectra and fits ([`qpm`]), and on to
//! photon-counting statistics ([`photonstats`]). [`workflow`] strings these
//! together from a [`config::ProjectConfig`]; [`cli`] is the command-line
//! front end.

pub mod cli;
pub mod config;
pub mod materials;
pub mod modesolver;
pub mod numerics;
pub mod photonstats;
pub mod qpm;
pub mod report;
pub mod waveguide;
pub mod workflow;
