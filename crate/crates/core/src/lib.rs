//! Deterministic 2D simulator for the flow of nematic liquid crystals with a
//! partially free boundary: the incompressible Navier-Stokes equations coupled
//! to the harmonic-map heat flow into the sphere, with Navier perfect-slip
//! conditions for the velocity and Plateau/Neumann ("partially free")
//! conditions for the director.
//!
//! The crate is organized around structured, body-fitted grids ([`geometry`]),
//! field containers with ghost layers ([`fields`]), second-order discrete
//! operators ([`operators`]), a semi-implicit projection solver ([`solver`]),
//! energy-law audits ([`energy`]), concentration/blow-up monitoring
//! ([`singularity`]), exact steady states ([`steady`]) and run configuration
//! plus serialization ([`config`], [`report`]).
//!
//! All reductions use fixed-order chunked summation, so results are
//! bit-identical across thread counts.

pub mod config;
pub mod energy;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod par;
pub mod report;
pub mod singularity;
pub mod solver;
pub mod steady;

pub use error::{Error, Result};
