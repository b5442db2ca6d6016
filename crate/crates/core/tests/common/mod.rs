//! Helpers shared by the integration tests: an independent dense-matrix model
//! of the loop algebra, a brute-force flow solver, and random generators.
#![allow(dead_code)]

pub mod oracle;
pub mod random;
