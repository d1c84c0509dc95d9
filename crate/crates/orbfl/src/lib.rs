//! Exact arithmetic and lattice enumeration for orbital integrals of pairs of
//! quadratic embeddings over F_q((t)).

pub mod base_rings;
pub mod biquadratic_core;
pub mod closed_forms;
pub mod instance;
pub mod lattice_engine;
pub mod linalg;
pub mod orbital_integrals;
pub mod quadratic_algebras;
pub mod reduction;
