//! Monge-Ampere geodesics of toric Kahler metrics, their Bergman
//! approximations, and the numerical checks that compare the two.

pub mod cli;
pub mod converge;
pub mod error;
pub mod geodesic;
pub mod poly;
pub mod polytope;
pub mod potential;
pub mod quadrature;
pub mod quantize;
pub mod registry;
pub mod special;

pub use error::{Result, TogeError};
pub use poly::Polynomial;
pub use polytope::{DelzantPolytope, Facet, LatticeSet, PolytopeSpec};
pub use potential::{PotentialSpec, SymplecticPotential};
