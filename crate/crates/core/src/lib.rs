//! Monte Carlo laboratory for the random-plaquette Z2 gauge model in three
//! dimensions, the random-bond Ising model in two dimensions, and the chain
//! algebra of the toric code.

pub mod bits;
pub mod disorder;
pub mod error;
pub mod lattice;
pub mod model;
pub mod observables;
pub mod rng;
pub mod scan;
pub mod spins;
pub mod toric;

pub use error::{Error, Result};
pub use lattice::{Lattice, LinkId, PlaquetteId, SiteId, WilsonLoopSpec};
pub use model::Model;
