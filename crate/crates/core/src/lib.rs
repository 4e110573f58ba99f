//! Simulation and verification laboratory for planar site percolation and the
//! loop O(n) model on the hexagonal lattice.
//!
//! The crate is organized around six concerns:
//!
//! * [`planar`] — rotation systems, face tracing, combinatorial balls, and
//!   cut-set construction on finite planar graphs;
//! * [`hex`] — hexagonal-lattice patches, domains, and the surround test;
//! * [`percolation`] — site/bond configurations, union-find clustering,
//!   samplers, exact FKG and domination certificates, uniform spanning trees
//!   and trifurcations;
//! * [`arms`] — arm events, greedy arc splitting, and the deterministic
//!   crossing-component inequality;
//! * [`loopmodel`] — loop configurations, exact Gibbs enumeration, face-flip
//!   Metropolis dynamics, and annulus-loop estimation;
//! * [`coupling`] — blocking vertices, the domain-wall bijection, and the
//!   exact law-preservation oracle for the resampling kernel.
//!
//! Everything is finite: patches stand in for the infinite lattice and
//! "connects to infinity" always means "reaches the designated outer
//! boundary". All samplers take explicit 64-bit seeds and are pure functions
//! of (input, seed).

pub mod arms;
pub mod coupling;
pub mod error;
pub mod hex;
pub mod loopmodel;
pub mod measure;
pub mod percolation;
pub mod planar;
pub mod rng;

pub use error::{Error, Result};
pub use hex::{annulus, build_hex_patch, surrounds, Domain, EdgeSet, FaceCoord, HexPatch, HexVertex};
pub use loopmodel::{x_critical, GibbsSpec, LoopConfig};
pub use measure::ExactMeasure;
pub use percolation::{Graph, SiteConfig};
pub use planar::{CutSet, PlanarGraph};
pub use rng::StreamRng;
