//! Hybrid High-Order (HHO) discretisation of the Poisson problem on general
//! polygonal meshes, built around the statically condensed face system and
//! its spectral conditioning.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: polygonal mesh data model, metrics and the `POLYMESH2D` format.
//! - [`quadrature`] and [`basis`]: segment/polygon quadrature, orthonormal
//!   polynomial bases and L² projectors.
//! - [`local`]: per-element operators (interpolator, potential reconstruction,
//!   difference operators, stabilisations, static condensation).
//! - [`assembly`]: the global condensed face system, solve and recovery.
//! - [`spectral`]: extreme eigenvalues and condition numbers.
//! - [`factory`]: mesh families (Cartesian, coarsened, cut, aggregated,
//!   penta-diagonal).
//! - [`experiment`]: the experiment driver used by the `hho-cond` binary.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod experiment;
pub mod factory;
pub mod local;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use mesh::{MeshMetrics, Point, PolyMesh};
