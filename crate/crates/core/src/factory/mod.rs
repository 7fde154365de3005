//! Mesh families used by the experiments.

mod aggregate;
mod coarsen;
mod cut;
mod merge;
mod penta;
mod structured;

pub use aggregate::{aggregate, scan, trigger, AggregationMode, AggregationParams, AggregationPlan, AggregationStep, Trigger};
pub use coarsen::coarsen;
pub use cut::{cut_circle_mesh, cut_strip_mesh, CellStatus, CutClassification, CutMesh};
pub use merge::{compact, merge_groups, union_loop};
pub use penta::penta_diagonal_mesh;
pub use structured::{cartesian_mesh, triangular_mesh};
