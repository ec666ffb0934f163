//! Point location on unstructured triangular, polygonal and tetrahedral
//! meshes through a background grid that maps every cell to a vertex or edge
//! patch, resolved by a binary search over angular fans.

pub mod baselines;
pub mod bench;
pub mod geom;
pub mod grid;
pub mod index;
pub mod locator;
pub mod mesh;

pub use baselines::{brute_force_locate, CandidateListGrid, WalkLocator};
pub use geom::Point;
pub use grid::GridSpec;
pub use index::{build_index, BuildConfig, BuildStats, LocatorIndex};
pub use locator::{locate_batch, LocateError, LocateOutcome};
pub use mesh::{compute_metrics, MeshMetrics, MeshTopology, WStarPolicy};
