//! Time-like graphs, Gaussian processes indexed by them, and the numerical
//! schemes built on the same lattice ideas.

pub mod cells;
pub mod embed;
pub mod error;
pub mod fixtures;
pub mod gauss;
pub mod graph;
pub mod gw;
pub mod io;
pub mod order;
pub mod paths;
pub mod planar;
pub mod process;
pub mod rhombus;
pub mod rng;
pub mod she;
pub mod star;
pub mod tower;

pub use error::{Error, Result};
pub use graph::{validate_tlg, Edge, EdgeId, GraphKind, GraphPoint, TimeLikeGraph, TimePath, Vertex, VertexId};
pub use order::{meet_join, order_leq, Bound, MeetJoin};
pub use paths::{full_time_paths, interval, DEFAULT_PATH_CAP};
pub use star::{is_tlg_star, StarVerdict};
pub use tower::{Direction, Move, Seed, Tower};
pub use cells::{cell_collapse, find_cells, moralize, Cell, CellKind, Classification};
pub use embed::{embed, is_tlg_star_star, EmbedMode, Embedding, StarStarVerdict};
pub use gauss::{condition, GaussianVector};
pub use process::{build_model, exact_joint, Family, ProcessModel};
pub use gw::{GwTree, Offspring};
pub use rhombus::{GridField, RhombusGrid};
pub use she::{Field, NoiseVariance};
