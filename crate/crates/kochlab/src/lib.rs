//! kochlab: a numerical laboratory for quasi-linear problems on Koch
//! snowflake pre-fractal domains surrounded by thin, highly conductive
//! fiber layers.
//!
//! The crate builds the fibered domains in exact coordinates, meshes them
//! conformingly with region tags, assembles and minimizes the weighted
//! p-energy functionals, computes the discrete boundary energies on the
//! snowflake cell graphs, and runs convergence experiments tying the two
//! together.

pub mod exact;
pub mod geometry;
pub mod integrate;
pub mod mesh;
pub mod muckenhoupt;
pub mod weights;

pub use exact::{parse_rational, Alg, APoint, Q};
pub use geometry::{CellAddress, Constants, GeometryError, Similitude};
