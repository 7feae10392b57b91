//! Count the real zero rays of a square system of homogeneous polynomials.
//!
//! The sphere is covered by finer and finer grids. Grid points where an
//! alpha-theory test certifies a nearby zero become vertices of a proximity
//! graph; once the components of that graph are provably in bijection with
//! the zeros, half their number is the count. Each component is then refined
//! to a zero by Newton's method on the sphere.
//!
//! ```
//! use zerorays::{count_roots, parse_system, CountConfig, Mode};
//!
//! // X₁² − ¼X₀²: the rays through (1, ±½)
//! let f = parse_system(
//!     r#"{"n":1,"degrees":[2],"polys":[[{"J":[0,2],"c":1},{"J":[2,0],"c":-0.25}]]}"#,
//! )?;
//! let result = count_roots(&f, Mode::Exact, &CountConfig::default())?;
//! assert_eq!(result.count, Some(2));
//! # Ok::<(), zerorays::Error>(())
//! ```

pub mod alpha;
pub mod arith;
pub mod engine;
mod error;
pub mod linalg;
pub mod oracle;
pub mod poly;
pub mod sphere;

pub use alpha::{
    newton_refine, newton_step, point_data, theory_constants, PointData, RefineStatus, Refinement,
    TheoryConstants,
};
pub use arith::{required_precision, Arithmetic, HostArithmetic, PrecisionContext};
pub use engine::{
    build_graph, check_halt, connected_components, count_roots, count_roots_observed,
    estimate_kappa, ComponentReport, CountConfig, CountResult, CountStatus, IterationReport, Mode,
    ProximityGraph,
};
pub use error::{Error, Result};
pub use poly::{
    parse_system, Monomial, Polynomial, PolynomialSystem, SystemDocument, TermDocument,
};
pub use sphere::{CubeGrid, CubeGridSpec, SpherePoint};
