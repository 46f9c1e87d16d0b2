//! Level-set segmentation with a convexity shape prior.
//!
//! The object is the sublevel set `{phi < 0}` of a signed distance function.
//! Convexity of the object is enforced by projecting the SDF onto
//! `{Laplacian >= 0}` and re-measuring distances until the two agree.
//!
//! ```
//! use convexseg::{enforce_convex_prior, is_convex_region, PriorConfig, RegionMask, ScalarField};
//!
//! // An L-shaped region as a crude level set.
//! let phi = ScalarField::from_fn(40, 40, |r, c| {
//!     let inside = (10..30).contains(&r) && (10..30).contains(&c) && !(r < 20 && c >= 20);
//!     if inside { -1.0 } else { 1.0 }
//! })?;
//! let (out, _) = enforce_convex_prior(&phi, &PriorConfig::default())?;
//! assert!(is_convex_region(&RegionMask::from_sublevel(&out), 1.0)?);
//! # Ok::<(), convexseg::Error>(())
//! ```

pub mod convexity;
pub mod energy;
pub mod error;
pub mod field;
pub mod imageio;
pub mod projection;
pub mod sdf;
pub mod segment;
pub mod synth;

pub use convexity::{convexity_defects, is_convex_region, ConvexHull};
pub use energy::{
    descent_direction, edge_indicator, evolution_step, region_means, total_energy, EnergyParams, RegionStats,
};
pub use error::{Error, Result};
pub use field::{gradient, gradient_magnitude, laplacian, GridIndex, RegionMask, ScalarField};
pub use imageio::{load_image, render_laplacian_map, render_overlay, LoadedImage};
pub use projection::{
    enforce_convex_prior, project_convex, PriorConfig, ProjectionConfig, ProjectionDiagnostics, SweepOrder,
};
pub use sdf::{distance_to_contour, extract_zero_contour, reinitialize, ZeroContour};
pub use segment::{init_levelset, segment, segment_from, InitSpec, Model, SegmentationConfig, SegmentationResult};
pub use synth::{synth, Scene, Shape, ShapeKind, ShapeSpec};
