//! Procedural labeled indoor-scene generation and perception evaluation.
//!
//! The pipeline runs scene authoring ([`scene`]) through posed geometry
//! ([`geometry`]), rendering ([`render`]), predicate sampling ([`sampler`]),
//! camera trajectories ([`trajectory`]) and single-factor clips ([`axes`]) to
//! on-disk datasets ([`labels`]) and metrics ([`eval`]).

pub mod axes;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod labels;
pub mod render;
pub mod sampler;
pub mod scene;
pub mod trajectory;

/// Version of the on-disk dataset layout.
pub const DATA_FORMAT_VERSION: &str = "1";
