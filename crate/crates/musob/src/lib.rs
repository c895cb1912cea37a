//! Desk-scale machinery for Sobolev analysis with general path measures.
//!
//! The crate discretizes a ground space into a grid of measured cells and
//! works with injective polyline paths whose "length" is a configurable
//! measure: plain arc length, a weighted measure `omega * H^1`, the
//! parabolic height, or a tabulated density. On top of that sit
//!
//! - the p-modulus of finite path families, computed as a convex program
//!   ([`modulus`]),
//! - verification and synthesis of upper gradients, including Hajlasz-type
//!   pointwise gradients ([`gradient`]),
//! - Newton-Sobolev norms, maximal functions and Lipschitz truncation
//!   ([`sobolev`]),
//! - numerical checkers for Poincare, arc-chord, two-weight and embedding
//!   conditions ([`conditions`]).
//!
//! Anisotropic dilation metrics (the parabolic plane among them) are
//! supported throughout ([`metric`]).
//!
//! See the book under `book/` for a guided tour.

pub mod conditions;
pub mod error;
pub mod field;
pub mod gradient;
pub mod grid;
pub mod metric;
pub mod modulus;
pub mod path;
pub mod quad;
pub mod sobolev;
pub mod solver;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::{Cell, GroundGrid};
pub use metric::{BaseNorm, MetricDescriptor};
pub use path::{ParametrizedPath, PathMeasure, Polyline};
pub use solver::{PathProgram, Solution};
