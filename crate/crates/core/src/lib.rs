//! Pointwise upper bounds for holomorphic functions, and for solutions of the
//! d-bar equation, derived from integral constraints through a sup-inverse
//! form of Jensen's inequality.

pub mod bounds;
pub mod checks;
pub mod cli;
pub mod config;
pub mod convex;
pub mod dbar;
pub mod error;
pub mod ext;
pub mod geom;
pub mod jensen;
pub mod minimize;
pub mod quadrature;
pub mod report;

pub use convex::{classify, sup_inverse, ConditionCase, ConditionReport, ConvexError, ConvexFunction, SupInverse};
pub use ext::{ExtReal, Interval};
