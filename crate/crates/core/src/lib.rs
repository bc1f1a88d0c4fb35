//! Bogovskii right-inverse of the divergence on star-shaped domains, and a
//! laboratory for the constants that govern it.

pub mod bogovskii;
pub mod discrete;
pub mod domain;
pub mod error;
pub mod field;
pub mod identities;
pub mod lab;
pub mod fourier;
pub mod mollifier;
pub mod quad;
pub mod report;

/// Points are stored in three slots; 2D code ignores the last one.
pub type Point = [f64; 3];

pub use domain::{DomainKind, QuadratureRule, StarDomain};
pub use error::{Error, Result};
pub use mollifier::{Mollifier, MultiIndex, Weight};
pub use bogovskii::{Bogovskii, KernelSpec, Level, PolarRule};
pub use field::{Factor, FieldSpec, Separable};
pub use discrete::{GridField, InfSup, RMBasis};
