pub mod classical;
pub mod domain;
pub mod error;
pub mod extremal;
pub mod hurwitz;
pub mod liouville;
pub mod maps;
pub mod mesh;
pub mod output;
pub mod pathmetric;
pub mod sparse;
pub mod verify;

pub type ComplexPoint = num_complex::Complex64;

pub use domain::{Domain, DomainKind, DomainSpec};
pub use error::{Error, Result};
pub use maps::{AnalyticMap, MapKind};
