//! Jet-based numerical laboratory for the σ₂-curvature, the linearized
//! scalar and σ₂ curvature operators, their L² adjoints, and the identities
//! relating them, checked on explicit model geometries.

pub mod geometry;
pub mod jets;
pub mod models;
pub mod operators;
pub mod quadrature;
pub mod suite;

pub use geometry::{
    Axis, Chart, CurvatureFrame, DerivedQuantity, GeometryError, OneForm, ScalarField, Sym2,
    TensorField, TensorJet,
};
pub use jets::{Jet, JetError, MultiIndex};
pub use models::{
    find_model, find_model_with, kernel_candidates, model_catalog, CatalogParams, ModelError,
    ModelSpec,
};
pub use operators::{Balance, OperatorError};
pub use quadrature::{build_grid, AdjointPair, Grid, QuadratureError};
pub use suite::{
    cmd_curvature, cmd_identities, cmd_suite, Bundle, ConfigError, CurvatureSummary, Group,
    IdentityReport, RunSettings, Samples, Status, SuiteConfig, Task,
};
