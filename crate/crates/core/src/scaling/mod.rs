//! Homogeneity analysis with single ordinal quantifications.
//!
//! Observations get object scores `X` (N×p) and every variable `j` gets
//! category quantifications `Y_j` (k_j×p). The fit minimizes
//!
//! ```text
//! (1/J) Σ_j tr[(X − G_j Y_j)'(X − G_j Y_j)]   subject to  X'X = N·I,  1'X = 0
//! ```
//!
//! where `G_j` is the indicator matrix of variable `j`. Nominal variables
//! have free `Y_j`; ordinal variables are restricted to `Y_j = o_j β_j'` with
//! non-decreasing `o_j`. See [`homals_fit`].

mod homals;
mod indicator;
mod loss;
mod orthonormalize;
mod pava;
mod points;

pub use homals::{homals_fit, HomalsOptions, Quantification, ScalingSolution, VariableQuantification};
pub use indicator::{expand_indicators, IndicatorBlock, IndicatorExpansion};
pub use loss::loss;
pub use orthonormalize::orthonormalize;
pub use pava::pava;
pub use points::{category_points, CategoryPoint};
