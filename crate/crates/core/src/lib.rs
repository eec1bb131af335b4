//! Numerical dimension estimates for self-affine-like measures carried by
//! triangular planar iterated function systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`] parses the closed-form map definitions and bounds them with
//!   interval arithmetic.
//! * [`ifs`] validates triangular iterated function systems and provides the
//!   coding map and attractor sampling.
//! * [`cocycle`] handles Jacobian products, singular values and the bounded
//!   distortion constants.
//! * [`measure`] and [`ergodic`] supply symbolic measures and Monte Carlo
//!   estimates of entropy and Lyapunov exponents.
//! * [`projection`] and [`dimension`] compute the projected dimension, the
//!   Ledrappier-Young dimension and the empirical local dimensions.
//! * [`config`] and [`benchmarks`] read system descriptions and ship the
//!   reference systems.

pub mod benchmarks;
pub mod cocycle;
pub mod config;
pub mod dimension;
pub mod ergodic;
pub mod expr;
pub mod ifs;
pub mod measure;
pub mod projection;
pub mod rng;
pub mod stats;

pub use cocycle::{DistortionConstants, LowerTriangularJacobian, SingularValues};
pub use config::{AnalysisSettings, Config, ConfigError};
pub use dimension::{DimensionReport, LocalDimensionField};
pub use ergodic::{BasePolicy, ErgodicEstimate};
pub use expr::{Axis, ExprError, Expression, Interval};
pub use ifs::{BoxEnclosure, IfsError, Point, SymbolSequence, TriangularMap, TriangularSystem, Word};
pub use measure::{MeasureError, SymbolicMeasure};
pub use projection::{ProjectedDimension, ProjectionMethod};
