//! Cone metric spaces, TR-contraction certification and Picard iteration.
//!
//! A cone metric takes values in an ordered Banach space `E`; a map `S` is a
//! TR-contraction when `d(TSx, RSy) ≤ a·d(Tx, Ry)` in the cone order for
//! auxiliary maps `T`, `R` and some `a < 1`. This crate represents such
//! spaces, estimates `a` from samples, and runs the Picard iteration with its
//! geometric error envelope.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the `F64`
//! aliases below are what the CLI and most callers use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone_metric;
pub mod expr;
pub mod mappings;
pub mod ordered_space;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod solver;

pub use cone_metric::{ConeMetric, ConeMetricSpace, MetricError, MetricKind, Verdict};
pub use expr::{EvalError, Expr, ParseError};
pub use mappings::{MapTriple, MappingError, RealMap};
pub use ordered_space::{ConeKind, Layout, NormKind, OrderCone, SpaceElement, SpaceError};
pub use report::{AxiomOutcome, AxiomReport, Witness};
pub use sampling::{Interval, SampleSpec};
pub use scalar::Scalar;
pub use solver::{SolveConfig, SolveResult, SolveStatus, SolverError};

pub type SpaceElementF64 = SpaceElement<f64>;
pub type OrderConeF64 = OrderCone<f64>;
pub type ConeMetricSpaceF64 = ConeMetricSpace<f64>;
pub type RealMapF64 = RealMap<f64>;
pub type MapTripleF64 = MapTriple<f64>;
pub type SolveConfigF64 = SolveConfig<f64>;
pub type SolveResultF64 = SolveResult<f64>;
pub type IntervalF64 = Interval<f64>;

pub type SpaceElementF32 = SpaceElement<f32>;
pub type ConeMetricSpaceF32 = ConeMetricSpace<f32>;
pub type RealMapF32 = RealMap<f32>;
