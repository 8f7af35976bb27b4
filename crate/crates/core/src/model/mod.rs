//! Problem instances: type distributions, the valuation model and validation.

mod distribution;
mod expr;
mod instance;

pub use distribution::{Distribution, Family, Interval};
pub use expr::{parse_expression, BinOp, Expr};
pub use instance::{
    DistConfig, InstanceConfig, NumericConfig, ProblemInstance, Side, ValidationReport,
    ValuationConfig, ValuationModel, Violation,
};
