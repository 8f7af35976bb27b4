//! Revenue-optimal mediator mechanisms for bilateral trade.
//!
//! A buyer with private type `t` and a seller with private quality `q` trade only
//! through a mediator, who recommends trade and sets payments. This crate builds
//! the optimal threshold mechanism (with ironing for irregular instances), evaluates
//! its payments, interim trade rates, utilities and revenue, and audits mechanisms
//! against independent numerical checks, including a discretized linear program.

pub mod cli;
pub mod error;
pub mod ironing;
pub mod mechanism;
pub mod model;
pub mod numeric;
pub mod simplex;
pub mod verify;
pub mod virtual_fn;

pub use error::{Error, Result};
pub use ironing::{iron_buyer, iron_seller, lower_convex_envelope, IronedFunction};
pub use mechanism::{DirectMechanism, TabulatedMechanism, Threshold, ThresholdMechanism};
pub use model::{Distribution, ProblemInstance, Side};
pub use virtual_fn::{compute_profile, regularity_check, RegularityReport, VirtualProfile};
