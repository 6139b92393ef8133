//! Exact analysis, simulation and parameter optimization for two ordinal
//! k-secretary policies: SINGLE-REF (one reference rank taken from the
//! sampling phase) and OPTIMISTIC (the k best sampling items used as a
//! descending ladder of references).
//!
//! The crate is organised bottom-up:
//!
//! - [`types`]: ranks, arrival orders, policy parameters, acceptance records
//!   and probability tables.
//! - [`policies`]: online execution of both policies on one arrival order.
//! - [`exact`]: closed-form finite-n acceptance probabilities and ratios.
//! - [`asymptotic`]: the n → ∞ lower-bound formulas and their calculus.
//! - [`oracle`]: exhaustive enumeration of all n! orders, the ground truth.
//! - [`montecarlo`]: seeded, worker-count-independent sampling estimates.
//! - [`optimizer`]: maximization over the reference rank and the sampling
//!   fraction, producing the optimal-parameter table.

pub mod asymptotic;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod numeric;
pub mod oracle;
pub mod optimizer;
pub mod policies;
pub mod types;

pub use error::{Error, Result};
pub use policies::{Policy, PolicyKind};
pub use types::{AcceptanceRecord, Accept, ArrivalOrder, PolicyParams, ProbTable, Rank};
