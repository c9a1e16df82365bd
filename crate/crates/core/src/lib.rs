//! Trace-rule models for multipartite correlations.
//!
//! Every nonsignalling box `P(a_1..a_N|x_1..x_N)` can be written as
//! `tr(O · M_{a_1}^{x_1} ⊗ ... ⊗ M_{a_N}^{x_N})` for some unit-trace Hermitian
//! `O` and local POVMs. Restricting `O` to be positive gives quantum boxes;
//! restricting it to be nonnegative on product states (an entanglement
//! witness) gives a strictly larger set once there are three parties.
//!
//! Modules:
//!
//! - [`hilbert`]: dense complex matrices, Hermitian operators, eigensolves, dual bases.
//! - [`boxes`]: correlation boxes, no-signalling checks, marginals, the tripartite Bell functional.
//! - [`operators`]: POVMs, measurement models, trace-rule evaluation, operator classification.
//! - [`synthesis`]: operator and measurements for any nonsignalling box.
//! - [`witness`]: minimization over product states, witness certification.
//! - [`upb`]: the three-qubit UPB witness and its Bell violation.
//! - [`cj`]: linear maps, duals, Choi operators, the bipartite witness/state identity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxes;
pub mod cj;
pub mod error;
pub mod hilbert;
pub mod operators;
pub mod sample;
pub mod synthesis;
pub mod upb;
pub mod witness;

pub use boxes::{CorrelationBox, Scenario};
pub use error::{Error, Result};
pub use hilbert::{ComplexMatrix, ComplexVector, HermitianOperator};
pub use operators::{MeasurementModel, Povm};
