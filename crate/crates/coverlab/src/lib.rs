//! coverlab: a desk-scale laboratory for blackbox reductions from agnostic
//! learning (and its noise-tolerant, private, stable, robust, partial, fair,
//! and statistical-query variants) to realizable learning.
//!
//! The crate builds finite hypothesis classes, exact discrete distributions,
//! and loss tables; runs the cover-based reductions on top of pluggable
//! realizable learners; and verifies each guarantee either exactly (rational
//! arithmetic) or by seeded Monte Carlo with explicit Hoeffding slack.

pub mod covers;
pub mod dist;
pub mod error;
pub mod harness;
pub mod hypotheses;
pub mod learner;
pub mod loss;
pub mod rational;
pub mod reduction;
pub mod rng;
pub mod space;

pub use error::{Error, Result};
pub use rational::Q;
