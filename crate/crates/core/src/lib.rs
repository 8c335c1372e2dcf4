//! Iterative deployment for end-to-end PDDL planning.
//!
//! A policy is prompted with planning tasks, its traces are checked by a
//! plan validator, the valid ones are curated into a fine-tuning set (one
//! best trace per task, aggregated across generations), and the loop
//! repeats. The [`rlcheck`] module verifies numerically that supervised
//! fine-tuning on validated traces follows the REINFORCE gradient.

pub mod curation;
pub mod domains;
pub mod generators;
pub mod par;
pub mod pddl;
pub mod pipeline;
pub mod policy;
pub mod rlcheck;
pub mod seed;
pub mod validator;
