//! Multi-objective learning to rank through model distillation.
//!
//! Per-objective teacher rankers are trained independently, their scores are
//! fused into dense soft-labels, and a single student ranker is trained on a
//! blend of the sparse primary labels and those soft-labels. Later student
//! versions are refreshed by distilling from the previous version only.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`nn`] | MLP ranker, listwise softmax losses, backprop, gradient checking |
//! | [`data`] | query groups, synthetic marketplace generator, JSON Lines IO |
//! | [`distill`] | teachers, soft-label fusion, boosts, students, baselines |
//! | [`eval`] | NDCG, exposure, Kendall tau change rate, prediction difference |
//! | [`pipeline`] | experiment configs, the four studies, report output |
//! | [`cli`] | the `moltr` command line |

pub mod cli;
pub mod data;
pub mod distill;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod pipeline;
mod util;

pub use error::{Error, Result};
pub use model::{Lineage, Model};
