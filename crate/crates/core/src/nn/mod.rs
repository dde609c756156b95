//! Deterministic MLP ranker and listwise losses.

mod gradcheck;
mod loss;
mod mlp;
mod optim;

pub use gradcheck::finite_diff_grad;
pub(crate) use loss::{check_alpha, softmax_unchecked};
pub use loss::{
    cross_entropy, distill_loss, listwise_softmax, listwise_terms_loss, weighted_ce_sum, LabelDistribution,
    ListwiseTerm, PROB_FLOOR,
};
pub(crate) use mlp::backward_into;
pub use mlp::{backward, mlp_forward, Activation, ForwardTrace, GradientSet, LayerParams, MlpConfig, ParameterSet};
pub use optim::{sgd_step, sgd_step_in_place};
