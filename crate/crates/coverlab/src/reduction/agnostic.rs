//! The base agnostic reduction and its discretized variants.

use crate::dist::{empirical_risk_f64, JointDistribution};
use crate::error::{Error, Result};
use crate::learner::{DiscreteLearner, RealizableLearner};
use crate::loss::{eta_ell, verify_tags, Loss};
use crate::rational::{q_display, q_to_f64};
use crate::rng::stage_seed;

use super::{
    erm_select, labeled_sample_size, learning_to_cover, ReduceOutcome, ReductionConfig,
    STAGE_LABELED, STAGE_LEARNER, STAGE_UNLABELED,
};
use crate::hypotheses::HypothesisClass;

fn erm_pipeline(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    joint: &JointDistribution,
    loss: &Loss,
    cfg: &ReductionConfig,
    seed: u64,
    m_u: usize,
) -> Result<ReduceOutcome> {
    let s_u: Vec<usize> = joint
        .sample(m_u, stage_seed(seed, STAGE_UNLABELED))
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    let cover = learning_to_cover(learner, class, &s_u, stage_seed(seed, STAGE_LEARNER))?;
    let m_l = cfg
        .m_l_override
        .unwrap_or_else(|| labeled_sample_size(cover.len(), cfg.eps, cfg.delta, q_to_f64(&loss.max_value())));
    let s_l = joint.sample(m_l, stage_seed(seed, STAGE_LABELED));
    let idx = erm_select(&cover, |h| empirical_risk_f64(h, &s_l, loss))?;
    Ok(ReduceOutcome { hypothesis: cover.member(idx).clone(), cover, m_u, m_l, s_u, s_l })
}

/// Draws `m_U = n(eta_l eps, delta/2)` unlabeled points, covers the class,
/// draws the Hoeffding-sized labeled sample, and returns the empirical risk
/// minimizer of the cover. Guarantee: risk at most OPT + eps with
/// probability 1 - delta (for losses with the identity of indiscernibles
/// over finite labels).
pub fn agnostic_reduce(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    joint: &JointDistribution,
    loss: &Loss,
    cfg: &ReductionConfig,
    seed: u64,
) -> Result<ReduceOutcome> {
    let eta_l = eta_ell(loss).map_err(|_| {
        Error::Precondition(
            "agnostic reduction needs the identity of indiscernibles; route through the \
             discretized or pseudometric variant otherwise"
                .into(),
        )
    })?;
    let m_u = cfg
        .m_u_override
        .unwrap_or_else(|| learner.sample_complexity(q_to_f64(&eta_l) * cfg.eps, cfg.delta / 2.0));
    erm_pipeline(learner, class, joint, loss, cfg, seed, m_u)
}

/// Discretized reduction for bounded c-approximate pseudometric losses:
/// covers the discretized class at `eps' = eps / (4 c^2 c1)` and selects by
/// ERM. Guarantee: risk at most c * OPT + eps with probability 1 - delta.
pub fn pseudometric_reduce(
    discrete: &DiscreteLearner,
    joint: &JointDistribution,
    loss: &Loss,
    cfg: &ReductionConfig,
    seed: u64,
) -> Result<ReduceOutcome> {
    let tags = verify_tags(loss);
    let c = tags.pseudometric_c.ok_or_else(|| {
        Error::Precondition("pseudometric reduction needs a verified approximate-pseudometric loss".into())
    })?;
    let c = q_to_f64(&c).max(1.0);
    let eps_prime = cfg.eps / (4.0 * c * c * discrete.c1);
    let m_u = cfg
        .m_u_override
        .unwrap_or_else(|| discrete.learner().sample_complexity(eps_prime, cfg.delta / 2.0));
    erm_pipeline(
        discrete.learner(),
        discrete.discretized_class(),
        joint,
        loss,
        cfg,
        seed,
        m_u,
    )
}

/// Discretized reduction for (a,b)-bounded losses: covers the discretized
/// class at `eps' = a eps / (4 b)`. Guarantee: truly agnostic, risk at most
/// OPT + eps with probability 1 - delta.
pub fn doubly_bounded_reduce(
    discrete: &DiscreteLearner,
    joint: &JointDistribution,
    loss: &Loss,
    cfg: &ReductionConfig,
    seed: u64,
) -> Result<ReduceOutcome> {
    let tags = verify_tags(loss);
    let (a, b) = tags.doubly_bounded.ok_or_else(|| {
        Error::Precondition("doubly-bounded reduction needs a verified (a,b)-bounded loss".into())
    })?;
    let eps_prime = q_to_f64(&a) * cfg.eps / (4.0 * q_to_f64(&b));
    if eps_prime <= 0.0 {
        return Err(Error::Precondition(format!(
            "degenerate bounds ({}, {})",
            q_display(&a),
            q_display(&b)
        )));
    }
    let m_u = cfg
        .m_u_override
        .unwrap_or_else(|| discrete.learner().sample_complexity(eps_prime, cfg.delta / 2.0));
    erm_pipeline(
        discrete.learner(),
        discrete.discretized_class(),
        joint,
        loss,
        cfg,
        seed,
        m_u,
    )
}
