//! Robust and partial reductions: run the cover construction over subsets of
//! the unlabeled sample so that some subset lands inside the region where the
//! optimal hypothesis is realizable (its robust support, or its domain).

use crate::dist::JointDistribution;
use crate::error::{Error, Result};
use crate::hypotheses::HypothesisClass;
use crate::learner::RealizableLearner;
use crate::loss::{empirical_partial_risk_f64, robust_point_loss_f64, Loss, PerturbationMap};
use crate::rational::q_to_f64;
use crate::rng::stage_seed;

use super::{
    erm_select, labeled_sample_size, subsample_cover, ReduceOutcome, ReductionConfig, SubsetMode,
    STAGE_LABELED, STAGE_LEARNER, STAGE_UNLABELED,
};

/// Unlabeled budget `max over the mu grid of n(eps/(2(1-mu)), delta/3)/(1-mu)`
/// with the complexity floored at `ceil(ln(1/delta))`; the max is taken over
/// a 0.01-step grid on `[0, 1-eps]`.
fn support_unlabeled_budget(learner: &RealizableLearner, eps: f64, delta: f64) -> usize {
    let mut best = 0usize;
    let mut mu = 0.0f64;
    while mu <= 1.0 - eps + 1e-12 {
        let scale = 1.0 - mu;
        let n = learner.floored_complexity(eps / (2.0 * scale), delta / 3.0);
        let need = (n as f64 / scale).ceil() as usize;
        best = best.max(need);
        mu += 0.01;
    }
    best
}

fn support_pipeline<F: FnMut(&crate::hypotheses::Hypothesis, &[(usize, usize)]) -> f64>(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    joint: &JointDistribution,
    cfg: &ReductionConfig,
    seed: u64,
    mode: SubsetMode,
    max_loss: f64,
    mut empirical: F,
) -> Result<ReduceOutcome> {
    let m_u = cfg
        .m_u_override
        .unwrap_or_else(|| support_unlabeled_budget(learner, cfg.eps, cfg.delta));
    let s_u: Vec<usize> = joint
        .sample(m_u, stage_seed(seed, STAGE_UNLABELED))
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    let cover = subsample_cover(learner, class, &s_u, mode, stage_seed(seed, STAGE_LEARNER), cfg.subset_budget)?;
    let m_l = cfg
        .m_l_override
        .unwrap_or_else(|| labeled_sample_size(cover.len(), cfg.eps, cfg.delta, max_loss));
    let s_l = joint.sample(m_l, stage_seed(seed, STAGE_LABELED));
    let idx = erm_select(&cover, |h| empirical(h, &s_l))?;
    Ok(ReduceOutcome { hypothesis: cover.member(idx).clone(), cover, m_u, m_l, s_u, s_l })
}

/// Agnostic robust reduction: all-subsets cover union, selection by lowest
/// empirical robust risk. Guarantee: robust risk at most OPT + eps with
/// probability 1 - delta, where OPT is the best in-class robust risk.
pub fn robust_reduce(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    joint: &JointDistribution,
    map: &PerturbationMap,
    loss: &Loss,
    cfg: &ReductionConfig,
    seed: u64,
    mode: SubsetMode,
) -> Result<ReduceOutcome> {
    if map.len() != class.space().size() {
        return Err(Error::Input("perturbation map size does not match instance space".into()));
    }
    support_pipeline(
        learner,
        class,
        joint,
        cfg,
        seed,
        mode,
        q_to_f64(&loss.max_value()),
        |h, s_l| {
            if s_l.is_empty() {
                return 0.0;
            }
            let total: f64 = s_l
                .iter()
                .map(|&(x, y)| robust_point_loss_f64(h, x, y, map, loss))
                .sum();
            total / s_l.len() as f64
        },
    )
}

/// Agnostic partial reduction: all-subsets cover union, selection by lowest
/// empirical partial risk (⋆ predictions always count as mistakes).
pub fn partial_reduce(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    joint: &JointDistribution,
    loss: &Loss,
    cfg: &ReductionConfig,
    seed: u64,
    mode: SubsetMode,
) -> Result<ReduceOutcome> {
    if !loss.is_zero_one() {
        return Err(Error::Unsupported("partial reduction is defined for classification loss".into()));
    }
    support_pipeline(learner, class, joint, cfg, seed, mode, 1.0, |h, s_l| {
        empirical_partial_risk_f64(h, s_l)
    })
}
