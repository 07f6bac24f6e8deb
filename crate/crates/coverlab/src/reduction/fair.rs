//! Fair reduction: cover the class, keep only members that are fair at the
//! slackened parameters (fairness depends only on the classifier and the
//! marginal, so the filter is exact), then run ERM over the survivors.

use crate::dist::{empirical_risk_f64, JointDistribution};
use crate::error::{Error, Result};
use crate::hypotheses::HypothesisClass;
use crate::learner::RealizableLearner;
use crate::loss::{eta_ell, fairness_violation, FairnessMetric, Loss};
use crate::rational::{q_to_f64, Q};
use crate::rng::stage_seed;

use super::{
    erm_select, labeled_sample_size, learning_to_cover, ReduceOutcome, ReductionConfig,
    STAGE_LABELED, STAGE_LEARNER, STAGE_UNLABELED,
};

#[derive(Clone, Debug)]
pub struct FairOutcome {
    pub outcome: ReduceOutcome,
    /// Indices into the original class of members fair at the slackened
    /// parameters (alpha + eps_alpha, gamma + eps_gamma).
    pub fair_member_indices: Vec<usize>,
    /// Exact violation probability of the returned hypothesis at the
    /// slackened gamma.
    pub output_violation: Q,
}

/// Members of the class that are (alpha + eps_alpha, gamma + eps_gamma)-fair
/// with respect to the metric and marginal (exact filter).
pub fn fair_member_indices(
    class: &HypothesisClass,
    metric: &FairnessMetric,
    marginal: &crate::dist::Distribution,
) -> Result<Vec<usize>> {
    let alpha_slacked = &metric.alpha + &metric.eps_alpha;
    let gamma_slacked = &metric.gamma + &metric.eps_gamma;
    let mut keep = Vec::new();
    for (i, h) in class.members().iter().enumerate() {
        let v = fairness_violation(h, class.label_space(), marginal, metric, &gamma_slacked)?;
        if v <= alpha_slacked {
            keep.push(i);
        }
    }
    Ok(keep)
}

/// Fair agnostic reduction. The base learner is consistent ERM restricted to
/// the fair members, so every cover element passes the fairness filter; the
/// returned hypothesis is re-checked exactly. Guarantee: the output is
/// (alpha + eps_alpha, gamma + eps_gamma)-fair on every run, and its risk is
/// within eps of the best (alpha, gamma)-fair member with probability
/// 1 - delta.
pub fn fair_reduce(
    class: &HypothesisClass,
    metric: &FairnessMetric,
    joint: &JointDistribution,
    loss: &Loss,
    cfg: &ReductionConfig,
    seed: u64,
) -> Result<FairOutcome> {
    if !class.label_space().has_payloads() {
        return Err(Error::Unsupported("fair reduction needs numeric label payloads".into()));
    }
    let marginal = joint.marginal();
    let fair_idx = fair_member_indices(class, metric, marginal)?;
    if fair_idx.is_empty() {
        return Err(Error::Construction(
            "no class member is fair at the slackened parameters".into(),
        ));
    }
    let fair_class = class.subclass(&fair_idx)?;
    let learner = RealizableLearner::consistent_erm(&fair_class, loss)?;

    let eta_l = q_to_f64(&eta_ell(loss)?);
    let m_u = cfg
        .m_u_override
        .unwrap_or_else(|| learner.sample_complexity(eta_l * cfg.eps, cfg.delta / 2.0));
    let s_u: Vec<usize> = joint
        .sample(m_u, stage_seed(seed, STAGE_UNLABELED))
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    let cover = learning_to_cover(&learner, &fair_class, &s_u, stage_seed(seed, STAGE_LEARNER))?;

    // re-apply the fairness filter to the cover; with the fair-restricted
    // base learner this should never drop anything
    let gamma_slacked = &metric.gamma + &metric.eps_gamma;
    let alpha_slacked = &metric.alpha + &metric.eps_alpha;
    let filtered = cover.filtered(|h| {
        fairness_violation(h, class.label_space(), marginal, metric, &gamma_slacked)
            .map(|v| v <= alpha_slacked)
            .unwrap_or(false)
    });
    if filtered.is_empty() {
        return Err(Error::Construction("fairness filter emptied the cover".into()));
    }

    let m_l = cfg
        .m_l_override
        .unwrap_or_else(|| labeled_sample_size(filtered.len(), cfg.eps, cfg.delta, q_to_f64(&loss.max_value())));
    let s_l = joint.sample(m_l, stage_seed(seed, STAGE_LABELED));
    let idx = erm_select(&filtered, |h| empirical_risk_f64(h, &s_l, loss))?;
    let hypothesis = filtered.member(idx).clone();
    let output_violation =
        fairness_violation(&hypothesis, class.label_space(), marginal, metric, &gamma_slacked)?;
    Ok(FairOutcome {
        outcome: ReduceOutcome { hypothesis, cover: filtered, m_u, m_l, s_u, s_l },
        fair_member_indices: fair_idx,
        output_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{opt_risk, risk, Distribution};
    use crate::hypotheses::Hypothesis;
    use crate::rational::{q, q_int, q_zero};
    use crate::reduction::agnostic_reduce;
    use crate::rng::trial_seed;
    use crate::space::{InstanceSpace, LabelSpace};

    /// Steps (sharp 0 -> 1 jumps) mixed with ramps (1/4 increments): the
    /// steps violate the line metric, the ramps do not.
    fn graded_class() -> HypothesisClass {
        let labels = LabelSpace::unit_grid(5).unwrap();
        let n = 6usize;
        let mut members = Vec::new();
        for t in 0..=n {
            members.push(Hypothesis::total(
                (0..n).map(|x| if x >= t { 4 } else { 0 }).collect(),
            ));
        }
        for shift in 0..4usize {
            members.push(Hypothesis::total(
                (0..n).map(|x| x.saturating_sub(shift).min(4)).collect(),
            ));
        }
        HypothesisClass::explicit(InstanceSpace::new(n).unwrap(), labels, members).unwrap()
    }

    fn line_metric() -> FairnessMetric {
        FairnessMetric::line(6, 4, q(1, 10), q(1, 4), q_zero(), q_zero()).unwrap()
    }

    #[test]
    fn filter_keeps_ramps_drops_steps() {
        let cls = graded_class();
        let metric = line_metric();
        let d = Distribution::uniform(6).unwrap();
        let fair = fair_member_indices(&cls, &metric, &d).unwrap();
        // constants (steps at t=0 and t=6) are fair; interior steps are not
        assert!(fair.contains(&0));
        assert!(fair.contains(&6));
        for t in 1..6 {
            assert!(!fair.contains(&t), "step {t} should violate");
        }
        // every ramp is fair
        for r in 7..11 {
            assert!(fair.contains(&r), "ramp {r} should pass");
        }
    }

    #[test]
    fn output_always_fair_and_accurate_on_realizable_instance() {
        let cls = graded_class();
        let metric = line_metric();
        let labels = cls.label_space().clone();
        let loss = Loss::absolute(&labels).unwrap();
        let d = Distribution::uniform(6).unwrap();
        // adversary labels by a fair ramp
        let joint = JointDistribution::realizable(&d, cls.member(8), 5).unwrap();
        let cfg = ReductionConfig::new(0.25, 0.15).unwrap();
        let trials = 100u64;
        let mut ok = 0u64;
        for t in 0..trials {
            let out = fair_reduce(&cls, &metric, &joint, &loss, &cfg, trial_seed(727, t)).unwrap();
            let slacked_alpha = &metric.alpha + &metric.eps_alpha;
            assert!(out.output_violation <= slacked_alpha, "unfair output");
            let r = q_to_f64(&risk(&out.outcome.hypothesis, &joint, &loss).unwrap());
            if r <= cfg.eps {
                ok += 1;
            }
        }
        let slack = (1e4f64.ln() / (2.0 * trials as f64)).sqrt();
        assert!(ok as f64 / trials as f64 >= 1.0 - 0.15 - slack);
    }

    #[test]
    fn unconstrained_metric_matches_agnostic_path() {
        // a huge similarity bound never binds, so the fair path degenerates
        // to the agnostic path member for member
        let cls = graded_class();
        let metric = FairnessMetric::line(6, 1, q_int(1), q_int(2), q_zero(), q_zero()).unwrap();
        let d = Distribution::uniform(6).unwrap();
        assert_eq!(fair_member_indices(&cls, &metric, &d).unwrap().len(), cls.len());
        let labels = cls.label_space().clone();
        let loss = Loss::absolute(&labels).unwrap();
        let joint = JointDistribution::realizable(&d, cls.member(2), 5).unwrap();
        let learner = RealizableLearner::consistent_erm(&cls, &loss).unwrap();
        let cfg = ReductionConfig::new(0.25, 0.1).unwrap().with_m_u(30).with_m_l(200);
        for t in 0..6 {
            let seed = trial_seed(808, t);
            let fair = fair_reduce(&cls, &metric, &joint, &loss, &cfg, seed).unwrap();
            let agn = agnostic_reduce(&learner, &cls, &joint, &loss, &cfg, seed).unwrap();
            assert_eq!(fair.outcome.hypothesis, agn.hypothesis);
        }
    }

    #[test]
    fn accuracy_tracks_fair_opt_with_planted_noise() {
        let cls = graded_class();
        let metric = line_metric();
        let labels = cls.label_space().clone();
        let loss = Loss::absolute(&labels).unwrap();
        let d = Distribution::uniform(6).unwrap();
        // labels from an unfair step member: the best fair member has
        // strictly positive risk (exact OPT over the strictly-fair filter)
        let joint = JointDistribution::realizable(&d, cls.member(3), 5).unwrap();
        let strict_fair: Vec<usize> = {
            let mut keep = Vec::new();
            for (i, h) in cls.members().iter().enumerate() {
                let v = fairness_violation(h, cls.label_space(), &d, &metric, &metric.gamma).unwrap();
                if v <= metric.alpha {
                    keep.push(i);
                }
            }
            keep
        };
        let fair_class = cls.subclass(&strict_fair).unwrap();
        let (fair_opt, _) = opt_risk(&fair_class, &joint, &loss).unwrap();
        assert!(fair_opt > q_zero());

        let cfg = ReductionConfig::new(0.3, 0.15).unwrap();
        let trials = 100u64;
        let mut ok = 0u64;
        for t in 0..trials {
            let out = fair_reduce(&cls, &metric, &joint, &loss, &cfg, trial_seed(929, t)).unwrap();
            let r = q_to_f64(&risk(&out.outcome.hypothesis, &joint, &loss).unwrap());
            if r <= q_to_f64(&fair_opt) + cfg.eps {
                ok += 1;
            }
        }
        let slack = (1e4f64.ln() / (2.0 * trials as f64)).sqrt();
        assert!(ok as f64 / trials as f64 >= 1.0 - 0.15 - slack);
    }
}
