//! Realizable learners and discretization wrappers.
//!
//! A learner is a deterministic map from (seed, labeled sample) to a
//! hypothesis, bundled with its declared sample complexity n(eps, delta);
//! the reductions size their unlabeled draws from that declaration. All
//! shipped learners are proper and break ties to the lowest member index.

use crate::error::{Error, Result};
use crate::hypotheses::{Family, Hypothesis, HypothesisClass};
use crate::loss::{Loss, PerturbationMap};
use crate::rational::{q_display, q_to_f64, Q};
use num_traits::Zero;

/// Deduplicated constraint pairs of a labeled sample; consistency only
/// depends on the distinct (x, y) pairs.
fn distinct_pairs(sample: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = sample.to_vec();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

#[derive(Clone, Debug)]
enum Strategy {
    /// Lowest-index member with zero loss on every sample pair.
    ConsistentErm { class: HypothesisClass, loss: Loss },
    /// One-sample rule over the finite-support-indicator class: any 1-label
    /// in the sample selects the all-ones member, otherwise all-zeros.
    BenedekItai { class: HypothesisClass },
    /// Lowest-index member agreeing with every sample pair; members that are
    /// ⋆ on a sampled point are inconsistent with it.
    PartialConsistentErm { class: HypothesisClass },
    /// Lowest-index member minimizing empirical robust loss (zero on
    /// robustly realizable samples, so this is consistent ERM there; on
    /// other labelings it still returns the minimizer).
    RobustConsistentErm { class: HypothesisClass, map: PerturbationMap, loss: Loss },
}

/// A deterministic realizable learner with a declared sample complexity.
#[derive(Clone, Debug)]
pub struct RealizableLearner {
    name: String,
    proper: bool,
    strategy: Strategy,
}

impl RealizableLearner {
    /// Canonical realizable learner for a finite class: the lowest-index
    /// member consistent (zero loss) with the sample.
    pub fn consistent_erm(class: &HypothesisClass, loss: &Loss) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::Input("consistent ERM needs a non-empty class".into()));
        }
        if loss.size() != class.label_space().size() {
            return Err(Error::Input("loss table size does not match label space".into()));
        }
        Ok(RealizableLearner {
            name: "consistent_erm".into(),
            proper: true,
            strategy: Strategy::ConsistentErm { class: class.clone(), loss: loss.clone() },
        })
    }

    /// The one-sample learner for finite-support indicators over `[n]`.
    pub fn benedek_itai(n: usize) -> Result<Self> {
        let class = HypothesisClass::from_family(Family::FiniteSupportIndicators { n })?;
        Ok(RealizableLearner {
            name: "benedek_itai".into(),
            proper: true,
            strategy: Strategy::BenedekItai { class },
        })
    }

    /// Consistent ERM for partial classes; ⋆ labels in cover labelings are
    /// wildcards and are dropped by the caller before reaching the learner,
    /// while a member that is ⋆ on a sampled point cannot match it.
    pub fn partial_consistent_erm(class: &HypothesisClass) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::Input("partial consistent ERM needs a non-empty class".into()));
        }
        Ok(RealizableLearner {
            name: "partial_consistent_erm".into(),
            proper: true,
            strategy: Strategy::PartialConsistentErm { class: class.clone() },
        })
    }

    /// Realizable robust learner: lowest-index member whose worst-case loss
    /// over each sampled point's neighborhood is zero.
    pub fn robust_consistent_erm(
        class: &HypothesisClass,
        map: &PerturbationMap,
        loss: &Loss,
    ) -> Result<Self> {
        if class.is_empty() {
            return Err(Error::Input("robust consistent ERM needs a non-empty class".into()));
        }
        if map.len() != class.space().size() {
            return Err(Error::Input("perturbation map size does not match instance space".into()));
        }
        Ok(RealizableLearner {
            name: "robust_consistent_erm".into(),
            proper: true,
            strategy: Strategy::RobustConsistentErm {
                class: class.clone(),
                map: map.clone(),
                loss: loss.clone(),
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn proper(&self) -> bool {
        self.proper
    }

    pub fn class(&self) -> &HypothesisClass {
        match &self.strategy {
            Strategy::ConsistentErm { class, .. }
            | Strategy::BenedekItai { class }
            | Strategy::PartialConsistentErm { class }
            | Strategy::RobustConsistentErm { class, .. } => class,
        }
    }

    /// Deterministic learner invocation. The seed is part of the interface
    /// contract (randomized learners would thread it); every shipped learner
    /// ignores it.
    pub fn run(&self, _seed: u64, sample: &[(usize, usize)]) -> Result<Hypothesis> {
        match &self.strategy {
            Strategy::ConsistentErm { class, loss } => {
                let pairs = distinct_pairs(sample);
                for h in class.members() {
                    if pairs.iter().all(|&(x, y)| loss.get(h.label(x).expect("total class"), y).is_zero()) {
                        return Ok(h.clone());
                    }
                }
                Err(Error::Inconsistent(format!(
                    "no member of the {}-member class has zero loss on the sample",
                    class.len()
                )))
            }
            Strategy::BenedekItai { class } => {
                let n = class.space().size();
                let label = if sample.iter().any(|&(_, y)| y == 1) { 1 } else { 0 };
                let target = Hypothesis::constant(n, label);
                let idx = class.index_of(&target).expect("constant members exist");
                Ok(class.member(idx).clone())
            }
            Strategy::PartialConsistentErm { class } => {
                let pairs = distinct_pairs(sample);
                for h in class.members() {
                    if pairs.iter().all(|&(x, y)| h.label(x) == Some(y)) {
                        return Ok(h.clone());
                    }
                }
                Err(Error::Inconsistent(format!(
                    "no member of the {}-member partial class matches the sample",
                    class.len()
                )))
            }
            Strategy::RobustConsistentErm { class, map, loss } => {
                if sample.is_empty() {
                    return Ok(class.member(0).clone());
                }
                let mut best = 0usize;
                let mut best_loss = f64::INFINITY;
                for (i, h) in class.members().iter().enumerate() {
                    let total: f64 = sample
                        .iter()
                        .map(|&(x, y)| {
                            map.neighbors(x)
                                .iter()
                                .map(|&x2| loss.get_f64(h.label(x2).expect("total class"), y))
                                .fold(f64::NEG_INFINITY, f64::max)
                        })
                        .sum();
                    if total < best_loss {
                        best = i;
                        best_loss = total;
                        if best_loss == 0.0 {
                            break;
                        }
                    }
                }
                Ok(class.member(best).clone())
            }
        }
    }

    /// Declared sample complexity n(eps, delta).
    ///
    /// Consistency-based learners declare `ceil(B (ln|H| + ln(1/delta)) / eps)`
    /// where B is the largest loss value (B = 1 for classification): a member
    /// with risk above eps survives a draw with probability at most
    /// 1 - eps/B. The one-sample learner declares 1.
    pub fn sample_complexity(&self, eps: f64, delta: f64) -> usize {
        assert!(eps > 0.0 && eps < 1.0_f64.max(eps + 1.0), "eps must be positive");
        assert!(delta > 0.0 && delta < 1.0, "delta must be in (0,1)");
        match &self.strategy {
            Strategy::BenedekItai { .. } => 1,
            Strategy::ConsistentErm { class, loss } => {
                let b = q_to_f64(&loss.max_value()).max(1.0);
                complexity(class.len(), b, eps, delta)
            }
            Strategy::PartialConsistentErm { class } => complexity(class.len(), 1.0, eps, delta),
            Strategy::RobustConsistentErm { class, loss, .. } => {
                let b = q_to_f64(&loss.max_value()).max(1.0);
                complexity(class.len(), b, eps, delta)
            }
        }
    }

    /// Sample complexity floored at `ceil(ln(1/delta))`; the subsampling
    /// reductions assume n(eps, delta) grows at least logarithmically in
    /// 1/delta and apply this floor when sizing their draws.
    pub fn floored_complexity(&self, eps: f64, delta: f64) -> usize {
        let floor = (1.0 / delta).ln().ceil() as usize;
        self.sample_complexity(eps, delta).max(floor.max(1))
    }
}

fn complexity(class_size: usize, b: f64, eps: f64, delta: f64) -> usize {
    (((class_size as f64).ln() + (1.0 / delta).ln()) * b / eps).ceil() as usize
}

/// A realizable learner over a discretized class, with the discretization
/// record: label rounding, both point-wise witness maps (verified
/// exhaustively at construction), and the learnability constant c1.
#[derive(Clone, Debug)]
pub struct DiscreteLearner {
    learner: RealizableLearner,
    original: HypothesisClass,
    h_eps: HypothesisClass,
    rounding: Vec<usize>,
    cover_witness: Vec<usize>,
    useful_witness: Vec<usize>,
    pub c1: f64,
    pub eps: Q,
}

impl DiscreteLearner {
    pub fn learner(&self) -> &RealizableLearner {
        &self.learner
    }

    pub fn discretized_class(&self) -> &HypothesisClass {
        &self.h_eps
    }

    pub fn original_class(&self) -> &HypothesisClass {
        &self.original
    }

    pub fn rounding(&self) -> &[usize] {
        &self.rounding
    }

    pub fn cover_witness(&self) -> &[usize] {
        &self.cover_witness
    }

    pub fn useful_witness(&self) -> &[usize] {
        &self.useful_witness
    }
}

/// Grid-rounds a class to an eps-discretization and wraps a consistent ERM
/// learner around it.
///
/// Labels are clustered greedily in payload order (index order when the
/// label space has no payloads): a label joins the first representative
/// within loss eps, otherwise becomes a new representative. Both witness
/// maps are then re-verified point by point.
pub fn discretize(class: &HypothesisClass, loss: &Loss, eps: &Q) -> Result<DiscreteLearner> {
    if eps < &Q::zero() {
        return Err(Error::Input("discretization scale must be non-negative".into()));
    }
    let labels = class.label_space();
    let label_order: Vec<usize> = match labels.payloads() {
        Some(payloads) => {
            let mut order: Vec<usize> = (0..labels.size()).collect();
            order.sort_by(|&a, &b| payloads[a].cmp(&payloads[b]));
            order
        }
        None => (0..labels.size()).collect(),
    };

    let mut rounding = vec![usize::MAX; labels.size()];
    let mut reps: Vec<usize> = Vec::new();
    for &y in &label_order {
        match reps.iter().find(|&&r| loss.get(r, y) <= eps) {
            Some(&r) => rounding[y] = r,
            None => {
                reps.push(y);
                rounding[y] = y;
            }
        }
    }
    // witness for the construction contract: every label must sit within eps
    // of its representative
    for y in 0..labels.size() {
        let r = rounding[y];
        if loss.get(r, y) > eps {
            return Err(Error::Construction(format!(
                "label {y} is not covered by representative {r}: loss {} > {}",
                q_display(loss.get(r, y)),
                q_display(eps)
            )));
        }
    }

    let rounded: Vec<Hypothesis> = class
        .members()
        .iter()
        .map(|h| {
            Hypothesis::total(
                (0..h.len())
                    .map(|x| rounding[h.label(x).expect("total class")])
                    .collect(),
            )
        })
        .collect();
    let h_eps = HypothesisClass::explicit(*class.space(), labels.clone(), rounded.clone())?;

    let cover_witness: Vec<usize> = rounded
        .iter()
        .map(|h| h_eps.index_of(h).expect("rounded member present"))
        .collect();
    let mut useful_witness = vec![usize::MAX; h_eps.len()];
    for (i, &j) in cover_witness.iter().enumerate() {
        if useful_witness[j] == usize::MAX {
            useful_witness[j] = i;
        }
    }

    // exhaustive point-wise verification of both witness maps
    for (i, h) in class.members().iter().enumerate() {
        let hp = h_eps.member(cover_witness[i]);
        for x in 0..h.len() {
            let l = loss.get(hp.label(x).expect("total"), h.label(x).expect("total"));
            if l > eps {
                return Err(Error::Construction(format!(
                    "point-wise cover fails for member {i} at point {x}: loss {}",
                    q_display(l)
                )));
            }
        }
    }
    for (j, hp) in h_eps.members().iter().enumerate() {
        let h = class.member(useful_witness[j]);
        for x in 0..hp.len() {
            let l = loss.get(hp.label(x).expect("total"), h.label(x).expect("total"));
            if l > eps {
                return Err(Error::Construction(format!(
                    "usefulness fails for discretized member {j} at point {x}: loss {}",
                    q_display(l)
                )));
            }
        }
    }

    Ok(DiscreteLearner {
        learner: RealizableLearner::consistent_erm(&h_eps, loss)?,
        original: class.clone(),
        h_eps,
        rounding,
        cover_witness,
        useful_witness,
        c1: 1.0,
        eps: eps.clone(),
    })
}
