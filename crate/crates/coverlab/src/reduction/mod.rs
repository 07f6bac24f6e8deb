//! The cover-based reductions.
//!
//! Everything here is built on one subroutine: run a realizable learner over
//! all labelings of an unlabeled sample (optionally over subsets of it) and
//! collect the outputs into a cover, then hand the cover to a finite-class
//! selector — empirical risk minimization for the noise-tolerant paths, the
//! exponential mechanism for the private/stable paths, a fairness filter for
//! the fair path.
//!
//! Randomness discipline: each reduction derives fixed sub-streams from its
//! seed (stage 0 = unlabeled draw, 1 = labeled draw, 2 = mechanism, 3 =
//! stability subsampling, 4+ = learner invocations), so different paths
//! configured to the same sample sizes are couplable draw for draw.

mod agnostic;
mod fair;
mod noise;
mod private;
pub mod sq;
mod support;

pub use agnostic::{agnostic_reduce, doubly_bounded_reduce, pseudometric_reduce};
pub use fair::{fair_reduce, FairOutcome};
pub use noise::malicious_reduce;
pub use private::{
    covshift_reduce, exponential_mechanism, mechanism_distribution, mechanism_log_probs,
    mechanism_scores, private_sample_size, semiprivate_reduce, stable_reduce,
    stable_select_indices, StableInputs, StableOutcome,
};
pub use support::{partial_reduce, robust_reduce};

use crate::error::{Error, Result};
use crate::hypotheses::{Hypothesis, HypothesisClass, STAR};
use crate::learner::RealizableLearner;
use crate::rng::stage_seed;

pub(crate) const STAGE_UNLABELED: u64 = 0;
pub(crate) const STAGE_LABELED: u64 = 1;
pub(crate) const STAGE_MECHANISM: u64 = 2;
pub(crate) const STAGE_STABLE_SUBSET: u64 = 3;
pub(crate) const STAGE_LEARNER: u64 = 4;

/// Which labelings and subset generated a cover member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    /// Positions into the unlabeled sample (sorted) the learner saw.
    pub subset: Vec<usize>,
    /// The labeling fed to the learner, aligned with `subset` positions;
    /// entries may be `STAR` for partial classes.
    pub restriction: Vec<usize>,
}

/// A deduplicated set of learner outputs with provenance, canonically sorted
/// by (index in the generating class, label vector) so that downstream
/// tie-breaking is order-independent.
#[derive(Clone, Debug)]
pub struct Cover {
    members: Vec<Hypothesis>,
    class_indices: Vec<Option<usize>>,
    provenance: Vec<Vec<Provenance>>,
}

impl Cover {
    fn from_runs(runs: Vec<(Hypothesis, Provenance)>, class: &HypothesisClass) -> Cover {
        let mut entries: Vec<(Hypothesis, Option<usize>, Vec<Provenance>)> = Vec::new();
        for (h, prov) in runs {
            match entries.iter_mut().find(|(m, _, _)| m == &h) {
                Some((_, _, provs)) => provs.push(prov),
                None => {
                    let idx = class.index_of(&h);
                    entries.push((h, idx, vec![prov]));
                }
            }
        }
        entries.sort_by(|a, b| {
            let ka = (a.1.unwrap_or(usize::MAX), a.0.raw_labels());
            let kb = (b.1.unwrap_or(usize::MAX), b.0.raw_labels());
            ka.cmp(&kb)
        });
        let mut members = Vec::with_capacity(entries.len());
        let mut class_indices = Vec::with_capacity(entries.len());
        let mut provenance = Vec::with_capacity(entries.len());
        for (h, idx, provs) in entries {
            members.push(h);
            class_indices.push(idx);
            provenance.push(provs);
        }
        Cover { members, class_indices, provenance }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &Hypothesis {
        &self.members[i]
    }

    /// Index of the member in the generating class, when it is a class member
    /// (always, for proper learners).
    pub fn class_index(&self, i: usize) -> Option<usize> {
        self.class_indices[i]
    }

    pub fn provenance(&self, i: usize) -> &[Provenance] {
        &self.provenance[i]
    }

    pub fn contains(&self, h: &Hypothesis) -> bool {
        self.members.iter().any(|m| m == h)
    }

    /// Retains members passing the predicate (canonical order preserved).
    pub fn filtered<F: FnMut(&Hypothesis) -> bool>(&self, mut keep: F) -> Cover {
        let mut members = Vec::new();
        let mut class_indices = Vec::new();
        let mut provenance = Vec::new();
        for i in 0..self.len() {
            if keep(&self.members[i]) {
                members.push(self.members[i].clone());
                class_indices.push(self.class_indices[i]);
                provenance.push(self.provenance[i].clone());
            }
        }
        Cover { members, class_indices, provenance }
    }
}

/// Subset enumeration mode for the subsampling reductions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetMode {
    /// All subsets of every size (robust / partial paths).
    All,
    /// All subsets of exactly this size (malicious path).
    FixedSize(usize),
}

fn run_over_subsets(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    s_u: &[usize],
    subsets: Vec<Vec<usize>>,
    seed: u64,
) -> Result<Cover> {
    let mut runs = Vec::new();
    let mut invocation = 0u64;
    for subset in subsets {
        let sub_sample: Vec<usize> = subset.iter().map(|&p| s_u[p]).collect();
        for (restriction, _) in class.restrict_with_generators(&sub_sample)? {
            let pairs: Vec<(usize, usize)> = sub_sample
                .iter()
                .zip(&restriction)
                .filter(|(_, &y)| y != STAR)
                .map(|(&x, &y)| (x, y))
                .collect();
            let h = learner
                .run(stage_seed(seed, STAGE_LEARNER + invocation), &pairs)
                .map_err(|e| match e {
                    Error::Inconsistent(msg) => Error::Inconsistent(format!(
                        "{msg} (restriction {restriction:?} of subset {subset:?})"
                    )),
                    other => other,
                })?;
            invocation += 1;
            runs.push((h, Provenance { subset: subset.clone(), restriction }));
        }
    }
    Ok(Cover::from_runs(runs, class))
}

/// Runs the learner once per distinct labeling of the unlabeled sample and
/// returns the deduplicated outputs: one draw from the non-uniform cover the
/// learner induces.
pub fn learning_to_cover(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    s_u: &[usize],
    seed: u64,
) -> Result<Cover> {
    let full: Vec<usize> = (0..s_u.len()).collect();
    run_over_subsets(learner, class, s_u, vec![full], seed)
}

/// All subsets of `0..n` in lexicographic order of their sorted index tuples.
fn all_subsets_lex(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(1 << n);
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(prefix) = stack.pop() {
        out.push(prefix.clone());
        let start = prefix.last().map(|&l| l + 1).unwrap_or(0);
        // push in reverse so the stack pops in ascending order
        for next in (start..n).rev() {
            let mut ext = prefix.clone();
            ext.push(next);
            stack.push(ext);
        }
    }
    out
}

/// Union of `learning_to_cover` over the enumerated subsets of the unlabeled
/// sample. The subset count is checked against `budget` before any work.
pub fn subsample_cover(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    s_u: &[usize],
    mode: SubsetMode,
    seed: u64,
    budget: usize,
) -> Result<Cover> {
    let n = s_u.len();
    let subsets: Vec<Vec<usize>> = match mode {
        SubsetMode::All => {
            let count = 1u128 << n.min(127);
            if count > budget as u128 {
                return Err(Error::Resource(format!(
                    "all-subsets enumeration needs 2^{n} = {count} subsets, over budget {budget}"
                )));
            }
            all_subsets_lex(n)
        }
        SubsetMode::FixedSize(k) => {
            if k > n {
                return Err(Error::Input(format!("subset size {k} exceeds sample size {n}")));
            }
            let count = crate::rational::binomial(n, k);
            if count > num_bigint::BigInt::from(budget) {
                return Err(Error::Resource(format!(
                    "fixed-size enumeration needs C({n},{k}) = {count} subsets, over budget {budget}"
                )));
            }
            use itertools::Itertools;
            (0..n).combinations(k).collect()
        }
    };
    run_over_subsets(learner, class, s_u, subsets, seed)
}

/// Parameters shared by every reduction.
#[derive(Clone, Debug)]
pub struct ReductionConfig {
    pub eps: f64,
    pub delta: f64,
    /// Privacy / stability parameter where applicable.
    pub alpha: Option<f64>,
    /// Malicious corruption rate where applicable.
    pub eta: Option<f64>,
    /// Desk-scale cap replacing the declared unlabeled sample size.
    pub m_u_override: Option<usize>,
    /// Desk-scale cap replacing the derived labeled sample size.
    pub m_l_override: Option<usize>,
    /// Budget for subset enumeration.
    pub subset_budget: usize,
}

impl ReductionConfig {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) || eps == 0.0 {
            return Err(Error::Input(format!("eps must be in (0,1), got {eps}")));
        }
        if !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(Error::Input(format!("delta must be in (0,1), got {delta}")));
        }
        Ok(ReductionConfig {
            eps,
            delta,
            alpha: None,
            eta: None,
            m_u_override: None,
            m_l_override: None,
            subset_budget: 1 << 20,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_m_u(mut self, m_u: usize) -> Self {
        self.m_u_override = Some(m_u);
        self
    }

    pub fn with_m_l(mut self, m_l: usize) -> Self {
        self.m_l_override = Some(m_l);
        self
    }

    /// Effective corruption rate for the subset size in the malicious path:
    /// `(3 eta + eps/(1-eps)) / 4`.
    pub fn eta_prime(&self) -> Result<f64> {
        let eta = self
            .eta
            .ok_or_else(|| Error::Precondition("malicious path needs eta".into()))?;
        Ok((3.0 * eta + self.eps / (1.0 - self.eps)) / 4.0)
    }

    /// Margin to the tight tolerance threshold: `eps/(1+eps) - eta`.
    pub fn malicious_margin(&self) -> Result<f64> {
        let eta = self
            .eta
            .ok_or_else(|| Error::Precondition("malicious path needs eta".into()))?;
        Ok(self.eps / (1.0 + self.eps) - eta)
    }
}

/// Labeled ERM sample size `ceil(2 B^2 ln(2 |C| / delta) / eps^2)`; the
/// explicit Hoeffding form with B the largest loss value.
pub fn labeled_sample_size(cover_len: usize, eps: f64, delta: f64, max_loss: f64) -> usize {
    let c = cover_len.max(1) as f64;
    let b = max_loss.max(1.0);
    (2.0 * b * b * (2.0 * c / delta).ln() / (eps * eps)).ceil() as usize
}

/// Argmin over the cover by an empirical score; ties go to the first member
/// in canonical order (lowest class index for proper covers).
pub fn erm_select<F: FnMut(&Hypothesis) -> f64>(cover: &Cover, mut score: F) -> Result<usize> {
    if cover.is_empty() {
        return Err(Error::Input("cannot select from an empty cover".into()));
    }
    let mut best = 0usize;
    let mut best_score = f64::INFINITY;
    for (i, h) in cover.members().iter().enumerate() {
        let s = score(h);
        if s < best_score {
            best = i;
            best_score = s;
        }
    }
    Ok(best)
}

/// What a reduction run produced, kept around for test introspection.
#[derive(Clone, Debug)]
pub struct ReduceOutcome {
    pub hypothesis: Hypothesis,
    pub cover: Cover,
    pub m_u: usize,
    pub m_l: usize,
    pub s_u: Vec<usize>,
    pub s_l: Vec<(usize, usize)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{classification_distance, Distribution};
    use crate::loss::Loss;
    use crate::rational::q_to_f64;
    use crate::rng::trial_seed;

    fn erm_thresholds(n: usize) -> (HypothesisClass, RealizableLearner) {
        let cls = HypothesisClass::thresholds(n).unwrap();
        let learner = RealizableLearner::consistent_erm(&cls, &Loss::zero_one(2)).unwrap();
        (cls, learner)
    }

    #[test]
    fn empty_sample_gives_single_unconditioned_output() {
        let (cls, learner) = erm_thresholds(6);
        let cover = learning_to_cover(&learner, &cls, &[], 0).unwrap();
        assert_eq!(cover.len(), 1);
        assert_eq!(cover.member(0), cls.member(0));
    }

    #[test]
    fn cover_size_bounded_by_growth_function() {
        let (cls, learner) = erm_thresholds(10);
        let d = Distribution::uniform(10).unwrap();
        for t in 0..20 {
            let s_u = d.sample(4, trial_seed(3, t));
            let cover = learning_to_cover(&learner, &cls, &s_u, trial_seed(4, t)).unwrap();
            let bound = cls.growth_function(4, 1 << 20).unwrap();
            assert!(cover.len() <= bound, "cover {} > growth {bound}", cover.len());
        }
    }

    #[test]
    fn cover_contains_agreeing_hypothesis_for_every_member() {
        // run the learner on (S_U, h(S_U)) by hand and check the cover holds
        // an output agreeing with h on S_U
        let (cls, learner) = erm_thresholds(8);
        let d = Distribution::uniform(8).unwrap();
        let s_u = d.sample(5, 99);
        let cover = learning_to_cover(&learner, &cls, &s_u, 7).unwrap();
        for h in cls.members() {
            let agrees = cover
                .members()
                .iter()
                .any(|c| s_u.iter().all(|&x| c.label(x) == h.label(x)));
            assert!(agrees, "no cover member agrees with {h:?} on {s_u:?}");
        }
    }

    #[test]
    fn cover_canonical_order_is_class_order() {
        let (cls, learner) = erm_thresholds(8);
        let s_u = vec![6, 1, 3];
        let cover = learning_to_cover(&learner, &cls, &s_u, 0).unwrap();
        let indices: Vec<usize> = (0..cover.len()).map(|i| cover.class_index(i).unwrap()).collect();
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        assert_eq!(indices, sorted);
    }

    #[test]
    fn provenance_records_generating_restrictions() {
        let (cls, learner) = erm_thresholds(5);
        let s_u = vec![1, 3];
        let cover = learning_to_cover(&learner, &cls, &s_u, 0).unwrap();
        for i in 0..cover.len() {
            for prov in cover.provenance(i) {
                assert_eq!(prov.subset, vec![0, 1]);
                assert_eq!(prov.restriction.len(), 2);
            }
        }
        let total_provs: usize = (0..cover.len()).map(|i| cover.provenance(i).len()).sum();
        assert_eq!(total_provs, 3); // one per distinct restriction
    }

    #[test]
    fn keep_all_equals_learning_to_cover() {
        let (cls, learner) = erm_thresholds(9);
        let d = Distribution::uniform(9).unwrap();
        let s_u = d.sample(6, 11);
        let plain = learning_to_cover(&learner, &cls, &s_u, 5).unwrap();
        let fixed = subsample_cover(&learner, &cls, &s_u, SubsetMode::FixedSize(6), 5, 1 << 16).unwrap();
        assert_eq!(plain.members(), fixed.members());
    }

    #[test]
    fn all_subsets_enumeration_counts() {
        assert_eq!(all_subsets_lex(6).len(), 64);
        // lexicographic on sorted tuples: (), (0), (0,1), ...
        let subs = all_subsets_lex(3);
        assert_eq!(subs[0], Vec::<usize>::new());
        assert_eq!(subs[1], vec![0]);
        assert_eq!(subs[2], vec![0, 1]);
        assert_eq!(subs[3], vec![0, 1, 2]);
        assert_eq!(subs[4], vec![0, 2]);
        assert_eq!(subs[5], vec![1]);
    }

    #[test]
    fn fixed_size_subset_counts() {
        let (cls, learner) = erm_thresholds(8);
        let d = Distribution::uniform(8).unwrap();
        let s_u = d.sample(8, 21);
        // C(8,6) = 28 subset runs before dedup
        let cover = subsample_cover(&learner, &cls, &s_u, SubsetMode::FixedSize(6), 0, 1 << 16).unwrap();
        assert!(!cover.is_empty());
        let err = subsample_cover(&learner, &cls, &s_u, SubsetMode::FixedSize(6), 0, 10).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
        assert!(err.to_string().contains("28"));
    }

    #[test]
    fn nonuniform_coverage_frequency_matches_guarantee() {
        // the non-uniform cover guarantee at (eps, delta) = (0.2, 0.2) on
        // thresholds over [12]: per-member coverage frequency over 300 trials
        // is at least 1 - delta - slack
        let (cls, learner) = erm_thresholds(12);
        let d = Distribution::uniform(12).unwrap();
        let eps = 0.2;
        let delta = 0.2;
        let n = learner.sample_complexity(eps, delta);
        let trials = 300u64;
        let slack = (1e4f64.ln() / (2.0 * trials as f64)).sqrt();
        for target_idx in [0usize, 4, 9, 12] {
            let target = cls.member(target_idx);
            let mut covered = 0u64;
            for t in 0..trials {
                let seed = trial_seed(55, t);
                let s_u = d.sample(n, seed);
                let cover = learning_to_cover(&learner, &cls, &s_u, seed).unwrap();
                let hit = cover.members().iter().any(|c| {
                    q_to_f64(&classification_distance(c, target, &d).unwrap()) <= eps
                });
                if hit {
                    covered += 1;
                }
            }
            let freq = covered as f64 / trials as f64;
            assert!(
                freq >= 1.0 - delta - slack,
                "member {target_idx}: frequency {freq}"
            );
        }
    }

    #[test]
    fn erm_select_breaks_ties_to_canonical_order() {
        let (cls, learner) = erm_thresholds(4);
        let s_u = vec![0, 1, 2, 3];
        let cover = learning_to_cover(&learner, &cls, &s_u, 0).unwrap();
        let idx = erm_select(&cover, |_| 1.0).unwrap();
        assert_eq!(idx, 0);
    }

    #[test]
    fn labeled_sample_size_formula() {
        // 2 * ln(2*10/0.1) / 0.01 = 2 * ln(200) * 100 = 1059.66...
        assert_eq!(labeled_sample_size(10, 0.1, 0.1, 1.0), 1060);
        // B = 2 quadruples the size
        assert_eq!(labeled_sample_size(10, 0.1, 0.1, 2.0), 4239);
    }

    #[test]
    fn config_derived_quantities() {
        let cfg = ReductionConfig::new(0.2, 0.1).unwrap().with_eta(0.1);
        assert!((cfg.eta_prime().unwrap() - 0.1375).abs() < 1e-12);
        let margin = cfg.malicious_margin().unwrap();
        assert!((margin - (0.2 / 1.2 - 0.1)).abs() < 1e-12);
    }
}
