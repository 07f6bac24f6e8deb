//! Cover taxonomy: exact eps-covers, non-uniform and fractional cover
//! generators, conversions between them, the realizable-to-uniform
//! construction, and the separation experiment with its exact
//! coupon-collector and covering-count oracles.

use std::sync::Arc;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::Rng;

use crate::dist::{expected_loss_distance, Distribution};
use crate::error::{Error, Result};
use crate::hypotheses::{Family, Hypothesis, HypothesisClass};
use crate::learner::RealizableLearner;
use crate::loss::Loss;
use crate::rational::{binomial, q, q_one, q_pow, q_zero, Q};
use crate::reduction::learning_to_cover;
use crate::rng::{rng_from, stage_seed, trial_seed};

/// A seeded generator of covers (sets of labelings) with a declared size
/// bound; draws with distinct derived seeds are independent.
#[derive(Clone)]
pub struct CoverDistribution {
    gen: Arc<dyn Fn(u64) -> Result<Vec<Hypothesis>> + Send + Sync>,
    size_bound: usize,
}

impl CoverDistribution {
    pub fn new<F>(size_bound: usize, gen: F) -> Self
    where
        F: Fn(u64) -> Result<Vec<Hypothesis>> + Send + Sync + 'static,
    {
        CoverDistribution { gen: Arc::new(gen), size_bound }
    }

    pub fn draw(&self, seed: u64) -> Result<Vec<Hypothesis>> {
        (self.gen)(seed)
    }

    pub fn size_bound(&self) -> usize {
        self.size_bound
    }
}

/// A seeded generator of single labelings with target parameters (eps, p).
#[derive(Clone)]
pub struct FractionalCover {
    gen: Arc<dyn Fn(u64) -> Result<Hypothesis> + Send + Sync>,
}

impl FractionalCover {
    pub fn new<F>(gen: F) -> Self
    where
        F: Fn(u64) -> Result<Hypothesis> + Send + Sync + 'static,
    {
        FractionalCover { gen: Arc::new(gen) }
    }

    pub fn draw(&self, seed: u64) -> Result<Hypothesis> {
        (self.gen)(seed)
    }
}

/// Exact eps-cover check: every class member must have a cover element
/// within expected loss eps. Returns the first uncovered member on failure.
pub fn is_eps_cover(
    cover: &[Hypothesis],
    class: &HypothesisClass,
    d: &Distribution,
    eps: &Q,
    loss: &Loss,
) -> Result<(bool, Option<usize>)> {
    for (i, h) in class.members().iter().enumerate() {
        let mut covered = false;
        for c in cover {
            if expected_loss_distance(c, h, d, loss)? <= *eps {
                covered = true;
                break;
            }
        }
        if !covered {
            return Ok((false, Some(i)));
        }
    }
    Ok((true, None))
}

/// Monte Carlo estimate of per-member and uniform coverage frequencies of a
/// cover generator.
#[derive(Clone, Debug)]
pub struct NonUniformEstimate {
    pub per_member: Vec<f64>,
    pub uniform: f64,
    pub trials: u64,
    pub max_draw_size: usize,
}

pub fn estimate_nonuniform(
    gen: &CoverDistribution,
    class: &HypothesisClass,
    d: &Distribution,
    eps: &Q,
    loss: &Loss,
    trials: u64,
    seed: u64,
) -> Result<NonUniformEstimate> {
    if trials == 0 {
        return Err(Error::Input("estimation needs at least one trial".into()));
    }
    let mut member_hits = vec![0u64; class.len()];
    let mut uniform_hits = 0u64;
    let mut max_draw_size = 0usize;
    for t in 0..trials {
        let cover = gen.draw(trial_seed(seed, t))?;
        max_draw_size = max_draw_size.max(cover.len());
        let mut all = true;
        for (i, h) in class.members().iter().enumerate() {
            let mut covered = false;
            for c in &cover {
                if expected_loss_distance(c, h, d, loss)? <= *eps {
                    covered = true;
                    break;
                }
            }
            if covered {
                member_hits[i] += 1;
            } else {
                all = false;
            }
        }
        if all {
            uniform_hits += 1;
        }
    }
    let per_member: Vec<f64> = member_hits.iter().map(|&h| h as f64 / trials as f64).collect();
    let uniform = uniform_hits as f64 / trials as f64;
    // definitional dominance: the uniform event implies every per-member event
    let min_member = per_member.iter().cloned().fold(f64::INFINITY, f64::min);
    debug_assert!(uniform <= min_member + 1e-12);
    Ok(NonUniformEstimate { per_member, uniform, trials, max_draw_size })
}

/// Number of fractional draws that boost per-member coverage p to
/// confidence 1 - delta: `ceil(log_{1/(1-p)} (1/delta))`.
pub fn frac_draw_count(p: f64, delta: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::Input(format!("fractional coverage must be in (0,1), got {p}")));
    }
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::Input(format!("delta must be in (0,1), got {delta}")));
    }
    Ok(((1.0 / delta).ln() / (1.0 / (1.0 - p)).ln()).ceil() as usize)
}

/// Collects independent fractional draws into a set: a fractional (eps, p)
/// cover becomes a non-uniform (eps, delta) cover.
pub fn frac_to_nonuniform(frac: &FractionalCover, p: f64, delta: f64) -> Result<CoverDistribution> {
    let m = frac_draw_count(p, delta)?;
    let frac = frac.clone();
    Ok(CoverDistribution::new(m, move |seed| {
        let mut out: Vec<Hypothesis> = Vec::with_capacity(m);
        for i in 0..m {
            let h = frac.draw(stage_seed(seed, i as u64))?;
            if !out.contains(&h) {
                out.push(h);
            }
        }
        Ok(out)
    }))
}

/// A uniformly random member of a non-uniform (eps, 1/2) cover draw is a
/// fractional (eps, 1/(2k)) cover, k the generator's size bound. An empty
/// draw is retried once with a derived seed.
pub fn nonuniform_to_frac(gen: &CoverDistribution) -> (FractionalCover, f64) {
    let p = 1.0 / (2.0 * gen.size_bound().max(1) as f64);
    let gen = gen.clone();
    let frac = FractionalCover::new(move |seed| {
        let mut cover = gen.draw(stage_seed(seed, 0))?;
        if cover.is_empty() {
            cover = gen.draw(stage_seed(seed, 1))?;
        }
        if cover.is_empty() {
            return Err(Error::Input("cover generator produced two empty draws".into()));
        }
        let mut rng = rng_from(stage_seed(seed, 2));
        let idx = rng.random_range(0..cover.len());
        Ok(cover[idx].clone())
    });
    (frac, p)
}

/// Greedy 2eps-cover built from the class members (repeatedly add the member
/// covering the most uncovered hypotheses). A verified fractional (eps, p)
/// cover promises a 2eps-cover of size `ceil(1/p) + 1`; exceeding that bound
/// is reported as a property violation.
pub fn cover_from_fractional(
    p: f64,
    eps: &Q,
    class: &HypothesisClass,
    d: &Distribution,
    loss: &Loss,
) -> Result<Vec<Hypothesis>> {
    if p <= 0.0 || p > 1.0 {
        return Err(Error::Input(format!("fractional coverage must be in (0,1], got {p}")));
    }
    let two_eps = q(2, 1) * eps;
    let n = class.len();
    // pairwise coverage matrix
    let mut covers: Vec<Vec<bool>> = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            covers[i][j] =
                expected_loss_distance(class.member(i), class.member(j), d, loss)? <= two_eps;
        }
    }
    let mut uncovered: Vec<bool> = vec![true; n];
    let mut remaining = n;
    let mut chosen = Vec::new();
    while remaining > 0 {
        let mut best = 0usize;
        let mut best_count = 0usize;
        for i in 0..n {
            let count = (0..n).filter(|&j| uncovered[j] && covers[i][j]).count();
            if count > best_count {
                best = i;
                best_count = count;
            }
        }
        if best_count == 0 {
            return Err(Error::Verification("greedy cover cannot make progress".into()));
        }
        chosen.push(class.member(best).clone());
        for j in 0..n {
            if covers[best][j] {
                if uncovered[j] {
                    remaining -= 1;
                }
                uncovered[j] = false;
            }
        }
    }
    let bound = (1.0 / p).ceil() as usize + 1;
    if chosen.len() > bound {
        return Err(Error::Verification(format!(
            "greedy 2eps-cover has {} members, above the fractional bound ceil(1/p)+1 = {bound}",
            chosen.len()
        )));
    }
    Ok(chosen)
}

/// Exhaustive maximum 2eps-packing size (largest pairwise-separated subset);
/// the cover/packing duality oracle. Exponential in |H|; capped by `budget`
/// on the class size.
pub fn max_packing(
    class: &HypothesisClass,
    d: &Distribution,
    two_eps: &Q,
    loss: &Loss,
    budget: usize,
) -> Result<usize> {
    let n = class.len();
    if n > budget.min(22) {
        return Err(Error::Resource(format!(
            "exhaustive packing over 2^{n} subsets exceeds budget (class size cap {})",
            budget.min(22)
        )));
    }
    let mut separated = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            separated[i][j] =
                expected_loss_distance(class.member(i), class.member(j), d, loss)? > *two_eps;
        }
    }
    let mut best = 0usize;
    for mask in 0u64..(1u64 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| (mask >> i) & 1 == 1).collect();
        let ok = members
            .iter()
            .tuple_combinations()
            .all(|(&i, &j)| separated[i][j]);
        if ok {
            best = size;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct UniformCoverReport {
    pub sample_size: usize,
    pub growth_bound: usize,
    pub delta_prime: f64,
}

/// Uniform cover from a realizable learner: size the unlabeled draw at
/// `n(eps/2, delta / (2 growth(n(eps/2, 1/2))))` and return the cover
/// generator plus the sizing report.
pub fn realizable_to_uniform(
    learner: &RealizableLearner,
    class: &HypothesisClass,
    d: &Distribution,
    eps: f64,
    delta: f64,
) -> Result<(CoverDistribution, UniformCoverReport)> {
    let probe = learner.sample_complexity(eps / 2.0, 0.5);
    let growth = class.growth_function(probe, 1 << 22)?;
    let delta_prime = delta / (2.0 * growth as f64);
    let sample_size = learner.sample_complexity(eps / 2.0, delta_prime);
    let report = UniformCoverReport { sample_size, growth_bound: growth, delta_prime };
    let learner = learner.clone();
    let class = class.clone();
    let d = d.clone();
    let bound = class.growth_function(sample_size, 1 << 22)?;
    let gen = CoverDistribution::new(bound, move |seed| {
        let s_u = d.sample(sample_size, stage_seed(seed, 0));
        let cover = learning_to_cover(&learner, &class, &s_u, stage_seed(seed, 1))?;
        Ok(cover.members().to_vec())
    });
    Ok((gen, report))
}

/// Exact probability that `m` uniform draws from `k` coupons miss at least
/// one coupon (inclusion-exclusion).
pub fn coupon_collector_miss_probability(k: usize, m: usize) -> Q {
    let mut acc = q_zero();
    for i in 1..=k {
        let term = Q::from_integer(binomial(k, i))
            * q_pow(&Q::new(((k - i) as i64).into(), (k as i64).into()), m as u32);
        if i % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

#[derive(Clone, Debug)]
pub struct SeparationReport {
    pub n: usize,
    pub k: usize,
    pub eps: Q,
    pub delta: f64,
    /// Sample size `ceil(k ln k)` for the coupon-collector lower bound.
    pub coupon_sample: usize,
    /// Exact inclusion-exclusion miss probability at that sample size.
    pub coupon_miss: Q,
    /// Whether the miss probability is at least 1/2.
    pub coupon_ok: bool,
    /// Monte Carlo cross-check of the exact miss probability.
    pub coupon_mc: f64,
    /// Sample size `ceil(k ln(1/delta))` for the non-uniform construction.
    pub nonuniform_sample: usize,
    pub per_member_freqs: Vec<f64>,
    pub min_member_freq: f64,
    /// Largest construction drawn (never exceeds k + 1).
    pub max_construction_size: usize,
    pub trials: u64,
}

/// The separation class over `[n]`: singleton indicators plus the all-zeros
/// function.
pub fn separation_class(n: usize) -> Result<HypothesisClass> {
    HypothesisClass::from_family(Family::KSetIndicators { n, k: 1, with_empty: true })
}

/// Separation experiment: (i) the exact coupon-collector miss probability at
/// sample size `ceil(k ln k)` (a uniform cover of the k-set family must
/// collect every support point, so missing one with probability 1/2 defeats
/// it); (ii) Monte Carlo verification that the singleton construction
/// `{h_i : i in S} + {h_0}` on `ceil(k ln(1/delta))` samples is a
/// non-uniform (eps, delta) cover.
pub fn separation_experiment(
    n: usize,
    k: usize,
    eps: &Q,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<SeparationReport> {
    if n <= k {
        return Err(Error::Input(format!("need n > k, got n = {n}, k = {k}")));
    }
    if k < 2 {
        return Err(Error::Input("separation needs k >= 2".into()));
    }
    let derived_k = (q_one() / (q(2, 1) * eps)).floor().to_integer().to_usize().unwrap_or(0);
    if derived_k != k {
        return Err(Error::Input(format!(
            "k must equal floor(1/(2 eps)); eps gives {derived_k}, caller passed {k}"
        )));
    }

    let coupon_sample = (k as f64 * (k as f64).ln()).ceil() as usize;
    let coupon_miss = coupon_collector_miss_probability(k, coupon_sample);
    let coupon_ok = coupon_miss >= q(1, 2);

    // Monte Carlo cross-check of the exact oracle
    let mut misses = 0u64;
    let mc_trials = trials.max(1);
    for t in 0..mc_trials {
        let mut rng = rng_from(trial_seed(stage_seed(seed, 100), t));
        let mut seen = vec![false; k];
        for _ in 0..coupon_sample {
            seen[rng.random_range(0..k)] = true;
        }
        if seen.iter().any(|&s| !s) {
            misses += 1;
        }
    }
    let coupon_mc = misses as f64 / mc_trials as f64;

    // non-uniform construction under unif(T), T = {0..k-1}
    let class = separation_class(n)?;
    let loss = Loss::zero_one(2);
    let support: Vec<usize> = (0..k).collect();
    let d = Distribution::uniform_on(n, &support)?;
    let nonuniform_sample = (k as f64 * (1.0 / delta).ln()).ceil() as usize;
    let zero = Hypothesis::constant(n, 0);
    let gen = {
        let d = d.clone();
        let zero = zero.clone();
        CoverDistribution::new(k + 1, move |s| {
            let draw = d.sample(nonuniform_sample, s);
            let mut set: Vec<Hypothesis> = Vec::new();
            for x in draw {
                let mut labels = vec![0usize; n];
                labels[x] = 1;
                let h = Hypothesis::total(labels);
                if !set.contains(&h) {
                    set.push(h);
                }
            }
            set.push(zero.clone());
            Ok(set)
        })
    };
    let est = estimate_nonuniform(&gen, &class, &d, eps, &loss, trials, stage_seed(seed, 200))?;
    if est.max_draw_size > k + 1 {
        return Err(Error::Verification(format!(
            "construction drew {} members, above k + 1 = {}",
            est.max_draw_size,
            k + 1
        )));
    }
    let min_member_freq = est.per_member.iter().cloned().fold(f64::INFINITY, f64::min);

    Ok(SeparationReport {
        n,
        k,
        eps: eps.clone(),
        delta,
        coupon_sample,
        coupon_miss,
        coupon_ok,
        coupon_mc,
        nonuniform_sample,
        per_member_freqs: est.per_member,
        min_member_freq,
        max_construction_size: est.max_draw_size,
        trials,
    })
}

#[derive(Clone, Debug)]
pub struct ClaimCoveringReport {
    pub covered_count: usize,
    pub bound: BigInt,
    pub total_distributions: BigInt,
    pub ok: bool,
}

/// Exhaustively counts the k-set distributions under which a fixed m-member
/// proper set is an eps-cover of the separation class; the count can never
/// exceed C(m, k).
pub fn claim_covering_check(
    n: usize,
    k: usize,
    member_indices: &[usize],
    eps: &Q,
    budget: usize,
) -> Result<ClaimCoveringReport> {
    let class = separation_class(n)?;
    let loss = Loss::zero_one(2);
    let set: Vec<Hypothesis> = member_indices
        .iter()
        .map(|&i| {
            class.members().get(i).cloned().ok_or_else(|| {
                Error::Input(format!("member index {i} out of range for the separation class"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = binomial(n, k);
    if total > BigInt::from(budget) {
        return Err(Error::Resource(format!(
            "C({n},{k}) = {total} distributions exceed budget {budget}"
        )));
    }
    let mut covered = 0usize;
    for t in (0..n).combinations(k) {
        let d = Distribution::uniform_on(n, &t)?;
        let (ok, _) = is_eps_cover(&set, &class, &d, eps, &loss)?;
        if ok {
            covered += 1;
        }
    }
    let bound = binomial(set.len(), k);
    Ok(ClaimCoveringReport {
        covered_count: covered,
        bound: bound.clone(),
        total_distributions: total,
        ok: BigInt::from(covered) <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q_int, q_to_f64};

    fn thresholds_setup(n: usize) -> (HypothesisClass, Distribution, Loss) {
        (
            HypothesisClass::thresholds(n).unwrap(),
            Distribution::uniform(n).unwrap(),
            Loss::zero_one(2),
        )
    }

    #[test]
    fn cover_containing_class_is_cover() {
        let (cls, d, loss) = thresholds_setup(6);
        let all: Vec<Hypothesis> = cls.members().to_vec();
        let (ok, w) = is_eps_cover(&all, &cls, &d, &q_zero(), &loss).unwrap();
        assert!(ok);
        assert!(w.is_none());
        let (ok, w) = is_eps_cover(&[], &cls, &d, &q(1, 2), &loss).unwrap();
        assert!(!ok);
        assert_eq!(w, Some(0));
    }

    #[test]
    fn every_other_threshold_is_tenth_cover() {
        // thresholds over [10]: keeping every other member leaves gaps of
        // mass exactly 0.1
        let (cls, d, loss) = thresholds_setup(10);
        let every_other: Vec<Hypothesis> =
            (0..=10).step_by(2).map(|t| cls.member(t).clone()).collect();
        let (ok, _) = is_eps_cover(&every_other, &cls, &d, &q(1, 10), &loss).unwrap();
        assert!(ok);
        let (ok, witness) = is_eps_cover(&every_other, &cls, &d, &q(1, 20), &loss).unwrap();
        assert!(!ok);
        assert!(witness.is_some());
    }

    #[test]
    fn estimator_degenerate_generators() {
        let (cls, d, loss) = thresholds_setup(5);
        let all = cls.members().to_vec();
        let full = CoverDistribution::new(cls.len(), move |_| Ok(all.clone()));
        let est = estimate_nonuniform(&full, &cls, &d, &q_zero(), &loss, 50, 1).unwrap();
        assert!(est.per_member.iter().all(|&f| f == 1.0));
        assert_eq!(est.uniform, 1.0);

        let empty = CoverDistribution::new(0, |_| Ok(vec![]));
        let est = estimate_nonuniform(&empty, &cls, &d, &q(1, 4), &loss, 50, 1).unwrap();
        assert!(est.per_member.iter().all(|&f| f == 0.0));
        assert_eq!(est.uniform, 0.0);
    }

    #[test]
    fn learning_to_cover_generator_meets_guarantee() {
        let (cls, d, loss) = thresholds_setup(12);
        let learner = RealizableLearner::consistent_erm(&cls, &loss).unwrap();
        let eps = 0.1;
        let delta = 0.1;
        let m = learner.sample_complexity(eps, delta);
        let gen = {
            let cls2 = cls.clone();
            let d2 = d.clone();
            let learner = learner.clone();
            CoverDistribution::new(
                cls.growth_function(m, 1 << 20).unwrap(),
                move |seed| {
                    let s_u = d2.sample(m, stage_seed(seed, 0));
                    Ok(learning_to_cover(&learner, &cls2, &s_u, stage_seed(seed, 1))?
                        .members()
                        .to_vec())
                },
            )
        };
        let trials = 400u64;
        let est = estimate_nonuniform(&gen, &cls, &d, &q(1, 10), &loss, trials, 7).unwrap();
        let slack = (1e4f64.ln() / (2.0 * trials as f64)).sqrt();
        for (i, f) in est.per_member.iter().enumerate() {
            assert!(*f >= 1.0 - delta - slack, "member {i}: freq {f}");
        }
        assert!(est.uniform <= est.per_member.iter().cloned().fold(f64::INFINITY, f64::min) + 1e-12);
    }

    #[test]
    fn frac_draw_counts() {
        assert_eq!(frac_draw_count(0.5, 0.125).unwrap(), 3);
        assert_eq!(frac_draw_count(0.5, 0.5).unwrap(), 1);
        assert!(frac_draw_count(0.0, 0.5).is_err());
        // monotone: nonincreasing in p, nondecreasing in 1/delta
        assert!(frac_draw_count(0.6, 0.125).unwrap() <= frac_draw_count(0.3, 0.125).unwrap());
        assert!(frac_draw_count(0.5, 0.01).unwrap() >= frac_draw_count(0.5, 0.125).unwrap());
    }

    #[test]
    fn frac_to_nonuniform_boosts_coverage() {
        // fractional generator: a uniformly random threshold; every member is
        // eps-covered by a draw with probability >= p
        let (cls, d, loss) = thresholds_setup(8);
        let members = cls.members().to_vec();
        let frac = FractionalCover::new(move |seed| {
            let mut rng = rng_from(seed);
            Ok(members[rng.random_range(0..members.len())].clone())
        });
        // coverage at eps = 1/8: a random threshold within one step covers;
        // p >= 3/9 for interior members, 2/9 at the ends
        let p = 2.0 / 9.0;
        let delta = 0.1;
        let gen = frac_to_nonuniform(&frac, p, delta).unwrap();
        let trials = 400u64;
        let est = estimate_nonuniform(&gen, &cls, &d, &q(1, 8), &loss, trials, 3).unwrap();
        let slack = (1e4f64.ln() / (2.0 * trials as f64)).sqrt();
        for (i, f) in est.per_member.iter().enumerate() {
            assert!(*f >= 1.0 - delta - slack, "member {i}: freq {f}");
        }
    }

    #[test]
    fn nonuniform_to_frac_size_one_target() {
        let (cls, _, _) = thresholds_setup(4);
        let single = cls.member(2).clone();
        let gen = CoverDistribution::new(1, move |_| Ok(vec![single.clone()]));
        let (_, p) = nonuniform_to_frac(&gen);
        assert_eq!(p, 0.5);
    }

    #[test]
    fn singleton_class_uniform_cover_always_holds() {
        let (cls, d, loss) = thresholds_setup(6);
        let singleton = cls.subclass(&[3]).unwrap();
        let learner = RealizableLearner::consistent_erm(&singleton, &loss).unwrap();
        let (gen, _) = realizable_to_uniform(&learner, &singleton, &d, 0.2, 0.2).unwrap();
        for t in 0..20 {
            let cover = gen.draw(trial_seed(5, t)).unwrap();
            let (ok, _) = is_eps_cover(&cover, &singleton, &d, &q_zero(), &loss).unwrap();
            assert!(ok);
        }
    }

    #[test]
    fn nonuniform_to_frac_hit_rate() {
        // a fixed 4-member cover containing h: per-h hit rate ~ 1/4 >= 1/8
        let (cls, _, _) = thresholds_setup(8);
        let fixed: Vec<Hypothesis> = vec![
            cls.member(0).clone(),
            cls.member(3).clone(),
            cls.member(5).clone(),
            cls.member(8).clone(),
        ];
        let gen = CoverDistribution::new(4, move |_| Ok(fixed.clone()));
        let (frac, p) = nonuniform_to_frac(&gen);
        assert_eq!(p, 0.125);
        let trials = 2000u64;
        let mut hits = 0u64;
        for t in 0..trials {
            if frac.draw(trial_seed(11, t)).unwrap() == *cls.member(3) {
                hits += 1;
            }
        }
        let freq = hits as f64 / trials as f64;
        let slack = (1e4f64.ln() / (2.0 * trials as f64)).sqrt();
        assert!(freq >= p - slack, "hit rate {freq}");
    }

    #[test]
    fn round_trip_reachieves_coverage() {
        // non-uniform -> fractional -> non-uniform keeps per-member coverage
        let (cls, d, loss) = thresholds_setup(6);
        let learner = RealizableLearner::consistent_erm(&cls, &loss).unwrap();
        let m = learner.sample_complexity(0.25, 0.5);
        let bound = cls.growth_function(m, 1 << 20).unwrap();
        let base = {
            let cls2 = cls.clone();
            let d2 = d.clone();
            CoverDistribution::new(bound, move |seed| {
                let s_u = d2.sample(m, stage_seed(seed, 0));
                Ok(learning_to_cover(&learner, &cls2, &s_u, stage_seed(seed, 1))?
                    .members()
                    .to_vec())
            })
        };
        let (frac, p) = nonuniform_to_frac(&base);
        let delta = 0.2;
        let boosted = frac_to_nonuniform(&frac, p, delta).unwrap();
        let trials = 300u64;
        let est = estimate_nonuniform(&boosted, &cls, &d, &q(1, 4), &loss, trials, 17).unwrap();
        let slack = (1e4f64.ln() / (2.0 * trials as f64)).sqrt();
        for (i, f) in est.per_member.iter().enumerate() {
            assert!(*f >= 1.0 - delta - slack, "member {i}: freq {f}");
        }
    }

    #[test]
    fn greedy_cover_respects_fractional_bound() {
        let (cls, d, loss) = thresholds_setup(10);
        // the uniformly-random-member fractional cover at eps = 1/10 covers
        // each member with p >= 2/11 (std. neighbors within one step)
        let p = 2.0 / 11.0;
        let cover = cover_from_fractional(p, &q(1, 10), &cls, &d, &loss).unwrap();
        let bound = (1.0 / p).ceil() as usize + 1;
        assert!(cover.len() <= bound, "{} > {bound}", cover.len());
        let (ok, _) = is_eps_cover(&cover, &cls, &d, &q(1, 5), &loss).unwrap();
        assert!(ok);

        // p = 1 (every draw covers everything) forces a single member:
        // a class where one member is within 2eps of all
        let singleton = cls.subclass(&[5]).unwrap();
        let cover = cover_from_fractional(1.0, &q(1, 10), &singleton, &d, &loss).unwrap();
        assert_eq!(cover.len(), 1);
    }

    #[test]
    fn packing_duality_on_thresholds() {
        let (cls, d, loss) = thresholds_setup(10);
        // max 2eps-packing at eps = 1/10: thresholds more than 0.2 apart,
        // exhaustive over all subsets
        let packing = max_packing(&cls, &d, &q(1, 5), &loss, 1 << 22).unwrap();
        // greedy cover from a verified fractional (eps, p) cover stays within
        // duality range of the packing
        let p = 2.0 / 11.0;
        let cover = cover_from_fractional(p, &q(1, 10), &cls, &d, &loss).unwrap();
        assert!(packing <= (1.0 / p).ceil() as usize);
        assert!(cover.len() <= (1.0 / p).ceil() as usize + 1);
    }

    #[test]
    fn k_set_indicator_cover_bound_holds() {
        let cls = HypothesisClass::from_family(Family::KSetIndicators { n: 8, k: 2, with_empty: true })
            .unwrap();
        let d = Distribution::uniform(8).unwrap();
        let loss = Loss::zero_one(2);
        // every pair indicator is within 2eps = 1/2 of the empty indicator
        // (distance 2/8), so the zero function alone covers: p = 1 works
        let cover = cover_from_fractional(1.0, &q(1, 4), &cls, &d, &loss).unwrap();
        assert!(cover.len() <= 2);
    }

    #[test]
    fn coupon_collector_exact_values() {
        // k = 2, m = 2: miss probability = 1/2
        assert_eq!(coupon_collector_miss_probability(2, 2), q(1, 2));
        // k = 10, m = 24 stays above 1/2
        let p = coupon_collector_miss_probability(10, 24);
        assert!(p >= q(1, 2), "{p}");
        assert!(p < q(7, 10));
        // sanity: miss probability decreases with m
        let p2 = coupon_collector_miss_probability(10, 60);
        assert!(p2 < p);
    }

    #[test]
    fn separation_experiment_report() {
        let eps = q(1, 20); // k = floor(1/(2 eps)) = 10
        let report = separation_experiment(40, 10, &eps, 0.1, 300, 99).unwrap();
        assert_eq!(report.coupon_sample, 24);
        assert!(report.coupon_ok);
        // Monte Carlo cross-check within Hoeffding slack of the exact value
        let slack = (1e4f64.ln() / (2.0 * 300f64)).sqrt();
        assert!((report.coupon_mc - q_to_f64(&report.coupon_miss)).abs() <= slack);
        assert!(report.max_construction_size <= 11);
        let check_slack = (1e4f64.ln() / (2.0 * report.trials as f64)).sqrt();
        assert!(report.min_member_freq >= 1.0 - report.delta - check_slack);
        // k mismatch is rejected
        assert!(separation_experiment(40, 9, &eps, 0.1, 10, 0).is_err());
        assert!(separation_experiment(9, 10, &eps, 0.1, 10, 0).is_err());
    }

    #[test]
    fn claim_covering_exhaustive() {
        // (n, k, m) = (30, 3, 5): the all-singleton 5-set is tight at
        // C(5,3) = 10 covered distributions
        let eps = q(1, 6); // floor(1/(2/6)) = 3
        let report = claim_covering_check(30, 3, &[0, 1, 2, 3, 4], &eps, 1 << 20).unwrap();
        assert_eq!(report.bound, BigInt::from(10));
        assert!(report.ok);
        assert_eq!(report.covered_count, 10);
        // a set containing the zero function covers fewer
        let report2 = claim_covering_check(30, 3, &[0, 1, 2, 3, 30], &eps, 1 << 20).unwrap();
        assert!(report2.ok);
        assert_eq!(report2.covered_count, 4); // C(4,3) supports inside {0..3}
        let _ = q_int(0);
    }
}
