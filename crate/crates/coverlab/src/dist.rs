//! Exact discrete distributions, joint distributions, distribution families,
//! and sampling oracles (clean, malicious, covariate-shifted).
//!
//! Mass is stored as exact rationals and normalized once at construction, so
//! every risk, OPT, and total-variation computation downstream is exact.
//! Sampling walks a precomputed floating cumulative table; draws are
//! deterministic given the seed.

use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hypotheses::{Hypothesis, HypothesisClass};
use crate::loss::Loss;
use crate::rational::{q_display, q_one, q_to_f64, q_zero, Q};
use crate::rng::rng_from;

/// An exact probability vector over instance-space points.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    mass: Vec<Q>,
    cum: Vec<f64>,
}

fn cumulative(mass: &[Q]) -> Vec<f64> {
    let mut acc = q_zero();
    mass.iter()
        .map(|m| {
            acc += m;
            q_to_f64(&acc)
        })
        .collect()
}

fn draw_index(cum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    match cum.binary_search_by(|c| c.partial_cmp(&u).expect("finite")) {
        Ok(i) => (i + 1).min(cum.len() - 1),
        Err(i) => i.min(cum.len() - 1),
    }
}

impl Distribution {
    /// Normalizes a non-negative rational mass vector (must have positive sum).
    pub fn from_rationals(mass: Vec<Q>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::Input("distribution must cover at least one point".into()));
        }
        if mass.iter().any(|m| m < &q_zero()) {
            return Err(Error::Input("distribution mass must be non-negative".into()));
        }
        let total: Q = mass.iter().sum();
        if total.is_zero() {
            return Err(Error::Input("distribution mass must have positive sum".into()));
        }
        let mass: Vec<Q> = mass.into_iter().map(|m| m / &total).collect();
        let cum = cumulative(&mass);
        Ok(Distribution { mass, cum })
    }

    pub fn from_weights(weights: &[u64]) -> Result<Self> {
        Self::from_rationals(weights.iter().map(|&w| Q::from_integer(w.into())).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(&vec![1u64; n])
    }

    pub fn point_mass(n: usize, x: usize) -> Result<Self> {
        if x >= n {
            return Err(Error::Input(format!("point {x} outside space of size {n}")));
        }
        let mut w = vec![0u64; n];
        w[x] = 1;
        Self::from_weights(&w)
    }

    /// Uniform distribution on a subset of `[n]`.
    pub fn uniform_on(n: usize, subset: &[usize]) -> Result<Self> {
        let mut w = vec![0u64; n];
        for &x in subset {
            if x >= n {
                return Err(Error::Input(format!("point {x} outside space of size {n}")));
            }
            w[x] = 1;
        }
        Self::from_weights(&w)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self, x: usize) -> &Q {
        &self.mass[x]
    }

    pub fn masses(&self) -> &[Q] {
        &self.mass
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| !self.mass[x].is_zero()).collect()
    }

    /// `n` i.i.d. draws, deterministic given the rng state.
    pub fn sample_with(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        (0..n).map(|_| draw_index(&self.cum, rng)).collect()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<usize> {
        self.sample_with(n, &mut rng_from(seed))
    }

    /// Serializes as `point_index,weight_numerator,weight_denominator` rows.
    pub fn to_rows(&self) -> String {
        self.mass
            .iter()
            .enumerate()
            .map(|(x, m)| format!("{x},{},{}\n", m.numer(), m.denom()))
            .collect()
    }

    pub fn from_rows(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Q)> = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(Error::Input(format!("bad distribution row {line:?}")));
            }
            let x: usize = cells[0].trim().parse().map_err(|_| Error::Input(format!("bad point {line:?}")))?;
            let num: i64 = cells[1].trim().parse().map_err(|_| Error::Input(format!("bad numerator {line:?}")))?;
            let den: i64 = cells[2].trim().parse().map_err(|_| Error::Input(format!("bad denominator {line:?}")))?;
            if den == 0 {
                return Err(Error::Input(format!("zero denominator {line:?}")));
            }
            rows.push((x, Q::new(num.into(), den.into())));
        }
        rows.sort_by_key(|(x, _)| *x);
        if rows.iter().enumerate().any(|(i, (x, _))| i != *x) {
            return Err(Error::Input("distribution rows must cover points 0..n".into()));
        }
        Self::from_rationals(rows.into_iter().map(|(_, m)| m).collect())
    }
}

/// A finite explicit family, a generated family, or the family of all
/// distributions on the space.
#[derive(Clone, Debug)]
pub enum DistributionFamily {
    Explicit(Vec<Distribution>),
    /// All distributions over `[n]`; membership-only (not enumerable).
    AllOnSupport { n: usize },
    /// All C(n,k) uniform distributions on k-subsets of `[n]`.
    KSets { n: usize, k: usize },
    Singleton(Distribution),
}

impl DistributionFamily {
    pub fn contains(&self, d: &Distribution) -> bool {
        match self {
            DistributionFamily::Explicit(list) => list.iter().any(|e| e == d),
            DistributionFamily::AllOnSupport { n } => d.len() == *n,
            DistributionFamily::KSets { n, k } => {
                if d.len() != *n {
                    return false;
                }
                let support = d.support();
                support.len() == *k
                    && support.iter().all(|&x| d.mass(x) == &Q::new(1.into(), (*k as i64).into()))
            }
            DistributionFamily::Singleton(e) => e == d,
        }
    }

    /// Materializes the members (errors for the non-enumerable family).
    pub fn members(&self) -> Result<Vec<Distribution>> {
        match self {
            DistributionFamily::Explicit(list) => Ok(list.clone()),
            DistributionFamily::AllOnSupport { n } => Err(Error::Unsupported(format!(
                "family of all distributions over [{n}] is not enumerable"
            ))),
            DistributionFamily::KSets { n, k } => {
                use itertools::Itertools;
                (0..*n)
                    .combinations(*k)
                    .map(|subset| Distribution::uniform_on(*n, &subset))
                    .collect()
            }
            DistributionFamily::Singleton(d) => Ok(vec![d.clone()]),
        }
    }
}

/// An exact distribution over (instance, label) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    mass: Vec<Vec<Q>>, // [x][y]
    marginal: Distribution,
    cum: Vec<f64>, // flattened (x,y) cumulative, lex order
}

impl JointDistribution {
    pub fn from_matrix(mass: Vec<Vec<Q>>) -> Result<Self> {
        if mass.is_empty() || mass[0].is_empty() {
            return Err(Error::Input("joint distribution matrix must be non-empty".into()));
        }
        let width = mass[0].len();
        if mass.iter().any(|row| row.len() != width) {
            return Err(Error::Input("joint distribution rows must have equal width".into()));
        }
        if mass.iter().flatten().any(|m| m < &q_zero()) {
            return Err(Error::Input("joint distribution mass must be non-negative".into()));
        }
        let total: Q = mass.iter().flatten().sum();
        if total.is_zero() {
            return Err(Error::Input("joint distribution mass must have positive sum".into()));
        }
        let mass: Vec<Vec<Q>> = mass
            .into_iter()
            .map(|row| row.into_iter().map(|m| m / &total).collect())
            .collect();
        let marginal_mass: Vec<Q> = mass.iter().map(|row| row.iter().sum()).collect();
        let marginal = Distribution::from_rationals(marginal_mass)?;
        let flat: Vec<Q> = mass.iter().flatten().cloned().collect();
        let cum = cumulative(&flat);
        Ok(JointDistribution { mass, marginal, cum })
    }

    /// Marginal plus an exact conditional label table (`cond[x]` sums to 1).
    pub fn from_conditional(marginal: &Distribution, cond: &[Vec<Q>]) -> Result<Self> {
        if cond.len() != marginal.len() {
            return Err(Error::Input("conditional table must cover every point".into()));
        }
        for (x, row) in cond.iter().enumerate() {
            let total: Q = row.iter().sum();
            if total != q_one() {
                return Err(Error::Input(format!(
                    "conditional row {x} sums to {}, expected 1",
                    q_display(&total)
                )));
            }
        }
        let mass = (0..marginal.len())
            .map(|x| cond[x].iter().map(|c| marginal.mass(x) * c).collect())
            .collect();
        Self::from_matrix(mass)
    }

    /// Labels drawn deterministically from a total hypothesis.
    pub fn realizable(marginal: &Distribution, h: &Hypothesis, label_count: usize) -> Result<Self> {
        if !h.is_total() {
            return Err(Error::Precondition("realizable joint needs a total hypothesis".into()));
        }
        let mass = (0..marginal.len())
            .map(|x| {
                let mut row = vec![q_zero(); label_count];
                row[h.label(x).expect("total")] = marginal.mass(x).clone();
                row
            })
            .collect();
        Self::from_matrix(mass)
    }

    /// Binary labels from `h` flipped independently with probability `rate`.
    pub fn with_flip_noise(marginal: &Distribution, h: &Hypothesis, rate: &Q) -> Result<Self> {
        if !h.is_total() {
            return Err(Error::Precondition("flip noise needs a total hypothesis".into()));
        }
        if rate < &q_zero() || rate > &q_one() {
            return Err(Error::Input("flip rate must be in [0,1]".into()));
        }
        if h.raw_labels().iter().any(|&l| l > 1) {
            return Err(Error::Input("flip noise is defined for binary labels".into()));
        }
        let mass = (0..marginal.len())
            .map(|x| {
                let y = h.label(x).expect("total");
                let mut row = vec![q_zero(); 2];
                row[y] = marginal.mass(x) * (q_one() - rate);
                row[1 - y] = marginal.mass(x) * rate;
                row
            })
            .collect();
        Self::from_matrix(mass)
    }

    /// Convex mixture `w * self + (1-w) * other`.
    pub fn mixture(a: &JointDistribution, b: &JointDistribution, w: &Q) -> Result<Self> {
        if a.space_size() != b.space_size() || a.label_count() != b.label_count() {
            return Err(Error::Input("mixture components must share dimensions".into()));
        }
        if w < &q_zero() || w > &q_one() {
            return Err(Error::Input("mixture weight must be in [0,1]".into()));
        }
        let mass = (0..a.space_size())
            .map(|x| {
                (0..a.label_count())
                    .map(|y| w * a.mass(x, y) + (q_one() - w) * b.mass(x, y))
                    .collect()
            })
            .collect();
        Self::from_matrix(mass)
    }

    pub fn space_size(&self) -> usize {
        self.mass.len()
    }

    pub fn label_count(&self) -> usize {
        self.mass[0].len()
    }

    pub fn mass(&self, x: usize, y: usize) -> &Q {
        &self.mass[x][y]
    }

    pub fn marginal(&self) -> &Distribution {
        &self.marginal
    }

    pub fn sample_with(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
        let w = self.label_count();
        (0..n)
            .map(|_| {
                let flat = draw_index(&self.cum, rng);
                (flat / w, flat % w)
            })
            .collect()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<(usize, usize)> {
        self.sample_with(n, &mut rng_from(seed))
    }
}

/// Deterministic corruption rule for the malicious oracle.
#[derive(Clone)]
pub enum Adversary {
    /// Always emit this pair.
    FixedPair { x: usize, y: usize },
    /// Emit the pair maximizing the loss of a target hypothesis (ties to the
    /// lexicographically first pair); the classic worst-label strategy
    /// against the best-in-class hypothesis.
    WorstLabel { pair: (usize, usize) },
    /// Caller-supplied rule from (trial seed, draw index) to a pair.
    Rule(Arc<dyn Fn(u64, usize) -> (usize, usize) + Send + Sync>),
}

impl std::fmt::Debug for Adversary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Adversary::FixedPair { x, y } => write!(f, "FixedPair({x},{y})"),
            Adversary::WorstLabel { pair } => write!(f, "WorstLabel{pair:?}"),
            Adversary::Rule(_) => write!(f, "Rule(..)"),
        }
    }
}

impl Adversary {
    /// Builds the worst-label strategy against `target` (normally the OPT
    /// hypothesis): corrupt to the (x, y) pair with the largest loss.
    pub fn worst_label(target: &Hypothesis, loss: &Loss, space: usize, labels: usize) -> Result<Self> {
        if !target.is_total() {
            return Err(Error::Precondition("worst-label adversary needs a total target".into()));
        }
        let mut best: Option<((usize, usize), Q)> = None;
        for x in 0..space {
            for y in 0..labels {
                let v = loss.get(target.label(x).expect("total"), y).clone();
                let better = match &best {
                    None => true,
                    Some((_, bv)) => &v > bv,
                };
                if better {
                    best = Some(((x, y), v));
                }
            }
        }
        Ok(Adversary::WorstLabel { pair: best.expect("non-empty space").0 })
    }

    fn pair(&self, seed: u64, draw: usize) -> (usize, usize) {
        match self {
            Adversary::FixedPair { x, y } => (*x, *y),
            Adversary::WorstLabel { pair } => *pair,
            Adversary::Rule(f) => f(seed, draw),
        }
    }
}

/// Sample oracle that independently replaces each draw with an adversarial
/// pair with probability `eta`.
#[derive(Clone, Debug)]
pub struct MaliciousOracle {
    base: JointDistribution,
    eta: f64,
    adversary: Adversary,
}

impl MaliciousOracle {
    pub fn new(base: JointDistribution, eta: f64, adversary: Adversary) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::Input(format!("malicious rate must satisfy 0 <= eta < 1, got {eta}")));
        }
        Ok(MaliciousOracle { base, eta, adversary })
    }

    pub fn base(&self) -> &JointDistribution {
        &self.base
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Draws `n` pairs; the flag vector marks corrupted draws and exists for
    /// test introspection only — learners never see it. With `eta == 0` the
    /// corruption coin is skipped entirely, so the stream is draw-for-draw
    /// identical to the base distribution under the same seed.
    pub fn sample(&self, n: usize, seed: u64) -> (Vec<(usize, usize)>, Vec<bool>) {
        let mut rng = rng_from(seed);
        let mut pairs = Vec::with_capacity(n);
        let mut flags = Vec::with_capacity(n);
        for i in 0..n {
            if self.eta > 0.0 {
                let u: f64 = rng.random();
                if u < self.eta {
                    pairs.push(self.adversary.pair(seed, i));
                    flags.push(true);
                    continue;
                }
            }
            pairs.push(self.base.sample_with(1, &mut rng)[0]);
            flags.push(false);
        }
        (pairs, flags)
    }
}

/// Exact risk: expected loss of a total hypothesis.
pub fn risk(h: &Hypothesis, joint: &JointDistribution, loss: &Loss) -> Result<Q> {
    if !h.is_total() {
        return Err(Error::Precondition("risk needs a total hypothesis; use partial_risk".into()));
    }
    if h.len() != joint.space_size() {
        return Err(Error::Input("hypothesis length does not match joint distribution".into()));
    }
    let mut acc = q_zero();
    for x in 0..joint.space_size() {
        let hx = h.label(x).expect("total");
        for y in 0..joint.label_count() {
            let m = joint.mass(x, y);
            if !m.is_zero() {
                acc += m * loss.get(hx, y);
            }
        }
    }
    Ok(acc)
}

/// Exact minimum risk over the class and the full argmin set (ordered by
/// member index).
pub fn opt_risk(class: &HypothesisClass, joint: &JointDistribution, loss: &Loss) -> Result<(Q, Vec<usize>)> {
    if class.is_empty() {
        return Err(Error::Input("opt_risk needs a non-empty class".into()));
    }
    let mut best: Option<Q> = None;
    let mut risks = Vec::with_capacity(class.len());
    for h in class.members() {
        let r = risk(h, joint, loss)?;
        if best.as_ref().is_none_or(|b| &r < b) {
            best = Some(r.clone());
        }
        risks.push(r);
    }
    let best = best.expect("non-empty");
    let argmin = risks
        .iter()
        .enumerate()
        .filter(|(_, r)| *r == &best)
        .map(|(i, _)| i)
        .collect();
    Ok((best, argmin))
}

/// Exact mean loss over a labeled sample.
pub fn empirical_risk(h: &Hypothesis, sample: &[(usize, usize)], loss: &Loss) -> Result<Q> {
    if sample.is_empty() {
        return Err(Error::Input("empirical risk needs a non-empty sample".into()));
    }
    let mut acc = q_zero();
    for &(x, y) in sample {
        let hx = h
            .label(x)
            .ok_or_else(|| Error::Precondition("empirical risk needs a total hypothesis".into()))?;
        acc += loss.get(hx, y);
    }
    Ok(acc / Q::from_integer((sample.len() as i64).into()))
}

/// Floating-point mean loss; the hot path inside ERM loops. Deterministic
/// (fixed summation order).
pub fn empirical_risk_f64(h: &Hypothesis, sample: &[(usize, usize)], loss: &Loss) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for &(x, y) in sample {
        acc += loss.get_f64(h.label(x).expect("total hypothesis in ERM"), y);
    }
    acc / sample.len() as f64
}

/// Exact mass where two total hypotheses disagree.
pub fn classification_distance(h: &Hypothesis, g: &Hypothesis, d: &Distribution) -> Result<Q> {
    if !h.is_total() || !g.is_total() {
        return Err(Error::Input(
            "classification distance is undefined for partial hypotheses (no star policy shipped)".into(),
        ));
    }
    if h.len() != g.len() || h.len() != d.len() {
        return Err(Error::Input("classification distance needs matching dimensions".into()));
    }
    let mut acc = q_zero();
    for x in 0..h.len() {
        if h.label(x) != g.label(x) {
            acc += d.mass(x);
        }
    }
    Ok(acc)
}

/// Exact expected loss of `candidate` against `target` labels under `d`:
/// the covering distance used by the reduction lemmas.
pub fn expected_loss_distance(
    candidate: &Hypothesis,
    target: &Hypothesis,
    d: &Distribution,
    loss: &Loss,
) -> Result<Q> {
    if !candidate.is_total() || !target.is_total() {
        return Err(Error::Input("expected loss distance needs total hypotheses".into()));
    }
    let mut acc = q_zero();
    for x in 0..candidate.len() {
        let m = d.mass(x);
        if !m.is_zero() {
            acc += m * loss.get(candidate.label(x).expect("total"), target.label(x).expect("total"));
        }
    }
    Ok(acc)
}

/// Exact mass of the symmetric difference `h Δ g` under `d` (binary classes).
pub fn symmetric_difference_mass(h: &Hypothesis, g: &Hypothesis, d: &Distribution) -> Result<Q> {
    classification_distance(h, g, d)
}

/// Class-dependent total variation: the largest gap between `d1` and `d2` on
/// any symmetric difference of two class members. Binary label spaces only.
pub fn tv_h_delta_h(d1: &Distribution, d2: &Distribution, class: &HypothesisClass) -> Result<Q> {
    if class.label_space().size() != 2 {
        return Err(Error::Unsupported(
            "TV over symmetric differences is defined for binary label spaces".into(),
        ));
    }
    if d1.len() != d2.len() || d1.len() != class.space().size() {
        return Err(Error::Input("tv_h_delta_h needs matching dimensions".into()));
    }
    let mut best = q_zero();
    for (i, h) in class.members().iter().enumerate() {
        for g in class.members().iter().skip(i) {
            let mut m1 = q_zero();
            let mut m2 = q_zero();
            for x in 0..d1.len() {
                if h.label(x) != g.label(x) {
                    m1 += d1.mass(x);
                    m2 += d2.mass(x);
                }
            }
            let gap = if m1 >= m2 { m1 - m2 } else { m2 - m1 };
            if gap > best {
                best = gap;
            }
        }
    }
    Ok(best)
}

/// Filters caller-supplied candidates by the exact shift predicate
/// `TV_{HΔH}(d, d') <= eps / 2`.
pub fn covariate_shift_family(
    d: &Distribution,
    class: &HypothesisClass,
    eps: &Q,
    candidates: &[Distribution],
) -> Result<Vec<Distribution>> {
    let bound = eps / Q::from_integer(2.into());
    let mut out = Vec::new();
    for cand in candidates {
        if tv_h_delta_h(d, cand, class)? <= bound {
            out.push(cand.clone());
        }
    }
    Ok(out)
}
