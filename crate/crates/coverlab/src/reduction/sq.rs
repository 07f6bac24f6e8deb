//! Statistical-query model: tolerant-expectation oracles, SQ learner
//! descriptions, and the reduction that enumerates every grid combination of
//! oracle responses to build a cover.

use num_traits::{ToPrimitive, Zero};

use crate::dist::JointDistribution;
use crate::error::{Error, Result};
use crate::hypotheses::{Hypothesis, HypothesisClass};
use crate::loss::Loss;
use crate::rational::{q, q_one, q_zero, Q};

/// A statistical query: a bounded function of one labeled example.
pub type Psi<'a> = &'a dyn Fn(usize, usize) -> Q;

/// Answers queries up to the stated tolerance.
pub trait SqOracle {
    fn query(&mut self, psi: Psi<'_>, tau: &Q) -> Q;
}

/// Exact expectation of a query under the joint distribution.
pub fn exact_expectation(joint: &JointDistribution, psi: Psi<'_>) -> Q {
    let mut acc = q_zero();
    for x in 0..joint.space_size() {
        for y in 0..joint.label_count() {
            let m = joint.mass(x, y);
            if !m.is_zero() {
                acc += m * psi(x, y);
            }
        }
    }
    acc
}

/// Truthful oracle with zero error (trivially within any tolerance).
pub struct ExactOracle<'a> {
    pub joint: &'a JointDistribution,
}

impl SqOracle for ExactOracle<'_> {
    fn query(&mut self, psi: Psi<'_>, _tau: &Q) -> Q {
        exact_expectation(self.joint, psi)
    }
}

/// Truthful oracle rounding to the response grid (spacing 2 tau), the
/// canonical tau-valid oracle with discrete outputs.
pub struct GridOracle<'a> {
    pub joint: &'a JointDistribution,
}

impl SqOracle for GridOracle<'_> {
    fn query(&mut self, psi: Psi<'_>, tau: &Q) -> Q {
        round_to_grid(&exact_expectation(self.joint, psi), tau)
    }
}

/// Adversarial oracle answering `truth +- tau` by a fixed sign pattern.
pub struct ExtremeOracle<'a> {
    pub joint: &'a JointDistribution,
    pub signs: Vec<bool>,
    pub next: usize,
}

impl SqOracle for ExtremeOracle<'_> {
    fn query(&mut self, psi: Psi<'_>, tau: &Q) -> Q {
        let v = exact_expectation(self.joint, psi);
        let sign = self.signs.get(self.next).copied().unwrap_or(false);
        self.next += 1;
        if sign {
            v + tau
        } else {
            v - tau
        }
    }
}

/// Replays a preset response tuple (used by the enumeration).
pub struct ScriptedOracle {
    responses: Vec<Q>,
    pos: usize,
}

impl ScriptedOracle {
    pub fn new(responses: Vec<Q>) -> Self {
        ScriptedOracle { responses, pos: 0 }
    }

    pub fn queries_answered(&self) -> usize {
        self.pos
    }
}

impl SqOracle for ScriptedOracle {
    fn query(&mut self, _psi: Psi<'_>, _tau: &Q) -> Q {
        let v = self.responses.get(self.pos).cloned().unwrap_or_else(q_zero);
        self.pos += 1;
        v
    }
}

/// The response grid `{-1, -1 + 2 tau, ...}` of size `floor(1/tau) + 1`.
pub fn response_grid(tau: &Q) -> Result<Vec<Q>> {
    if tau <= &q_zero() || tau > &q_one() {
        return Err(Error::Input("tolerance must be in (0, 1]".into()));
    }
    let steps = (q_one() / tau).floor().to_integer().to_usize().unwrap_or(0);
    Ok((0..=steps)
        .map(|k| q(-1, 1) + q(2, 1) * tau * Q::from_integer((k as i64).into()))
        .collect())
}

/// Nearest grid point (half-up, clamped to the grid range).
pub fn round_to_grid(v: &Q, tau: &Q) -> Q {
    let steps = (q_one() / tau).floor();
    let raw = (v + q_one()) / (q(2, 1) * tau);
    let k = (raw + q(1, 2)).floor();
    let k = if k < q_zero() {
        q_zero()
    } else if k > steps {
        steps
    } else {
        k
    };
    q(-1, 1) + q(2, 1) * tau * k
}

/// A realizable SQ strategy with a fixed query budget.
#[derive(Clone, Debug)]
pub enum SqLearner {
    /// Queries each member's mistake indicator in class order and returns
    /// the first member whose response is at most tau; |H| queries.
    MemberScan { class: HypothesisClass, loss: Loss },
    /// Two-block probe for the pair-block class over four points: one signed
    /// query per block decides that block's label; 2 queries.
    PairProbe { class: HypothesisClass },
}

/// The four-member class over `X = [4]` labeling the two halves by a bit
/// each: members (a, a, b, b) for (a, b) in {0,1}^2.
pub fn pair_block_class() -> HypothesisClass {
    let members = (0..4usize)
        .map(|code| {
            let a = code >> 1;
            let b = code & 1;
            Hypothesis::total(vec![a, a, b, b])
        })
        .collect();
    HypothesisClass::explicit(
        crate::space::InstanceSpace::new(4).unwrap(),
        crate::space::LabelSpace::binary(),
        members,
    )
    .expect("pair block class")
}

impl SqLearner {
    /// The generic realizable SQ learner for a finite class.
    pub fn member_scan(class: &HypothesisClass, loss: &Loss) -> Self {
        SqLearner::MemberScan { class: class.clone(), loss: loss.clone() }
    }

    pub fn pair_probe() -> Self {
        SqLearner::PairProbe { class: pair_block_class() }
    }

    pub fn class(&self) -> &HypothesisClass {
        match self {
            SqLearner::MemberScan { class, .. } | SqLearner::PairProbe { class } => class,
        }
    }

    /// Declared query complexity n(eps, tau).
    pub fn query_budget(&self) -> usize {
        match self {
            SqLearner::MemberScan { class, .. } => class.len(),
            SqLearner::PairProbe { .. } => 2,
        }
    }

    /// Runs the strategy against an oracle. Deterministic; on nonsensical
    /// (invalid-oracle) responses it still returns some member.
    pub fn run(&self, oracle: &mut dyn SqOracle, tau: &Q) -> Hypothesis {
        match self {
            SqLearner::MemberScan { class, loss } => {
                for h in class.members() {
                    let psi = |x: usize, y: usize| -> Q {
                        if loss.get(h.label(x).expect("total"), y).is_zero() {
                            q_zero()
                        } else {
                            q_one()
                        }
                    };
                    let r = oracle.query(&psi, tau);
                    if r <= *tau {
                        return h.clone();
                    }
                }
                class.member(0).clone()
            }
            SqLearner::PairProbe { class } => {
                let block_query = |lo: usize, hi: usize| {
                    move |x: usize, y: usize| -> Q {
                        if x >= lo && x < hi {
                            Q::from_integer((2 * y as i64 - 1).into())
                        } else {
                            q_zero()
                        }
                    }
                };
                let first = block_query(0, 2);
                let second = block_query(2, 4);
                let a = usize::from(oracle.query(&first, tau) > q_zero());
                let b = usize::from(oracle.query(&second, tau) > q_zero());
                let target = Hypothesis::total(vec![a, a, b, b]);
                let idx = class.index_of(&target).expect("pair block member");
                class.member(idx).clone()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SqReduceOutcome {
    /// Exact number of response combinations enumerated: |grid|^queries.
    pub combinations: usize,
    /// Deduplicated learner outputs in canonical (class index) order.
    pub cover: Vec<Hypothesis>,
    pub chosen: Hypothesis,
    /// Tau-tolerant loss estimates aligned with the cover.
    pub estimates: Vec<Q>,
}

/// Enumerates every grid response combination, collects the learner outputs
/// into a cover, evaluates each member's loss with a tau-tolerant query
/// (normalized by the largest loss value), and returns the minimizer.
pub fn sq_reduce(
    learner: &SqLearner,
    joint: &JointDistribution,
    loss: &Loss,
    tau: &Q,
    budget: usize,
) -> Result<SqReduceOutcome> {
    let grid = response_grid(tau)?;
    let queries = learner.query_budget();
    let combinations = grid
        .len()
        .checked_pow(queries as u32)
        .ok_or_else(|| Error::Resource(format!("{}^{queries} combinations overflow", grid.len())))?;
    if combinations > budget {
        return Err(Error::Resource(format!(
            "{}^{queries} = {combinations} response combinations, over budget {budget}",
            grid.len()
        )));
    }

    let class = learner.class();
    let mut seen: Vec<Hypothesis> = Vec::new();
    let mut odometer = vec![0usize; queries];
    for _ in 0..combinations {
        let responses: Vec<Q> = odometer.iter().map(|&k| grid[k].clone()).collect();
        let mut oracle = ScriptedOracle::new(responses);
        let h = learner.run(&mut oracle, tau);
        if !seen.contains(&h) {
            seen.push(h);
        }
        for slot in odometer.iter_mut() {
            *slot += 1;
            if *slot < grid.len() {
                break;
            }
            *slot = 0;
        }
    }
    seen.sort_by_key(|h| class.index_of(h).unwrap_or(usize::MAX));

    let b = loss.max_value();
    let b = if b.is_zero() { q_one() } else { b };
    let mut estimates = Vec::with_capacity(seen.len());
    for h in &seen {
        let psi = |x: usize, y: usize| -> Q { loss.get(h.label(x).expect("total"), y) / &b };
        let mut oracle = GridOracle { joint };
        estimates.push(oracle.query(&psi, tau) * &b);
    }
    let mut best = 0usize;
    for i in 1..seen.len() {
        if estimates[i] < estimates[best] {
            best = i;
        }
    }
    let chosen = seen[best].clone();
    Ok(SqReduceOutcome { combinations, cover: seen, chosen, estimates })
}

/// Cover members a worst-case tau-tolerant evaluation oracle could output:
/// exactly those whose true risk is within `2 tau B` of the best in the
/// cover (any farther member always estimates strictly worse).
pub fn adversarial_output_candidates(
    cover: &[Hypothesis],
    joint: &JointDistribution,
    loss: &Loss,
    tau: &Q,
) -> Result<Vec<usize>> {
    let b = loss.max_value();
    let b = if b.is_zero() { q_one() } else { b };
    let risks: Vec<Q> = cover
        .iter()
        .map(|h| crate::dist::risk(h, joint, loss))
        .collect::<Result<Vec<_>>>()?;
    let min = risks.iter().min().cloned().expect("non-empty cover");
    let bound = min + q(2, 1) * tau * b;
    Ok(risks
        .iter()
        .enumerate()
        .filter(|(_, r)| *r <= &bound)
        .map(|(i, _)| i)
        .collect())
}
