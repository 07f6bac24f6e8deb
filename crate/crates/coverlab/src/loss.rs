//! Loss functions with verified structural tags, perturbation maps for
//! robust risk, and similarity metrics for fairness.
//!
//! A loss is an explicit |Y|x|Y| cost table with zero diagonal. Structural
//! tags (identity of indiscernibles, (a,b)-bounded, c-approximate
//! pseudometric, upper bound) are never taken on faith: they are checked
//! exhaustively over all label pairs and triples, and the minimal valid
//! pseudometric constant is computed exactly.

use num_traits::Zero;

use crate::dist::{Distribution, JointDistribution};
use crate::error::{Error, Result};
use crate::hypotheses::Hypothesis;
use crate::rational::{q_display, q_one, q_parse, q_to_f64, q_zero, Q};
use crate::space::LabelSpace;

/// An explicit loss table; entry `(a, b)` is the cost of predicting `a`
/// against truth `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Loss {
    table: Vec<Vec<Q>>,
    table_f64: Vec<Vec<f64>>,
}

impl Loss {
    pub fn from_table(table: Vec<Vec<Q>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::Input("loss table must be non-empty".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input("loss table must be square".into()));
            }
            if !row[i].is_zero() {
                return Err(Error::Input(format!(
                    "loss diagonal must be zero; entry ({i},{i}) = {}",
                    q_display(&row[i])
                )));
            }
            for (j, v) in row.iter().enumerate() {
                if v < &q_zero() {
                    return Err(Error::Input(format!(
                        "loss entries must be non-negative; entry ({i},{j}) = {}",
                        q_display(v)
                    )));
                }
            }
        }
        let table_f64 = table
            .iter()
            .map(|row| row.iter().map(q_to_f64).collect())
            .collect();
        Ok(Loss { table, table_f64 })
    }

    /// Standard classification loss over `y_count` labels.
    pub fn zero_one(y_count: usize) -> Self {
        let table = (0..y_count)
            .map(|a| (0..y_count).map(|b| if a == b { q_zero() } else { q_one() }).collect())
            .collect();
        Loss::from_table(table).expect("0/1 table")
    }

    /// Binary loss with distinct off-diagonal costs: predicting 0 against
    /// truth 1 costs `cost01`, predicting 1 against truth 0 costs `cost10`.
    pub fn asymmetric_binary(cost01: Q, cost10: Q) -> Result<Self> {
        Loss::from_table(vec![vec![q_zero(), cost01], vec![cost10, q_zero()]])
    }

    /// Loss over pair labels `(b, r)` (index `b * second + r`): 0 when the
    /// first coordinates agree, 1 when they differ but the second agrees,
    /// and `c` otherwise. Fails the identity of indiscernibles by design.
    pub fn ternary_pair(first: usize, second: usize, c: Q) -> Result<Self> {
        let n = first * second;
        let coords = |idx: usize| (idx / second, idx % second);
        let table = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let (b1, r1) = coords(i);
                        let (b2, r2) = coords(j);
                        if b1 == b2 {
                            q_zero()
                        } else if r1 == r2 {
                            q_one()
                        } else {
                            c.clone()
                        }
                    })
                    .collect()
            })
            .collect();
        Loss::from_table(table)
    }

    /// Absolute difference of label payloads.
    pub fn absolute(labels: &LabelSpace) -> Result<Self> {
        let payloads = labels
            .payloads()
            .ok_or_else(|| Error::Unsupported("absolute loss needs numeric label payloads".into()))?;
        let table = payloads
            .iter()
            .map(|a| {
                payloads
                    .iter()
                    .map(|b| if a >= b { a - b } else { b - a })
                    .collect()
            })
            .collect();
        Loss::from_table(table)
    }

    /// Squared difference of label payloads.
    pub fn squared(labels: &LabelSpace) -> Result<Self> {
        let payloads = labels
            .payloads()
            .ok_or_else(|| Error::Unsupported("squared loss needs numeric label payloads".into()))?;
        let table = payloads
            .iter()
            .map(|a| payloads.iter().map(|b| (a - b) * (a - b)).collect())
            .collect();
        Loss::from_table(table)
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn get(&self, a: usize, b: usize) -> &Q {
        &self.table[a][b]
    }

    pub fn get_f64(&self, a: usize, b: usize) -> f64 {
        self.table_f64[a][b]
    }

    /// Largest entry (the upper bound B).
    pub fn max_value(&self) -> Q {
        let mut best = q_zero();
        for row in &self.table {
            for v in row {
                if v > &best {
                    best = v.clone();
                }
            }
        }
        best
    }

    /// Smallest and largest off-diagonal entries, if |Y| >= 2.
    pub fn off_diagonal_range(&self) -> Option<(Q, Q)> {
        let n = self.size();
        let mut lo: Option<Q> = None;
        let mut hi: Option<Q> = None;
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let v = &self.table[a][b];
                if lo.as_ref().is_none_or(|l| v < l) {
                    lo = Some(v.clone());
                }
                if hi.as_ref().is_none_or(|h| v > h) {
                    hi = Some(v.clone());
                }
            }
        }
        Some((lo?, hi?))
    }

    /// All off-diagonal entries equal to one (plain classification loss).
    pub fn is_zero_one(&self) -> bool {
        match self.off_diagonal_range() {
            Some((lo, hi)) => lo == q_one() && hi == q_one(),
            None => true,
        }
    }

    /// Table scaled by a non-negative constant.
    pub fn scaled(&self, c: &Q) -> Result<Self> {
        Loss::from_table(
            self.table
                .iter()
                .map(|row| row.iter().map(|v| v * c).collect())
                .collect(),
        )
    }

    /// CSV form: header row of label names, then the cost matrix.
    pub fn to_csv(&self, labels: &LabelSpace) -> String {
        let mut out = labels.names().join(",");
        out.push('\n');
        for row in &self.table {
            let cells: Vec<String> = row.iter().map(q_display).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the `to_csv` format; returns the loss and the header names.
    pub fn from_csv(text: &str) -> Result<(Self, Vec<String>)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Input("empty loss csv".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut table = Vec::new();
        for line in lines {
            let row = line.split(',').map(q_parse).collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::Input("loss csv row width does not match header".into()));
            }
            table.push(row);
        }
        if table.len() != header.len() {
            return Err(Error::Input("loss csv must be square".into()));
        }
        Ok((Loss::from_table(table)?, header))
    }
}

/// A structural tag a loss may claim.
#[derive(Clone, Debug, PartialEq)]
pub enum LossTag {
    IdentityOfIndiscernibles,
    DoublyBounded(Q, Q),
    ApproxPseudometric(Q),
    UpperBounded(Q),
}

/// Maximal verified tag set for a loss.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifiedTags {
    pub identity_of_indiscernibles: bool,
    /// `(a, b)` with every off-diagonal entry in `[a, b]`, when a > 0 exists.
    pub doubly_bounded: Option<(Q, Q)>,
    /// Minimal `c` with `l(y1,y3) <= c (l(y1,y2) + l(y2,y3))` for all triples;
    /// `None` when no finite constant exists.
    pub pseudometric_c: Option<Q>,
    /// Largest table entry.
    pub upper_bound: Q,
}

/// Exhaustive tag verification over all label pairs and triples.
pub fn verify_tags(loss: &Loss) -> VerifiedTags {
    let n = loss.size();
    let off = loss.off_diagonal_range();
    let ioi = off.as_ref().map(|(lo, _)| lo > &q_zero()).unwrap_or(true);
    let doubly = off.clone().filter(|(lo, _)| lo > &q_zero());

    // minimal c: sup over triples of l13 / (l12 + l23); the degenerate
    // triple (y1, y3, y3) forces c >= 1 whenever some entry is positive
    let mut c_min: Option<Q> = Some(q_zero());
    'outer: for y1 in 0..n {
        for y3 in 0..n {
            let l13 = loss.get(y1, y3);
            if l13.is_zero() {
                continue;
            }
            for y2 in 0..n {
                let den = loss.get(y1, y2) + loss.get(y2, y3);
                if den.is_zero() {
                    c_min = None;
                    break 'outer;
                }
                let ratio = l13 / den;
                if let Some(c) = &mut c_min {
                    if ratio > *c {
                        *c = ratio;
                    }
                }
            }
        }
    }
    // a loss with zero l13 everywhere it matters gets the trivial constant 1
    if let Some(c) = &mut c_min {
        if c.is_zero() {
            *c = q_one();
        }
    }

    VerifiedTags {
        identity_of_indiscernibles: ioi,
        doubly_bounded: doubly,
        pseudometric_c: c_min,
        upper_bound: loss.max_value(),
    }
}

/// Checks one claimed tag, naming a witness pair/triple on failure.
pub fn verify_claim(loss: &Loss, claim: &LossTag) -> Result<()> {
    let n = loss.size();
    match claim {
        LossTag::IdentityOfIndiscernibles => {
            for a in 0..n {
                for b in 0..n {
                    if a != b && loss.get(a, b).is_zero() {
                        return Err(Error::Verification(format!(
                            "identity of indiscernibles fails at pair ({a},{b}): loss is 0"
                        )));
                    }
                }
            }
            Ok(())
        }
        LossTag::DoublyBounded(a, b) => {
            for y1 in 0..n {
                for y2 in 0..n {
                    if y1 == y2 {
                        continue;
                    }
                    let v = loss.get(y1, y2);
                    if v < a || v > b {
                        return Err(Error::Verification(format!(
                            "({},{})-boundedness fails at pair ({y1},{y2}): loss {}",
                            q_display(a),
                            q_display(b),
                            q_display(v)
                        )));
                    }
                }
            }
            Ok(())
        }
        LossTag::ApproxPseudometric(c) => {
            for y1 in 0..n {
                for y2 in 0..n {
                    for y3 in 0..n {
                        let lhs = loss.get(y1, y3);
                        let rhs = c * (loss.get(y1, y2) + loss.get(y2, y3));
                        if lhs > &rhs {
                            return Err(Error::Verification(format!(
                                "{}-approximate pseudometric fails at triple ({y1},{y2},{y3}): {} > {}",
                                q_display(c),
                                q_display(lhs),
                                q_display(&rhs)
                            )));
                        }
                    }
                }
            }
            Ok(())
        }
        LossTag::UpperBounded(bound) => {
            for y1 in 0..n {
                for y2 in 0..n {
                    if loss.get(y1, y2) > bound {
                        return Err(Error::Verification(format!(
                            "upper bound {} fails at pair ({y1},{y2}): loss {}",
                            q_display(bound),
                            q_display(loss.get(y1, y2))
                        )));
                    }
                }
            }
            Ok(())
        }
    }
}

/// The loss-dependent constant scaling the cover accuracy in the agnostic
/// reduction: `(1/2) * min_{a != b} l(a,b) / max_{a != b} l(a,b)`. The 1/2 is
/// our fixed choice of the universal constant.
pub fn eta_ell(loss: &Loss) -> Result<Q> {
    if loss.size() < 2 {
        return Err(Error::Precondition("eta_ell needs at least two labels".into()));
    }
    let (lo, hi) = loss.off_diagonal_range().expect("size >= 2");
    if lo.is_zero() {
        return Err(Error::Precondition(
            "eta_ell needs identity of indiscernibles (zero off-diagonal entry found)".into(),
        ));
    }
    Ok(Q::new(1.into(), 2.into()) * lo / hi)
}

/// Per-point perturbation neighborhoods.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationMap {
    neighbors: Vec<Vec<usize>>,
}

impl PerturbationMap {
    /// Builds from raw neighbor lists; with `reflexive` (the default in every
    /// shipped construction) each point is added to its own set.
    pub fn new(mut neighbors: Vec<Vec<usize>>, reflexive: bool) -> Result<Self> {
        let n = neighbors.len();
        for (x, set) in neighbors.iter_mut().enumerate() {
            if reflexive {
                set.push(x);
            }
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::Input(format!("empty neighbor set at point {x}")));
            }
            if set.iter().any(|&v| v >= n) {
                return Err(Error::Input(format!("neighbor out of range at point {x}")));
            }
        }
        Ok(PerturbationMap { neighbors })
    }

    /// `U(x) = {x}`.
    pub fn identity(n: usize) -> Self {
        PerturbationMap { neighbors: (0..n).map(|x| vec![x]).collect() }
    }

    /// Neighbors at distance one on the path `0 - 1 - ... - n-1`, reflexive.
    pub fn line_graph(n: usize) -> Self {
        let neighbors = (0..n)
            .map(|x| {
                let mut set = vec![x];
                if x > 0 {
                    set.push(x - 1);
                }
                if x + 1 < n {
                    set.push(x + 1);
                }
                set.sort_unstable();
                set
            })
            .collect();
        PerturbationMap { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    pub fn is_identity(&self) -> bool {
        self.neighbors.iter().enumerate().all(|(x, set)| set.as_slice() == [x])
    }

    /// Adjacency-list text: one `x:n1,n2,...` row per point.
    pub fn to_text(&self) -> String {
        self.neighbors
            .iter()
            .enumerate()
            .map(|(x, set)| {
                let cells: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                format!("{x}:{}\n", cells.join(","))
            })
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (x, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::Input(format!("bad adjacency row {line:?}")))?;
            let x: usize = x.trim().parse().map_err(|_| Error::Input(format!("bad point {x:?}")))?;
            let set = rest
                .split(',')
                .filter(|c| !c.trim().is_empty())
                .map(|c| c.trim().parse().map_err(|_| Error::Input(format!("bad neighbor {c:?}"))))
                .collect::<Result<Vec<usize>>>()?;
            rows.push((x, set));
        }
        rows.sort_by_key(|(x, _)| *x);
        if rows.iter().enumerate().any(|(i, (x, _))| i != *x) {
            return Err(Error::Input("adjacency rows must cover points 0..n".into()));
        }
        PerturbationMap::new(rows.into_iter().map(|(_, s)| s).collect(), false)
    }
}

/// Individual-fairness similarity metric with target parameters and slacks.
#[derive(Clone, Debug, PartialEq)]
pub struct FairnessMetric {
    d: Vec<Vec<Q>>,
    pub alpha: Q,
    pub gamma: Q,
    pub eps_alpha: Q,
    pub eps_gamma: Q,
}

impl FairnessMetric {
    pub fn new(d: Vec<Vec<Q>>, alpha: Q, gamma: Q, eps_alpha: Q, eps_gamma: Q) -> Result<Self> {
        let n = d.len();
        for (i, row) in d.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input("similarity matrix must be square".into()));
            }
            if !row[i].is_zero() {
                return Err(Error::Input(format!("similarity diagonal must be zero at {i}")));
            }
            for (j, v) in row.iter().enumerate() {
                if v < &q_zero() {
                    return Err(Error::Input(format!("similarity entry ({i},{j}) negative")));
                }
                if *v != d[j][i] {
                    return Err(Error::Input(format!("similarity matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(FairnessMetric { d, alpha, gamma, eps_alpha, eps_gamma })
    }

    /// `d(x, x') = |x - x'| / scale_den`, a graded distance on the line.
    pub fn line(n: usize, scale_den: i64, alpha: Q, gamma: Q, eps_alpha: Q, eps_gamma: Q) -> Result<Self> {
        let d = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Q::new(((i as i64 - j as i64).abs()).into(), scale_den.into()))
                    .collect()
            })
            .collect();
        Self::new(d, alpha, gamma, eps_alpha, eps_gamma)
    }

    pub fn distance(&self, x: usize, x2: usize) -> &Q {
        &self.d[x][x2]
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

/// Expected worst-case loss over the perturbation neighborhood of each point.
pub fn robust_risk(
    h: &Hypothesis,
    joint: &JointDistribution,
    map: &PerturbationMap,
    loss: &Loss,
) -> Result<Q> {
    if !h.is_total() {
        return Err(Error::Precondition("robust risk needs a total hypothesis".into()));
    }
    if map.len() != h.len() {
        return Err(Error::Input("perturbation map size does not match instance space".into()));
    }
    let mut acc = q_zero();
    for x in 0..joint.space_size() {
        for y in 0..joint.label_count() {
            let mass = joint.mass(x, y);
            if mass.is_zero() {
                continue;
            }
            let worst = map
                .neighbors(x)
                .iter()
                .map(|&x2| loss.get(h.label(x2).expect("total"), y))
                .max()
                .expect("non-empty neighbor set");
            acc += mass * worst;
        }
    }
    Ok(acc)
}

/// Robust loss of one labeled point: worst loss over the neighborhood.
pub fn robust_point_loss_f64(h: &Hypothesis, x: usize, y: usize, map: &PerturbationMap, loss: &Loss) -> f64 {
    map.neighbors(x)
        .iter()
        .map(|&x2| loss.get_f64(h.label(x2).expect("total"), y))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Points where the hypothesis has zero robust loss against itself; the
/// robust closure restricts distributions to this set.
pub fn robust_support(h: &Hypothesis, map: &PerturbationMap, loss: &Loss) -> Result<Vec<usize>> {
    if !h.is_total() {
        return Err(Error::Precondition("robust support needs a total hypothesis".into()));
    }
    Ok((0..h.len())
        .filter(|&x| {
            let hx = h.label(x).expect("total");
            map.neighbors(x)
                .iter()
                .all(|&x2| loss.get(h.label(x2).expect("total"), hx).is_zero())
        })
        .collect())
}

/// Classification risk of a partial hypothesis; ⋆ predictions always count
/// as mistakes. Only defined for plain 0/1 loss.
pub fn partial_risk(h: &Hypothesis, joint: &JointDistribution, loss: &Loss) -> Result<Q> {
    if !loss.is_zero_one() {
        return Err(Error::Unsupported("partial risk is defined for classification loss only".into()));
    }
    let mut acc = q_zero();
    for x in 0..joint.space_size() {
        for y in 0..joint.label_count() {
            let mass = joint.mass(x, y);
            if mass.is_zero() {
                continue;
            }
            let mistake = match h.label(x) {
                Some(hx) => hx != y,
                None => true,
            };
            if mistake {
                acc += mass;
            }
        }
    }
    Ok(acc)
}

/// Empirical partial classification risk (⋆ counts as a mistake).
pub fn empirical_partial_risk_f64(h: &Hypothesis, sample: &[(usize, usize)]) -> f64 {
    if sample.is_empty() {
        return 0.0;
    }
    let mistakes = sample
        .iter()
        .filter(|&&(x, y)| h.label(x).map(|hx| hx != y).unwrap_or(true))
        .count();
    mistakes as f64 / sample.len() as f64
}

/// Exact probability over independent pairs `x, x' ~ D` that
/// `|h(x) - h(x')| > d(x, x') + gamma_slack`. The hypothesis is
/// `(alpha, gamma_slack)`-fair exactly when this is at most `alpha`.
pub fn fairness_violation(
    h: &Hypothesis,
    labels: &LabelSpace,
    marginal: &Distribution,
    metric: &FairnessMetric,
    gamma_slack: &Q,
) -> Result<Q> {
    let payloads = labels
        .payloads()
        .ok_or_else(|| Error::Unsupported("fairness violation needs numeric label payloads".into()))?;
    fairness_violation_with_payloads(h, payloads, marginal, metric, gamma_slack)
}

/// Exact fairness violation probability with the label payload table given
/// explicitly (`payloads[y]` is the numeric value of label `y`).
pub fn fairness_violation_with_payloads(
    h: &Hypothesis,
    payloads: &[Q],
    marginal: &Distribution,
    metric: &FairnessMetric,
    gamma_slack: &Q,
) -> Result<Q> {
    if metric.len() != h.len() {
        return Err(Error::Input("similarity matrix size does not match instance space".into()));
    }
    let mut acc = q_zero();
    for x in 0..h.len() {
        let px = marginal.mass(x);
        if px.is_zero() {
            continue;
        }
        let yx = h
            .label(x)
            .ok_or_else(|| Error::Unsupported("fairness violation needs a total hypothesis".into()))?;
        for x2 in 0..h.len() {
            let px2 = marginal.mass(x2);
            if px2.is_zero() {
                continue;
            }
            let yx2 = h.label(x2).expect("checked total above");
            let a = &payloads[yx];
            let b = &payloads[yx2];
            let gap = if a >= b { a - b } else { b - a };
            if gap > metric.distance(x, x2) + gamma_slack {
                acc += px * px2;
            }
        }
    }
    Ok(acc)
}
