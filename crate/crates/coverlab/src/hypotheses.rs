//! Hypotheses, hypothesis classes, restrictions, and the growth function.
//!
//! A hypothesis is an explicit label vector over the instance space, with an
//! optional ⋆ (undefined) entry per point for partial classes. Classes are
//! finite and enumerable, either explicit or generated deterministically from
//! a structured family. Hypotheses compare by label vector everywhere.

use std::collections::HashSet;
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::space::{InstanceSpace, LabelSpace};

/// Sentinel for the ⋆ (undefined) label of a partial hypothesis.
pub const STAR: usize = usize::MAX;

/// One labeling of the instance space. Entry `STAR` marks an undefined point.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hypothesis {
    labels: Vec<usize>,
}

impl fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .labels
            .iter()
            .map(|&l| if l == STAR { "*".to_string() } else { l.to_string() })
            .collect();
        write!(f, "h[{}]", parts.join(","))
    }
}

impl Hypothesis {
    pub fn total(labels: Vec<usize>) -> Self {
        debug_assert!(labels.iter().all(|&l| l != STAR));
        Hypothesis { labels }
    }

    /// Builds from per-point labels where `None` marks ⋆.
    pub fn partial(labels: Vec<Option<usize>>) -> Self {
        Hypothesis {
            labels: labels.into_iter().map(|l| l.unwrap_or(STAR)).collect(),
        }
    }

    pub fn constant(space: usize, label: usize) -> Self {
        Hypothesis { labels: vec![label; space] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Label at `x`, or `None` when the point is ⋆.
    pub fn label(&self, x: usize) -> Option<usize> {
        let l = self.labels[x];
        if l == STAR {
            None
        } else {
            Some(l)
        }
    }

    /// Raw entry at `x` (may be `STAR`).
    pub fn raw(&self, x: usize) -> usize {
        self.labels[x]
    }

    pub fn raw_labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_total(&self) -> bool {
        self.labels.iter().all(|&l| l != STAR)
    }

    /// Points where the hypothesis is defined.
    pub fn support(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&x| self.labels[x] != STAR).collect()
    }

    /// Projection onto sample positions (with repeats, positionally).
    pub fn project(&self, sample: &[usize]) -> Vec<usize> {
        sample.iter().map(|&x| self.labels[x]).collect()
    }
}

/// Structured families that generate a class deterministically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// `h_t(x) = 1{x >= t}` for `t = 0..=n` over `X = [n]`; `n+1` members.
    Thresholds { n: usize },
    /// Indicators of half-open intervals `[a, b)` over `[n]`, plus all-zeros.
    Intervals { n: usize },
    /// Indicators of every subset of `[n]` (all-ones and all-zeros included).
    FiniteSupportIndicators { n: usize },
    /// Labels are pairs `(b, r)` with `b` pinned to `0`; members realize every
    /// second-coordinate assignment `r: [k] -> [second]`. `second^k` members.
    FirstBitZero { k: usize, first: usize, second: usize },
    /// Indicators of all `k`-subsets of `[n]`, optionally with the empty
    /// indicator (the all-zeros function) appended.
    KSetIndicators { n: usize, k: usize, with_empty: bool },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Thresholds { .. } => "thresholds",
            Family::Intervals { .. } => "intervals",
            Family::FiniteSupportIndicators { .. } => "finite_support_indicators",
            Family::FirstBitZero { .. } => "first_bit_zero",
            Family::KSetIndicators { .. } => "k_set_indicators",
        }
    }

    pub fn params(&self) -> String {
        match self {
            Family::Thresholds { n } | Family::Intervals { n } | Family::FiniteSupportIndicators { n } => {
                format!("n={n}")
            }
            Family::FirstBitZero { k, first, second } => format!("k={k},first={first},second={second}"),
            Family::KSetIndicators { n, k, with_empty } => format!("n={n},k={k},empty={with_empty}"),
        }
    }

    fn instance_size(&self) -> usize {
        match self {
            Family::Thresholds { n }
            | Family::Intervals { n }
            | Family::FiniteSupportIndicators { n }
            | Family::KSetIndicators { n, .. } => *n,
            Family::FirstBitZero { k, .. } => *k,
        }
    }

    fn label_size(&self) -> usize {
        match self {
            Family::FirstBitZero { first, second, .. } => first * second,
            _ => 2,
        }
    }

    fn generate(&self) -> Result<Vec<Hypothesis>> {
        let n = self.instance_size();
        if n == 0 {
            return Err(Error::Input("family over an empty instance space".into()));
        }
        let members = match self {
            Family::Thresholds { n } => (0..=*n)
                .map(|t| Hypothesis::total((0..*n).map(|x| usize::from(x >= t)).collect()))
                .collect(),
            Family::Intervals { n } => {
                let mut out = vec![Hypothesis::constant(*n, 0)];
                for a in 0..*n {
                    for b in (a + 1)..=*n {
                        out.push(Hypothesis::total(
                            (0..*n).map(|x| usize::from(x >= a && x < b)).collect(),
                        ));
                    }
                }
                out
            }
            Family::FiniteSupportIndicators { n } => {
                if *n > 20 {
                    return Err(Error::Resource(format!(
                        "finite-support family over [{n}] has 2^{n} members; budget is n <= 20"
                    )));
                }
                (0u64..(1u64 << *n))
                    .map(|mask| {
                        Hypothesis::total((0..*n).map(|x| ((mask >> x) & 1) as usize).collect())
                    })
                    .collect()
            }
            Family::FirstBitZero { k, first, second } => {
                if *first == 0 || *second == 0 {
                    return Err(Error::Input("first_bit_zero needs non-empty coordinates".into()));
                }
                let total = (*second as u128).checked_pow(*k as u32).ok_or_else(|| {
                    Error::Resource(format!("first_bit_zero family {second}^{k} overflows"))
                })?;
                if total > 1 << 20 {
                    return Err(Error::Resource(format!(
                        "first_bit_zero family has {total} members; budget is 2^20"
                    )));
                }
                (0..total as u64)
                    .map(|code| {
                        let mut c = code as usize;
                        let labels = (0..*k)
                            .map(|_| {
                                let r = c % second;
                                c /= second;
                                r // label index of (0, r) is 0*second + r
                            })
                            .collect();
                        Hypothesis::total(labels)
                    })
                    .collect()
            }
            Family::KSetIndicators { n, k, with_empty } => {
                if *k > *n {
                    return Err(Error::Input(format!("k-set indicators need k <= n, got k={k}, n={n}")));
                }
                let mut out: Vec<Hypothesis> = (0..*n)
                    .combinations(*k)
                    .map(|set| {
                        let mut labels = vec![0usize; *n];
                        for x in set {
                            labels[x] = 1;
                        }
                        Hypothesis::total(labels)
                    })
                    .collect();
                if *with_empty {
                    out.push(Hypothesis::constant(*n, 0));
                }
                out
            }
        };
        Ok(members)
    }
}

/// A finite, enumerable hypothesis class over a fixed instance and label space.
#[derive(Clone, Debug)]
pub struct HypothesisClass {
    space: InstanceSpace,
    labels: LabelSpace,
    members: Vec<Hypothesis>,
    family: Option<Family>,
}

impl HypothesisClass {
    /// Explicit class; members are deduplicated by label vector, keeping
    /// first occurrence order.
    pub fn explicit(space: InstanceSpace, labels: LabelSpace, members: Vec<Hypothesis>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Input("hypothesis class must be non-empty".into()));
        }
        let mut seen = HashSet::new();
        let mut dedup = Vec::new();
        for h in members {
            if h.len() != space.size() {
                return Err(Error::Input(format!(
                    "hypothesis length {} does not match instance space size {}",
                    h.len(),
                    space.size()
                )));
            }
            for x in 0..h.len() {
                if let Some(y) = h.label(x) {
                    labels.check_label(y)?;
                }
            }
            if seen.insert(h.clone()) {
                dedup.push(h);
            }
        }
        Ok(HypothesisClass { space, labels, members: dedup, family: None })
    }

    /// Family-generated class; generation is deterministic.
    pub fn from_family(family: Family) -> Result<Self> {
        let space = InstanceSpace::new(family.instance_size())?;
        let labels = LabelSpace::categorical(family.label_size())?;
        let members = family.generate()?;
        let mut cls = Self::explicit(space, labels, members)?;
        cls.family = Some(family);
        Ok(cls)
    }

    /// Family-generated class with a caller-supplied label space (e.g. payload
    /// grids for real-valued families); sizes must agree.
    pub fn from_family_with_labels(family: Family, labels: LabelSpace) -> Result<Self> {
        if labels.size() != family.label_size() {
            return Err(Error::Input(format!(
                "label space size {} does not match family label size {}",
                labels.size(),
                family.label_size()
            )));
        }
        let space = InstanceSpace::new(family.instance_size())?;
        let members = family.generate()?;
        let mut cls = Self::explicit(space, labels, members)?;
        cls.family = Some(family);
        Ok(cls)
    }

    pub fn thresholds(n: usize) -> Result<Self> {
        Self::from_family(Family::Thresholds { n })
    }

    pub fn space(&self) -> &InstanceSpace {
        &self.space
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.labels
    }

    pub fn family(&self) -> Option<&Family> {
        self.family.as_ref()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, i: usize) -> &Hypothesis {
        &self.members[i]
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }

    /// Index of a hypothesis in the class, comparing by label vector.
    pub fn index_of(&self, h: &Hypothesis) -> Option<usize> {
        self.members.iter().position(|m| m == h)
    }

    /// Derived class keeping the members at `keep` (in the given order).
    pub fn subclass(&self, keep: &[usize]) -> Result<Self> {
        let members = keep.iter().map(|&i| self.members[i].clone()).collect();
        Self::explicit(self.space, self.labels.clone(), members)
    }

    /// The distinct projections of every member onto the sample positions,
    /// in first-generating-member order. Repeats in the sample are kept
    /// positionally. Entries may be `STAR` for partial members.
    pub fn restrict(&self, sample: &[usize]) -> Result<Vec<Vec<usize>>> {
        for &x in sample {
            self.space.check_point(x)?;
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for h in &self.members {
            let proj = h.project(sample);
            if seen.insert(proj.clone()) {
                out.push(proj);
            }
        }
        Ok(out)
    }

    /// Like `restrict`, also reporting the first member index generating each
    /// distinct restriction.
    pub fn restrict_with_generators(&self, sample: &[usize]) -> Result<Vec<(Vec<usize>, usize)>> {
        for &x in sample {
            self.space.check_point(x)?;
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (i, h) in self.members.iter().enumerate() {
            let proj = h.project(sample);
            if seen.insert(proj.clone()) {
                out.push((proj, i));
            }
        }
        Ok(out)
    }

    /// Exact growth function: the maximum number of distinct restrictions over
    /// any sample of size `n`. Restrictions depend only on the set of distinct
    /// points, so the maximum is taken over point subsets of size
    /// `min(n, |X|)`. Enumeration is capped at `budget` subsets; families with
    /// a closed form skip enumeration.
    pub fn growth_function(&self, n: usize, budget: usize) -> Result<usize> {
        if n == 0 {
            return Ok(1);
        }
        let eff = n.min(self.space.size());
        if let Some(Family::Thresholds { n: pts }) = &self.family {
            // On j distinct points a threshold class realizes exactly j+1 labelings.
            return Ok((eff + 1).min(pts + 1));
        }
        let subsets = crate::rational::binomial(self.space.size(), eff);
        if subsets > num_bigint::BigInt::from(budget) {
            return Err(Error::Resource(format!(
                "growth function enumeration needs C({}, {eff}) = {subsets} subsets, over budget {budget}",
                self.space.size()
            )));
        }
        let mut best = 0usize;
        for subset in (0..self.space.size()).combinations(eff) {
            let count = self.restrict(&subset)?.len();
            if count > best {
                best = count;
                if best == self.members.len() {
                    break; // cannot grow past the class size
                }
            }
        }
        Ok(best)
    }

    /// Serializes to the line-oriented text format: `family:<tag>,<params>`
    /// for generated classes, otherwise one row of comma-separated label
    /// indices per member (`*` for undefined points).
    pub fn to_text(&self) -> String {
        if let Some(f) = &self.family {
            return format!("family:{},{}\n", f.tag(), f.params());
        }
        let mut out = String::new();
        for h in &self.members {
            let row: Vec<String> = (0..h.len())
                .map(|x| match h.label(x) {
                    Some(y) => y.to_string(),
                    None => "*".to_string(),
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the `to_text` format. Explicit classes get a binary or
    /// categorical label space sized by the largest label index seen.
    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.is_empty() {
            return Err(Error::Input("empty class text".into()));
        }
        if let Some(rest) = lines[0].strip_prefix("family:") {
            let mut parts = rest.split(',');
            let tag = parts.next().unwrap_or_default().trim();
            let mut kv = std::collections::BTreeMap::new();
            for p in parts {
                let (k, v) = p
                    .split_once('=')
                    .ok_or_else(|| Error::Input(format!("bad family parameter {p:?}")))?;
                kv.insert(k.trim().to_string(), v.trim().to_string());
            }
            let get = |k: &str| -> Result<usize> {
                kv.get(k)
                    .ok_or_else(|| Error::Input(format!("family missing parameter {k}")))?
                    .parse()
                    .map_err(|_| Error::Input(format!("bad value for family parameter {k}")))
            };
            let family = match tag {
                "thresholds" => Family::Thresholds { n: get("n")? },
                "intervals" => Family::Intervals { n: get("n")? },
                "finite_support_indicators" => Family::FiniteSupportIndicators { n: get("n")? },
                "first_bit_zero" => Family::FirstBitZero {
                    k: get("k")?,
                    first: get("first")?,
                    second: get("second")?,
                },
                "k_set_indicators" => Family::KSetIndicators {
                    n: get("n")?,
                    k: get("k")?,
                    with_empty: kv.get("empty").map(|v| v == "true").unwrap_or(false),
                },
                other => return Err(Error::Input(format!("unknown family tag {other:?}"))),
            };
            return Self::from_family(family);
        }
        let mut members = Vec::new();
        let mut max_label = 1usize;
        for line in &lines {
            let mut labels = Vec::new();
            for cell in line.split(',') {
                let cell = cell.trim();
                if cell == "*" {
                    labels.push(STAR);
                } else {
                    let y: usize = cell
                        .parse()
                        .map_err(|_| Error::Input(format!("bad label {cell:?}")))?;
                    max_label = max_label.max(y + 1);
                    labels.push(y);
                }
            }
            members.push(Hypothesis { labels });
        }
        let width = members[0].len();
        if members.iter().any(|m| m.len() != width) {
            return Err(Error::Input("member rows have unequal lengths".into()));
        }
        Self::explicit(
            InstanceSpace::new(width)?,
            LabelSpace::categorical(max_label.max(2))?,
            members,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thresholds_restrict_matches_enumeration() {
        // thresholds over [5] (6 members), sample (1,3) -> {(1,1),(0,1),(0,0)}
        let cls = HypothesisClass::thresholds(5).unwrap();
        assert_eq!(cls.len(), 6);
        let r = cls.restrict(&[1, 3]).unwrap();
        assert_eq!(r.len(), 3);
        let set: HashSet<Vec<usize>> = r.into_iter().collect();
        assert!(set.contains(&vec![1, 1]));
        assert!(set.contains(&vec![0, 1]));
        assert!(set.contains(&vec![0, 0]));
    }

    #[test]
    fn empty_sample_has_one_empty_restriction() {
        let cls = HypothesisClass::thresholds(4).unwrap();
        assert_eq!(cls.restrict(&[]).unwrap(), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn singleton_class_has_one_restriction() {
        let space = InstanceSpace::new(3).unwrap();
        let cls = HypothesisClass::explicit(
            space,
            LabelSpace::binary(),
            vec![Hypothesis::total(vec![0, 1, 0])],
        )
        .unwrap();
        assert_eq!(cls.restrict(&[0, 2, 1, 0]).unwrap().len(), 1);
    }

    #[test]
    fn restrict_rejects_bad_index() {
        let cls = HypothesisClass::thresholds(4).unwrap();
        assert!(cls.restrict(&[7]).is_err());
    }

    #[test]
    fn growth_thresholds_closed_form() {
        let cls = HypothesisClass::thresholds(10).unwrap();
        assert_eq!(cls.growth_function(4, 1_000_000).unwrap(), 5);
        assert_eq!(cls.growth_function(0, 1_000_000).unwrap(), 1);
        assert_eq!(cls.growth_function(100, 1_000_000).unwrap(), 11);
    }

    #[test]
    fn growth_matches_exhaustive_for_thresholds() {
        // closed form vs exhaustive enumeration on a class without the tag
        let generated = HypothesisClass::thresholds(8).unwrap();
        let explicit = HypothesisClass::explicit(
            *generated.space(),
            generated.label_space().clone(),
            generated.members().to_vec(),
        )
        .unwrap();
        for n in 0..6 {
            assert_eq!(
                explicit.growth_function(n, 1_000_000).unwrap(),
                generated.growth_function(n, 1_000_000).unwrap(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn growth_full_binary_class_attains_ceiling() {
        let cls = HypothesisClass::from_family(Family::FiniteSupportIndicators { n: 2 }).unwrap();
        assert_eq!(cls.growth_function(2, 1_000).unwrap(), 4);
    }

    #[test]
    fn growth_budget_error_names_budget() {
        let cls = HypothesisClass::from_family(Family::FiniteSupportIndicators { n: 18 }).unwrap();
        let err = cls.growth_function(9, 10).unwrap_err();
        assert!(matches!(err, Error::Resource(_)), "{err}");
        assert!(err.to_string().contains("budget 10"));
    }

    #[test]
    fn first_bit_zero_family_sizes() {
        let cls = HypothesisClass::from_family(Family::FirstBitZero { k: 3, first: 2, second: 2 }).unwrap();
        assert_eq!(cls.len(), 8);
        assert_eq!(cls.label_space().size(), 4);
        // every member's labels stay in the (0, r) block, i.e. index < second
        for h in cls.members() {
            assert!(h.raw_labels().iter().all(|&l| l < 2));
        }
    }

    #[test]
    fn k_set_indicators_count() {
        let cls =
            HypothesisClass::from_family(Family::KSetIndicators { n: 5, k: 2, with_empty: true }).unwrap();
        assert_eq!(cls.len(), 11); // C(5,2) + empty
    }

    #[test]
    fn family_text_round_trip() {
        let cls = HypothesisClass::thresholds(7).unwrap();
        let text = cls.to_text();
        assert!(text.starts_with("family:thresholds,n=7"));
        let back = HypothesisClass::from_text(&text).unwrap();
        assert_eq!(back.members(), cls.members());
    }

    #[test]
    fn explicit_text_round_trip_with_stars() {
        let space = InstanceSpace::new(3).unwrap();
        let cls = HypothesisClass::explicit(
            space,
            LabelSpace::binary(),
            vec![
                Hypothesis::total(vec![0, 1, 1]),
                Hypothesis::partial(vec![Some(1), None, Some(0)]),
            ],
        )
        .unwrap();
        let back = HypothesisClass::from_text(&cls.to_text()).unwrap();
        assert_eq!(back.members(), cls.members());
    }

    proptest! {
        // restriction count is monotone: a sub-sample never exceeds the full sample
        #[test]
        fn restrict_monotone(sample in proptest::collection::vec(0usize..8, 0..7), cut in 0usize..7) {
            let cls = HypothesisClass::thresholds(8).unwrap();
            let cut = cut.min(sample.len());
            let sub = &sample[..cut];
            let full = cls.restrict(&sample).unwrap().len();
            let part = cls.restrict(sub).unwrap().len();
            prop_assert!(part <= full);
        }

        // growth function is bounded by |Y|^n and |H|
        #[test]
        fn growth_bounds(n in 0usize..5) {
            let cls = HypothesisClass::from_family(Family::KSetIndicators { n: 6, k: 2, with_empty: true }).unwrap();
            let g = cls.growth_function(n, 1_000_000).unwrap();
            prop_assert!(g <= cls.len());
            prop_assert!(g <= 2usize.pow(n as u32));
        }
    }

    #[test]
    fn growth_saturates_at_class_size() {
        let cls = HypothesisClass::from_family(Family::KSetIndicators { n: 6, k: 1, with_empty: true }).unwrap();
        // once n covers the whole space the growth function equals |H|
        assert_eq!(cls.growth_function(6, 1_000_000).unwrap(), cls.len());
    }
}
