//! TOML experiment configuration and its resolution into concrete objects.
//!
//! Exact quantities (noise rates, tolerances, fairness parameters) are given
//! as rational strings ("1/10", "0.25") and parsed exactly; accuracy and
//! confidence parameters that only feed floating-point sample-size formulas
//! are plain numbers.

use serde::Deserialize;

use crate::dist::{Adversary, Distribution, JointDistribution, MaliciousOracle};
use crate::error::{Error, Result};
use crate::hypotheses::{Family, HypothesisClass};
use crate::learner::{discretize, DiscreteLearner, RealizableLearner};
use crate::loss::{FairnessMetric, Loss, PerturbationMap};
use crate::rational::{q_parse, Q};
use crate::reduction::{ReductionConfig, SubsetMode};
use crate::space::LabelSpace;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One of: agnostic, pseudometric, doubly_bounded, malicious, robust,
    /// partial, semiprivate, stable, covshift, sq, fair.
    pub experiment: String,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub class: ClassSpec,
    pub distribution: DistributionSpec,
    pub loss: LossSpec,
    pub learner: Option<LearnerSpec>,
    pub params: Params,
    /// Public (unlabeled) marginal for the covariate-shift path; defaults to
    /// the joint's marginal elsewhere.
    pub public: Option<MarginalSpec>,
    pub robustness: Option<RobustSpec>,
    pub fairness: Option<FairnessSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    /// thresholds | intervals | finite_support_indicators | first_bit_zero |
    /// k_set_indicators | pair_block | text
    pub family: String,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub first: Option<usize>,
    pub second: Option<usize>,
    pub empty: Option<bool>,
    /// Inline class text (see `HypothesisClass::from_text`).
    pub text: Option<String>,
    /// Attach unit-grid payloads of this size to the label space.
    pub payload_grid: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    /// uniform | weights | rows
    pub marginal: String,
    pub weights: Option<Vec<u64>>,
    /// Inline `point,num,den` rows (see `Distribution::from_rows`).
    pub rows: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub marginal: MarginalSpec,
    /// member | flip_noise
    pub labels: String,
    /// Index of the labeling member.
    pub member: Option<usize>,
    /// Exact flip rate for binary labels, e.g. "1/10".
    pub noise: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    /// zero_one | absolute | squared | asymmetric | ternary_pair | csv
    pub kind: String,
    pub cost01: Option<String>,
    pub cost10: Option<String>,
    pub c: Option<String>,
    pub first: Option<usize>,
    pub second: Option<usize>,
    /// Inline CSV table (header = label names).
    pub csv: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    /// consistent_erm | benedek_itai | partial_consistent_erm |
    /// robust_consistent_erm | discretized(eps=...) | sq_member_scan |
    /// sq_pair_probe
    pub name: String,
    /// Discretization scale for `discretized`; the inline
    /// `discretized(eps=...)` form sets it too.
    pub eps: Option<String>,
}

impl LearnerSpec {
    /// Splits the `discretized(eps=0.05)` inline form into name and scale.
    pub fn normalized(&self) -> (String, Option<String>) {
        if let Some(inner) = self.name.strip_prefix("discretized(").and_then(|s| s.strip_suffix(')')) {
            let eps = inner.strip_prefix("eps=").map(|v| v.trim().to_string());
            return ("discretized".to_string(), eps.or_else(|| self.eps.clone()));
        }
        (self.name.clone(), self.eps.clone())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub eps: f64,
    pub delta: f64,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    /// SQ tolerance, exact (e.g. "1/4").
    pub tau: Option<String>,
    pub m_u: Option<usize>,
    pub m_l: Option<usize>,
    pub subset_budget: Option<usize>,
    /// all | fixed (subset enumeration for robust/partial)
    pub subset_mode: Option<String>,
    /// worst_label | fixed_pair (malicious adversary)
    pub adversary: Option<String>,
    pub fixed_x: Option<usize>,
    pub fixed_y: Option<usize>,
    pub confidence: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustSpec {
    /// identity | line_graph | text
    pub map: String,
    pub text: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessSpec {
    /// line (d = |x - x'| / scale_den)
    pub metric: String,
    pub scale_den: Option<i64>,
    pub alpha: String,
    pub gamma: String,
    pub eps_alpha: Option<String>,
    pub eps_gamma: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let class = self.class.build()?;
        let loss = self.loss.build(&class)?;
        let joint = self.distribution.build_joint(&class)?;
        let public = match &self.public {
            Some(spec) => Some(spec.build(class.space().size())?),
            None => None,
        };
        let mut cfg = ReductionConfig::new(self.params.eps, self.params.delta)?;
        cfg.alpha = self.params.alpha;
        cfg.eta = self.params.eta;
        cfg.m_u_override = self.params.m_u;
        cfg.m_l_override = self.params.m_l;
        if let Some(b) = self.params.subset_budget {
            cfg.subset_budget = b;
        }
        let subset_mode = match self.params.subset_mode.as_deref() {
            None | Some("all") => SubsetMode::All,
            Some("fixed") => SubsetMode::FixedSize(0), // size filled by the path
            Some(other) => return Err(Error::Config(format!("unknown subset mode {other:?}"))),
        };
        let tau = self.params.tau.as_deref().map(q_parse).transpose()?;
        let metric = match &self.fairness {
            Some(spec) => Some(spec.build(class.space().size())?),
            None => None,
        };
        let map = match &self.robustness {
            Some(spec) => Some(spec.build(class.space().size())?),
            None => None,
        };
        Ok(Resolved {
            kind: self.experiment.clone(),
            trials: self.trials.unwrap_or(500),
            seed: self.seed.unwrap_or(0),
            confidence: self.params.confidence.unwrap_or(super::stats::DEFAULT_CONFIDENCE),
            class,
            joint,
            public,
            loss,
            learner: self.learner.clone(),
            cfg,
            subset_mode,
            tau,
            metric,
            map,
            adversary: self.params.adversary.clone(),
            fixed_pair: match (self.params.fixed_x, self.params.fixed_y) {
                (Some(x), Some(y)) => Some((x, y)),
                _ => None,
            },
        })
    }
}

impl ClassSpec {
    pub fn build(&self) -> Result<HypothesisClass> {
        let need_n = || self.n.ok_or_else(|| Error::Config("class spec needs n".into()));
        let mut class = match self.family.as_str() {
            "thresholds" => HypothesisClass::from_family(Family::Thresholds { n: need_n()? })?,
            "intervals" => HypothesisClass::from_family(Family::Intervals { n: need_n()? })?,
            "finite_support_indicators" => {
                HypothesisClass::from_family(Family::FiniteSupportIndicators { n: need_n()? })?
            }
            "first_bit_zero" => HypothesisClass::from_family(Family::FirstBitZero {
                k: self.k.ok_or_else(|| Error::Config("first_bit_zero needs k".into()))?,
                first: self.first.unwrap_or(2),
                second: self.second.unwrap_or(2),
            })?,
            "k_set_indicators" => HypothesisClass::from_family(Family::KSetIndicators {
                n: need_n()?,
                k: self.k.ok_or_else(|| Error::Config("k_set_indicators needs k".into()))?,
                with_empty: self.empty.unwrap_or(false),
            })?,
            "pair_block" => crate::reduction::sq::pair_block_class(),
            "text" => HypothesisClass::from_text(
                self.text.as_deref().ok_or_else(|| Error::Config("text class needs text".into()))?,
            )?,
            other => return Err(Error::Config(format!("unknown class family {other:?}"))),
        };
        if let Some(grid) = self.payload_grid {
            if grid != class.label_space().size() {
                return Err(Error::Config(format!(
                    "payload grid size {grid} does not match label count {}",
                    class.label_space().size()
                )));
            }
            let labels = LabelSpace::unit_grid(grid)?;
            class = HypothesisClass::explicit(*class.space(), labels, class.members().to_vec())?;
        }
        Ok(class)
    }
}

impl MarginalSpec {
    pub fn build(&self, n: usize) -> Result<Distribution> {
        match self.marginal.as_str() {
            "uniform" => Distribution::uniform(n),
            "weights" => {
                let w = self
                    .weights
                    .as_ref()
                    .ok_or_else(|| Error::Config("weights marginal needs weights".into()))?;
                if w.len() != n {
                    return Err(Error::Config(format!(
                        "weights cover {} points, instance space has {n}",
                        w.len()
                    )));
                }
                Distribution::from_weights(w)
            }
            "rows" => Distribution::from_rows(
                self.rows.as_deref().ok_or_else(|| Error::Config("rows marginal needs rows".into()))?,
            ),
            other => Err(Error::Config(format!("unknown marginal kind {other:?}"))),
        }
    }
}

impl DistributionSpec {
    pub fn build_joint(&self, class: &HypothesisClass) -> Result<JointDistribution> {
        let marginal = self.marginal.build(class.space().size())?;
        let member = class
            .members()
            .get(self.member.unwrap_or(0))
            .ok_or_else(|| Error::Config("labeling member index out of range".into()))?;
        match self.labels.as_str() {
            "member" => {
                JointDistribution::realizable(&marginal, member, class.label_space().size())
            }
            "flip_noise" => {
                let rate = q_parse(
                    self.noise.as_deref().ok_or_else(|| Error::Config("flip_noise needs noise".into()))?,
                )?;
                JointDistribution::with_flip_noise(&marginal, member, &rate)
            }
            other => Err(Error::Config(format!("unknown labeling kind {other:?}"))),
        }
    }
}

impl LossSpec {
    pub fn build(&self, class: &HypothesisClass) -> Result<Loss> {
        let labels = class.label_space();
        match self.kind.as_str() {
            "zero_one" => Ok(Loss::zero_one(labels.size())),
            "absolute" => Loss::absolute(labels),
            "squared" => Loss::squared(labels),
            "asymmetric" => Loss::asymmetric_binary(
                q_parse(self.cost01.as_deref().unwrap_or("1"))?,
                q_parse(self.cost10.as_deref().unwrap_or("1"))?,
            ),
            "ternary_pair" => Loss::ternary_pair(
                self.first.unwrap_or(2),
                self.second.unwrap_or(2),
                q_parse(self.c.as_deref().unwrap_or("3"))?,
            ),
            "csv" => {
                let (loss, _names) = Loss::from_csv(
                    self.csv.as_deref().ok_or_else(|| Error::Config("csv loss needs csv".into()))?,
                )?;
                if loss.size() != labels.size() {
                    return Err(Error::Config("csv loss size does not match label space".into()));
                }
                Ok(loss)
            }
            other => Err(Error::Config(format!("unknown loss kind {other:?}"))),
        }
    }
}

impl RobustSpec {
    pub fn build(&self, n: usize) -> Result<PerturbationMap> {
        match self.map.as_str() {
            "identity" => Ok(PerturbationMap::identity(n)),
            "line_graph" => Ok(PerturbationMap::line_graph(n)),
            "text" => PerturbationMap::from_text(
                self.text.as_deref().ok_or_else(|| Error::Config("text map needs text".into()))?,
            ),
            other => Err(Error::Config(format!("unknown perturbation map {other:?}"))),
        }
    }
}

impl FairnessSpec {
    pub fn build(&self, n: usize) -> Result<FairnessMetric> {
        match self.metric.as_str() {
            "line" => FairnessMetric::line(
                n,
                self.scale_den.unwrap_or(1),
                q_parse(&self.alpha)?,
                q_parse(&self.gamma)?,
                q_parse(self.eps_alpha.as_deref().unwrap_or("0"))?,
                q_parse(self.eps_gamma.as_deref().unwrap_or("0"))?,
            ),
            other => Err(Error::Config(format!("unknown fairness metric {other:?}"))),
        }
    }
}

/// Everything an experiment run needs, resolved into concrete objects.
#[derive(Clone)]
pub struct Resolved {
    pub kind: String,
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
    pub class: HypothesisClass,
    pub joint: JointDistribution,
    pub public: Option<Distribution>,
    pub loss: Loss,
    pub learner: Option<LearnerSpec>,
    pub cfg: ReductionConfig,
    pub subset_mode: SubsetMode,
    pub tau: Option<Q>,
    pub metric: Option<FairnessMetric>,
    pub map: Option<PerturbationMap>,
    pub adversary: Option<String>,
    pub fixed_pair: Option<(usize, usize)>,
}

impl Resolved {
    /// Builds the configured sample learner (`consistent_erm` by default).
    pub fn build_learner(&self) -> Result<RealizableLearner> {
        let name = self
            .learner
            .as_ref()
            .map(|l| l.normalized().0)
            .unwrap_or_else(|| "consistent_erm".to_string());
        match name.as_str() {
            "consistent_erm" => RealizableLearner::consistent_erm(&self.class, &self.loss),
            "benedek_itai" => RealizableLearner::benedek_itai(self.class.space().size()),
            "partial_consistent_erm" => RealizableLearner::partial_consistent_erm(&self.class),
            "robust_consistent_erm" => {
                let map = self
                    .map
                    .as_ref()
                    .ok_or_else(|| Error::Config("robust learner needs a perturbation map".into()))?;
                RealizableLearner::robust_consistent_erm(&self.class, map, &self.loss)
            }
            other => Err(Error::Config(format!("unknown learner {other:?}"))),
        }
    }

    /// Builds a discretized learner when the config names one.
    pub fn build_discrete(&self) -> Result<DiscreteLearner> {
        let spec = self
            .learner
            .as_ref()
            .ok_or_else(|| Error::Config("discretized path needs a learner spec".into()))?;
        let (name, eps) = spec.normalized();
        if name != "discretized" {
            return Err(Error::Config(format!("expected learner \"discretized\", got {:?}", spec.name)));
        }
        let eps = q_parse(eps.as_deref().unwrap_or("0"))?;
        discretize(&self.class, &self.loss, &eps)
    }

    /// Builds the malicious oracle for the configured adversary.
    pub fn build_malicious_oracle(&self) -> Result<MaliciousOracle> {
        let eta = self
            .cfg
            .eta
            .ok_or_else(|| Error::Config("malicious experiment needs eta".into()))?;
        let adversary = match self.adversary.as_deref().unwrap_or("worst_label") {
            "worst_label" => {
                let (_, argmin) = crate::dist::opt_risk(&self.class, &self.joint, &self.loss)?;
                Adversary::worst_label(
                    self.class.member(argmin[0]),
                    &self.loss,
                    self.class.space().size(),
                    self.class.label_space().size(),
                )?
            }
            "fixed_pair" => {
                let (x, y) = self
                    .fixed_pair
                    .ok_or_else(|| Error::Config("fixed_pair adversary needs fixed_x/fixed_y".into()))?;
                Adversary::FixedPair { x, y }
            }
            other => return Err(Error::Config(format!("unknown adversary {other:?}"))),
        };
        MaliciousOracle::new(self.joint.clone(), eta, adversary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "agnostic"
trials = 10
seed = 7

[class]
family = "thresholds"
n = 20

[distribution]
marginal = "uniform"
labels = "flip_noise"
member = 8
noise = "1/10"

[loss]
kind = "zero_one"

[learner]
name = "consistent_erm"

[params]
eps = 0.15
delta = 0.1
"#;

    #[test]
    fn parses_and_resolves_base_config() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.kind, "agnostic");
        assert_eq!(resolved.trials, 10);
        assert_eq!(resolved.class.len(), 21);
        assert_eq!(resolved.cfg.eps, 0.15);
        resolved.build_learner().unwrap();
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = BASE.replace("[params]", "[params]\nbogus = 3");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn class_spec_variants() {
        let spec = ClassSpec {
            family: "k_set_indicators".into(),
            n: Some(6),
            k: Some(2),
            first: None,
            second: None,
            empty: Some(true),
            text: None,
            payload_grid: None,
        };
        assert_eq!(spec.build().unwrap().len(), 16);
        let text_spec = ClassSpec {
            family: "text".into(),
            n: None,
            k: None,
            first: None,
            second: None,
            empty: None,
            text: Some("0,0,1\n1,1,0\n".into()),
            payload_grid: None,
        };
        assert_eq!(text_spec.build().unwrap().len(), 2);
    }

    #[test]
    fn inline_discretized_grammar() {
        let spec = LearnerSpec { name: "discretized(eps=0.05)".into(), eps: None };
        assert_eq!(spec.normalized(), ("discretized".to_string(), Some("0.05".to_string())));
        let plain = LearnerSpec { name: "discretized".into(), eps: Some("1/8".into()) };
        assert_eq!(plain.normalized(), ("discretized".to_string(), Some("1/8".to_string())));
    }

    #[test]
    fn payload_grid_attaches_payloads() {
        let spec = ClassSpec {
            family: "text".into(),
            n: None,
            k: None,
            first: None,
            second: None,
            empty: None,
            text: Some("0,1,2\n2,1,0\n".into()),
            payload_grid: Some(3),
        };
        let cls = spec.build().unwrap();
        assert!(cls.label_space().has_payloads());
    }
}
