//! Instance and label spaces.
//!
//! Instance spaces are finite and contiguous: point `x` is just the index
//! `0..n`. Label spaces are finite ordered sets; a label optionally carries
//! an exact numeric payload (grid points of a discretized real interval)
//! for losses and fairness checks that need arithmetic on labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{q_display, q_parse, Q};

/// A finite instance space; points are the indices `0..size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpace {
    size: usize,
}

impl InstanceSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Input("instance space must have at least one point".into()));
        }
        Ok(InstanceSpace { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn points(&self) -> impl Iterator<Item = usize> {
        0..self.size
    }

    pub fn check_point(&self, x: usize) -> Result<()> {
        if x < self.size {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "instance index {x} out of range (space size {})",
                self.size
            )))
        }
    }
}

/// A finite ordered label set, optionally with numeric payloads.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSpace {
    names: Vec<String>,
    payloads: Option<Vec<Q>>,
}

impl LabelSpace {
    /// Plain categorical labels named `0..size`.
    pub fn categorical(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Input("label space must have at least one label".into()));
        }
        Ok(LabelSpace {
            names: (0..size).map(|i| i.to_string()).collect(),
            payloads: None,
        })
    }

    /// Binary labels 0/1.
    pub fn binary() -> Self {
        Self::categorical(2).expect("binary space")
    }

    /// Labels carrying exact numeric payloads (values must be distinct).
    pub fn with_payloads(payloads: Vec<Q>) -> Result<Self> {
        if payloads.is_empty() {
            return Err(Error::Input("label space must have at least one label".into()));
        }
        let mut seen = payloads.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != payloads.len() {
            return Err(Error::Input("label payloads must be distinct".into()));
        }
        Ok(LabelSpace {
            names: payloads.iter().map(q_display).collect(),
            payloads: Some(payloads),
        })
    }

    /// Uniform payload grid `{0, 1/(steps-1), ..., 1}`.
    pub fn unit_grid(steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Input("unit grid needs at least two labels".into()));
        }
        Self::with_payloads(
            (0..steps)
                .map(|i| Q::new((i as i64).into(), ((steps - 1) as i64).into()))
                .collect(),
        )
    }

    /// Product label space with indices `b * second + r`; used by classes
    /// whose labels are pairs (first coordinate, second coordinate).
    pub fn pair(first: usize, second: usize) -> Result<Self> {
        if first == 0 || second == 0 {
            return Err(Error::Input("pair label space needs non-empty coordinates".into()));
        }
        Ok(LabelSpace {
            names: (0..first)
                .flat_map(|b| (0..second).map(move |r| format!("({b},{r})")))
                .collect(),
            payloads: None,
        })
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, y: usize) -> &str {
        &self.names[y]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn payload(&self, y: usize) -> Option<&Q> {
        self.payloads.as_ref().map(|p| &p[y])
    }

    pub fn payloads(&self) -> Option<&[Q]> {
        self.payloads.as_deref()
    }

    pub fn has_payloads(&self) -> bool {
        self.payloads.is_some()
    }

    pub fn check_label(&self, y: usize) -> Result<()> {
        if y < self.size() {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "label index {y} out of range (label space size {})",
                self.size()
            )))
        }
    }

    /// Parses a payload list like "0,0.5,1" into a payload-carrying space.
    pub fn parse_payloads(s: &str) -> Result<Self> {
        let payloads = s
            .split(',')
            .map(q_parse)
            .collect::<Result<Vec<_>>>()?;
        Self::with_payloads(payloads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn instance_space_rejects_empty() {
        assert!(InstanceSpace::new(0).is_err());
        assert_eq!(InstanceSpace::new(5).unwrap().size(), 5);
    }

    #[test]
    fn unit_grid_payloads() {
        let ls = LabelSpace::unit_grid(5).unwrap();
        assert_eq!(ls.size(), 5);
        assert_eq!(ls.payload(1), Some(&q(1, 4)));
        assert_eq!(ls.payload(4), Some(&q(1, 1)));
    }

    #[test]
    fn pair_space_indexing() {
        let ls = LabelSpace::pair(2, 2).unwrap();
        assert_eq!(ls.size(), 4);
        assert_eq!(ls.name(0), "(0,0)");
        assert_eq!(ls.name(3), "(1,1)");
    }

    #[test]
    fn duplicate_payloads_rejected() {
        assert!(LabelSpace::with_payloads(vec![q(1, 2), q(1, 2)]).is_err());
    }
}
