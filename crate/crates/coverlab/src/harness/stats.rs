//! Statistical acceptance machinery: every frequency assertion in the suite
//! routes through the Hoeffding check below (exact computations carry zero
//! slack and bypass it).

use crate::error::{Error, Result};

/// Confidence level used by every statistical acceptance assertion.
pub const DEFAULT_CONFIDENCE: f64 = 1e-4;

/// One-sided Hoeffding slack `sqrt(ln(1/confidence) / (2 trials))`.
pub fn hoeffding_slack(confidence: f64, trials: u64) -> f64 {
    ((1.0 / confidence).ln() / (2.0 * trials as f64)).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HoeffdingCheck {
    pub frequency: f64,
    pub slack: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Passes iff the empirical frequency is at least `target - slack`.
pub fn hoeffding_check(successes: u64, trials: u64, target: f64, confidence: f64) -> Result<HoeffdingCheck> {
    if trials == 0 {
        return Err(Error::Input("hoeffding check needs at least one trial".into()));
    }
    if successes > trials {
        return Err(Error::Input(format!("successes {successes} exceed trials {trials}")));
    }
    let frequency = successes as f64 / trials as f64;
    let slack = hoeffding_slack(confidence, trials);
    let bound = target - slack;
    Ok(HoeffdingCheck { frequency, slack, bound, pass: frequency >= bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_successes_pass_any_target() {
        let c = hoeffding_check(500, 500, 0.999, 1e-4).unwrap();
        assert!(c.pass);
    }

    #[test]
    fn spec_example_values() {
        // 450/500 at target 0.9, confidence 1e-4: slack ~ 0.0962,
        // bound 0.8038, frequency 0.9 -> pass
        let c = hoeffding_check(450, 500, 0.9, 1e-4).unwrap();
        assert!((c.slack - 0.09597).abs() < 1e-4);
        assert!((c.bound - 0.80403).abs() < 1e-4);
        assert!(c.pass);
    }

    #[test]
    fn zero_successes_fail() {
        let c = hoeffding_check(0, 500, 0.9, 1e-4).unwrap();
        assert!(!c.pass);
    }

    #[test]
    fn input_validation() {
        assert!(hoeffding_check(1, 0, 0.9, 1e-4).is_err());
        assert!(hoeffding_check(5, 4, 0.9, 1e-4).is_err());
    }
}
