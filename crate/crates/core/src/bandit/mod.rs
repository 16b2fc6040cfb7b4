//! Bandits over modulation arms.
//!
//! [`AdaptiveBandit`] is the non-stationary bandit with an adaptive window:
//! arms are preferred in proportion to how often they recently produced
//! fitness at or above the window mean. [`FactoredBandit`] runs one of them
//! per modulation axis. [`Uniform`], [`Ucb`], [`Thompson`] and [`FixedArm`]
//! are stationary baselines sharing the [`ArmSelector`] interface.

mod adaptive;
mod baselines;
mod factored;

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::RngCore;

use crate::{Error, Result};

pub use adaptive::{next_horizon, shrink_candidate, AdaptiveBandit, AdaptiveConfig, FitnessRecord, WindowStats};
pub use baselines::{FixedArm, Thompson, Ucb, Uniform};
pub use factored::FactoredBandit;

/// Common interface of every flat arm-selection strategy.
pub trait ArmSelector: fmt::Debug + Send {
    fn num_arms(&self) -> usize;

    /// Current selection probabilities; sums to one.
    fn probabilities(&self) -> Vec<f64>;

    fn sample(&mut self, rng: &mut dyn RngCore) -> usize;

    fn update(&mut self, arm: usize, fitness: f64) -> Result<()>;

    /// Window length, for strategies that have one.
    fn horizon(&self) -> Option<f64> {
        None
    }
}

pub(crate) fn check_update(num_arms: usize, arm: usize, fitness: f64) -> Result<()> {
    if arm >= num_arms {
        return Err(Error::OutOfRange {
            what: "bandit arms",
            index: arm,
            len: num_arms,
        });
    }
    if !fitness.is_finite() {
        return Err(Error::NonFinite("fitness"));
    }
    Ok(())
}

/// Which arm-selection strategy an experiment runs.
#[derive(Debug, Clone, PartialEq)]
pub enum BanditKind {
    Adaptive,
    FactoredAdaptive,
    Uniform,
    Ucb { c: f64 },
    Thompson,
    FixedArm(usize),
}

impl BanditKind {
    /// Build a flat selector over `num_arms` arms. `FactoredAdaptive` has no
    /// flat form and is rejected.
    pub fn build_flat(&self, num_arms: usize) -> Result<Box<dyn ArmSelector>> {
        if num_arms == 0 {
            return Err(Error::Empty("bandit arms"));
        }
        Ok(match *self {
            BanditKind::Adaptive => Box::new(AdaptiveBandit::new(num_arms)),
            BanditKind::Uniform => Box::new(Uniform::new(num_arms)),
            BanditKind::Ucb { c } => Box::new(Ucb::new(num_arms, c)),
            BanditKind::Thompson => Box::new(Thompson::new(num_arms)),
            BanditKind::FixedArm(arm) => Box::new(FixedArm::new(num_arms, arm)?),
            BanditKind::FactoredAdaptive => {
                return Err(Error::InvalidArgument(
                    "factored bandit has no flat form".into(),
                ))
            }
        })
    }

    pub fn is_factored(&self) -> bool {
        matches!(self, BanditKind::FactoredAdaptive)
    }
}

impl fmt::Display for BanditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BanditKind::Adaptive => f.write_str("adaptive"),
            BanditKind::FactoredAdaptive => f.write_str("factored-adaptive"),
            BanditKind::Uniform => f.write_str("uniform"),
            BanditKind::Ucb { c } if *c == 1.0 => f.write_str("ucb"),
            BanditKind::Ucb { c } => write!(f, "ucb:{c}"),
            BanditKind::Thompson => f.write_str("thompson"),
            BanditKind::FixedArm(i) => write!(f, "fixed-arm:{i}"),
        }
    }
}

impl FromStr for BanditKind {
    type Err = Error;

    /// Accepts `adaptive`, `factored-adaptive` (or `factored`), `uniform`,
    /// `ucb[:c]`, `thompson` and `fixed-arm:<index>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let bad = || Error::InvalidArgument(alloc::format!("unknown bandit kind `{s}`"));
        match (head, arg) {
            ("adaptive", None) => Ok(BanditKind::Adaptive),
            ("factored-adaptive" | "factored", None) => Ok(BanditKind::FactoredAdaptive),
            ("uniform", None) => Ok(BanditKind::Uniform),
            ("ucb", None) => Ok(BanditKind::Ucb { c: 1.0 }),
            ("ucb", Some(c)) => c
                .parse::<f64>()
                .ok()
                .filter(|c| c.is_finite() && *c >= 0.0)
                .map(|c| BanditKind::Ucb { c })
                .ok_or_else(bad),
            ("thompson", None) => Ok(BanditKind::Thompson),
            ("fixed-arm" | "fixed", Some(i)) => i.parse().map(BanditKind::FixedArm).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn kind_round_trips_through_text() {
        for kind in [
            BanditKind::Adaptive,
            BanditKind::FactoredAdaptive,
            BanditKind::Uniform,
            BanditKind::Ucb { c: 1.0 },
            BanditKind::Ucb { c: 0.5 },
            BanditKind::Thompson,
            BanditKind::FixedArm(7),
        ] {
            assert_eq!(kind.to_string().parse::<BanditKind>().unwrap(), kind);
        }
        assert!("exp3".parse::<BanditKind>().is_err());
        assert!("fixed-arm:x".parse::<BanditKind>().is_err());
    }

    #[test]
    fn factored_has_no_flat_form() {
        assert!(BanditKind::FactoredAdaptive.build_flat(3).is_err());
        assert!(BanditKind::Adaptive.build_flat(0).is_err());
        assert!(BanditKind::FixedArm(3).build_flat(3).is_err());
    }
}
