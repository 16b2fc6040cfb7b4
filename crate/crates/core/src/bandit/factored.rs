use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{AdaptiveBandit, AdaptiveConfig};
use crate::modulation::{Modulation, ModulationSpace};
use crate::{Error, Result};

/// One adaptive sub-bandit per modulation axis.
///
/// A full modulation is assembled from independent per-axis draws. Every
/// sub-bandit receives the same scalar fitness and keeps its own horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredBandit {
    sub_bandits: Vec<AdaptiveBandit>,
}

impl FactoredBandit {
    pub fn new(arm_counts: &[usize]) -> Result<Self> {
        Self::with_config(arm_counts, AdaptiveConfig::default())
    }

    pub fn with_config(arm_counts: &[usize], config: AdaptiveConfig) -> Result<Self> {
        if arm_counts.is_empty() {
            return Err(Error::Empty("factored dimensions"));
        }
        if arm_counts.contains(&0) {
            return Err(Error::Empty("sub-bandit arms"));
        }
        Ok(Self {
            sub_bandits: arm_counts
                .iter()
                .map(|&k| AdaptiveBandit::with_config(k, config))
                .collect(),
        })
    }

    pub fn for_space(space: &ModulationSpace) -> Result<Self> {
        Self::new(&space.arm_counts())
    }

    pub fn from_sub_bandits(sub_bandits: Vec<AdaptiveBandit>) -> Result<Self> {
        if sub_bandits.is_empty() {
            return Err(Error::Empty("factored dimensions"));
        }
        Ok(Self { sub_bandits })
    }

    pub fn sub_bandits(&self) -> &[AdaptiveBandit] {
        &self.sub_bandits
    }

    pub fn num_dimensions(&self) -> usize {
        self.sub_bandits.len()
    }

    /// Arms actually modelled: the sum of sub-bandit sizes.
    pub fn modeled_arms(&self) -> usize {
        self.sub_bandits.iter().map(AdaptiveBandit::num_arms).sum()
    }

    /// One arm per dimension from one uniform draw each.
    pub fn sample_with_uniforms(&self, uniforms: &[f64]) -> Result<Vec<usize>> {
        if uniforms.len() != self.sub_bandits.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sub_bandits.len(),
                got: uniforms.len(),
            });
        }
        Ok(self
            .sub_bandits
            .iter()
            .zip(uniforms)
            .map(|(b, &u)| b.sample_with_uniform(u))
            .collect())
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.sub_bandits
            .iter()
            .map(|b| b.sample_with_uniform(rng.random::<f64>()))
            .collect()
    }

    /// Sample per-dimension arms and compose them over `space`.
    pub fn sample_modulation<R: RngCore + ?Sized>(
        &self,
        space: &ModulationSpace,
        rng: &mut R,
    ) -> Result<(Modulation, Vec<usize>)> {
        if space.axes().len() != self.sub_bandits.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sub_bandits.len(),
                got: space.axes().len(),
            });
        }
        let arms = self.sample(rng);
        Ok((space.compose(&arms)?, arms))
    }

    /// Feed the same fitness to every sub-bandit.
    pub fn update(&mut self, arms: &[usize], fitness: f64) -> Result<()> {
        if arms.len() != self.sub_bandits.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sub_bandits.len(),
                got: arms.len(),
            });
        }
        for (b, &arm) in self.sub_bandits.iter().zip(arms) {
            super::check_update(b.num_arms(), arm, fitness)?;
        }
        for (b, &arm) in self.sub_bandits.iter_mut().zip(arms) {
            b.update(arm, fitness)?;
        }
        Ok(())
    }

    /// Per-dimension probability vectors.
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.sub_bandits.iter().map(AdaptiveBandit::probabilities).collect()
    }

    pub fn horizons(&self) -> Vec<f64> {
        self.sub_bandits.iter().map(AdaptiveBandit::horizon).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use alloc::vec;

    #[test]
    fn single_arm_dimensions_compose_one_modulation() {
        let base = Modulation::reference(2).unwrap();
        let space = ModulationSpace::new(base.clone(), &[]).unwrap();
        let fb = FactoredBandit::new(&[1, 1]).unwrap();
        assert_eq!(fb.sample(&mut seeded_rng(0)), vec![0, 0]);
        // a space with no axes composes to its base
        assert_eq!(space.compose(&[]).unwrap(), base);
    }

    #[test]
    fn sum_not_product_of_arms() {
        let fb = FactoredBandit::new(&[7, 7, 7]).unwrap();
        assert_eq!(fb.modeled_arms(), 21);
    }

    #[test]
    fn seeded_composition_repeats() {
        let space = ModulationSpace::lavaworld();
        let fb = FactoredBandit::for_space(&space).unwrap();
        let draw = || {
            let mut rng = seeded_rng(4);
            (0..20)
                .map(|_| fb.sample_modulation(&space, &mut rng).unwrap().1)
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn shared_fitness_reaches_every_dimension() {
        let mut fb = FactoredBandit::new(&[2, 3]).unwrap();
        fb.update(&[1, 2], 3.0).unwrap();
        for b in fb.sub_bandits() {
            let h: Vec<_> = b.history().collect();
            assert_eq!(h.len(), 1);
            assert_eq!(h[0].fitness, 3.0);
        }
        assert!(fb.update(&[0], 1.0).is_err());
        assert!(fb.update(&[0, 3], 1.0).is_err());
        // a failed update leaves every sub-bandit untouched
        assert_eq!(fb.sub_bandits()[0].history().len(), 1);
    }

    #[test]
    fn horizons_evolve_independently() {
        let mut fb = FactoredBandit::new(&[2, 5]).unwrap();
        let mut rng = seeded_rng(1);
        for t in 0..300 {
            let arms = fb.sample(&mut rng);
            let f = if arms[0] == 0 { (t % 7) as f64 } else { 0.0 };
            fb.update(&arms, f).unwrap();
        }
        let h = fb.horizons();
        assert!(h[0] >= 4.0 && h[1] >= 10.0);
        assert_ne!(h[0], h[1]);
    }

    #[test]
    fn symmetric_pattern_keeps_untouched_dimension_flat() {
        // dimension 1 always pulls arms 0 and 1 with the same fitness pattern
        let mut fb = FactoredBandit::new(&[2, 2]).unwrap();
        fb.update(&[0, 0], 1.0).unwrap();
        fb.update(&[1, 1], 1.0).unwrap();
        let p = fb.probabilities();
        assert_eq!(p[1][0], p[1][1]);
        assert_eq!(p[0][0], p[0][1]);
    }
}
