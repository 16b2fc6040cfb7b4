//! Behaviour modulations and the discrete arm sets they are drawn from.
//!
//! A [`Modulation`] is one point `z = (T, ε, b, ρ, ω)`. A
//! [`ModulationClass`] is the list of candidate values for one dimension,
//! and a [`ModulationSpace`] is a base modulation plus one expanded
//! [`Axis`] per modulated dimension. Bias classes are given as scalars and
//! expand one-hot: `0` becomes the zero vector and every other value `v`
//! becomes `|A|` arms, each applying `v` to exactly one action.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::policy::{action_distribution, QuantileRows};
use crate::{Error, Result};

/// Temperature used in place of `T = 0`; only breaks ties between equal values.
pub const TIE_BREAK_TEMPERATURE: f64 = 0.00001;

/// Tolerance under which two modulations count as behaviourally identical.
pub const DEDUP_TOLERANCE: f64 = 1e-12;

/// One point in the behaviour-modulation space.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    /// Softmax temperature, `T > 0`.
    pub temperature: f64,
    /// Weight of the uniform mixture component, in `[0, 1]`.
    pub epsilon: f64,
    /// Per-action logit offsets.
    pub biases: Vec<f64>,
    /// Probability of repeating the previous action, in `[0, 1)`.
    pub repeat_prob: f64,
    /// Exponent of the quantile aggregation.
    pub optimism: f64,
}

impl Modulation {
    pub fn new(
        temperature: f64,
        epsilon: f64,
        biases: Vec<f64>,
        repeat_prob: f64,
        optimism: f64,
    ) -> Result<Self> {
        let z = Self {
            temperature,
            epsilon,
            biases,
            repeat_prob,
            optimism,
        };
        z.validate()?;
        Ok(z)
    }

    /// The default behaviour: near-greedy with 1% uniform noise.
    pub fn reference(num_actions: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::InvalidArgument("num_actions must be >= 1".into()));
        }
        Self::new(TIE_BREAK_TEMPERATURE, 0.01, vec![0.0; num_actions], 0.0, 0.0)
    }

    pub fn num_actions(&self) -> usize {
        self.biases.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModulation(msg));
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return bad(format!("temperature {} must be finite and > 0", self.temperature));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.repeat_prob) {
            return bad(format!("repeat probability {} outside [0, 1)", self.repeat_prob));
        }
        if !self.optimism.is_finite() {
            return bad("optimism must be finite".into());
        }
        if self.biases.is_empty() {
            return bad("bias vector must have one entry per action".into());
        }
        if self.biases.iter().any(|b| !b.is_finite()) {
            return bad("biases must be finite".into());
        }
        Ok(())
    }

    fn set(&mut self, dimension: Dimension, arm: &ArmValue) {
        match (dimension, arm) {
            (Dimension::Temperature, ArmValue::Scalar(v)) => self.temperature = *v,
            (Dimension::Epsilon, ArmValue::Scalar(v)) => self.epsilon = *v,
            (Dimension::Repeat, ArmValue::Scalar(v)) => self.repeat_prob = *v,
            (Dimension::Optimism, ArmValue::Scalar(v)) => self.optimism = *v,
            (Dimension::Bias, ArmValue::Biases(b)) => self.biases.clone_from(b),
            _ => unreachable!("axis arms always match their dimension"),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "T={} eps={} b=[",
            self.temperature, self.epsilon
        )?;
        for (i, b) in self.biases.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "] rho={} omega={}", self.repeat_prob, self.optimism)
    }
}

/// The five modulated dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Temperature,
    Epsilon,
    Repeat,
    Optimism,
    Bias,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Temperature,
        Dimension::Epsilon,
        Dimension::Repeat,
        Dimension::Optimism,
        Dimension::Bias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Temperature => "temperature",
            Dimension::Epsilon => "epsilon",
            Dimension::Repeat => "repeat",
            Dimension::Optimism => "optimism",
            Dimension::Bias => "bias",
        }
    }

    /// Range check for a scalar value on this dimension.
    fn check(self, v: f64) -> Result<()> {
        let ok = v.is_finite()
            && match self {
                Dimension::Temperature => v > 0.0,
                Dimension::Epsilon => (0.0..=1.0).contains(&v),
                Dimension::Repeat => (0.0..1.0).contains(&v),
                Dimension::Optimism | Dimension::Bias => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModulation(format!(
                "value {v} is not valid for {}",
                self.name()
            )))
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "temperature" | "t" => Ok(Dimension::Temperature),
            "epsilon" | "eps" => Ok(Dimension::Epsilon),
            "repeat" | "rho" | "repeat_prob" => Ok(Dimension::Repeat),
            "optimism" | "omega" => Ok(Dimension::Optimism),
            "bias" | "biases" => Ok(Dimension::Bias),
            other => Err(Error::UnknownDimension(other.to_string())),
        }
    }
}

/// Candidate scalar values for one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationClass {
    pub dimension: Dimension,
    values: Vec<f64>,
}

impl ModulationClass {
    /// Values must be non-empty, distinct and in range for the dimension.
    pub fn new(dimension: Dimension, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyClass(dimension.name().into()));
        }
        for (i, v) in values.iter().enumerate() {
            dimension.check(*v)?;
            if values[..i].contains(v) {
                return Err(Error::InvalidModulation(format!(
                    "duplicate arm {v} in {dimension}"
                )));
            }
        }
        Ok(Self { dimension, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Hand-tuned arm set for a dimension.
pub fn curated_set(dimension: Dimension) -> ModulationClass {
    let values: &[f64] = match dimension {
        Dimension::Temperature => &[0.0001, 0.001, 0.01],
        Dimension::Epsilon => &[0.0, 0.001, 0.01, 0.1],
        Dimension::Repeat => &[0.0, 0.25, 0.5],
        Dimension::Optimism => &[-1.0, 0.0, 1.0, 2.0, 10.0],
        Dimension::Bias => &[0.0],
    };
    ModulationClass::new(dimension, values.to_vec()).expect("table values are valid")
}

/// Naive (wide) arm set for a dimension.
pub fn extended_set(dimension: Dimension) -> ModulationClass {
    let values: &[f64] = match dimension {
        Dimension::Temperature => &[0.00001, 0.0001, 0.001, 0.01, 0.1, 1.0, 10.0],
        Dimension::Epsilon => &[0.0, 0.001, 0.01, 0.1, 0.2, 0.5, 1.0],
        Dimension::Repeat => &[0.0, 0.25, 0.5, 0.66, 0.75, 0.8, 0.9],
        Dimension::Optimism => &[-10.0, -2.0, -1.0, 0.0, 1.0, 2.0, 10.0],
        Dimension::Bias => &[-1.0, 0.0, 0.01, 0.1],
    };
    ModulationClass::new(dimension, values.to_vec()).expect("table values are valid")
}

/// [`curated_set`] addressed by dimension name.
pub fn curated_set_named(name: &str) -> Result<ModulationClass> {
    Ok(curated_set(name.parse()?))
}

/// [`extended_set`] addressed by dimension name.
pub fn extended_set_named(name: &str) -> Result<ModulationClass> {
    Ok(extended_set(name.parse()?))
}

/// One arm of an expanded axis.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmValue {
    Scalar(f64),
    Biases(Vec<f64>),
}

impl fmt::Display for ArmValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmValue::Scalar(v) => write!(f, "{v}"),
            ArmValue::Biases(b) => match b.iter().position(|x| *x != 0.0) {
                None => f.write_str("0"),
                Some(i) => write!(f, "{}@{}", b[i], i),
            },
        }
    }
}

/// A modulated dimension with its arms expanded to concrete settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub dimension: Dimension,
    pub arms: Vec<ArmValue>,
}

impl Axis {
    fn expand(class: &ModulationClass, num_actions: usize) -> Self {
        let arms = match class.dimension {
            Dimension::Bias => {
                let mut arms = Vec::new();
                for &v in class.values() {
                    if v == 0.0 {
                        arms.push(ArmValue::Biases(vec![0.0; num_actions]));
                    } else {
                        for a in 0..num_actions {
                            let mut b = vec![0.0; num_actions];
                            b[a] = v;
                            arms.push(ArmValue::Biases(b));
                        }
                    }
                }
                arms
            }
            _ => class.values().iter().map(|&v| ArmValue::Scalar(v)).collect(),
        };
        Self {
            dimension: class.dimension,
            arms,
        }
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn label(&self, arm: usize) -> String {
        format!("{}={}", self.dimension, self.arms[arm])
    }
}

/// A base modulation and the axes varied around it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpace {
    base: Modulation,
    axes: Vec<Axis>,
}

impl ModulationSpace {
    /// Dimensions not covered by `classes` keep the value from `base`.
    pub fn new(base: Modulation, classes: &[ModulationClass]) -> Result<Self> {
        base.validate()?;
        let mut axes: Vec<Axis> = Vec::with_capacity(classes.len());
        for class in classes {
            if class.is_empty() {
                return Err(Error::EmptyClass(class.dimension.name().into()));
            }
            if axes.iter().any(|a| a.dimension == class.dimension) {
                return Err(Error::InvalidModulation(format!(
                    "dimension {} listed twice",
                    class.dimension
                )));
            }
            axes.push(Axis::expand(class, base.num_actions()));
        }
        Ok(Self { base, axes })
    }

    /// `ε, T ∈ {0.01, 0.1, 1}` and biases `{0, +0.1 on one action}`
    /// over the reference modulation for 4 actions.
    pub fn lavaworld() -> Self {
        let base = Modulation::reference(4).expect("4 actions");
        let classes = [
            ModulationClass::new(Dimension::Epsilon, vec![0.01, 0.1, 1.0]).unwrap(),
            ModulationClass::new(Dimension::Temperature, vec![0.01, 0.1, 1.0]).unwrap(),
            ModulationClass::new(Dimension::Bias, vec![0.0, 0.1]).unwrap(),
        ];
        Self::new(base, &classes).expect("preset is valid")
    }

    /// All five curated classes over the reference modulation.
    pub fn curated(num_actions: usize) -> Result<Self> {
        let classes: Vec<_> = Dimension::ALL.iter().map(|&d| curated_set(d)).collect();
        Self::new(Modulation::reference(num_actions)?, &classes)
    }

    /// The extended classes for temperature, epsilon, repeat and optimism.
    /// Biases stay at the reference zero vector.
    pub fn extended(num_actions: usize) -> Result<Self> {
        let classes: Vec<_> = [
            Dimension::Temperature,
            Dimension::Epsilon,
            Dimension::Repeat,
            Dimension::Optimism,
        ]
        .iter()
        .map(|&d| extended_set(d))
        .collect();
        Self::new(Modulation::reference(num_actions)?, &classes)
    }

    pub fn base(&self) -> &Modulation {
        &self.base
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn num_actions(&self) -> usize {
        self.base.num_actions()
    }

    pub fn arm_counts(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    /// Number of arms a factored bandit models: the sum of axis sizes.
    pub fn factored_arm_count(&self) -> usize {
        self.axes.iter().map(Axis::len).sum()
    }

    /// Size of the raw Cartesian product.
    pub fn product_size(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    /// Assemble the modulation selected by one arm index per axis.
    pub fn compose(&self, arms: &[usize]) -> Result<Modulation> {
        if arms.len() != self.axes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.axes.len(),
                got: arms.len(),
            });
        }
        let mut z = self.base.clone();
        for (axis, &arm) in self.axes.iter().zip(arms) {
            let value = axis.arms.get(arm).ok_or(Error::OutOfRange {
                what: "axis arms",
                index: arm,
                len: axis.len(),
            })?;
            z.set(axis.dimension, value);
        }
        Ok(z)
    }

    /// Every arm-index tuple of the Cartesian product, last axis fastest.
    pub fn product_indices(&self) -> Vec<Vec<usize>> {
        let counts = self.arm_counts();
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            out.push(idx.clone());
            for d in (0..counts.len()).rev() {
                idx[d] += 1;
                if idx[d] < counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }

    pub fn label(&self, arms: &[usize]) -> String {
        let mut s = String::new();
        for (i, (axis, &arm)) in self.axes.iter().zip(arms).enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(&axis.label(arm));
        }
        if s.is_empty() {
            s.push_str("reference");
        }
        s
    }
}

/// One entry of a flat (deduplicated) enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatArm {
    /// Arm index on each axis of the originating space.
    pub indices: Vec<usize>,
    pub modulation: Modulation,
}

/// Number of quantiles in each dedup probe table.
const PROBE_QUANTILES: usize = 5;

struct Probe {
    values: Vec<f64>,
    prev: usize,
}

/// Cartesian product of the space with behavioural duplicates removed.
///
/// Two modulations are duplicates when their action distributions agree to
/// within [`DEDUP_TOLERANCE`] on every probe, with and without a previous
/// action. Probes are random quantile tables whose scale is drawn
/// log-uniformly from `[1e-6, 1]` so that small temperatures are told apart.
/// The first member of each equivalence class (in product order) is kept.
pub fn enumerate_flat<R: Rng + ?Sized>(
    space: &ModulationSpace,
    probe_count: usize,
    rng: &mut R,
) -> Result<Vec<FlatArm>> {
    if probe_count == 0 {
        return Err(Error::InvalidArgument("probe count must be >= 1".into()));
    }
    if let Some(axis) = space.axes.iter().find(|a| a.is_empty()) {
        return Err(Error::EmptyClass(axis.dimension.name().into()));
    }
    let num_actions = space.num_actions();
    let probes: Vec<Probe> = (0..probe_count)
        .map(|_| {
            let scale = crate::math::powf(10.0, rng.random_range(-6.0..=0.0));
            let values = (0..num_actions * PROBE_QUANTILES)
                .map(|_| scale * rng.random_range(-1.0..1.0))
                .collect();
            Probe {
                values,
                prev: rng.random_range(0..num_actions),
            }
        })
        .collect();

    let mut kept: Vec<(FlatArm, Vec<f64>)> = Vec::new();
    for indices in space.product_indices() {
        let modulation = space.compose(&indices)?;
        let signature = behaviour_signature(&modulation, &probes)?;
        let duplicate = kept.iter().any(|(_, sig)| {
            sig.iter()
                .zip(&signature)
                .all(|(a, b)| crate::math::abs(a - b) <= DEDUP_TOLERANCE)
        });
        if !duplicate {
            kept.push((FlatArm { indices, modulation }, signature));
        }
    }
    Ok(kept.into_iter().map(|(arm, _)| arm).collect())
}

fn behaviour_signature(z: &Modulation, probes: &[Probe]) -> Result<Vec<f64>> {
    let mut sig = Vec::with_capacity(probes.len() * 2 * z.num_actions());
    for probe in probes {
        let rows = QuantileRows::new(&probe.values, PROBE_QUANTILES)?;
        for prev in [None, Some(probe.prev)] {
            sig.extend_from_slice(action_distribution(rows, z, prev)?.probs());
        }
    }
    Ok(sig)
}
