//! Modulation-set files.
//!
//! A set file is TOML with one list of numbers per dimension, in axis
//! order. Dimensions left out stay at the reference modulation:
//!
//! ```toml
//! epsilon = [0.01, 0.1, 1]
//! temperature = [0.01, 0.1, 1]
//! bias = [0, 0.1]   # 0 is the zero vector, 0.1 is +0.1 on one action
//! ```

use std::path::Path;

use modbandit_core::modulation::{Dimension, ModulationClass, ModulationSpace};
use modbandit_core::Modulation;

use crate::error::{read_file, Error, Result};

/// Parse a set file's contents for an environment with `num_actions`
/// actions.
pub fn parse_modulation_set(text: &str, num_actions: usize, origin: &str) -> Result<ModulationSpace> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::parse(origin, e.message().to_string()))?;
    let mut classes = Vec::with_capacity(table.len());
    for (key, value) in &table {
        let dimension: Dimension = key.parse().map_err(|e: modbandit_core::Error| Error::parse(origin, e.to_string()))?;
        let list = value
            .as_array()
            .ok_or_else(|| Error::parse(origin, format!("`{key}` must be a list of numbers")))?;
        let values = list
            .iter()
            .map(|v| match v {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                _ => Err(Error::parse(origin, format!("`{key}` holds a non-number"))),
            })
            .collect::<Result<Vec<_>>>()?;
        classes.push(ModulationClass::new(dimension, values).map_err(|e| Error::parse(origin, e.to_string()))?);
    }
    if classes.is_empty() {
        return Err(Error::parse(origin, "no dimensions listed"));
    }
    Ok(ModulationSpace::new(Modulation::reference(num_actions)?, &classes)?)
}

/// `curated`, `extended`, `lavaworld` or a path to a set file.
pub fn resolve_modulation_set(source: &str, num_actions: usize) -> Result<ModulationSpace> {
    match source {
        "curated" => Ok(ModulationSpace::curated(num_actions)?),
        "extended" => Ok(ModulationSpace::extended(num_actions)?),
        "lavaworld" => {
            let space = ModulationSpace::lavaworld();
            if space.num_actions() != num_actions {
                return Err(Error::Usage(format!(
                    "the lavaworld set needs 4 actions, the environment has {num_actions}"
                )));
            }
            Ok(space)
        }
        path => {
            let path = Path::new(path);
            if !path.exists() {
                return Err(Error::Usage(format!(
                    "unknown modulation set `{source}` (expected curated, extended, lavaworld or a file)"
                )));
            }
            parse_modulation_set(&read_file(path)?, num_actions, &path.display().to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use modbandit_core::modulation::enumerate_flat;
    use modbandit_core::seeded_rng;

    const LAVAWORLD_SET: &str = "epsilon = [0.01, 0.1, 1]\ntemperature = [0.01, 0.1, 1]\nbias = [0, 0.1]\n";

    #[test]
    fn file_matches_builtin_lavaworld() {
        let space = parse_modulation_set(LAVAWORLD_SET, 4, "test").unwrap();
        assert_eq!(space, ModulationSpace::lavaworld());
        assert_eq!(space.product_size(), 45);
        assert_eq!(enumerate_flat(&space, 100, &mut seeded_rng(0)).unwrap().len(), 31);
    }

    #[test]
    fn axis_order_follows_the_file() {
        let space = parse_modulation_set("repeat = [0, 0.25]\nomega = [1]\n", 3, "test").unwrap();
        let dims: Vec<_> = space.axes().iter().map(|a| a.dimension).collect();
        assert_eq!(dims, [Dimension::Repeat, Dimension::Optimism]);
        assert_eq!(space.arm_counts(), [2, 1]);
    }

    #[test]
    fn bad_files_are_rejected() {
        for text in [
            "",
            "colour = [1]",
            "epsilon = 0.1",
            "epsilon = [\"a\"]",
            "epsilon = []",
            "epsilon = [2]",
            "epsilon = [0.1, 0.1]",
            "epsilon = [",
        ] {
            assert!(parse_modulation_set(text, 4, "t").is_err(), "{text}");
        }
    }

    #[test]
    fn named_sets() {
        assert_eq!(resolve_modulation_set("curated", 4).unwrap().arm_counts(), [3, 4, 3, 5, 1]);
        assert_eq!(resolve_modulation_set("extended", 4).unwrap().arm_counts(), [7, 7, 7, 7]);
        assert!(resolve_modulation_set("lavaworld", 3).is_err());
        assert!(matches!(resolve_modulation_set("nope", 4), Err(Error::Usage(_))));
    }
}
