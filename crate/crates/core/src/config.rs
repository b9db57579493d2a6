//! One TOML file for every tunable: scoring weights, search, RANSAC,
//! compatibility and scene generation. Missing tables take defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::layout::RansacParams;
use crate::mcss::McssConfig;
use crate::proposals::CompatParams;
use crate::scoring::ScoreWeights;
use crate::synth::SynthConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub weights: ScoreWeights,
    pub mcss: McssConfig,
    pub ransac: RansacParams,
    pub compat: CompatParams,
    pub synth: SynthConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.mcss.validate()?;
        self.ransac.validate()?;
        self.compat.validate()?;
        self.synth.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::synth::{presets, RoomShape};

    #[test]
    fn empty_file_is_all_defaults() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.weights.lambda_p, 2.5);
        assert_eq!(c.compat.iou_threshold, 0.3);
    }

    #[test]
    fn roundtrip() {
        let mut c = Config::default();
        c.synth = presets::room(7, RoomShape::U, 0.01);
        c.weights.lambda_d = 0.25;
        c.mcss.iterations = 17;
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = Config::from_toml("[weights]\nlambda_p = 4.0\n[synth.room]\nshape = \"l\"\n").unwrap();
        assert_eq!(c.weights.lambda_p, 4.0);
        assert_eq!(c.weights.lambda_i, 1.0);
        assert_eq!(c.synth.room.shape, RoomShape::L);
        assert_eq!(c.synth.room.width, 5.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(Config::from_toml("[weights]\nlambda_q = 1.0\n"), Err(Error::Toml(_))));
        assert!(matches!(Config::from_toml("[nope]\n"), Err(Error::Toml(_))));
        assert!(Config::from_toml("weights = 3").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for text in [
            "[weights]\nlambda_p = -1.0\n",
            "[compat]\niou_threshold = 1.5\n",
            "[synth.room]\nwidth = 0.0\n",
            "[synth]\nswap_probability = 2.0\n",
            "[synth.views]\ncount = 0\n",
            "[mcss]\niterations = 0\n",
        ] {
            assert!(Config::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn load_reports_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Config::load(&dir.path().join("absent.toml")), Err(Error::Io(_))));
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[mcss]\nseed = 9\n").unwrap();
        assert_eq!(Config::load(&path).unwrap().mcss.seed, 9);
    }
}
