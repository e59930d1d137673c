//! Run configuration loaded from TOML.
//!
//! Every field is optional and falls back to the reference setup. Relative
//! paths resolve against the configuration file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controldesign::{ControllerSource, PiLeadController};
use crate::detgeom::Origin;
use crate::detmetrics::{AreaRule, IouBins};
use crate::error::{require_positive, Error, Result};
use crate::simengine::SimConfig;
use crate::turretmodel::{plant_pair, AxisPair, PlantModel, TurretParams};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub detections: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub budget: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub ranges_m: Vec<f64>,
    pub origins: Vec<Origin>,
    pub histogram_bin_mils: f64,
    pub paths: Paths,
    pub turret: TurretParams,
    pub controllers: AxisPair<ControllerSource>,
    pub simulation: SimConfig,
    pub bins: IouBins,
    pub area_rule: AreaRule,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ranges_m: default_ranges(),
            origins: vec![Origin::BottomLeft, Origin::Center],
            histogram_bin_mils: 0.25,
            paths: Paths::default(),
            turret: TurretParams::default(),
            controllers: AxisPair::default(),
            simulation: SimConfig::default(),
            bins: IouBins::default(),
            area_rule: AreaRule::default(),
        }
    }
}

pub fn default_ranges() -> Vec<f64> {
    (1..=6).map(|i| 500.0 * i as f64).collect()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.paths.detections,
            &mut cfg.paths.ground_truth,
            &mut cfg.paths.budget,
            &mut cfg.paths.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks values and that every referenced input file exists.
    pub fn validate(&self) -> Result<()> {
        for &r in &self.ranges_m {
            require_positive("ranges_m", r)?;
        }
        if self.origins.contains(&Origin::TopLeft) {
            return Err(Error::Config(
                "origins: only bottom-left and center are start origins".into(),
            ));
        }
        require_positive("histogram_bin_mils", self.histogram_bin_mils)?;
        self.turret.validate()?;
        self.bins.validate()?;
        self.sim_config().validate()?;
        for p in [
            &self.paths.detections,
            &self.paths.ground_truth,
            &self.paths.budget,
        ]
        .into_iter()
        .flatten()
        {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "input file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            seed: self.seed,
            ..self.simulation.clone()
        }
    }

    pub fn plants(&self) -> Result<AxisPair<PlantModel>> {
        plant_pair(&self.turret)
    }

    pub fn controllers(&self, plants: &AxisPair<PlantModel>) -> Result<AxisPair<PiLeadController>> {
        self.controllers
            .try_map(|axis, src| src.controller(plants.get(axis)))
    }
}

/// Parses `start:stop:step` (inclusive stop) or a comma list.
pub fn parse_ranges(spec: &str) -> Result<Vec<f64>> {
    let bad = || {
        Error::invalid(
            "ranges",
            format!("expected start:stop:step or a comma list, got {spec:?}"),
        )
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    let out = match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0 && b >= a) {
                return Err(bad());
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            (0..=n).map(|i| a + i as f64 * h).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    for &r in &out {
        require_positive("range", r)?;
    }
    Ok(out)
}
