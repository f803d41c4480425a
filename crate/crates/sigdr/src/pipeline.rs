//! Path preprocessing shared by the featurizers: per-channel standardization,
//! a global scale, lead-lag and time augmentation, applied in that order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sigdr_core::{ChannelScaler, EmpiricalMeasure};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preprocess {
    /// Center and scale each raw channel with statistics of the training groups.
    pub standardize: bool,
    /// Multiply values by this after standardization.
    pub path_scale: f64,
    pub lead_lag: bool,
    pub time_augment: bool,
}

impl Default for Preprocess {
    fn default() -> Self {
        Preprocess { standardize: true, path_scale: 1.0, lead_lag: false, time_augment: true }
    }
}

impl Preprocess {
    /// No transformation at all.
    pub fn raw() -> Self {
        Preprocess { standardize: false, path_scale: 1.0, lead_lag: false, time_augment: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.path_scale > 0.0 && self.path_scale.is_finite()) {
            return Err(Error::config("path_scale must be positive"));
        }
        Ok(())
    }

    /// Fit the channel statistics on `train`.
    pub fn fit(&self, train: &[&EmpiricalMeasure]) -> Result<FittedPreprocess> {
        self.validate()?;
        let dim = train
            .first()
            .map(|g| g.dim())
            .ok_or_else(|| Error::config("cannot fit preprocessing on zero groups"))?;
        let base = if self.standardize {
            ChannelScaler::fit(train.iter().copied())?
        } else {
            ChannelScaler::identity(dim)
        };
        Ok(FittedPreprocess {
            mean: base.mean,
            scale: base.scale.iter().map(|s| s / self.path_scale).collect(),
            lead_lag: self.lead_lag,
            time_augment: self.time_augment,
        })
    }
}

/// Preprocessing with its fitted statistics; `x ↦ (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPreprocess {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub lead_lag: bool,
    pub time_augment: bool,
}

impl FittedPreprocess {
    /// Output dimension for raw dimension `dim`.
    pub fn output_dim(&self, dim: usize) -> usize {
        dim * if self.lead_lag { 2 } else { 1 } + self.time_augment as usize
    }

    pub fn apply_group(&self, group: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
        let scaler = ChannelScaler { mean: self.mean.clone(), scale: self.scale.clone() };
        Ok(group.try_map(|s| {
            let mut out = s.standardized(&scaler)?;
            if self.lead_lag {
                out = out.lead_lag();
            }
            if self.time_augment {
                out = out.time_augment();
            }
            Ok(out)
        })?)
    }

    pub fn apply(&self, groups: &[EmpiricalMeasure]) -> Result<Vec<EmpiricalMeasure>> {
        groups.par_iter().map(|g| self.apply_group(g)).collect()
    }
}
