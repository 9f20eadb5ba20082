use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the preset for the contrastive generator objective
/// `GAN + 10·NCE + 10·pNCE + 2·dis_cls + 20·multi_scale`.
pub const PNCE_MULTISCALE_PRESET: &str = "pnce_multiscale";

/// Named loss weights; names without an entry weigh 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossWeights(pub BTreeMap<String, f64>);

impl LossWeights {
    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or(1.0)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            PNCE_MULTISCALE_PRESET => Ok(Self(BTreeMap::from([
                ("gan".to_string(), 1.0),
                ("nce".to_string(), 10.0),
                ("pnce".to_string(), 10.0),
                ("dis_cls".to_string(), 2.0),
                ("multi_scale".to_string(), 20.0),
            ]))),
            other => Err(Error::InvalidInput(format!("unknown weight preset {other:?}"))),
        }
    }
}

/// `Σ λᵢ·termᵢ`, summed in name order.
pub fn combine_weighted(terms: &BTreeMap<String, f64>, w: &LossWeights) -> Result<f64> {
    if let Some((k, v)) = w.0.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("weight {k:?} is not finite: {v}")));
    }
    Ok(terms.iter().map(|(k, v)| w.get(k) * v).sum())
}
