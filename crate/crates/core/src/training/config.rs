use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::ModelKind;
use crate::error::{Error, Result};
use crate::losses::LossConfig;

/// Training hyperparameters, stored as TOML. Keys follow the usual
/// hyperparameter table headings (`k`, `l`, `Ebz`, `Tbz`, `Nsz`, `alpha1`,
/// `gamma1`, `eta1`); the type-space and regression margins/temperatures
/// default to `gamma1` / `alpha1` when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub k: usize,
    pub l: usize,
    #[serde(rename = "Ebz")]
    pub entity_batch: usize,
    #[serde(rename = "Tbz")]
    pub type_batch: usize,
    #[serde(rename = "Nsz")]
    pub neg_size: usize,
    pub alpha1: f64,
    pub gamma1: f64,
    pub eta1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma3: Option<f64>,
    #[serde(default = "default_total_steps")]
    pub total_steps: u64,
    #[serde(default = "default_period")]
    pub alternation_period: u64,
    /// Steps of KG-only training before the three-way alternation begins.
    #[serde(default)]
    pub warmup_steps: u64,
    /// Inverse-time decay factor, `lr = eta1 / (1 + decay · step)`; 0 is off.
    #[serde(default)]
    pub lr_decay: f64,
    #[serde(default)]
    pub seed: u64,
    /// 0 writes only the final checkpoint.
    #[serde(default)]
    pub checkpoint_interval: u64,
    #[serde(default = "default_log_interval")]
    pub log_interval: u64,
    #[serde(default = "default_valid_cap")]
    pub valid_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_total_steps() -> u64 {
    150_000
}

fn default_period() -> u64 {
    1000
}

fn default_log_interval() -> u64 {
    100
}

fn default_valid_cap() -> usize {
    2000
}

impl TrainConfig {
    /// CORE-ComplEx settings for FB15k-ET.
    pub fn fb15k_et_complex() -> Self {
        TrainConfig {
            model: ModelKind::ComplEx,
            k: 500,
            l: 550,
            entity_batch: 1024,
            type_batch: 4096,
            neg_size: 400,
            alpha1: 1.0,
            gamma1: 24.0,
            eta1: 0.0002,
            alpha2: None,
            alpha3: None,
            gamma2: None,
            gamma3: None,
            total_steps: default_total_steps(),
            alternation_period: default_period(),
            warmup_steps: 0,
            lr_decay: 0.0,
            seed: 0,
            checkpoint_interval: 0,
            log_interval: default_log_interval(),
            valid_cap: default_valid_cap(),
            data_dir: None,
            out_dir: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("l", self.l),
            ("Ebz", self.entity_batch),
            ("Tbz", self.type_batch),
            ("Nsz", self.neg_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.alternation_period == 0 {
            return Err(Error::Config("alternation_period must be >= 1".into()));
        }
        if self.log_interval == 0 {
            return Err(Error::Config("log_interval must be >= 1".into()));
        }
        if self.eta1.is_nan() || self.eta1 < 0.0 || self.lr_decay.is_nan() || self.lr_decay < 0.0 {
            return Err(Error::Config("eta1 and lr_decay must be non-negative".into()));
        }
        for cfg in [self.kge_loss(), self.tpe_loss(), self.reg_loss()] {
            LossConfig::new(cfg.gamma, cfg.alpha)?;
        }
        Ok(())
    }

    pub fn kge_loss(&self) -> LossConfig {
        LossConfig {
            gamma: self.gamma1,
            alpha: self.alpha1,
        }
    }

    pub fn tpe_loss(&self) -> LossConfig {
        LossConfig {
            gamma: self.gamma2.unwrap_or(self.gamma1),
            alpha: self.alpha2.unwrap_or(self.alpha1),
        }
    }

    pub fn reg_loss(&self) -> LossConfig {
        LossConfig {
            gamma: self.gamma3.unwrap_or(self.gamma1),
            alpha: self.alpha3.unwrap_or(self.alpha1),
        }
    }

    pub fn learning_rate(&self, step: u64) -> f64 {
        self.eta1 / (1.0 + self.lr_decay * step as f64)
    }
}
