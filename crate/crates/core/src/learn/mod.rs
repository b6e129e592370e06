//! Base classifiers, optimizer, centralized pretraining and gossip averaging.

mod adam;
mod classifier;
mod format;
mod train;

pub use adam::{adam_step, AdamState};
pub use classifier::{
    evaluation_loss, forward, loss_and_grad, predict_table, tensor_shapes, ClassifierKind, ClassifierParams,
    Sample, TensorShape,
};
pub use format::{encoded_len, payload_len, read_params, read_params_file, write_params, write_params_file};
pub use train::{gossip_pair_update, pretrain, EpochLog, GossipDevice, PretrainOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub dropout: f64,
    pub l2: f64,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            dropout: 0.5,
            l2: 5e-4,
            lr: 0.01,
            max_epochs: 3000,
            patience: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Parameter(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return Err(Error::Parameter(format!("l2 {} must be non-negative", self.l2)));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::Parameter(format!("learning rate {} must be positive", self.lr)));
        }
        if self.patience == 0 {
            return Err(Error::Parameter("patience must be at least 1".into()));
        }
        Ok(())
    }
}
