use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeData, Splits};
use crate::learn::adam::{adam_step, AdamState};
use crate::learn::classifier::{
    evaluation_loss, loss_and_grad, ClassifierKind, ClassifierParams, Sample,
};
use crate::learn::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when there is no validation split.
    pub valid_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub params: ClassifierParams,
    /// Epoch of the returned snapshot (0 = initialization).
    pub best_epoch: usize,
    pub best_valid_loss: Option<f64>,
    pub log: Vec<EpochLog>,
}

fn samples<'a>(data: &'a NodeData, ids: impl Iterator<Item = usize>, rows: &'a [Vec<f64>]) -> Vec<Sample<'a>> {
    ids.zip(rows)
        .map(|(u, y)| Sample {
            x: data.features(u),
            y,
        })
        .collect()
}

/// Full-batch centralized training with early stopping on validation loss.
pub fn pretrain(
    data: &NodeData,
    splits: &Splits,
    kind: ClassifierKind,
    cfg: &TrainConfig,
) -> Result<PretrainOutcome> {
    if kind == ClassifierKind::Label {
        return Err(Error::Parameter(
            "the label classifier has no parameters to train".into(),
        ));
    }
    if splits.train.is_empty() {
        return Err(Error::Validation("training split is empty".into()));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ClassifierParams::init(
        kind,
        data.n_features(),
        data.n_classes(),
        cfg.hidden,
        &mut rng,
    );

    let train_y: Vec<Vec<f64>> = splits.train.iter().map(|u| data.label_row(u)).collect();
    let valid_y: Vec<Vec<f64>> = splits.valid.iter().map(|u| data.label_row(u)).collect();
    let train = samples(data, splits.train.iter(), &train_y);
    let valid = samples(data, splits.valid.iter(), &valid_y);

    let mut adam = AdamState::new(params.n_params(), cfg.lr);
    let mut log = Vec::new();
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_loss = if valid.is_empty() {
        None
    } else {
        Some(evaluation_loss(&params, &valid)?)
    };
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        let (train_loss, grad) = loss_and_grad(&params, &train, cfg, &mut rng)?;
        adam_step(&mut params.values, &grad, &mut adam)?;
        let valid_loss = if valid.is_empty() {
            None
        } else {
            Some(evaluation_loss(&params, &valid)?)
        };
        log.push(EpochLog {
            epoch,
            train_loss,
            valid_loss,
        });
        match (valid_loss, best_loss) {
            (Some(v), Some(b)) if v < b => {
                best_loss = Some(v);
                best.values.copy_from_slice(&params.values);
                best_epoch = epoch;
                since_best = 0;
            }
            (Some(_), _) => {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
            (None, _) => {
                best.values.copy_from_slice(&params.values);
                best_epoch = epoch;
            }
        }
    }

    if !best.is_finite() {
        return Err(Error::Validation("training diverged to non-finite parameters".into()));
    }
    Ok(PretrainOutcome {
        params: best,
        best_epoch,
        best_valid_loss: best_loss,
        log,
    })
}

/// One device's share of gossip training: its local model and optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct GossipDevice {
    pub params: ClassifierParams,
    pub adam: AdamState,
}

impl GossipDevice {
    pub fn new(params: ClassifierParams, lr: f64) -> Self {
        let adam = AdamState::new(params.n_params(), lr);
        GossipDevice { params, adam }
    }
}

/// A gossip exchange: each side holding a labeled sample takes one Adam step
/// on it, then both models are replaced by their elementwise mean. Optimizer
/// moments stay local.
pub fn gossip_pair_update<R: Rng + ?Sized>(
    u: &mut GossipDevice,
    u_sample: Option<Sample<'_>>,
    v: &mut GossipDevice,
    v_sample: Option<Sample<'_>>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<()> {
    u.params.check_compatible(&v.params)?;
    if u.params.kind == ClassifierKind::Label {
        return Ok(());
    }
    for (dev, sample) in [(&mut *u, u_sample), (&mut *v, v_sample)] {
        if let Some(sample) = sample {
            let (_, grad) = loss_and_grad(&dev.params, &[sample], cfg, rng)?;
            adam_step(&mut dev.params.values, &grad, &mut dev.adam)?;
        }
    }
    for (a, b) in u.params.values.iter_mut().zip(v.params.values.iter_mut()) {
        let mean = 0.5 * (*a + *b);
        *a = mean;
        *b = mean;
    }
    Ok(())
}
