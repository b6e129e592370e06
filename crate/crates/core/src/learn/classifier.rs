use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeData;
use crate::table::PredictionTable;
use crate::learn::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    /// Repeats stored label rows; no parameters.
    Label,
    /// Multiclass logistic regression, `softmax(W x + b)`.
    Lr,
    /// Two dense layers with a ReLU hidden layer.
    Mlp,
}

impl ClassifierKind {
    pub fn code(self) -> u32 {
        match self {
            ClassifierKind::Label => 0,
            ClassifierKind::Lr => 1,
            ClassifierKind::Mlp => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(ClassifierKind::Label),
            1 => Some(ClassifierKind::Lr),
            2 => Some(ClassifierKind::Mlp),
            _ => None,
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "label" | "labels" => Ok(ClassifierKind::Label),
            "lr" => Ok(ClassifierKind::Lr),
            "mlp" => Ok(ClassifierKind::Mlp),
            other => Err(Error::Config(format!(
                "unknown classifier {other:?} (expected label, lr or mlp)"
            ))),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassifierKind::Label => "label",
            ClassifierKind::Lr => "lr",
            ClassifierKind::Mlp => "mlp",
        })
    }
}

/// Shape of one parameter tensor; biases are `(n, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorShape {
    pub rows: usize,
    pub cols: usize,
    pub is_weight: bool,
}

impl TensorShape {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All trainable values of one classifier, flattened tensor after tensor in
/// row-major order.
///
/// LR: `W (C×F)`, `b (C)`. MLP: `W1 (H×F)`, `b1 (H)`, `W2 (C×H)`, `b2 (C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    pub kind: ClassifierKind,
    pub n_features: usize,
    pub n_classes: usize,
    pub hidden: usize,
    pub values: Vec<f64>,
}

pub fn tensor_shapes(
    kind: ClassifierKind,
    n_features: usize,
    n_classes: usize,
    hidden: usize,
) -> Vec<TensorShape> {
    let w = |rows, cols| TensorShape {
        rows,
        cols,
        is_weight: true,
    };
    let b = |rows| TensorShape {
        rows,
        cols: 1,
        is_weight: false,
    };
    match kind {
        ClassifierKind::Label => Vec::new(),
        ClassifierKind::Lr => vec![w(n_classes, n_features), b(n_classes)],
        ClassifierKind::Mlp => vec![
            w(hidden, n_features),
            b(hidden),
            w(n_classes, hidden),
            b(n_classes),
        ],
    }
}

impl ClassifierParams {
    pub fn zeros(kind: ClassifierKind, n_features: usize, n_classes: usize, hidden: usize) -> Self {
        let hidden = if kind == ClassifierKind::Mlp { hidden } else { 0 };
        let len = tensor_shapes(kind, n_features, n_classes, hidden)
            .iter()
            .map(TensorShape::len)
            .sum();
        ClassifierParams {
            kind,
            n_features,
            n_classes,
            hidden,
            values: vec![0.0; len],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(
        kind: ClassifierKind,
        n_features: usize,
        n_classes: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(kind, n_features, n_classes, hidden);
        let mut offset = 0;
        for shape in p.shapes() {
            if shape.is_weight {
                let limit = (6.0 / (shape.rows + shape.cols) as f64).sqrt();
                for x in &mut p.values[offset..offset + shape.len()] {
                    *x = rng.gen_range(-limit..=limit);
                }
            }
            offset += shape.len();
        }
        p
    }

    pub fn shapes(&self) -> Vec<TensorShape> {
        tensor_shapes(self.kind, self.n_features, self.n_classes, self.hidden)
    }

    pub fn n_params(&self) -> usize {
        self.values.len()
    }

    /// Offsets of the weight matrices (the L2-regularized part).
    pub fn weight_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut offset = 0;
        for s in self.shapes() {
            if s.is_weight {
                out.push(offset..offset + s.len());
            }
            offset += s.len();
        }
        out
    }

    pub fn check_compatible(&self, other: &ClassifierParams) -> Result<()> {
        if self.kind != other.kind
            || self.n_features != other.n_features
            || self.n_classes != other.n_classes
            || self.hidden != other.hidden
        {
            return Err(Error::Validation(format!(
                "classifier shapes differ: {}({}→{}, hidden {}) vs {}({}→{}, hidden {})",
                self.kind,
                self.n_features,
                self.n_classes,
                self.hidden,
                other.kind,
                other.n_features,
                other.n_classes,
                other.hidden
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in z.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in z.iter_mut() {
        *x /= sum;
    }
}

/// `out = W x + b` for row-major `W (rows × x.len())`, skipping zero inputs.
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    out.copy_from_slice(b);
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for (r, o) in out.iter_mut().enumerate() {
                *o += w[r * cols + j] * xj;
            }
        }
    }
}

/// Intermediate activations kept for backpropagation.
pub(crate) struct Trace {
    pub probs: Vec<f64>,
    /// MLP hidden activations after ReLU and dropout.
    pub hidden: Vec<f64>,
    /// Per-unit multiplier applied by dropout (0 or 1/(1-p)); 1 when inactive.
    pub keep: Vec<f64>,
}

pub(crate) fn forward_trace<R: Rng + ?Sized>(
    params: &ClassifierParams,
    x: &[f64],
    dropout: Option<f64>,
    rng: &mut R,
) -> Result<Trace> {
    if x.len() != params.n_features {
        return Err(Error::dim(params.n_features, x.len(), "feature vector"));
    }
    let (f, c, h) = (params.n_features, params.n_classes, params.hidden);
    let v = &params.values;
    match params.kind {
        ClassifierKind::Label => Err(Error::Parameter(
            "the label classifier has no forward pass; read stored label rows instead".into(),
        )),
        ClassifierKind::Lr => {
            let mut z = vec![0.0; c];
            affine(&v[..c * f], &v[c * f..c * f + c], x, &mut z);
            softmax_in_place(&mut z);
            Ok(Trace {
                probs: z,
                hidden: Vec::new(),
                keep: Vec::new(),
            })
        }
        ClassifierKind::Mlp => {
            let (w1, rest) = v.split_at(h * f);
            let (b1, rest) = rest.split_at(h);
            let (w2, b2) = rest.split_at(c * h);
            let mut hidden = vec![0.0; h];
            affine(w1, b1, x, &mut hidden);
            let mut keep = vec![1.0; h];
            for (a, k) in hidden.iter_mut().zip(keep.iter_mut()) {
                if *a < 0.0 {
                    *a = 0.0;
                }
                if let Some(p) = dropout.filter(|&p| p > 0.0) {
                    *k = if rng.gen::<f64>() < p { 0.0 } else { 1.0 / (1.0 - p) };
                    *a *= *k;
                }
            }
            let mut z = vec![0.0; c];
            affine(w2, b2, &hidden, &mut z);
            softmax_in_place(&mut z);
            Ok(Trace {
                probs: z,
                hidden,
                keep,
            })
        }
    }
}

/// Class distribution for one feature vector. Dropout (inverted, MLP hidden
/// layer only) is applied only in training mode.
pub fn forward<R: Rng + ?Sized>(
    params: &ClassifierParams,
    x: &[f64],
    training_mode: bool,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dropout = training_mode.then_some(cfg.dropout);
    Ok(forward_trace(params, x, dropout, rng)?.probs)
}

/// Evaluation-mode predictions for every node.
pub fn predict_table(params: &ClassifierParams, data: &NodeData) -> Result<PredictionTable> {
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let mut out = PredictionTable::zeros(data.n_nodes(), params.n_classes);
    for u in 0..data.n_nodes() {
        let p = forward_trace(params, data.features(u), None, &mut rng)?.probs;
        out.row_mut(u).copy_from_slice(&p);
    }
    Ok(out)
}

/// One labeled example: features and a one-hot target.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Mean cross-entropy over `batch` plus `l2 · Σ‖W‖²`, and its gradient.
///
/// Dropout masks are drawn from `rng` once per sample per call.
pub fn loss_and_grad<R: Rng + ?Sized>(
    params: &ClassifierParams,
    batch: &[Sample<'_>],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Validation("empty training batch".into()));
    }
    let (f, c, h) = (params.n_features, params.n_classes, params.hidden);
    let mut grad = vec![0.0; params.n_params()];
    let mut loss = 0.0;
    let dropout = (cfg.dropout > 0.0).then_some(cfg.dropout);
    let scale = 1.0 / batch.len() as f64;

    for sample in batch {
        if sample.y.len() != c {
            return Err(Error::dim(c, sample.y.len(), "target vector"));
        }
        let trace = forward_trace(params, sample.x, dropout, rng)?;
        loss -= sample
            .y
            .iter()
            .zip(&trace.probs)
            .filter(|(&y, _)| y != 0.0)
            .map(|(&y, &p)| y * p.max(f64::MIN_POSITIVE).ln())
            .sum::<f64>();
        // d(CE)/dz = p - y for softmax outputs
        let dz: Vec<f64> = trace
            .probs
            .iter()
            .zip(sample.y)
            .map(|(p, y)| (p - y) * scale)
            .collect();
        match params.kind {
            ClassifierKind::Label => unreachable!("forward_trace rejects label classifiers"),
            ClassifierKind::Lr => {
                let (gw, gb) = grad.split_at_mut(c * f);
                outer_add(gw, &dz, sample.x);
                for (g, d) in gb.iter_mut().zip(&dz) {
                    *g += d;
                }
            }
            ClassifierKind::Mlp => {
                let w2 = &params.values[h * f + h..h * f + h + c * h];
                let (gw1, rest) = grad.split_at_mut(h * f);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(c * h);
                outer_add(gw2, &dz, &trace.hidden);
                for (g, d) in gb2.iter_mut().zip(&dz) {
                    *g += d;
                }
                // back through W2, dropout and ReLU
                let mut dh = vec![0.0; h];
                for (k, d) in dz.iter().enumerate() {
                    for (j, g) in dh.iter_mut().enumerate() {
                        *g += w2[k * h + j] * d;
                    }
                }
                for (j, g) in dh.iter_mut().enumerate() {
                    *g = if trace.hidden[j] > 0.0 { *g * trace.keep[j] } else { 0.0 };
                }
                outer_add(gw1, &dh, sample.x);
                for (g, d) in gb1.iter_mut().zip(&dh) {
                    *g += d;
                }
            }
        }
    }
    loss *= scale;

    if cfg.l2 != 0.0 {
        for range in params.weight_ranges() {
            for i in range {
                let w = params.values[i];
                loss += cfg.l2 * w * w;
                grad[i] += 2.0 * cfg.l2 * w;
            }
        }
    }
    Ok((loss, grad))
}

/// `g += a bᵀ` for row-major `g (a.len() × b.len())`, skipping zero `b` entries.
fn outer_add(g: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (j, &bj) in b.iter().enumerate() {
        if bj != 0.0 {
            for (r, &ar) in a.iter().enumerate() {
                g[r * cols + j] += ar * bj;
            }
        }
    }
}

/// Mean cross-entropy without dropout or regularization.
pub fn evaluation_loss(params: &ClassifierParams, batch: &[Sample<'_>]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Validation("empty evaluation batch".into()));
    }
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let mut loss = 0.0;
    for s in batch {
        let p = forward_trace(params, s.x, None, &mut rng)?.probs;
        loss -= s
            .y
            .iter()
            .zip(&p)
            .filter(|(&y, _)| y != 0.0)
            .map(|(&y, &p)| y * p.max(f64::MIN_POSITIVE).ln())
            .sum::<f64>();
    }
    Ok(loss / batch.len() as f64)
}
