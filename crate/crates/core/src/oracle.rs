//! Centralized constrained personalized PageRank and FDiff-scale.
//!
//! This is the reference the decentralized runtime is checked against, so it
//! favours the plain power-iteration form over anything clever.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{propagate, Graph, NodeSet, Normalization};
use crate::table::PredictionTable;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// FDiff-scale hyperparameters: diffusion rate `beta` (restart probability
/// is `1 - beta`) and error scale `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub beta: f64,
    pub s: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        DiffusionParams { beta: 0.9, s: 1.0 }
    }
}

impl DiffusionParams {
    /// Weight of the diffused error in the combined signal, `(1 - beta)·s`.
    pub fn error_weight(&self) -> f64 {
        (1.0 - self.beta) * self.s
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if !self.s.is_finite() {
            return Err(Error::Parameter(format!("error scale s must be finite, got {}", self.s)));
        }
        Ok(())
    }
}

/// Parameters of one constrained personalized PageRank sub-operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PprParams {
    pub beta: f64,
    pub a: f64,
    pub d: Normalization,
    pub gamma: f64,
}

impl PprParams {
    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::Parameter(format!("a must lie in [0, 1], got {}", self.a)));
        }
        if self.a == 1.0 && self.d != Normalization::Column {
            return Err(Error::Parameter(
                "a = 1 is only defined together with d = 0".into(),
            ));
        }
        if !self.gamma.is_finite() {
            return Err(Error::Parameter("gamma must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PprOptions {
    /// Reset training rows to `P_γ·pi0` after every iteration.
    pub clamp_train: bool,
    /// Diffuse over the masked adjacency (training nodes never receive).
    pub mask_train: bool,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PprOptions {
    fn default() -> Self {
        PprOptions {
            clamp_train: false,
            mask_train: false,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PprRun {
    pub table: PredictionTable,
    pub iterations: usize,
    /// L∞ change of the last iteration.
    pub residual: f64,
}

/// Diagonal of `P_γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonalizationScale {
    pub diag: Vec<f64>,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Parameter(format!("beta must lie in [0, 1), got {beta}")));
    }
    Ok(())
}

pub fn personalization_scale(
    beta: f64,
    gamma: f64,
    train: &NodeSet,
    n: usize,
) -> Result<PersonalizationScale> {
    check_beta(beta)?;
    let other = (1.0 - gamma) / (1.0 - beta);
    Ok(PersonalizationScale {
        diag: (0..n)
            .map(|u| if train.contains(u) { 1.0 } else { other })
            .collect(),
    })
}

/// Power iteration for `π ← a·M π + (1-a)·P_γ pi0`, where `M` is the
/// normalized adjacency chosen by `p.d` (masked when `opts.mask_train`).
///
/// With `a = 1` the restart term vanishes and training rows are always held
/// at their personalization, acting as absorbing sources.
pub fn constrained_ppr(
    g: &Graph,
    pi0: &PredictionTable,
    p: &PprParams,
    train: &NodeSet,
    opts: &PprOptions,
) -> Result<PprRun> {
    p.validate()?;
    let n = g.n_nodes();
    if pi0.n_rows() != n {
        return Err(Error::dim(n, pi0.n_rows(), "personalization rows"));
    }
    if !pi0.is_finite() {
        return Err(Error::Validation("personalization contains non-finite values".into()));
    }
    let scale = personalization_scale(p.beta, p.gamma, train, n)?;
    let mut personal = pi0.clone();
    for (u, s) in scale.diag.iter().enumerate() {
        personal.row_mut(u).iter_mut().for_each(|x| *x *= s);
    }
    let clamp = opts.clamp_train || p.a == 1.0;
    let train_ids: Vec<usize> = train.iter().filter(|&u| u < n).collect();
    let mask = opts.mask_train.then_some(train);
    let restart = 1.0 - p.a;

    let mut current = personal.clone();
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iters {
        let mut next = propagate(g, &current, p.d, mask)?;
        for (x, q) in next.as_mut_slice().iter_mut().zip(personal.as_slice()) {
            *x = p.a * *x + restart * q;
        }
        if clamp {
            for &u in &train_ids {
                next.row_mut(u).copy_from_slice(personal.row(u));
            }
        }
        residual = next.linf_distance(&current)?;
        current = next;
        if residual < opts.tol {
            return Ok(PprRun {
                table: current,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iters,
        residual,
        tolerance: opts.tol,
    })
}

/// Intermediate and final tables of one FDiff-scale evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FdiffOutput {
    pub predictions: PredictionTable,
    pub diffused_errors: PredictionTable,
    pub combined: PredictionTable,
    pub error_iterations: usize,
    pub smoothing_iterations: usize,
}

/// FDiff-scale: diffuse training errors `Y - R` with training rows clamped,
/// add them (scaled by `(1 - beta)·s`) to the base predictions of non-training nodes,
/// then smooth the result with personalized PageRank.
pub fn fdiff_scale(
    g: &Graph,
    base: &PredictionTable,
    labels: &PredictionTable,
    train: &NodeSet,
    p: &DiffusionParams,
    tol: f64,
    max_iters: usize,
) -> Result<FdiffOutput> {
    p.validate()?;
    base.check_same_shape(labels)?;
    if !base.is_finite() {
        return Err(Error::Validation("base predictions contain non-finite values".into()));
    }
    let n = g.n_nodes();
    let c = base.n_cols();

    let mut err0 = PredictionTable::zeros(n, c);
    for u in train.iter().filter(|&u| u < n) {
        for ((e, y), r) in err0.row_mut(u).iter_mut().zip(labels.row(u)).zip(base.row(u)) {
            *e = y - r;
        }
    }
    let error_stage = PprParams {
        beta: p.beta,
        a: 1.0,
        d: Normalization::Column,
        gamma: 1.0,
    };
    let errors = constrained_ppr(
        g,
        &err0,
        &error_stage,
        train,
        &PprOptions {
            clamp_train: true,
            mask_train: true,
            tol,
            max_iters,
        },
    )?;

    let mut combined = base.clone();
    let scale = p.error_weight();
    for u in (0..n).filter(|&u| !train.contains(u)) {
        for (x, e) in combined.row_mut(u).iter_mut().zip(errors.table.row(u)) {
            *x += scale * e;
        }
    }

    let smoothing_stage = PprParams {
        beta: p.beta,
        a: p.beta,
        d: Normalization::Symmetric,
        gamma: p.beta,
    };
    let smoothed = constrained_ppr(
        g,
        &combined,
        &smoothing_stage,
        train,
        &PprOptions {
            clamp_train: false,
            mask_train: false,
            tol,
            max_iters,
        },
    )?;

    Ok(FdiffOutput {
        predictions: smoothed.table,
        diffused_errors: errors.table,
        combined,
        error_iterations: errors.iterations,
        smoothing_iterations: smoothed.iterations,
    })
}

/// Fraction of `subset` whose argmax prediction equals the argmax label.
pub fn accuracy(pred: &PredictionTable, labels: &PredictionTable, subset: &NodeSet) -> Result<f64> {
    pred.check_same_shape(labels)?;
    if subset.is_empty() {
        return Err(Error::Validation("accuracy over an empty node set".into()));
    }
    let mut correct = 0usize;
    for u in subset.iter() {
        if u >= labels.n_rows() {
            return Err(Error::Validation(format!("node {u} out of range")));
        }
        if labels.row(u).iter().all(|&x| x == 0.0) {
            return Err(Error::Validation(format!("node {u} has no label")));
        }
        if pred.argmax(u) == labels.argmax(u) {
            correct += 1;
        }
    }
    Ok(correct as f64 / subset.len() as f64)
}
