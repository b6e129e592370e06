//! Per-device diffusion state machine and its wire codec.
//!
//! A device keeps the latest shares heard from each neighbor in two maps,
//! one for the predictions signal and one for the errors signal. Every
//! exchange is a send on one side, a receive on the other and an acknowledge
//! back on the initiator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::DiffusionParams;

/// Diffusion rate and the weight applied to diffused errors in `combined`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceHyper {
    pub beta: f64,
    pub s: f64,
}

impl DeviceHyper {
    /// Device constants whose fixed point is `fdiff_scale` with `p`.
    pub fn for_diffusion(p: &DiffusionParams) -> Self {
        DeviceHyper {
            beta: p.beta,
            s: p.error_weight(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: usize,
    pub pred_share: Vec<f64>,
    pub err_share: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub id: usize,
    pub base_prediction: Vec<f64>,
    /// Label row; all zeros on unlabeled devices.
    pub target: Vec<f64>,
    pub prediction: Vec<f64>,
    pub error: Vec<f64>,
    pub combined: Vec<f64>,
    /// Latest prediction share received from each peer.
    pub predictions: BTreeMap<usize, Vec<f64>>,
    /// Latest error share received from each peer.
    pub errors: BTreeMap<usize, Vec<f64>>,
    pub hyper: DeviceHyper,
}

fn check_len(v: &[f64], c: usize, what: &'static str) -> Result<()> {
    if v.len() != c {
        return Err(Error::dim(c, v.len(), what));
    }
    Ok(())
}

fn sum_rows<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; c];
    for r in rows {
        for (o, x) in out.iter_mut().zip(r) {
            *o += x;
        }
    }
    out
}

impl DeviceState {
    pub fn new(id: usize, n_classes: usize, hyper: DeviceHyper) -> Self {
        DeviceState {
            id,
            base_prediction: vec![0.0; n_classes],
            target: vec![0.0; n_classes],
            prediction: vec![0.0; n_classes],
            error: vec![0.0; n_classes],
            combined: vec![0.0; n_classes],
            predictions: BTreeMap::new(),
            errors: BTreeMap::new(),
            hyper,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.prediction.len()
    }

    pub fn is_labeled(&self) -> bool {
        self.target.iter().any(|&x| x != 0.0)
    }

    pub fn initialize(&mut self, base_prediction: &[f64], target: &[f64]) -> Result<()> {
        let c = self.n_classes();
        check_len(base_prediction, c, "base prediction")?;
        check_len(target, c, "target")?;
        self.predictions.clear();
        self.errors.clear();
        self.target.copy_from_slice(target);
        self.error.iter_mut().for_each(|x| *x = 0.0);
        self.update(base_prediction)
    }

    /// Swaps in a new base prediction, keeping the neighbor maps.
    pub fn update(&mut self, base_prediction: &[f64]) -> Result<()> {
        check_len(base_prediction, self.n_classes(), "base prediction")?;
        self.base_prediction.copy_from_slice(base_prediction);
        self.prediction.copy_from_slice(base_prediction);
        if self.is_labeled() {
            for ((e, t), b) in self.error.iter_mut().zip(&self.target).zip(base_prediction) {
                *e = t - b;
            }
        }
        self.refresh_combined();
        Ok(())
    }

    fn refresh_combined(&mut self) {
        self.combined.copy_from_slice(&self.base_prediction);
        if !self.is_labeled() {
            for (x, e) in self.combined.iter_mut().zip(&self.error) {
                *x += self.hyper.s * e;
            }
        }
    }

    pub fn send(&self, _peer: usize) -> Message {
        let pred_div = (self.predictions.len().max(1) as f64).sqrt();
        let err_div = self.errors.len().max(1) as f64;
        Message {
            sender: self.id,
            pred_share: self.prediction.iter().map(|x| x / pred_div).collect(),
            err_share: self.error.iter().map(|x| x / err_div).collect(),
        }
    }

    /// Answers `msg` with this device's shares as they were before absorbing it.
    pub fn receive(&mut self, peer: usize, msg: &Message) -> Result<Message> {
        self.check_message(peer, msg)?;
        let reply = self.send(peer);
        self.absorb(peer, msg);
        Ok(reply)
    }

    pub fn acknowledge(&mut self, peer: usize, msg: &Message) -> Result<()> {
        self.check_message(peer, msg)?;
        self.absorb(peer, msg);
        Ok(())
    }

    fn check_message(&self, peer: usize, msg: &Message) -> Result<()> {
        if peer == self.id {
            return Err(Error::Protocol(format!("device {peer} cannot message itself")));
        }
        if msg.sender != peer {
            return Err(Error::Protocol(format!(
                "message claims sender {} but arrived from {peer}",
                msg.sender
            )));
        }
        let c = self.n_classes();
        if msg.pred_share.len() != c || msg.err_share.len() != c {
            return Err(Error::Protocol(format!(
                "message from {peer} has {}/{} entries, expected {c}",
                msg.pred_share.len(),
                msg.err_share.len()
            )));
        }
        if !msg.pred_share.iter().chain(&msg.err_share).all(|x| x.is_finite()) {
            return Err(Error::Protocol(format!("non-finite share from {peer}")));
        }
        Ok(())
    }

    fn absorb(&mut self, peer: usize, msg: &Message) {
        let c = self.n_classes();
        self.predictions.insert(peer, msg.pred_share.clone());
        self.errors.insert(peer, msg.err_share.clone());
        if !self.is_labeled() {
            self.error = sum_rows(self.errors.values(), c);
        }
        self.refresh_combined();
        let beta = self.hyper.beta;
        let scale = beta / (self.predictions.len().max(1) as f64).sqrt();
        let neighborhood = sum_rows(self.predictions.values(), c);
        for ((p, comb), nb) in self.prediction.iter_mut().zip(&self.combined).zip(&neighborhood) {
            *p = (1.0 - beta) * comb + scale * nb;
        }
    }
}

/// Encoded size of one message with `n_classes` entries per share.
pub fn message_len(n_classes: usize) -> usize {
    4 + 2 + 2 * n_classes * 8
}

pub fn encode_message(msg: &Message) -> Result<Vec<u8>> {
    let c = msg.pred_share.len();
    if msg.err_share.len() != c {
        return Err(Error::Codec(format!(
            "share lengths differ ({} vs {})",
            c,
            msg.err_share.len()
        )));
    }
    let sender = u32::try_from(msg.sender)
        .map_err(|_| Error::Codec(format!("sender id {} exceeds u32", msg.sender)))?;
    let c16 = u16::try_from(c).map_err(|_| Error::Codec(format!("{c} classes exceed u16")))?;
    let mut out = Vec::with_capacity(message_len(c));
    out.extend_from_slice(&sender.to_le_bytes());
    out.extend_from_slice(&c16.to_le_bytes());
    for x in msg.pred_share.iter().chain(&msg.err_share) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_message(bytes: &[u8]) -> Result<Message> {
    if bytes.len() < 6 {
        return Err(Error::Codec(format!("message of {} bytes is shorter than its header", bytes.len())));
    }
    let sender = u32::from_le_bytes(bytes[0..4].try_into().expect("4-byte slice")) as usize;
    let c = u16::from_le_bytes(bytes[4..6].try_into().expect("2-byte slice")) as usize;
    if bytes.len() != message_len(c) {
        return Err(Error::Codec(format!(
            "message declares {c} classes ({} bytes) but has {} bytes",
            message_len(c),
            bytes.len()
        )));
    }
    let mut values = bytes[6..]
        .chunks_exact(8)
        .map(|ch| f64::from_le_bytes(ch.try_into().expect("8-byte chunk")));
    let pred_share: Vec<f64> = values.by_ref().take(c).collect();
    let err_share: Vec<f64> = values.collect();
    Ok(Message {
        sender,
        pred_share,
        err_share,
    })
}
