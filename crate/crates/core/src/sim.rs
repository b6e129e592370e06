//! Discrete-time simulation of devices exchanging messages over graph edges.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph, NodeSet};
use crate::learn::{
    gossip_pair_update, payload_len, predict_table, AdamState, ClassifierKind, ClassifierParams,
    GossipDevice, Sample, TrainConfig,
};
use crate::oracle::{accuracy, fdiff_scale, DiffusionParams, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::p2p::{decode_message, encode_message, DeviceHyper, DeviceState, Message};
use crate::table::PredictionTable;

/// Fixed per-edge activation probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunicationSchedule {
    /// Undirected edges `(u, v)` with `u < v`, aligned with `probs`.
    pub edges: Vec<(usize, usize)>,
    pub probs: Vec<f64>,
    pub sigma_max: f64,
    pub seed: u64,
    /// Smallest edge probability (0 for an edgeless graph).
    pub p_com: f64,
}

pub fn build_schedule(g: &Graph, sigma_max: f64, seed: u64) -> Result<CommunicationSchedule> {
    build_schedule_in_range(g, 0.0, sigma_max, seed)
}

/// Edge probabilities drawn iid uniform on `[lo, hi]`.
pub fn build_schedule_in_range(
    g: &Graph,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<CommunicationSchedule> {
    if !(hi > 0.0 && hi < 1.0) || !(0.0..=hi).contains(&lo) {
        return Err(Error::Parameter(format!(
            "edge probability range [{lo}, {hi}] must satisfy 0 <= lo <= hi < 1, hi > 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = g.edges();
    let probs: Vec<f64> = edges.iter().map(|_| rng.gen_range(lo..=hi)).collect();
    Ok(CommunicationSchedule::from_parts(edges, probs, hi, seed))
}

impl CommunicationSchedule {
    fn from_parts(edges: Vec<(usize, usize)>, probs: Vec<f64>, sigma_max: f64, seed: u64) -> Self {
        let p_com = if probs.is_empty() {
            0.0
        } else {
            probs.iter().copied().fold(f64::INFINITY, f64::min)
        };
        CommunicationSchedule {
            edges,
            probs,
            sigma_max,
            seed,
            p_com,
        }
    }

    /// The same draws multiplied by `factor`, for paired rate comparisons.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor * self.sigma_max < 1.0) {
            return Err(Error::Parameter(format!("invalid rate factor {factor}")));
        }
        Ok(Self::from_parts(
            self.edges.clone(),
            self.probs.iter().map(|p| p * factor).collect(),
            self.sigma_max * factor,
            self.seed,
        ))
    }
}

/// One protocol exchange; `initiator` sends first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub initiator: usize,
    pub responder: usize,
}

/// Per-device models and optimizers for gossip training.
#[derive(Debug, Clone)]
pub struct GossipTraining {
    pub dataset: Arc<Dataset>,
    /// Devices that hold a label and take gradient steps.
    pub labeled: NodeSet,
    pub devices: Vec<GossipDevice>,
    pub cfg: TrainConfig,
    rng: ChaCha8Rng,
}

impl GossipTraining {
    /// Fresh Glorot-initialized model on every device, seeded per device.
    pub fn new(
        dataset: Arc<Dataset>,
        labeled: NodeSet,
        kind: ClassifierKind,
        cfg: TrainConfig,
        seed: u64,
    ) -> Result<Self> {
        if kind == ClassifierKind::Label {
            return Err(Error::Parameter("gossip training needs a trainable classifier".into()));
        }
        cfg.validate()?;
        let data = &dataset.data;
        let devices = (0..data.n_nodes())
            .map(|u| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(u as u64 + 1);
                let params = ClassifierParams::init(
                    kind,
                    data.n_features(),
                    data.n_classes(),
                    cfg.hidden,
                    &mut rng,
                );
                // only labeled devices ever step, so only they carry moments
                let n_moments = if labeled.contains(u) { params.n_params() } else { 0 };
                GossipDevice {
                    params,
                    adam: AdamState::new(n_moments, cfg.lr),
                }
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        Ok(GossipTraining {
            dataset,
            labeled,
            devices,
            cfg,
            rng,
        })
    }

    pub fn base_prediction(&self, u: usize) -> Result<Vec<f64>> {
        let cfg = TrainConfig {
            dropout: 0.0,
            ..self.cfg.clone()
        };
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        crate::learn::forward(&self.devices[u].params, self.dataset.data.features(u), false, &cfg, &mut rng)
    }

    pub fn base_table(&self) -> Result<PredictionTable> {
        let n = self.devices.len();
        let c = self.dataset.data.n_classes();
        let mut out = PredictionTable::zeros(n, c);
        for u in 0..n {
            out.row_mut(u).copy_from_slice(&self.base_prediction(u)?);
        }
        Ok(out)
    }

    /// Bytes of one model on the wire.
    pub fn parameter_bytes(&self) -> usize {
        self.devices.first().map_or(0, |d| payload_len(&d.params))
    }

    fn exchange(&mut self, u: usize, v: usize) -> Result<()> {
        let data = &self.dataset.data;
        let yu = self.labeled.contains(u).then(|| data.label_row(u));
        let yv = self.labeled.contains(v).then(|| data.label_row(v));
        let su = yu.as_deref().map(|y| Sample { x: data.features(u), y });
        let sv = yv.as_deref().map(|y| Sample { x: data.features(v), y });
        let (a, b) = pair_mut(&mut self.devices, u, v);
        gossip_pair_update(a, su, b, sv, &self.cfg, &mut self.rng)
    }
}

fn pair_mut<T>(items: &mut [T], u: usize, v: usize) -> (&mut T, &mut T) {
    assert_ne!(u, v);
    if u < v {
        let (lo, hi) = items.split_at_mut(v);
        (&mut lo[u], &mut hi[0])
    } else {
        let (lo, hi) = items.split_at_mut(u);
        (&mut hi[0], &mut lo[v])
    }
}

/// One simulated network: devices, schedule and byte counters.
#[derive(Debug, Clone)]
pub struct Simulation {
    graph: Arc<Graph>,
    schedule: CommunicationSchedule,
    devices: Vec<DeviceState>,
    gossip: Option<GossipTraining>,
    rng: ChaCha8Rng,
    engaged: Vec<u64>,
    t: u64,
    bytes_diffusion: u64,
    bytes_training: u64,
}

impl Simulation {
    /// Devices start from `base` rows; nonzero `targets` rows mark labeled devices.
    pub fn new(
        graph: Arc<Graph>,
        base: &PredictionTable,
        targets: &PredictionTable,
        hyper: DeviceHyper,
        schedule: CommunicationSchedule,
        seed: u64,
    ) -> Result<Self> {
        let n = graph.n_nodes();
        if base.n_rows() != n {
            return Err(Error::dim(n, base.n_rows(), "base prediction rows"));
        }
        base.check_same_shape(targets)?;
        if schedule.edges.len() != graph.n_edges() {
            return Err(Error::dim(graph.n_edges(), schedule.edges.len(), "schedule edges"));
        }
        let devices = (0..n)
            .map(|u| {
                let mut d = DeviceState::new(u, base.n_cols(), hyper);
                d.initialize(base.row(u), targets.row(u))?;
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulation {
            graph,
            schedule,
            devices,
            gossip: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            engaged: vec![u64::MAX; n],
            t: 0,
            bytes_diffusion: 0,
            bytes_training: 0,
        })
    }

    /// Co-runs gossip training; device base predictions come from its models.
    pub fn with_gossip(mut self, gossip: GossipTraining) -> Result<Self> {
        if gossip.devices.len() != self.devices.len() {
            return Err(Error::dim(self.devices.len(), gossip.devices.len(), "gossip devices"));
        }
        for (u, d) in self.devices.iter_mut().enumerate() {
            d.update(&gossip.base_prediction(u)?)?;
        }
        self.gossip = Some(gossip);
        Ok(self)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn schedule(&self) -> &CommunicationSchedule {
        &self.schedule
    }

    pub fn devices(&self) -> &[DeviceState] {
        &self.devices
    }

    pub fn gossip(&self) -> Option<&GossipTraining> {
        self.gossip.as_ref()
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn bytes_diffusion(&self) -> u64 {
        self.bytes_diffusion
    }

    pub fn bytes_training(&self) -> u64 {
        self.bytes_training
    }

    pub fn predictions(&self) -> PredictionTable {
        let c = self.devices.first().map_or(0, DeviceState::n_classes);
        let mut out = PredictionTable::zeros(self.devices.len(), c);
        for (u, d) in self.devices.iter().enumerate() {
            out.row_mut(u).copy_from_slice(&d.prediction);
        }
        out
    }

    pub fn base_predictions(&self) -> PredictionTable {
        let c = self.devices.first().map_or(0, DeviceState::n_classes);
        let mut out = PredictionTable::zeros(self.devices.len(), c);
        for (u, d) in self.devices.iter().enumerate() {
            out.row_mut(u).copy_from_slice(&d.base_prediction);
        }
        out
    }

    /// Samples this step's active edges and keeps a conflict-free subset.
    fn draw_events(&mut self) -> Vec<Event> {
        let mut active: Vec<(usize, usize)> = self
            .schedule
            .edges
            .iter()
            .zip(&self.schedule.probs)
            .filter(|(_, &p)| self.rng.gen::<f64>() < p)
            .map(|(&e, _)| e)
            .collect();
        active.shuffle(&mut self.rng);
        let stamp = self.t;
        let mut events = Vec::new();
        for (a, b) in active {
            let flip = self.rng.gen::<bool>();
            if self.engaged[a] == stamp || self.engaged[b] == stamp {
                continue;
            }
            self.engaged[a] = stamp;
            self.engaged[b] = stamp;
            let (initiator, responder) = if flip { (b, a) } else { (a, b) };
            events.push(Event {
                initiator,
                responder,
            });
        }
        events
    }

    fn transmit(&mut self, msg: &Message) -> Result<Message> {
        let bytes = encode_message(msg)?;
        self.bytes_diffusion += bytes.len() as u64;
        decode_message(&bytes)
    }

    /// Advances one time step and returns the exchanges that took place.
    pub fn step(&mut self) -> Result<Vec<Event>> {
        let events = self.draw_events();
        for ev in &events {
            let (u, v) = (ev.initiator, ev.responder);
            if let Some(gossip) = self.gossip.as_mut() {
                gossip.exchange(u, v)?;
                self.bytes_training += 2 * gossip.parameter_bytes() as u64;
                let (bu, bv) = (gossip.base_prediction(u)?, gossip.base_prediction(v)?);
                self.devices[u].update(&bu)?;
                self.devices[v].update(&bv)?;
            }
            let msg = self.devices[u].send(v);
            let msg = self.transmit(&msg)?;
            let reply = self.devices[v].receive(u, &msg)?;
            let reply = self.transmit(&reply)?;
            self.devices[u].acknowledge(v, &reply)?;
        }
        self.t += 1;
        Ok(events)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingMode {
    /// Every device holds the same centrally pretrained classifier.
    Pretrained,
    /// Devices train their own classifiers by gossip averaging while diffusing.
    Gossip,
    /// Base predictions are the known label rows.
    Labels,
}

impl std::str::FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pretrained" => Ok(TrainingMode::Pretrained),
            "gossip" => Ok(TrainingMode::Gossip),
            "labels" | "label" => Ok(TrainingMode::Labels),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected pretrained, gossip or labels)"
            ))),
        }
    }
}

impl std::fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrainingMode::Pretrained => "pretrained",
            TrainingMode::Gossip => "gossip",
            TrainingMode::Labels => "labels",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub classifier: ClassifierKind,
    pub mode: TrainingMode,
    pub diffusion: DiffusionParams,
    pub steps: u64,
    pub repetitions: u32,
    pub sigma_max: f64,
    /// Multiplies every drawn edge probability (0.5 for the paired half-rate run).
    pub rate_factor: f64,
    pub seed: u64,
    pub metrics_every: u64,
    pub compare_oracle: bool,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            classifier: ClassifierKind::Lr,
            mode: TrainingMode::Pretrained,
            diffusion: DiffusionParams::default(),
            steps: 1000,
            repetitions: 5,
            sigma_max: 0.1,
            rate_factor: 1.0,
            seed: 0,
            metrics_every: 10,
            compare_oracle: true,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.diffusion.validate()?;
        self.train.validate()?;
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.metrics_every == 0 {
            return Err(Error::Config("metrics_every must be at least 1".into()));
        }
        if !(self.sigma_max > 0.0 && self.sigma_max < 1.0) {
            return Err(Error::Config(format!("sigma_max {} not in (0, 1)", self.sigma_max)));
        }
        if !(self.rate_factor > 0.0 && self.rate_factor * self.sigma_max < 1.0) {
            return Err(Error::Config(format!("invalid rate factor {}", self.rate_factor)));
        }
        match (self.mode, self.classifier) {
            (TrainingMode::Labels, ClassifierKind::Label) => Ok(()),
            (TrainingMode::Labels, k) => Err(Error::Config(format!(
                "labels mode uses the label classifier, not {k}"
            ))),
            (_, ClassifierKind::Label) => Err(Error::Config(format!(
                "{} mode needs a trainable classifier (lr or mlp)",
                self.mode
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub repetition: u32,
    pub t: u64,
    pub test_accuracy: f64,
    pub linf_to_oracle: Option<f64>,
    pub bytes_diffusion: u64,
    pub bytes_training: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: TrainingMode,
    pub classifier: ClassifierKind,
    pub repetitions: u32,
    pub steps: u64,
    pub final_accuracies: Vec<f64>,
    pub final_accuracy_mean: f64,
    pub final_accuracy_std: f64,
    pub base_accuracy_mean: f64,
    /// Centralized accuracy on the initial base predictions.
    pub oracle_accuracy: Option<f64>,
    pub message_bytes: usize,
    pub parameter_bytes: usize,
    pub bytes_diffusion_mean: f64,
    pub bytes_training_mean: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<MetricsRecord>,
    pub summary: RunSummary,
}

/// Independent seed for repetition `r` of a run seeded with `seed`.
pub fn child_seed(seed: u64, r: u32) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(r) + 1);
    rng.gen()
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Base predictions shared by all repetitions: `pretrained` must hold the
/// classifier in pretrained mode, labels mode reads the known label rows.
fn shared_base(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    known: &NodeSet,
    pretrained: Option<&ClassifierParams>,
) -> Result<Option<PredictionTable>> {
    match cfg.mode {
        TrainingMode::Labels => Ok(Some(ds.data.label_table(Some(known)))),
        TrainingMode::Pretrained => {
            let params = pretrained.ok_or_else(|| {
                Error::Config("pretrained mode needs trained classifier parameters".into())
            })?;
            if params.kind != cfg.classifier {
                return Err(Error::Config(format!(
                    "parameters are for {}, config asks for {}",
                    params.kind, cfg.classifier
                )));
            }
            Ok(Some(predict_table(params, &ds.data)?))
        }
        TrainingMode::Gossip => Ok(None),
    }
}

/// Runs every repetition of an experiment on `ds`.
pub fn run(
    ds: Arc<Dataset>,
    cfg: &ExperimentConfig,
    pretrained: Option<&ClassifierParams>,
) -> Result<RunOutput> {
    cfg.validate()?;
    let known = ds.splits.known();
    let all_labels = ds.data.label_table(None);
    let targets = ds.data.label_table(Some(&known));
    let graph = Arc::new(ds.graph.clone());
    let hyper = DeviceHyper::for_diffusion(&cfg.diffusion);
    let base = shared_base(&ds, cfg, &known, pretrained)?;
    let oracle_of = |base: &PredictionTable| -> Result<PredictionTable> {
        Ok(fdiff_scale(
            &graph,
            base,
            &targets,
            &known,
            &cfg.diffusion,
            DEFAULT_TOL,
            DEFAULT_MAX_ITERS,
        )?
        .predictions)
    };
    let fixed_oracle = match (&base, cfg.compare_oracle) {
        (Some(b), true) => Some(oracle_of(b)?),
        _ => None,
    };
    let mut oracle_accuracy = fixed_oracle
        .as_ref()
        .map(|o| accuracy(o, &all_labels, &ds.splits.test))
        .transpose()?;

    let mut records = Vec::new();
    let mut finals = Vec::new();
    let mut bases = Vec::new();
    let mut bytes_d = Vec::new();
    let mut bytes_t = Vec::new();
    let mut message_bytes = 0;
    let mut parameter_bytes = 0;

    for r in 0..cfg.repetitions {
        let seed = child_seed(cfg.seed, r);
        let schedule = build_schedule(&graph, cfg.sigma_max, seed)?.scaled(cfg.rate_factor)?;
        let mut sim = match &base {
            Some(b) => Simulation::new(graph.clone(), b, &targets, hyper, schedule, seed)?,
            None => {
                let gossip = GossipTraining::new(
                    ds.clone(),
                    known.clone(),
                    cfg.classifier,
                    cfg.train.clone(),
                    seed,
                )?;
                parameter_bytes = gossip.parameter_bytes();
                let init = gossip.base_table()?;
                Simulation::new(graph.clone(), &init, &targets, hyper, schedule, seed)?
                    .with_gossip(gossip)?
            }
        };
        message_bytes = crate::p2p::message_len(ds.data.n_classes());
        let initial_base = sim.base_predictions();
        bases.push(accuracy(&initial_base, &all_labels, &ds.splits.test)?);
        if oracle_accuracy.is_none() && cfg.compare_oracle && r == 0 {
            oracle_accuracy = Some(accuracy(&oracle_of(&initial_base)?, &all_labels, &ds.splits.test)?);
        }

        let record = |sim: &Simulation| -> Result<MetricsRecord> {
            let pred = sim.predictions();
            let linf = if !cfg.compare_oracle {
                None
            } else if let Some(o) = &fixed_oracle {
                Some(pred.linf_distance(o)?)
            } else {
                Some(pred.linf_distance(&oracle_of(&sim.base_predictions())?)?)
            };
            Ok(MetricsRecord {
                repetition: r,
                t: sim.time(),
                test_accuracy: accuracy(&pred, &all_labels, &ds.splits.test)?,
                linf_to_oracle: linf,
                bytes_diffusion: sim.bytes_diffusion(),
                bytes_training: sim.bytes_training(),
            })
        };

        records.push(record(&sim)?);
        for _ in 0..cfg.steps {
            sim.step()?;
            if sim.time() % cfg.metrics_every == 0 || sim.time() == cfg.steps {
                records.push(record(&sim)?);
            }
        }
        let last = records.last().expect("at least the t=0 record");
        finals.push(last.test_accuracy);
        bytes_d.push(last.bytes_diffusion as f64);
        bytes_t.push(last.bytes_training as f64);
    }

    let (mean, std) = mean_std(&finals);
    Ok(RunOutput {
        records,
        summary: RunSummary {
            mode: cfg.mode,
            classifier: cfg.classifier,
            repetitions: cfg.repetitions,
            steps: cfg.steps,
            final_accuracy_mean: mean,
            final_accuracy_std: std,
            final_accuracies: finals,
            base_accuracy_mean: mean_std(&bases).0,
            oracle_accuracy,
            message_bytes,
            parameter_bytes,
            bytes_diffusion_mean: mean_std(&bytes_d).0,
            bytes_training_mean: mean_std(&bytes_t).0,
        },
    })
}

pub const METRICS_HEADER: [&str; 6] = [
    "repetition",
    "t",
    "test_accuracy",
    "linf_to_oracle",
    "bytes_diffusion",
    "bytes_training",
];

pub fn write_metrics_csv<W: std::io::Write>(records: &[MetricsRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(METRICS_HEADER)
        .map_err(|e| Error::Codec(e.to_string()))?;
    for r in records {
        out.write_record([
            r.repetition.to_string(),
            r.t.to_string(),
            format!("{:?}", r.test_accuracy),
            r.linf_to_oracle.map(|x| format!("{x:?}")).unwrap_or_default(),
            r.bytes_diffusion.to_string(),
            r.bytes_training.to_string(),
        ])
        .map_err(|e| Error::Codec(e.to_string()))?;
    }
    out.flush().map_err(|e| Error::Codec(e.to_string()))
}

/// Reads a metrics CSV; `origin` names the file in errors.
pub fn read_metrics_csv<R: std::io::Read>(r: R, origin: &std::path::Path) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != METRICS_HEADER {
        return Err(parse_err(
            1,
            format!("unexpected header {:?}, expected {:?}", header, METRICS_HEADER),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |k: usize| row.get(k).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k)
                .parse()
                .map_err(|_| parse_err(line, format!("bad {} value {:?}", METRICS_HEADER[k], field(k))))
        };
        out.push(MetricsRecord {
            repetition: num(0)? as u32,
            t: num(1)? as u64,
            test_accuracy: num(2)?,
            linf_to_oracle: if field(3).is_empty() { None } else { Some(num(3)?) },
            bytes_diffusion: num(4)? as u64,
            bytes_training: num(5)? as u64,
        });
    }
    Ok(out)
}
