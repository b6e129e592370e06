//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::PathBuf;

use p2pgnn::graph::{Dataset, Graph, NodeData, NodeSet, Splits};
use p2pgnn::PredictionTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn load_named(name: &str) -> Dataset {
    let d = data_dir(name);
    p2pgnn::graph::load_dataset(&d.join("nodes.tsv.gz"), &d.join("edges.tsv.gz"), &d.join("splits.tsv"))
        .unwrap()
}

/// Dense normalized adjacency `D^{-d} A D^{d-1}` with a virtual self-loop on
/// isolated nodes, written straight from the definition.
pub fn dense_operator(g: &Graph, d: f64) -> Vec<Vec<f64>> {
    let n = g.n_nodes();
    let deg: Vec<f64> = (0..n).map(|u| g.neighbors(u).len() as f64).collect();
    let mut m = vec![vec![0.0; n]; n];
    for u in 0..n {
        if deg[u] == 0.0 {
            m[u][u] = 1.0;
            continue;
        }
        for v in 0..n {
            if g.has_edge(u, v) {
                m[u][v] = 1.0 / (deg[u].powf(d) * deg[v].powf(1.0 - d));
            }
        }
    }
    m
}

/// Solves `a x = b` for several right-hand sides by Gaussian elimination with
/// partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        assert!(a[pivot][col].abs() > 1e-14, "singular system");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            for k in 0..b[row].len() {
                b[row][k] -= f * b[col][k];
            }
        }
    }
    for col in (0..n).rev() {
        for k in 0..b[col].len() {
            let mut x = b[col][k];
            for j in col + 1..n {
                x -= a[col][j] * b[j][k];
            }
            b[col][k] = x / a[col][col];
        }
    }
    b
}

fn rows(t: &PredictionTable) -> Vec<Vec<f64>> {
    t.iter_rows().map(|r| r.to_vec()).collect()
}

fn table(rows: &[Vec<f64>]) -> PredictionTable {
    PredictionTable::from_rows(rows).unwrap()
}

/// Nodes joined to `train` by some path.
fn reachable(g: &Graph, train: &NodeSet) -> Vec<bool> {
    let mut seen = train.to_mask(g.n_nodes());
    let mut queue: VecDeque<usize> = train.iter().collect();
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Fixed point of the constrained personalized PageRank by direct solution.
///
/// Training rows are pinned to their personalization. Without restart
/// (`a = 1`) rows cut off from every training node keep their zero start.
pub fn dense_ppr(
    g: &Graph,
    pi0: &PredictionTable,
    beta: f64,
    a: f64,
    d: f64,
    gamma: f64,
    train: &NodeSet,
) -> PredictionTable {
    let n = g.n_nodes();
    let m = dense_operator(g, d);
    let other = (1.0 - gamma) / (1.0 - beta);
    let personal: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            let s = if train.contains(u) { 1.0 } else { other };
            pi0.row(u).iter().map(|x| x * s).collect()
        })
        .collect();
    let live = if a == 1.0 { reachable(g, train) } else { vec![true; n] };
    let mut lhs = vec![vec![0.0; n]; n];
    let mut rhs = vec![vec![0.0; pi0.n_cols()]; n];
    for u in 0..n {
        lhs[u][u] = 1.0;
        if train.contains(u) {
            rhs[u] = personal[u].clone();
        } else if live[u] {
            for v in 0..n {
                lhs[u][v] -= a * m[u][v];
            }
            rhs[u] = personal[u].iter().map(|x| (1.0 - a) * x).collect();
        }
    }
    table(&solve(lhs, rhs))
}

/// FDiff-scale through dense solves.
pub fn dense_fdiff(
    g: &Graph,
    base: &PredictionTable,
    labels: &PredictionTable,
    train: &NodeSet,
    beta: f64,
    s: f64,
) -> PredictionTable {
    let n = g.n_nodes();
    let mut err0 = vec![vec![0.0; base.n_cols()]; n];
    for u in train.iter() {
        err0[u] = labels.row(u).iter().zip(base.row(u)).map(|(y, r)| y - r).collect();
    }
    let errors = dense_ppr(g, &table(&err0), beta, 1.0, 0.0, 1.0, train);
    let mut combined = rows(base);
    for (u, row) in combined.iter_mut().enumerate() {
        if !train.contains(u) {
            for (x, e) in row.iter_mut().zip(errors.row(u)) {
                *x += (1.0 - beta) * s * e;
            }
        }
    }
    dense_ppr(g, &table(&combined), beta, beta, 0.5, beta, &NodeSet::new())
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Random graph made connected by chaining a random spanning path first.
pub fn connected_graph<R: Rng>(rng: &mut R, n: usize, extra_p: f64) -> Graph {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < extra_p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn random_rows<R: Rng>(rng: &mut R, n: usize, c: usize) -> PredictionTable {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let r: Vec<f64> = (0..c).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let z: f64 = r.iter().sum();
            r.into_iter().map(|x| x / z).collect()
        })
        .collect();
    table(&rows)
}

pub fn one_hot(c: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; c];
    v[k] = 1.0;
    v
}

/// Random labeled dataset over `g`: `n_train` training nodes, every other
/// node in test.
pub fn random_dataset<R: Rng>(rng: &mut R, g: Graph, c: usize, f: usize, n_train: usize) -> Dataset {
    use rand::seq::index::sample;
    let n = g.n_nodes();
    let labels: Vec<Option<usize>> = (0..n).map(|_| Some(rng.gen_range(0..c))).collect();
    let features: Vec<f64> = (0..n * f)
        .map(|_| if rng.gen_bool(0.3) { rng.gen::<f64>() } else { 0.0 })
        .collect();
    let data = NodeData::new(f, c, features, labels).unwrap();
    let train: NodeSet = sample(rng, n, n_train).into_iter().collect();
    let test: NodeSet = (0..n).filter(|u| !train.contains(*u)).collect();
    let splits = Splits {
        train,
        valid: NodeSet::new(),
        test,
    };
    Dataset::new(g, data, splits).unwrap()
}

pub fn linf(a: &PredictionTable, b: &PredictionTable) -> f64 {
    a.linf_distance(b).unwrap()
}

/// Worst componentwise relative error between the analytic gradient and
/// central differences with step `h`, on one random instance.
///
/// Dropout stays on: every loss evaluation reseeds the mask RNG so all of
/// them see the same masks.
pub fn gradient_check(kind: p2pgnn::learn::ClassifierKind, seed: u64, h: f64) -> f64 {
    use p2pgnn::learn::{loss_and_grad, ClassifierParams, Sample, TrainConfig};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (f, c) = (rng.gen_range(3..9), rng.gen_range(2..5));
    let cfg = TrainConfig {
        hidden: rng.gen_range(3..7),
        ..TrainConfig::default()
    };
    let mut params = ClassifierParams::init(kind, f, c, cfg.hidden, &mut rng);
    for b in params.values.iter_mut().filter(|x| **x == 0.0) {
        *b = rng.gen_range(-0.1..0.1);
    }
    let xs: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..f).map(|_| if rng.gen_bool(0.6) { rng.gen_range(-1.0..2.0) } else { 0.0 }).collect())
        .collect();
    let ys: Vec<Vec<f64>> = (0..6).map(|_| one_hot(c, rng.gen_range(0..c))).collect();
    let batch: Vec<Sample> = xs.iter().zip(&ys).map(|(x, y)| Sample { x, y }).collect();
    let mask_seed = rng.gen::<u64>();
    let eval = |p: &ClassifierParams| {
        loss_and_grad(p, &batch, &cfg, &mut ChaCha8Rng::seed_from_u64(mask_seed)).unwrap()
    };
    let (_, grad) = eval(&params);
    let mut worst = 0.0f64;
    for (i, &g) in grad.iter().enumerate() {
        let x0 = params.values[i];
        params.values[i] = x0 + h;
        let up = eval(&params).0;
        params.values[i] = x0 - h;
        let down = eval(&params).0;
        params.values[i] = x0;
        let numeric = (up - down) / (2.0 * h);
        let denom = g.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((g - numeric).abs() / denom);
    }
    worst
}

/// Random Send–Receive–Acknowledge traffic on a 20-node fixture with
/// a quarter of the devices labeled. Interleaves base prediction swaps and
/// malformed messages, and checks every labeled device after each exchange.
/// Returns the number of exchanges completed.
pub fn fuzz_labeled_invariant(seed: u64, exchanges: usize) -> Result<usize, String> {
    use p2pgnn::p2p::{decode_message, encode_message, DeviceHyper, DeviceState};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, c) = (20, 3);
    let g = connected_graph(&mut rng, n, 0.15);
    let edges = g.edges();
    let hyper = DeviceHyper { beta: rng.gen_range(0.5..0.95), s: rng.gen_range(-2.0..2.0) };
    let mut devices: Vec<DeviceState> = (0..n)
        .map(|u| {
            let mut d = DeviceState::new(u, c, hyper);
            let target = if u % 4 == 0 { one_hot(c, rng.gen_range(0..c)) } else { vec![0.0; c] };
            d.initialize(random_rows(&mut rng, 1, c).row(0), &target).unwrap();
            d
        })
        .collect();
    let wire = |m: &p2pgnn::p2p::Message| decode_message(&encode_message(m).unwrap()).unwrap();
    let check = |d: &DeviceState, step: usize| -> Result<(), String> {
        if !d.is_labeled() {
            return Ok(());
        }
        let expect: Vec<f64> = d.target.iter().zip(&d.base_prediction).map(|(t, b)| t - b).collect();
        if d.error != expect {
            return Err(format!("step {step}: device {} error {:?} != {:?}", d.id, d.error, expect));
        }
        if d.combined != d.base_prediction {
            return Err(format!("step {step}: device {} combined differs from base", d.id));
        }
        Ok(())
    };
    for step in 0..exchanges {
        if rng.gen_bool(0.1) {
            let u = rng.gen_range(0..n);
            devices[u].update(random_rows(&mut rng, 1, c).row(0)).unwrap();
            check(&devices[u], step)?;
        }
        let (a, b) = edges[rng.gen_range(0..edges.len())];
        let (u, v) = if rng.gen() { (a, b) } else { (b, a) };
        if rng.gen_bool(0.05) {
            let mut bad = devices[u].send(v);
            match rng.gen_range(0..3) {
                0 => bad.sender = (u + 1) % n,
                1 => bad.err_share[0] = f64::NAN,
                _ => {
                    bad.pred_share.pop();
                }
            }
            let before = devices[v].clone();
            if devices[v].receive(u, &bad).is_ok() {
                return Err(format!("step {step}: malformed message accepted"));
            }
            if devices[v] != before {
                return Err(format!("step {step}: rejected message changed device {v}"));
            }
        }
        let msg = wire(&devices[u].send(v));
        let reply = devices[v].receive(u, &msg).map_err(|e| e.to_string())?;
        devices[u].acknowledge(v, &wire(&reply)).map_err(|e| e.to_string())?;
        check(&devices[u], step)?;
        check(&devices[v], step)?;
    }
    Ok(exchanges)
}

/// Writes a 60-node labeled fixture with train, valid and test splits into
/// `dir` and returns the three paths in the order `load_dataset` takes them.
pub fn write_fixture(dir: &std::path::Path, gzip: bool) -> [PathBuf; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let g = connected_graph(&mut rng, 60, 0.05);
    let mut ds = random_dataset(&mut rng, g, 3, 6, 15);
    let moved: Vec<usize> = ds.splits.test.iter().take(10).collect();
    ds.splits.test = ds.splits.test.iter().filter(|u| !moved.contains(u)).collect();
    ds.splits.valid = moved.into_iter().collect();
    let ext = if gzip { ".tsv.gz" } else { ".tsv" };
    let paths = ["nodes", "edges", "splits"].map(|f| dir.join(format!("{f}{ext}")));
    p2pgnn::graph::write_dataset(&ds, &paths[0], &paths[1], &paths[2]).unwrap();
    paths
}
