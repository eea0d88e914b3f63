use std::sync::atomic::{AtomicU64, Ordering};

use log::debug;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::objective::{dot, sigmoid, softplus};
use super::{
    co_occurrences, generate_walks_on, loss_and_gradient, prepare_mode_inputs, AccuracyProbe,
    EmbeddingConfig, EmbeddingMatrix, Objective, WalkConfig,
};
use crate::error::{Error, Result};
use crate::graph::{FeatureEncoding, SocialGraph};

const PROBE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const SHUFFLE_SEED_SALT: u64 = 0xd1b5_4a32_d192_ed03;
const MAX_NEGATIVE_REDRAWS: usize = 8;

/// Row-major parameter table shared between SGD workers.
///
/// Values live in relaxed atomics so asynchronous workers may race on
/// read-modify-write without undefined behaviour; lost updates are accepted.
struct ParamTable {
    data: Vec<AtomicU64>,
    dim: usize,
}

impl ParamTable {
    fn uniform(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 0.5 / dim as f64;
        let data = (0..rows * dim)
            .map(|_| AtomicU64::new(rng.random_range(-bound..bound).to_bits()))
            .collect();
        Self { data, dim }
    }

    fn add_row_into(&self, row: usize, scale: f64, out: &mut [f64]) {
        let base = row * self.dim;
        for (o, cell) in out.iter_mut().zip(&self.data[base..base + self.dim]) {
            *o += scale * f64::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    fn step_row(&self, row: usize, scale: f64, grad: &[f64]) {
        let base = row * self.dim;
        for (g, cell) in grad.iter().zip(&self.data[base..base + self.dim]) {
            let v = f64::from_bits(cell.load(Ordering::Relaxed)) - scale * g;
            cell.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Maps parameters to node vectors: `v_n = z_n + sum_j F[n, j] * E_j`.
struct Encoder {
    dim: usize,
    nodes: usize,
    free: Option<ParamTable>,
    attributes: Option<ParamTable>,
    active: Vec<Vec<(usize, f64)>>,
}

impl Encoder {
    fn new(
        nodes: usize,
        dim: usize,
        features: Option<&Array2<f64>>,
        free_vectors: bool,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let free = free_vectors.then(|| ParamTable::uniform(nodes, dim, rng));
        let attributes = features.map(|f| ParamTable::uniform(f.ncols(), dim, rng));
        let active = match features {
            Some(f) => f
                .rows()
                .into_iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, &x)| x != 0.0)
                        .map(|(j, &x)| (j, x))
                        .collect()
                })
                .collect(),
            None => vec![Vec::new(); nodes],
        };
        Self {
            dim,
            nodes,
            free,
            attributes,
            active,
        }
    }

    fn vector(&self, node: usize, out: &mut [f64]) {
        out.fill(0.0);
        if let Some(free) = &self.free {
            free.add_row_into(node, 1.0, out);
        }
        if let Some(attr) = &self.attributes {
            for &(j, x) in &self.active[node] {
                attr.add_row_into(j, x, out);
            }
        }
    }

    /// Applies `param -= lr * dL/dparam` given `grad = dL/dv_node`.
    fn step(&self, node: usize, lr: f64, grad: &[f64]) {
        if let Some(free) = &self.free {
            free.step_row(node, lr, grad);
        }
        if let Some(attr) = &self.attributes {
            for &(j, x) in &self.active[node] {
                attr.step_row(j, lr * x, grad);
            }
        }
    }

    fn materialize(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nodes, self.dim));
        for (n, mut row) in out.rows_mut().into_iter().enumerate() {
            self.vector(n, row.as_slice_mut().expect("standard layout"));
        }
        out
    }
}

/// Per-worker scratch buffers.
struct Scratch {
    center: Vec<f64>,
    other: Vec<f64>,
    grad_center: Vec<f64>,
    grad_other: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            center: vec![0.0; dim],
            other: vec![0.0; dim],
            grad_center: vec![0.0; dim],
            grad_other: vec![0.0; dim],
        }
    }
}

fn draw_negative<R: Rng>(
    noise: &WeightedAliasIndex<f64>,
    c: u32,
    o: u32,
    rng: &mut R,
) -> Option<u32> {
    (0..MAX_NEGATIVE_REDRAWS)
        .map(|_| noise.sample(rng) as u32)
        .find(|&k| k != c && k != o)
}

/// One negative-sampling SGD step on pair `(c, o)`; returns the pair loss.
fn sampled_step<R: Rng>(
    enc: &Encoder,
    (c, o): (u32, u32),
    negatives: usize,
    noise: &WeightedAliasIndex<f64>,
    lr: f64,
    s: &mut Scratch,
    rng: &mut R,
) -> f64 {
    enc.vector(c as usize, &mut s.center);
    enc.vector(o as usize, &mut s.other);
    let score = dot(&s.center, &s.other);
    let mut loss = softplus(-score);
    let g = sigmoid(score) - 1.0;
    for ((gc, go), (vc, vo)) in s
        .grad_center
        .iter_mut()
        .zip(s.grad_other.iter_mut())
        .zip(s.center.iter().zip(&s.other))
    {
        *gc = g * vo;
        *go = g * vc;
    }
    enc.step(o as usize, lr, &s.grad_other);

    for _ in 0..negatives {
        let Some(k) = draw_negative(noise, c, o, rng) else {
            continue;
        };
        enc.vector(k as usize, &mut s.other);
        let score = dot(&s.center, &s.other);
        loss += softplus(score);
        let g = sigmoid(score);
        for ((gc, go), (vc, vk)) in s
            .grad_center
            .iter_mut()
            .zip(s.grad_other.iter_mut())
            .zip(s.center.iter().zip(&s.other))
        {
            *gc += g * vk;
            *go = g * vc;
        }
        enc.step(k as usize, lr, &s.grad_other);
    }
    enc.step(c as usize, lr, &s.grad_center);
    loss
}

/// One exact-softmax SGD step on pair `(c, o)`; touches every node.
fn exact_step(enc: &Encoder, pair: (u32, u32), lr: f64) -> f64 {
    let vectors = enc.materialize();
    let (loss, grad) = loss_and_gradient(&vectors, &[pair], Objective::ExactSoftmax);
    for (n, g) in grad.rows().into_iter().enumerate() {
        if g.iter().any(|&x| x != 0.0) {
            enc.step(n, lr, g.as_slice().expect("standard layout"));
        }
    }
    loss
}

/// Trains node vectors for `graph` under the configured mode.
///
/// Walks are generated once from the mode's effective graph; each epoch makes
/// one shuffled SGD pass over the resulting co-occurrence pairs. Accuracy is
/// tracked on held-out pairs drawn from fresh walks on the social graph
/// itself, whatever the mode.
pub fn train_embedding(
    graph: &SocialGraph,
    encoding: &FeatureEncoding,
    walk: &WalkConfig,
    config: &EmbeddingConfig,
) -> Result<EmbeddingMatrix> {
    walk.validate()?;
    config.validate()?;
    if graph.is_empty() {
        return Err(Error::InvalidConfig("cannot embed an empty graph".into()));
    }
    let inputs = prepare_mode_inputs(graph, encoding, config.mode)?;
    let n = graph.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let encoder = Encoder::new(
        n,
        config.dim,
        inputs.features,
        inputs.free_vectors,
        &mut rng,
    );

    let walks = generate_walks_on(inputs.walk_graph, walk);
    let mut pairs = co_occurrences(&walks, walk.window);
    drop(walks);
    let probe = AccuracyProbe::from_graph(
        graph,
        walk,
        config.accuracy_pairs,
        walk.seed ^ PROBE_SEED_SALT,
    );
    let noise = if pairs.is_empty() {
        None
    } else {
        let weights: Vec<f64> = pairs
            .context_counts(n)
            .into_iter()
            .map(|c| (c as f64).powf(0.75))
            .collect();
        Some(WeightedAliasIndex::new(weights).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    };
    debug!(
        "training {} on {} nodes, {} pairs, {} epochs",
        config.mode,
        n,
        pairs.len(),
        config.epochs
    );

    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut accuracy_history = Vec::new();
    for epoch in 0..config.epochs {
        let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SEED_SALT);
        order_rng.set_stream(epoch as u64);
        pairs.pairs.shuffle(&mut order_rng);

        let loss = match (&noise, config.negative_samples) {
            (None, _) => 0.0,
            (Some(_), 0) => pairs
                .pairs
                .iter()
                .map(|&p| exact_step(&encoder, p, config.learning_rate))
                .sum(),
            (Some(noise), k) if config.threads <= 1 => {
                let mut scratch = Scratch::new(config.dim);
                pairs
                    .pairs
                    .iter()
                    .map(|&p| {
                        sampled_step(
                            &encoder,
                            p,
                            k,
                            noise,
                            config.learning_rate,
                            &mut scratch,
                            &mut order_rng,
                        )
                    })
                    .sum()
            }
            (Some(noise), k) => {
                let chunk = pairs.len().div_ceil(config.threads * 4).max(1);
                pairs
                    .pairs
                    .par_chunks(chunk)
                    .enumerate()
                    .map(|(i, part)| {
                        let mut local = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SEED_SALT);
                        local.set_stream(((epoch as u64) << 32) | i as u64);
                        let mut scratch = Scratch::new(config.dim);
                        part.iter()
                            .map(|&p| {
                                sampled_step(
                                    &encoder,
                                    p,
                                    k,
                                    noise,
                                    config.learning_rate,
                                    &mut scratch,
                                    &mut local,
                                )
                            })
                            .sum::<f64>()
                    })
                    .sum()
            }
        };
        if !loss.is_finite() {
            return Err(Error::DivergedTraining { epoch: epoch + 1 });
        }
        loss_history.push(loss);
        if let Some(probe) = &probe {
            accuracy_history.push(probe.accuracy(&encoder.materialize())?);
        }
    }

    let vectors = encoder.materialize();
    if vectors.iter().any(|x| !x.is_finite()) {
        return Err(Error::DivergedTraining {
            epoch: config.epochs,
        });
    }
    Ok(EmbeddingMatrix {
        node_ids: graph.node_ids().to_vec(),
        mode: config.mode,
        seed: config.seed,
        vectors,
        loss_history,
        accuracy_history,
    })
}
