//! Co-occurrence likelihood objective.
//!
//! With node representations `v_n`, the probability of observing context `o`
//! around center `c` is the dot-product softmax over all nodes
//!
//! ```text
//! P(o | c) = exp(v_c . v_o) / sum_n exp(v_c . v_n)
//! ```
//!
//! and the loss is `sum_{(c,o)} -ln P(o | c)`. The sum over `n` includes `c`
//! itself. The negative-sampling estimator replaces the softmax by
//! `-ln s(v_c . v_o) - sum_k ln s(-v_c . v_k)` over drawn noise nodes `k`.

use ndarray::{Array2, ArrayView1};

/// How each pair's loss is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Full softmax over every node.
    ExactSoftmax,
    /// Negative sampling; `negatives[i]` are the noise nodes of pair `i`.
    NegativeSampling { negatives: &'a [Vec<u32>] },
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn row(vectors: &Array2<f64>, i: usize) -> &[f64] {
    vectors
        .row(i)
        .to_slice()
        .expect("vectors are in standard layout")
}

/// Center logits `v_c . v_n` for every node `n`.
fn logits(vectors: &Array2<f64>, center: usize) -> Vec<f64> {
    let vc = row(vectors, center);
    (0..vectors.nrows())
        .map(|n| dot(vc, row(vectors, n)))
        .collect()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `P(n | center)` for every node `n`.
pub fn softmax_probabilities(vectors: &Array2<f64>, center: usize) -> Vec<f64> {
    let s = logits(vectors, center);
    let lse = log_sum_exp(&s);
    s.iter().map(|x| (x - lse).exp()).collect()
}

/// Loss and gradient with respect to every node representation.
pub fn loss_and_gradient(
    vectors: &Array2<f64>,
    pairs: &[(u32, u32)],
    objective: Objective<'_>,
) -> (f64, Array2<f64>) {
    match objective {
        Objective::ExactSoftmax => exact(vectors, pairs),
        Objective::NegativeSampling { negatives } => sampled(vectors, pairs, negatives),
    }
}

fn exact(vectors: &Array2<f64>, pairs: &[(u32, u32)]) -> (f64, Array2<f64>) {
    let (n, dim) = vectors.dim();
    let mut grad = Array2::zeros((n, dim));
    let mut loss = 0.0;

    // group pairs by center so each softmax is evaluated once
    let mut by_center: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(c, o) in pairs {
        by_center[c as usize].push(o as usize);
    }
    for (c, contexts) in by_center.iter().enumerate() {
        if contexts.is_empty() {
            continue;
        }
        let m = contexts.len() as f64;
        let s = logits(vectors, c);
        let lse = log_sum_exp(&s);
        let p: Vec<f64> = s.iter().map(|x| (x - lse).exp()).collect();
        let vc = vectors.row(c).to_owned();

        // d lse / d v_c = sum_n p_n v_n + p_c v_c  (the self term is quadratic)
        let mut g_center = vc.clone() * p[c];
        for (pn, vn) in p.iter().zip(vectors.rows()) {
            g_center.scaled_add(*pn, &vn);
        }
        g_center *= m;
        for &o in contexts {
            loss += lse - s[o];
            g_center -= &vectors.row(o);
        }
        // d lse / d v_n = p_n v_c for n != c; d s_o / d v_o = v_c
        let mut coeff: Vec<f64> = p.iter().map(|pn| m * pn).collect();
        for &o in contexts {
            coeff[o] -= 1.0;
        }
        coeff[c] = 0.0;
        for (k, mut g) in grad.rows_mut().into_iter().enumerate() {
            if coeff[k] != 0.0 {
                g.scaled_add(coeff[k], &vc);
            }
        }
        let mut gc = grad.row_mut(c);
        gc += &g_center;
    }
    (loss, grad)
}

fn sampled(
    vectors: &Array2<f64>,
    pairs: &[(u32, u32)],
    negatives: &[Vec<u32>],
) -> (f64, Array2<f64>) {
    assert_eq!(pairs.len(), negatives.len(), "one negative list per pair");
    let mut grad = Array2::zeros(vectors.dim());
    let mut loss = 0.0;
    let view = |i: usize| -> ArrayView1<'_, f64> { vectors.row(i) };
    for (&(c, o), negs) in pairs.iter().zip(negatives) {
        let (c, o) = (c as usize, o as usize);
        let s = dot(row(vectors, c), row(vectors, o));
        loss += softplus(-s);
        let g = sigmoid(s) - 1.0;
        grad.row_mut(c).scaled_add(g, &view(o));
        grad.row_mut(o).scaled_add(g, &view(c));
        for &k in negs {
            let k = k as usize;
            let s = dot(row(vectors, c), row(vectors, k));
            loss += softplus(s);
            let g = sigmoid(s);
            grad.row_mut(c).scaled_add(g, &view(k));
            grad.row_mut(k).scaled_add(g, &view(c));
        }
    }
    (loss, grad)
}
