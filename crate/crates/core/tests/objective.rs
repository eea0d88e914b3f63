use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use siot_core::embedding::{loss_and_gradient, softmax_probabilities, Objective};

fn random_instance(rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<(u32, u32)>) {
    let n = rng.random_range(2..=10);
    let dim = rng.random_range(1..=5);
    let v = Array2::from_shape_fn((n, dim), |_| rng.random_range(-1.0..1.0));
    let pairs = (0..rng.random_range(1..=3 * n))
        .map(|_| {
            let c = rng.random_range(0..n as u32);
            let mut o = rng.random_range(0..n as u32);
            while o == c {
                o = rng.random_range(0..n as u32);
            }
            (c, o)
        })
        .collect();
    (v, pairs)
}

/// Loss evaluated from scratch: sum over pairs of `-ln softmax`.
fn naive_loss(v: &Array2<f64>, pairs: &[(u32, u32)]) -> f64 {
    pairs
        .iter()
        .map(|&(c, o)| {
            let vc = v.row(c as usize);
            let denom: f64 = v.rows().into_iter().map(|vn| vc.dot(&vn).exp()).sum();
            -(vc.dot(&v.row(o as usize)).exp() / denom).ln()
        })
        .sum()
}

fn central_difference(v: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64, h: f64) -> Array2<f64> {
    let mut grad = Array2::zeros(v.raw_dim());
    for idx in ndarray::indices(v.raw_dim()) {
        let mut plus = v.clone();
        plus[idx] += h;
        let mut minus = v.clone();
        minus[idx] -= h;
        grad[idx] = (f(&plus) - f(&minus)) / (2.0 * h);
    }
    grad
}

fn relative_error(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let diff = (a - b).mapv(|x| x * x).sum().sqrt();
    let scale = a
        .mapv(|x| x * x)
        .sum()
        .sqrt()
        .max(b.mapv(|x| x * x).sum().sqrt())
        .max(1e-12);
    diff / scale
}

#[test]
fn exact_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (v, pairs) = random_instance(&mut rng);
        let (loss, grad) = loss_and_gradient(&v, &pairs, Objective::ExactSoftmax);
        assert!((loss - naive_loss(&v, &pairs)).abs() < 1e-9 * loss.abs().max(1.0));
        let numeric = central_difference(&v, |w| naive_loss(w, &pairs), 1e-5);
        let err = relative_error(&grad, &numeric);
        assert!(err < 1e-4, "relative error {err}");
    }
}

#[test]
fn sampled_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let (v, pairs) = random_instance(&mut rng);
        let n = v.nrows() as u32;
        let negatives: Vec<Vec<u32>> = pairs
            .iter()
            .map(|_| (0..3).map(|_| rng.random_range(0..n)).collect())
            .collect();
        let objective = Objective::NegativeSampling {
            negatives: &negatives,
        };
        let (_, grad) = loss_and_gradient(&v, &pairs, objective);
        let numeric = central_difference(&v, |w| loss_and_gradient(w, &pairs, objective).0, 1e-5);
        let err = relative_error(&grad, &numeric);
        assert!(err < 1e-4, "relative error {err}");
    }
}

#[test]
fn three_node_toy_by_hand() {
    let v = ndarray::array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    // center 0: logits (1, 0, 1)
    let p = softmax_probabilities(&v, 0);
    let z = 2.0 * 1f64.exp() + 1.0;
    let expected = [1f64.exp() / z, 1.0 / z, 1f64.exp() / z];
    for (a, b) in p.iter().zip(expected) {
        assert!((a - b).abs() < 1e-9);
    }
    let (loss, _) = loss_and_gradient(&v, &[(0, 1)], Objective::ExactSoftmax);
    assert!((loss - z.ln()).abs() < 1e-9);
}

#[test]
fn softmax_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let n = rng.random_range(1..=200);
        let dim = rng.random_range(1..=16);
        let scale = rng.random_range(0.1..5.0);
        let v = Array2::from_shape_fn((n, dim), |_| rng.random_range(-scale..scale));
        for c in 0..n {
            let total: f64 = softmax_probabilities(&v, c).iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "sum {total}");
        }
    }
}
