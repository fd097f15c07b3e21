//! One-hidden-layer multilayer perceptron trained with mini-batch
//! gradient descent on per-label binary cross-entropy plus an L2 penalty.
//!
//! The objective is `mean_i sum_l bce(z, y) + (l2 / 2) * (|W1|^2 + |W2|^2)`
//! with ReLU hidden units and a sigmoid per output label. Biases are not
//! regularized. [`full_gradient`] returns the exact gradient of
//! [`loss`], which is what the finite-difference check exercises.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot_sparse, sigmoid};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::smells::{LabelMatrix, SmellClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHyper {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        MlpHyper {
            hidden: 128,
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 32,
            l2: 1e-4,
        }
    }
}

/// Weights in row-major order: `w1[h * V + v]`, `w2[l * H + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// [input features, hidden units, output labels]
    pub dims: [usize; 3],
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub hyper: MlpHyper,
    pub seed: u64,
    pub classes: Vec<SmellClass>,
}

impl MlpModel {
    /// Glorot-uniform initialization: weights uniform in [-r, r] with
    /// `r = sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init(
        n_features: usize,
        classes: Vec<SmellClass>,
        hyper: MlpHyper,
        seed: u64,
    ) -> MlpModel {
        let (v, h, l) = (n_features, hyper.hidden, classes.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = (6.0 / (v + h) as f64).sqrt();
        let w1 = (0..h * v).map(|_| rng.gen_range(-r1..r1)).collect();
        let r2 = (6.0 / (h + l) as f64).sqrt();
        let w2 = (0..l * h).map(|_| rng.gen_range(-r2..r2)).collect();
        MlpModel {
            dims: [v, h, l],
            w1,
            b1: vec![0.0; h],
            w2,
            b2: vec![0.0; l],
            hyper,
            seed,
            classes,
        }
    }

    /// All-zero weights; every score comes out exactly 0.5.
    pub fn zeroed(n_features: usize, hidden: usize, classes: Vec<SmellClass>) -> MlpModel {
        let l = classes.len();
        MlpModel {
            dims: [n_features, hidden, l],
            w1: vec![0.0; hidden * n_features],
            b1: vec![0.0; hidden],
            w2: vec![0.0; l * hidden],
            b2: vec![0.0; l],
            hyper: MlpHyper {
                hidden,
                ..MlpHyper::default()
            },
            seed: 0,
            classes,
        }
    }
}

/// Hidden pre-activations and activations plus output logits for one row.
fn forward(model: &MlpModel, row: &[(usize, f64)]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let [v, h, l] = model.dims;
    let mut z1 = model.b1.clone();
    for &(c, x) in row {
        for (hi, z) in z1.iter_mut().enumerate() {
            *z += model.w1[hi * v + c] * x;
        }
    }
    let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
    let mut z2 = model.b2.clone();
    for (li, z) in z2.iter_mut().enumerate() {
        *z += (0..h).map(|hi| model.w2[li * h + hi] * a1[hi]).sum::<f64>();
    }
    debug_assert_eq!(z2.len(), l);
    (z1, a1, z2)
}

/// Stable binary cross-entropy from the logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

pub fn scores(model: &MlpModel, x: &FeatureMatrix) -> Vec<Vec<f64>> {
    x.rows
        .iter()
        .map(|row| forward(model, row).2.into_iter().map(sigmoid).collect())
        .collect()
}

/// Full-batch objective: mean per-instance label-summed BCE plus the L2
/// penalty on both weight matrices.
pub fn loss(model: &MlpModel, x: &FeatureMatrix, y: &LabelMatrix) -> f64 {
    let n = x.n_rows() as f64;
    let mut total = 0.0;
    for (i, row) in x.rows.iter().enumerate() {
        let (_, _, z2) = forward(model, row);
        for (l, &z) in z2.iter().enumerate() {
            total += bce_from_logit(z, f64::from(u8::from(y.get(i, l))));
        }
    }
    let sq = |w: &[f64]| w.iter().map(|&v| v * v).sum::<f64>();
    total / n + model.hyper.l2 / 2.0 * (sq(&model.w1) + sq(&model.w2))
}

#[derive(Debug, Clone)]
pub struct MlpGradient {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Mean data gradient over the given rows (no regularization term).
fn data_gradient(
    model: &MlpModel,
    x: &FeatureMatrix,
    y: &LabelMatrix,
    rows: &[usize],
) -> (f64, MlpGradient) {
    let [v, h, l] = model.dims;
    let mut g = MlpGradient {
        w1: vec![0.0; h * v],
        b1: vec![0.0; h],
        w2: vec![0.0; l * h],
        b2: vec![0.0; l],
    };
    let mut loss_sum = 0.0;
    for &i in rows {
        let row = &x.rows[i];
        let (z1, a1, z2) = forward(model, row);
        let mut dz2 = vec![0.0; l];
        for li in 0..l {
            let target = f64::from(u8::from(y.get(i, li)));
            loss_sum += bce_from_logit(z2[li], target);
            dz2[li] = sigmoid(z2[li]) - target;
        }
        for li in 0..l {
            for hi in 0..h {
                g.w2[li * h + hi] += dz2[li] * a1[hi];
            }
            g.b2[li] += dz2[li];
        }
        let mut dz1 = vec![0.0; h];
        for hi in 0..h {
            if z1[hi] > 0.0 {
                dz1[hi] = (0..l).map(|li| dz2[li] * model.w2[li * h + hi]).sum();
            }
        }
        for hi in 0..h {
            if dz1[hi] != 0.0 {
                for &(c, xv) in row {
                    g.w1[hi * v + c] += dz1[hi] * xv;
                }
                g.b1[hi] += dz1[hi];
            }
        }
    }
    let scale = 1.0 / rows.len() as f64;
    for grad in [&mut g.w1, &mut g.b1, &mut g.w2, &mut g.b2] {
        for gv in grad.iter_mut() {
            *gv *= scale;
        }
    }
    (loss_sum * scale, g)
}

/// Exact gradient of [`loss`] over all rows, regularization included.
pub fn full_gradient(model: &MlpModel, x: &FeatureMatrix, y: &LabelMatrix) -> MlpGradient {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let (_, mut g) = data_gradient(model, x, y, &rows);
    for (gv, &wv) in g.w1.iter_mut().zip(&model.w1) {
        *gv += model.hyper.l2 * wv;
    }
    for (gv, &wv) in g.w2.iter_mut().zip(&model.w2) {
        *gv += model.hyper.l2 * wv;
    }
    g
}

/// Train by mini-batch gradient descent. Batch order reshuffles every
/// epoch from the seeded generator; with zero epochs the returned model
/// is exactly the initialization.
pub fn train_mlp(
    x: &FeatureMatrix,
    y: &LabelMatrix,
    hyper: &MlpHyper,
    seed: u64,
) -> Result<MlpModel> {
    if x.n_rows() != y.n_rows() {
        return Err(Error::ShapeMismatch(format!(
            "feature rows {} vs label rows {}",
            x.n_rows(),
            y.n_rows()
        )));
    }
    if hyper.batch_size == 0 || hyper.hidden == 0 {
        return Err(Error::InvalidArgument(
            "hidden and batch_size must be positive".to_string(),
        ));
    }
    let mut model = MlpModel::init(x.n_cols, y.classes().to_vec(), hyper.clone(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Skip the draws consumed by initialization so epoch shuffles get a
    // fresh part of the stream.
    rng.set_stream(1);

    let n = x.n_rows();
    let lr = hyper.learning_rate;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..hyper.epochs {
        shuffle(&mut order, &mut rng);
        for (batch_no, batch) in order.chunks(hyper.batch_size).enumerate() {
            let (batch_loss, g) = data_gradient(&model, x, y, batch);
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            for (w, gv) in model.w1.iter_mut().zip(&g.w1) {
                *w -= lr * (gv + hyper.l2 * *w);
            }
            for (b, gv) in model.b1.iter_mut().zip(&g.b1) {
                *b -= lr * gv;
            }
            for (w, gv) in model.w2.iter_mut().zip(&g.w2) {
                *w -= lr * (gv + hyper.l2 * *w);
            }
            for (b, gv) in model.b2.iter_mut().zip(&g.b2) {
                *b -= lr * gv;
            }
        }
    }
    Ok(model)
}

fn shuffle(order: &mut [usize], rng: &mut impl Rng) {
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
}

/// Gradient check: central finite differences of [`loss`] (step 1e-5)
/// against [`full_gradient`], returning the worst relative error over
/// every parameter.
pub fn max_relative_gradient_error(model: &MlpModel, x: &FeatureMatrix, y: &LabelMatrix) -> f64 {
    const STEP: f64 = 1e-5;
    let analytic = full_gradient(model, x, y);
    let mut max_err: f64 = 0.0;
    let params: Vec<(usize, usize)> = [
        (0, model.w1.len()),
        (1, model.b1.len()),
        (2, model.w2.len()),
        (3, model.b2.len()),
    ]
    .iter()
    .flat_map(|&(field, len)| (0..len).map(move |i| (field, i)))
    .collect();
    for (field, i) in params {
        let mut plus = model.clone();
        let mut minus = model.clone();
        {
            let (p, m) = match field {
                0 => (&mut plus.w1, &mut minus.w1),
                1 => (&mut plus.b1, &mut minus.b1),
                2 => (&mut plus.w2, &mut minus.w2),
                _ => (&mut plus.b2, &mut minus.b2),
            };
            p[i] += STEP;
            m[i] -= STEP;
        }
        let numeric = (loss(&plus, x, y) - loss(&minus, x, y)) / (2.0 * STEP);
        let a = match field {
            0 => analytic.w1[i],
            1 => analytic.b1[i],
            2 => analytic.w2[i],
            _ => analytic.b2[i],
        };
        let err = (numeric - a).abs() / (numeric.abs() + a.abs()).max(1e-8);
        max_err = max_err.max(err);
    }
    max_err
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (FeatureMatrix, LabelMatrix) {
        let x = FeatureMatrix::from_dense_rows(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.7, 0.7]],
            2,
        );
        let y = LabelMatrix::from_rows(
            vec![SmellClass::Superlatives, SmellClass::Comparatives],
            vec![vec![true, false], vec![false, true], vec![true, true]],
        )
        .unwrap();
        (x, y)
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let (x, y) = toy();
        let hyper = MlpHyper {
            hidden: 4,
            epochs: 0,
            ..MlpHyper::default()
        };
        let trained = train_mlp(&x, &y, &hyper, 9).unwrap();
        let init = MlpModel::init(2, y.classes().to_vec(), hyper, 9);
        assert_eq!(trained.w1, init.w1);
        assert_eq!(trained.b1, init.b1);
        assert_eq!(trained.w2, init.w2);
        assert_eq!(trained.b2, init.b2);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let (x, y) = toy();
        let hyper = MlpHyper {
            hidden: 8,
            epochs: 20,
            batch_size: 2,
            ..MlpHyper::default()
        };
        let a = train_mlp(&x, &y, &hyper, 1234).unwrap();
        let b = train_mlp(&x, &y, &hyper, 1234).unwrap();
        assert_eq!(a, b);
        let c = train_mlp(&x, &y, &hyper, 1235).unwrap();
        assert_ne!(a.w1, c.w1);
    }

    #[test]
    fn one_point_problem_converges() {
        let x = FeatureMatrix::from_dense_rows(vec!["a".into()], vec![vec![1.0]], 1);
        let y = LabelMatrix::from_rows(vec![SmellClass::Superlatives], vec![vec![true]]).unwrap();
        let hyper = MlpHyper {
            hidden: 4,
            learning_rate: 0.5,
            epochs: 500,
            batch_size: 1,
            l2: 0.0,
        };
        let model = train_mlp(&x, &y, &hyper, 3).unwrap();
        assert!(loss(&model, &x, &y) < 0.01, "loss {}", loss(&model, &x, &y));
    }

    #[test]
    fn full_batch_loss_non_increasing_on_separable_set() {
        // 20 points, 1 feature, positives at +1 and negatives at -1.
        let mut rows = Vec::new();
        let mut label_rows = Vec::new();
        for i in 0..20 {
            let positive = i % 2 == 0;
            rows.push(vec![if positive { 1.0 } else { -1.0 }]);
            label_rows.push(vec![positive]);
        }
        let x = FeatureMatrix::from_dense_rows(
            (0..20).map(|i| format!("r{i}")).collect(),
            rows,
            1,
        );
        let y = LabelMatrix::from_rows(vec![SmellClass::Superlatives], label_rows).unwrap();
        let base = MlpHyper {
            hidden: 4,
            learning_rate: 0.01,
            batch_size: 20,
            epochs: 0,
            l2: 0.0,
        };
        let mut losses = Vec::new();
        for epochs in 0..=10 {
            let hyper = MlpHyper { epochs, ..base.clone() };
            let model = train_mlp(&x, &y, &hyper, 5).unwrap();
            losses.push(loss(&model, &x, &y));
        }
        for pair in losses.windows(2) {
            assert!(pair[1] <= pair[0], "loss increased: {losses:?}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences_on_small_net() {
        let x = FeatureMatrix::from_dense_rows(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.2, -0.4, 0.9, 0.1, 0.5],
                vec![-0.3, 0.8, 0.0, 0.7, -0.2],
                vec![0.6, 0.1, -0.5, 0.3, 0.4],
            ],
            5,
        );
        let y = LabelMatrix::from_rows(
            vec![SmellClass::Superlatives, SmellClass::Comparatives],
            vec![vec![true, false], vec![false, true], vec![true, true]],
        )
        .unwrap();
        let hyper = MlpHyper {
            hidden: 4,
            l2: 0.01,
            ..MlpHyper::default()
        };
        let model = MlpModel::init(5, y.classes().to_vec(), hyper, 21);
        let max_err = max_relative_gradient_error(&model, &x, &y);
        assert!(max_err < 1e-4, "max relative error {max_err}");
    }

    /// Central finite differences against the analytic gradient; shared
    /// with the acceptance suite.
    pub fn max_relative_gradient_error(
        model: &MlpModel,
        x: &FeatureMatrix,
        y: &LabelMatrix,
    ) -> f64 {
        const STEP: f64 = 1e-5;
        let analytic = full_gradient(model, x, y);
        let mut max_err: f64 = 0.0;
        let params: Vec<(usize, usize)> = [
            (0, model.w1.len()),
            (1, model.b1.len()),
            (2, model.w2.len()),
            (3, model.b2.len()),
        ]
        .iter()
        .flat_map(|&(field, len)| (0..len).map(move |i| (field, i)))
        .collect();
        for (field, i) in params {
            let mut plus = model.clone();
            let mut minus = model.clone();
            {
                let (p, m) = match field {
                    0 => (&mut plus.w1, &mut minus.w1),
                    1 => (&mut plus.b1, &mut minus.b1),
                    2 => (&mut plus.w2, &mut minus.w2),
                    _ => (&mut plus.b2, &mut minus.b2),
                };
                p[i] += STEP;
                m[i] -= STEP;
            }
            let numeric = (loss(&plus, x, y) - loss(&minus, x, y)) / (2.0 * STEP);
            let a = match field {
                0 => analytic.w1[i],
                1 => analytic.b1[i],
                2 => analytic.w2[i],
                _ => analytic.b2[i],
            };
            let err = (numeric - a).abs() / (numeric.abs() + a.abs()).max(1e-8);
            max_err = max_err.max(err);
        }
        max_err
    }
}
