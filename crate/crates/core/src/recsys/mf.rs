//! Biased matrix factorization trained with SGD.
//!
//! Prediction is `μ + b_u + b_i + p_u · q_i`. Training minimizes the
//! regularized squared error
//!
//! ```text
//! L = Σ_(u,i) [ (r_ui − r̂_ui)² + λ (b_u² + b_i² + ‖p_u‖² + ‖q_i‖²) ]
//! ```
//!
//! with the regularization term counted once per observed rating, which is
//! exactly the objective the per-sample SGD updates descend.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::RatingDataset;
use crate::recsys::ModelConfig;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct MfModel {
    pub global_mean: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    /// Row-major `n_users × factors`.
    pub user_factors: Vec<f64>,
    /// Row-major `n_items × factors`.
    pub item_factors: Vec<f64>,
    pub factors: usize,
    /// Full objective after each epoch.
    pub epoch_loss: Vec<f64>,
}

impl MfModel {
    pub fn predict(&self, user: u32, item: u32) -> f64 {
        let f = self.factors;
        let pu = &self.user_factors[user as usize * f..(user as usize + 1) * f];
        let qi = &self.item_factors[item as usize * f..(item as usize + 1) * f];
        self.global_mean
            + self.user_bias[user as usize]
            + self.item_bias[item as usize]
            + dot(pu, qi)
    }

    fn is_finite(&self) -> bool {
        self.user_bias.iter().all(|v| v.is_finite())
            && self.item_bias.iter().all(|v| v.is_finite())
            && self.user_factors.iter().all(|v| v.is_finite())
            && self.item_factors.iter().all(|v| v.is_finite())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn fit(train: &RatingDataset, config: &ModelConfig) -> Result<MfModel> {
    let f = config.factors;
    let lr = config.learning_rate;
    let reg = config.regularization;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init = |n: usize| -> Vec<f64> {
        (0..n).map(|_| (rng.gen::<f64>() - 0.5) * 0.2).collect()
    };
    let mut model = MfModel {
        global_mean: train.global_mean(),
        user_bias: vec![0.0; train.n_users()],
        item_bias: vec![0.0; train.n_items()],
        user_factors: init(train.n_users() * f),
        item_factors: init(train.n_items() * f),
        factors: f,
        epoch_loss: Vec::with_capacity(config.epochs),
    };

    let mut order: Vec<usize> = (0..train.n_ratings()).collect();
    for epoch in 0..config.epochs {
        // Fisher–Yates with the same seeded stream each run
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        for &idx in &order {
            let r = train.ratings()[idx];
            let (u, i) = (r.user as usize, r.item as usize);
            let err = r.value - model.predict(r.user, r.item);

            let bu = model.user_bias[u];
            let bi = model.item_bias[i];
            model.user_bias[u] = bu + lr * (err - reg * bu);
            model.item_bias[i] = bi + lr * (err - reg * bi);

            for k in 0..f {
                let pu = model.user_factors[u * f + k];
                let qi = model.item_factors[i * f + k];
                model.user_factors[u * f + k] = pu + lr * (err * qi - reg * pu);
                model.item_factors[i * f + k] = qi + lr * (err * pu - reg * qi);
            }
        }
        let epoch_loss = loss(&model, train, reg);
        if !epoch_loss.is_finite() || !model.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch: epoch + 1,
                factors: f,
                learning_rate: lr,
                regularization: reg,
            });
        }
        model.epoch_loss.push(epoch_loss);
    }
    Ok(model)
}

/// The training objective at the given parameters.
pub fn loss(model: &MfModel, train: &RatingDataset, reg: f64) -> f64 {
    let f = model.factors;
    let mut total = 0.0;
    for r in train.ratings() {
        let (u, i) = (r.user as usize, r.item as usize);
        let err = r.value - model.predict(r.user, r.item);
        let pu = &model.user_factors[u * f..(u + 1) * f];
        let qi = &model.item_factors[i * f..(i + 1) * f];
        total += err * err
            + reg
                * (model.user_bias[u] * model.user_bias[u]
                    + model.item_bias[i] * model.item_bias[i]
                    + dot(pu, pu)
                    + dot(qi, qi));
    }
    total
}

/// Analytic gradient of [`loss`] with respect to every learned parameter.
#[derive(Debug, Clone)]
pub struct MfGradient {
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
}

pub fn gradient(model: &MfModel, train: &RatingDataset, reg: f64) -> MfGradient {
    let f = model.factors;
    let mut g = MfGradient {
        user_bias: vec![0.0; model.user_bias.len()],
        item_bias: vec![0.0; model.item_bias.len()],
        user_factors: vec![0.0; model.user_factors.len()],
        item_factors: vec![0.0; model.item_factors.len()],
    };
    for r in train.ratings() {
        let (u, i) = (r.user as usize, r.item as usize);
        let err = r.value - model.predict(r.user, r.item);
        g.user_bias[u] += -2.0 * err + 2.0 * reg * model.user_bias[u];
        g.item_bias[i] += -2.0 * err + 2.0 * reg * model.item_bias[i];
        for k in 0..f {
            let pu = model.user_factors[u * f + k];
            let qi = model.item_factors[i * f + k];
            g.user_factors[u * f + k] += -2.0 * err * qi + 2.0 * reg * pu;
            g.item_factors[i * f + k] += -2.0 * err * pu + 2.0 * reg * qi;
        }
    }
    g
}

/// Root mean squared prediction error over a dataset.
pub fn rmse(model: &MfModel, data: &RatingDataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let sse: f64 = data
        .ratings()
        .iter()
        .map(|r| {
            let e = r.value - model.predict(r.user, r.item);
            e * e
        })
        .sum();
    (sse / data.n_ratings() as f64).sqrt()
}
