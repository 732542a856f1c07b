use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{argmax, epsilon_greedy, AgentError, Hyperparams};
use crate::nn::{copy_params, AdamConfig, AdamState, Mlp};
use crate::replay::{ReplayBuffer, Transition};

/// Double DQN: the online network picks the bootstrap action, the target
/// network evaluates it. Targets are refreshed by hard copy every
/// `target_update_interval` gradient updates.
#[derive(Debug, Clone)]
pub struct DdqnAgent {
    online: Mlp,
    target: Mlp,
    optimizer: AdamState,
    pub gamma: f64,
    pub epsilon: f64,
    pub target_update_interval: u64,
    pub batch_size: usize,
    update_counter: u64,
    n_actions: usize,
}

pub(crate) fn stack_rows<'a, I>(rows: I, width: usize) -> Array2<f64>
where
    I: ExactSizeIterator<Item = &'a [f64]>,
{
    let n = rows.len();
    let mut data = Vec::with_capacity(n * width);
    for r in rows {
        data.extend_from_slice(r);
    }
    Array2::from_shape_vec((n, width), data).expect("rows share one width")
}

/// `y = r` for terminated transitions, otherwise
/// `y = r + gamma * Q_target(s', argmax_a Q_online(s', a))`.
pub fn ddqn_td_targets(
    batch: &[&Transition],
    online: &Mlp,
    target: &Mlp,
    gamma: f64,
) -> Result<Vec<f64>, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let width = online.input_size();
    if batch.iter().any(|t| t.next_obs.dim() != width) {
        return Err(
            crate::nn::NnError::Shape("next_obs width differs from network input".into()).into(),
        );
    }
    let next = stack_rows(batch.iter().map(|t| t.next_obs.values.as_slice()), width);
    let q_online = online.predict_batch(next.view())?;
    let q_target = target.predict_batch(next.view())?;
    Ok(batch
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if t.terminated {
                t.reward
            } else {
                let row: Vec<f64> = q_online.row(i).to_vec();
                let best = argmax(&row);
                t.reward + gamma * q_target[[i, best]]
            }
        })
        .collect())
}

impl DdqnAgent {
    pub fn new(
        obs_dim: usize,
        n_actions: usize,
        hp: &Hyperparams,
        seed: u64,
    ) -> Result<Self, AgentError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![obs_dim];
        sizes.extend(&hp.hidden);
        sizes.push(n_actions);
        let online = Mlp::new(&sizes, &mut rng)?;
        let target = online.clone();
        let optimizer = AdamState::new(&online, AdamConfig::with_learning_rate(hp.learning_rate));
        Ok(DdqnAgent {
            online,
            target,
            optimizer,
            gamma: hp.gamma,
            epsilon: hp.epsilon,
            target_update_interval: hp.target_update_interval,
            batch_size: hp.batch_size,
            update_counter: 0,
            n_actions,
        })
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn online_mut(&mut self) -> &mut Mlp {
        &mut self.online
    }

    pub fn target_mut(&mut self) -> &mut Mlp {
        &mut self.target
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn update_count(&self) -> u64 {
        self.update_counter
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.optimizer.config.learning_rate = lr;
    }

    pub(super) fn replace_networks(&mut self, online: Mlp, target: Mlp) -> Result<(), AgentError> {
        self.online.check_same_shape(&online)?;
        self.target.check_same_shape(&target)?;
        self.online = online;
        self.target = target;
        Ok(())
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>, AgentError> {
        Ok(self.online.forward(obs)?)
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        rng: &mut R,
        explore: bool,
    ) -> Result<usize, AgentError> {
        let q = self.q_values(obs)?;
        let eps = if explore { self.epsilon } else { 0.0 };
        Ok(epsilon_greedy(&q, eps, rng))
    }

    /// Sample `batch_size` transitions and take one gradient step.
    pub fn update(&mut self, buf: &mut ReplayBuffer) -> Result<f64, AgentError> {
        let batch = buf.sample(self.batch_size)?;
        self.train_on_batch(&batch)
    }

    /// One Adam step on the mean squared TD error of `batch`. Returns the
    /// loss before the step.
    pub fn train_on_batch(&mut self, batch: &[&Transition]) -> Result<f64, AgentError> {
        let targets = ddqn_td_targets(batch, &self.online, &self.target, self.gamma)?;
        let width = self.online.input_size();
        if batch.iter().any(|t| t.obs.dim() != width) {
            return Err(
                crate::nn::NnError::Shape("obs width differs from network input".into()).into(),
            );
        }
        let obs = stack_rows(batch.iter().map(|t| t.obs.values.as_slice()), width);
        let cache = self.online.forward_batch(obs.view())?;
        let q = cache.output();
        let n = batch.len() as f64;
        let mut grad = Array2::zeros(q.dim());
        let mut loss = 0.0;
        for (i, t) in batch.iter().enumerate() {
            let a = match t.action.as_discrete() {
                Some(a) if a < self.n_actions => a,
                _ => return Err(AgentError::BadAction(t.action.to_string())),
            };
            let err = q[[i, a]] - targets[i];
            loss += err * err;
            grad[[i, a]] = 2.0 * err / n;
        }
        let grads = self.online.backward(&cache, grad.view())?;
        self.optimizer.step(&mut self.online, &grads)?;
        self.update_counter += 1;
        if self.update_counter % self.target_update_interval == 0 {
            copy_params(&self.online, &mut self.target)?;
        }
        Ok(loss / n)
    }
}
