use std::f64::consts::{LN_2, PI};

use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ddqn::stack_rows;
use super::{AgentError, Hyperparams};
use crate::nn::{AdamConfig, AdamState, Mlp, NnError, ScalarAdam};
use crate::replay::{ReplayBuffer, Transition};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// `tanh` rounds to exactly 1 for |u| > ~19; keep actions strictly inside
/// the bound.
const TANH_LIMIT: f64 = 1.0 - f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SacLosses {
    pub q_loss: f64,
    pub policy_loss: f64,
    pub alpha_loss: f64,
}

/// Soft actor-critic with a tanh-squashed Gaussian policy, twin critics,
/// Polyak-averaged target critics and automatic temperature tuning.
///
/// Critics see the observation concatenated with the action divided by
/// `max_action`, so their action input lies in `(-1, 1)`.
#[derive(Debug, Clone)]
pub struct SacAgent {
    policy: Mlp,
    q1: Mlp,
    q2: Mlp,
    q1_target: Mlp,
    q2_target: Mlp,
    policy_opt: AdamState,
    q1_opt: AdamState,
    q2_opt: AdamState,
    log_alpha: f64,
    alpha_opt: ScalarAdam,
    pub gamma: f64,
    pub target_entropy: f64,
    pub soft_update_tau: f64,
    pub batch_size: usize,
    /// When false the temperature stays fixed.
    pub learn_alpha: bool,
    obs_dim: usize,
    action_dim: usize,
    max_action: f64,
    update_counter: u64,
    rng: ChaCha8Rng,
}

/// `ln(1 - tanh(u)^2)` without cancellation for large `|u|`.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// One squashed draw: `tanh(u)` per dimension and the log-density of the
/// scaled action.
struct Squashed {
    tanh_u: Vec<f64>,
    log_prob: f64,
}

impl SacAgent {
    pub fn new(
        obs_dim: usize,
        action_dim: usize,
        max_action: f64,
        hp: &Hyperparams,
        seed: u64,
    ) -> Result<Self, AgentError> {
        if !(max_action > 0.0) {
            return Err(AgentError::InvalidHyperparameter(
                "max_action must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = |input: usize, output: usize| {
            let mut v = vec![input];
            v.extend(&hp.hidden);
            v.push(output);
            v
        };
        let policy = Mlp::new(&sizes(obs_dim, 2 * action_dim), &mut rng)?;
        let q1 = Mlp::new(&sizes(obs_dim + action_dim, 1), &mut rng)?;
        let q2 = Mlp::new(&sizes(obs_dim + action_dim, 1), &mut rng)?;
        let adam = AdamConfig::with_learning_rate(hp.learning_rate);
        Ok(SacAgent {
            policy_opt: AdamState::new(&policy, adam),
            q1_opt: AdamState::new(&q1, adam),
            q2_opt: AdamState::new(&q2, adam),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            policy,
            q1,
            q2,
            log_alpha: hp.initial_temperature.ln(),
            alpha_opt: ScalarAdam::new(adam),
            gamma: hp.gamma,
            target_entropy: -(action_dim as f64),
            soft_update_tau: hp.soft_update_tau,
            batch_size: hp.batch_size,
            learn_alpha: true,
            obs_dim,
            action_dim,
            max_action,
            update_counter: 0,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5ac5_ac5a),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        self.log_alpha = alpha.ln();
    }

    pub fn max_action(&self) -> f64 {
        self.max_action
    }

    pub fn update_count(&self) -> u64 {
        self.update_counter
    }

    pub fn policy(&self) -> &Mlp {
        &self.policy
    }

    pub fn policy_mut(&mut self) -> &mut Mlp {
        &mut self.policy
    }

    pub fn critics_mut(&mut self) -> [&mut Mlp; 4] {
        [
            &mut self.q1,
            &mut self.q2,
            &mut self.q1_target,
            &mut self.q2_target,
        ]
    }

    /// Networks by role, in snapshot order.
    pub fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![
            ("policy", &self.policy),
            ("q1", &self.q1),
            ("q2", &self.q2),
            ("q1_target", &self.q1_target),
            ("q2_target", &self.q2_target),
        ]
    }

    pub(super) fn replace_networks(&mut self, mut nets: Vec<Mlp>) -> Result<(), AgentError> {
        if nets.len() != 5 {
            return Err(NnError::BadSnapshot("SAC needs five networks".into()).into());
        }
        for ((_, current), new) in self.networks().into_iter().zip(&nets) {
            current.check_same_shape(new)?;
        }
        self.q2_target = nets.pop().unwrap();
        self.q1_target = nets.pop().unwrap();
        self.q2 = nets.pop().unwrap();
        self.q1 = nets.pop().unwrap();
        self.policy = nets.pop().unwrap();
        Ok(())
    }

    /// Mean and clamped log-std of the pre-squash Gaussian.
    pub fn distribution(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>), AgentError> {
        let out = self.policy.forward(obs)?;
        let mean = out[..self.action_dim].to_vec();
        let log_std = out[self.action_dim..]
            .iter()
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        Ok((mean, log_std))
    }

    fn squash(&self, mean: &[f64], log_std: &[f64], noise: &[f64]) -> Squashed {
        let mut tanh_u = Vec::with_capacity(mean.len());
        let mut log_prob = 0.0;
        for j in 0..mean.len() {
            let std = log_std[j].exp();
            let u = mean[j] + std * noise[j];
            tanh_u.push(u.tanh().clamp(-TANH_LIMIT, TANH_LIMIT));
            log_prob += -0.5 * noise[j] * noise[j]
                - log_std[j]
                - 0.5 * (2.0 * PI).ln()
                - self.max_action.ln()
                - log_one_minus_tanh_sq(u);
        }
        Squashed { tanh_u, log_prob }
    }

    /// `action = max_action * tanh(u)` with `u ~ N(mean, std)`, or `u = mean`
    /// when `deterministic`. The log-density is that of the squashed action.
    pub fn sample_action<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        rng: &mut R,
        deterministic: bool,
    ) -> Result<(Vec<f64>, f64), AgentError> {
        let (mean, log_std) = self.distribution(obs)?;
        let noise: Vec<f64> = if deterministic {
            vec![0.0; self.action_dim]
        } else {
            (0..self.action_dim)
                .map(|_| rng.sample(StandardNormal))
                .collect()
        };
        let sq = self.squash(&mean, &log_std, &noise);
        let action = sq.tanh_u.iter().map(|t| self.max_action * t).collect();
        Ok((action, sq.log_prob))
    }

    /// Log-density of `action` under the current policy at `obs`.
    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64, AgentError> {
        let (mean, log_std) = self.distribution(obs)?;
        let mut noise = Vec::with_capacity(self.action_dim);
        for j in 0..self.action_dim {
            let t = action[j] / self.max_action;
            if !(t > -1.0 && t < 1.0) {
                return Ok(f64::NEG_INFINITY);
            }
            noise.push((t.atanh() - mean[j]) / log_std[j].exp());
        }
        Ok(self.squash(&mean, &log_std, &noise).log_prob)
    }

    fn critic_input(&self, obs: &[f64], scaled_action: &[f64], row: &mut Vec<f64>) {
        row.extend_from_slice(obs);
        row.extend_from_slice(scaled_action);
    }

    /// Critic targets `r + gamma * (min(q1', q2')(s', a') - alpha * log pi(a'|s'))`
    /// with `a'` freshly sampled; terminated transitions do not bootstrap.
    pub fn critic_targets(&mut self, batch: &[&Transition]) -> Result<Vec<f64>, AgentError> {
        let n = batch.len();
        let next = stack_rows(
            batch.iter().map(|t| t.next_obs.values.as_slice()),
            self.obs_dim,
        );
        let pol = self.policy.predict_batch(next.view())?;
        let mut inputs = Vec::with_capacity(n * (self.obs_dim + self.action_dim));
        let mut log_probs = Vec::with_capacity(n);
        for (i, t) in batch.iter().enumerate() {
            let row = pol.row(i);
            let mean = &row.as_slice().unwrap()[..self.action_dim];
            let log_std: Vec<f64> = row.as_slice().unwrap()[self.action_dim..]
                .iter()
                .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
                .collect();
            let noise: Vec<f64> = (0..self.action_dim)
                .map(|_| self.rng.sample(StandardNormal))
                .collect();
            let sq = self.squash(mean, &log_std, &noise);
            self.critic_input(&t.next_obs.values, &sq.tanh_u, &mut inputs);
            log_probs.push(sq.log_prob);
        }
        let x = Array2::from_shape_vec((n, self.obs_dim + self.action_dim), inputs)
            .map_err(|e| NnError::Shape(e.to_string()))?;
        let q1 = self.q1_target.predict_batch(x.view())?;
        let q2 = self.q2_target.predict_batch(x.view())?;
        let alpha = self.alpha();
        Ok(batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if t.terminated {
                    t.reward
                } else {
                    let soft_v = q1[[i, 0]].min(q2[[i, 0]]) - alpha * log_probs[i];
                    t.reward + self.gamma * soft_v
                }
            })
            .collect())
    }

    pub fn update(&mut self, buf: &mut ReplayBuffer) -> Result<SacLosses, AgentError> {
        let batch = buf.sample(self.batch_size)?;
        self.train_on_batch(&batch)
    }

    pub fn train_on_batch(&mut self, batch: &[&Transition]) -> Result<SacLosses, AgentError> {
        if batch.is_empty() {
            return Err(AgentError::EmptyBatch);
        }
        if batch
            .iter()
            .any(|t| t.obs.dim() != self.obs_dim || t.next_obs.dim() != self.obs_dim)
        {
            return Err(NnError::Shape("observation width differs from agent".into()).into());
        }
        let n = batch.len();
        let nf = n as f64;
        let in_dim = self.obs_dim + self.action_dim;

        // Critics.
        let targets = self.critic_targets(batch)?;
        let mut inputs = Vec::with_capacity(n * in_dim);
        for t in batch {
            let a = match t.action.as_continuous() {
                Some(a) if a.len() == self.action_dim => a,
                _ => return Err(AgentError::BadAction(t.action.to_string())),
            };
            let scaled: Vec<f64> = a.iter().map(|v| v / self.max_action).collect();
            self.critic_input(&t.obs.values, &scaled, &mut inputs);
        }
        let x = Array2::from_shape_vec((n, in_dim), inputs)
            .map_err(|e| NnError::Shape(e.to_string()))?;
        let mut q_loss = 0.0;
        for (net, opt) in [
            (&mut self.q1, &mut self.q1_opt),
            (&mut self.q2, &mut self.q2_opt),
        ] {
            let cache = net.forward_batch(x.view())?;
            let mut grad = Array2::zeros((n, 1));
            for i in 0..n {
                let err = cache.output()[[i, 0]] - targets[i];
                q_loss += err * err / nf;
                grad[[i, 0]] = 2.0 * err / nf;
            }
            let g = net.backward(&cache, grad.view())?;
            opt.step(net, &g)?;
        }
        q_loss /= 2.0;

        // Policy, through the reparameterized sample.
        let obs = stack_rows(batch.iter().map(|t| t.obs.values.as_slice()), self.obs_dim);
        let pcache = self.policy.forward_batch(obs.view())?;
        let out = pcache.output().clone();
        let ad = self.action_dim;
        let mut noise = Array2::<f64>::zeros((n, ad));
        let mut tanh_u = Array2::<f64>::zeros((n, ad));
        let mut log_probs = Vec::with_capacity(n);
        let mut inputs = Vec::with_capacity(n * in_dim);
        for i in 0..n {
            let row = out.row(i);
            let row = row.as_slice().unwrap();
            let log_std: Vec<f64> = row[ad..]
                .iter()
                .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
                .collect();
            let eps: Vec<f64> = (0..ad).map(|_| self.rng.sample(StandardNormal)).collect();
            let sq = self.squash(&row[..ad], &log_std, &eps);
            for j in 0..ad {
                noise[[i, j]] = eps[j];
                tanh_u[[i, j]] = sq.tanh_u[j];
            }
            self.critic_input(&batch[i].obs.values, &sq.tanh_u, &mut inputs);
            log_probs.push(sq.log_prob);
        }
        let xa = Array2::from_shape_vec((n, in_dim), inputs)
            .map_err(|e| NnError::Shape(e.to_string()))?;
        let c1 = self.q1.forward_batch(xa.view())?;
        let c2 = self.q2.forward_batch(xa.view())?;
        let mut mask1 = Array2::zeros((n, 1));
        let mut mask2 = Array2::zeros((n, 1));
        let mut min_q = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = (c1.output()[[i, 0]], c2.output()[[i, 0]]);
            if a <= b {
                mask1[[i, 0]] = 1.0;
                min_q.push(a);
            } else {
                mask2[[i, 0]] = 1.0;
                min_q.push(b);
            }
        }
        let dq1 = self.q1.backward(&c1, mask1.view())?.input;
        let dq2 = self.q2.backward(&c2, mask2.view())?.input;
        let dq_dt = &dq1.slice(s![.., self.obs_dim..]) + &dq2.slice(s![.., self.obs_dim..]);

        let alpha = self.alpha();
        let mut pgrad = Array2::zeros((n, 2 * ad));
        let mut policy_loss = 0.0;
        for i in 0..n {
            policy_loss += (alpha * log_probs[i] - min_q[i]) / nf;
            for j in 0..ad {
                let t = tanh_u[[i, j]];
                let raw_log_std = out[[i, ad + j]];
                let std = raw_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX).exp();
                let eps = noise[[i, j]];
                let dq_du = dq_dt[[i, j]] * (1.0 - t * t);
                pgrad[[i, j]] = (alpha * 2.0 * t - dq_du) / nf;
                if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw_log_std) {
                    pgrad[[i, ad + j]] =
                        (alpha * (-1.0 + 2.0 * t * std * eps) - dq_du * std * eps) / nf;
                }
            }
        }
        let g = self.policy.backward(&pcache, pgrad.view())?;
        self.policy_opt.step(&mut self.policy, &g)?;

        // Temperature.
        let mean_term = log_probs
            .iter()
            .map(|lp| lp + self.target_entropy)
            .sum::<f64>()
            / nf;
        let alpha_loss = -alpha * mean_term;
        if self.learn_alpha {
            self.alpha_opt
                .update(&mut self.log_alpha, -alpha * mean_term)?;
        }

        self.q1_target
            .soft_update_from(&self.q1, self.soft_update_tau)?;
        self.q2_target
            .soft_update_from(&self.q2, self.soft_update_tau)?;
        self.update_counter += 1;
        Ok(SacLosses {
            q_loss,
            policy_loss,
            alpha_loss,
        })
    }
}
