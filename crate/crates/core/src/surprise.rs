//! Surprise exploration bonus.
//!
//! A diagonal-Gaussian dynamics model predicts the observation change from
//! `(state, action)`; the bonus for a realized transition is its negative
//! log-likelihood under the model. The model never predicts resources: they
//! are an input only.
//!
//! Emitted bonus = `max(0, raw - running min of raw)`, and zero during warmup.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::mdp::{R3LState, Transition};
use crate::nn::{AdamState, Batch, Mlp};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub struct SurpriseConfig {
    pub batch_size: usize,
    /// Environment steps between model updates.
    pub update_interval: usize,
    /// Steps during which the emitted bonus is zero.
    pub warmup_steps: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub buffer_capacity: usize,
}

impl Default for SurpriseConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            update_interval: 1,
            warmup_steps: 1000,
            hidden: 32,
            learning_rate: 3e-4,
            buffer_capacity: 1_000_000,
        }
    }
}

impl SurpriseConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.batch_size == 0 {
            bad.push(("surprise.batch_size".to_string(), "must be >= 1".to_string()));
        }
        if self.update_interval == 0 {
            bad.push(("surprise.update_interval".into(), "must be >= 1".into()));
        }
        if self.hidden == 0 {
            bad.push(("surprise.hidden".into(), "must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            bad.push(("surprise.learning_rate".into(), "must be > 0".into()));
        }
        if self.buffer_capacity < self.batch_size {
            bad.push(("surprise.buffer_capacity".into(), "must be >= batch size".into()));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys: bad })
        }
    }
}

/// FIFO ring buffer of transitions, stored as flat rows
/// `[state (obs + resources), action, next observation]`.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    observation_dim: usize,
    action_dim: usize,
    rows: Vec<f64>,
    next: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, observation_dim: usize, resource_dim: usize, action_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            state_dim: observation_dim + resource_dim,
            observation_dim,
            action_dim,
            rows: Vec::new(),
            next: 0,
            len: 0,
        }
    }

    fn width(&self) -> usize {
        self.state_dim + self.action_dim + self.observation_dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition) {
        let w = self.width();
        let mut row = t.state.to_vec();
        row.extend_from_slice(&t.action);
        row.extend_from_slice(&t.next_state.observation);
        assert_eq!(row.len(), w, "transition shape does not match buffer");
        if self.rows.len() < self.capacity * w {
            self.rows.extend_from_slice(&row);
        } else {
            self.rows[self.next * w..(self.next + 1) * w].copy_from_slice(&row);
        }
        self.next = (self.next + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// `(state, action, next_observation)` of the stored row at `i`
    /// (insertion order modulo eviction).
    pub fn row(&self, i: usize) -> (&[f64], &[f64], &[f64]) {
        let w = self.width();
        let r = &self.rows[i * w..(i + 1) * w];
        let (s, rest) = r.split_at(self.state_dim);
        let (a, o) = rest.split_at(self.action_dim);
        (s, a, o)
    }

    /// Indices of a minibatch drawn without replacement, in ascending order.
    pub fn sample_indices(&self, batch_size: usize, rng: &mut RandomStream) -> Vec<usize> {
        if batch_size >= self.len {
            return (0..self.len).collect();
        }
        let mut idx = index::sample(rng, self.len, batch_size).into_vec();
        idx.sort_unstable();
        idx
    }
}

/// Affine map of raw values from `[low, high]` onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputScaling {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl InputScaling {
    pub fn identity(dim: usize) -> Self {
        Self {
            low: vec![-1.0; dim],
            high: vec![1.0; dim],
        }
    }

    pub fn apply(&self, raw: &[f64], out: &mut Vec<f64>) {
        out.extend(raw.iter().zip(&self.low).zip(&self.high).map(|((x, lo), hi)| {
            let span = hi - lo;
            if span > 0.0 {
                2.0 * (x - lo) / span - 1.0
            } else {
                *x
            }
        }));
    }
}

/// Running per-dimension mean and standard deviation (Welford).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-6;

impl RunningStats {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn observe(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self, i: usize) -> f64 {
        if self.count < 2 {
            1.0
        } else {
            (self.m2[i] / self.count as f64).sqrt().max(STD_FLOOR)
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| (v - self.mean[i]) / self.std(i)).collect()
    }
}

/// Learned dynamics model `p_phi(s' | s, a)` over observation deltas.
#[derive(Debug, Clone)]
pub struct DynamicsModel {
    pub net: Mlp,
    pub adam: AdamState,
    state_scaling: InputScaling,
    action_scaling: InputScaling,
    targets: RunningStats,
}

impl DynamicsModel {
    pub fn new(
        state_scaling: InputScaling,
        action_scaling: InputScaling,
        observation_dim: usize,
        config: &SurpriseConfig,
        rng: &mut RandomStream,
    ) -> Self {
        let input = state_scaling.low.len() + action_scaling.low.len();
        let net = Mlp::init(input, config.hidden, observation_dim, rng);
        let adam = AdamState::with_learning_rate(net.params().len(), config.learning_rate);
        Self {
            net,
            adam,
            state_scaling,
            action_scaling,
            targets: RunningStats::new(observation_dim),
        }
    }

    pub fn target_stats(&self) -> &RunningStats {
        &self.targets
    }

    pub fn features(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        let mut f = Vec::with_capacity(state.len() + action.len());
        self.state_scaling.apply(state, &mut f);
        self.action_scaling.apply(action, &mut f);
        f
    }

    fn delta(state: &[f64], next_observation: &[f64]) -> Vec<f64> {
        next_observation.iter().zip(state).map(|(n, s)| n - s).collect()
    }

    pub fn target(&self, state: &[f64], next_observation: &[f64]) -> Vec<f64> {
        self.targets.normalize(&Self::delta(state, next_observation))
    }

    /// Record the observation change of a new transition in the target statistics.
    pub fn observe(&mut self, t: &Transition) {
        self.targets.observe(&Self::delta(&t.state.observation, &t.next_state.observation));
    }

    /// Raw surprise `-log p_phi(s'|s,a)` of a realized transition.
    pub fn raw_bonus(&self, s: &R3LState, a: &[f64], next: &R3LState) -> Result<f64> {
        let pred = self.net.forward(&self.features(&s.to_vec(), a))?;
        Ok(pred.nll(&self.target(&s.observation, &next.observation)))
    }

    pub fn batch(&self, buffer: &ReplayBuffer, indices: &[usize]) -> Batch {
        let mut batch = Batch::new(self.net.input_dim(), self.net.target_dim());
        for &i in indices {
            let (s, a, o) = buffer.row(i);
            batch.push(&self.features(s, a), &self.target(s, o));
        }
        batch
    }

    /// One Adam step on the mean NLL of `batch`; returns the pre-step loss.
    pub fn train_on(&mut self, batch: &Batch) -> Result<f64> {
        let (loss, grad) = self.net.backward(batch)?;
        self.adam.apply(self.net.params_mut(), &grad);
        Ok(loss)
    }
}

/// Model-based surprise with warmup and running-minimum normalization.
#[derive(Debug, Clone)]
pub struct Surprise {
    pub config: SurpriseConfig,
    pub model: DynamicsModel,
    running_min: Option<f64>,
    steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BonusSample {
    pub raw: f64,
    pub emitted: f64,
}

impl Surprise {
    pub fn new(config: SurpriseConfig, model: DynamicsModel) -> Self {
        Self {
            config,
            model,
            running_min: None,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn running_min(&self) -> Option<f64> {
        self.running_min
    }

    pub fn in_warmup(&self) -> bool {
        self.steps < self.config.warmup_steps as u64
    }

    /// Bonus for one environment step; advances the step counter and the
    /// running minimum. Uses the model as it is before this step's update.
    pub fn bonus(&mut self, s: &R3LState, a: &[f64], next: &R3LState) -> Result<BonusSample> {
        let raw = self.model.raw_bonus(s, a, next)?;
        let warm = self.in_warmup();
        self.steps += 1;
        if warm {
            return Ok(BonusSample { raw, emitted: 0.0 });
        }
        let min = self.running_min.map_or(raw, |m| m.min(raw));
        self.running_min = Some(min);
        Ok(BonusSample {
            raw,
            emitted: (raw - min).max(0.0),
        })
    }

    /// One Adam step on a minibatch drawn from `buffer`. Returns `None`
    /// (and does nothing) while the buffer holds fewer than a batch.
    pub fn update_model(&mut self, buffer: &ReplayBuffer, rng: &mut RandomStream) -> Result<Option<f64>> {
        if buffer.len() < self.config.batch_size {
            log::debug!(
                "skipping model update: buffer holds {} < batch {}",
                buffer.len(),
                self.config.batch_size
            );
            return Ok(None);
        }
        let idx = buffer.sample_indices(self.config.batch_size, rng);
        let batch = self.model.batch(buffer, &idx);
        self.model.train_on(&batch).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ResourceVector;
    use crate::nn::gaussian_nll;
    use crate::rng::seeded_rng;

    fn st(obs: &[f64], res: f64) -> R3LState {
        R3LState::new(obs.to_vec(), ResourceVector::new(vec![res]).unwrap())
    }

    fn tr(obs: &[f64], a: f64, next: &[f64]) -> Transition {
        Transition {
            state: st(obs, 1.0),
            action: vec![a],
            reward: 0.0,
            next_state: st(next, 1.0),
            terminal: false,
            truncated: false,
        }
    }

    fn model(cfg: &SurpriseConfig, seed: u64) -> DynamicsModel {
        DynamicsModel::new(InputScaling::identity(2), InputScaling::identity(1), 1, cfg, &mut seeded_rng(seed))
    }

    #[test]
    fn ring_buffer_evicts_oldest() {
        let mut buf = ReplayBuffer::new(3, 1, 1, 1);
        for i in 0..5 {
            buf.push(&tr(&[i as f64], 0.0, &[0.0]));
        }
        assert_eq!(buf.len(), 3);
        let firsts: Vec<f64> = (0..3).map(|i| buf.row(i).0[0]).collect();
        assert_eq!(firsts, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn sampling_whole_buffer_is_identity() {
        let mut buf = ReplayBuffer::new(10, 1, 1, 1);
        for i in 0..6 {
            buf.push(&tr(&[i as f64], 0.0, &[0.0]));
        }
        assert_eq!(buf.sample_indices(6, &mut seeded_rng(0)), (0..6).collect::<Vec<_>>());
        let idx = buf.sample_indices(4, &mut seeded_rng(0));
        assert_eq!(idx.len(), 4);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn raw_bonus_matches_direct_nll() {
        let cfg = SurpriseConfig::default();
        let m = model(&cfg, 3);
        let (s, a, n) = (st(&[0.3], 1.0), [0.5], st(&[0.7], 1.0));
        let pred = m.net.forward(&[0.3, 1.0, 0.5]).unwrap();
        let ls: Vec<f64> = pred.log_std.iter().map(|v| v.clamp(-5.0, 2.0)).collect();
        let direct = gaussian_nll(&pred.mean, &ls, &[0.7 - 0.3]);
        assert!((m.raw_bonus(&s, &a, &n).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn ten_sigma_transition() {
        assert!((gaussian_nll(&[0.0], &[0.0], &[10.0]) - 50.918_938_533_204_67).abs() < 1e-9);
    }

    #[test]
    fn bonus_is_pure_given_state() {
        let m = model(&SurpriseConfig::default(), 1);
        let (s, n) = (st(&[0.1], 1.0), st(&[0.2], 1.0));
        assert_eq!(m.raw_bonus(&s, &[1.0], &n).unwrap(), m.raw_bonus(&s, &[1.0], &n).unwrap());
    }

    #[test]
    fn warmup_then_nonnegative() {
        let cfg = SurpriseConfig {
            warmup_steps: 2,
            ..Default::default()
        };
        let mut sp = Surprise::new(cfg.clone(), model(&cfg, 2));
        let mut rng = seeded_rng(4);
        use rand::Rng;
        for k in 0..50 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let b = sp.bonus(&st(&[x], 1.0), &[0.0], &st(&[x + rng.gen_range(-1.0..1.0)], 1.0)).unwrap();
            if k < 2 {
                assert_eq!(b.emitted, 0.0);
            }
            assert!(b.emitted >= 0.0);
        }
    }

    #[test]
    fn small_buffer_skips_update() {
        let cfg = SurpriseConfig::default();
        let mut sp = Surprise::new(cfg.clone(), model(&cfg, 2));
        let mut buf = ReplayBuffer::new(1000, 1, 1, 1);
        buf.push(&tr(&[0.0], 0.0, &[0.1]));
        let before = sp.model.net.clone();
        assert_eq!(sp.update_model(&buf, &mut seeded_rng(0)).unwrap(), None);
        assert_eq!(sp.model.net, before);
    }

    #[test]
    fn training_on_repeated_transition_reduces_nll() {
        let cfg = SurpriseConfig {
            batch_size: 8,
            ..Default::default()
        };
        let mut sp = Surprise::new(cfg.clone(), model(&cfg, 5));
        let mut buf = ReplayBuffer::new(100, 1, 1, 1);
        let t = tr(&[0.2], 0.5, &[0.25]);
        for _ in 0..16 {
            buf.push(&t);
            sp.model.observe(&t);
        }
        let before = sp.model.raw_bonus(&t.state, &t.action, &t.next_state).unwrap();
        let mut rng = seeded_rng(6);
        for _ in 0..500 {
            sp.update_model(&buf, &mut rng).unwrap();
        }
        let after = sp.model.raw_bonus(&t.state, &t.action, &t.next_state).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn full_batch_update_equals_gradient_step() {
        let cfg = SurpriseConfig {
            batch_size: 5,
            ..Default::default()
        };
        let mut sp = Surprise::new(cfg.clone(), model(&cfg, 9));
        let mut buf = ReplayBuffer::new(5, 1, 1, 1);
        for i in 0..5 {
            let t = tr(&[i as f64 * 0.1], 0.3, &[i as f64 * 0.15]);
            buf.push(&t);
            sp.model.observe(&t);
        }
        let mut manual = sp.model.clone();
        let all: Vec<usize> = (0..5).collect();
        let batch = manual.batch(&buf, &all);
        manual.train_on(&batch).unwrap();
        sp.update_model(&buf, &mut seeded_rng(1)).unwrap();
        assert_eq!(sp.model.net, manual.net);
    }

    #[test]
    fn identical_seeds_train_identically() {
        let run = || {
            let cfg = SurpriseConfig {
                batch_size: 4,
                ..Default::default()
            };
            let mut sp = Surprise::new(cfg.clone(), model(&cfg, 11));
            let mut buf = ReplayBuffer::new(50, 1, 1, 1);
            for i in 0..20 {
                let t = tr(&[(i as f64).sin()], (i as f64).cos(), &[(i as f64 * 1.3).sin()]);
                buf.push(&t);
                sp.model.observe(&t);
            }
            let mut rng = seeded_rng(12);
            for _ in 0..30 {
                sp.update_model(&buf, &mut rng).unwrap();
            }
            sp.model.net
        };
        assert_eq!(run(), run());
    }
}
